//! Independent reference computations shared by the integration and
//! acceptance tests. Nothing here calls the closed forms under test.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, Matrix2};
use rand::Rng;

/// `[[0, I], [-I, 0]]` for `m` modes in `{q.., p..}` ordering.
pub fn omega(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = 1.0;
        j[(m + i, i)] = -1.0;
    }
    j
}

fn hermitian_det(v: &DMatrix<f64>) -> f64 {
    let m = v.nrows() / 2;
    let j = omega(m);
    let c = DMatrix::from_fn(v.nrows(), v.ncols(), |a, b| Complex::new(v[(a, b)], 0.5 * j[(a, b)]));
    c.determinant().re
}

/// Uhlmann fidelity of two zero-mean two-mode Gaussian states (vacuum `I/2`).
pub fn two_mode_fidelity(v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> f64 {
    let j = omega(2);
    let delta = (v1 + v2).determinant();
    let gamma = 16.0 * (&j * v1 * &j * v2 - DMatrix::identity(4, 4) * 0.25).determinant();
    let lambda = 16.0 * hermitian_det(v1) * hermitian_det(v2);
    let s = gamma.max(0.0).sqrt() + lambda.max(0.0).sqrt();
    1.0 / (s - (s * s - delta).max(0.0).sqrt())
}

/// Uhlmann fidelity of two zero-mean one-mode Gaussian states.
pub fn one_mode_fidelity(v1: &Matrix2<f64>, v2: &Matrix2<f64>) -> f64 {
    let delta = (v1 + v2).determinant();
    let small = 4.0 * (v1.determinant() - 0.25) * (v2.determinant() - 0.25);
    1.0 / ((delta + small).sqrt() - small.sqrt())
}

/// `cos(phi) I + sin(phi) J_1 G` on mode A of `(q_A, q_B, p_A, p_B)`.
pub fn phase_rotation(g: &Matrix2<f64>, phi: f64) -> DMatrix<f64> {
    let j1 = Matrix2::new(0.0, 1.0, -1.0, 0.0);
    let r = Matrix2::identity() * phi.cos() + j1 * g * phi.sin();
    let mut out = DMatrix::identity(4, 4);
    let idx = [0, 2];
    for a in 0..2 {
        for b in 0..2 {
            out[(idx[a], idx[b])] = r[(a, b)];
        }
    }
    out
}

/// Quantum Fisher information of the phase imprinted by `g`, from the
/// fidelity between the state and its rotated image (Richardson-extrapolated).
pub fn finite_difference_qfi(v: &DMatrix<f64>, g: &Matrix2<f64>) -> f64 {
    let estimate = |h: f64| {
        let r = phase_rotation(g, h);
        let f = two_mode_fidelity(v, &(&r * v * r.transpose()));
        8.0 * (1.0 - f.sqrt()) / (h * h)
    };
    let h = 1e-2;
    (4.0 * estimate(h / 2.0) - estimate(h)) / 3.0
}

/// `R(theta) diag(e^{2s}, e^{-2s}) R(theta)^T`, unit determinant.
pub fn generator(s: f64, theta: f64) -> Matrix2<f64> {
    let (sn, cs) = theta.sin_cos();
    let r = Matrix2::new(cs, -sn, sn, cs);
    r * Matrix2::new((2.0 * s).exp(), 0.0, 0.0, (-2.0 * s).exp()) * r.transpose()
}

/// A quarter of the minimal QFI over unit-determinant generators on mode A:
/// a dense grid followed by local grid refinement around the best point.
pub fn oracle_gip(v: &DMatrix<f64>) -> f64 {
    let qfi = |s: f64, th: f64| finite_difference_qfi(v, &generator(s, th));
    let (ns, nt) = (61, 61);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..ns {
        let s = -1.5 + 3.0 * i as f64 / (ns - 1) as f64;
        for k in 0..nt {
            let th = std::f64::consts::PI * k as f64 / nt as f64;
            let q = qfi(s, th);
            if q < best.0 {
                best = (q, s, th);
            }
        }
    }
    let (mut ds, mut dt) = (0.05, std::f64::consts::PI / 61.0);
    for _ in 0..30 {
        let (_, s0, t0) = best;
        for a in -2..=2 {
            for b in -2..=2 {
                let s = s0 + a as f64 * ds / 2.0;
                let th = t0 + b as f64 * dt / 2.0;
                let q = qfi(s, th);
                if q < best.0 {
                    best = (q, s, th);
                }
            }
        }
        ds *= 0.6;
        dt *= 0.6;
    }
    best.0 / 4.0
}

/// Random two-mode symplectic built from local rotations, local squeezers,
/// a beam splitter and a two-mode squeezer.
pub fn random_symplectic(rng: &mut impl Rng) -> DMatrix<f64> {
    let local = |rng: &mut dyn rand::RngCore| {
        let mut s = DMatrix::zeros(4, 4);
        for idx in [[0usize, 2usize], [1, 3]] {
            let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let z: f64 = rng.random_range(-0.6f64..0.6).exp();
            let m = Matrix2::new(th.cos(), th.sin(), -th.sin(), th.cos()) * Matrix2::new(z, 0.0, 0.0, 1.0 / z);
            for a in 0..2 {
                for b in 0..2 {
                    s[(idx[a], idx[b])] = m[(a, b)];
                }
            }
        }
        s
    };
    let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let (c, s) = (th.cos(), th.sin());
    let bs = DMatrix::from_row_slice(4, 4, &[c, s, 0.0, 0.0, -s, c, 0.0, 0.0, 0.0, 0.0, c, s, 0.0, 0.0, -s, c]);
    let r: f64 = rng.random_range(0.0..0.9);
    let (ch, sh) = (r.cosh(), r.sinh());
    let tms = DMatrix::from_row_slice(4, 4, &[ch, sh, 0.0, 0.0, sh, ch, 0.0, 0.0, 0.0, 0.0, ch, -sh, 0.0, 0.0, -sh, ch]);
    local(rng) * tms * bs * local(rng)
}

/// Random physical two-mode covariance `S diag(nu1, nu2, nu1, nu2) S^T`.
pub fn random_two_mode_state(rng: &mut impl Rng) -> DMatrix<f64> {
    let nu1 = 0.5 + rng.random_range(0.0..1.5);
    let nu2 = 0.5 + rng.random_range(0.0..1.5);
    let s = random_symplectic(rng);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![nu1, nu2, nu1, nu2]));
    let v = &s * d * s.transpose();
    (&v + v.transpose()) * 0.5
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Symmetric eigen-residual `||A K - K diag(lambda)||_max` computed directly.
pub fn eigen_residual(a: &DMatrix<f64>, k: &DMatrix<f64>, lambda: &[f64]) -> f64 {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambda.to_vec()));
    (a * k - k * d).abs().max()
}

/// `||S J S^T - J||_max`.
pub fn symplectic_defect(s: &DMatrix<f64>) -> f64 {
    let j = omega(s.nrows() / 2);
    (s * &j * s.transpose() - j).abs().max()
}
