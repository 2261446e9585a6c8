//! A single oscillator coupled to one network node through `-k q_S q_l`.
//!
//! Total-system coordinates are ordered `{Q_1..Q_N, q_S, P_1..P_N, p_S}` with
//! the network in its eigenmode basis. Joint states that carry the probe
//! ancilla append `q_B` / `p_B` after the system entries.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::gaussian::{direct_sum, from_dimensionless, symmetrize, Basis, CovarianceState};
use crate::hamiltonian::{free_rotation, EigenSystem, PropagatorKind, SymplecticPropagator};
use crate::linalg::{block_diag2, sorted_symmetric_eigen};

#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub eig: EigenSystem,
    pub omega_s: f64,
    pub k: f64,
    /// Attached network node, 0-based.
    pub node: usize,
    pub b: DMatrix<f64>,
    pub o: DMatrix<f64>,
    /// Normal-mode frequencies of network plus system, ascending.
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetBasis {
    Eigenmode,
    Network,
}

/// Builds and diagonalizes the total potential matrix `B`.
pub fn attach(eig: &EigenSystem, omega_s: f64, k: f64, node: usize) -> Result<CoupledSystem> {
    let n = eig.n();
    if !(omega_s.is_finite() && omega_s > 0.0) {
        return Err(Error::InvalidParameter(format!("system frequency must be positive, got {omega_s}")));
    }
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::InvalidParameter(format!("coupling must be non-negative, got {k}")));
    }
    if node >= n {
        return Err(Error::InvalidParameter(format!("node {node} out of range for N = {n}")));
    }
    let mut b = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        b[(i, i)] = eig.omega[i].powi(2) / 2.0;
        let c = -k * eig.k[(node, i)] / 2.0;
        b[(n, i)] = c;
        b[(i, n)] = c;
    }
    b[(n, n)] = omega_s * omega_s / 2.0;
    let (vals, o) = sorted_symmetric_eigen(&b);
    if vals[0] <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: vals[0] });
    }
    let f = vals.iter().map(|l| (2.0 * l).sqrt()).collect();
    Ok(CoupledSystem {
        eig: eig.clone(),
        omega_s,
        k,
        node,
        b,
        o,
        f,
    })
}

impl CoupledSystem {
    pub fn n(&self) -> usize {
        self.eig.n()
    }

    /// `g_i = -k K_{l i}`.
    pub fn mode_couplings(&self) -> Vec<f64> {
        self.eig.mode_couplings(self.node, self.k)
    }

    /// `max |B O - O diag(f^2/2)|`.
    pub fn residual(&self) -> f64 {
        let d = DMatrix::from_fn(self.f.len(), self.f.len(), |i, j| {
            if i == j {
                self.f[i] * self.f[i] / 2.0
            } else {
                0.0
            }
        });
        crate::linalg::max_abs(&(&self.b * &self.o - &self.o * d))
    }

    /// Propagator of network plus system from eigenmode initial conditions.
    pub fn total_propagator(&self, t: f64, target: TargetBasis) -> SymplecticPropagator {
        let oo = block_diag2(&self.o);
        let mut s = &oo * free_rotation(&self.f, t) * oo.transpose();
        let kind = match target {
            TargetBasis::Eigenmode => PropagatorKind::EigenmodeToEigenmode,
            TargetBasis::Network => {
                let n = self.n();
                let mut kt = DMatrix::identity(n + 1, n + 1);
                kt.view_mut((0, 0), (n, n)).copy_from(&self.eig.k);
                s = block_diag2(&kt) * s;
                PropagatorKind::EigenmodeToNetwork
            }
        };
        SymplecticPropagator { matrix: s, t, kind }
    }

    /// Rows of the eigenmode-basis propagator belonging to `q_S` and `p_S`,
    /// each of length `2N + 2`.
    pub fn system_rows(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.n() + 1;
        let sys = m - 1;
        let mut cos_w = vec![0.0; m];
        let mut sin_over = vec![0.0; m];
        let mut sin_times = vec![0.0; m];
        for a in 0..m {
            let (s, c) = (self.f[a] * t).sin_cos();
            let w = self.o[(sys, a)];
            cos_w[a] = c * w;
            sin_over[a] = s / self.f[a] * w;
            sin_times[a] = s * self.f[a] * w;
        }
        let mut row_q = vec![0.0; 2 * m];
        let mut row_p = vec![0.0; 2 * m];
        for j in 0..m {
            let (mut cc, mut so, mut st) = (0.0, 0.0, 0.0);
            for a in 0..m {
                let oj = self.o[(j, a)];
                cc += cos_w[a] * oj;
                so += sin_over[a] * oj;
                st += sin_times[a] * oj;
            }
            row_q[j] = cc;
            row_q[m + j] = so;
            row_p[j] = -st;
            row_p[m + j] = cc;
        }
        (row_q, row_p)
    }

    /// Network (eigenmode basis) plus the two-mode probe, with probe mode A
    /// as the open system and B as a non-evolving ancilla. Both probe modes
    /// are converted to dimensionful units at `omega_S`.
    pub fn joint_initial(&self, network: &CovarianceState, probe_ab: &CovarianceState) -> Result<CovarianceState> {
        check_network_state(self, network)?;
        if probe_ab.modes() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: probe_ab.dim(),
            });
        }
        let probe = from_dimensionless(probe_ab, &[self.omega_s, self.omega_s], Basis::Eigenmode)?;
        Ok(direct_sum(&[network, &probe], Basis::Eigenmode))
    }

    /// Joint covariance at `t`; the ancilla evolves trivially.
    pub fn evolve_joint(&self, joint: &CovarianceState, t: f64) -> Result<CovarianceState> {
        let n = self.n();
        let m = n + 2;
        if joint.modes() != m {
            return Err(Error::DimensionMismatch {
                expected: 2 * m,
                found: joint.dim(),
            });
        }
        if joint.basis != Basis::Eigenmode {
            return Err(Error::BasisMismatch {
                expected: Basis::Eigenmode,
                found: joint.basis,
            });
        }
        let s = self.total_propagator(t, TargetBasis::Eigenmode).matrix;
        let embed = |i: usize| if i <= n { i } else { i + 1 };
        let mut full = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..2 * (n + 1) {
            for j in 0..2 * (n + 1) {
                full[(embed(i), embed(j))] = s[(i, j)];
            }
        }
        full[(n + 1, n + 1)] = 1.0;
        full[(2 * m - 1, 2 * m - 1)] = 1.0;
        let sigma = symmetrize(&full * &joint.sigma * full.transpose());
        Ok(CovarianceState {
            sigma,
            basis: Basis::Eigenmode,
            mode_frequencies: joint.mode_frequencies.clone(),
        })
    }

    /// Reduced one-mode channel `sigma_S(t) = C sigma_S(0) C^T + L`.
    pub fn channel(&self, network: &CovarianceState, t: f64) -> Result<GaussianChannel> {
        check_network_state(self, network)?;
        check_eigenmode_diagonal(network)?;
        Ok(self.channel_unchecked(network, t))
    }

    pub(crate) fn channel_unchecked(&self, network: &CovarianceState, t: f64) -> GaussianChannel {
        let n = self.n();
        let (rq, rp) = self.system_rows(t);
        let sys_q = n;
        let sys_p = 2 * n + 1;
        let c = Matrix2::new(rq[sys_q], rq[sys_p], rp[sys_q], rp[sys_p]);
        let mut l = Matrix2::zeros();
        for i in 0..n {
            let x2 = network.sigma[(i, i)];
            let p2 = network.sigma[(n + i, n + i)];
            let (a, b) = (rq[i], rp[i]);
            let (u, v) = (rq[n + 1 + i], rp[n + 1 + i]);
            l[(0, 0)] += x2 * a * a + p2 * u * u;
            l[(0, 1)] += x2 * a * b + p2 * u * v;
            l[(1, 1)] += x2 * b * b + p2 * v * v;
        }
        l[(1, 0)] = l[(0, 1)];
        GaussianChannel { c, l, t }
    }

    /// `<H_S> + <H_E> + <H_I>` from a state whose first `N + 1` modes are the
    /// eigenmode-basis network plus system (extra ancilla modes are ignored).
    pub fn energy(&self, state: &CovarianceState) -> Result<f64> {
        let m = state.modes();
        let n1 = self.n() + 1;
        if m < n1 || state.basis != Basis::Eigenmode {
            return Err(Error::DimensionMismatch {
                expected: 2 * n1,
                found: state.dim(),
            });
        }
        let mut potential = 0.0;
        for i in 0..n1 {
            for j in 0..n1 {
                potential += self.b[(i, j)] * state.sigma[(j, i)];
            }
        }
        let kinetic: f64 = (0..n1).map(|i| state.sigma[(m + i, m + i)]).sum::<f64>() / 2.0;
        Ok(potential + kinetic)
    }
}

fn check_network_state(cs: &CoupledSystem, network: &CovarianceState) -> Result<()> {
    if network.modes() != cs.n() {
        return Err(Error::DimensionMismatch {
            expected: 2 * cs.n(),
            found: network.dim(),
        });
    }
    if network.basis != Basis::Eigenmode {
        return Err(Error::BasisMismatch {
            expected: Basis::Eigenmode,
            found: network.basis,
        });
    }
    Ok(())
}

fn check_eigenmode_diagonal(network: &CovarianceState) -> Result<()> {
    let s = &network.sigma;
    let scale = crate::linalg::max_abs(s).max(1e-300);
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            if i != j && s[(i, j)].abs() > 1e-14 * scale {
                return Err(Error::InvalidParameter(
                    "channel needs a network state diagonal in the eigenmode basis".into(),
                ));
            }
        }
    }
    Ok(())
}

/// `(C, L)` pair of the reduced dynamics at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianChannel {
    pub c: Matrix2<f64>,
    pub l: Matrix2<f64>,
    pub t: f64,
}

impl GaussianChannel {
    pub fn apply(&self, sigma_s: &Matrix2<f64>) -> Matrix2<f64> {
        self.c * sigma_s * self.c.transpose() + self.l
    }

    /// Acts on mode 0 of a two-mode `(q_A, q_B, p_A, p_B)` covariance and
    /// leaves mode 1 untouched.
    pub fn apply_to_pair(&self, sigma_ab: &DMatrix<f64>) -> DMatrix<f64> {
        let a = Matrix2::new(sigma_ab[(0, 0)], sigma_ab[(0, 2)], sigma_ab[(2, 0)], sigma_ab[(2, 2)]);
        let cross = Matrix2::new(sigma_ab[(0, 1)], sigma_ab[(0, 3)], sigma_ab[(2, 1)], sigma_ab[(2, 3)]);
        let a_t = self.apply(&a);
        let x_t = self.c * cross;
        let mut out = sigma_ab.clone();
        let ai = [0, 2];
        let bi = [1, 3];
        for r in 0..2 {
            for c in 0..2 {
                out[(ai[r], ai[c])] = a_t[(r, c)];
                out[(ai[r], bi[c])] = x_t[(r, c)];
                out[(bi[c], ai[r])] = x_t[(r, c)];
            }
        }
        out
    }

    /// `t,C11,C12,C21,C22,L11,L12,L22`
    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t,
            self.c[(0, 0)],
            self.c[(0, 1)],
            self.c[(1, 0)],
            self.c[(1, 1)],
            self.l[(0, 0)],
            self.l[(0, 1)],
            self.l[(1, 1)]
        )
    }
}

pub const CHANNEL_CSV_HEADER: &str = "t,C11,C12,C21,C22,L11,L12,L22";
