//! Small dense helpers shared by the physics modules.
//!
//! All phase-space matrices use the `{q_1..q_M, p_1..p_M}` ordering, so the
//! symplectic form is `J = [[0, I], [-I, 0]]`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// `J = [[0, I_m], [-I_m, 0]]`.
pub fn symplectic_form(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = 1.0;
        j[(m + i, i)] = -1.0;
    }
    j
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Infinity norm (maximum absolute row sum).
pub fn norm_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `max |S J S^T - J|`.
pub fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let m = s.nrows() / 2;
    let j = symplectic_form(m);
    max_abs(&(s * &j * s.transpose() - j))
}

/// Eigendecomposition of a symmetric matrix with ascending eigenvalues and a
/// fixed sign convention: the largest-magnitude component of every
/// eigenvector is positive (first index wins ties).
pub fn sorted_symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(src).into_owned();
        let mut pivot = 0;
        for r in 1..n {
            if v[r].abs() > v[pivot].abs() * (1.0 + 1e-12) {
                pivot = r;
            }
        }
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Symmetric positive-definite square root via the eigendecomposition.
pub fn spd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sorted_symmetric_eigen(a);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| v.max(0.0).sqrt()),
    ));
    &vecs * d * vecs.transpose()
}

/// `blockdiag(k, k)`.
pub fn block_diag2(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(k);
    out.view_mut((n, n), (n, n)).copy_from(k);
    out
}

/// Real roots of `x^3 + a x^2 + b x + c` for a cubic known to have only real
/// roots, returned in ascending order.
pub fn real_cubic_roots(a: f64, b: f64, c: f64) -> [f64; 3] {
    // depressed cubic t^3 + p t + q with x = t - a/3
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let mut roots = if p.abs() < 1e-300 {
        let t = (-q).cbrt();
        [t, t, t]
    } else {
        let m = 2.0 * (-p / 3.0).max(0.0).sqrt();
        let arg = if m == 0.0 {
            0.0
        } else {
            (3.0 * q / (p * m)).clamp(-1.0, 1.0)
        };
        let theta = arg.acos() / 3.0;
        let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
        [
            m * theta.cos(),
            m * (theta - two_pi_3).cos(),
            m * (theta - 2.0 * two_pi_3).cos(),
        ]
    };
    for r in roots.iter_mut() {
        *r -= shift;
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Pairwise summation; order-stable for reproducible aggregates.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
