//! Zero-mean Gaussian states described by their covariance matrix.
//!
//! Covariances are `sigma_ij = <{x_i, x_j}>/2` in the `{q.., p..}` ordering.
//! Dimensionful states use `q`, `p` of unit-mass oscillators; dimensionless
//! states use `x = sqrt(w) q`, `y = p / sqrt(w)` so that the vacuum is `I/2`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{EigenSystem, SymplecticPropagator};
use crate::linalg::{spd_sqrt, symplectic_form};

/// Tolerance on the uncertainty relation `nu >= 1/2`.
pub const PHYSICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Network,
    Eigenmode,
    Dimensionless,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Network => "network",
            Basis::Eigenmode => "eigenmode",
            Basis::Dimensionless => "dimensionless",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub sigma: DMatrix<f64>,
    pub basis: Basis,
    /// Frequencies attached to each mode for unit conversion.
    pub mode_frequencies: Vec<f64>,
}

impl CovarianceState {
    pub fn new(sigma: DMatrix<f64>, basis: Basis, mode_frequencies: Vec<f64>) -> Result<Self> {
        let d = sigma.nrows();
        if sigma.ncols() != d || d % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "covariance must be square with even dimension, got {}x{}",
                d,
                sigma.ncols()
            )));
        }
        if mode_frequencies.len() != d / 2 {
            return Err(Error::DimensionMismatch {
                expected: d / 2,
                found: mode_frequencies.len(),
            });
        }
        let scale = crate::linalg::max_abs(&sigma).max(1.0);
        if crate::linalg::max_abs(&(&sigma - sigma.transpose())) > 1e-12 * scale {
            return Err(Error::InvalidParameter("covariance is not symmetric".into()));
        }
        Ok(CovarianceState {
            sigma,
            basis,
            mode_frequencies,
        })
    }

    /// Ground state of free oscillators at `freqs` (or `I/2` when dimensionless).
    pub fn vacuum(freqs: &[f64], basis: Basis) -> Self {
        let occupations = vec![0.0; freqs.len()];
        thermal_product(freqs, &occupations, basis)
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn modes(&self) -> usize {
        self.sigma.nrows() / 2
    }

    /// `(<q_i^2>, <p_i^2>)`.
    pub fn local_variances(&self, mode: usize) -> (f64, f64) {
        let m = self.modes();
        (self.sigma[(mode, mode)], self.sigma[(m + mode, m + mode)])
    }

    /// Reduced state of the listed modes, in the given order.
    pub fn reduced(&self, modes: &[usize]) -> CovarianceState {
        let m = self.modes();
        let k = modes.len();
        let idx: Vec<usize> = modes.iter().copied().chain(modes.iter().map(|i| m + i)).collect();
        let sigma = DMatrix::from_fn(2 * k, 2 * k, |a, b| self.sigma[(idx[a], idx[b])]);
        CovarianceState {
            sigma,
            basis: self.basis,
            mode_frequencies: modes.iter().map(|&i| self.mode_frequencies[i]).collect(),
        }
    }

    /// Row-major CSV with a one-line header naming the basis and frequencies.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let freqs: Vec<String> = self.mode_frequencies.iter().map(|f| format!("{f:e}")).collect();
        let _ = writeln!(out, "# basis={} frequencies={}", self.basis.as_str(), freqs.join(" "));
        for r in 0..self.dim() {
            let row: Vec<String> = self.sigma.row(r).iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Bose-Einstein occupation; zero at `T = 0`.
pub fn occupation(freq: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        0.0
    } else {
        1.0 / (freq / temperature).exp_m1()
    }
}

/// Diagonal state with `<q^2> = (n + 1/2)/w`, `<p^2> = (n + 1/2) w`.
pub fn thermal_product(freqs: &[f64], occupations: &[f64], basis: Basis) -> CovarianceState {
    let m = freqs.len();
    let mut sigma = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        let v = occupations[i] + 0.5;
        let (q, p) = if basis == Basis::Dimensionless {
            (v, v)
        } else {
            (v / freqs[i], v * freqs[i])
        };
        sigma[(i, i)] = q;
        sigma[(m + i, m + i)] = p;
    }
    let mode_frequencies = if basis == Basis::Dimensionless {
        vec![1.0; m]
    } else {
        freqs.to_vec()
    };
    CovarianceState {
        sigma,
        basis,
        mode_frequencies,
    }
}

/// Stationary thermal state of the network, diagonal in the eigenmode basis.
pub fn thermal_eigenbasis(eig: &EigenSystem, temperature: f64) -> Result<CovarianceState> {
    if !(temperature >= 0.0) {
        return Err(Error::InvalidParameter(format!("temperature must be >= 0, got {temperature}")));
    }
    let occ: Vec<f64> = eig.omega.iter().map(|w| occupation(*w, temperature)).collect();
    Ok(thermal_product(&eig.omega, &occ, Basis::Eigenmode))
}

/// `S sigma S^T`; the state must be expressed in the propagator's source basis.
pub fn evolve(cov: &CovarianceState, s: &SymplecticPropagator) -> Result<CovarianceState> {
    if s.dim() != cov.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: cov.dim(),
        });
    }
    let source = s.kind.source();
    if cov.basis != source {
        return Err(Error::BasisMismatch {
            expected: source,
            found: cov.basis,
        });
    }
    let sigma = &s.matrix * &cov.sigma * s.matrix.transpose();
    Ok(CovarianceState {
        sigma: symmetrize(sigma),
        basis: s.kind.target(),
        mode_frequencies: cov.mode_frequencies.clone(),
    })
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Two-mode squeezing symplectic in `(q_A, q_B, p_A, p_B)` ordering.
pub fn two_mode_squeezer(r: f64) -> DMatrix<f64> {
    let (c, s) = (r.cosh(), r.sinh());
    DMatrix::from_row_slice(
        4,
        4,
        &[
            c, s, 0.0, 0.0, //
            s, c, 0.0, 0.0, //
            0.0, 0.0, c, -s, //
            0.0, 0.0, -s, c,
        ],
    )
}

/// `S_2(r) (thermal_A (+) thermal_B) S_2(r)^T`, dimensionless.
pub fn two_mode_squeezed_thermal(r: f64, n_a: f64, n_b: f64) -> Result<CovarianceState> {
    if !(r >= 0.0 && n_a >= 0.0 && n_b >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "squeezing and occupations must be non-negative (r = {r}, nA = {n_a}, nB = {n_b})"
        )));
    }
    let thermal = thermal_product(&[1.0, 1.0], &[n_a, n_b], Basis::Dimensionless);
    let s = two_mode_squeezer(r);
    let sigma = symmetrize(&s * thermal.sigma * s.transpose());
    Ok(CovarianceState {
        sigma,
        basis: Basis::Dimensionless,
        mode_frequencies: vec![1.0, 1.0],
    })
}

fn unit_scaling(freqs: &[f64], inverse: bool) -> Result<DVector<f64>> {
    if let Some(w) = freqs.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidParameter(format!("frequency must be positive, got {w}")));
    }
    let m = freqs.len();
    Ok(DVector::from_fn(2 * m, |i, _| {
        let root = freqs[i % m].sqrt();
        let forward = if i < m { root } else { 1.0 / root };
        if inverse {
            1.0 / forward
        } else {
            forward
        }
    }))
}

fn scale(sigma: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(sigma.nrows(), sigma.ncols(), |i, j| d[i] * sigma[(i, j)] * d[j])
}

/// `x = sqrt(w) q`, `y = p / sqrt(w)` per mode.
pub fn to_dimensionless(cov: &CovarianceState, freqs: &[f64]) -> Result<CovarianceState> {
    if cov.basis == Basis::Dimensionless {
        return Err(Error::BasisMismatch {
            expected: Basis::Network,
            found: cov.basis,
        });
    }
    if freqs.len() != cov.modes() {
        return Err(Error::DimensionMismatch {
            expected: cov.modes(),
            found: freqs.len(),
        });
    }
    let d = unit_scaling(freqs, false)?;
    Ok(CovarianceState {
        sigma: scale(&cov.sigma, &d),
        basis: Basis::Dimensionless,
        mode_frequencies: vec![1.0; freqs.len()],
    })
}

/// Inverse of [`to_dimensionless`], tagging the result with `basis`.
pub fn from_dimensionless(cov: &CovarianceState, freqs: &[f64], basis: Basis) -> Result<CovarianceState> {
    if cov.basis != Basis::Dimensionless {
        return Err(Error::BasisMismatch {
            expected: Basis::Dimensionless,
            found: cov.basis,
        });
    }
    if freqs.len() != cov.modes() {
        return Err(Error::DimensionMismatch {
            expected: cov.modes(),
            found: freqs.len(),
        });
    }
    let d = unit_scaling(freqs, true)?;
    Ok(CovarianceState {
        sigma: scale(&cov.sigma, &d),
        basis,
        mode_frequencies: freqs.to_vec(),
    })
}

/// `<n> = (w <q^2> + <p^2>/w)/2 - 1/2` for a dimensionful mode.
pub fn excitation_number(cov: &CovarianceState, mode: usize, omega: f64) -> f64 {
    let (q2, p2) = cov.local_variances(mode);
    occupation_from_variances(q2, p2, omega)
}

pub fn occupation_from_variances(q2: f64, p2: f64, omega: f64) -> f64 {
    (omega * q2 + p2 / omega) / 2.0 - 0.5
}

/// Symplectic spectrum, ascending, one value per mode.
pub fn symplectic_eigenvalues(cov: &CovarianceState) -> Result<Vec<f64>> {
    let nu = raw_symplectic_spectrum(&cov.sigma)?;
    let min = nu.first().copied().unwrap_or(0.5);
    if min < 0.5 - PHYSICALITY_TOL {
        return Err(Error::Unphysical { min_symplectic: min });
    }
    Ok(nu)
}

/// Symplectic spectrum without the physicality check. Fails only when
/// `sigma` is not positive definite.
pub fn raw_symplectic_spectrum(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let m = sigma.nrows() / 2;
    let (vals, _) = crate::linalg::sorted_symmetric_eigen(sigma);
    if let Some(&min) = vals.first() {
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
    }
    // sqrt(sigma) J sqrt(sigma) is antisymmetric with eigenvalues +-i nu
    let root = spd_sqrt(sigma);
    let a = &root * symplectic_form(m) * &root;
    let (sq, _) = crate::linalg::sorted_symmetric_eigen(&(a.transpose() * &a));
    Ok((0..m).map(|i| sq[2 * i].max(0.0).sqrt()).collect())
}

/// Smallest symplectic eigenvalue minus 1/2.
pub fn uncertainty_margin(cov: &CovarianceState) -> Result<f64> {
    Ok(raw_symplectic_spectrum(&cov.sigma)?[0] - 0.5)
}

/// Block direct sum over modes, keeping the `{q.., p..}` ordering.
pub fn direct_sum(parts: &[&CovarianceState], basis: Basis) -> CovarianceState {
    let total: usize = parts.iter().map(|p| p.modes()).sum();
    let mut sigma = DMatrix::zeros(2 * total, 2 * total);
    let mut freqs = Vec::with_capacity(total);
    let mut offset = 0;
    for part in parts {
        let m = part.modes();
        for a in 0..2 * m {
            for b in 0..2 * m {
                let ia = if a < m { offset + a } else { total + offset + a - m };
                let ib = if b < m { offset + b } else { total + offset + b - m };
                sigma[(ia, ib)] = part.sigma[(a, b)];
            }
        }
        freqs.extend_from_slice(&part.mode_frequencies);
        offset += m;
    }
    CovarianceState {
        sigma,
        basis,
        mode_frequencies: freqs,
    }
}
