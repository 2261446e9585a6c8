//! Excitation transport across the network in the site basis.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{occupation_from_variances, uncertainty_margin, Basis, CovarianceState, PHYSICALITY_TOL};
use crate::hamiltonian::{EigenSystem, OscillatorNetwork};
use crate::linalg::block_diag2;

/// Local occupations `n_j(t)` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportRecord {
    pub times: Vec<f64>,
    /// Row `k` holds `n_j(t_k)` for every node `j`.
    pub excitations: DMatrix<f64>,
    /// `n_j(0)`.
    pub reference: Vec<f64>,
    pub site: usize,
}

impl TransportRecord {
    pub fn nodes(&self) -> usize {
        self.reference.len()
    }

    /// `n_j(t_k) - n_j(0)`.
    pub fn spread(&self, step: usize) -> Vec<f64> {
        (0..self.nodes())
            .map(|j| self.excitations[(step, j)] - self.reference[j])
            .collect()
    }

    /// Full map of `n_j(t_k) - n_j(0)`, time along rows.
    pub fn spread_map(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.times.len(), self.nodes(), |k, j| {
            self.excitations[(k, j)] - self.reference[j]
        })
    }

    /// `t,j,dn` in long format.
    pub fn heatmap_csv(&self) -> String {
        let mut out = String::from("t,j,dn\n");
        for (k, t) in self.times.iter().enumerate() {
            for j in 0..self.nodes() {
                let _ = writeln!(out, "{t:e},{j},{:e}", self.excitations[(k, j)] - self.reference[j]);
            }
        }
        out
    }
}

/// Eigenmode vacuum expressed in the network basis.
pub fn stationary_vacuum(eig: &EigenSystem) -> CovarianceState {
    let vac = CovarianceState::vacuum(&eig.omega, Basis::Eigenmode);
    let kk = block_diag2(&eig.k);
    CovarianceState {
        sigma: crate::gaussian::symmetrize(&kk * vac.sigma * kk.transpose()),
        basis: Basis::Network,
        mode_frequencies: eig.omega.clone(),
    }
}

/// Stationary vacuum with one thermal quantum placed on `site`: the site's
/// local variances become `1.5 / w~` and `1.5 w~`.
pub fn local_excitation_state(net: &OscillatorNetwork, eig: &EigenSystem, site: usize) -> Result<CovarianceState> {
    let n = net.n();
    if eig.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: eig.n(),
        });
    }
    if site >= n {
        return Err(Error::InvalidParameter(format!("site {site} out of range for {n} nodes")));
    }
    let mut state = stationary_vacuum(eig);
    let w = net.effective_frequencies()[site];
    state.sigma[(site, site)] = 1.5 / w;
    state.sigma[(n + site, n + site)] = 1.5 * w;
    let margin = uncertainty_margin(&state)?;
    if margin < -PHYSICALITY_TOL {
        return Err(Error::Unphysical {
            min_symplectic: margin + 0.5,
        });
    }
    Ok(state)
}

/// Evolves a network-basis state under the isolated network and records
/// `n_j(t)` at each node's effective frequency.
pub fn excitation_trajectory(
    net: &OscillatorNetwork,
    eig: &EigenSystem,
    initial: &CovarianceState,
    site: usize,
    times: &[f64],
) -> Result<TransportRecord> {
    let n = net.n();
    if initial.basis != Basis::Network {
        return Err(Error::BasisMismatch {
            expected: Basis::Network,
            found: initial.basis,
        });
    }
    if initial.dim() != 2 * n || eig.n() != n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: initial.dim(),
        });
    }
    let kk = block_diag2(&eig.k);
    let modal = kk.transpose() * &initial.sigma * &kk;
    let w_eff = net.effective_frequencies();
    let rows: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| local_occupations(&eig.k, &eig.omega, &modal, &w_eff, t))
        .collect();
    let excitations = DMatrix::from_fn(times.len(), n, |k, j| rows[k][j]);
    let reference = local_occupations(&eig.k, &eig.omega, &modal, &w_eff, 0.0);
    Ok(TransportRecord {
        times: times.to_vec(),
        excitations,
        reference,
        site,
    })
}

/// Site occupations at time `t` from the eigenmode-basis covariance `modal`.
fn local_occupations(k: &DMatrix<f64>, omega: &[f64], modal: &DMatrix<f64>, w_eff: &[f64], t: f64) -> Vec<f64> {
    let n = omega.len();
    let rot = crate::hamiltonian::free_rotation(omega, t);
    let evolved = &rot * modal * rot.transpose();
    let qq = evolved.view((0, 0), (n, n));
    let pp = evolved.view((n, n), (n, n));
    let kq = k * qq;
    let kp = k * pp;
    (0..n)
        .map(|j| {
            let q2 = kq.row(j).dot(&k.row(j));
            let p2 = kp.row(j).dot(&k.row(j));
            occupation_from_variances(q2, p2, w_eff[j])
        })
        .collect()
}

/// Occupations of the network eigenmodes for a network-basis state.
pub fn eigenmode_occupations(eig: &EigenSystem, state: &CovarianceState) -> Result<Vec<f64>> {
    let n = eig.n();
    if state.basis != Basis::Network || state.dim() != 2 * n {
        return Err(Error::BasisMismatch {
            expected: Basis::Network,
            found: state.basis,
        });
    }
    let kk = block_diag2(&eig.k);
    let modal = kk.transpose() * &state.sigma * &kk;
    Ok((0..n)
        .map(|i| occupation_from_variances(modal[(i, i)], modal[(n + i, n + i)], eig.omega[i]))
        .collect())
}

/// `(sum d)^2 / sum d^2` with `d_j = max(n_j(t) - n_j(0), 0)`.
pub fn participation_ratio(record: &TransportRecord, step: usize) -> Result<f64> {
    let d: Vec<f64> = record.spread(step).into_iter().map(|x| x.max(0.0)).collect();
    let s: f64 = d.iter().sum();
    let s2: f64 = d.iter().map(|x| x * x).sum();
    if !(s > 0.0) || s2 == 0.0 {
        return Err(Error::Degenerate(format!("no positive spread at step {step}")));
    }
    Ok(s * s / s2)
}

/// Mean participation ratio over all grid points after `t = 0`.
pub fn mean_participation_ratio(record: &TransportRecord) -> Result<f64> {
    let vals = (0..record.times.len())
        .filter(|&k| record.times[k] > 0.0)
        .map(|k| participation_ratio(record, k))
        .collect::<Result<Vec<f64>>>()?;
    if vals.is_empty() {
        return Err(Error::Degenerate("no grid points after t = 0".into()));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Furthest node from the excitation site (by index) whose spread exceeds
/// `fraction` of the maximal spread at that step.
pub fn front_position(record: &TransportRecord, step: usize, fraction: f64) -> Option<usize> {
    let d = record.spread(step);
    let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return None;
    }
    let site = record.site;
    d.iter()
        .enumerate()
        .filter(|(_, x)| **x > fraction * max)
        .map(|(j, _)| j)
        .max_by_key(|j| j.abs_diff(site))
}

/// `||D_a - D_b|| / ||D_a||` over the full spread maps (Frobenius norm).
pub fn map_distance(a: &TransportRecord, b: &TransportRecord) -> Result<f64> {
    let da = a.spread_map();
    let db = b.spread_map();
    if da.shape() != db.shape() {
        return Err(Error::DimensionMismatch {
            expected: da.len(),
            found: db.len(),
        });
    }
    let norm = da.norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("reference map is identically zero".into()));
    }
    Ok((da - db).norm() / norm)
}
