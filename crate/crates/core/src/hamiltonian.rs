//! Network Hamiltonian `H = p^T p / 2 + q^T A q`, its normal modes, and the
//! exact symplectic propagators of the closed network.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{Basis, CovarianceState};
use crate::linalg::{block_diag2, sorted_symmetric_eigen};
use crate::netgen::WeightedGraph;

/// Unit-mass oscillators with bare frequencies `omega` and spring couplings
/// `g_ij (q_i - q_j)^2 / 2` given by the graph weights.
#[derive(Debug, Clone)]
pub struct OscillatorNetwork {
    omega: Vec<f64>,
    graph: WeightedGraph,
}

impl OscillatorNetwork {
    pub fn new(omega: Vec<f64>, graph: WeightedGraph) -> Result<Self> {
        if omega.len() != graph.n() {
            return Err(Error::DimensionMismatch {
                expected: graph.n(),
                found: omega.len(),
            });
        }
        if let Some(w) = omega.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!("bare frequency must be positive, got {w}")));
        }
        Ok(OscillatorNetwork { omega, graph })
    }

    /// All oscillators at the same bare frequency.
    pub fn uniform(omega0: f64, graph: WeightedGraph) -> Result<Self> {
        let n = graph.n();
        OscillatorNetwork::new(vec![omega0; n], graph)
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn bare_frequencies(&self) -> &[f64] {
        &self.omega
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// `omega_tilde_i = sqrt(omega_i^2 + sum_j g_ij)`.
    pub fn effective_frequencies(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| (self.omega[i].powi(2) + self.graph.strength(i)).sqrt())
            .collect()
    }
}

/// Symmetric coupling matrix of the potential term.
#[derive(Debug, Clone, PartialEq)]
pub struct AMatrix(pub DMatrix<f64>);

impl AMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// Same matrix assembled as `diag(omega^2)/2 + L/2` from the graph
    /// Laplacian.
    pub fn laplacian_form(net: &OscillatorNetwork) -> DMatrix<f64> {
        let omega2 = DVector::from_iterator(net.n(), net.omega.iter().map(|w| w * w));
        (DMatrix::from_diagonal(&omega2) + net.graph.laplacian()) * 0.5
    }
}

/// `A_ij = delta_ij omega_tilde_i^2 / 2 - (1 - delta_ij) g_ij / 2`.
pub fn assemble_a(net: &OscillatorNetwork) -> AMatrix {
    let n = net.n();
    let w = net.graph.weights();
    let eff = net.effective_frequencies();
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            eff[i] * eff[i] / 2.0
        } else {
            -w[(i, j)] / 2.0
        }
    });
    AMatrix(a)
}

/// Orthogonal diagonalizer `K` (eigenvectors in columns) and the ascending
/// eigenfrequencies `Omega_i = sqrt(2 lambda_i)`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub k: DMatrix<f64>,
    pub omega: Vec<f64>,
}

impl EigenSystem {
    pub fn n(&self) -> usize {
        self.omega.len()
    }

    /// Eigenfrequency by 1-based rank in the ascending spectrum.
    pub fn nth_frequency(&self, rank: usize) -> Option<f64> {
        rank.checked_sub(1).and_then(|i| self.omega.get(i).copied())
    }

    /// `max |A K - K diag(Omega^2 / 2)|`.
    pub fn residual(&self, a: &AMatrix) -> f64 {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.n(),
            self.omega.iter().map(|w| w * w / 2.0),
        ));
        crate::linalg::max_abs(&(a.matrix() * &self.k - &self.k * d))
    }

    /// Eigenmode coupling strengths `g_i = -k K_{l i}` for a system attached
    /// at node `l` (0-based) with strength `k`.
    pub fn mode_couplings(&self, node: usize, k: f64) -> Vec<f64> {
        self.k.row(node).iter().map(|x| -k * x).collect()
    }
}

pub fn diagonalize(a: &AMatrix) -> Result<EigenSystem> {
    let (vals, k) = sorted_symmetric_eigen(a.matrix());
    if let Some(&min) = vals.first() {
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
    }
    let omega = vals.iter().map(|l| (2.0 * l).sqrt()).collect();
    Ok(EigenSystem { k, omega })
}

/// Which coordinates a propagator maps from and to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorKind {
    EigenmodeToEigenmode,
    EigenmodeToNetwork,
    NetworkToNetwork,
}

impl PropagatorKind {
    pub fn source(self) -> Basis {
        match self {
            PropagatorKind::EigenmodeToEigenmode | PropagatorKind::EigenmodeToNetwork => Basis::Eigenmode,
            PropagatorKind::NetworkToNetwork => Basis::Network,
        }
    }

    pub fn target(self) -> Basis {
        match self {
            PropagatorKind::EigenmodeToEigenmode => Basis::Eigenmode,
            PropagatorKind::EigenmodeToNetwork | PropagatorKind::NetworkToNetwork => Basis::Network,
        }
    }
}

/// Real `2M x 2M` matrix `S(t)` with `x(t) = S x(0)`.
#[derive(Debug, Clone)]
pub struct SymplecticPropagator {
    pub matrix: DMatrix<f64>,
    pub t: f64,
    pub kind: PropagatorKind,
}

impl SymplecticPropagator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn residual(&self) -> f64 {
        crate::linalg::symplectic_residual(&self.matrix)
    }
}

/// Free rotation of independent modes:
/// `[[cos, sin / f], [-f sin, cos]]` per frequency.
pub(crate) fn free_rotation(freqs: &[f64], t: f64) -> DMatrix<f64> {
    let m = freqs.len();
    let mut s = DMatrix::zeros(2 * m, 2 * m);
    for (i, &f) in freqs.iter().enumerate() {
        let (sin, cos) = (f * t).sin_cos();
        s[(i, i)] = cos;
        s[(i, m + i)] = sin / f;
        s[(m + i, i)] = -f * sin;
        s[(m + i, m + i)] = cos;
    }
    s
}

pub fn propagator_eigenmode(eig: &EigenSystem, t: f64) -> SymplecticPropagator {
    SymplecticPropagator {
        matrix: free_rotation(&eig.omega, t),
        t,
        kind: PropagatorKind::EigenmodeToEigenmode,
    }
}

/// Eigenmode-coordinate initial conditions, network-coordinate output.
pub fn propagator_eigenmode_to_network(eig: &EigenSystem, t: f64) -> SymplecticPropagator {
    SymplecticPropagator {
        matrix: block_diag2(&eig.k) * free_rotation(&eig.omega, t),
        t,
        kind: PropagatorKind::EigenmodeToNetwork,
    }
}

pub fn propagator_network(eig: &EigenSystem, t: f64) -> SymplecticPropagator {
    let n = eig.n();
    let k = &eig.k;
    let kt = k.transpose();
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    let cos = DMatrix::from_diagonal(&DVector::from_iterator(n, eig.omega.iter().map(|w| (w * t).cos())));
    let sin_over = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        eig.omega.iter().map(|w| (w * t).sin() / w),
    ));
    let sin_times = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        eig.omega.iter().map(|w| w * (w * t).sin()),
    ));
    let c = k * cos * &kt;
    s.view_mut((0, 0), (n, n)).copy_from(&c);
    s.view_mut((0, n), (n, n)).copy_from(&(k * sin_over * &kt));
    s.view_mut((n, 0), (n, n)).copy_from(&(-(k * sin_times * &kt)));
    s.view_mut((n, n), (n, n)).copy_from(&c);
    SymplecticPropagator {
        matrix: s,
        t,
        kind: PropagatorKind::NetworkToNetwork,
    }
}

/// `<H_E> = tr(A sigma_qq) + tr(sigma_pp) / 2` for a network-basis state.
pub fn total_energy(net: &OscillatorNetwork, cov: &CovarianceState) -> Result<f64> {
    let n = net.n();
    if cov.modes() != n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: cov.dim(),
        });
    }
    if cov.basis != Basis::Network {
        return Err(Error::BasisMismatch {
            expected: Basis::Network,
            found: cov.basis,
        });
    }
    let a = assemble_a(net);
    let s = &cov.sigma;
    let qq = s.view((0, 0), (n, n));
    let potential = (a.matrix() * qq).trace();
    let kinetic: f64 = (0..n).map(|i| s[(n + i, n + i)]).sum::<f64>() / 2.0;
    Ok(potential + kinetic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::netgen::{watts_strogatz, WeightedGraph};
    use std::f64::consts::PI;

    fn pair(g: f64) -> OscillatorNetwork {
        let graph = WeightedGraph::from_edges(2, &[(0, 1, g)]).unwrap();
        OscillatorNetwork::uniform(1.0, graph).unwrap()
    }

    #[test]
    fn two_node_a_matrix() {
        let a = assemble_a(&pair(0.1));
        let expected = DMatrix::from_row_slice(2, 2, &[0.55, -0.05, -0.05, 0.55]);
        assert!(max_abs(&(a.matrix() - expected)) < 1e-15);
    }

    #[test]
    fn decoupled_a_is_diagonal() {
        let net = OscillatorNetwork::new(vec![0.3, 0.7, 0.5], WeightedGraph::empty(3)).unwrap();
        let a = assemble_a(&net);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { net.omega[i].powi(2) / 2.0 } else { 0.0 };
                assert_eq!(a.matrix()[(i, j)], expected);
            }
        }
        let eig = diagonalize(&a).unwrap();
        assert!((eig.omega[0] - 0.3).abs() < 1e-14);
        assert!((eig.omega[1] - 0.5).abs() < 1e-14);
        assert!((eig.omega[2] - 0.7).abs() < 1e-14);
        // permutation matrix with positive entries
        assert!(max_abs(&(eig.k.abs() - &eig.k)) < 1e-15);
    }

    #[test]
    fn two_node_eigenfrequencies() {
        let eig = diagonalize(&assemble_a(&pair(0.1))).unwrap();
        assert!((eig.omega[0] - 1.0).abs() < 1e-14);
        assert!((eig.omega[1] - 1.2_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn ring_spectrum_is_circulant() {
        let ring = watts_strogatz(4, 0.0, 1, 0.05, 0).unwrap();
        let eig = diagonalize(&assemble_a(&OscillatorNetwork::uniform(0.25, ring).unwrap())).unwrap();
        let sq: Vec<f64> = eig.omega.iter().map(|w| w * w).collect();
        for (got, want) in sq.iter().zip([0.0625, 0.1625, 0.1625, 0.2625]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn rejects_non_positive_definite() {
        let a = AMatrix(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(matches!(diagonalize(&a), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn quarter_period_single_mode() {
        let eig = EigenSystem {
            k: DMatrix::identity(1, 1),
            omega: vec![2.0],
        };
        let s = propagator_eigenmode(&eig, PI / 4.0).matrix;
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, -2.0, 0.0]);
        assert!(max_abs(&(s - expected)) < 1e-15);
        assert!(max_abs(&(propagator_eigenmode(&eig, 0.0).matrix - DMatrix::identity(2, 2))) == 0.0);
    }

    #[test]
    fn network_propagator_is_conjugated_eigenmode_propagator() {
        let g = watts_strogatz(9, 0.5, 1, 0.05, 7).unwrap();
        let eig = diagonalize(&assemble_a(&OscillatorNetwork::uniform(0.25, g).unwrap())).unwrap();
        let t = 13.7;
        let kk = block_diag2(&eig.k);
        let via = &kk * propagator_eigenmode(&eig, t).matrix * kk.transpose();
        assert!(max_abs(&(via - propagator_network(&eig, t).matrix)) < 1e-13);
        assert!(max_abs(&(propagator_network(&eig, 0.0).matrix - DMatrix::identity(18, 18))) < 1e-14);
        assert!(propagator_network(&eig, t).residual() < 1e-10);
    }

    #[test]
    fn vacuum_energy_of_single_mode() {
        let net = OscillatorNetwork::uniform(0.8, WeightedGraph::empty(1)).unwrap();
        let vac = CovarianceState::new(
            DMatrix::from_row_slice(2, 2, &[1.0 / 1.6, 0.0, 0.0, 0.4]),
            Basis::Network,
            vec![0.8],
        )
        .unwrap();
        assert!((total_energy(&net, &vac).unwrap() - 0.4).abs() < 1e-15);
        let bad = CovarianceState::vacuum(&[0.8, 0.8], Basis::Network);
        assert!(total_energy(&net, &bad).is_err());
    }
}
