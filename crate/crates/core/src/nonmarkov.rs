//! Gaussian interferometric power (GIP) along the reduced dynamics and the
//! non-Markovianity witness built from its revivals.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    from_dimensionless, raw_symplectic_spectrum, thermal_eigenbasis, to_dimensionless, two_mode_squeezed_thermal, Basis,
    CovarianceState, PHYSICALITY_TOL,
};
use crate::hamiltonian::{assemble_a, diagonalize, OscillatorNetwork};
use crate::linalg::{pairwise_sum, real_cubic_roots, symplectic_form};
use crate::netgen::{derive_seed, rng_from_seed, GraphSpec, DEFAULT_BARE_FREQUENCY};
use crate::opensys::{attach, CoupledSystem};

/// Which probe mode carries the estimated phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PhaseMode {
    #[default]
    A,
    B,
}

/// Two-mode squeezed thermal probe. Mode A is the open system, mode B an
/// isolated ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSpec {
    pub r: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub phase: PhaseMode,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            r: 0.5 * 2.5f64.acosh(),
            n_a: 0.5,
            n_b: 0.5,
            phase: PhaseMode::A,
        }
    }
}

impl ProbeSpec {
    /// Dimensionless `(q_A, q_B, p_A, p_B)` covariance.
    pub fn state(&self) -> Result<CovarianceState> {
        two_mode_squeezed_thermal(self.r, self.n_a, self.n_b)
    }
}

/// GIP of a dimensionless two-mode state, phase on mode A.
///
/// The quantum Fisher information for a generator `K = J_1 G` acting on A is
/// `F(G) = 1/2 vec(dV)^T (V (x) V - J (x) J / 4)^+ vec(dV)` with
/// `dV = K V + V K^T` (vacuum `I/2`). It is a quadratic form `g^T Q g` in
/// `g = (G11, G12, G22)`, and the constraint `det G = 1` is `g^T D g = 1`.
/// Its minimum is the unique positive eigenvalue of `D^-1 Q`, a root of a
/// cubic with real roots. GIP is a quarter of that minimum.
pub fn gip(sigma_ab: &CovarianceState) -> Result<f64> {
    if sigma_ab.basis != Basis::Dimensionless {
        return Err(Error::BasisMismatch {
            expected: Basis::Dimensionless,
            found: sigma_ab.basis,
        });
    }
    if sigma_ab.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: sigma_ab.dim(),
        });
    }
    let nu = raw_symplectic_spectrum(&sigma_ab.sigma).map_err(|_| Error::Unphysical {
        min_symplectic: f64::NAN,
    })?;
    if nu[0] < 0.5 - PHYSICALITY_TOL {
        return Err(Error::Unphysical { min_symplectic: nu[0] });
    }
    let q = fisher_quadratic_form(&sigma_ab.sigma);
    // D = [[0, 0, 1/2], [0, -1, 0], [1/2, 0, 0]]; D^-1 swaps rows 0 and 2 with factor 2
    let m = Matrix3::new(
        2.0 * q[(2, 0)],
        2.0 * q[(2, 1)],
        2.0 * q[(2, 2)],
        -q[(1, 0)],
        -q[(1, 1)],
        -q[(1, 2)],
        2.0 * q[(0, 0)],
        2.0 * q[(0, 1)],
        2.0 * q[(0, 2)],
    );
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    let roots = real_cubic_roots(-m.trace(), minors, -m.determinant());
    Ok((0.25 * roots[2]).max(0.0))
}

/// `Q` with `F(G) = g^T Q g` for `g = (G11, G12, G22)`.
fn fisher_quadratic_form(v: &DMatrix<f64>) -> Matrix3<f64> {
    let j = symplectic_form(2);
    let m = v.kronecker(v) - j.kronecker(&j) * 0.25;
    let eig = SymmetricEigen::new(m);
    let scale = eig.eigenvalues.amax();
    let cutoff = 1e-12 * scale.max(1e-300);
    let inv_vals = eig.eigenvalues.map(|x| if x.abs() > cutoff { 1.0 / x } else { 0.0 });
    let pinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    let basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let derivs: Vec<DVector<f64>> = basis
        .iter()
        .map(|&[g11, g12, g22]| {
            // J_1 G with J_1 = [[0, 1], [-1, 0]], embedded on (q_A, p_A)
            let mut k = DMatrix::zeros(4, 4);
            k[(0, 0)] = g12;
            k[(0, 2)] = g22;
            k[(2, 0)] = -g11;
            k[(2, 2)] = -g12;
            let dv = &k * v + v * k.transpose();
            DVector::from_column_slice(dv.as_slice())
        })
        .collect();
    Matrix3::from_fn(|a, b| 0.5 * derivs[a].dot(&(&pinv * &derivs[b])))
}

/// GIP with the phase on the requested mode.
pub fn gip_with_phase(sigma_ab: &CovarianceState, phase: PhaseMode) -> Result<f64> {
    match phase {
        PhaseMode::A => gip(sigma_ab),
        PhaseMode::B => gip(&sigma_ab.reduced(&[1, 0])),
    }
}

/// `Q(t)` for the probe with mode A coupled to the network through `cs`.
///
/// Uses the reduced channel on A, which equals extracting the probe block of
/// the full joint evolution for an eigenmode-diagonal network state.
pub fn gip_trajectory(cs: &CoupledSystem, probe: &ProbeSpec, network_temperature: f64, times: &[f64]) -> Result<Vec<f64>> {
    let network = thermal_eigenbasis(&cs.eig, network_temperature)?;
    let freqs = [cs.omega_s, cs.omega_s];
    let initial = from_dimensionless(&probe.state()?, &freqs, Basis::Eigenmode)?;
    times
        .iter()
        .map(|&t| {
            let ch = cs.channel(&network, t)?;
            let evolved = CovarianceState {
                sigma: ch.apply_to_pair(&initial.sigma),
                basis: Basis::Eigenmode,
                mode_frequencies: freqs.to_vec(),
            };
            gip_with_phase(&to_dimensionless(&evolved, &freqs)?, probe.phase)
        })
        .collect()
}

/// Sum of the positive increments of `q`.
pub fn n_gip(q: &[f64]) -> f64 {
    let rises: Vec<f64> = q.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    pairwise_sum(&rises)
}

/// `[0, dt, 2 dt, ..., t_end]`.
pub fn uniform_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && t_end >= 0.0) {
        return Err(Error::InvalidParameter(format!("invalid grid: t_end = {t_end}, dt = {dt}")));
    }
    let steps = (t_end / dt).round() as usize;
    Ok((0..=steps).map(|k| k as f64 * dt).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessMetadata {
    pub graph_seed: Option<u64>,
    pub node: usize,
    pub k: f64,
    pub network_temperature: f64,
    pub omega_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessResult {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    pub n_gip: f64,
    pub metadata: WitnessMetadata,
}

impl WitnessResult {
    /// `t,Q`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,Q\n");
        for (t, q) in self.times.iter().zip(&self.q) {
            let _ = writeln!(out, "{t:e},{q:e}");
        }
        out
    }
}

pub fn witness(
    cs: &CoupledSystem,
    probe: &ProbeSpec,
    network_temperature: f64,
    times: &[f64],
    graph_seed: Option<u64>,
) -> Result<WitnessResult> {
    let q = gip_trajectory(cs, probe, network_temperature, times)?;
    Ok(WitnessResult {
        times: times.to_vec(),
        n_gip: n_gip(&q),
        q,
        metadata: WitnessMetadata {
            graph_seed,
            node: cs.node,
            k: cs.k,
            network_temperature,
            omega_s: cs.omega_s,
        },
    })
}

/// Ensemble protocol shared by all families of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSettings {
    pub k: f64,
    #[serde(default)]
    pub network_temperature: f64,
    #[serde(default)]
    pub probe: ProbeSpec,
    pub realizations: usize,
    #[serde(default = "default_bare_frequency")]
    pub bare_frequency: f64,
    /// 1-based rank of the network eigenfrequency used as `omega_S`.
    #[serde(default = "default_frequency_rank")]
    pub frequency_rank: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_bare_frequency() -> f64 {
    DEFAULT_BARE_FREQUENCY
}

fn default_frequency_rank() -> usize {
    15
}

fn default_t_end() -> f64 {
    50.0
}

fn default_dt() -> f64 {
    0.1
}

impl EnsembleSettings {
    pub fn new(k: f64, network_temperature: f64, realizations: usize) -> Self {
        EnsembleSettings {
            k,
            network_temperature,
            probe: ProbeSpec::default(),
            realizations,
            bare_frequency: DEFAULT_BARE_FREQUENCY,
            frequency_rank: default_frequency_rank(),
            t_end: default_t_end(),
            dt: default_dt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations < 1 {
            return Err(Error::InvalidParameter("need at least one realization".into()));
        }
        if !(self.k >= 0.0 && self.network_temperature >= 0.0 && self.bare_frequency > 0.0) {
            return Err(Error::InvalidParameter(
                "k and temperature must be non-negative, bare frequency positive".into(),
            ));
        }
        if self.frequency_rank < 1 {
            return Err(Error::InvalidParameter("frequency rank is 1-based".into()));
        }
        uniform_grid(self.t_end, self.dt).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub realization: usize,
    pub seed: u64,
    pub node: usize,
    pub omega_s: f64,
    pub n_gip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationFailure {
    pub realization: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub family: String,
    pub parameter: f64,
    pub k: f64,
    pub network_temperature: f64,
    pub requested: usize,
    pub mean: f64,
    pub stderr: f64,
    pub values: Vec<RealizationRecord>,
    pub failures: Vec<RealizationFailure>,
}

impl EnsembleResult {
    /// Number of realizations that entered the mean.
    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// Seed of realization `r` of family `f`.
pub fn realization_seed(master: u64, family_index: usize, realization: usize) -> u64 {
    derive_seed(derive_seed(master, family_index as u64), realization as u64)
}

/// One realization: graph from `seed`, attachment node uniform, `omega_S`
/// at the configured eigenfrequency rank.
pub fn run_realization(spec: &GraphSpec, settings: &EnsembleSettings, seed: u64) -> Result<WitnessResult> {
    let (graph, shifts) = spec.generate(seed)?;
    let w0 = settings.bare_frequency;
    let bare = shifts.iter().map(|s| (w0 * w0 + s).sqrt()).collect();
    let net = OscillatorNetwork::new(bare, graph)?;
    let eig = diagonalize(&assemble_a(&net))?;
    let omega_s = eig.nth_frequency(settings.frequency_rank).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "frequency rank {} exceeds network size {}",
            settings.frequency_rank,
            eig.n()
        ))
    })?;
    let node = rng_from_seed(derive_seed(seed, 0)).random_range(0..net.n());
    let cs = attach(&eig, omega_s, settings.k, node)?;
    let times = uniform_grid(settings.t_end, settings.dt)?;
    witness(&cs, &settings.probe, settings.network_temperature, &times, Some(seed))
}

/// Runs every family for `settings.realizations` realizations in parallel.
/// Failed realizations are excluded from the statistics and listed.
pub fn ensemble(families: &[GraphSpec], settings: &EnsembleSettings, master_seed: u64) -> Result<Vec<EnsembleResult>> {
    settings.validate()?;
    for spec in families {
        spec.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..families.len())
        .flat_map(|f| (0..settings.realizations).map(move |r| (f, r)))
        .collect();
    let outcomes: Vec<(u64, Result<WitnessResult>)> = jobs
        .par_iter()
        .map(|&(f, r)| {
            let seed = realization_seed(master_seed, f, r);
            (seed, run_realization(&families[f], settings, seed))
        })
        .collect();
    let mut results = Vec::with_capacity(families.len());
    for (f, spec) in families.iter().enumerate() {
        let mut values = Vec::new();
        let mut failures = Vec::new();
        for r in 0..settings.realizations {
            let (seed, outcome) = &outcomes[f * settings.realizations + r];
            match outcome {
                Ok(w) => values.push(RealizationRecord {
                    realization: r,
                    seed: *seed,
                    node: w.metadata.node,
                    omega_s: w.metadata.omega_s,
                    n_gip: w.n_gip,
                }),
                Err(e) => failures.push(RealizationFailure {
                    realization: r,
                    seed: *seed,
                    reason: e.to_string(),
                }),
            }
        }
        let (mean, stderr) = mean_stderr(&values.iter().map(|v| v.n_gip).collect::<Vec<_>>());
        results.push(EnsembleResult {
            family: spec.family.name().to_string(),
            parameter: spec.family.parameter(),
            k: settings.k,
            network_temperature: settings.network_temperature,
            requested: settings.realizations,
            mean,
            stderr,
            values,
            failures,
        });
    }
    Ok(results)
}

/// Sample mean and standard error (`NaN` mean for an empty sample).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub const ENSEMBLE_CSV_HEADER: &str = "family,param,k,T,realization,seed,node,omega_S,n_gip";
pub const SUMMARY_CSV_HEADER: &str = "family,param,k,T,mean,stderr,count";

pub fn ensemble_csv(results: &[EnsembleResult]) -> String {
    let mut out = format!("{ENSEMBLE_CSV_HEADER}\n");
    for res in results {
        for v in &res.values {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{:e},{:e}",
                res.family, res.parameter, res.k, res.network_temperature, v.realization, v.seed, v.node, v.omega_s, v.n_gip
            );
        }
    }
    out
}

pub fn summary_csv(results: &[EnsembleResult]) -> String {
    let mut out = format!("{SUMMARY_CSV_HEADER}\n");
    for res in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{:e},{:e},{}",
            res.family,
            res.parameter,
            res.k,
            res.network_temperature,
            res.mean,
            res.stderr,
            res.count()
        );
    }
    out
}
