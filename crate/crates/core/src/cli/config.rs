//! JSON run configurations, their defaults, and the named presets.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::{GraphFamily, GraphFile, GraphSpec, WeightedGraph, DEFAULT_BARE_FREQUENCY, DEFAULT_COUPLING};
use crate::nonmarkov::{uniform_grid, ProbeSpec};

/// A network either generated from a family or read from a graph file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default = "default_bare_frequency")]
    pub bare_frequency: f64,
    /// Graph seed; derived from the run seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_bare_frequency() -> f64 {
    DEFAULT_BARE_FREQUENCY
}

impl NetworkConfig {
    pub fn generated(graph: GraphSpec) -> Self {
        NetworkConfig {
            graph: Some(graph),
            file: None,
            bare_frequency: DEFAULT_BARE_FREQUENCY,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.graph, &self.file) {
            (Some(g), None) => g.validate()?,
            (None, Some(path)) => {
                GraphFile::read(path)?;
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "network needs exactly one of `graph` or `file`".into(),
                ))
            }
        }
        if !(self.bare_frequency > 0.0) {
            return Err(Error::InvalidParameter("bare frequency must be positive".into()));
        }
        Ok(())
    }

    /// Graph and bare frequencies.
    pub fn build(&self, seed: u64) -> Result<(WeightedGraph, Vec<f64>)> {
        if let Some(path) = &self.file {
            return GraphFile::read(path);
        }
        let spec = self
            .graph
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("network has no graph".into()))?;
        let (graph, shifts) = spec.generate(self.seed.unwrap_or(seed))?;
        let w0 = self.bare_frequency;
        let bare = shifts.iter().map(|s| (w0 * w0 + s).sqrt()).collect();
        Ok((graph, bare))
    }
}

fn fig1_chain() -> NetworkConfig {
    NetworkConfig::generated(GraphSpec {
        family: GraphFamily::ChainNnn {
            g1: 0.1,
            g2: 0.02,
            homogenize: true,
        },
        n: 100,
        coupling: DEFAULT_COUPLING,
    })
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

fn check_non_negative(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be non-negative, got {x}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub network: NetworkConfig,
    #[serde(default)]
    pub node: usize,
    pub k: f64,
    #[serde(default)]
    pub system_temperature: f64,
    #[serde(default)]
    pub network_temperature: f64,
    /// Observation window; the recurrence onset of the kernel when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_kernel_dt")]
    pub kernel_dt: f64,
    #[serde(default = "default_omega_points")]
    pub omega_points: usize,
    /// Probe frequencies; evenly spread over the central band when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_frequencies: Option<Vec<f64>>,
    #[serde(default = "default_probe_points")]
    pub probe_points: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_kernel_dt() -> f64 {
    0.1
}

fn default_omega_points() -> usize {
    400
}

fn default_probe_points() -> usize {
    10
}

impl SpectralConfig {
    pub fn fig1() -> Self {
        SpectralConfig {
            network: fig1_chain(),
            node: 0,
            k: 0.01,
            system_temperature: 1.0,
            network_temperature: 0.0,
            t_max: None,
            kernel_dt: default_kernel_dt(),
            omega_points: default_omega_points(),
            probe_frequencies: None,
            probe_points: default_probe_points(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        check_non_negative("k", self.k)?;
        check_non_negative("system temperature", self.system_temperature)?;
        check_non_negative("network temperature", self.network_temperature)?;
        check_positive("kernel dt", self.kernel_dt)?;
        if let Some(t) = self.t_max {
            check_positive("t_max", t)?;
        }
        if self.omega_points < 2 || self.probe_points < 1 {
            return Err(Error::InvalidParameter("need >= 2 omega points and >= 1 probe point".into()));
        }
        if let Some(f) = &self.probe_frequencies {
            for &w in f {
                check_positive("probe frequency", w)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportCase {
    pub label: String,
    pub network: NetworkConfig,
    /// Excited node; drawn from the run seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
    /// Move one random link before running.
    #[serde(default)]
    pub rewire: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub cases: Vec<TransportCase>,
    #[serde(default = "default_transport_t_end")]
    pub t_end: f64,
    #[serde(default = "default_transport_dt")]
    pub dt: f64,
    #[serde(default = "default_front_fraction")]
    pub front_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_transport_t_end() -> f64 {
    400.0
}

fn default_transport_dt() -> f64 {
    4.0
}

fn default_front_fraction() -> f64 {
    0.1
}

impl TransportConfig {
    pub fn fig2() -> Self {
        let random = NetworkConfig::generated(GraphSpec {
            family: GraphFamily::BarabasiAlbert { l: 1 },
            n: 100,
            coupling: DEFAULT_COUPLING,
        });
        TransportConfig {
            cases: vec![
                TransportCase {
                    label: "chain".into(),
                    network: fig1_chain(),
                    site: Some(0),
                    rewire: false,
                },
                TransportCase {
                    label: "chain_rewired".into(),
                    network: fig1_chain(),
                    site: Some(0),
                    rewire: true,
                },
                TransportCase {
                    label: "random".into(),
                    network: random,
                    site: None,
                    rewire: false,
                },
            ],
            t_end: default_transport_t_end(),
            dt: default_transport_dt(),
            front_fraction: default_front_fraction(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cases.is_empty() {
            return Err(Error::InvalidParameter("transport needs at least one case".into()));
        }
        let mut labels: Vec<&str> = self.cases.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.cases.len() {
            return Err(Error::InvalidParameter("case labels must be unique".into()));
        }
        for case in &self.cases {
            if case.label.is_empty() || !case.label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::InvalidParameter(format!("invalid case label {:?}", case.label)));
            }
            case.network.validate()?;
        }
        check_positive("front fraction", self.front_fraction)?;
        uniform_grid(self.t_end, self.dt).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonmarkovConfig {
    pub network: NetworkConfig,
    /// Attachment node; drawn from the run seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    pub k: f64,
    #[serde(default)]
    pub network_temperature: f64,
    #[serde(default)]
    pub probe: ProbeSpec,
    /// System frequency; the network eigenfrequency of `frequency_rank` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_s: Option<f64>,
    #[serde(default = "default_frequency_rank")]
    pub frequency_rank: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
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

fn fig4_er() -> GraphSpec {
    GraphSpec {
        family: GraphFamily::ErdosRenyi { p: 0.2 },
        n: 30,
        coupling: DEFAULT_COUPLING,
    }
}

impl NonmarkovConfig {
    pub fn fig4() -> Self {
        NonmarkovConfig {
            network: NetworkConfig::generated(fig4_er()),
            node: None,
            k: 0.01,
            network_temperature: 0.0,
            probe: ProbeSpec::default(),
            omega_s: None,
            frequency_rank: default_frequency_rank(),
            t_end: default_t_end(),
            dt: default_dt(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        check_non_negative("k", self.k)?;
        check_non_negative("network temperature", self.network_temperature)?;
        validate_probe(&self.probe)?;
        if let Some(w) = self.omega_s {
            check_positive("omega_s", w)?;
        }
        if self.frequency_rank < 1 {
            return Err(Error::InvalidParameter("frequency rank is 1-based".into()));
        }
        uniform_grid(self.t_end, self.dt).map(|_| ())
    }
}

fn validate_probe(p: &ProbeSpec) -> Result<()> {
    check_non_negative("squeezing", p.r)?;
    check_non_negative("n_a", p.n_a)?;
    check_non_negative("n_b", p.n_b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub families: Vec<GraphSpec>,
    pub couplings: Vec<f64>,
    #[serde(default = "default_temperatures")]
    pub network_temperatures: Vec<f64>,
    pub realizations: usize,
    #[serde(default)]
    pub probe: ProbeSpec,
    #[serde(default = "default_bare_frequency")]
    pub bare_frequency: f64,
    #[serde(default = "default_frequency_rank")]
    pub frequency_rank: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_temperatures() -> Vec<f64> {
    vec![0.0]
}

impl EnsembleConfig {
    pub fn fig4() -> Self {
        let n = 30;
        let spec = |family| GraphSpec {
            family,
            n,
            coupling: DEFAULT_COUPLING,
        };
        let mut families: Vec<GraphSpec> = (1..=3).map(|l| spec(GraphFamily::BarabasiAlbert { l })).collect();
        families.extend([0.1, 0.2, 0.3, 0.4, 0.5].map(|p| spec(GraphFamily::ErdosRenyi { p })));
        families.extend([0.1, 0.3, 0.5, 0.7, 0.9].map(|p| spec(GraphFamily::WattsStrogatz { p, k: 2 })));
        EnsembleConfig {
            families,
            couplings: vec![0.005, 0.01, 0.02],
            network_temperatures: default_temperatures(),
            realizations: 100,
            probe: ProbeSpec::default(),
            bare_frequency: DEFAULT_BARE_FREQUENCY,
            frequency_rank: default_frequency_rank(),
            t_end: default_t_end(),
            dt: default_dt(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() || self.couplings.is_empty() || self.network_temperatures.is_empty() {
            return Err(Error::InvalidParameter(
                "families, couplings and temperatures must be non-empty".into(),
            ));
        }
        if self.realizations < 1 {
            return Err(Error::InvalidParameter("need at least one realization".into()));
        }
        for f in &self.families {
            f.validate()?;
        }
        for &k in &self.couplings {
            check_non_negative("k", k)?;
        }
        for &t in &self.network_temperatures {
            check_non_negative("network temperature", t)?;
        }
        check_positive("bare frequency", self.bare_frequency)?;
        validate_probe(&self.probe)?;
        if self.frequency_rank < 1 {
            return Err(Error::InvalidParameter("frequency rank is 1-based".into()));
        }
        uniform_grid(self.t_end, self.dt).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    /// `J(w) = eta w exp(-w / cutoff_frequency)`
    OhmicExponential { eta: f64, cutoff_frequency: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Cell midpoints `(i - 1/2) dw`.
    Midpoint,
    /// Right cell edges `i dw`.
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeConfig {
    pub density: DensityConfig,
    pub samples: usize,
    pub omega_max: f64,
    #[serde(default = "default_sampling")]
    pub sampling: Sampling,
    #[serde(default = "default_discretize_t_end")]
    pub t_end: f64,
    #[serde(default = "default_discretize_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_sampling() -> Sampling {
    Sampling::Midpoint
}

fn default_discretize_t_end() -> f64 {
    100.0
}

fn default_discretize_dt() -> f64 {
    0.05
}

impl DiscretizeConfig {
    pub fn ohmic() -> Self {
        DiscretizeConfig {
            density: DensityConfig::OhmicExponential {
                eta: 1.0,
                cutoff_frequency: 5.0,
            },
            samples: 300,
            omega_max: 25.0,
            sampling: Sampling::Midpoint,
            t_end: default_discretize_t_end(),
            dt: default_discretize_dt(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let DensityConfig::OhmicExponential { eta, cutoff_frequency } = self.density;
        check_non_negative("eta", eta)?;
        check_positive("cutoff frequency", cutoff_frequency)?;
        check_positive("omega_max", self.omega_max)?;
        if self.samples < 2 {
            return Err(Error::InvalidParameter("need at least two samples".into()));
        }
        uniform_grid(self.t_end, self.dt).map(|_| ())
    }

    pub fn sample_frequencies(&self) -> Vec<f64> {
        let dw = self.omega_max / self.samples as f64;
        let offset = match self.sampling {
            Sampling::Midpoint => 0.5,
            Sampling::Right => 1.0,
        };
        (0..self.samples).map(|i| (i as f64 + offset) * dw).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_validate_cases")]
    pub cases: usize,
    #[serde(default = "default_validate_max_nodes")]
    pub max_nodes: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_validate_cases() -> usize {
    50
}

fn default_validate_max_nodes() -> usize {
    30
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            cases: default_validate_cases(),
            max_nodes: default_validate_max_nodes(),
            seed: 0,
        }
    }
}

impl ValidateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cases < 1 || self.max_nodes < 3 {
            return Err(Error::InvalidParameter("need >= 1 case and >= 3 nodes".into()));
        }
        Ok(())
    }
}

/// Parses a config file. A manifest written by a previous run is accepted
/// too; its embedded resolved config is used.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let inner = match value.get("resolved_config") {
        Some(cfg) if value.get("command").is_some() => cfg.clone(),
        _ => value,
    };
    Ok(serde_json::from_value(inner)?)
}
