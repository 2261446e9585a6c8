//! Network topologies used as structured environments.
//!
//! Every generator returns a connected [`WeightedGraph`] with a symmetric,
//! zero-diagonal weight matrix. Random families are pure functions of their
//! parameters and a 64-bit seed.

use std::collections::VecDeque;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on whole-graph rejection resampling.
pub const DEFAULT_MAX_ATTEMPTS: u64 = 1_000_000;

/// Uniform coupling strength used by the random-network experiments.
pub const DEFAULT_COUPLING: f64 = 0.05;

/// Bare frequency shared by all oscillators in the experiments.
pub const DEFAULT_BARE_FREQUENCY: f64 = 0.25;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-realization seed: the master seed XOR-folded with the scrambled
/// realization index, then passed through the 64-bit finalizer.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric weighted graph with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: DMatrix<f64>,
}

impl WeightedGraph {
    /// Graph without links.
    pub fn empty(n: usize) -> Self {
        WeightedGraph {
            weights: DMatrix::zeros(n, n),
        }
    }

    /// Builds a graph from `(i, j, w)` triples. Duplicate pairs must agree.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut g = WeightedGraph::empty(n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::GraphFormat(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::GraphFormat(format!("self-loop at node {i}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::GraphFormat(format!("invalid weight {w} on edge ({i}, {j})")));
            }
            let prev = g.weights[(i, j)];
            if prev != 0.0 && prev != w {
                return Err(Error::GraphFormat(format!(
                    "asymmetric duplicate for pair ({i}, {j}): {prev} vs {w}"
                )));
            }
            g.set_weight(i, j, w);
        }
        Ok(g)
    }

    /// Wraps a weight matrix after checking the graph invariants.
    pub fn from_matrix(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(Error::DimensionMismatch {
                expected: weights.nrows(),
                found: weights.ncols(),
            });
        }
        let n = weights.nrows();
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::GraphFormat(format!("nonzero diagonal at node {i}")));
            }
            for j in 0..i {
                let w = weights[(i, j)];
                if w != weights[(j, i)] {
                    return Err(Error::GraphFormat(format!("asymmetric weight at ({i}, {j})")));
                }
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::GraphFormat(format!("invalid weight {w} at ({i}, {j})")));
                }
            }
        }
        Ok(WeightedGraph { weights })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    fn set_weight(&mut self, i: usize, j: usize, w: f64) {
        self.weights[(i, j)] = w;
        self.weights[(j, i)] = w;
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weights[(i, j)] != 0.0
    }

    /// Edges `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[(i, j)];
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.weights.row(i).iter().filter(|w| **w != 0.0).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    /// `sum_j w_ij`, the quadratic frequency shift absorbed by node `i`.
    pub fn strength(&self, i: usize) -> f64 {
        self.weights.row(i).iter().sum()
    }

    /// Graph Laplacian `D - V`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut l = -self.weights.clone();
        for i in 0..n {
            l[(i, i)] = self.strength(i);
        }
        l
    }
}

/// Breadth-first reachability over nonzero weights.
pub fn is_connected(graph: &WeightedGraph) -> bool {
    let n = graph.n();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if !seen[v] && graph.has_edge(u, v) {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == n
}

fn check_coupling(g: f64) -> Result<()> {
    if g.is_finite() && g > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("coupling must be positive, got {g}")))
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")))
    }
}

/// G(N, p) conditioned on connectedness by resampling the whole graph.
pub fn erdos_renyi(n: usize, p: f64, g: f64, seed: u64) -> Result<WeightedGraph> {
    erdos_renyi_capped(n, p, g, seed, DEFAULT_MAX_ATTEMPTS)
}

pub fn erdos_renyi_capped(
    n: usize,
    p: f64,
    g: f64,
    seed: u64,
    max_attempts: u64,
) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 nodes, got {n}")));
    }
    check_probability(p)?;
    if p == 0.0 {
        return Err(Error::InvalidParameter("p = 0 never yields a connected graph".into()));
    }
    check_coupling(g)?;
    let mut rng = rng_from_seed(seed);
    for _ in 0..max_attempts {
        let mut graph = WeightedGraph::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    graph.set_weight(i, j, g);
                }
            }
        }
        if is_connected(&graph) {
            return Ok(graph);
        }
    }
    Err(Error::Infeasible {
        attempts: max_attempts,
    })
}

/// Preferential attachment grown from a 3-node path. Each new node adds `l`
/// distinct links, drawn one at a time with probability proportional to the
/// current degree of the remaining candidates.
pub fn barabasi_albert(n: usize, l: usize, g: f64, seed: u64) -> Result<WeightedGraph> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 nodes, got {n}")));
    }
    if !(1..=3).contains(&l) {
        return Err(Error::InvalidParameter(format!(
            "links per node must be in 1..=3 for a 3-node seed, got {l}"
        )));
    }
    check_coupling(g)?;
    let mut rng = rng_from_seed(seed);
    let mut graph = WeightedGraph::empty(n);
    graph.set_weight(0, 1, g);
    graph.set_weight(1, 2, g);
    let mut degree = vec![0usize; n];
    degree[0] = 1;
    degree[1] = 2;
    degree[2] = 1;

    for v in 3..n {
        let mut targets: Vec<usize> = Vec::with_capacity(l);
        for _ in 0..l {
            let total: usize = (0..v).filter(|u| !targets.contains(u)).map(|u| degree[u]).sum();
            let mut pick = rng.random_range(0..total);
            let mut chosen = None;
            for u in (0..v).filter(|u| !targets.contains(u)) {
                if pick < degree[u] {
                    chosen = Some(u);
                    break;
                }
                pick -= degree[u];
            }
            targets.push(chosen.expect("degree weights cover the draw"));
        }
        for &u in &targets {
            graph.set_weight(v, u, g);
            degree[u] += 1;
        }
        degree[v] = l;
    }
    Ok(graph)
}

/// Ring lattice with links to all neighbors up to range `k`, each link
/// rewired with probability `p`. The link count is always `k * n`.
pub fn watts_strogatz(n: usize, p: f64, k: usize, g: f64, seed: u64) -> Result<WeightedGraph> {
    watts_strogatz_capped(n, p, k, g, seed, DEFAULT_MAX_ATTEMPTS)
}

pub fn watts_strogatz_capped(
    n: usize,
    p: f64,
    k: usize,
    g: f64,
    seed: u64,
    max_attempts: u64,
) -> Result<WeightedGraph> {
    if k < 1 || n < 2 * k + 1 {
        return Err(Error::InvalidParameter(format!(
            "Watts-Strogatz needs k >= 1 and n >= 2k + 1, got n = {n}, k = {k}"
        )));
    }
    check_probability(p)?;
    check_coupling(g)?;
    let mut rng = rng_from_seed(seed);

    let mut ring = Vec::with_capacity(n * k);
    for d in 1..=k {
        for i in 0..n {
            let j = (i + d) % n;
            ring.push((i.min(j), i.max(j)));
        }
    }

    for _ in 0..max_attempts {
        let mut graph = WeightedGraph::empty(n);
        for &(a, b) in &ring {
            graph.set_weight(a, b, g);
        }
        for &(a, b) in &ring {
            if rng.random::<f64>() >= p {
                continue;
            }
            // keep the lower-index endpoint, move the other one
            let free: Vec<usize> = (0..n).filter(|&c| c != a && !graph.has_edge(a, c)).collect();
            if free.is_empty() {
                continue;
            }
            let c = free[rng.random_range(0..free.len())];
            graph.set_weight(a, b, 0.0);
            graph.set_weight(a, c, g);
        }
        if is_connected(&graph) {
            return Ok(graph);
        }
    }
    Err(Error::Infeasible {
        attempts: max_attempts,
    })
}

/// Open chain with nearest (`g1`) and next-nearest (`g2`) neighbor links.
#[derive(Debug, Clone)]
pub struct Chain {
    pub graph: WeightedGraph,
    /// Additive shifts to the squared bare frequencies. Zero unless the
    /// chain was homogenized, in which case every node ends up with the
    /// bulk effective frequency.
    pub squared_frequency_shifts: Vec<f64>,
}

impl Chain {
    /// Bare frequencies after applying the shifts to a uniform `omega0`.
    pub fn bare_frequencies(&self, omega0: f64) -> Vec<f64> {
        self.squared_frequency_shifts
            .iter()
            .map(|s| (omega0 * omega0 + s).sqrt())
            .collect()
    }
}

pub fn chain_nnn(n: usize, g1: f64, g2: f64, homogenize: bool) -> Result<Chain> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("chain needs at least 3 nodes, got {n}")));
    }
    if !(g1 >= 0.0 && g2 >= 0.0) {
        return Err(Error::InvalidParameter("chain couplings must be non-negative".into()));
    }
    let mut graph = WeightedGraph::empty(n);
    for i in 0..n {
        if i + 1 < n && g1 > 0.0 {
            graph.set_weight(i, i + 1, g1);
        }
        if i + 2 < n && g2 > 0.0 {
            graph.set_weight(i, i + 2, g2);
        }
    }
    let bulk = 2.0 * (g1 + g2);
    let squared_frequency_shifts = (0..n)
        .map(|i| if homogenize { bulk - graph.strength(i) } else { 0.0 })
        .collect();
    Ok(Chain {
        graph,
        squared_frequency_shifts,
    })
}

/// Moves one uniformly chosen link to a uniformly chosen absent pair, keeping
/// its weight; resampled until the result is connected.
pub fn rewire_single_link(graph: &WeightedGraph, seed: u64) -> Result<WeightedGraph> {
    rewire_single_link_capped(graph, seed, DEFAULT_MAX_ATTEMPTS)
}

pub fn rewire_single_link_capped(
    graph: &WeightedGraph,
    seed: u64,
    max_attempts: u64,
) -> Result<WeightedGraph> {
    let edges = graph.edges();
    if edges.is_empty() {
        return Err(Error::InvalidParameter("graph has no links to rewire".into()));
    }
    let n = graph.n();
    let absent: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !graph.has_edge(i, j))
        .collect();
    if absent.is_empty() {
        return Err(Error::SaturatedGraph);
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..max_attempts {
        let (a, b, w) = edges[rng.random_range(0..edges.len())];
        let (c, d) = absent[rng.random_range(0..absent.len())];
        let mut out = graph.clone();
        out.set_weight(a, b, 0.0);
        out.set_weight(c, d, w);
        if is_connected(&out) {
            return Ok(out);
        }
    }
    Err(Error::Infeasible {
        attempts: max_attempts,
    })
}

/// Family selector with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphFamily {
    ErdosRenyi { p: f64 },
    BarabasiAlbert { l: usize },
    WattsStrogatz { p: f64, k: usize },
    ChainNnn { g1: f64, g2: f64, homogenize: bool },
    Explicit { edges: Vec<(usize, usize, f64)> },
}

impl GraphFamily {
    pub fn name(&self) -> &'static str {
        match self {
            GraphFamily::ErdosRenyi { .. } => "erdos_renyi",
            GraphFamily::BarabasiAlbert { .. } => "barabasi_albert",
            GraphFamily::WattsStrogatz { .. } => "watts_strogatz",
            GraphFamily::ChainNnn { .. } => "chain_nnn",
            GraphFamily::Explicit { .. } => "explicit",
        }
    }

    /// The scalar swept in ensemble tables.
    pub fn parameter(&self) -> f64 {
        match self {
            GraphFamily::ErdosRenyi { p } => *p,
            GraphFamily::BarabasiAlbert { l } => *l as f64,
            GraphFamily::WattsStrogatz { p, .. } => *p,
            GraphFamily::ChainNnn { g2, .. } => *g2,
            GraphFamily::Explicit { .. } => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    #[serde(flatten)]
    pub family: GraphFamily,
    pub n: usize,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
}

fn default_coupling() -> f64 {
    DEFAULT_COUPLING
}

impl GraphSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 nodes, got {}", self.n)));
        }
        match &self.family {
            GraphFamily::ErdosRenyi { p } => check_probability(*p),
            GraphFamily::BarabasiAlbert { l } => {
                if *l < 1 || *l > 3 || *l > self.n - 1 {
                    Err(Error::InvalidParameter(format!("invalid links per node {l}")))
                } else {
                    Ok(())
                }
            }
            GraphFamily::WattsStrogatz { p, k } => {
                check_probability(*p)?;
                if 2 * k >= self.n {
                    Err(Error::InvalidParameter(format!("need 2k < n, got k = {k}")))
                } else {
                    Ok(())
                }
            }
            GraphFamily::ChainNnn { .. } | GraphFamily::Explicit { .. } => Ok(()),
        }
    }

    /// Builds the graph; the chain family also yields squared-frequency shifts.
    pub fn generate(&self, seed: u64) -> Result<(WeightedGraph, Vec<f64>)> {
        self.validate()?;
        let zeros = || vec![0.0; self.n];
        Ok(match &self.family {
            GraphFamily::ErdosRenyi { p } => (erdos_renyi(self.n, *p, self.coupling, seed)?, zeros()),
            GraphFamily::BarabasiAlbert { l } => {
                (barabasi_albert(self.n, *l, self.coupling, seed)?, zeros())
            }
            GraphFamily::WattsStrogatz { p, k } => {
                (watts_strogatz(self.n, *p, *k, self.coupling, seed)?, zeros())
            }
            GraphFamily::ChainNnn { g1, g2, homogenize } => {
                let c = chain_nnn(self.n, *g1, *g2, *homogenize)?;
                (c.graph, c.squared_frequency_shifts)
            }
            GraphFamily::Explicit { edges } => {
                let g = WeightedGraph::from_edges(self.n, edges)?;
                if !is_connected(&g) {
                    return Err(Error::InvalidParameter("explicit graph is not connected".into()));
                }
                (g, zeros())
            }
        })
    }
}

/// On-disk network: 0-based edge list plus bare frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub bare_frequencies: Vec<f64>,
}

impl GraphFile {
    pub fn new(graph: &WeightedGraph, bare_frequencies: Vec<f64>) -> Self {
        GraphFile {
            n: graph.n(),
            edges: graph.edges(),
            bare_frequencies,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates; returns the graph and the bare frequencies.
    pub fn parse(text: &str) -> Result<(WeightedGraph, Vec<f64>)> {
        let file: GraphFile = serde_json::from_str(text)?;
        if file.bare_frequencies.len() != file.n {
            return Err(Error::DimensionMismatch {
                expected: file.n,
                found: file.bare_frequencies.len(),
            });
        }
        let graph = WeightedGraph::from_edges(file.n, &file.edges)?;
        Ok((graph, file.bare_frequencies))
    }

    pub fn read(path: &Path) -> Result<(WeightedGraph, Vec<f64>)> {
        GraphFile::parse(&std::fs::read_to_string(path)?)
    }
}
