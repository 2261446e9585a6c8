//! Subcommand pipelines. Each one returns its output files in memory so the
//! runner can decide whether anything is written.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{
    DensityConfig, DiscretizeConfig, EnsembleConfig, NonmarkovConfig, SpectralConfig, TransportConfig, ValidateConfig,
};
use super::validate::run_suite;
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble_a, diagonalize, EigenSystem, OscillatorNetwork};
use crate::netgen::{derive_seed, rewire_single_link, rng_from_seed, WeightedGraph};
use crate::nonmarkov::{ensemble, ensemble_csv, summary_csv, uniform_grid, witness, EnsembleSettings};
use crate::opensys::{attach, CHANNEL_CSV_HEADER};
use crate::spectral::{
    continuum_damping_kernel, damping_kernel, default_t_max, discretize_bath, kernel_csv, probe_spectrum,
    recurrence_onset, windowed_spectral_density, ContinuumDensity, ModeCouplings, ProbeProtocol,
};
use crate::transport::{
    excitation_trajectory, front_position, local_excitation_state, map_distance, mean_participation_ratio,
    participation_ratio,
};

/// Result of a pipeline before anything touches the disk.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
    pub metrics: Value,
    pub seeds: Value,
    pub failures: Vec<Value>,
    /// Set when the run completed but must be reported as a runtime failure.
    pub runtime_failure: Option<String>,
    /// Set when the invariant suite found violations.
    pub invariant_failure: Option<String>,
}

fn build_network(graph: WeightedGraph, bare: Vec<f64>) -> Result<(OscillatorNetwork, EigenSystem)> {
    let net = OscillatorNetwork::new(bare, graph)?;
    let eig = diagonalize(&assemble_a(&net))?;
    Ok((net, eig))
}

fn check_node(node: usize, n: usize) -> Result<()> {
    if node >= n {
        return Err(Error::InvalidParameter(format!("node {node} out of range for {n} nodes")));
    }
    Ok(())
}

pub fn spectral(cfg: &SpectralConfig) -> Result<RunOutput> {
    let graph_seed = derive_seed(cfg.seed, 0);
    let (graph, bare) = cfg.network.build(graph_seed)?;
    let (_, eig) = build_network(graph, bare)?;
    check_node(cfg.node, eig.n())?;
    let mc = ModeCouplings::from_network(&eig, cfg.node, cfg.k);
    let t_max = cfg.t_max.unwrap_or_else(|| default_t_max(&mc));

    let times = uniform_grid(t_max, cfg.kernel_dt)?;
    let gamma: Vec<f64> = times.iter().map(|&t| damping_kernel(&mc, t)).collect();
    let g0 = gamma[0];
    let min_ratio = gamma.iter().map(|g| g.abs() / g0).fold(f64::INFINITY, f64::min);

    let lo = eig.omega[0];
    let hi = *eig.omega.last().unwrap_or(&lo);
    let width = (hi - lo).max(1e-3 * hi);
    let start = (lo - 0.25 * width).max(1e-3 * lo);
    let stop = hi + 0.25 * width;
    let m = cfg.omega_points;
    let grid: Vec<f64> = (0..m).map(|i| start + (stop - start) * i as f64 / (m - 1) as f64).collect();
    let density = windowed_spectral_density(&mc, t_max, &grid)?;

    let probe_freqs = cfg.probe_frequencies.clone().unwrap_or_else(|| {
        let p = cfg.probe_points;
        (0..p)
            .map(|i| {
                let x = if p == 1 { 0.5 } else { 0.2 + 0.6 * i as f64 / (p - 1) as f64 };
                lo + x * (hi - lo)
            })
            .collect()
    });
    let protocol = ProbeProtocol {
        node: cfg.node,
        k: cfg.k,
        system_temperature: cfg.system_temperature,
        network_temperature: cfg.network_temperature,
        t: t_max,
    };
    let points = probe_spectrum(&eig, &protocol, &probe_freqs)?;
    let mut probe_csv = String::from("omega_S,J_probe,J_windowed\n");
    for p in &points {
        let _ = writeln!(probe_csv, "{:e},{:e},{:e}", p.omega_s, p.j_probed, p.j_reference);
    }
    let mut modes_csv = String::from("omega,g\n");
    for (w, g) in mc.omega.iter().zip(&mc.g) {
        let _ = writeln!(modes_csv, "{w:e},{g:e}");
    }
    let within_20: usize = points
        .iter()
        .filter(|p| ((p.j_probed - p.j_reference) / p.j_reference).abs() < 0.2)
        .count();
    Ok(RunOutput {
        files: vec![
            ("kernel.csv".into(), kernel_csv(&times, &gamma)),
            ("spectral_density.csv".into(), density.to_csv()),
            ("probe.csv".into(), probe_csv),
            ("modes.csv".into(), modes_csv),
        ],
        metrics: json!({
            "t_max": t_max,
            "band": [lo, hi],
            "gamma0": g0,
            "min_kernel_ratio": min_ratio,
            "probe_points_within_20_percent": within_20,
            "probe_points": points.len(),
        }),
        seeds: json!({ "graph": graph_seed }),
        ..RunOutput::default()
    })
}

fn edge_difference(before: &WeightedGraph, after: &WeightedGraph) -> Value {
    let n = before.n();
    let mut removed = Vec::new();
    let mut added = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            match (before.has_edge(i, j), after.has_edge(i, j)) {
                (true, false) => removed.push([i, j]),
                (false, true) => added.push([i, j]),
                _ => {}
            }
        }
    }
    json!({ "removed": removed, "added": added })
}

pub fn transport(cfg: &TransportConfig) -> Result<RunOutput> {
    let times = uniform_grid(cfg.t_end, cfg.dt)?;
    let mut files = Vec::new();
    let mut records = Vec::new();
    let mut case_metrics = Vec::new();
    let mut seeds = serde_json::Map::new();
    for (i, case) in cfg.cases.iter().enumerate() {
        let case_seed = derive_seed(cfg.seed, i as u64);
        let graph_seed = derive_seed(case_seed, 0);
        let (mut graph, bare) = case.network.build(graph_seed)?;
        let mut rewired = Value::Null;
        if case.rewire {
            let moved = rewire_single_link(&graph, derive_seed(case_seed, 1))?;
            rewired = edge_difference(&graph, &moved);
            graph = moved;
        }
        let site = match case.site {
            Some(s) => s,
            None => rng_from_seed(derive_seed(case_seed, 2)).random_range(0..graph.n()),
        };
        check_node(site, graph.n())?;
        let (net, eig) = build_network(graph, bare)?;
        let initial = local_excitation_state(&net, &eig, site)?;
        let record = excitation_trajectory(&net, &eig, &initial, site, &times)?;

        let mut profile = String::from("t,participation_ratio,front\n");
        for (step, t) in times.iter().enumerate() {
            let pr = participation_ratio(&record, step).map(|x| format!("{x:e}")).unwrap_or_else(|_| "nan".into());
            let front = front_position(&record, step, cfg.front_fraction)
                .map(|j| j.to_string())
                .unwrap_or_default();
            let _ = writeln!(profile, "{t:e},{pr},{front}");
        }
        files.push((format!("heatmap_{}.csv", case.label), record.heatmap_csv()));
        files.push((format!("profile_{}.csv", case.label), profile));
        case_metrics.push(json!({
            "label": case.label,
            "site": site,
            "rewired": rewired,
            "mean_participation_ratio": mean_participation_ratio(&record)?,
        }));
        seeds.insert(case.label.clone(), json!({ "graph": graph_seed, "case": case_seed }));
        records.push(record);
    }
    for (i, m) in case_metrics.iter_mut().enumerate().skip(1) {
        if records[i].nodes() == records[0].nodes() {
            m["distance_to_first"] = json!(map_distance(&records[0], &records[i])?);
        }
    }
    Ok(RunOutput {
        files,
        metrics: json!({ "cases": case_metrics }),
        seeds: Value::Object(seeds),
        ..RunOutput::default()
    })
}

pub fn nonmarkov(cfg: &NonmarkovConfig) -> Result<RunOutput> {
    let graph_seed = derive_seed(cfg.seed, 0);
    let (graph, bare) = cfg.network.build(graph_seed)?;
    let (net, eig) = build_network(graph, bare)?;
    let omega_s = match cfg.omega_s {
        Some(w) => w,
        None => eig.nth_frequency(cfg.frequency_rank).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "frequency rank {} exceeds network size {}",
                cfg.frequency_rank,
                eig.n()
            ))
        })?,
    };
    let node = match cfg.node {
        Some(n) => n,
        None => rng_from_seed(derive_seed(cfg.seed, 1)).random_range(0..net.n()),
    };
    check_node(node, net.n())?;
    let cs = attach(&eig, omega_s, cfg.k, node)?;
    let times = uniform_grid(cfg.t_end, cfg.dt)?;
    let w = witness(&cs, &cfg.probe, cfg.network_temperature, &times, Some(graph_seed))?;
    let network = crate::gaussian::thermal_eigenbasis(&eig, cfg.network_temperature)?;
    let mut channel = format!("{CHANNEL_CSV_HEADER}\n");
    for &t in &times {
        let _ = writeln!(channel, "{}", cs.channel(&network, t)?.csv_row());
    }
    Ok(RunOutput {
        files: vec![("gip.csv".into(), w.to_csv()), ("channel.csv".into(), channel)],
        metrics: json!({
            "n_gip": w.n_gip,
            "node": node,
            "omega_s": omega_s,
            "q_initial": w.q.first(),
            "q_final": w.q.last(),
        }),
        seeds: json!({ "graph": graph_seed }),
        ..RunOutput::default()
    })
}

pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<RunOutput> {
    let mut all = Vec::new();
    for &k in &cfg.couplings {
        for &temperature in &cfg.network_temperatures {
            let settings = EnsembleSettings {
                k,
                network_temperature: temperature,
                probe: cfg.probe,
                realizations: cfg.realizations,
                bare_frequency: cfg.bare_frequency,
                frequency_rank: cfg.frequency_rank,
                t_end: cfg.t_end,
                dt: cfg.dt,
            };
            all.extend(ensemble(&cfg.families, &settings, cfg.seed)?);
        }
    }
    let mut failures = Vec::new();
    let mut empty = Vec::new();
    for res in &all {
        for f in &res.failures {
            failures.push(json!({
                "family": res.family,
                "param": res.parameter,
                "k": res.k,
                "T": res.network_temperature,
                "realization": f.realization,
                "seed": f.seed,
                "reason": f.reason,
            }));
        }
        if res.count() == 0 {
            empty.push(format!("{}({})", res.family, res.parameter));
        }
    }
    let seeds: Vec<Value> = cfg
        .families
        .iter()
        .enumerate()
        .map(|(f, spec)| {
            let list: Vec<u64> = (0..cfg.realizations)
                .map(|r| crate::nonmarkov::realization_seed(cfg.seed, f, r))
                .collect();
            json!({ "family": spec.family.name(), "param": spec.family.parameter(), "seeds": list })
        })
        .collect();
    let summary: Vec<Value> = all
        .iter()
        .map(|r| {
            json!({
                "family": r.family, "param": r.parameter, "k": r.k, "T": r.network_temperature,
                "mean": r.mean, "stderr": r.stderr, "count": r.count(), "failed": r.failures.len(),
            })
        })
        .collect();
    Ok(RunOutput {
        files: vec![
            ("ensemble.csv".into(), ensemble_csv(&all)),
            ("summary.csv".into(), summary_csv(&all)),
        ],
        metrics: json!({ "summary": summary }),
        seeds: json!(seeds),
        failures,
        runtime_failure: (!empty.is_empty()).then(|| format!("no successful realization for {}", empty.join(", "))),
        ..RunOutput::default()
    })
}

pub fn discretize(cfg: &DiscretizeConfig) -> Result<RunOutput> {
    let DensityConfig::OhmicExponential { eta, cutoff_frequency } = cfg.density;
    // the bath represents J on its sampled band (0, omega_max]
    let band = ContinuumDensity::new(move |w| eta * w * (-w / cutoff_frequency).exp(), cfg.omega_max);
    let samples = cfg.sample_frequencies();
    let mc = discretize_bath(&band, &samples)?;
    let times = uniform_grid(cfg.t_end, cfg.dt)?;
    let discrete: Vec<f64> = times.iter().map(|&t| damping_kernel(&mc, t)).collect();
    let continuum = times
        .par_iter()
        .map(|&t| continuum_damping_kernel(&band, t))
        .collect::<Result<Vec<f64>>>()?;
    let onset = recurrence_onset(&mc, 0.2, cfg.t_end, cfg.dt);
    let max_error = times
        .iter()
        .zip(discrete.iter().zip(&continuum))
        .filter(|(t, _)| **t < onset)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max);
    let mut bath = String::from("omega,g\n");
    for (w, g) in mc.omega.iter().zip(&mc.g) {
        let _ = writeln!(bath, "{w:e},{g:e}");
    }
    let mut comparison = String::from("t,gamma_discrete,gamma_continuum\n");
    for (t, (a, b)) in times.iter().zip(discrete.iter().zip(&continuum)) {
        let _ = writeln!(comparison, "{t:e},{a:e},{b:e}");
    }
    Ok(RunOutput {
        files: vec![("bath.csv".into(), bath), ("kernel_comparison.csv".into(), comparison)],
        metrics: json!({
            "recurrence_onset": onset,
            "uniform_recurrence_period": 2.0 * std::f64::consts::PI * cfg.samples as f64 / cfg.omega_max,
            "max_abs_error_before_onset": max_error,
            "total_weight": mc.total_weight(),
        }),
        ..RunOutput::default()
    })
}

pub fn validate(cfg: &ValidateConfig) -> Result<RunOutput> {
    let checks = run_suite(cfg)?;
    let mut csv = String::from("check,worst,tolerance,passed\n");
    for c in &checks {
        let _ = writeln!(csv, "{},{:e},{:e},{}", c.name, c.worst, c.tolerance, c.passed);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    Ok(RunOutput {
        files: vec![("validate.csv".into(), csv)],
        metrics: json!({ "checks": checks.len(), "failed": failed }),
        invariant_failure: (!failed.is_empty()).then(|| format!("failed checks: {}", failed.join(", "))),
        ..RunOutput::default()
    })
}
