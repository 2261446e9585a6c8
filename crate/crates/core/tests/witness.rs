//! Witness numerics, GIP trajectories along the joint evolution, and
//! ensemble reproducibility.

mod common;

use common::simpson;
use qnet::gaussian::{thermal_eigenbasis, to_dimensionless};
use qnet::hamiltonian::{assemble_a, diagonalize, OscillatorNetwork};
use qnet::netgen::{erdos_renyi, GraphFamily, GraphSpec};
use qnet::nonmarkov::{ensemble, gip, gip_trajectory, n_gip, uniform_grid, EnsembleResult, EnsembleSettings, ProbeSpec};
use qnet::opensys::attach;

fn q(t: f64) -> f64 {
    (-t).exp() * (1.0 + 0.3 * (4.0 * t).sin())
}

fn dq(t: f64) -> f64 {
    (-t).exp() * (1.2 * (4.0 * t).cos() - 1.0 - 0.3 * (4.0 * t).sin())
}

fn sampled(t_end: f64, dt: f64) -> f64 {
    let grid = uniform_grid(t_end, dt).unwrap();
    n_gip(&grid.iter().map(|&t| q(t)).collect::<Vec<_>>())
}

/// The rising stretches of this Q last only ~0.3, so the positive variation
/// needs dt <= 0.05 for halving to move it by less than 1%.
#[test]
fn n_gip_converges_under_refinement() {
    let oracle = simpson(0.0, 10.0, 400_000, |t| dq(t).max(0.0));
    let coarse = sampled(10.0, 0.05);
    let fine = sampled(10.0, 0.025);
    assert!(((coarse - fine) / fine).abs() < 0.01, "{coarse} vs {fine}");
    assert!(((coarse - oracle) / oracle).abs() < 0.01, "{coarse} vs {oracle}");
    // the default grid underestimates by a few percent, never overestimates
    let default_grid = sampled(10.0, 0.1);
    assert!(default_grid < oracle && (oracle - default_grid) / oracle < 0.06);
}

#[test]
fn trajectory_matches_joint_evolution() {
    let g = erdos_renyi(20, 0.3, 0.05, 9).unwrap();
    let net = OscillatorNetwork::uniform(0.25, g).unwrap();
    let eig = diagonalize(&assemble_a(&net)).unwrap();
    let n = eig.n();
    let omega_s = eig.omega[10];
    let cs = attach(&eig, omega_s, 0.02, 3).unwrap();
    let probe = ProbeSpec::default();
    let temperature = 0.7;
    let times = [0.0, 2.5, 13.0, 41.0];
    let traj = gip_trajectory(&cs, &probe, temperature, &times).unwrap();
    let network = thermal_eigenbasis(&eig, temperature).unwrap();
    let joint0 = cs.joint_initial(&network, &probe.state().unwrap()).unwrap();
    for (t, via_channel) in times.iter().zip(&traj) {
        let ab = cs.evolve_joint(&joint0, *t).unwrap().reduced(&[n, n + 1]);
        let direct = gip(&to_dimensionless(&ab, &[omega_s, omega_s]).unwrap()).unwrap();
        assert!((direct - via_channel).abs() < 1e-9, "t = {t}: {direct} vs {via_channel}");
    }
}

fn small_ensemble(realizations: usize) -> Vec<EnsembleResult> {
    let families = [
        GraphSpec {
            family: GraphFamily::ErdosRenyi { p: 0.2 },
            n: 20,
            coupling: 0.05,
        },
        GraphSpec {
            family: GraphFamily::BarabasiAlbert { l: 2 },
            n: 20,
            coupling: 0.05,
        },
    ];
    let mut settings = EnsembleSettings::new(0.01, 0.0, realizations);
    settings.t_end = 10.0;
    ensemble(&families, &settings, 77).unwrap()
}

fn values(results: &[EnsembleResult]) -> Vec<(u64, usize, u64)> {
    results
        .iter()
        .flat_map(|r| r.values.iter().map(|v| (v.seed, v.node, v.n_gip.to_bits())))
        .collect()
}

#[test]
fn ensemble_is_reproducible_across_thread_counts() {
    let pool = |k: usize| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
    let one = pool(1).install(|| small_ensemble(6));
    let four = pool(4).install(|| small_ensemble(6));
    assert_eq!(values(&one), values(&four));
    assert_eq!(values(&one), values(&small_ensemble(6)));
    for (a, b) in one.iter().zip(&four) {
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}

#[test]
fn realizations_do_not_depend_on_ensemble_size() {
    let short = small_ensemble(3);
    let long = small_ensemble(5);
    for (s, l) in short.iter().zip(&long) {
        for (a, b) in s.values.iter().zip(&l.values) {
            assert_eq!((a.seed, a.node, a.n_gip.to_bits()), (b.seed, b.node, b.n_gip.to_bits()));
        }
    }
}
