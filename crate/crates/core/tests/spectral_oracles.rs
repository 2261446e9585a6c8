//! Spectral quantities against direct quadrature and analytic integrals.

mod common;

use std::f64::consts::PI;

use common::simpson;
use qnet::hamiltonian::{assemble_a, diagonalize, OscillatorNetwork};
use qnet::netgen::{chain_nnn, erdos_renyi};
use qnet::spectral::{
    continuum_damping_kernel, damping_kernel, discretize_bath, windowed_spectral_density, ContinuumDensity,
    ModeCouplings,
};
use qnet::Error;

fn chain_couplings(n: usize, k: f64) -> ModeCouplings {
    let chain = chain_nnn(n, 0.1, 0.02, true).unwrap();
    let net = OscillatorNetwork::new(chain.bare_frequencies(0.25), chain.graph).unwrap();
    let eig = diagonalize(&assemble_a(&net)).unwrap();
    ModeCouplings::from_network(&eig, 0, k)
}

#[test]
fn windowed_density_matches_direct_quadrature() {
    let mc = chain_couplings(30, 0.01);
    let t_max = 60.0;
    let grid = [0.2, 0.3, 0.41, 0.5, 0.63, 0.8];
    let closed = windowed_spectral_density(&mc, t_max, &grid).unwrap();
    for (w, j) in grid.iter().zip(&closed.j) {
        let direct = w * simpson(0.0, t_max, 20_000, |t| damping_kernel(&mc, t) * (w * t).cos());
        assert!((j - direct).abs() < 1e-9 * j.abs().max(1e-6), "w = {w}: {j} vs {direct}");
    }
}

#[test]
fn parseval_sum_rule_holds_within_ringing() {
    let mc = chain_couplings(40, 0.01);
    let hi = mc.omega.iter().cloned().fold(0.0, f64::max);
    let m = 20_000;
    let grid: Vec<f64> = (1..=m).map(|i| 2.0 * hi * i as f64 / m as f64).collect();
    let dens = windowed_spectral_density(&mc, 200.0, &grid).unwrap();
    let dw = grid[1] - grid[0];
    let integral: f64 = grid.iter().zip(&dens.j).map(|(w, j)| 2.0 / PI * j * w * dw).sum();
    let total = mc.total_weight();
    assert!(((integral - total) / total).abs() < 0.05, "{integral} vs {total}");
}

#[test]
fn spikes_grow_linearly_with_window() {
    let g = erdos_renyi(5, 0.7, 0.05, 3).unwrap();
    let net = OscillatorNetwork::uniform(0.25, g).unwrap();
    let eig = diagonalize(&assemble_a(&net)).unwrap();
    let mc = ModeCouplings::from_network(&eig, 1, 0.01);
    let peaks = |t: f64| windowed_spectral_density(&mc, t, &mc.omega).unwrap().j;
    let (a, b) = (peaks(400.0), peaks(800.0));
    for i in 0..mc.len() {
        if mc.g[i].abs() > 1e-4 {
            let ratio = b[i] / a[i];
            assert!((ratio - 2.0).abs() < 0.1, "mode {i}: ratio {ratio}");
        }
    }
}

#[test]
fn continuum_kernel_at_origin() {
    for wc in [0.5, 1.0, 5.0] {
        let j = ContinuumDensity::ohmic_exponential(1.0, wc);
        let g0 = continuum_damping_kernel(&j, 0.0).unwrap();
        assert!((g0 - 2.0 / PI * wc).abs() < 1e-8 * wc, "{g0}");
    }
}

/// `(2/pi) int_0^W exp(-w/c) cos(w t) dw` in closed form.
fn band_kernel(c: f64, big_w: f64, t: f64) -> f64 {
    let a = 1.0 / c;
    let prim = |w: f64| (-a * w).exp() * (t * (w * t).sin() - a * (w * t).cos()) / (a * a + t * t);
    2.0 / PI * (prim(big_w) - prim(0.0))
}

#[test]
fn continuum_quadrature_matches_analytic_kernel() {
    let j = ContinuumDensity::new(|w| w * (-w / 5.0).exp(), 25.0);
    for t in [0.0, 0.3, 1.0, 7.5, 40.0, 120.0] {
        let got = continuum_damping_kernel(&j, t).unwrap();
        assert!((got - band_kernel(5.0, 25.0, t)).abs() < 1e-10, "t = {t}");
    }
}

#[test]
fn ohmic_discretization_tracks_continuum_before_half_recurrence() {
    let j = ContinuumDensity::new(|w| w * (-w / 5.0).exp(), 25.0);
    let dw = 25.0 / 300.0;
    let samples: Vec<f64> = (0..300).map(|i| (i as f64 + 0.5) * dw).collect();
    let mc = discretize_bath(&j, &samples).unwrap();
    let half_period = PI / dw;
    let mut t = 0.0;
    while t < half_period {
        let err = (damping_kernel(&mc, t) - band_kernel(5.0, 25.0, t)).abs();
        assert!(err < 1e-3, "t = {t}: {err}");
        t += 0.05;
    }
}

#[test]
fn non_integrable_density_is_rejected() {
    let flat = ContinuumDensity::new(|_| 1.0, 10.0);
    assert!(matches!(continuum_damping_kernel(&flat, 1.0), Err(Error::Divergent(_))));
}
