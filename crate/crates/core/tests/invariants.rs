//! Property tests of structural invariants.

mod common;

use common::{eigen_residual, symplectic_defect};
use proptest::prelude::*;
use qnet::gaussian::{evolve, symplectic_eigenvalues, thermal_eigenbasis};
use qnet::hamiltonian::{assemble_a, diagonalize, propagator_eigenmode_to_network, propagator_network, OscillatorNetwork};
use qnet::netgen::{GraphFamily, GraphSpec};
use qnet::nonmarkov::n_gip;
use qnet::opensys::{attach, TargetBasis};
use qnet::transport::local_excitation_state;

fn family() -> impl Strategy<Value = GraphFamily> {
    prop_oneof![
        (0.2f64..0.8).prop_map(|p| GraphFamily::ErdosRenyi { p }),
        (1usize..=3).prop_map(|l| GraphFamily::BarabasiAlbert { l }),
        (0.0f64..1.0).prop_map(|p| GraphFamily::WattsStrogatz { p, k: 2 }),
    ]
}

fn network() -> impl Strategy<Value = OscillatorNetwork> {
    (family(), 5usize..16, 0.01f64..0.1, any::<u64>(), 0.15f64..0.5).prop_map(|(family, n, g, seed, w0)| {
        let spec = GraphSpec { family, n, coupling: g };
        let (graph, _) = spec.generate(seed).unwrap();
        OscillatorNetwork::uniform(w0, graph).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_graphs_are_symmetric_and_connected(f in family(), n in 5usize..25, seed in any::<u64>()) {
        let spec = GraphSpec { family: f, n, coupling: 0.05 };
        let (g, _) = spec.generate(seed).unwrap();
        let w = g.weights();
        prop_assert_eq!(w, &w.transpose());
        prop_assert!((0..n).all(|i| w[(i, i)] == 0.0));
        prop_assert!(qnet::netgen::is_connected(&g));
    }

    #[test]
    fn eigendecomposition_is_exact(net in network()) {
        let a = assemble_a(&net);
        let eig = diagonalize(&a).unwrap();
        let lambda: Vec<f64> = eig.omega.iter().map(|w| w * w / 2.0).collect();
        prop_assert!(eigen_residual(a.matrix(), &eig.k, &lambda) < 1e-12);
        prop_assert!(eig.omega.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn propagators_are_symplectic_and_compose(net in network(), t1 in 0.0f64..80.0, t2 in 0.0f64..80.0) {
        let eig = diagonalize(&assemble_a(&net)).unwrap();
        let s1 = propagator_network(&eig, t1).matrix;
        let s2 = propagator_network(&eig, t2).matrix;
        let s12 = propagator_network(&eig, t1 + t2).matrix;
        prop_assert!(symplectic_defect(&s1) < 1e-10);
        prop_assert!(symplectic_defect(&propagator_eigenmode_to_network(&eig, t1).matrix) < 1e-10);
        prop_assert!((&s2 * &s1 - s12).abs().max() < 1e-9);
    }

    #[test]
    fn coupled_propagator_is_symplectic(net in network(), t in 0.0f64..100.0, k in 0.0f64..0.05, node_frac in 0.0f64..1.0) {
        let eig = diagonalize(&assemble_a(&net)).unwrap();
        let node = ((node_frac * net.n() as f64) as usize).min(net.n() - 1);
        let ws = eig.omega[eig.n() / 2];
        let cs = attach(&eig, ws, k, node).unwrap();
        prop_assert!(symplectic_defect(&cs.total_propagator(t, TargetBasis::Eigenmode).matrix) < 1e-10);
        prop_assert!(symplectic_defect(&cs.total_propagator(t, TargetBasis::Network).matrix) < 1e-10);
    }

    #[test]
    fn evolution_preserves_symplectic_spectrum(net in network(), t in 0.0f64..100.0, site_frac in 0.0f64..1.0) {
        let eig = diagonalize(&assemble_a(&net)).unwrap();
        let site = ((site_frac * net.n() as f64) as usize).min(net.n() - 1);
        let state = local_excitation_state(&net, &eig, site).unwrap();
        let after = evolve(&state, &propagator_network(&eig, t)).unwrap();
        let a = symplectic_eigenvalues(&state).unwrap();
        let b = symplectic_eigenvalues(&after).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn thermal_eigenmode_state_is_physical(net in network(), temp in 0.0f64..3.0) {
        let eig = diagonalize(&assemble_a(&net)).unwrap();
        let th = thermal_eigenbasis(&eig, temp).unwrap();
        prop_assert!(symplectic_eigenvalues(&th).is_ok());
    }

    #[test]
    fn witness_is_shift_invariant_and_non_negative(q in proptest::collection::vec(-5.0f64..5.0, 2..60), c in -10.0f64..10.0) {
        let shifted: Vec<f64> = q.iter().map(|x| x + c).collect();
        let a = n_gip(&q);
        prop_assert!(a >= 0.0);
        prop_assert!((a - n_gip(&shifted)).abs() < 1e-9);
        let mut sorted = q.clone();
        sorted.sort_by(|x, y| y.total_cmp(x));
        prop_assert_eq!(n_gip(&sorted), 0.0);
    }
}
