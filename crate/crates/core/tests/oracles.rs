mod common;

use common::*;
use lapsearch::conjecture::{bound_value, ConjectureId};
use lapsearch::engine::rollout_with;
use lapsearch::format::{from_adjacency_text, from_graph6, to_graph6};
use lapsearch::policy::{NetworkArchitecture, PolicyNetwork};
use lapsearch::spectral::{laplacian_spectral_radius, CERTIFY_TOL};
use lapsearch::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn jacobi_oracle_reproduces_path_spectrum() {
    for n in 2..9 {
        let ev = jacobi_eigenvalues(laplacian_of(&Graph::path(n).adjacency()));
        let mut want: Vec<f64> = (0..n)
            .map(|k| 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn eigensolver_matches_jacobi_on_dense_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let n = rng.gen_range(2..30);
        let g = random_graph(n, rng.gen_range(0.1..0.9), &mut rng);
        let got = laplacian_spectral_radius(&g, CERTIFY_TOL).unwrap().mu;
        assert!((got - oracle_mu(&g)).abs() < 1e-9);
    }
}

#[test]
fn bound_oracle_hand_values() {
    // K4: d = m = 3 everywhere, so conj 3 gives 9/3 + 3.
    assert_eq!(oracle_bound(3, &Graph::complete(4).adjacency()), 6.0);
    // P3 leaf: d = 1, m = 2, conj 2 gives 2·4/1.
    assert_eq!(oracle_bound(2, &Graph::path(3).adjacency()), 8.0);
}

#[test]
fn catalog_matches_oracle_on_fixtures() {
    for (name, file, _, _) in known_counterexamples() {
        let g = from_adjacency_text(&fixture(file)).unwrap();
        let adj = g.adjacency();
        for id in CATALOG_IDS {
            let got = bound_value(ConjectureId::new(id).unwrap(), &g).unwrap().bound;
            let want = oracle_bound(id, &adj);
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{name} conj {id}: {got} vs {want}");
        }
    }
}

#[test]
fn fixture_spectral_radii_and_sizes() {
    // µ values from numpy.linalg.eigvalsh; graph6 strings from networkx.
    let expected = [
        ("graph2.txt", 21, 7.414214, "KM__PrC@aEEB"),
        ("graph66.txt", 28, 7.244772, "SW_GE@?@@?Q?AO?g?A?BGO?K?G?E?G_C?"),
        ("graph41.txt", 48, 20.0, "Sua\\EA@_C?O@hCoGUOC?wa_QA_CQGC?oG"),
        ("graph65.txt", 27, 19.006552, "TMaCLA?_C?O?_?a?O?C??_@A?_C?_C?@A???"),
    ];
    for (file, edges, mu, g6) in expected {
        let g = from_adjacency_text(&fixture(file)).unwrap();
        assert!(g.is_connected(), "{file}");
        assert_eq!(g.edge_count(), edges, "{file}");
        let r = laplacian_spectral_radius(&g, CERTIFY_TOL).unwrap();
        assert!((r.mu - mu).abs() < 5e-7, "{file}: {}", r.mu);
        assert!((r.mu - oracle_mu(&g)).abs() < 1e-9);
        assert_eq!(to_graph6(&g).unwrap(), g6, "{file}");
        assert_eq!(from_graph6(g6).unwrap(), g);
    }
}

#[test]
fn forward_matches_layout_oracle() {
    for (seed, hidden) in [(0u64, vec![72, 12]), (3, vec![8, 4]), (9, vec![5])] {
        let arch = NetworkArchitecture::for_vertices(5, &hidden);
        let widths = arch.widths();
        let net = PolicyNetwork::new(arch, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let obs: Vec<f64> = (0..20).map(|_| (rng.gen::<bool>() as u8) as f64).collect();
            let got = net.forward(&obs).unwrap();
            let want = oracle_forward(&widths, net.parameters(), &obs);
            assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn finite_difference_gradients() {
    let worst = gradient_check(20, 1e-5, 1e-6);
    assert!(worst < 1e-4, "max relative error {worst:e}");
}

#[test]
fn xor_on_zero_is_insertion() {
    let pairs = row_wise_pairs(4);
    for mask in 0u32..64 {
        let actions: Vec<bool> = (0..6).map(|k| mask >> k & 1 == 1).collect();
        let mut step = 0;
        let r = rollout_with(4, &[false; 6], |_, _| {
            step += 1;
            Ok(actions[step - 1])
        })
        .unwrap();
        let direct = Graph::from_edges(4, pairs.iter().zip(&actions).filter(|(_, &a)| a).map(|(&p, _)| p));
        assert_eq!(r.graph, direct, "mask {mask:06b}");
        assert_eq!(r.actions, actions);
    }
}
