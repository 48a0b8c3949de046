mod common;

use lapsearch::conjecture::{bound_value, disconnected_penalty, reward, ConjectureId};
use lapsearch::engine::{select_elites, GenerationConfig, RolloutState};
use lapsearch::format::{from_adjacency_text, from_graph6, to_adjacency_text, to_graph6};
use lapsearch::graph::{edge_slots, slot_index, slot_pairs};
use lapsearch::parallel::split_batch;
use lapsearch::policy::{NetworkArchitecture, PolicyNetwork};
use lapsearch::run::{read_csv, write_csv, CsvRow};
use lapsearch::spectral::{laplacian_spectral_radius, SEARCH_TOL};
use lapsearch::Graph;
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), edge_slots(n)).prop_map(move |bits| Graph::from_bits(n, bits).unwrap())
    })
}

fn connected_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    // A random spanning tree plus random extra edges.
    (2..=max_n).prop_flat_map(|n| {
        (
            proptest::collection::vec(any::<prop::sample::Index>(), n - 1),
            proptest::collection::vec(any::<bool>(), edge_slots(n)),
        )
            .prop_map(move |(parents, extra)| {
                let mut g = Graph::from_bits(n, extra).unwrap();
                for (k, p) in parents.iter().enumerate() {
                    let v = k + 1;
                    g.set_edge(v, p.index(v), true);
                }
                g
            })
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn slot_mapping_is_a_bijection(n in 2usize..30) {
        let mut seen = vec![false; edge_slots(n)];
        for (k, i, j) in slot_pairs(n) {
            prop_assert!(i < j && j < n);
            prop_assert_eq!(slot_index(n, i, j), k);
            prop_assert!(!seen[k]);
            seen[k] = true;
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn adjacency_round_trip(g in graph_strategy(15)) {
        let a = g.adjacency();
        for i in 0..g.n() {
            prop_assert_eq!(a[i][i], 0);
            for j in 0..g.n() {
                prop_assert_eq!(a[i][j], a[j][i]);
            }
        }
        prop_assert_eq!(&Graph::from_adjacency(&a).unwrap(), &g);
        prop_assert_eq!(&from_adjacency_text(&to_adjacency_text(&g)).unwrap(), &g);
    }

    #[test]
    fn graph6_round_trip(g in graph_strategy(25)) {
        prop_assert_eq!(from_graph6(&to_graph6(&g).unwrap()).unwrap(), g);
    }

    #[test]
    fn degree_sum_is_twice_edges(g in graph_strategy(15)) {
        let p = g.degree_profile();
        prop_assert_eq!(p.degrees.iter().sum::<usize>(), 2 * g.edge_count());
    }

    #[test]
    fn connected_profiles_are_at_least_one(g in connected_strategy(12)) {
        prop_assert!(g.is_connected());
        let p = g.degree_profile();
        prop_assert!(p.degrees.iter().all(|&d| d >= 1));
        prop_assert!(p.neighbor_avg.iter().all(|&m| m >= 1.0));
    }

    #[test]
    fn spectral_radius_bounds(g in graph_strategy(14)) {
        let r = laplacian_spectral_radius(&g, SEARCH_TOL).unwrap();
        let max_deg = g.degrees().into_iter().max().unwrap_or(0) as f64;
        prop_assert!(r.mu >= 0.0 && r.mu <= 2.0 * max_deg + 1e-9);
        prop_assert!(r.residual <= SEARCH_TOL);
        if g.edge_count() > 0 {
            prop_assert!(r.mu >= max_deg + 1.0 - 1e-9);
        }
    }

    #[test]
    fn spectral_radius_ignores_labels((g, perm) in connected_strategy(12).prop_flat_map(|g| { let n = g.n(); (Just(g), permutation(n)) })) {
        let a = laplacian_spectral_radius(&g, SEARCH_TOL).unwrap().mu;
        let b = laplacian_spectral_radius(&g.permuted(&perm), SEARCH_TOL).unwrap().mu;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn bounds_ignore_labels((g, perm) in connected_strategy(10).prop_flat_map(|g| { let n = g.n(); (Just(g), permutation(n)) }), k in 0usize..28) {
        let id = ConjectureId::all().nth(k).unwrap();
        let a = bound_value(id, &g).unwrap().bound;
        let b = bound_value(id, &g.permuted(&perm)).unwrap().bound;
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn reward_is_mu_minus_bound(g in connected_strategy(10), k in 0usize..28) {
        let id = ConjectureId::all().nth(k).unwrap();
        let mu = laplacian_spectral_radius(&g, SEARCH_TOL).unwrap().mu;
        let b = bound_value(id, &g).unwrap().bound;
        prop_assert!((reward(id, &g).unwrap() - (mu - b)).abs() < 1e-9);
    }

    #[test]
    fn disconnected_reward_is_penalty(g in graph_strategy(10)) {
        prop_assume!(!g.is_connected());
        let want = -((g.n() + g.component_count()) as f64);
        prop_assert_eq!(disconnected_penalty(&g), want);
        prop_assert_eq!(reward(ConjectureId::new(3).unwrap(), &g).unwrap(), want);
    }

    #[test]
    fn observations_are_bits_and_one_hot(bits in proptest::collection::vec(any::<bool>(), 1..40), actions in proptest::collection::vec(any::<bool>(), 40)) {
        let e = bits.len();
        let mut s = RolloutState::new(bits);
        for (t, &a) in actions.iter().take(e).enumerate() {
            prop_assert_eq!(s.position(), t);
            let obs = s.observation().unwrap();
            prop_assert_eq!(obs.len(), 2 * e);
            prop_assert!(obs.iter().all(|&x| x == 0.0 || x == 1.0));
            prop_assert_eq!(obs[e..].iter().sum::<f64>(), 1.0);
            prop_assert_eq!(obs[e + t], 1.0);
            s.apply_action(a).unwrap();
        }
        prop_assert!(s.is_done());
    }

    #[test]
    fn elites_are_sorted_prefixes(rewards in proptest::collection::vec(-50.0f64..50.0, 1..300)) {
        let cfg = GenerationConfig { batch_size: rewards.len(), ..GenerationConfig::default() };
        let sel = select_elites(&rewards, &cfg);
        prop_assert!(!sel.survivors.is_empty());
        prop_assert_eq!(&sel.learn[..sel.survivors.len()], &sel.survivors[..]);
        for w in sel.learn.windows(2) {
            prop_assert!(rewards[w[0]] > rewards[w[1]] || (rewards[w[0]] == rewards[w[1]] && w[0] < w[1]));
        }
        let floor = rewards[*sel.learn.last().unwrap()];
        let outside = (0..rewards.len()).filter(|i| !sel.learn.contains(i));
        for i in outside {
            prop_assert!(rewards[i] <= floor);
        }
    }

    #[test]
    fn split_batch_shares(total in 1usize..5000, k in 1usize..64) {
        prop_assume!(total >= k);
        let s = split_batch(total, k).unwrap();
        prop_assert_eq!(s.len(), k);
        prop_assert_eq!(s.iter().sum::<usize>(), total);
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1] && w[0] - w[1] <= 1));
    }

    #[test]
    fn probabilities_are_a_distribution(seed in any::<u64>(), obs in proptest::collection::vec(0.0f64..1.0, 12)) {
        let net = PolicyNetwork::new(NetworkArchitecture::for_vertices(4, &[8, 4]), seed).unwrap();
        let p = net.forward(&obs).unwrap();
        prop_assert!(p[0] >= 0.0 && p[1] >= 0.0);
        prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip(seed in any::<u64>(), hidden in proptest::collection::vec(1usize..10, 1..3)) {
        let net = PolicyNetwork::new(NetworkArchitecture::for_vertices(4, &hidden), seed).unwrap();
        let mut buf = Vec::new();
        net.write_checkpoint(&mut buf).unwrap();
        prop_assert_eq!(PolicyNetwork::read_checkpoint(&buf[..]).unwrap(), net);
    }

    #[test]
    fn csv_round_trip(rows in proptest::collection::vec((0usize..500, 0usize..8, -1e3f64..1e3, -1e3f64..1e3, 0usize..200, 0.0f64..1e5), 0..50)) {
        let rows: Vec<CsvRow> = rows.into_iter().map(|(g, i, a, b, e, w)| CsvRow {
            generation: g, instance_id: i, best_reward: a, mean_reward: b, global_best_reward: a.max(b), edges_in_best: e, wall_ms: w,
        }).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        prop_assert_eq!(read_csv(std::str::from_utf8(&buf).unwrap()).unwrap(), rows);
    }
}
