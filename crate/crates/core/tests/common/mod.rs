//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's numerics: the eigen oracle is a
//! cyclic Jacobi sweep, the bound oracle recomputes degrees straight from the
//! adjacency matrix and spells each formula out again.

#![allow(dead_code)]

use std::path::PathBuf;

use lapsearch::Graph;
use rand::Rng;

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// The four known counterexample graphs and the conjectures each is listed against.
pub fn known_counterexamples() -> Vec<(&'static str, &'static str, usize, Vec<u32>)> {
    vec![
        (
            "Graph 2",
            "graph2.txt",
            12,
            vec![2, 3, 15, 28, 29, 31, 32, 36, 43, 49, 52, 53, 54, 55, 57, 58, 59, 60, 61, 62, 63, 64, 67],
        ),
        (
            "Graph 66",
            "graph66.txt",
            20,
            vec![3, 15, 28, 29, 31, 32, 36, 43, 49, 52, 53, 54, 55, 57, 58, 59, 60, 61, 62, 63, 64, 66],
        ),
        ("Graph 41", "graph41.txt", 20, vec![41, 43, 49, 51, 52, 53, 54, 55, 57, 58]),
        ("Graph 65", "graph65.txt", 21, vec![65, 68]),
    ]
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn laplacian_of(adj: &[Vec<u8>]) -> Vec<Vec<f64>> {
    let n = adj.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if adj[i][j] == 1 {
                l[i][j] = -1.0;
                l[i][i] += 1.0;
            }
        }
    }
    l
}

pub fn oracle_mu(g: &Graph) -> f64 {
    *jacobi_eigenvalues(laplacian_of(&g.adjacency())).last().unwrap()
}

/// Square root with negative radicands clamped to zero.
fn r(x: f64) -> f64 {
    x.max(0.0).sqrt()
}

/// Bound value of conjecture `id`, computed from the adjacency matrix alone.
pub fn oracle_bound(id: u32, adj: &[Vec<u8>]) -> f64 {
    let n = adj.len();
    let deg: Vec<f64> = adj.iter().map(|row| row.iter().map(|&x| x as f64).sum()).collect();
    let m: Vec<f64> = (0..n)
        .map(|v| {
            let s: f64 = (0..n).filter(|&u| adj[v][u] == 1).map(|u| deg[u]).sum();
            s / deg[v]
        })
        .collect();

    let vertex = |f: &dyn Fn(f64, f64) -> f64| (0..n).map(|v| f(deg[v], m[v])).fold(f64::NEG_INFINITY, f64::max);
    let edge = |f: &dyn Fn(f64, f64, f64, f64) -> f64| {
        let mut best = f64::NEG_INFINITY;
        for v in 0..n {
            for j in 0..n {
                if v != j && adj[v][j] == 1 {
                    best = best.max(f(deg[v], m[v], deg[j], m[j]));
                }
            }
        }
        best
    };

    match id {
        2 => vertex(&|d, m| 2.0 * m * m / d),
        3 => vertex(&|d, m| m * m / d + m),
        15 => vertex(&|d, m| r(4.0 * m.powi(3) / d)),
        28 => vertex(&|d, m| r(4.0 * m.powi(4) / (d * d) + 2.0 * d * m)),
        29 => vertex(&|d, m| r(m * m + 3.0 * m.powi(3) / d)),
        31 => vertex(&|d, m| 4.0 * m * m / (m + d)),
        32 => vertex(&|d, m| r(m.powi(3) * (m + 3.0 * d)) / d),
        36 => edge(&|dv, mv, dj, mj| 2.0 * (mv * mv + mj * mj) / (dv + dj)),
        41 => edge(&|dv, mv, dj, mj| {
            2.0 + (mv + mj) - (dv + dj) + r(2.0 * (dv * dv + dj * dj) - 4.0 * (mv + mj) + 4.0)
        }),
        43 => edge(&|dv, mv, dj, mj| 2.0 + r(3.0 * (mv * mv + mj * mj) - 2.0 * mv * mj - 4.0 * (dv + dj) + 4.0)),
        49 => edge(&|dv, mv, dj, mj| 2.0 + r(2.0 * (mv * mv + mj * mj) + (dv - dj).powi(2) - 4.0 * (dv + dj) + 4.0)),
        51 => edge(&|dv, mv, dj, mj| 2.0 * (mv + mj) - 4.0 * mv * mj / (dv + dj)),
        52 => edge(&|dv, mv, dj, mj| {
            2.0 + r(r(8.0 * (mv.powi(4) + mj.powi(4)) - 8.0 * (dv * dv + dj * dj) + 4.0) - 4.0 * (dv + dj) + 6.0)
        }),
        53 => edge(&|dv, mv, dj, mj| {
            2.0 + r(r(8.0 * (mv.powi(4) + mj.powi(4)) - 8.0 * (dv * mv + dj * mj) + 4.0) - 4.0 * (dv + dj) + 6.0)
        }),
        54 => edge(&|dv, mv, dj, mj| {
            2.0 + r(2.0 * (mv * mv + mj * mj) + (dv * mv + dj * mj) - (dv * dv + dj * dj) - 4.0 * (dv + dj) + 4.0)
        }),
        55 => edge(&|dv, mv, dj, mj| 2.0 + r(3.0 * (mv * mv + mj * mj) - (dv * dv + dj * dj) - 4.0 * (mv + mj) + 4.0)),
        57 => edge(&|dv, mv, dj, mj| 2.0 + r(2.0 * (mv * mv + mj * mj) - 8.0 * (dv * dv + dj * dj) / (mv + mj) + 4.0)),
        58 => edge(&|dv, mv, dj, mj| {
            2.0 + r(2.0 * (mv * mv + mv * mj + mj * mj) - (dv * mv + dj * mj) - 4.0 * (dv + dj) + 4.0)
        }),
        59 => edge(&|dv, mv, dj, mj| (2.0 * (mv * mv + mv * mj + mj * mj) - (dv * dv + dj * dj)) / (mv + mj)),
        60 => edge(&|dv, mv, dj, mj| {
            2.0 + r(2.0 * (mv * mv + mv * mj + mj * mj) - (dv * dv + dj * dj) - 4.0 * (dv + dj) + 4.0)
        }),
        61 => edge(&|dv, mv, dj, mj| 2.0 * (mv * mv + mj * mj) / (2.0 + r(2.0 * ((dv - 1.0).powi(2) + (dj - 1.0).powi(2))))),
        62 => edge(&|dv, mv, dj, mj| 2.0 + r(mv * mv + 4.0 * mv * mj + mj * mj - 2.0 * dv * dj - 4.0 * (dv + dj) + 4.0)),
        63 => edge(&|dv, mv, dj, mj| dv + dj + mv + mj - 4.0 * dv * dj / (mv + mj)),
        64 => edge(&|dv, mv, dj, mj| mv * mj * (dv + dj) / (dv * dj)),
        65 => edge(&|dv, mv, dj, mj| (mv + mj) * (dv * mv + dj * mj) / (2.0 * mv * mj)),
        66 => edge(&|dv, mv, dj, mj| (mv * mv + 4.0 * mv * mj + mj * mj - (dv * mv + dj * mj)) / (dv + dj)),
        67 => edge(&|dv, mv, dj, mj| (mv + mj) * (dv * mv + dj * mj) / (2.0 * dv * dj)),
        68 => edge(&|dv, mv, dj, mj| 2.0 + r((mv - mj).powi(2) + 4.0 * dv * dj - 4.0 * (mv + mj) + 4.0)),
        other => panic!("no oracle formula for {other}"),
    }
}

pub const CATALOG_IDS: [u32; 28] = [
    2, 3, 15, 28, 29, 31, 32, 36, 41, 43, 49, 51, 52, 53, 54, 55, 57, 58, 59, 60, 61, 62, 63, 64, 65, 66, 67, 68,
];

/// Every labelled graph on `n` vertices, as adjacency matrices.
pub fn all_graphs(n: usize) -> impl Iterator<Item = Vec<Vec<u8>>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0u64..1 << pairs.len()).map(move |mask| {
        let mut a = vec![vec![0u8; n]; n];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if mask >> k & 1 == 1 {
                a[i][j] = 1;
                a[j][i] = 1;
            }
        }
        a
    })
}

pub fn connected(adj: &[Vec<u8>]) -> bool {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for u in 0..n {
            if adj[v][u] == 1 && !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// All connected labelled graphs with 2 to `max_n` vertices.
pub fn connected_graphs_up_to(max_n: usize) -> Vec<Graph> {
    (2..=max_n)
        .flat_map(all_graphs)
        .filter(|a| connected(a))
        .map(|a| Graph::from_adjacency(&a).unwrap())
        .collect()
}

pub fn random_graph<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    let bits = (0..n * (n - 1) / 2).map(|_| rng.gen::<f64>() < p).collect();
    Graph::from_bits(n, bits).unwrap()
}

/// Row-wise upper-triangle pairs, enumerated directly.
pub fn row_wise_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

/// erf by its Maclaurin series; accurate to ~1e-15 for |x| <= 3.
pub fn series_erf(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for k in 1..200 {
        term *= -x * x / k as f64;
        let add = term / (2 * k + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

/// Forward pass written against the documented parameter layout: per layer,
/// an `out × in` row-major weight block followed by `out` biases.
pub fn oracle_forward(widths: &[usize], params: &[f64], obs: &[f64]) -> [f64; 2] {
    let mut x = obs.to_vec();
    let mut offset = 0;
    let layers = widths.len() - 1;
    for l in 0..layers {
        let (fan_in, fan_out) = (widths[l], widths[l + 1]);
        let w = &params[offset..offset + fan_in * fan_out];
        let b = &params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
        offset += fan_in * fan_out + fan_out;
        let mut y = vec![0.0; fan_out];
        for o in 0..fan_out {
            let mut z = b[o];
            for i in 0..fan_in {
                z += w[o * fan_in + i] * x[i];
            }
            y[o] = if l + 1 < layers { 0.5 * z * (1.0 + series_erf(z / 2f64.sqrt())) } else { z };
        }
        x = y;
    }
    let m = x[0].max(x[1]);
    let (a, b) = ((x[0] - m).exp(), (x[1] - m).exp());
    [a / (a + b), b / (a + b)]
}

/// Largest relative gap between analytic and central-difference gradients
/// over `trials` random networks on 12 inputs with hidden widths [8, 4].
/// Components where both are below `floor` in magnitude are compared against `floor`.
pub fn gradient_check(trials: u64, h: f64, floor: f64) -> f64 {
    use lapsearch::policy::{NetworkArchitecture, PolicyNetwork, TrainBatch};
    use rand::SeedableRng;
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + t);
        let arch = NetworkArchitecture::for_vertices(4, &[8, 4]);
        let mut net = PolicyNetwork::new(arch, t).unwrap();
        for p in net.parameters_mut() {
            *p += rng.gen_range(-0.3..0.3);
        }
        let mut batch = TrainBatch::default();
        for _ in 0..rng.gen_range(1..8) {
            let obs: Vec<f64> = (0..12).map(|_| (rng.gen::<bool>() as u8) as f64).collect();
            batch.push(obs, rng.gen());
        }
        let (_, grad) = net.loss_and_gradient(&batch).unwrap();
        for k in 0..grad.len() {
            let orig = net.parameters()[k];
            net.parameters_mut()[k] = orig + h;
            let (up, _) = net.loss_and_gradient(&batch).unwrap();
            net.parameters_mut()[k] = orig - h;
            let (down, _) = net.loss_and_gradient(&batch).unwrap();
            net.parameters_mut()[k] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (grad[k] - fd).abs() / grad[k].abs().max(fd.abs()).max(floor);
            worst = worst.max(rel);
        }
    }
    worst
}
