//! Simple undirected graphs stored as a packed upper triangle.
//!
//! Edge slot `k` enumerates the strict upper triangle row by row:
//! `(0,1), (0,2), …, (0,n-1), (1,2), …, (n-2,n-1)`. The policy observation
//! layout and every serializer rely on this order.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};

/// Number of edge slots for a graph on `n` vertices.
#[inline]
pub const fn edge_slots(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Slot index of the pair `(i, j)` with `i < j < n`.
#[inline]
pub fn slot_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // Slots used by rows 0..i, then offset within row i.
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Iterator over `(slot, i, j)` in row-wise order.
pub fn slot_pairs(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n)
        .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
        .enumerate()
        .map(|(k, (i, j))| (k, i, j))
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    bits: Vec<bool>,
}

impl Graph {
    /// Builds a graph from its row-wise upper-triangle bits.
    pub fn from_bits(n: usize, bits: Vec<bool>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("a graph needs at least one vertex".into()));
        }
        if bits.len() != edge_slots(n) {
            return Err(Error::Shape {
                what: "edge bits",
                expected: edge_slots(n),
                got: bits.len(),
            });
        }
        Ok(Self { n, bits })
    }

    pub fn empty(n: usize) -> Self {
        assert!(n >= 1, "a graph needs at least one vertex");
        Self {
            n,
            bits: vec![false; edge_slots(n)],
        }
    }

    pub fn complete(n: usize) -> Self {
        assert!(n >= 1, "a graph needs at least one vertex");
        Self {
            n,
            bits: vec![true; edge_slots(n)],
        }
    }

    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|v| (v - 1, v)))
    }

    /// The star `K_{1,n-1}` centred at vertex 0.
    pub fn star(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|v| (0, v)))
    }

    /// Builds a graph from an edge list. Panics on self-loops or out-of-range endpoints.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::empty(n);
        for (a, b) in edges {
            g.set_edge(a, b, true);
        }
        g
    }

    /// Builds a graph from a dense 0/1 adjacency matrix.
    pub fn from_adjacency(matrix: &[Vec<u8>]) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::Domain("empty adjacency matrix".into()));
        }
        for (r, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::parse(
                    format!("row {r}"),
                    format!("expected {n} entries, found {}", row.len()),
                ));
            }
            if row[r] != 0 {
                return Err(Error::parse(format!("row {r}"), "nonzero diagonal entry"));
            }
            for (c, &x) in row.iter().enumerate() {
                if x > 1 {
                    return Err(Error::parse(format!("row {r}"), format!("entry {x} is not 0/1")));
                }
                if matrix[c][r] != x {
                    return Err(Error::parse(
                        format!("row {r}"),
                        format!("asymmetric entry at column {c}"),
                    ));
                }
            }
        }
        let bits = slot_pairs(n).map(|(_, i, j)| matrix[i][j] == 1).collect();
        Ok(Self { n, bits })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.bits[slot_index(self.n, i, j)]
    }

    pub fn set_edge(&mut self, a: usize, b: usize, present: bool) {
        assert!(a != b, "self-loops are not allowed");
        assert!(a < self.n && b < self.n, "vertex out of range");
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        let k = slot_index(self.n, i, j);
        self.bits[k] = present;
    }

    /// Dense adjacency matrix, symmetric with zero diagonal.
    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; self.n]; self.n];
        for (k, i, j) in slot_pairs(self.n) {
            if self.bits[k] {
                a[i][j] = 1;
                a[j][i] = 1;
            }
        }
        a
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (k, i, j) in slot_pairs(self.n) {
            if self.bits[k] {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        adj
    }

    /// Adjacent pairs `(i, j)` with `i < j`, in slot order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        slot_pairs(self.n).filter(|&(k, _, _)| self.bits[k]).map(|(_, i, j)| (i, j))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.n];
        for (i, j) in self.edges() {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let adj = self.neighbors();
        let degrees: Vec<usize> = adj.iter().map(Vec::len).collect();
        let neighbor_avg = adj
            .iter()
            .map(|nbrs| {
                if nbrs.is_empty() {
                    0.0
                } else {
                    let sum: usize = nbrs.iter().map(|&u| degrees[u]).sum();
                    sum as f64 / nbrs.len() as f64
                }
            })
            .collect();
        DegreeProfile {
            degrees,
            neighbor_avg,
        }
    }

    /// Number of connected components (isolated vertices count as components).
    pub fn component_count(&self) -> usize {
        let adj = self.neighbors();
        let mut seen = vec![false; self.n];
        let mut count = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            count += 1;
            bfs_mark(&adj, start, &mut seen);
        }
        count
    }

    /// True iff a traversal from vertex 0 reaches every vertex.
    pub fn is_connected(&self) -> bool {
        let adj = self.neighbors();
        let mut seen = vec![false; self.n];
        bfs_mark(&adj, 0, &mut seen) == self.n
    }

    /// Relabels vertices: vertex `v` of `self` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut g = Self::empty(self.n);
        for (i, j) in self.edges() {
            g.set_edge(perm[i], perm[j], true);
        }
        g
    }
}

fn bfs_mark(adj: &[Vec<usize>], start: usize, seen: &mut [bool]) -> usize {
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut reached = 1;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                reached += 1;
                queue.push_back(u);
            }
        }
    }
    reached
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<_> = self.edges().collect();
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &edges)
            .finish()
    }
}

/// Per-vertex degree `d_v` and average neighbour degree `m_v`.
///
/// `m_v` is 0 for isolated vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeProfile {
    pub degrees: Vec<usize>,
    pub neighbor_avg: Vec<f64>,
}
