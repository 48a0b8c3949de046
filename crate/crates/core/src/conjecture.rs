//! Catalog of conjectured upper bounds on the Laplacian spectral radius.
//!
//! Every bound is the maximum of a closed-form expression in the vertex degree
//! `d` and the average neighbour degree `m`, taken either over all vertices or
//! over all adjacent pairs `v ~ j`. Square roots of negative radicands are
//! clamped to zero and the evaluation is flagged.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::{laplacian_spectral_radius, SEARCH_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ConjectureId(u32);

impl ConjectureId {
    pub fn new(id: u32) -> Result<Self> {
        if CATALOG.iter().any(|s| s.id == id) {
            Ok(Self(id))
        } else {
            Err(Error::UnknownConjecture {
                id,
                valid: valid_ids_text(),
            })
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = ConjectureId> {
        CATALOG.iter().map(|s| ConjectureId(s.id))
    }

    pub fn spec(self) -> &'static BoundSpec {
        CATALOG
            .iter()
            .find(|s| s.id == self.0)
            .expect("ConjectureId is always in the catalog")
    }
}

impl TryFrom<u32> for ConjectureId {
    type Error = Error;
    fn try_from(id: u32) -> Result<Self> {
        Self::new(id)
    }
}

impl From<ConjectureId> for u32 {
    fn from(id: ConjectureId) -> u32 {
        id.0
    }
}

impl fmt::Display for ConjectureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for ConjectureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let id: u32 = s.trim().parse().map_err(|_| Error::UnknownConjecture {
            id: u32::MAX,
            valid: valid_ids_text(),
        })?;
        Self::new(id)
    }
}

fn valid_ids_text() -> String {
    CATALOG
        .iter()
        .map(|s| s.id.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// Maximum over all vertices.
    VertexMax,
    /// Maximum over all adjacent pairs.
    EdgeMax,
}

impl fmt::Display for BoundForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundForm::VertexMax => "vertex_max",
            BoundForm::EdgeMax => "edge_max",
        })
    }
}

/// Degree statistics of one vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexStats {
    pub d: f64,
    pub m: f64,
}

/// Tracks whether any square root saw a negative radicand.
#[derive(Default, Debug, Clone, Copy)]
pub struct Radicals {
    pub clamped: bool,
}

impl Radicals {
    #[inline]
    pub fn sqrt(&mut self, x: f64) -> f64 {
        if x < 0.0 {
            self.clamped = true;
            0.0
        } else {
            x.sqrt()
        }
    }
}

type VertexFn = fn(&mut Radicals, VertexStats) -> f64;
type EdgeFn = fn(&mut Radicals, VertexStats, VertexStats) -> f64;

#[derive(Clone, Copy)]
pub enum Evaluator {
    Vertex(VertexFn),
    Edge(EdgeFn),
}

pub struct BoundSpec {
    pub id: u32,
    pub form: BoundForm,
    pub formula: &'static str,
    pub evaluator: Evaluator,
}

impl fmt::Debug for BoundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundSpec")
            .field("id", &self.id)
            .field("form", &self.form)
            .field("formula", &self.formula)
            .finish()
    }
}

macro_rules! vertex {
    ($id:expr, $text:expr, |$r:ident, $d:ident, $m:ident| $body:expr) => {
        BoundSpec {
            id: $id,
            form: BoundForm::VertexMax,
            formula: $text,
            evaluator: Evaluator::Vertex({
                #[allow(unused_variables)]
                fn eval($r: &mut Radicals, s: VertexStats) -> f64 {
                    let ($d, $m) = (s.d, s.m);
                    $body
                }
                eval
            }),
        }
    };
}

macro_rules! edge {
    ($id:expr, $text:expr, |$r:ident, $dv:ident, $mv:ident, $dj:ident, $mj:ident| $body:expr) => {
        BoundSpec {
            id: $id,
            form: BoundForm::EdgeMax,
            formula: $text,
            evaluator: Evaluator::Edge({
                #[allow(unused_variables)]
                fn eval($r: &mut Radicals, v: VertexStats, j: VertexStats) -> f64 {
                    let ($dv, $mv, $dj, $mj) = (v.d, v.m, j.d, j.m);
                    $body
                }
                eval
            }),
        }
    };
}

pub static CATALOG: [BoundSpec; 28] = [
    vertex!(2, "max_{v in V} 2 m_v^2 / d_v", |r, d, m| 2.0 * m * m / d),
    vertex!(3, "max_{v in V} m_v^2 / d_v + m_v", |r, d, m| m * m / d + m),
    vertex!(15, "max_{v in V} sqrt(4 m_v^3 / d_v)", |r, d, m| r.sqrt(4.0 * m.powi(3) / d)),
    vertex!(28, "max_{v in V} sqrt(4 m_v^4 / d_v^2 + 2 d_v m_v)", |r, d, m| {
        r.sqrt(4.0 * m.powi(4) / (d * d) + 2.0 * d * m)
    }),
    vertex!(29, "max_{v in V} sqrt(m_v^2 + 3 m_v^3 / d_v)", |r, d, m| {
        r.sqrt(m * m + 3.0 * m.powi(3) / d)
    }),
    vertex!(31, "max_{v in V} 4 m_v^2 / (m_v + d_v)", |r, d, m| 4.0 * m * m / (m + d)),
    vertex!(32, "max_{v in V} sqrt(m_v^3 (m_v + 3 d_v)) / d_v", |r, d, m| {
        r.sqrt(m.powi(3) * (m + 3.0 * d)) / d
    }),
    edge!(36, "max_{v~j} 2 (m_v^2 + m_j^2) / (d_v + d_j)", |r, dv, mv, dj, mj| {
        2.0 * (mv * mv + mj * mj) / (dv + dj)
    }),
    edge!(
        41,
        "max_{v~j} 2 + (m_v + m_j) - (d_v + d_j) + sqrt(2 (d_v^2 + d_j^2) - 4 (m_v + m_j) + 4)",
        |r, dv, mv, dj, mj| {
            2.0 + (mv + mj) - (dv + dj) + r.sqrt(2.0 * (dv * dv + dj * dj) - 4.0 * (mv + mj) + 4.0)
        }
    ),
    edge!(
        43,
        "max_{v~j} 2 + sqrt(3 (m_v^2 + m_j^2) - 2 m_v m_j - 4 (d_v + d_j) + 4)",
        |r, dv, mv, dj, mj| {
            2.0 + r.sqrt(3.0 * (mv * mv + mj * mj) - 2.0 * mv * mj - 4.0 * (dv + dj) + 4.0)
        }
    ),
    edge!(
        49,
        "max_{v~j} 2 + sqrt(2 (m_v^2 + m_j^2) + (d_v - d_j)^2 - 4 (d_v + d_j) + 4)",
        |r, dv, mv, dj, mj| {
            2.0 + r.sqrt(2.0 * (mv * mv + mj * mj) + (dv - dj).powi(2) - 4.0 * (dv + dj) + 4.0)
        }
    ),
    edge!(51, "max_{v~j} 2 (m_v + m_j) - 4 m_v m_j / (d_v + d_j)", |r, dv, mv, dj, mj| {
        2.0 * (mv + mj) - 4.0 * mv * mj / (dv + dj)
    }),
    edge!(
        52,
        "max_{v~j} 2 + sqrt(sqrt(8 (m_v^4 + m_j^4) - 8 (d_v^2 + d_j^2) + 4) - 4 (d_v + d_j) + 6)",
        |r, dv, mv, dj, mj| {
            let inner = r.sqrt(8.0 * (mv.powi(4) + mj.powi(4)) - 8.0 * (dv * dv + dj * dj) + 4.0);
            2.0 + r.sqrt(inner - 4.0 * (dv + dj) + 6.0)
        }
    ),
    edge!(
        53,
        "max_{v~j} 2 + sqrt(sqrt(8 (m_v^4 + m_j^4) - 8 (d_v m_v + d_j m_j) + 4) - 4 (d_v + d_j) + 6)",
        |r, dv, mv, dj, mj| {
            let inner = r.sqrt(8.0 * (mv.powi(4) + mj.powi(4)) - 8.0 * (dv * mv + dj * mj) + 4.0);
            2.0 + r.sqrt(inner - 4.0 * (dv + dj) + 6.0)
        }
    ),
    edge!(
        54,
        "max_{v~j} 2 + sqrt(2 (m_v^2 + m_j^2) + (d_v m_v + d_j m_j) - (d_v^2 + d_j^2) - 4 (d_v + d_j) + 4)",
        |r, dv, mv, dj, mj| {
            2.0 + r.sqrt(
                2.0 * (mv * mv + mj * mj) + (dv * mv + dj * mj) - (dv * dv + dj * dj) - 4.0 * (dv + dj)
                    + 4.0,
            )
        }
    ),
    edge!(
        55,
        "max_{v~j} 2 + sqrt(3 (m_v^2 + m_j^2) - (d_v^2 + d_j^2) - 4 (m_v + m_j) + 4)",
        |r, dv, mv, dj, mj| {
            2.0 + r.sqrt(3.0 * (mv * mv + mj * mj) - (dv * dv + dj * dj) - 4.0 * (mv + mj) + 4.0)
        }
    ),
    edge!(
        57,
        "max_{v~j} 2 + sqrt(2 (m_v^2 + m_j^2) - 8 (d_v^2 + d_j^2) / (m_v + m_j) + 4)",
        |r, dv, mv, dj, mj| {
            2.0 + r.sqrt(2.0 * (mv * mv + mj * mj) - 8.0 * (dv * dv + dj * dj) / (mv + mj) + 4.0)
        }
    ),
    edge!(
        58,
        "max_{v~j} 2 + sqrt(2 (m_v^2 + m_v m_j + m_j^2) - (d_v m_v + d_j m_j) - 4 (d_v + d_j) + 4)",
        |r, dv, mv, dj, mj| {
            2.0 + r.sqrt(
                2.0 * (mv * mv + mv * mj + mj * mj) - (dv * mv + dj * mj) - 4.0 * (dv + dj) + 4.0,
            )
        }
    ),
    edge!(
        59,
        "max_{v~j} (2 (m_v^2 + m_v m_j + m_j^2) - (d_v^2 + d_j^2)) / (m_v + m_j)",
        |r, dv, mv, dj, mj| {
            (2.0 * (mv * mv + mv * mj + mj * mj) - (dv * dv + dj * dj)) / (mv + mj)
        }
    ),
    edge!(
        60,
        "max_{v~j} 2 + sqrt(2 (m_v^2 + m_v m_j + m_j^2) - (d_v^2 + d_j^2) - 4 (d_v + d_j) + 4)",
        |r, dv, mv, dj, mj| {
            2.0 + r.sqrt(
                2.0 * (mv * mv + mv * mj + mj * mj) - (dv * dv + dj * dj) - 4.0 * (dv + dj) + 4.0,
            )
        }
    ),
    edge!(
        61,
        "max_{v~j} 2 (m_v^2 + m_j^2) / (2 + sqrt(2 ((d_v - 1)^2 + (d_j - 1)^2)))",
        |r, dv, mv, dj, mj| {
            2.0 * (mv * mv + mj * mj) / (2.0 + r.sqrt(2.0 * ((dv - 1.0).powi(2) + (dj - 1.0).powi(2))))
        }
    ),
    edge!(
        62,
        "max_{v~j} 2 + sqrt(m_v^2 + 4 m_v m_j + m_j^2 - 2 d_v d_j - 4 (d_v + d_j) + 4)",
        |r, dv, mv, dj, mj| {
            2.0 + r.sqrt(mv * mv + 4.0 * mv * mj + mj * mj - 2.0 * dv * dj - 4.0 * (dv + dj) + 4.0)
        }
    ),
    edge!(
        63,
        "max_{v~j} d_v + d_j + m_v + m_j - 4 d_v d_j / (m_v + m_j)",
        |r, dv, mv, dj, mj| dv + dj + mv + mj - 4.0 * dv * dj / (mv + mj)
    ),
    edge!(64, "max_{v~j} m_v m_j (d_v + d_j) / (d_v d_j)", |r, dv, mv, dj, mj| {
        mv * mj * (dv + dj) / (dv * dj)
    }),
    edge!(
        65,
        "max_{v~j} (m_v + m_j)(d_v m_v + d_j m_j) / (2 m_v m_j)",
        |r, dv, mv, dj, mj| (mv + mj) * (dv * mv + dj * mj) / (2.0 * mv * mj)
    ),
    edge!(
        66,
        "max_{v~j} (m_v^2 + 4 m_v m_j + m_j^2 - (d_v m_v + d_j m_j)) / (d_v + d_j)",
        |r, dv, mv, dj, mj| {
            (mv * mv + 4.0 * mv * mj + mj * mj - (dv * mv + dj * mj)) / (dv + dj)
        }
    ),
    edge!(
        67,
        "max_{v~j} (m_v + m_j)(d_v m_v + d_j m_j) / (2 d_v d_j)",
        |r, dv, mv, dj, mj| (mv + mj) * (dv * mv + dj * mj) / (2.0 * dv * dj)
    ),
    edge!(
        68,
        "max_{v~j} 2 + sqrt((m_v - m_j)^2 + 4 d_v d_j - 4 (m_v + m_j) + 4)",
        |r, dv, mv, dj, mj| {
            2.0 + r.sqrt((mv - mj).powi(2) + 4.0 * dv * dj - 4.0 * (mv + mj) + 4.0)
        }
    ),
];

/// Where the maximum of a bound was attained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Witness {
    Vertex(usize),
    Edge(usize, usize),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Vertex(v) => write!(f, "vertex {v}"),
            Witness::Edge(v, j) => write!(f, "edge {v}~{j}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundValue {
    pub bound: f64,
    pub witness: Witness,
    /// Some radicand was clamped somewhere in the domain.
    pub clamped_any: bool,
    /// A radicand was clamped in the expression at the witness.
    pub clamped_at_witness: bool,
}

/// Evaluates the bound of `id` on a connected graph with at least two vertices.
pub fn bound_value(id: ConjectureId, g: &Graph) -> Result<BoundValue> {
    if g.n() < 2 {
        return Err(Error::Domain("bounds need at least two vertices".into()));
    }
    if !g.is_connected() {
        return Err(Error::Domain(format!(
            "conjecture {id} applies to connected graphs; input has {} components",
            g.component_count()
        )));
    }
    let profile = g.degree_profile();
    let stats = |v: usize| VertexStats {
        d: profile.degrees[v] as f64,
        m: profile.neighbor_avg[v],
    };

    let mut best: Option<BoundValue> = None;
    let mut clamped_any = false;
    let mut consider = |value: f64, witness: Witness, clamped: bool| {
        clamped_any |= clamped;
        if best.is_none_or(|b| value > b.bound) {
            best = Some(BoundValue {
                bound: value,
                witness,
                clamped_any: false,
                clamped_at_witness: clamped,
            });
        }
    };

    match id.spec().evaluator {
        Evaluator::Vertex(f) => {
            for v in 0..g.n() {
                let mut r = Radicals::default();
                let value = f(&mut r, stats(v));
                consider(value, Witness::Vertex(v), r.clamped);
            }
        }
        Evaluator::Edge(f) => {
            for (v, j) in g.edges() {
                let mut r = Radicals::default();
                let value = f(&mut r, stats(v), stats(j));
                consider(value, Witness::Edge(v, j), r.clamped);
            }
        }
    }

    let mut best = best.ok_or_else(|| Error::Domain(format!("conjecture {id}: empty maximisation domain")))?;
    if !best.bound.is_finite() {
        return Err(Error::Numerical {
            message: format!("conjecture {id} evaluated to {}", best.bound),
            best_estimate: None,
        });
    }
    best.clamped_any = clamped_any;
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvaluationReport {
    pub id: ConjectureId,
    pub bound: f64,
    pub mu: f64,
    pub margin: f64,
    pub witness: Witness,
    pub clamped: bool,
    pub clamped_at_witness: bool,
}

/// Spectral radius and bound of `id` on `g`, computed at eigensolver tolerance `tol`.
pub fn evaluate(id: ConjectureId, g: &Graph, tol: f64) -> Result<EvaluationReport> {
    let b = bound_value(id, g)?;
    let mu = laplacian_spectral_radius(g, tol)?.mu;
    Ok(EvaluationReport {
        id,
        bound: b.bound,
        mu,
        margin: mu - b.bound,
        witness: b.witness,
        clamped: b.clamped_any,
        clamped_at_witness: b.clamped_at_witness,
    })
}

/// Penalty returned for a disconnected graph: `-(n + components)`.
pub fn disconnected_penalty(g: &Graph) -> f64 {
    -((g.n() + g.component_count()) as f64)
}

/// Search reward `µ(L) − bound`. Disconnected graphs get [`disconnected_penalty`].
pub fn reward(id: ConjectureId, g: &Graph) -> Result<f64> {
    if !g.is_connected() {
        return Ok(disconnected_penalty(g));
    }
    let b = bound_value(id, g)?;
    let mu = laplacian_spectral_radius(g, SEARCH_TOL)?.mu;
    Ok(mu - b.bound)
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: ConjectureId,
    pub form: BoundForm,
    pub formula: &'static str,
}

pub fn list_conjectures() -> Vec<CatalogEntry> {
    CATALOG
        .iter()
        .map(|s| CatalogEntry {
            id: ConjectureId(s.id),
            form: s.form,
            formula: s.formula,
        })
        .collect()
}
