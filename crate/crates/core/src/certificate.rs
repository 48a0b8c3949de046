//! Counterexample certification and the exportable certificate block.

use std::fmt::Write as _;

use crate::conjecture::{bound_value, ConjectureId, Witness};
use crate::error::{Error, Result};
use crate::format::{from_adjacency_text, to_adjacency_text, to_graph6};
use crate::graph::Graph;
use crate::spectral::{laplacian_spectral_radius, CERTIFY_TOL};

/// Default margin a violation must clear to be certified.
pub const DEFAULT_STRICT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleRecord {
    pub conjecture: ConjectureId,
    pub graph: Graph,
    pub mu: f64,
    pub bound: f64,
    pub margin: f64,
    pub residual: f64,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rejection {
    Disconnected { components: usize },
    /// `mu - bound` did not exceed the strict tolerance.
    Margin {
        mu: f64,
        bound: f64,
        margin: f64,
        clamped: bool,
    },
    /// The margin is large enough but the maximising expression had a clamped radicand.
    ClampedWitness {
        mu: f64,
        bound: f64,
        margin: f64,
        witness: Witness,
    },
}

impl Rejection {
    pub fn margin(&self) -> Option<f64> {
        match self {
            Rejection::Disconnected { .. } => None,
            Rejection::Margin { margin, .. } | Rejection::ClampedWitness { margin, .. } => Some(*margin),
        }
    }
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rejection::Disconnected { components } => {
                write!(f, "graph is disconnected ({components} components)")
            }
            Rejection::Margin { mu, bound, margin, clamped } => write!(
                f,
                "not violated: mu = {mu}, bound = {bound}, margin = {margin:e}, clamped radicands = {clamped}"
            ),
            Rejection::ClampedWitness { mu, bound, margin, witness } => write!(
                f,
                "margin {margin:e} (mu = {mu}, bound = {bound}) relies on a clamped radicand at {witness}"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certification {
    Certified(CounterexampleRecord),
    Rejected(Rejection),
}

impl Certification {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certification::Certified(_))
    }

    pub fn record(&self) -> Option<&CounterexampleRecord> {
        match self {
            Certification::Certified(r) => Some(r),
            Certification::Rejected(_) => None,
        }
    }
}

/// Recomputes `µ` at [`CERTIFY_TOL`] and the bound, and certifies the graph iff it is
/// connected, `µ − bound > strict_tol`, and no radicand was clamped at the maximiser.
pub fn verify_counterexample(g: &Graph, id: ConjectureId, strict_tol: f64) -> Result<Certification> {
    if !(strict_tol > 0.0) {
        return Err(Error::Domain(format!("strict tolerance must be positive, got {strict_tol}")));
    }
    if g.n() < 2 || !g.is_connected() {
        return Ok(Certification::Rejected(Rejection::Disconnected {
            components: g.component_count(),
        }));
    }
    let b = bound_value(id, g)?;
    let spectral = laplacian_spectral_radius(g, CERTIFY_TOL)?;
    let margin = spectral.mu - b.bound;
    if !(margin > strict_tol) {
        return Ok(Certification::Rejected(Rejection::Margin {
            mu: spectral.mu,
            bound: b.bound,
            margin,
            clamped: b.clamped_any,
        }));
    }
    if b.clamped_at_witness {
        return Ok(Certification::Rejected(Rejection::ClampedWitness {
            mu: spectral.mu,
            bound: b.bound,
            margin,
            witness: b.witness,
        }));
    }
    Ok(Certification::Certified(CounterexampleRecord {
        conjecture: id,
        graph: g.clone(),
        mu: spectral.mu,
        bound: b.bound,
        margin,
        residual: spectral.residual,
        witness: b.witness,
    }))
}

const EXPORT_HEADER: &str = "# Laplacian spectral radius counterexample";

impl CounterexampleRecord {
    /// The text block written for each certified find.
    ///
    /// ```text
    /// # Laplacian spectral radius counterexample
    /// conjecture: 3
    /// n: 12
    /// mu: 7.414213562373095
    /// bound: 7.265625
    /// margin: 0.14858856237309517
    /// graph6: KM__PrC@aEEB
    /// adjacency:
    /// [[0 0 0 1 ...]
    ///  ...]]
    /// ```
    pub fn export_block(&self) -> String {
        let mut s = String::new();
        let g6 = to_graph6(&self.graph).unwrap_or_else(|_| "-".into());
        writeln!(s, "{EXPORT_HEADER}").unwrap();
        writeln!(s, "conjecture: {}", self.conjecture).unwrap();
        writeln!(s, "n: {}", self.graph.n()).unwrap();
        writeln!(s, "mu: {}", self.mu).unwrap();
        writeln!(s, "bound: {}", self.bound).unwrap();
        writeln!(s, "margin: {}", self.margin).unwrap();
        writeln!(s, "graph6: {g6}").unwrap();
        writeln!(s, "adjacency:").unwrap();
        writeln!(s, "{}", to_adjacency_text(&self.graph)).unwrap();
        s
    }
}

/// Fields recovered from an export block. The graph comes from the adjacency rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ExportedCounterexample {
    pub conjecture: ConjectureId,
    pub graph: Graph,
    pub mu: f64,
    pub bound: f64,
    pub margin: f64,
}

pub fn parse_export_block(text: &str) -> Result<ExportedCounterexample> {
    let mut conjecture = None;
    let mut mu = None;
    let mut bound = None;
    let mut margin = None;
    let mut n = None;
    for line in text.lines() {
        let Some((key, value)) = line.split_once(':') else { continue };
        let value = value.trim();
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::parse(key.trim().to_string(), format!("bad number `{v}`")))
        };
        match key.trim() {
            "conjecture" => conjecture = Some(value.parse::<ConjectureId>()?),
            "n" => n = Some(num(value)? as usize),
            "mu" => mu = Some(num(value)?),
            "bound" => bound = Some(num(value)?),
            "margin" => margin = Some(num(value)?),
            _ => {}
        }
    }
    let graph = from_adjacency_text(adjacency_section(text).ok_or_else(|| {
        Error::parse("adjacency", "no `[[ ... ]]` block in counterexample file")
    })?)?;
    if let Some(n) = n {
        if n != graph.n() {
            return Err(Error::parse("n", format!("header says {n} vertices, matrix has {}", graph.n())));
        }
    }
    let missing = |field: &str| Error::parse(field.to_string(), "missing field");
    Ok(ExportedCounterexample {
        conjecture: conjecture.ok_or_else(|| missing("conjecture"))?,
        graph,
        mu: mu.ok_or_else(|| missing("mu"))?,
        bound: bound.ok_or_else(|| missing("bound"))?,
        margin: margin.ok_or_else(|| missing("margin"))?,
    })
}

/// The substring from the first line starting with `[[` through the first line ending in `]]`.
pub fn adjacency_section(text: &str) -> Option<&str> {
    let start = text.find("[[")?;
    let rest = &text[start..];
    let end = rest.find("]]")?;
    Some(&rest[..end + 2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k4_is_rejected_with_margin_minus_two() {
        let c = verify_counterexample(&Graph::complete(4), ConjectureId::new(3).unwrap(), DEFAULT_STRICT_TOL)
            .unwrap();
        match c {
            Certification::Rejected(r) => assert!((r.margin().unwrap() + 2.0).abs() < 1e-10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn disconnected_is_rejected() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]);
        let c = verify_counterexample(&g, ConjectureId::new(3).unwrap(), DEFAULT_STRICT_TOL).unwrap();
        assert_eq!(c, Certification::Rejected(Rejection::Disconnected { components: 2 }));
    }

    #[test]
    fn export_block_parses_back() {
        let rec = CounterexampleRecord {
            conjecture: ConjectureId::new(64).unwrap(),
            graph: Graph::path(4),
            mu: 3.414213562373095,
            bound: 3.25,
            margin: 0.164213562373095,
            residual: 1e-15,
            witness: Witness::Edge(0, 1),
        };
        let block = rec.export_block();
        assert!(block.contains("graph6: Ch\n"));
        let back = parse_export_block(&block).unwrap();
        assert_eq!(back.graph, rec.graph);
        assert_eq!(back.conjecture, rec.conjecture);
        assert_eq!(back.mu, rec.mu);
        assert_eq!(back.margin, rec.margin);
    }
}
