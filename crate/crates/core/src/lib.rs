//! Cross-entropy search for graphs that violate conjectured upper bounds on the
//! Laplacian spectral radius, and a verifier that certifies candidates.

pub mod certificate;
pub mod conjecture;
pub mod engine;
pub mod error;
pub mod format;
pub mod graph;
pub mod parallel;
pub mod policy;
pub mod run;
pub mod spectral;

pub use certificate::{verify_counterexample, Certification, CounterexampleRecord, Rejection};
pub use conjecture::{bound_value, reward, ConjectureId};
pub use error::{Error, Result};
pub use graph::{DegreeProfile, Graph};
pub use spectral::{laplacian_spectral_radius, SpectralResult};
