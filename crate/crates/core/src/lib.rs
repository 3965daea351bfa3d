//! Conditionally Markov (CM), reciprocal and Markov zero-mean Gaussian
//! sequences.
//!
//! * [`classify`] decides class membership from the zero-block pattern of the
//!   precision matrix `C⁻¹` and its Schur complements.
//! * [`oracle`] checks the same properties straight from conditional
//!   independences (partial covariances), as an independent ground truth.
//! * [`models`] builds white-noise-driven forward and backward CM_c models,
//!   checks their reciprocity and Markov parameter conditions, and reassembles
//!   `C⁻¹ = 𝒢' G⁻¹ 𝒢`.
//! * [`simulate`] draws seeded, thread-count independent sample batches.

pub mod classify;
pub mod error;
pub mod fixtures;
pub mod law;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod simulate;
pub mod structure;

pub use classify::{full_report, ClassificationReport, Classifier, Verdict};
pub use error::{Error, Result};
pub use law::{ConditioningSide, IndexInterval, SequenceLaw, Tolerance};
pub use linalg::{BlockMatrix, Mat};
pub use models::{BoundaryCondition, CmcModel, Direction, LawClass};
pub use structure::{PatternKind, PatternSpec, PatternWitness};
