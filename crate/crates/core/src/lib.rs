//! Quantum predictions, hidden-variable models and Bell inequalities for
//! spin-½ singlet pairs measured along a handful of planar directions.
//!
//! * [`quantum`]: closed-form singlet and single-particle statistics.
//! * [`lhv`]: deterministic strategies, mixtures, and run tables.
//! * [`inequalities`]: (*), (**), the four-vector bound, and angle families.
//! * [`polytope`]: LP membership in the classical correlation polytope.
//! * [`montecarlo`]: seeded sampling and estimate reports.

pub mod error;
pub mod inequalities;
pub mod json;
pub mod lhv;
pub mod montecarlo;
pub mod polytope;
pub mod presets;
pub mod quantum;
pub mod sampling;
pub mod simplex;

pub use error::{Error, Result};
pub use inequalities::{CoincidenceStats, InequalityReport};
pub use lhv::{DeterministicStrategy, LhvModel, RunTable, Scenario};
pub use presets::ScenarioPreset;
pub use quantum::{Direction, MeasurementSetting, Outcome, Side};

/// Version tag carried by every JSON document the tools emit.
pub const SCHEMA_VERSION: u32 = 1;
