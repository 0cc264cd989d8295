//! Lundberg-type upper bounds on ruin probabilities for non-homogeneous risk
//! models, with adjustment-coefficient solvers and a Monte Carlo verifier.

pub mod adjustment;
pub mod bounds;
pub mod cli;
pub mod distributions;
pub mod extended;
pub mod model;
pub mod montecarlo;
mod optimize;
pub mod report;

pub use adjustment::{AdjustmentError, AdjustmentResult, Flavor};
pub use bounds::{BoundError, BoundMethod, BoundResult, Certificate, PeriodicOptions, PeriodicVariant};
pub use distributions::{DistError, IncrementDistribution};
pub use extended::ExtendedLogValue;
pub use model::{EventModel, EventStep, RateRule, RiskModel, SequenceRule, SupArgmax, SupLogMgf, TruncationPolicy};
pub use montecarlo::{SimConfig, SimError, SimResult};
