//! Single-step multiple-testing procedures for weakly dependent Gaussian
//! means: cutoffs, factor-correlation models, Monte-Carlo error-rate and
//! power estimators, and their asymptotic limits.

pub mod asym;
pub mod depmodels;
pub mod error;
pub mod gauss;
pub mod mc;
pub mod procedures;
pub mod rng;

pub use depmodels::{build_schedule, DependenceModel, LambdaSchedule, ProductFactor};
pub use error::{Error, Result};
pub use mc::{Estimate, McRun, MeanConfig, Metric};
pub use procedures::{Cutoff, Family, Level, ProcedureSpec, Sided};
