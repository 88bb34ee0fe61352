//! Epidemic rate surfaces, per-day distribution fitting with
//! Kolmogorov-Smirnov selection, second-stage parameter fits and a
//! parametric reinsurance contract priced on the fitted parameters.
//!
//! Numerical code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod cli;
pub mod corpus;
pub mod distributions;
pub mod error;
pub mod fitting;
pub mod meta;
pub mod optimize;
pub mod rates;
pub mod reinsurance;
pub mod scalar;
pub mod seed;
pub mod special;
pub mod stats;

pub use error::Error;

pub type ParamVectorF64 = distributions::ParamVector<f64>;
pub type ModelF64 = distributions::Model<f64>;
pub type FitResultF64 = fitting::FitResult<f64>;
pub type ParameterTraceF64 = fitting::ParameterTrace<f64>;
pub type SelectionSummaryF64 = fitting::SelectionSummary<f64>;
pub type RateSurfaceF64 = rates::RateSurface<f64>;
pub type StatsRowF64 = stats::StatsRow<f64>;
pub type TraceStatsTableF64 = meta::TraceStatsTable<f64>;
pub type ParameterDistributionFitF64 = meta::ParameterDistributionFit<f64>;
