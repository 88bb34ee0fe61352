//! Per-day maximum-likelihood fitting and Kolmogorov-Smirnov ranking.

mod ks;
mod mle;
mod select;

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::distributions::{DistributionId, ParamVector};
use crate::scalar::Real;
use crate::seed::derive_seed;

pub use ks::ks_statistic;
pub use mle::fit_mle;
pub use select::{
    daily_selection, refit_winner, DaySelection, ParameterTrace, RankedEntry, SelectionSummary,
    SkippedDay, TraceFailure,
};

/// What to do with exact zeros in a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroPolicy {
    /// Fit the data as observed.
    #[default]
    Keep,
    /// Replace zeros by half the smallest positive value in the sample.
    Perturb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Jittered restarts on top of the moment-based starting points.
    pub restarts: usize,
    pub max_iters: usize,
    /// Relative tolerance on the spread of the simplex objective values.
    pub tol: f64,
    /// Days with fewer usable cells are skipped.
    pub min_day_sample: usize,
    pub seed: u64,
    pub zero_policy: ZeroPolicy,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 8,
            max_iters: 2000,
            tol: 1e-10,
            min_day_sample: 5,
            seed: 20200124,
            zero_policy: ZeroPolicy::Keep,
        }
    }
}

impl FitOptions {
    /// Same options with a seed derived from this one and `parts`.
    pub fn derived(&self, parts: &[u64]) -> Self {
        FitOptions {
            seed: derive_seed(self.seed, parts),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub id: DistributionId,
    pub params: ParamVector<T>,
    pub log_likelihood: T,
    pub ks: T,
    pub n: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Zeros replaced under [`ZeroPolicy::Perturb`].
    pub zeros_perturbed: usize,
}

/// Parameter map of a [`ParamVector`] in canonical order.
pub(crate) struct NamedParams<'a, T>(pub &'a ParamVector<T>);

impl<T: Real + Serialize> Serialize for NamedParams<'_, T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.id().arity()))?;
        for (name, v) in self.0.named() {
            m.serialize_entry(name, &v)?;
        }
        m.end()
    }
}

impl<T: Real + Serialize> Serialize for FitResult<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(8))?;
        m.serialize_entry("family", &self.id)?;
        m.serialize_entry("params", &NamedParams(&self.params))?;
        m.serialize_entry("ks", &self.ks)?;
        m.serialize_entry("log_likelihood", &self.log_likelihood)?;
        m.serialize_entry("n", &self.n)?;
        m.serialize_entry("converged", &self.converged)?;
        m.serialize_entry("restarts_used", &self.restarts_used)?;
        m.serialize_entry("zeros_perturbed", &self.zeros_perturbed)?;
        m.end()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("{family} needs at least {need} observations, got {got}")]
    TooFewObservations {
        family: DistributionId,
        need: usize,
        got: usize,
    },
    #[error("sample contains non-finite values")]
    NonFiniteData,
    #[error("all observations are equal; {family} cannot be fitted")]
    DegenerateSample { family: DistributionId },
    #[error("no feasible starting point for {family}")]
    NoFeasibleStart { family: DistributionId },
    #[error("{0}")]
    Distribution(String),
    #[error("empty catalog")]
    EmptyCatalog,
    #[error("every candidate failed: {}", reasons.iter().map(|(id, r)| format!("{id}: {r}")).collect::<Vec<_>>().join("; "))]
    AllCandidatesFailed {
        reasons: Vec<(DistributionId, String)>,
    },
    #[error("no day has at least {min} usable observations")]
    NoUsableDays { min: usize },
    #[error("the {family} refit failed on every day")]
    AllDaysFailed { family: DistributionId },
}

impl FitError {
    pub fn code(&self) -> &'static str {
        match self {
            FitError::TooFewObservations { .. } => "fitting.too_few_observations",
            FitError::NonFiniteData => "fitting.non_finite_data",
            FitError::DegenerateSample { .. } => "fitting.degenerate_sample",
            FitError::NoFeasibleStart { .. } => "fitting.no_feasible_start",
            FitError::Distribution(_) => "fitting.distribution",
            FitError::EmptyCatalog => "fitting.empty_catalog",
            FitError::AllCandidatesFailed { .. } => "fitting.all_candidates_failed",
            FitError::NoUsableDays { .. } => "fitting.no_usable_days",
            FitError::AllDaysFailed { .. } => "fitting.all_days_failed",
        }
    }
}

fn family_index(id: DistributionId) -> u64 {
    DistributionId::ALL
        .iter()
        .position(|&d| d == id)
        .expect("catalog member") as u64
}

/// Fit every catalog family and order the results: converged fits first,
/// then ascending KS distance, then fewer parameters, then catalog order.
///
/// Each family runs with a seed derived from `options.seed` and the family,
/// so the ranking does not depend on catalog order or thread count.
pub fn rank_candidates<T: Real>(
    data: &[T],
    catalog: &[DistributionId],
    options: &FitOptions,
) -> Result<Vec<FitResult<T>>, FitError> {
    if catalog.is_empty() {
        return Err(FitError::EmptyCatalog);
    }
    let outcomes: Vec<(usize, Result<FitResult<T>, FitError>)> = catalog
        .par_iter()
        .enumerate()
        .map(|(pos, &id)| {
            (
                pos,
                fit_mle(id, data, &options.derived(&[family_index(id)])),
            )
        })
        .collect();
    let mut ok = Vec::new();
    let mut reasons = Vec::new();
    for (pos, outcome) in outcomes {
        match outcome {
            Ok(fit) => ok.push((pos, fit)),
            Err(e) => reasons.push((catalog[pos], e.to_string())),
        }
    }
    if ok.is_empty() {
        return Err(FitError::AllCandidatesFailed { reasons });
    }
    ok.sort_by(|(pa, a), (pb, b)| {
        b.converged
            .cmp(&a.converged)
            .then(a.ks.partial_cmp(&b.ks).unwrap_or(std::cmp::Ordering::Equal))
            .then(a.id.arity().cmp(&b.id.arity()))
            .then(pa.cmp(pb))
    });
    Ok(ok.into_iter().map(|(_, f)| f).collect())
}
