//! Second stage: the fitted parameters themselves treated as samples.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::distributions::DistributionId;
use crate::fitting::{rank_candidates, FitError, FitOptions, FitResult, ParameterTrace};
use crate::scalar::Real;
use crate::stats::{describe, StatsRow};

/// Fewest successful days for which parameter statistics are reported.
pub const MIN_TRACE_DAYS: usize = 4;

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("trace has {got} successful days, need {need}")]
    TooFewDays { need: usize, got: usize },
    #[error("{family} has no parameter {name:?}")]
    UnknownParameter {
        family: DistributionId,
        name: String,
    },
    #[error(transparent)]
    Fit(#[from] FitError),
}

impl MetaError {
    pub fn code(&self) -> &'static str {
        match self {
            MetaError::TooFewDays { .. } => "meta.too_few_days",
            MetaError::UnknownParameter { .. } => "meta.unknown_parameter",
            MetaError::Fit(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStatsTable<T> {
    pub family: DistributionId,
    /// One row per parameter, in the family's canonical order.
    pub rows: Vec<(String, StatsRow<T>)>,
}

impl<T: Real> TraceStatsTable<T> {
    pub fn get(&self, name: &str) -> Option<&StatsRow<T>> {
        self.rows.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }

    /// `param,mean,sd,median,min,max,skewness,kurtosis`; kurtosis is excess
    /// kurtosis, undefined moments are empty.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "param", "mean", "sd", "median", "min", "max", "skewness", "kurtosis",
        ])
        .expect("in-memory write");
        let opt = |v: Option<T>| v.map(|v| v.to_string()).unwrap_or_default();
        for (name, s) in &self.rows {
            w.write_record([
                name.clone(),
                s.mean.to_string(),
                s.sd.to_string(),
                s.median.to_string(),
                s.min.to_string(),
                s.max.to_string(),
                opt(s.skewness),
                opt(s.excess_kurtosis),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

fn check_days<T>(trace: &ParameterTrace<T>) -> Result<(), MetaError> {
    if trace.values.len() < MIN_TRACE_DAYS {
        return Err(MetaError::TooFewDays {
            need: MIN_TRACE_DAYS,
            got: trace.values.len(),
        });
    }
    Ok(())
}

/// Descriptive statistics of each parameter over the successful days.
pub fn trace_stats<T: Real>(trace: &ParameterTrace<T>) -> Result<TraceStatsTable<T>, MetaError> {
    check_days(trace)?;
    let rows = trace
        .id
        .param_names()
        .iter()
        .map(|&name| {
            let xs = trace.series(name).expect("canonical name");
            (
                name.to_string(),
                describe(&xs).expect("finite fitted parameters"),
            )
        })
        .collect();
    Ok(TraceStatsTable {
        family: trace.id,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct ParameterDistributionFit<T> {
    pub param: String,
    pub best: FitResult<T>,
    /// Top three, best first.
    pub ranked: Vec<FitResult<T>>,
    /// Days whose first-stage refit failed and are left out of the sample.
    pub excluded_days: usize,
}

/// Rank the catalog on one parameter's day series.
pub fn fit_parameter_distribution<T: Real>(
    trace: &ParameterTrace<T>,
    name: &str,
    catalog: &[DistributionId],
    options: &FitOptions,
) -> Result<ParameterDistributionFit<T>, MetaError> {
    check_days(trace)?;
    let idx = trace
        .id
        .param_names()
        .iter()
        .position(|&p| p == name)
        .ok_or_else(|| MetaError::UnknownParameter {
            family: trace.id,
            name: name.to_string(),
        })?;
    let xs = trace.series(name).expect("checked name");
    let mut ranked = rank_candidates(&xs, catalog, &options.derived(&[idx as u64]))?;
    ranked.truncate(3);
    Ok(ParameterDistributionFit {
        param: name.to_string(),
        best: ranked[0].clone(),
        ranked,
        excluded_days: trace.failures.len(),
    })
}

/// [`fit_parameter_distribution`] for every parameter of the trace.
pub fn fit_all_parameters<T: Real>(
    trace: &ParameterTrace<T>,
    catalog: &[DistributionId],
    options: &FitOptions,
) -> Result<Vec<ParameterDistributionFit<T>>, MetaError> {
    trace
        .id
        .param_names()
        .par_iter()
        .map(|name| fit_parameter_distribution(trace, name, catalog, options))
        .collect()
}
