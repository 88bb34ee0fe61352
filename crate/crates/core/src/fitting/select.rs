use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::distributions::{DistributionId, ParamVector};
use crate::rates::{RateKind, RateSurface};
use crate::scalar::Real;

use super::{family_index, fit_mle, rank_candidates, FitError, FitOptions, FitResult, NamedParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry<T> {
    pub family: DistributionId,
    pub ks: T,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DaySelection<T> {
    pub date: NaiveDate,
    pub n: usize,
    /// Best three candidates, best first.
    pub top: Vec<RankedEntry<T>>,
    pub zeros_perturbed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedDay {
    pub date: NaiveDate,
    pub reason: String,
}

/// Outcome of ranking the catalog on every day of a surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionSummary<T> {
    pub kind: RateKind,
    pub catalog: Vec<DistributionId>,
    pub per_day: Vec<DaySelection<T>>,
    /// Most frequent first-ranked family.
    pub winner: DistributionId,
    pub winner_day_count: usize,
    /// Days that were ranked (skipped days excluded).
    pub total_days: usize,
    /// First-place count per family.
    pub wins: BTreeMap<DistributionId, usize>,
    /// Mean KS distance per family over the ranked days; breaks ties in `wins`.
    pub mean_ks: BTreeMap<DistributionId, T>,
    pub skipped: Vec<SkippedDay>,
}

/// Seed component identifying a calendar day independently of the window.
fn day_key(date: NaiveDate) -> u64 {
    date.num_days_from_ce() as u64
}

type DayOutcome<T> = (NaiveDate, usize, Result<Vec<FitResult<T>>, FitError>);

/// Rank the catalog on every day with at least `min_day_sample` usable
/// cells and pick the modal winner. Modal ties go to the lower mean KS, then
/// to catalog order.
pub fn daily_selection<T: Real>(
    surface: &RateSurface<T>,
    catalog: &[DistributionId],
    options: &FitOptions,
) -> Result<SelectionSummary<T>, FitError> {
    if catalog.is_empty() {
        return Err(FitError::EmptyCatalog);
    }
    let outcomes: Vec<DayOutcome<T>> = surface
        .dates()
        .par_iter()
        .enumerate()
        .map(|(d, &date)| {
            let xs = surface.cross_section(d);
            let n = xs.len();
            if n < options.min_day_sample {
                return (
                    date,
                    n,
                    Err(FitError::TooFewObservations {
                        family: catalog[0],
                        need: options.min_day_sample,
                        got: n,
                    }),
                );
            }
            (
                date,
                n,
                rank_candidates(&xs, catalog, &options.derived(&[day_key(date)])),
            )
        })
        .collect();

    let mut per_day = Vec::new();
    let mut skipped = Vec::new();
    let mut wins: BTreeMap<DistributionId, usize> = catalog.iter().map(|&id| (id, 0)).collect();
    let mut ks_sum: BTreeMap<DistributionId, (T, usize)> = BTreeMap::new();
    for (date, n, outcome) in outcomes {
        match outcome {
            Ok(ranked) => {
                *wins.get_mut(&ranked[0].id).expect("catalog member") += 1;
                for fit in &ranked {
                    let e = ks_sum.entry(fit.id).or_insert((T::zero(), 0));
                    e.0 = e.0 + fit.ks;
                    e.1 += 1;
                }
                per_day.push(DaySelection {
                    date,
                    n,
                    top: ranked
                        .iter()
                        .take(3)
                        .map(|f| RankedEntry {
                            family: f.id,
                            ks: f.ks,
                            converged: f.converged,
                        })
                        .collect(),
                    zeros_perturbed: ranked[0].zeros_perturbed,
                });
            }
            Err(FitError::TooFewObservations { got, .. }) if got < options.min_day_sample => {
                skipped.push(SkippedDay {
                    date,
                    reason: format!("{got} usable cells, need {}", options.min_day_sample),
                })
            }
            Err(e) => skipped.push(SkippedDay {
                date,
                reason: e.to_string(),
            }),
        }
    }
    if per_day.is_empty() {
        return Err(FitError::NoUsableDays {
            min: options.min_day_sample,
        });
    }
    let mean_ks: BTreeMap<DistributionId, T> = ks_sum
        .into_iter()
        .map(|(id, (s, c))| (id, s / T::from_usize_lossy(c)))
        .collect();

    let mut winner = catalog[0];
    for &id in catalog {
        let (w, best) = (wins[&id], wins[&winner]);
        let ks = |id| mean_ks.get(&id).copied().unwrap_or(T::infinity());
        if w > best || (w == best && ks(id) < ks(winner)) {
            winner = id;
        }
    }
    Ok(SelectionSummary {
        kind: surface.kind(),
        catalog: catalog.to_vec(),
        total_days: per_day.len(),
        winner_day_count: wins[&winner],
        winner,
        per_day,
        wins,
        mean_ks,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFailure<T> {
    pub date: NaiveDate,
    pub reason: String,
    /// Best point reached when the optimizer stopped without converging.
    pub params: Option<ParamVector<T>>,
}

/// Day-indexed parameters of one family.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterTrace<T> {
    pub id: DistributionId,
    pub days: Vec<NaiveDate>,
    pub values: Vec<ParamVector<T>>,
    pub failures: Vec<TraceFailure<T>>,
}

impl<T: Real> ParameterTrace<T> {
    pub fn new(id: DistributionId, days: Vec<NaiveDate>, values: Vec<ParamVector<T>>) -> Self {
        assert_eq!(days.len(), values.len(), "one value per day");
        ParameterTrace {
            id,
            days,
            values,
            failures: Vec::new(),
        }
    }

    /// Values of one parameter over the successful days.
    pub fn series(&self, name: &str) -> Option<Vec<T>> {
        let idx = self.id.param_names().iter().position(|&p| p == name)?;
        Some(self.values.iter().map(|p| p.values()[idx]).collect())
    }

    /// `date,<params>,converged`, one row per day in date order. Failed days
    /// carry the best point reached, or empty fields.
    pub fn to_csv(&self) -> String {
        let names = self.id.param_names();
        let mut rows: Vec<(NaiveDate, Option<&ParamVector<T>>, bool)> = self
            .days
            .iter()
            .zip(&self.values)
            .map(|(&d, p)| (d, Some(p), true))
            .collect();
        rows.extend(
            self.failures
                .iter()
                .map(|f| (f.date, f.params.as_ref(), false)),
        );
        rows.sort_by_key(|r| r.0);

        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["date"];
        header.extend_from_slice(names);
        header.push("converged");
        w.write_record(&header).expect("in-memory write");
        for (date, params, ok) in rows {
            let mut rec = vec![date.to_string()];
            match params {
                Some(p) => rec.extend(p.values().iter().map(|v| v.to_string())),
                None => rec.extend(names.iter().map(|_| String::new())),
            }
            rec.push(ok.to_string());
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

impl<T: Real + Serialize> Serialize for ParameterTrace<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Day<'a, T: Real + Serialize> {
            date: NaiveDate,
            params: NamedParams<'a, T>,
        }
        #[derive(Serialize)]
        struct Failure<'a> {
            date: NaiveDate,
            reason: &'a str,
        }
        let mut m = s.serialize_map(Some(3))?;
        m.serialize_entry("family", &self.id)?;
        let days: Vec<Day<T>> = self
            .days
            .iter()
            .zip(&self.values)
            .map(|(&date, p)| Day {
                date,
                params: NamedParams(p),
            })
            .collect();
        m.serialize_entry("days", &days)?;
        let failures: Vec<Failure> = self
            .failures
            .iter()
            .map(|f| Failure {
                date: f.date,
                reason: &f.reason,
            })
            .collect();
        m.serialize_entry("failures", &failures)?;
        m.end()
    }
}

/// Fit `id` alone on every day. A day succeeds only when the optimizer
/// converges; days below the minimum sample size count as failures.
///
/// Seeds match those used by [`daily_selection`], so the winner's trace
/// reproduces its per-day ranking fits.
pub fn refit_winner<T: Real>(
    surface: &RateSurface<T>,
    id: DistributionId,
    options: &FitOptions,
) -> Result<ParameterTrace<T>, FitError> {
    let outcomes: Vec<(NaiveDate, Result<FitResult<T>, FitError>)> = surface
        .dates()
        .par_iter()
        .enumerate()
        .map(|(d, &date)| {
            let xs = surface.cross_section(d);
            if xs.len() < options.min_day_sample {
                return (
                    date,
                    Err(FitError::TooFewObservations {
                        family: id,
                        need: options.min_day_sample,
                        got: xs.len(),
                    }),
                );
            }
            let opts = options
                .derived(&[day_key(date)])
                .derived(&[family_index(id)]);
            (date, fit_mle(id, &xs, &opts))
        })
        .collect();

    let mut trace = ParameterTrace {
        id,
        days: Vec::new(),
        values: Vec::new(),
        failures: Vec::new(),
    };
    for (date, outcome) in outcomes {
        match outcome {
            Ok(fit) if fit.converged => {
                trace.days.push(date);
                trace.values.push(fit.params);
            }
            Ok(fit) => trace.failures.push(TraceFailure {
                date,
                reason: "optimizer did not converge".into(),
                params: Some(fit.params),
            }),
            Err(e) => trace.failures.push(TraceFailure {
                date,
                reason: e.to_string(),
                params: None,
            }),
        }
    }
    if trace.values.is_empty() {
        return Err(FitError::AllDaysFailed { family: id });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sample;
    use crate::rates::Cell;

    fn surface(days: usize, per_day: usize) -> RateSurface<f64> {
        let p = ParamVector::new(DistributionId::Normal, vec![0.002, 0.001]).unwrap();
        let start: NaiveDate = "2020-02-01".parse().unwrap();
        let dates: Vec<NaiveDate> = start.iter_days().take(days).collect();
        let cells = (0..days)
            .map(|d| {
                let xs = sample(&p, d as u64, 17).unwrap();
                xs.iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        if i < per_day {
                            Cell::Value(x)
                        } else {
                            Cell::Missing(crate::rates::Missing::NoRecord)
                        }
                    })
                    .collect()
            })
            .collect();
        RateSurface::from_cells(
            RateKind::DeathRate,
            (0..17).map(|i| format!("c{i}")).collect(),
            dates,
            cells,
        )
    }

    #[test]
    fn selection_is_deterministic_and_counts_add_up() {
        let s = surface(4, 17);
        let catalog = [
            DistributionId::Normal,
            DistributionId::HyperbolicSecant,
            DistributionId::Gev,
        ];
        let opts = FitOptions::default();
        let a = daily_selection(&s, &catalog, &opts).unwrap();
        let b = daily_selection(&s, &catalog, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_days, 4);
        assert_eq!(a.wins.values().sum::<usize>(), 4);
        assert!(a.winner_day_count <= a.total_days);
        assert!(a.per_day.iter().all(|d| d.top.len() == 3));
    }

    #[test]
    fn short_days_are_skipped() {
        let s = surface(2, 3);
        let e = daily_selection(&s, &[DistributionId::Normal], &FitOptions::default()).unwrap_err();
        assert!(matches!(e, FitError::NoUsableDays { min: 5 }));
        let trace_err =
            refit_winner(&s, DistributionId::Normal, &FitOptions::default()).unwrap_err();
        assert_eq!(trace_err.code(), "fitting.all_days_failed");
    }

    #[test]
    fn refit_trace_csv() {
        let s = surface(3, 17);
        let t = refit_winner(&s, DistributionId::Normal, &FitOptions::default()).unwrap();
        assert_eq!(t.values.len(), 3);
        let csv = t.to_csv();
        assert!(csv.starts_with("date,mu,sigma,converged\n2020-02-01,"));
        assert_eq!(t.series("sigma").unwrap().len(), 3);
        assert!(t.series("k").is_none());
    }
}
