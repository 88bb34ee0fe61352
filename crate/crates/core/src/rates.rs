//! Infection speed, death rate and fatality ratio surfaces, plus their daily
//! cross-sectional statistics.

use std::fmt;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CumulativeCorpus, PopulationTable, Record};
use crate::scalar::Real;
use crate::stats::{describe, StatsRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    InfectionSpeed,
    DeathRate,
    FatalityRatio,
}

impl RateKind {
    pub const ALL: [RateKind; 3] = [
        RateKind::InfectionSpeed,
        RateKind::DeathRate,
        RateKind::FatalityRatio,
    ];

    /// Short name used in file names and CLI flags.
    pub fn slug(self) -> &'static str {
        match self {
            RateKind::InfectionSpeed => "speed",
            RateKind::DeathRate => "death",
            RateKind::FatalityRatio => "fatality",
        }
    }
}

impl fmt::Display for RateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for RateKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "speed" | "infection_speed" => Ok(RateKind::InfectionSpeed),
            "death" | "death_rate" => Ok(RateKind::DeathRate),
            "fatality" | "fatality_ratio" => Ok(RateKind::FatalityRatio),
            other => Err(format!("unknown rate kind {other:?}")),
        }
    }
}

/// Why a cell has no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Missing {
    #[error("no record for the day")]
    NoRecord,
    #[error("no record for the previous day")]
    NoPreviousRecord,
    #[error("no population entry")]
    NoPopulation,
    #[error("population does not exceed previous confirmed count")]
    PopulationExhausted,
    #[error("no active cases")]
    NoActiveCases,
    #[error("no confirmed cases")]
    NoConfirmedCases,
}

impl Missing {
    pub fn code(self) -> &'static str {
        match self {
            Missing::NoRecord => "no_record",
            Missing::NoPreviousRecord => "no_previous_record",
            Missing::NoPopulation => "no_population",
            Missing::PopulationExhausted => "population_exhausted",
            Missing::NoActiveCases => "no_active_cases",
            Missing::NoConfirmedCases => "no_confirmed_cases",
        }
    }
}

#[derive(Debug, Error)]
pub enum RateError {
    #[error("window {start}:{end} is empty")]
    EmptyWindow { start: NaiveDate, end: NaiveDate },
    #[error("window {start}:{end} is outside the corpus range {first}:{last}")]
    WindowOutsideCorpus {
        start: NaiveDate,
        end: NaiveDate,
        first: NaiveDate,
        last: NaiveDate,
    },
    #[error("corpus has no records")]
    EmptyCorpus,
    #[error("{0} is not a day of the surface")]
    UnknownDate(NaiveDate),
    #[error("every cell is missing on {0}")]
    AllMissing(NaiveDate),
    #[error("bad window {0:?}: expected YYYY-MM-DD:YYYY-MM-DD")]
    BadWindow(String),
}

impl RateError {
    pub fn code(&self) -> &'static str {
        match self {
            RateError::EmptyWindow { .. } => "rates.empty_window",
            RateError::WindowOutsideCorpus { .. } => "rates.window_outside_corpus",
            RateError::EmptyCorpus => "rates.empty_corpus",
            RateError::UnknownDate(_) => "rates.unknown_date",
            RateError::AllMissing(_) => "rates.all_missing",
            RateError::BadWindow(_) => "rates.bad_window",
        }
    }
}

/// Inclusive range of calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        DateWindow { start, end }
    }

    pub fn days(&self) -> Vec<NaiveDate> {
        self.start
            .iter_days()
            .take_while(|d| *d <= self.end)
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

impl FromStr for DateWindow {
    type Err = RateError;
    fn from_str(s: &str) -> Result<Self, RateError> {
        let bad = || RateError::BadWindow(s.to_string());
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let start = a.trim().parse().map_err(|_| bad())?;
        let end = b.trim().parse().map_err(|_| bad())?;
        Ok(DateWindow { start, end })
    }
}

impl fmt::Display for DateWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl Serialize for DateWindow {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DateWindow {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn records<'a>(
    corpus: &'a CumulativeCorpus,
    city: &str,
    t: NaiveDate,
) -> Result<(&'a Record, &'a Record), Missing> {
    let now = corpus.get(city, t).ok_or(Missing::NoRecord)?;
    let prev = t
        .checked_sub_days(Days::new(1))
        .and_then(|d| corpus.get(city, d))
        .ok_or(Missing::NoPreviousRecord)?;
    Ok((now, prev))
}

fn ratio<T: Real>(num: i128, den: i128) -> T {
    T::from_i128(num).expect("count fits") / T::from_i128(den).expect("count fits")
}

/// New confirmed cases over the population not yet confirmed at `t - 1`.
/// Recoveries stay in the denominator. A fall in the cumulative count gives
/// a negative value.
pub fn infection_speed<T: Real>(
    corpus: &CumulativeCorpus,
    pop: &PopulationTable,
    city: &str,
    t: NaiveDate,
) -> Result<T, Missing> {
    let (now, prev) = records(corpus, city, t)?;
    let tp = pop.get(city).ok_or(Missing::NoPopulation)?;
    let den = tp as i128 - prev.cc as i128;
    if den <= 0 {
        return Err(Missing::PopulationExhausted);
    }
    Ok(ratio(now.cc as i128 - prev.cc as i128, den))
}

/// New deaths over the cases still active at `t - 1`.
pub fn death_rate<T: Real>(
    corpus: &CumulativeCorpus,
    city: &str,
    t: NaiveDate,
) -> Result<T, Missing> {
    let (now, prev) = records(corpus, city, t)?;
    let den = prev.cc as i128 - prev.cd as i128 - prev.cr as i128;
    if den <= 0 {
        return Err(Missing::NoActiveCases);
    }
    Ok(ratio(now.cd as i128 - prev.cd as i128, den))
}

/// Cumulative deaths over cumulative confirmed cases.
pub fn fatality_ratio<T: Real>(
    corpus: &CumulativeCorpus,
    city: &str,
    t: NaiveDate,
) -> Result<T, Missing> {
    let now = corpus.get(city, t).ok_or(Missing::NoRecord)?;
    if now.cc == 0 {
        return Err(Missing::NoConfirmedCases);
    }
    Ok(ratio(now.cd as i128, now.cc as i128))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<T> {
    Value(T),
    Missing(Missing),
}

impl<T: Real> Cell<T> {
    pub fn value(self) -> Option<T> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::Missing(_) => None,
        }
    }

    /// Negative values only arise from unrepaired falls in cumulative data.
    pub fn is_negative(self) -> bool {
        matches!(self, Cell::Value(v) if v < T::zero())
    }
}

/// City by day matrix of one rate kind, stored day-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSurface<T> {
    kind: RateKind,
    cities: Vec<String>,
    dates: Vec<NaiveDate>,
    cells: Vec<Vec<Cell<T>>>,
}

impl<T: Real> RateSurface<T> {
    /// `cells[day][city]`; every row must have one entry per city.
    pub fn from_cells(
        kind: RateKind,
        cities: Vec<String>,
        dates: Vec<NaiveDate>,
        cells: Vec<Vec<Cell<T>>>,
    ) -> Self {
        assert_eq!(cells.len(), dates.len(), "one row per date");
        assert!(
            cells.iter().all(|r| r.len() == cities.len()),
            "one cell per city"
        );
        RateSurface {
            kind,
            cities,
            dates,
            cells,
        }
    }

    pub fn kind(&self) -> RateKind {
        self.kind
    }

    pub fn cities(&self) -> &[String] {
        &self.cities
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn cell(&self, day: usize, city: usize) -> Cell<T> {
        self.cells[day][city]
    }

    pub fn day_index(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// Non-missing values of one day, in city order.
    pub fn cross_section(&self, day: usize) -> Vec<T> {
        self.cells[day].iter().filter_map(|c| c.value()).collect()
    }

    /// (date, city) of every negative cell.
    pub fn negative_cells(&self) -> Vec<(NaiveDate, &str)> {
        let mut out = Vec::new();
        for (d, row) in self.cells.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if cell.is_negative() {
                    out.push((self.dates[d], self.cities[c].as_str()));
                }
            }
        }
        out
    }

    /// Long format: `date,city,value,status`. Missing cells carry their
    /// reason in `status` and an empty value.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["date", "city", "value", "status"])
            .expect("in-memory write");
        for (d, row) in self.cells.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                let (value, status) = match *cell {
                    Cell::Value(v) if v < T::zero() => (v.to_string(), "negative"),
                    Cell::Value(v) => (v.to_string(), "ok"),
                    Cell::Missing(m) => (String::new(), m.code()),
                };
                w.write_record([
                    self.dates[d].to_string(),
                    self.cities[c].clone(),
                    value,
                    status.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Evaluate one rate kind for every city and every day of `window`.
pub fn rate_surface<T: Real>(
    corpus: &CumulativeCorpus,
    pop: &PopulationTable,
    kind: RateKind,
    window: DateWindow,
) -> Result<RateSurface<T>, RateError> {
    if window.is_empty() {
        return Err(RateError::EmptyWindow {
            start: window.start,
            end: window.end,
        });
    }
    let (first, last) = corpus.date_range().ok_or(RateError::EmptyCorpus)?;
    if window.start < first || window.end > last {
        return Err(RateError::WindowOutsideCorpus {
            start: window.start,
            end: window.end,
            first,
            last,
        });
    }
    let dates = window.days();
    let cities = corpus.cities().to_vec();
    let cells = dates
        .iter()
        .map(|&t| {
            cities
                .iter()
                .map(|city| {
                    let v = match kind {
                        RateKind::InfectionSpeed => infection_speed(corpus, pop, city, t),
                        RateKind::DeathRate => death_rate(corpus, city, t),
                        RateKind::FatalityRatio => fatality_ratio(corpus, city, t),
                    };
                    match v {
                        Ok(v) => Cell::Value(v),
                        Err(m) => Cell::Missing(m),
                    }
                })
                .collect()
        })
        .collect();
    Ok(RateSurface {
        kind,
        cities,
        dates,
        cells,
    })
}

/// Descriptive statistics over the non-missing cells of day `t`.
pub fn cross_section_stats<T: Real>(
    surface: &RateSurface<T>,
    t: NaiveDate,
) -> Result<StatsRow<T>, RateError> {
    let day = surface.day_index(t).ok_or(RateError::UnknownDate(t))?;
    describe(&surface.cross_section(day)).ok_or(RateError::AllMissing(t))
}

/// One row per day with at least one value:
/// `date,mean,sd,median,min,max,skewness,excess_kurtosis,n`.
pub fn stats_csv<T: Real>(surface: &RateSurface<T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "date",
        "mean",
        "sd",
        "median",
        "min",
        "max",
        "skewness",
        "excess_kurtosis",
        "n",
    ])
    .expect("in-memory write");
    for (d, &date) in surface.dates().iter().enumerate() {
        let Some(s) = describe(&surface.cross_section(d)) else {
            continue;
        };
        let opt = |v: Option<T>| v.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            date.to_string(),
            s.mean.to_string(),
            s.sd.to_string(),
            s.median.to_string(),
            s.min.to_string(),
            s.max.to_string(),
            opt(s.skewness),
            opt(s.excess_kurtosis),
            s.n.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
