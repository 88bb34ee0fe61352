//! Cumulative epidemic counts and city populations.
//!
//! CSV schemas: `date,city,cum_confirmed,cum_deaths,cum_recovered` and
//! `city,population`. City ids are lower-cased on load.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const CUMULATIVE_HEADER: [&str; 5] = [
    "date",
    "city",
    "cum_confirmed",
    "cum_deaths",
    "cum_recovered",
];
pub const POPULATION_HEADER: [&str; 2] = ["city", "population"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
    #[error("line {line}: expected header {expected:?}, found {found:?}")]
    BadHeader {
        line: u64,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("line {line}: malformed row: {detail}")]
    MalformedRow { line: u64, detail: String },
    #[error("line {line}: unparseable date {value:?}")]
    BadDate { line: u64, value: String },
    #[error("line {line}: negative count in {field}")]
    NegativeCount { line: u64, field: &'static str },
    #[error("line {line}: duplicate record for ({city}, {date})")]
    DuplicateRecord {
        line: u64,
        city: String,
        date: NaiveDate,
    },
    #[error("line {line}: population of {city} must be positive")]
    NonPositivePopulation { line: u64, city: String },
    #[error("line {line}: duplicate population entry for {city}")]
    DuplicateCity { line: u64, city: String },
    #[error("no population entry for {city}")]
    MissingPopulation { city: String },
    #[error(
        "population of {city} ({population}) does not exceed its confirmed count ({confirmed})"
    )]
    PopulationTooSmall {
        city: String,
        population: u64,
        confirmed: u64,
    },
    #[error("fetching {url}: {detail}")]
    Network { url: String, detail: String },
    #[error("checksum mismatch for {url}: expected {expected}, got {actual}")]
    ChecksumMismatch {
        url: String,
        expected: String,
        actual: String,
    },
}

impl CorpusError {
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::Io { .. } => "corpus.io",
            CorpusError::BadHeader { .. } => "corpus.bad_header",
            CorpusError::MalformedRow { .. } => "corpus.malformed_row",
            CorpusError::BadDate { .. } => "corpus.bad_date",
            CorpusError::NegativeCount { .. } => "corpus.negative_count",
            CorpusError::DuplicateRecord { .. } => "corpus.duplicate_record",
            CorpusError::NonPositivePopulation { .. } => "corpus.nonpositive_population",
            CorpusError::DuplicateCity { .. } => "corpus.duplicate_city",
            CorpusError::MissingPopulation { .. } => "corpus.missing_population",
            CorpusError::PopulationTooSmall { .. } => "corpus.population_too_small",
            CorpusError::Network { .. } => "corpus.network",
            CorpusError::ChecksumMismatch { .. } => "corpus.checksum_mismatch",
        }
    }
}

fn io_err(path: &Path, e: impl ToString) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    }
}

type FieldRef = fn(&mut Record) -> &mut u64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub date: NaiveDate,
    pub city: String,
    pub cc: u64,
    pub cd: u64,
    pub cr: u64,
}

/// Per-city daily cumulative counts, sorted by (city, date).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CumulativeCorpus {
    records: Vec<Record>,
    cities: Vec<String>,
    index: HashMap<(String, NaiveDate), usize>,
}

impl CumulativeCorpus {
    /// Sorts the records and rejects duplicate (city, date) pairs.
    pub fn from_records(mut records: Vec<Record>) -> Result<Self, CorpusError> {
        for r in &mut records {
            r.city = r.city.trim().to_lowercase();
        }
        records.sort_by(|a, b| (&a.city, a.date).cmp(&(&b.city, b.date)));
        for w in records.windows(2) {
            if w[0].city == w[1].city && w[0].date == w[1].date {
                return Err(CorpusError::DuplicateRecord {
                    line: 0,
                    city: w[1].city.clone(),
                    date: w[1].date,
                });
            }
        }
        Ok(Self::from_sorted(records))
    }

    fn from_sorted(records: Vec<Record>) -> Self {
        let mut cities: Vec<String> = records.iter().map(|r| r.city.clone()).collect();
        cities.dedup();
        let index = records
            .iter()
            .enumerate()
            .map(|(i, r)| ((r.city.clone(), r.date), i))
            .collect();
        CumulativeCorpus {
            records,
            cities,
            index,
        }
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn cities(&self) -> &[String] {
        &self.cities
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First and last day present in the corpus.
    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        let lo = self.records.iter().map(|r| r.date).min()?;
        let hi = self.records.iter().map(|r| r.date).max()?;
        Some((lo, hi))
    }

    pub fn get(&self, city: &str, date: NaiveDate) -> Option<&Record> {
        self.index
            .get(&(city.to_string(), date))
            .map(|&i| &self.records[i])
    }

    /// Serialize in the load schema, one row per record in corpus order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CUMULATIVE_HEADER).expect("in-memory write");
        for r in &self.records {
            w.write_record([
                r.date.to_string(),
                r.city.clone(),
                r.cc.to_string(),
                r.cd.to_string(),
                r.cr.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>, CorpusError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn check_header(rdr: &mut csv::Reader<fs::File>, expected: &[&str]) -> Result<(), CorpusError> {
    let found = rdr.headers().map_err(|e| CorpusError::MalformedRow {
        line: 1,
        detail: e.to_string(),
    })?;
    let found: Vec<String> = found.iter().map(|h| h.to_lowercase()).collect();
    if found != expected {
        return Err(CorpusError::BadHeader {
            line: 1,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }
    Ok(())
}

fn parse_count(line: u64, field: &'static str, raw: &str) -> Result<u64, CorpusError> {
    let v: i64 = raw.parse().map_err(|_| CorpusError::MalformedRow {
        line,
        detail: format!("{field} {raw:?} is not an integer"),
    })?;
    if v < 0 {
        return Err(CorpusError::NegativeCount { line, field });
    }
    Ok(v as u64)
}

/// Load cumulative counts. Rows may appear in any order.
pub fn load_cumulative(path: impl AsRef<Path>) -> Result<CumulativeCorpus, CorpusError> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    check_header(&mut rdr, &CUMULATIVE_HEADER)?;
    let mut records = Vec::new();
    let mut seen: HashMap<(String, NaiveDate), u64> = HashMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CorpusError::MalformedRow {
                line,
                detail: e.to_string(),
            }
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != CUMULATIVE_HEADER.len() {
            return Err(CorpusError::MalformedRow {
                line,
                detail: format!("expected 5 fields, got {}", row.len()),
            });
        }
        let date =
            NaiveDate::parse_from_str(&row[0], "%Y-%m-%d").map_err(|_| CorpusError::BadDate {
                line,
                value: row[0].to_string(),
            })?;
        let city = row[1].to_lowercase();
        if city.is_empty() {
            return Err(CorpusError::MalformedRow {
                line,
                detail: "empty city id".into(),
            });
        }
        let cc = parse_count(line, "cum_confirmed", &row[2])?;
        let cd = parse_count(line, "cum_deaths", &row[3])?;
        let cr = parse_count(line, "cum_recovered", &row[4])?;
        if seen.insert((city.clone(), date), line).is_some() {
            return Err(CorpusError::DuplicateRecord { line, city, date });
        }
        records.push(Record {
            date,
            city,
            cc,
            cd,
            cr,
        });
    }
    records.sort_by(|a, b| (&a.city, a.date).cmp(&(&b.city, b.date)));
    Ok(CumulativeCorpus::from_sorted(records))
}

/// City populations, constant over the study window.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PopulationTable {
    entries: BTreeMap<String, u64>,
}

impl PopulationTable {
    pub fn new(entries: BTreeMap<String, u64>) -> Self {
        PopulationTable { entries }
    }

    pub fn get(&self, city: &str) -> Option<u64> {
        self.entries.get(city).copied()
    }

    pub fn entries(&self) -> &BTreeMap<String, u64> {
        &self.entries
    }

    /// Every corpus city needs an entry larger than its largest confirmed count.
    pub fn check_covers(&self, corpus: &CumulativeCorpus) -> Result<(), CorpusError> {
        for city in corpus.cities() {
            let population = self
                .get(city)
                .ok_or_else(|| CorpusError::MissingPopulation { city: city.clone() })?;
            let confirmed = corpus
                .records()
                .iter()
                .filter(|r| &r.city == city)
                .map(|r| r.cc)
                .max()
                .unwrap_or(0);
            if population <= confirmed {
                return Err(CorpusError::PopulationTooSmall {
                    city: city.clone(),
                    population,
                    confirmed,
                });
            }
        }
        Ok(())
    }
}

pub fn load_population(path: impl AsRef<Path>) -> Result<PopulationTable, CorpusError> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    check_header(&mut rdr, &POPULATION_HEADER)?;
    let mut entries = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CorpusError::MalformedRow {
                line,
                detail: e.to_string(),
            }
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 2 {
            return Err(CorpusError::MalformedRow {
                line,
                detail: format!("expected 2 fields, got {}", row.len()),
            });
        }
        let city = row[0].to_lowercase();
        let population: i64 = row[1].parse().map_err(|_| CorpusError::MalformedRow {
            line,
            detail: format!("population {:?} is not an integer", &row[1]),
        })?;
        if population <= 0 {
            return Err(CorpusError::NonPositivePopulation { line, city });
        }
        if entries.insert(city.clone(), population as u64).is_some() {
            return Err(CorpusError::DuplicateCity { line, city });
        }
    }
    Ok(PopulationTable { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Report issues, change nothing.
    #[default]
    Strict,
    /// Raise cumulative values to their running maximum.
    Clamp,
}

impl std::str::FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(Policy::Strict),
            "clamp" => Ok(Policy::Clamp),
            other => Err(format!("unknown policy {other:?} (strict|clamp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    Nonmonotonic,
    MissingDay,
    CdExceedsCc,
    CrExceedsCc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub city: String,
    pub date: NaiveDate,
    pub kind: IssueKind,
    pub detail: String,
    pub repaired: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Check monotonicity, count ordering and gaps.
///
/// Under [`Policy::Clamp`], a day whose deaths or recoveries exceed its
/// confirmed count first has the confirmed count raised to match, then every
/// series is raised to its running maximum. Both repairs are flagged. Gaps
/// inside the corpus date range are only ever reported.
pub fn validate(corpus: &CumulativeCorpus, policy: Policy) -> (CumulativeCorpus, ValidationReport) {
    let mut issues = Vec::new();
    let mut out = corpus.records.clone();
    let clamp = policy == Policy::Clamp;
    let Some((first, last)) = corpus.date_range() else {
        return (corpus.clone(), ValidationReport::default());
    };

    let mut start = 0;
    while start < out.len() {
        let mut end = start;
        while end < out.len() && out[end].city == out[start].city {
            end += 1;
        }
        let series = &mut out[start..end];
        let city = series[0].city.clone();

        let mut expected = first;
        for r in series.iter() {
            while expected < r.date {
                issues.push(Issue {
                    city: city.clone(),
                    date: expected,
                    kind: IssueKind::MissingDay,
                    detail: "no record".into(),
                    repaired: false,
                });
                expected = expected.succ_opt().expect("date in range");
            }
            expected = r.date.succ_opt().expect("date in range");
        }
        let mut d = expected;
        while d <= last {
            issues.push(Issue {
                city: city.clone(),
                date: d,
                kind: IssueKind::MissingDay,
                detail: "no record".into(),
                repaired: false,
            });
            d = d.succ_opt().expect("date in range");
        }

        for r in series.iter_mut() {
            for (kind, v, name) in [
                (IssueKind::CdExceedsCc, r.cd, "deaths"),
                (IssueKind::CrExceedsCc, r.cr, "recovered"),
            ] {
                if v > r.cc {
                    issues.push(Issue {
                        city: city.clone(),
                        date: r.date,
                        kind,
                        detail: format!("cumulative {name} {v} > confirmed {}", r.cc),
                        repaired: clamp,
                    });
                }
            }
            if clamp {
                r.cc = r.cc.max(r.cd).max(r.cr);
            }
        }

        let fields: [(&str, FieldRef); 3] = [
            ("cum_confirmed", |r| &mut r.cc),
            ("cum_deaths", |r| &mut r.cd),
            ("cum_recovered", |r| &mut r.cr),
        ];
        for (name, field) in fields {
            let mut running = 0u64;
            for r in series.iter_mut() {
                let date = r.date;
                let v = field(r);
                if *v < running {
                    issues.push(Issue {
                        city: city.clone(),
                        date,
                        kind: IssueKind::Nonmonotonic,
                        detail: format!("{name} fell from {running} to {v}"),
                        repaired: clamp,
                    });
                    if clamp {
                        *v = running;
                    }
                }
                running = running.max(*v);
            }
        }
        start = end;
    }
    issues.sort_by(|a, b| (&a.city, a.date).cmp(&(&b.city, b.date)));
    (
        CumulativeCorpus::from_sorted(out),
        ValidationReport { issues },
    )
}

/// Download a snapshot with a plain GET. With a checksum, the written file
/// must hash (SHA-256) to it byte for byte, otherwise it is deleted.
pub fn fetch_snapshot(
    url: &str,
    dest: impl AsRef<Path>,
    checksum: Option<&str>,
) -> Result<PathBuf, CorpusError> {
    let dest = dest.as_ref();
    let net = |detail: String| CorpusError::Network {
        url: url.to_string(),
        detail,
    };
    let response = ureq::get(url).call().map_err(|e| net(e.to_string()))?;
    let mut body = response.into_body().into_reader();

    let mut file = fs::File::create(dest).map_err(|e| io_err(dest, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let copied: io::Result<()> = (|| loop {
        let n = body.read(&mut buf)?;
        if n == 0 {
            return file.flush();
        }
        hasher.update(&buf[..n]);
        file.write_all(&buf[..n])?;
    })();
    drop(file);
    if let Err(e) = copied {
        let _ = fs::remove_file(dest);
        return Err(net(e.to_string()));
    }

    let actual = hex::encode(hasher.finalize());
    if let Some(expected) = checksum {
        if !actual.eq_ignore_ascii_case(expected.trim()) {
            let _ = fs::remove_file(dest);
            return Err(CorpusError::ChecksumMismatch {
                url: url.to_string(),
                expected: expected.to_string(),
                actual,
            });
        }
    }
    Ok(dest.to_path_buf())
}

/// SHA-256 of a file as lower-case hex.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String, CorpusError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn day(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn loads_and_round_trips() {
        let f = write("date,city,cum_confirmed,cum_deaths,cum_recovered\n2020-01-25,Wuhan,618,45,40\n2020-01-24,wuhan,572,38,32\n");
        let c = load_cumulative(f.path()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.cities(), ["wuhan"]);
        assert_eq!(c.records()[0].date, day("2020-01-24"));
        let g = write(&c.to_csv());
        assert_eq!(load_cumulative(g.path()).unwrap(), c);
    }

    #[test]
    fn header_only_is_empty() {
        let f = write("date,city,cum_confirmed,cum_deaths,cum_recovered\n");
        let c = load_cumulative(f.path()).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.date_range(), None);
    }

    #[test]
    fn load_errors_carry_line_numbers() {
        let head = "date,city,cum_confirmed,cum_deaths,cum_recovered\n";
        let f = write(&format!("{head}2020-01-24,wuhan,5,-1,0\n"));
        let e = load_cumulative(f.path()).unwrap_err();
        assert!(
            matches!(
                e,
                CorpusError::NegativeCount {
                    line: 2,
                    field: "cum_deaths"
                }
            ),
            "{e:?}"
        );

        let f = write(&format!(
            "{head}2020-01-24,wuhan,5,1,0\n2020-01-24,WUHAN,6,1,0\n"
        ));
        assert!(matches!(
            load_cumulative(f.path()).unwrap_err(),
            CorpusError::DuplicateRecord { line: 3, .. }
        ));

        let f = write(&format!("{head}24/01/2020,wuhan,5,1,0\n"));
        assert!(matches!(
            load_cumulative(f.path()).unwrap_err(),
            CorpusError::BadDate { line: 2, .. }
        ));

        let f = write(&format!("{head}2020-01-24,wuhan,5,1\n"));
        assert_eq!(
            load_cumulative(f.path()).unwrap_err().code(),
            "corpus.malformed_row"
        );

        let f = write("when,city,cum_confirmed,cum_deaths,cum_recovered\n");
        assert!(matches!(
            load_cumulative(f.path()).unwrap_err(),
            CorpusError::BadHeader { .. }
        ));
    }

    #[test]
    fn population_rules() {
        let f = write("city,population\nWuhan,11081000\n");
        assert_eq!(
            load_population(f.path()).unwrap().get("wuhan"),
            Some(11_081_000)
        );
        let f = write("city,population\nx,0\n");
        assert!(matches!(
            load_population(f.path()).unwrap_err(),
            CorpusError::NonPositivePopulation { .. }
        ));
        let f = write("city,population\nx,5\nX,6\n");
        assert!(matches!(
            load_population(f.path()).unwrap_err(),
            CorpusError::DuplicateCity { line: 3, .. }
        ));
    }

    fn series(cc: &[u64], cd: &[u64]) -> CumulativeCorpus {
        let start = day("2020-02-01");
        let records = cc
            .iter()
            .zip(cd)
            .enumerate()
            .map(|(i, (&cc, &cd))| Record {
                date: start + chrono::Days::new(i as u64),
                city: "a".into(),
                cc,
                cd,
                cr: 0,
            })
            .collect();
        CumulativeCorpus::from_records(records).unwrap()
    }

    #[test]
    fn clamp_raises_to_running_maximum() {
        let c = series(&[10, 9, 12], &[0, 0, 0]);
        let (fixed, report) = validate(&c, Policy::Clamp);
        let cc: Vec<u64> = fixed.records().iter().map(|r| r.cc).collect();
        assert_eq!(cc, [10, 10, 12]);
        assert_eq!(report.issues.len(), 1);
        assert!(report.issues[0].repaired && report.issues[0].kind == IssueKind::Nonmonotonic);

        let (same, report) = validate(&c, Policy::Strict);
        assert_eq!(same, c);
        assert!(!report.issues[0].repaired);
    }

    #[test]
    fn clean_corpus_is_unchanged() {
        let c = series(&[1, 2, 3], &[0, 1, 1]);
        let (out, report) = validate(&c, Policy::Strict);
        assert_eq!(out, c);
        assert!(report.is_clean());
    }

    #[test]
    fn deaths_above_confirmed_flagged_under_both_policies() {
        let c = series(&[3], &[5]);
        for policy in [Policy::Strict, Policy::Clamp] {
            let (_, report) = validate(&c, policy);
            assert_eq!(report.issues[0].kind, IssueKind::CdExceedsCc);
        }
    }

    #[test]
    fn gaps_are_reported() {
        let mut recs = series(&[1, 2, 3], &[0, 0, 0]).records().to_vec();
        recs.remove(1);
        let c = CumulativeCorpus::from_records(recs).unwrap();
        let (_, report) = validate(&c, Policy::Clamp);
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].kind, IssueKind::MissingDay);
        assert_eq!(report.issues[0].date, day("2020-02-02"));
    }
}
