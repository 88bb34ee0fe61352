//! Pipeline orchestration behind the `epirisk` binary.
//!
//! Output layout under `out`:
//!
//! ```text
//! ingest/validation.json
//! rates/surface_<kind>.csv   rates/stats_<kind>.csv
//! fits/selection.json        fits/trace_<kind>.csv
//! meta/stats_<kind>.csv      meta/paramfits_<kind>.json
//! contract/pricing.json
//! run_manifest.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::{
    load_cumulative, load_population, sha256_file, validate, CumulativeCorpus, Policy,
    PopulationTable,
};
use crate::distributions::DistributionId;
use crate::fitting::{daily_selection, refit_winner, FitOptions, ParameterTrace, SelectionSummary};
use crate::meta::{fit_all_parameters, trace_stats, ParameterDistributionFit};
use crate::rates::{rate_surface, stats_csv, DateWindow, RateKind, RateSurface};
use crate::reinsurance::{price, ComponentLaw, ContractSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("contract: {0}")]
    Contract(String),
    #[error("schema check failed: {0} problem(s)")]
    Schema(usize),
    #[error(transparent)]
    Pipeline(#[from] crate::Error),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "cli.config",
            CliError::Io { .. } => "cli.io",
            CliError::MissingInput(_) => "cli.missing_input",
            CliError::Contract(_) => "cli.contract",
            CliError::Schema(_) => "cli.schema",
            CliError::Pipeline(e) => e.code(),
        }
    }
}

macro_rules! from_module {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Pipeline(e.into())
            }
        }
    )*};
}
from_module!(
    crate::corpus::CorpusError,
    crate::rates::RateError,
    crate::fitting::FitError,
    crate::meta::MetaError,
    crate::reinsurance::ContractError
);

fn io(path: &Path, e: impl ToString) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Windows {
    pub speed: DateWindow,
    pub death: DateWindow,
    pub fatality: DateWindow,
}

impl Default for Windows {
    fn default() -> Self {
        let w = |s: &str| s.parse().expect("valid default window");
        Windows {
            speed: w("2020-01-24:2020-03-04"),
            death: w("2020-01-28:2020-03-04"),
            fatality: w("2020-01-25:2020-03-17"),
        }
    }
}

impl Windows {
    pub fn get(&self, kind: RateKind) -> DateWindow {
        match kind {
            RateKind::InfectionSpeed => self.speed,
            RateKind::DeathRate => self.death,
            RateKind::FatalityRatio => self.fatality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: PathBuf,
    pub population: PathBuf,
    pub policy: Policy,
    pub windows: Windows,
    pub catalog: Vec<DistributionId>,
    /// Seed for fitting and Monte Carlo; overrides `fitting.seed`.
    pub seed: u64,
    pub fitting: FitOptions,
    pub contract: Option<PathBuf>,
    pub mc_draws: usize,
    pub out: PathBuf,
    /// Worker threads; 0 lets the pool decide. Outputs do not depend on it.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data: fixture("hubei_cumulative.csv"),
            population: fixture("hubei_population.csv"),
            policy: Policy::Strict,
            windows: Windows::default(),
            catalog: DistributionId::ALL.to_vec(),
            seed: FitOptions::default().seed,
            fitting: FitOptions::default(),
            contract: Some(fixture("contract_vector.json")),
            mc_draws: 100_000,
            out: PathBuf::from("epirisk-out"),
            threads: 0,
        }
    }
}

impl PipelineConfig {
    fn fit_options(&self) -> FitOptions {
        FitOptions {
            seed: self.seed,
            ..self.fitting.clone()
        }
    }

    fn check(&self) -> Result<(), CliError> {
        if self.catalog.is_empty() {
            return Err(CliError::Config("catalog is empty".into()));
        }
        for kind in RateKind::ALL {
            let w = self.windows.get(kind);
            if w.is_empty() {
                return Err(crate::rates::RateError::EmptyWindow {
                    start: w.start,
                    end: w.end,
                }
                .into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Ingest,
    Rates,
    Fit,
    Meta,
    Contract,
    All,
}

#[derive(Debug, Parser)]
#[command(
    name = "epirisk",
    version,
    about = "Epidemic rate fitting and parametric reinsurance pricing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Load and validate the cumulative counts.
    Ingest(Overrides),
    /// Rate surfaces and daily cross-sectional statistics.
    Rates(Overrides),
    /// Per-day selection and winner parameter traces.
    Fit(Overrides),
    /// Parameter statistics and second-stage fits.
    Meta(Overrides),
    /// Price the contract on the second-stage laws.
    Contract(Overrides),
    /// Every stage in order.
    All(Overrides),
    /// Check a report directory against the documented schemas.
    SchemaCheck {
        /// Report directory written by a previous run.
        dir: PathBuf,
    },
}

/// Config file plus per-field overrides. Flags win over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub population: Option<PathBuf>,
    #[arg(long)]
    pub policy: Option<Policy>,
    #[arg(long = "window-speed")]
    pub window_speed: Option<String>,
    #[arg(long = "window-death")]
    pub window_death: Option<String>,
    #[arg(long = "window-fatality")]
    pub window_fatality: Option<String>,
    /// Comma-separated family names.
    #[arg(long)]
    pub catalog: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub contract: Option<PathBuf>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "min-day-sample")]
    pub min_day_sample: Option<usize>,
    #[arg(long = "mc-draws")]
    pub mc_draws: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Any config field by dotted path, e.g. `fitting.zero_policy=perturb`.
    #[arg(long = "set", value_name = "PATH=JSON")]
    pub set: Vec<String>,
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("{path}: {part} is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| json!({}));
    }
    Ok(())
}

impl Overrides {
    /// Defaults, then the config file, then the flags.
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = serde_json::to_value(PipelineConfig::default()).expect("serializable");
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
            let file: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            merge(&mut cfg, file);
        }
        let s = |v: &str| Value::String(v.to_string());
        let p = |v: &Path| Value::String(v.display().to_string());
        let flags: Vec<(&str, Option<Value>)> = vec![
            ("data", self.data.as_deref().map(p)),
            ("population", self.population.as_deref().map(p)),
            (
                "policy",
                self.policy
                    .map(|v| serde_json::to_value(v).expect("serializable")),
            ),
            ("windows.speed", self.window_speed.as_deref().map(s)),
            ("windows.death", self.window_death.as_deref().map(s)),
            ("windows.fatality", self.window_fatality.as_deref().map(s)),
            (
                "catalog",
                self.catalog
                    .as_deref()
                    .map(|c| c.split(',').map(|x| s(x.trim())).collect()),
            ),
            ("seed", self.seed.map(Value::from)),
            ("out", self.out.as_deref().map(p)),
            ("contract", self.contract.as_deref().map(p)),
            ("fitting.restarts", self.restarts.map(Value::from)),
            ("fitting.max_iters", self.max_iters.map(Value::from)),
            ("fitting.tol", self.tol.map(Value::from)),
            (
                "fitting.min_day_sample",
                self.min_day_sample.map(Value::from),
            ),
            ("mc_draws", self.mc_draws.map(Value::from)),
            ("threads", self.threads.map(Value::from)),
        ];
        for (path, v) in flags {
            if let Some(v) = v {
                set_path(&mut cfg, path, v)?;
            }
        }
        for kv in &self.set {
            let (path, raw) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set {kv:?}: expected PATH=VALUE")))?;
            let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut cfg, path, v)?;
        }
        serde_json::from_value(cfg).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Everything a run computed, kept for the library caller.
#[derive(Debug, Default)]
pub struct RunOutputs {
    pub surfaces: BTreeMap<RateKind, RateSurface<f64>>,
    pub selections: BTreeMap<RateKind, SelectionSummary<f64>>,
    pub traces: BTreeMap<RateKind, ParameterTrace<f64>>,
    pub paramfits: BTreeMap<RateKind, Vec<ParameterDistributionFit<f64>>>,
    pub files: BTreeMap<String, String>,
}

struct Writer<'a> {
    root: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn write(&mut self, rel: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
        fs::write(&path, contents).map_err(|e| io(&path, e))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    fn json(&mut self, rel: &str, v: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(v).expect("serializable report");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }
}

fn load(cfg: &PipelineConfig) -> Result<(CumulativeCorpus, PopulationTable, Value), CliError> {
    for (what, p) in [("data", &cfg.data), ("population", &cfg.population)] {
        if !p.exists() {
            return Err(CliError::MissingInput(format!(
                "{what} file {}",
                p.display()
            )));
        }
    }
    let raw = load_cumulative(&cfg.data)?;
    let pop = load_population(&cfg.population)?;
    let (corpus, report) = validate(&raw, cfg.policy);
    pop.check_covers(&corpus)?;
    let (first, last) = corpus
        .date_range()
        .ok_or(crate::rates::RateError::EmptyCorpus)?;
    let summary = json!({
        "policy": cfg.policy,
        "records": corpus.len(),
        "cities": corpus.cities(),
        "first_date": first,
        "last_date": last,
        "clean": report.is_clean(),
        "issues": report.issues,
    });
    Ok((corpus, pop, summary))
}

/// Run one command. Reports go under `cfg.out`, followed by the manifest.
pub fn run(command: Command, cfg: &PipelineConfig) -> Result<RunOutputs, CliError> {
    cfg.check()?;
    if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        pool.install(|| run_stages(command, cfg))
    } else {
        run_stages(command, cfg)
    }
}

fn run_stages(command: Command, cfg: &PipelineConfig) -> Result<RunOutputs, CliError> {
    use Command::*;
    let upto = |c: Command| -> bool {
        let order = [Ingest, Rates, Fit, Meta, Contract];
        let pos = |x| order.iter().position(|&o| o == x).unwrap_or(order.len());
        command == All || pos(c) <= pos(command)
    };
    let writes = |c: Command| command == All || command == c;

    fs::create_dir_all(&cfg.out).map_err(|e| io(&cfg.out, e))?;
    let _ = fs::remove_file(cfg.out.join("error.json"));
    let mut w = Writer {
        root: &cfg.out,
        files: Vec::new(),
    };
    let mut out = RunOutputs::default();

    let (corpus, pop, summary) = load(cfg)?;
    if writes(Ingest) {
        w.json("ingest/validation.json", &summary)?;
    }

    if upto(Rates) {
        for kind in RateKind::ALL {
            let surface = rate_surface::<f64>(&corpus, &pop, kind, cfg.windows.get(kind))?;
            if writes(Rates) {
                w.write(
                    &format!("rates/surface_{}.csv", kind.slug()),
                    surface.to_csv().as_bytes(),
                )?;
                w.write(
                    &format!("rates/stats_{}.csv", kind.slug()),
                    stats_csv(&surface).as_bytes(),
                )?;
            }
            out.surfaces.insert(kind, surface);
        }
    }

    let opts = cfg.fit_options();
    if upto(Fit) {
        for kind in RateKind::ALL {
            let surface = &out.surfaces[&kind];
            let kind_opts = opts.derived(&[kind as u64]);
            let selection = daily_selection(surface, &cfg.catalog, &kind_opts)?;
            let trace = refit_winner(surface, selection.winner, &kind_opts)?;
            if writes(Fit) {
                w.write(
                    &format!("fits/trace_{}.csv", kind.slug()),
                    trace.to_csv().as_bytes(),
                )?;
            }
            out.selections.insert(kind, selection);
            out.traces.insert(kind, trace);
        }
        if writes(Fit) {
            let by_slug: BTreeMap<&str, &SelectionSummary<f64>> =
                out.selections.iter().map(|(k, s)| (k.slug(), s)).collect();
            w.json("fits/selection.json", &by_slug)?;
        }
    }

    if upto(Meta) {
        for kind in RateKind::ALL {
            let trace = &out.traces[&kind];
            let fits = fit_all_parameters(trace, &cfg.catalog, &opts.derived(&[kind as u64, 1]))?;
            if writes(Meta) {
                let table = trace_stats(trace)?;
                w.write(
                    &format!("meta/stats_{}.csv", kind.slug()),
                    table.to_csv().as_bytes(),
                )?;
                w.json(&format!("meta/paramfits_{}.json", kind.slug()), &fits)?;
            }
            out.paramfits.insert(kind, fits);
        }
    }

    if upto(Contract) {
        let path = cfg
            .contract
            .as_ref()
            .ok_or_else(|| CliError::MissingInput("contract spec path".into()))?;
        let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
        let spec: ContractSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::Contract(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        let laws = resolve_laws(&spec, &out.traces, &out.paramfits)?;
        let report = price(
            &spec,
            &laws,
            cfg.mc_draws,
            crate::seed::derive_seed(cfg.seed, &[0xC0]),
        )?;
        w.json("contract/pricing.json", &report)?;
    }

    let mut checksums = BTreeMap::new();
    for rel in &w.files {
        checksums.insert(rel.clone(), sha256_file(cfg.out.join(rel))?);
    }
    // Where the reports go and how many workers made them do not change
    // their content, so neither is part of the manifest.
    let mut config = serde_json::to_value(cfg).expect("config serializes");
    if let Value::Object(m) = &mut config {
        m.remove("out");
        m.remove("threads");
    }
    let manifest = json!({
        "tool": concat!("epirisk ", env!("CARGO_PKG_VERSION")),
        "command": command,
        "seed": cfg.seed,
        "config": config,
        "inputs": {
            "data": sha256_file(&cfg.data)?,
            "population": sha256_file(&cfg.population)?,
        },
        "files": checksums,
    });
    w.json("run_manifest.json", &manifest)?;
    out.files = checksums;
    Ok(out)
}

/// Event parameters are named `<kind>.<param>`, e.g. `death.mu`; each is
/// modeled by the best second-stage law of that parameter of the kind's
/// winner trace. `<kind>.location` names the winner's location parameter
/// whatever the family.
fn resolve_laws(
    spec: &ContractSpec,
    traces: &BTreeMap<RateKind, ParameterTrace<f64>>,
    paramfits: &BTreeMap<RateKind, Vec<ParameterDistributionFit<f64>>>,
) -> Result<Vec<ComponentLaw>, CliError> {
    spec.event_params
        .iter()
        .map(|name| {
            let (kind, param) = name.split_once('.').ok_or_else(|| {
                CliError::Contract(format!("event parameter {name:?} is not <kind>.<param>"))
            })?;
            let kind: RateKind = kind.parse().map_err(CliError::Contract)?;
            let param = match param {
                "location" => traces[&kind].id.location_param(),
                _ => param,
            };
            let fit = paramfits[&kind]
                .iter()
                .find(|f| f.param == param)
                .ok_or_else(|| {
                    CliError::Contract(format!("the {kind} winner has no parameter {param:?}"))
                })?;
            Ok(ComponentLaw::Fitted {
                law: fit.best.params.clone(),
            })
        })
        .collect()
}

/// Problems found in a report directory; empty when it conforms.
pub fn schema_check(dir: &Path) -> Vec<String> {
    let mut problems = Vec::new();
    let read = |rel: &str| fs::read_to_string(dir.join(rel));
    let manifest: Value = match read("run_manifest.json").map(|t| serde_json::from_str(&t)) {
        Ok(Ok(v)) => v,
        Ok(Err(e)) => return vec![format!("run_manifest.json: {e}")],
        Err(e) => return vec![format!("run_manifest.json: {e}")],
    };
    let Some(files) = manifest["files"].as_object() else {
        return vec!["run_manifest.json: no files map".into()];
    };
    for key in ["tool", "command", "seed", "config", "inputs"] {
        if manifest.get(key).is_none() {
            problems.push(format!("run_manifest.json: missing {key}"));
        }
    }
    for (rel, sum) in files {
        match sha256_file(dir.join(rel)) {
            Ok(actual) if Some(actual.as_str()) == sum.as_str() => {}
            Ok(_) => problems.push(format!("{rel}: checksum differs from manifest")),
            Err(e) => {
                problems.push(format!("{rel}: {e}"));
                continue;
            }
        }
        let text = match read(rel) {
            Ok(t) => t,
            Err(e) => {
                problems.push(format!("{rel}: {e}"));
                continue;
            }
        };
        problems.extend(
            check_file(rel, &text)
                .into_iter()
                .map(|p| format!("{rel}: {p}")),
        );
    }
    problems
}

fn csv_header(text: &str) -> Vec<String> {
    text.lines()
        .next()
        .unwrap_or("")
        .split(',')
        .map(str::to_string)
        .collect()
}

fn check_csv(text: &str, expected: &[&str]) -> Vec<String> {
    let header = csv_header(text);
    let mut out = Vec::new();
    if header != expected {
        out.push(format!("header {header:?}, expected {expected:?}"));
    }
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.split(',').count() != expected.len() {
            out.push(format!(
                "line {}: expected {} fields",
                i + 1,
                expected.len()
            ));
        }
    }
    out
}

fn require(v: &Value, keys: &[&str], ctx: &str) -> Vec<String> {
    keys.iter()
        .filter(|k| v.get(**k).is_none())
        .map(|k| format!("{ctx} missing {k}"))
        .collect()
}

fn check_fit(v: &Value, ctx: &str) -> Vec<String> {
    let mut out = require(
        v,
        &["family", "params", "ks", "log_likelihood", "n", "converged"],
        ctx,
    );
    if let Some(family) = v["family"].as_str() {
        match family.parse::<DistributionId>() {
            Ok(id) => {
                let names: Vec<&str> = v["params"]
                    .as_object()
                    .map(|m| m.keys().map(String::as_str).collect())
                    .unwrap_or_default();
                let mut want: Vec<&str> = id.param_names().to_vec();
                want.sort();
                let mut got = names.clone();
                got.sort();
                if got != want {
                    out.push(format!("{ctx} params {names:?} do not match {family}"));
                }
            }
            Err(e) => out.push(format!("{ctx}: {e}")),
        }
    }
    out
}

fn check_file(rel: &str, text: &str) -> Vec<String> {
    let file = rel.rsplit('/').next().unwrap_or(rel);
    if rel.ends_with(".csv") {
        if rel.starts_with("rates/surface_") {
            return check_csv(text, &["date", "city", "value", "status"]);
        }
        if rel.starts_with("rates/stats_") {
            return check_csv(
                text,
                &[
                    "date",
                    "mean",
                    "sd",
                    "median",
                    "min",
                    "max",
                    "skewness",
                    "excess_kurtosis",
                    "n",
                ],
            );
        }
        if rel.starts_with("meta/stats_") {
            return check_csv(
                text,
                &[
                    "param", "mean", "sd", "median", "min", "max", "skewness", "kurtosis",
                ],
            );
        }
        if rel.starts_with("fits/trace_") {
            let header = csv_header(text);
            let family_ok = DistributionId::ALL.iter().any(|id| {
                let mut want = vec!["date"];
                want.extend_from_slice(id.param_names());
                want.push("converged");
                header == want
            });
            let mut out = Vec::new();
            if !family_ok {
                out.push(format!("header {header:?} is not date,<params>,converged"));
            } else {
                let expected: Vec<&str> = header.iter().map(String::as_str).collect();
                out.extend(check_csv(text, &expected));
            }
            return out;
        }
        return vec![format!("unexpected file {file}")];
    }
    let v: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return vec![e.to_string()],
    };
    match rel {
        "ingest/validation.json" => require(
            &v,
            &[
                "policy",
                "records",
                "cities",
                "first_date",
                "last_date",
                "clean",
                "issues",
            ],
            "validation",
        ),
        "fits/selection.json" => {
            let mut out = Vec::new();
            for kind in RateKind::ALL {
                let s = &v[kind.slug()];
                out.extend(require(
                    s,
                    &[
                        "kind",
                        "catalog",
                        "per_day",
                        "winner",
                        "winner_day_count",
                        "total_days",
                        "wins",
                        "mean_ks",
                        "skipped",
                    ],
                    kind.slug(),
                ));
                for day in s["per_day"].as_array().into_iter().flatten() {
                    out.extend(require(day, &["date", "n", "top"], "per_day entry"));
                }
            }
            out
        }
        "contract/pricing.json" => {
            let mut out = require(
                &v,
                &["estimate", "std_error", "n", "seed", "es_levels"],
                "pricing",
            );
            out.extend(require(&v["es_levels"], &["0.95", "0.99"], "es_levels"));
            out
        }
        _ if rel.starts_with("meta/paramfits_") => {
            let mut out = Vec::new();
            match v.as_array() {
                Some(items) => {
                    for item in items {
                        out.extend(require(item, &["param", "best", "ranked"], "paramfit"));
                        out.extend(check_fit(&item["best"], "best"));
                        for r in item["ranked"].as_array().into_iter().flatten() {
                            out.extend(check_fit(r, "ranked"));
                        }
                    }
                }
                None => out.push("expected an array".into()),
            }
            out
        }
        _ => vec![format!("unexpected file {file}")],
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let (command, overrides) = match cli.command {
        CliCommand::SchemaCheck { dir } => {
            let problems = schema_check(&dir);
            for p in &problems {
                eprintln!("{p}");
            }
            if problems.is_empty() {
                println!("{}: ok", dir.display());
                return 0;
            }
            return report_error(&CliError::Schema(problems.len()), None);
        }
        CliCommand::Ingest(o) => (Command::Ingest, o),
        CliCommand::Rates(o) => (Command::Rates, o),
        CliCommand::Fit(o) => (Command::Fit, o),
        CliCommand::Meta(o) => (Command::Meta, o),
        CliCommand::Contract(o) => (Command::Contract, o),
        CliCommand::All(o) => (Command::All, o),
    };
    let cfg = match overrides.resolve() {
        Ok(c) => c,
        Err(e) => return report_error(&e, overrides.out.as_deref()),
    };
    match run(command, &cfg) {
        Ok(out) => {
            for rel in out.files.keys() {
                println!("{}", cfg.out.join(rel).display());
            }
            0
        }
        Err(e) => report_error(&e, Some(&cfg.out)),
    }
}

/// Print the error as JSON on stderr and, when possible, to `out/error.json`.
fn report_error(e: &CliError, out: Option<&Path>) -> i32 {
    let body = json!({ "error": { "code": e.code(), "message": e.to_string() } });
    eprintln!("{body}");
    if let Some(dir) = out {
        if fs::create_dir_all(dir).is_ok() {
            let _ = fs::write(dir.join("error.json"), format!("{body:#}\n"));
        }
    }
    2
}
