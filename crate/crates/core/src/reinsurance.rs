//! Parametric contract on fitted event parameters: trigger, barrier (cap),
//! loss assignment, Monte Carlo expected payout and expected shortfall.
//!
//! Money is carried as `f64` throughout.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{draw, validate_params, Model, ParamVector};
use crate::scalar::pairwise_sum;
use crate::seed::derive_seed;

/// Draws per Monte Carlo chunk; each chunk has its own derived seed.
pub const MC_CHUNK: usize = 4096;
pub const MIN_MC_DRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContractError {
    #[error("expected {expected} event parameters, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid contract: {0}")]
    InvalidSpec(String),
    #[error("invalid loss map: {0}")]
    InvalidLossMap(String),
    #[error("invalid law for {param}: {detail}")]
    InvalidLaw { param: String, detail: String },
    #[error("need at least {MIN_MC_DRAWS} draws, got {0}")]
    TooFewDraws(usize),
    #[error("expected shortfall needs a nonempty sample")]
    EmptySamples,
    #[error("level {0} outside [0, 1)")]
    BadLevel(f64),
}

impl ContractError {
    pub fn code(&self) -> &'static str {
        match self {
            ContractError::ShapeMismatch { .. } => "reinsurance.shape_mismatch",
            ContractError::InvalidSpec(_) => "reinsurance.invalid_spec",
            ContractError::InvalidLossMap(_) => "reinsurance.invalid_loss_map",
            ContractError::InvalidLaw { .. } => "reinsurance.invalid_law",
            ContractError::TooFewDraws(_) => "reinsurance.too_few_draws",
            ContractError::EmptySamples => "reinsurance.empty_samples",
            ContractError::BadLevel(_) => "reinsurance.bad_level",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Two event parameters, e.g. speed and death-rate locations.
    VectorBarrier,
    /// One event parameter, e.g. the fatality-ratio location.
    ScalarBarrier,
}

impl Variant {
    pub fn arity(self) -> usize {
        match self {
            Variant::VectorBarrier => 2,
            Variant::ScalarBarrier => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ExceedanceRule {
    /// A level is reached when any component reaches it.
    #[default]
    AnyComponent,
    /// A level is reached only when every component reaches it.
    AllComponents,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LossMapKind {
    #[default]
    PiecewiseLinear,
}

/// Additive piecewise-linear loss assignment, flat beyond the outer knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossMap {
    #[serde(default)]
    pub kind: LossMapKind,
    /// Per event parameter: (parameter value, amount) with strictly
    /// increasing values and nondecreasing, nonnegative amounts.
    pub knots: BTreeMap<String, Vec<(f64, f64)>>,
    /// Money per statistical death the knots were built from.
    pub statistical_death_value: f64,
}

impl LossMap {
    /// Knots from a money value per statistical death and, per component,
    /// the expected deaths at a set of parameter values.
    pub fn from_statistical_deaths(value: f64, deaths: BTreeMap<String, Vec<(f64, f64)>>) -> Self {
        let knots = deaths
            .into_iter()
            .map(|(name, pts)| {
                (
                    name,
                    pts.into_iter()
                        .map(|(theta, d)| (theta, d * value))
                        .collect(),
                )
            })
            .collect();
        LossMap {
            kind: LossMapKind::PiecewiseLinear,
            knots,
            statistical_death_value: value,
        }
    }

    fn check(&self, names: &[String]) -> Result<(), ContractError> {
        let bad = |m: String| Err(ContractError::InvalidLossMap(m));
        if !(self.statistical_death_value.is_finite() && self.statistical_death_value >= 0.0) {
            return bad("statistical_death_value must be finite and nonnegative".into());
        }
        for name in names {
            let Some(k) = self.knots.get(name) else {
                return bad(format!("no knots for {name}"));
            };
            if k.is_empty() {
                return bad(format!("no knots for {name}"));
            }
            if k.iter()
                .any(|&(t, a)| !t.is_finite() || !a.is_finite() || a < 0.0)
            {
                return bad(format!(
                    "{name}: knots must be finite with nonnegative amounts"
                ));
            }
            if k.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 < w[0].1) {
                return bad(format!(
                    "{name}: knots must increase in value and not decrease in amount"
                ));
            }
        }
        if let Some(extra) = self.knots.keys().find(|k| !names.contains(k)) {
            return bad(format!("knots for unknown parameter {extra}"));
        }
        Ok(())
    }

    fn component(knots: &[(f64, f64)], x: f64) -> f64 {
        let (first, last) = (knots[0], knots[knots.len() - 1]);
        if x <= first.0 {
            return first.1;
        }
        if x >= last.0 {
            return last.1;
        }
        let i = knots.partition_point(|k| k.0 <= x);
        let ((x0, y0), (x1, y1)) = (knots[i - 1], knots[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Total assigned loss at `theta`, components in `names` order.
    pub fn eval(&self, names: &[String], theta: &[f64]) -> f64 {
        names
            .iter()
            .zip(theta)
            .map(|(n, &x)| Self::component(&self.knots[n], x))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSpec {
    pub variant: Variant,
    #[serde(default)]
    pub exceedance_rule: ExceedanceRule,
    /// Event parameters in evaluation order.
    pub event_params: Vec<String>,
    pub trigger: BTreeMap<String, f64>,
    pub barrier: BTreeMap<String, f64>,
    pub loss_map: LossMap,
    pub currency: String,
}

impl ContractSpec {
    pub fn validate(&self) -> Result<(), ContractError> {
        let bad = |m: String| Err(ContractError::InvalidSpec(m));
        if self.event_params.len() != self.variant.arity() {
            return bad(format!(
                "{:?} needs {} event parameters",
                self.variant,
                self.variant.arity()
            ));
        }
        let mut seen = self.event_params.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.event_params.len() {
            return bad("duplicate event parameter".into());
        }
        for (what, map) in [("trigger", &self.trigger), ("barrier", &self.barrier)] {
            if map.len() != self.event_params.len()
                || self.event_params.iter().any(|p| !map.contains_key(p))
            {
                return bad(format!("{what} must name exactly the event parameters"));
            }
            if map.values().any(|v| !v.is_finite()) {
                return bad(format!("{what} levels must be finite"));
            }
        }
        for p in &self.event_params {
            if self.trigger[p] > self.barrier[p] {
                return bad(format!("trigger above barrier for {p}"));
            }
        }
        self.loss_map.check(&self.event_params)
    }

    pub fn trigger_levels(&self) -> Vec<f64> {
        self.event_params.iter().map(|p| self.trigger[p]).collect()
    }

    pub fn barrier_levels(&self) -> Vec<f64> {
        self.event_params.iter().map(|p| self.barrier[p]).collect()
    }

    /// Loss assigned to `theta`.
    pub fn loss(&self, theta: &[f64]) -> f64 {
        self.loss_map.eval(&self.event_params, theta)
    }

    fn check_shape(&self, theta: &[f64]) -> Result<(), ContractError> {
        if theta.len() != self.event_params.len() {
            return Err(ContractError::ShapeMismatch {
                expected: self.event_params.len(),
                got: theta.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TriggerState {
    NotTriggered,
    Triggered,
    CapExceeded,
}

fn reaches(rule: ExceedanceRule, theta: &[f64], level: &[f64]) -> bool {
    let mut hits = theta.iter().zip(level).map(|(t, l)| t >= l);
    match rule {
        ExceedanceRule::AnyComponent => hits.any(|h| h),
        ExceedanceRule::AllComponents => hits.all(|h| h),
    }
}

/// Both boundaries are closed: `theta` equal to the trigger triggers, equal
/// to the barrier caps.
pub fn evaluate_trigger(spec: &ContractSpec, theta: &[f64]) -> Result<TriggerState, ContractError> {
    spec.check_shape(theta)?;
    Ok(
        if reaches(spec.exceedance_rule, theta, &spec.barrier_levels()) {
            TriggerState::CapExceeded
        } else if reaches(spec.exceedance_rule, theta, &spec.trigger_levels()) {
            TriggerState::Triggered
        } else {
            TriggerState::NotTriggered
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoutResult {
    pub triggered: bool,
    pub capped: bool,
    pub amount: f64,
    pub evaluated_at: Vec<f64>,
}

/// Zero below the trigger, the loss of `theta` clipped componentwise at the
/// barrier once triggered, and the barrier loss once capped.
pub fn payout(spec: &ContractSpec, theta: &[f64]) -> Result<PayoutResult, ContractError> {
    let state = evaluate_trigger(spec, theta)?;
    let barrier = spec.barrier_levels();
    let amount = match state {
        TriggerState::NotTriggered => 0.0,
        TriggerState::Triggered => {
            let clipped: Vec<f64> = theta
                .iter()
                .zip(&barrier)
                .map(|(&t, &b)| t.min(b))
                .collect();
            spec.loss(&clipped)
        }
        TriggerState::CapExceeded => spec.loss(&barrier),
    };
    Ok(PayoutResult {
        triggered: state != TriggerState::NotTriggered,
        capped: state == TriggerState::CapExceeded,
        amount,
        evaluated_at: theta.to_vec(),
    })
}

/// Model for one event parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentLaw {
    PointMass { value: f64 },
    Fitted { law: ParamVector<f64> },
}

impl ComponentLaw {
    fn check(&self, param: &str) -> Result<(), ContractError> {
        let bad = |detail: String| {
            Err(ContractError::InvalidLaw {
                param: param.to_string(),
                detail,
            })
        };
        match self {
            ComponentLaw::PointMass { value } if !value.is_finite() => {
                bad("point mass must be finite".into())
            }
            ComponentLaw::PointMass { .. } => Ok(()),
            ComponentLaw::Fitted { law } => match validate_params(law.id(), law.values()) {
                Ok(()) => Ok(()),
                Err(e) => bad(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
}

/// Payouts for `n` independent draws of the event parameters, in draw
/// order. Draws are made in fixed chunks of [`MC_CHUNK`], chunk `c` and
/// component `j` using the seed derived from `(seed, c, j)`, so the output
/// does not depend on the number of worker threads.
pub fn payout_samples(
    spec: &ContractSpec,
    laws: &[ComponentLaw],
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, ContractError> {
    spec.validate()?;
    if laws.len() != spec.event_params.len() {
        return Err(ContractError::ShapeMismatch {
            expected: spec.event_params.len(),
            got: laws.len(),
        });
    }
    for (law, name) in laws.iter().zip(&spec.event_params) {
        law.check(name)?;
    }
    if n < MIN_MC_DRAWS {
        return Err(ContractError::TooFewDraws(n));
    }
    let models: Vec<Option<Model<f64>>> = laws
        .iter()
        .map(|l| match l {
            ComponentLaw::PointMass { .. } => None,
            ComponentLaw::Fitted { law } => Some(Model::new(law).expect("checked")),
        })
        .collect();
    let chunks = n.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = MC_CHUNK.min(n - c * MC_CHUNK);
            let columns: Vec<Vec<f64>> = laws
                .iter()
                .zip(&models)
                .enumerate()
                .map(|(j, (law, model))| match (law, model) {
                    (ComponentLaw::PointMass { value }, _) => vec![*value; len],
                    (_, Some(m)) => {
                        let mut rng =
                            ChaCha8Rng::seed_from_u64(derive_seed(seed, &[c as u64, j as u64]));
                        draw(m, &mut rng, len)
                    }
                    _ => unreachable!("fitted laws have models"),
                })
                .collect();
            (0..len)
                .map(|i| {
                    let theta: Vec<f64> = columns.iter().map(|col| col[i]).collect();
                    payout(spec, &theta).expect("shape checked").amount
                })
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

/// Mean payout and its standard error `sd / sqrt(n)`.
pub fn expected_payout_mc(
    spec: &ContractSpec,
    laws: &[ComponentLaw],
    n: usize,
    seed: u64,
) -> Result<McEstimate, ContractError> {
    let xs = payout_samples(spec, laws, n, seed)?;
    Ok(summarize(&xs, seed))
}

fn summarize(xs: &[f64], seed: u64) -> McEstimate {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let sq: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        n: xs.len(),
        seed,
    }
}

/// Mean of the largest `ceil((1 - level) n)` samples. Level 0 gives the
/// overall mean.
pub fn expected_shortfall(samples: &[f64], level: f64) -> Result<f64, ContractError> {
    if samples.is_empty() {
        return Err(ContractError::EmptySamples);
    }
    if !(0.0..1.0).contains(&level) {
        return Err(ContractError::BadLevel(level));
    }
    let n = samples.len();
    let raw = (1.0 - level) * n as f64;
    // 0.05 * 100 is 5.000000000000004 in binary; do not round that up to 6
    let k = ((raw - 1e-9 * raw.max(1.0)).ceil() as usize).clamp(1, n);
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite payouts"));
    Ok(pairwise_sum(&sorted[..k]) / k as f64)
}

/// Pricing summary written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PricingReport {
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
    pub es_levels: BTreeMap<String, f64>,
    pub currency: String,
    /// Event parameters are drawn independently of each other.
    pub independent_components: bool,
    pub laws: BTreeMap<String, ComponentLaw>,
}

pub const ES_LEVELS: [f64; 2] = [0.95, 0.99];

pub fn price(
    spec: &ContractSpec,
    laws: &[ComponentLaw],
    n: usize,
    seed: u64,
) -> Result<PricingReport, ContractError> {
    let xs = payout_samples(spec, laws, n, seed)?;
    let est = summarize(&xs, seed);
    let mut es_levels = BTreeMap::new();
    for level in ES_LEVELS {
        es_levels.insert(format!("{level}"), expected_shortfall(&xs, level)?);
    }
    Ok(PricingReport {
        estimate: est.estimate,
        std_error: est.std_error,
        n,
        seed,
        es_levels,
        currency: spec.currency.clone(),
        independent_components: true,
        laws: spec
            .event_params
            .iter()
            .cloned()
            .zip(laws.iter().cloned())
            .collect(),
    })
}
