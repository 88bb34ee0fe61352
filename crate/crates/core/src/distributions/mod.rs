//! Distribution catalog.
//!
//! Nine continuous families, each with density, log-density, CDF, quantile,
//! support and inverse-transform sampling. Families are addressed by
//! [`DistributionId`]; parameter values travel as a [`ParamVector`].
//!
//! Every family is a location-scale family, which [`ParamVector::affine`]
//! exploits to move fitted parameters between standardized and raw data.

mod families;
mod invert;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Real;

pub use families::{
    Beta4, Burr4, GeneralizedPareto, Gev, HyperbolicSecant, InverseGaussian3, JohnsonSb, Normal,
    Weibull3,
};
pub use invert::invert_cdf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("{family}: expected {expected} parameters, got {got}")]
    WrongArity {
        family: DistributionId,
        expected: usize,
        got: usize,
    },
    #[error("{family}: invalid parameters ({})", fmt_violations(.violations))]
    InvalidParams {
        family: DistributionId,
        violations: Vec<Violation>,
    },
    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),
    #[error("{family}: missing parameter `{param}`")]
    MissingParam {
        family: DistributionId,
        param: &'static str,
    },
}

impl DistError {
    pub fn code(&self) -> &'static str {
        match self {
            DistError::WrongArity { .. } => "distributions.wrong_arity",
            DistError::InvalidParams { .. } => "distributions.invalid_params",
            DistError::ProbabilityOutOfRange(_) => "distributions.probability_out_of_range",
            DistError::EmptySample => "distributions.empty_sample",
            DistError::UnknownFamily(_) => "distributions.unknown_family",
            DistError::MissingParam { .. } => "distributions.missing_param",
        }
    }
}

fn fmt_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.rule).collect::<Vec<_>>().join(", ")
}

/// A failed parameter constraint, e.g. `sigma > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub param: &'static str,
    pub rule: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DistributionId {
    Gev,
    Normal,
    JohnsonSb,
    Beta4,
    Burr4,
    InverseGaussian3,
    GeneralizedPareto,
    Weibull3,
    HyperbolicSecant,
}

impl DistributionId {
    pub const ALL: [DistributionId; 9] = [
        DistributionId::Gev,
        DistributionId::Normal,
        DistributionId::JohnsonSb,
        DistributionId::Beta4,
        DistributionId::Burr4,
        DistributionId::InverseGaussian3,
        DistributionId::GeneralizedPareto,
        DistributionId::Weibull3,
        DistributionId::HyperbolicSecant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistributionId::Gev => "GEV",
            DistributionId::Normal => "Normal",
            DistributionId::JohnsonSb => "JohnsonSB",
            DistributionId::Beta4 => "Beta4",
            DistributionId::Burr4 => "Burr4",
            DistributionId::InverseGaussian3 => "InverseGaussian3",
            DistributionId::GeneralizedPareto => "GeneralizedPareto",
            DistributionId::Weibull3 => "Weibull3",
            DistributionId::HyperbolicSecant => "HyperbolicSecant",
        }
    }

    /// Parameter names in canonical order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            DistributionId::Gev => &["k", "sigma", "mu"],
            DistributionId::Normal => &["mu", "sigma"],
            DistributionId::JohnsonSb => &["gamma", "delta", "lambda", "xi"],
            DistributionId::Beta4 => &["alpha1", "alpha2", "a", "b"],
            DistributionId::Burr4 => &["k", "alpha", "beta", "gamma"],
            DistributionId::InverseGaussian3 => &["lambda", "mu", "gamma"],
            DistributionId::GeneralizedPareto => &["k", "sigma", "mu"],
            DistributionId::Weibull3 => &["alpha", "beta", "gamma"],
            DistributionId::HyperbolicSecant => &["mu", "sigma"],
        }
    }

    pub fn arity(self) -> usize {
        self.param_names().len()
    }

    /// Name of the parameter that shifts the distribution (for Beta4, the
    /// lower boundary).
    pub fn location_param(self) -> &'static str {
        self.param_names()[self.roles().0[0]]
    }

    /// Index of the location parameter and, when present, the scale
    /// parameter(s). Shape parameters are left untouched by affine maps.
    fn roles(self) -> (&'static [usize], &'static [usize]) {
        // (location-like indices, scale-like indices)
        match self {
            DistributionId::Gev => (&[2], &[1]),
            DistributionId::Normal => (&[0], &[1]),
            DistributionId::JohnsonSb => (&[3], &[2]),
            DistributionId::Beta4 => (&[2, 3], &[]),
            DistributionId::Burr4 => (&[3], &[2]),
            DistributionId::InverseGaussian3 => (&[2], &[0, 1]),
            DistributionId::GeneralizedPareto => (&[2], &[1]),
            DistributionId::Weibull3 => (&[2], &[1]),
            DistributionId::HyperbolicSecant => (&[0], &[1]),
        }
    }
}

impl fmt::Display for DistributionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistributionId {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['_', '-', ' '], "");
        let id = match key.as_str() {
            "gev" => DistributionId::Gev,
            "normal" => DistributionId::Normal,
            "johnsonsb" | "jsb" => DistributionId::JohnsonSb,
            "beta4" | "beta" => DistributionId::Beta4,
            "burr4" | "burr" => DistributionId::Burr4,
            "inversegaussian3" | "inversegaussian" => DistributionId::InverseGaussian3,
            "generalizedpareto" | "gpd" => DistributionId::GeneralizedPareto,
            "weibull3" | "weibull" => DistributionId::Weibull3,
            "hyperbolicsecant" | "hypersecant" => DistributionId::HyperbolicSecant,
            _ => return Err(DistError::UnknownFamily(s.to_string())),
        };
        Ok(id)
    }
}

impl Serialize for DistributionId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for DistributionId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// A family together with its parameter values in canonical order.
///
/// Serializes as `{"family": "GEV", "params": {"k": .., "sigma": .., "mu": ..}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector<T> {
    id: DistributionId,
    values: Vec<T>,
}

impl<T: Real> ParamVector<T> {
    /// Checks arity only; see [`validate_params`] for constraints.
    pub fn new(id: DistributionId, values: Vec<T>) -> Result<Self, DistError> {
        if values.len() != id.arity() {
            return Err(DistError::WrongArity {
                family: id,
                expected: id.arity(),
                got: values.len(),
            });
        }
        Ok(ParamVector { id, values })
    }

    /// Build from `(name, value)` pairs in any order.
    pub fn from_named(id: DistributionId, pairs: &[(&str, T)]) -> Result<Self, DistError> {
        if pairs.len() != id.arity() {
            return Err(DistError::WrongArity {
                family: id,
                expected: id.arity(),
                got: pairs.len(),
            });
        }
        let mut values = Vec::with_capacity(id.arity());
        for &name in id.param_names() {
            let v = pairs
                .iter()
                .find(|(n, _)| *n == name)
                .map(|&(_, v)| v)
                .ok_or(DistError::MissingParam {
                    family: id,
                    param: name,
                })?;
            values.push(v);
        }
        Ok(ParamVector { id, values })
    }

    pub fn id(&self) -> DistributionId {
        self.id
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<T> {
        self.id
            .param_names()
            .iter()
            .position(|&n| n == name)
            .map(|i| self.values[i])
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, T)> + '_ {
        self.id
            .param_names()
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    /// Parameters of the law of `shift + scale * X` where `X` has these
    /// parameters. `scale` must be positive.
    pub fn affine(&self, shift: T, scale: T) -> Self {
        let (locs, scales) = self.id.roles();
        let mut values = self.values.clone();
        for &i in locs {
            values[i] = shift + scale * values[i];
        }
        for &i in scales {
            values[i] = scale * values[i];
        }
        ParamVector {
            id: self.id,
            values,
        }
    }

    pub fn cast<U: Real>(&self) -> ParamVector<U> {
        ParamVector {
            id: self.id,
            values: self
                .values
                .iter()
                .map(|v| U::lit(v.to_f64_lossy()))
                .collect(),
        }
    }
}

impl<T: Real + Serialize> Serialize for ParamVector<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Params<'a, T>(&'a ParamVector<T>);
        impl<T: Real + Serialize> Serialize for Params<'_, T> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.values.len()))?;
                for (name, v) in self.0.named() {
                    m.serialize_entry(name, &v)?;
                }
                m.end()
            }
        }
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("family", &self.id)?;
        m.serialize_entry("params", &Params(self))?;
        m.end()
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for ParamVector<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct PvVisitor<T>(std::marker::PhantomData<T>);
        impl<'de, T: Real + Deserialize<'de>> Visitor<'de> for PvVisitor<T> {
            type Value = ParamVector<T>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object {family, params}")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut family: Option<DistributionId> = None;
                let mut params: Option<Vec<(String, T)>> = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "family" => family = Some(map.next_value()?),
                        "params" => {
                            let m: std::collections::BTreeMap<String, T> = map.next_value()?;
                            params = Some(m.into_iter().collect());
                        }
                        _ => {
                            map.next_value::<de::IgnoredAny>()?;
                        }
                    }
                }
                let family = family.ok_or_else(|| de::Error::missing_field("family"))?;
                let params = params.ok_or_else(|| de::Error::missing_field("params"))?;
                let pairs: Vec<(&str, T)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
                ParamVector::from_named(family, &pairs).map_err(de::Error::custom)
            }
        }
        d.deserialize_map(PvVisitor(std::marker::PhantomData))
    }
}

/// Support of a distribution; bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInterval<T> {
    pub lo: T,
    pub hi: T,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl<T: Real> SupportInterval<T> {
    pub fn real_line() -> Self {
        SupportInterval {
            lo: T::neg_infinity(),
            hi: T::infinity(),
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn contains(&self, x: T) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }
}

/// Common interface of the continuous families.
pub trait Continuous<T: Real> {
    fn ln_pdf(&self, x: T) -> T;

    fn pdf(&self, x: T) -> T {
        self.ln_pdf(x).exp()
    }

    fn cdf(&self, x: T) -> T;

    /// Inverse CDF for `0 < q < 1`; NaN outside.
    fn quantile(&self, q: T) -> T;

    fn support(&self) -> SupportInterval<T>;
}

/// A validated member of the catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum Model<T> {
    Gev(Gev<T>),
    Normal(Normal<T>),
    JohnsonSb(JohnsonSb<T>),
    Beta4(Beta4<T>),
    Burr4(Burr4<T>),
    InverseGaussian3(InverseGaussian3<T>),
    GeneralizedPareto(GeneralizedPareto<T>),
    Weibull3(Weibull3<T>),
    HyperbolicSecant(HyperbolicSecant<T>),
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::Gev($m) => $e,
            Model::Normal($m) => $e,
            Model::JohnsonSb($m) => $e,
            Model::Beta4($m) => $e,
            Model::Burr4($m) => $e,
            Model::InverseGaussian3($m) => $e,
            Model::GeneralizedPareto($m) => $e,
            Model::Weibull3($m) => $e,
            Model::HyperbolicSecant($m) => $e,
        }
    };
}

impl<T: Real> Model<T> {
    pub fn new(p: &ParamVector<T>) -> Result<Self, DistError> {
        validate_params(p.id, &p.values)?;
        let v = &p.values;
        Ok(match p.id {
            DistributionId::Gev => Model::Gev(Gev::new_unchecked(v[0], v[1], v[2])),
            DistributionId::Normal => Model::Normal(Normal::new_unchecked(v[0], v[1])),
            DistributionId::JohnsonSb => {
                Model::JohnsonSb(JohnsonSb::new_unchecked(v[0], v[1], v[2], v[3]))
            }
            DistributionId::Beta4 => Model::Beta4(Beta4::new_unchecked(v[0], v[1], v[2], v[3])),
            DistributionId::Burr4 => Model::Burr4(Burr4::new_unchecked(v[0], v[1], v[2], v[3])),
            DistributionId::InverseGaussian3 => {
                Model::InverseGaussian3(InverseGaussian3::new_unchecked(v[0], v[1], v[2]))
            }
            DistributionId::GeneralizedPareto => {
                Model::GeneralizedPareto(GeneralizedPareto::new_unchecked(v[0], v[1], v[2]))
            }
            DistributionId::Weibull3 => Model::Weibull3(Weibull3::new_unchecked(v[0], v[1], v[2])),
            DistributionId::HyperbolicSecant => {
                Model::HyperbolicSecant(HyperbolicSecant::new_unchecked(v[0], v[1]))
            }
        })
    }
}

impl<T: Real> Continuous<T> for Model<T> {
    fn ln_pdf(&self, x: T) -> T {
        dispatch!(self, m => m.ln_pdf(x))
    }
    fn pdf(&self, x: T) -> T {
        dispatch!(self, m => m.pdf(x))
    }
    fn cdf(&self, x: T) -> T {
        dispatch!(self, m => m.cdf(x))
    }
    fn quantile(&self, q: T) -> T {
        dispatch!(self, m => m.quantile(q))
    }
    fn support(&self) -> SupportInterval<T> {
        dispatch!(self, m => m.support())
    }
}

/// Check the family's parameter constraints.
///
/// `Err(WrongArity)` when the count is off, `Err(InvalidParams)` listing
/// every failed constraint otherwise.
// Written as negated comparisons so a NaN parameter is rejected.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_params<T: Real>(id: DistributionId, values: &[T]) -> Result<(), DistError> {
    if values.len() != id.arity() {
        return Err(DistError::WrongArity {
            family: id,
            expected: id.arity(),
            got: values.len(),
        });
    }
    let mut violations = Vec::new();
    for (i, &name) in id.param_names().iter().enumerate() {
        if !values[i].is_finite() {
            violations.push(Violation {
                param: name,
                rule: "finite",
            });
        }
    }
    let zero = T::zero();
    let mut positive = |i: usize, rule: &'static str| {
        if !(values[i] > zero) {
            violations.push(Violation {
                param: id.param_names()[i],
                rule,
            });
        }
    };
    match id {
        DistributionId::Gev | DistributionId::GeneralizedPareto => positive(1, "sigma > 0"),
        DistributionId::Normal | DistributionId::HyperbolicSecant => positive(1, "sigma > 0"),
        DistributionId::JohnsonSb => {
            positive(1, "delta > 0");
            positive(2, "lambda > 0");
        }
        DistributionId::Beta4 => {
            positive(0, "alpha1 > 0");
            positive(1, "alpha2 > 0");
        }
        DistributionId::Burr4 => {
            positive(0, "k > 0");
            positive(1, "alpha > 0");
            positive(2, "beta > 0");
        }
        DistributionId::InverseGaussian3 => {
            positive(0, "lambda > 0");
            positive(1, "mu > 0");
        }
        DistributionId::Weibull3 => {
            positive(0, "alpha > 0");
            positive(1, "beta > 0");
        }
    }
    if id == DistributionId::Beta4 && !(values[2] < values[3]) {
        violations.push(Violation {
            param: "a",
            rule: "a < b",
        });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(DistError::InvalidParams {
            family: id,
            violations,
        })
    }
}

pub fn pdf<T: Real>(p: &ParamVector<T>, x: T) -> Result<T, DistError> {
    Ok(Model::new(p)?.pdf(x))
}

pub fn log_pdf<T: Real>(p: &ParamVector<T>, x: T) -> Result<T, DistError> {
    Ok(Model::new(p)?.ln_pdf(x))
}

pub fn cdf<T: Real>(p: &ParamVector<T>, x: T) -> Result<T, DistError> {
    Ok(Model::new(p)?.cdf(x))
}

pub fn quantile<T: Real>(p: &ParamVector<T>, q: T) -> Result<T, DistError> {
    if !(q > T::zero() && q < T::one()) {
        return Err(DistError::ProbabilityOutOfRange(q.to_f64_lossy()));
    }
    Ok(Model::new(p)?.quantile(q))
}

pub fn support<T: Real>(p: &ParamVector<T>) -> Result<SupportInterval<T>, DistError> {
    Ok(Model::new(p)?.support())
}

/// `n` inverse-transform draws; identical output for identical seeds.
pub fn sample<T: Real>(p: &ParamVector<T>, seed: u64, n: usize) -> Result<Vec<T>, DistError> {
    if n == 0 {
        return Err(DistError::EmptySample);
    }
    let model = Model::new(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(draw(&model, &mut rng, n))
}

/// Inverse-transform draws from any [`Continuous`] law using the caller's RNG.
pub fn draw<T: Real, D: Continuous<T>, R: Rng>(law: &D, rng: &mut R, n: usize) -> Vec<T> {
    (0..n)
        .map(|_| {
            let u = T::lit(open_unit(rng))
                .max(T::min_positive_value())
                .min(T::one() - T::epsilon());
            law.quantile(u)
        })
        .collect()
}

/// Uniform draw on the open interval (0, 1).
pub fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
