//! Maximum-likelihood fitting by simplex search in an unconstrained
//! parameterization.
//!
//! Data are standardized to zero mean and unit variance before the search;
//! every catalog family is location-scale, so the optimum maps back exactly
//! through [`ParamVector::affine`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distributions::{Continuous, DistributionId, Model, ParamVector};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::scalar::{pairwise_sum, Real};
use crate::special::ln_gamma;

use super::ks::ks_sorted;
use super::{FitError, FitOptions, FitResult, ZeroPolicy};

/// Boundary padding relative to the data range for threshold parameters.
const PAD: f64 = 1e-6;
/// Jitter applied to the starting point of each restart.
const JITTER: f64 = 0.5;
/// Box on every unconstrained coordinate. Some families (Burr4 near its
/// Weibull limit, for one) have likelihood ridges running off to infinity;
/// the box keeps the reported optimum finite.
const COORD_LIMIT: f64 = 20.0;

/// Fit one family to `data` by maximum likelihood.
///
/// Non-convergence is not an error: the best point found is returned with
/// `converged = false`.
pub fn fit_mle<T: Real>(
    id: DistributionId,
    data: &[T],
    opts: &FitOptions,
) -> Result<FitResult<T>, FitError> {
    let n = data.len();
    let need = id.arity() + 1;
    if n < need {
        return Err(FitError::TooFewObservations {
            family: id,
            need,
            got: n,
        });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(FitError::NonFiniteData);
    }
    let (data, perturbed) = apply_zero_policy(data, opts.zero_policy);
    let first = data[0];
    if data.iter().all(|&x| x == first) {
        return Err(FitError::DegenerateSample { family: id });
    }

    let nf = T::from_usize_lossy(n);
    let mut sorted = data.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mean = pairwise_sum(&sorted) / nf;
    let var = pairwise_sum(
        &sorted
            .iter()
            .map(|&x| (x - mean) * (x - mean))
            .collect::<Vec<_>>(),
    ) / nf;
    let scale = var.sqrt();
    if !(mean.is_finite() && scale.is_finite()) {
        return Err(FitError::NonFiniteData);
    }

    if id == DistributionId::Normal {
        let params = ParamVector::new(id, vec![mean, scale]).expect("arity");
        return finish(params, &sorted, true, 0, perturbed);
    }

    let std: Vec<T> = sorted.iter().map(|&x| (x - mean) / scale).collect();
    let space = Space::new(id, &std);
    let nll = |theta: &[T]| -> T {
        let Some(p) = space.to_params(theta) else {
            return T::infinity();
        };
        let Ok(model) = Model::new(&p) else {
            return T::infinity();
        };
        let mut acc = T::zero();
        for &y in &std {
            let l = model.ln_pdf(y);
            if !l.is_finite() {
                return T::infinity();
            }
            acc = acc - l;
        }
        acc
    };

    let nm_opts = NelderMeadOptions {
        max_iters: opts.max_iters,
        f_tol: T::lit(opts.tol),
    };
    let steps = vec![T::lit(0.3); id.arity()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let normal = |rng: &mut ChaCha8Rng| -> T {
        let u = crate::distributions::open_unit(rng);
        T::lit(crate::special::norm_ppf(u))
    };

    let starts = space.initial_points();
    let mut best: Option<(Vec<T>, T, bool)> = None;
    let mut restarts_used = 0;
    let total = starts.len().max(1) + opts.restarts;
    for attempt in 0..total {
        let mut x0 = if attempt < starts.len() {
            starts[attempt].clone()
        } else {
            restarts_used += 1;
            let base = best
                .as_ref()
                .map(|b| b.0.clone())
                .unwrap_or_else(|| starts[0].clone());
            base.iter()
                .map(|&v| v + T::lit(JITTER) * normal(&mut rng))
                .collect()
        };
        // pull infeasible jittered starts back towards the first start
        let mut tries = 0;
        while !nll(&x0).is_finite() && tries < 20 {
            x0 = x0
                .iter()
                .zip(&starts[0])
                .map(|(&a, &b)| (a + b) * T::lit(0.5))
                .collect();
            tries += 1;
        }
        if !nll(&x0).is_finite() {
            continue;
        }
        let mut run = nelder_mead(nll, &x0, &steps, &nm_opts);
        // one polishing pass from the optimum with a fresh simplex
        let polish = nelder_mead(nll, &run.x, &vec![T::lit(0.05); id.arity()], &nm_opts);
        if polish.f <= run.f {
            run.x = polish.x;
            run.f = polish.f;
            run.converged = polish.converged;
        }
        let better = best.as_ref().is_none_or(|b| run.f < b.1);
        if better {
            best = Some((run.x, run.f, run.converged));
        }
    }

    let Some((theta, f, converged)) = best else {
        return Err(FitError::NoFeasibleStart { family: id });
    };
    let params_std = space
        .to_params(&theta)
        .ok_or(FitError::NoFeasibleStart { family: id })?;
    let params = params_std.affine(mean, scale);
    let converged = converged && f.is_finite() && Model::new(&params).is_ok();
    finish(params, &sorted, converged, restarts_used, perturbed)
}

fn finish<T: Real>(
    params: ParamVector<T>,
    sorted: &[T],
    converged: bool,
    restarts_used: usize,
    perturbed: usize,
) -> Result<FitResult<T>, FitError> {
    let model = Model::new(&params).map_err(|e| FitError::Distribution(e.to_string()))?;
    let ll = pairwise_sum(&sorted.iter().map(|&x| model.ln_pdf(x)).collect::<Vec<_>>());
    let ks = ks_sorted(&model, sorted);
    Ok(FitResult {
        id: params.id(),
        params,
        log_likelihood: ll,
        ks,
        n: sorted.len(),
        converged: converged && ll.is_finite(),
        restarts_used,
        zeros_perturbed: perturbed,
    })
}

fn apply_zero_policy<T: Real>(data: &[T], policy: ZeroPolicy) -> (Vec<T>, usize) {
    match policy {
        ZeroPolicy::Keep => (data.to_vec(), 0),
        ZeroPolicy::Perturb => {
            let smallest = data
                .iter()
                .copied()
                .filter(|&x| x > T::zero())
                .fold(T::infinity(), T::min);
            if !smallest.is_finite() {
                return (data.to_vec(), 0);
            }
            let replacement = smallest * T::lit(0.5);
            let mut count = 0;
            let out = data
                .iter()
                .map(|&x| {
                    if x == T::zero() {
                        count += 1;
                        replacement
                    } else {
                        x
                    }
                })
                .collect();
            (out, count)
        }
    }
}

/// Unconstrained coordinates for one family on standardized, sorted data.
///
/// Positive parameters live on a log scale. Threshold parameters (lower
/// endpoints, and both Beta/Johnson SB endpoints) are written as the data
/// extreme minus/plus the padding and a log-scaled offset, so every
/// proposal keeps the sample strictly inside the support.
struct Space<T> {
    id: DistributionId,
    lo: T,
    hi: T,
    range: T,
    pad: T,
    skew: T,
    median: T,
    ys: Vec<T>,
}

impl<T: Real> Space<T> {
    fn new(id: DistributionId, std_sorted: &[T]) -> Self {
        let n = std_sorted.len();
        let lo = std_sorted[0];
        let hi = std_sorted[n - 1];
        let range = hi - lo;
        let nf = T::from_usize_lossy(n);
        let skew = std_sorted.iter().map(|&y| y * y * y).sum::<T>() / nf;
        let median = if n % 2 == 1 {
            std_sorted[n / 2]
        } else {
            (std_sorted[n / 2 - 1] + std_sorted[n / 2]) * T::lit(0.5)
        };
        Space {
            id,
            lo,
            hi,
            range,
            pad: T::lit(PAD) * range,
            skew,
            median,
            ys: std_sorted.to_vec(),
        }
    }

    fn below(&self, u: T) -> T {
        self.lo - self.pad - u.exp() * self.range
    }

    fn above(&self, u: T) -> T {
        self.hi + self.pad + u.exp() * self.range
    }

    /// Inverse of [`Self::below`]; `gap` is the distance below `lo`.
    fn u_below(&self, gap: T) -> T {
        ((gap - self.pad).max(self.pad) / self.range).ln()
    }

    fn to_params(&self, t: &[T]) -> Option<ParamVector<T>> {
        if t.iter()
            .any(|v| !v.is_finite() || v.abs() > T::lit(COORD_LIMIT))
        {
            return None;
        }
        let values = match self.id {
            DistributionId::Gev | DistributionId::GeneralizedPareto => {
                // shapes at or below -1 give an unbounded likelihood
                if t[0] <= -T::one() {
                    return None;
                }
                let loc = if self.id == DistributionId::Gev {
                    t[2]
                } else {
                    self.below(t[2])
                };
                vec![t[0], t[1].exp(), loc]
            }
            DistributionId::Normal | DistributionId::HyperbolicSecant => vec![t[0], t[1].exp()],
            DistributionId::JohnsonSb => {
                let xi = self.below(t[2]);
                let top = self.above(t[3]);
                vec![t[0], t[1].exp(), top - xi, xi]
            }
            DistributionId::Beta4 => {
                vec![t[0].exp(), t[1].exp(), self.below(t[2]), self.above(t[3])]
            }
            DistributionId::Burr4 => vec![t[0].exp(), t[1].exp(), t[2].exp(), self.below(t[3])],
            DistributionId::InverseGaussian3 => vec![t[0].exp(), t[1].exp(), self.below(t[2])],
            DistributionId::Weibull3 => vec![t[0].exp(), t[1].exp(), self.below(t[2])],
        };
        if values.iter().any(|v| !v.is_finite()) {
            return None;
        }
        ParamVector::new(self.id, values).ok()
    }

    /// Moment-based starting points (first one is the primary start).
    fn initial_points(&self) -> Vec<Vec<T>> {
        let c = T::lit;
        let tenth = self.u_below(c(0.1) * self.range);
        match self.id {
            DistributionId::Gev => {
                // Gumbel moments for scale/location, several shapes
                let sigma = c(6f64.sqrt() / std::f64::consts::PI);
                let mu = -c(0.577_215_664_901_532_9) * sigma;
                [0.1, -0.2, 0.4]
                    .iter()
                    .map(|&k| vec![c(k), sigma.ln(), mu])
                    .collect()
            }
            DistributionId::Normal => vec![vec![T::zero(), T::zero()]],
            DistributionId::HyperbolicSecant => vec![vec![self.median, T::zero()]],
            DistributionId::JohnsonSb => [0.1, 0.5]
                .iter()
                .map(|&frac| {
                    let gap = c(frac) * self.range;
                    let xi = self.lo - gap;
                    let lambda = self.range + gap + gap;
                    // normal scores of the logit-transformed sample
                    let logits: Vec<T> = self
                        .ys
                        .iter()
                        .map(|&y| {
                            let z = (y - xi) / lambda;
                            z.ln() - (-z).ln_1p()
                        })
                        .collect();
                    let (m, s) = mean_sd(&logits);
                    let delta = T::one() / s;
                    vec![-m * delta, delta.ln(), self.u_below(gap), self.u_below(gap)]
                })
                .collect(),
            DistributionId::Beta4 => {
                let gap = c(0.05) * self.range;
                let width = self.range + gap + gap;
                let zs: Vec<T> = self
                    .ys
                    .iter()
                    .map(|&y| (y - (self.lo - gap)) / width)
                    .collect();
                let (m, s) = mean_sd(&zs);
                let common = (m * (T::one() - m) / (s * s) - T::one()).max(c(0.2));
                let a1 = (m * common).max(c(0.1));
                let a2 = ((T::one() - m) * common).max(c(0.1));
                let u = self.u_below(gap);
                vec![
                    vec![a1.ln(), a2.ln(), u, u],
                    vec![c(0.5f64.ln()), c(0.5f64.ln()), c(-8.0), c(-8.0)],
                ]
            }
            DistributionId::Burr4 => {
                let gamma = self.lo - c(0.1) * self.range;
                let beta = (self.median - gamma).max(self.pad);
                vec![
                    vec![T::zero(), c(2f64.ln()), beta.ln(), tenth],
                    vec![c(0.5f64.ln()), c(3f64.ln()), beta.ln(), tenth],
                ]
            }
            DistributionId::InverseGaussian3 => {
                let g = self.skew.max(c(0.1));
                let mut mu = c(3.0) / g;
                let mut gamma = -mu;
                if gamma >= self.lo - c(0.05) * self.range {
                    gamma = self.lo - c(0.1) * self.range;
                    mu = -gamma;
                }
                let lambda = mu * mu * mu;
                vec![vec![lambda.ln(), mu.ln(), self.u_below(self.lo - gamma)]]
            }
            DistributionId::GeneralizedPareto => {
                let gap = c(0.05) * self.range;
                let excess = gap - self.lo;
                let k = ((T::one() - T::one() / (excess * excess)) * c(0.5))
                    .max(c(-0.9))
                    .min(c(0.45));
                let sigma = (excess * (T::one() - k)).max(self.pad);
                vec![
                    vec![k, sigma.ln(), self.u_below(gap)],
                    vec![T::zero(), excess.ln(), self.u_below(gap)],
                ]
            }
            DistributionId::Weibull3 => {
                let alpha = c(1.5);
                let gamma = self.lo - c(0.1) * self.range;
                let beta = -gamma / ln_gamma(T::one() + T::one() / alpha).exp();
                vec![
                    vec![alpha.ln(), beta.ln(), tenth],
                    vec![T::zero(), (-gamma).ln(), tenth],
                ]
            }
        }
    }
}

fn mean_sd<T: Real>(xs: &[T]) -> (T, T) {
    if xs.is_empty() {
        return (T::zero(), T::one());
    }
    let n = T::from_usize_lossy(xs.len());
    let m = xs.iter().copied().sum::<T>() / n;
    let v = xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / n;
    (m, v.sqrt().max(T::lit(1e-3)))
}
