//! Helpers shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use epirisk::distributions::{cdf, pdf, quantile, sample, support, DistributionId, ParamVector};
use epirisk::fitting::ks_statistic;
use epirisk::reinsurance::{ContractSpec, ExceedanceRule, LossMap, LossMapKind, Variant};

pub fn pv(id: DistributionId, named: &[(&str, f64)]) -> ParamVector<f64> {
    ParamVector::from_named(id, named).expect("valid parameters")
}

/// The second-stage laws reported for the parameter traces.
pub fn paper_vectors() -> Vec<ParamVector<f64>> {
    use DistributionId::*;
    vec![
        pv(
            JohnsonSb,
            &[
                ("gamma", -0.5248),
                ("delta", 0.72549),
                ("lambda", 1.1917),
                ("xi", -0.13403),
            ],
        ),
        pv(
            Beta4,
            &[
                ("alpha1", 0.30959),
                ("alpha2", 0.59326),
                ("a", 1.9019e-7),
                ("b", 0.00144),
            ],
        ),
        pv(
            Beta4,
            &[
                ("alpha1", 0.38219),
                ("alpha2", 0.67948),
                ("a", 1.3167e-7),
                ("b", 0.00147),
            ],
        ),
        pv(
            Burr4,
            &[
                ("k", 0.35518),
                ("alpha", 5.1224),
                ("beta", 0.00125),
                ("gamma", 0.0),
            ],
        ),
        pv(
            InverseGaussian3,
            &[("lambda", 0.00152), ("mu", 0.00284), ("gamma", 8.691e-4)],
        ),
        pv(
            GeneralizedPareto,
            &[("k", -0.36417), ("sigma", 3.6692), ("mu", -3.133)],
        ),
        pv(
            Weibull3,
            &[("alpha", 1.2597), ("beta", 1.133), ("gamma", 0.34228)],
        ),
        pv(Gev, &[("k", 0.35458), ("sigma", 0.02823), ("mu", 0.07851)]),
        pv(HyperbolicSecant, &[("mu", -0.02176), ("sigma", 0.02611)]),
    ]
}

/// A few members of every family, spanning the shape regimes.
pub fn grid_vectors() -> Vec<ParamVector<f64>> {
    use DistributionId::*;
    let mut out = Vec::new();
    for k in [-0.8, -0.3, 0.0, 0.2, 0.7] {
        out.push(pv(Gev, &[("k", k), ("sigma", 1.5), ("mu", -0.5)]));
    }
    for k in [-0.9, -0.25, 0.0, 0.3, 0.9] {
        out.push(pv(
            GeneralizedPareto,
            &[("k", k), ("sigma", 0.7), ("mu", 2.0)],
        ));
    }
    for (mu, sigma) in [(0.0, 1.0), (-3.0, 0.01), (1e3, 250.0)] {
        out.push(pv(Normal, &[("mu", mu), ("sigma", sigma)]));
        out.push(pv(HyperbolicSecant, &[("mu", mu), ("sigma", sigma)]));
    }
    for (g, d) in [(0.0, 1.0), (2.0, 0.5), (-1.5, 3.0)] {
        out.push(pv(
            JohnsonSb,
            &[("gamma", g), ("delta", d), ("lambda", 2.0), ("xi", -1.0)],
        ));
    }
    for (a1, a2) in [(1.0, 1.0), (0.5, 0.5), (2.5, 7.0), (12.0, 0.8)] {
        out.push(pv(
            Beta4,
            &[("alpha1", a1), ("alpha2", a2), ("a", -2.0), ("b", 3.0)],
        ));
    }
    for (k, a) in [(1.0, 1.0), (0.6, 3.0), (4.0, 0.8)] {
        out.push(pv(
            Burr4,
            &[("k", k), ("alpha", a), ("beta", 2.0), ("gamma", -1.0)],
        ));
    }
    for (l, m) in [(1.0, 1.0), (0.2, 3.0), (50.0, 0.5)] {
        out.push(pv(
            InverseGaussian3,
            &[("lambda", l), ("mu", m), ("gamma", 0.5)],
        ));
    }
    for a in [0.7, 1.0, 2.0, 5.0] {
        out.push(pv(
            Weibull3,
            &[("alpha", a), ("beta", 1.3), ("gamma", -0.2)],
        ));
    }
    out
}

/// Tanh-sinh quadrature on a finite interval, refined until two levels
/// agree. Nodes are placed by their distance to the nearer endpoint, so
/// integrable endpoint singularities are handled.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let term = |t: f64| -> f64 {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        if !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        // distance from each endpoint, as a fraction of the width
        let gap = (b - a) / ((2.0 * u.abs()).exp() + 1.0);
        let x = if u >= 0.0 { b - gap } else { a + gap };
        if gap == 0.0 || x <= a || x >= b {
            return 0.0;
        }
        let v = w * f(x);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let t_max = 6.5;
    let mut h = 0.5;
    let mut sum = term(0.0) + {
        let mut s = 0.0;
        let mut t = h;
        while t <= t_max {
            s += term(t) + term(-t);
            t += h;
        }
        s
    };
    let mut est = half * h * sum;
    for _ in 0..12 {
        let mut s = 0.0;
        let mut t = h / 2.0;
        while t <= t_max {
            s += term(t) + term(-t);
            t += h;
        }
        sum += s;
        h /= 2.0;
        let next = half * h * sum;
        if (next - est).abs() <= 1e-13 * next.abs().max(1e-300) {
            return next;
        }
        est = next;
    }
    est
}

/// Integral of the density between the 1e-9 and 1 - 1e-9 quantiles (the
/// support bounds when finite), pieced at interior quantiles.
pub fn total_mass(p: &ParamVector<f64>) -> f64 {
    let s = support(p).unwrap();
    let lo = if s.lo.is_finite() {
        s.lo
    } else {
        quantile(p, 1e-9).unwrap()
    };
    let hi = if s.hi.is_finite() {
        s.hi
    } else {
        quantile(p, 1.0 - 1e-9).unwrap()
    };
    let mut cuts = vec![lo];
    for q in [1e-6, 1e-3, 0.05, 0.25, 0.5, 0.75, 0.95, 0.999, 1.0 - 1e-6] {
        let x = quantile(p, q).unwrap();
        if x > *cuts.last().unwrap() && x < hi {
            cuts.push(x);
        }
    }
    cuts.push(hi);
    cuts.windows(2)
        .map(|w| tanh_sinh(|x| pdf(p, x).unwrap(), w[0], w[1]))
        .sum()
}

pub fn normalization_error(p: &ParamVector<f64>) -> f64 {
    (total_mass(p) - 1.0).abs()
}

pub fn round_trip_levels() -> Vec<f64> {
    let mut qs = vec![0.001];
    qs.extend((1..100).map(|i| i as f64 / 100.0));
    qs.push(0.999);
    qs
}

/// Largest |F(Q(q)) - q| over the probability grid.
pub fn round_trip_error(p: &ParamVector<f64>) -> f64 {
    round_trip_levels()
        .into_iter()
        .map(|q| (cdf(p, quantile(p, q).unwrap()).unwrap() - q).abs())
        .fold(0.0, f64::max)
}

/// Largest relative gap between a five-point difference quotient of the
/// CDF and the density, at interior quantiles.
pub fn derivative_error(p: &ParamVector<f64>) -> f64 {
    let s = support(p).unwrap();
    let iqr = quantile(p, 0.75).unwrap() - quantile(p, 0.25).unwrap();
    let mut worst: f64 = 0.0;
    for i in 1..50 {
        let x = quantile(p, i as f64 / 50.0).unwrap();
        let room = (x - s.lo).min(s.hi - x).min(iqr);
        let h = 1e-3 * room;
        let f = |d: f64| cdf(p, x + d * h).unwrap();
        let fd = (-f(2.0) + 8.0 * f(1.0) - 8.0 * f(-1.0) + f(-2.0)) / (12.0 * h);
        let want = pdf(p, x).unwrap();
        worst = worst.max((fd - want).abs() / want);
    }
    worst
}

pub const SAMPLING_N: usize = 100_000;

/// KS distance of a seeded inverse-transform sample, divided by the
/// 1.95 / sqrt(n) bound; passes when at most 1.
pub fn sampling_ratio(p: &ParamVector<f64>, seed: u64) -> f64 {
    let xs = sample(p, seed, SAMPLING_N).unwrap();
    ks_statistic(p, &xs).unwrap() / (1.95 / (SAMPLING_N as f64).sqrt())
}

/// Largest relative gap between k = +-1e-10 and k = 0, over the density
/// and the CDF, for GEV and GPD.
pub fn continuity_error() -> f64 {
    let mut worst: f64 = 0.0;
    for id in [DistributionId::Gev, DistributionId::GeneralizedPareto] {
        let at = |k: f64| pv(id, &[("k", k), ("sigma", 1.3), ("mu", 0.4)]);
        let zero = at(0.0);
        for k in [1e-10, -1e-10] {
            let near = at(k);
            for i in 1..100 {
                let x = quantile(&zero, i as f64 / 100.0).unwrap();
                for (a, b) in [
                    (pdf(&near, x).unwrap(), pdf(&zero, x).unwrap()),
                    (cdf(&near, x).unwrap(), cdf(&zero, x).unwrap()),
                ] {
                    worst = worst.max((a - b).abs() / b.abs());
                }
            }
        }
    }
    worst
}

/// Dense-grid evaluation of sup |F_n - F|: every sample point, the point
/// just below it, and a uniform grid over the sample range, with the
/// empirical CDF counted directly at each.
pub fn ks_brute_force(p: &ParamVector<f64>, data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let at = |x: f64, inclusive: bool| -> f64 {
        let count = data
            .iter()
            .filter(|&&d| if inclusive { d <= x } else { d < x })
            .count();
        (count as f64 / n - cdf(p, x).unwrap()).abs()
    };
    let mut d: f64 = 0.0;
    for &x in data {
        d = d.max(at(x, true)).max(at(x, false));
    }
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for i in 0..=2000 {
        d = d.max(at(lo + (hi - lo) * i as f64 / 2000.0, true));
    }
    d
}

/// Scalar contract with trigger 0.001, barrier 0.003 and L(theta) = 1e9 theta.
pub fn linear_scalar_contract() -> ContractSpec {
    contract(
        Variant::ScalarBarrier,
        ExceedanceRule::AnyComponent,
        &[(
            "fatality.location",
            0.001,
            0.003,
            vec![(0.0, 0.0), (1.0, 1e9)],
        )],
    )
}

/// (name, trigger, barrier, knots)
pub type Part<'a> = (&'a str, f64, f64, Vec<(f64, f64)>);

pub fn contract(variant: Variant, rule: ExceedanceRule, parts: &[Part]) -> ContractSpec {
    ContractSpec {
        variant,
        exceedance_rule: rule,
        event_params: parts.iter().map(|p| p.0.to_string()).collect(),
        trigger: parts.iter().map(|p| (p.0.to_string(), p.1)).collect(),
        barrier: parts.iter().map(|p| (p.0.to_string(), p.2)).collect(),
        loss_map: LossMap {
            kind: LossMapKind::PiecewiseLinear,
            knots: parts
                .iter()
                .map(|p| (p.0.to_string(), p.3.clone()))
                .collect(),
            statistical_death_value: 1.0,
        },
        currency: "CNY".into(),
    }
}

/// A random valid contract of either variant and rule, and two event
/// vectors with `lo <= hi` componentwise.
pub fn random_contract_case(seed: u64) -> (ContractSpec, Vec<f64>, Vec<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let variant = if rng.random() {
        Variant::VectorBarrier
    } else {
        Variant::ScalarBarrier
    };
    let rule = if rng.random() {
        ExceedanceRule::AnyComponent
    } else {
        ExceedanceRule::AllComponents
    };
    let names = ["speed.location", "death.location"];
    let mut parts = Vec::new();
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for name in names.iter().take(variant.arity()) {
        let scale: f64 = 10f64.powf(rng.random_range(-5.0..0.0));
        let trigger = scale * rng.random_range(0.0..1.0);
        let barrier = trigger + scale * rng.random_range(0.0..1.0);
        let mut x = -scale * rng.random_range(0.0..0.5);
        let mut amount = 0.0;
        let mut knots = Vec::new();
        for _ in 0..rng.random_range(1..6) {
            knots.push((x, amount));
            x += scale * rng.random_range(0.01..0.6);
            amount += rng.random_range(0.0..1e9);
        }
        parts.push((*name, trigger, barrier, knots));
        let a = rng.random_range(-0.5..2.5) * scale;
        // land exactly on a level now and then
        let a = match rng.random_range(0..6) {
            0 => trigger,
            1 => barrier,
            _ => a,
        };
        let b = if rng.random_range(0..4) == 0 {
            a
        } else {
            a + rng.random_range(0.0..1.5) * scale
        };
        lo.push(a);
        hi.push(b);
    }
    (contract(variant, rule, &parts), lo, hi)
}
