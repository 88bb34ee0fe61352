//! Special functions: log-gamma, incomplete gamma and beta, the standard
//! normal CDF and its inverse.
//!
//! Everything is generic over [`Real`]; accuracy targets (about 1e-14
//! relative) only make sense for `f64`.

use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 500;

fn eps<T: Real>() -> T {
    T::epsilon()
}

/// Natural log of |Γ(x)|.
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let s = (T::PI() * x).sin().abs();
        return T::PI().ln() - s.ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_usize_lossy(i));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    half * (T::TAU()).ln() + (x + half) * t.ln() - t + acc.ln()
}

pub fn gamma<T: Real>(x: T) -> T {
    let lg = ln_gamma(x).exp();
    if x > T::zero() {
        return lg;
    }
    // sign of Γ on the negative axis alternates between poles
    let k = x.floor().to_i64().unwrap_or(0);
    if k % 2 == 0 {
        lg
    } else {
        -lg
    }
}

pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Series for P(a, x) divided by its prefactor.
fn gamma_series<T: Real>(a: T, x: T) -> T {
    let mut ap = a;
    let mut del = T::one() / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap = ap + T::one();
        del = del * x / ap;
        sum = sum + del;
        if del.abs() < sum.abs() * eps::<T>() {
            break;
        }
    }
    sum
}

/// Continued fraction for Q(a, x) divided by its prefactor (modified Lentz).
fn gamma_cf<T: Real>(a: T, x: T) -> T {
    let tiny = T::min_positive_value() / eps::<T>();
    let mut b = x + T::one() - a;
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -T::from_usize_lossy(i) * (T::from_usize_lossy(i) - a);
        b = b + T::lit(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = T::one() / d;
        let del = d * c;
        h = h * del;
        if (del - T::one()).abs() < eps::<T>() {
            break;
        }
    }
    h
}

fn ln_gamma_prefactor<T: Real>(a: T, x: T) -> T {
    a * x.ln() - x - ln_gamma(a)
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x < a + T::one() {
        ln_gamma_prefactor(a, x).exp() * gamma_series(a, x)
    } else {
        T::one() - ln_gamma_prefactor(a, x).exp() * gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x).
pub fn gamma_q<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::one();
    }
    if x < a + T::one() {
        T::one() - ln_gamma_prefactor(a, x).exp() * gamma_series(a, x)
    } else {
        ln_gamma_prefactor(a, x).exp() * gamma_cf(a, x)
    }
}

/// ln Q(a, x), accurate when Q underflows.
pub fn ln_gamma_q<T: Real>(a: T, x: T) -> T {
    if x < a + T::one() {
        gamma_q(a, x).ln()
    } else {
        ln_gamma_prefactor(a, x) + gamma_cf(a, x).ln()
    }
}

pub fn erfc<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x >= T::zero() {
        gamma_q(half, x * x)
    } else {
        T::lit(2.0) - gamma_q(half, x * x)
    }
}

pub fn erf<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x >= T::zero() {
        gamma_p(half, x * x)
    } else {
        -gamma_p(half, x * x)
    }
}

/// Standard normal CDF Φ(x).
pub fn norm_cdf<T: Real>(x: T) -> T {
    T::lit(0.5) * erfc(-x * T::FRAC_1_SQRT_2())
}

/// ln Φ(x); finite far into the lower tail.
pub fn ln_norm_cdf<T: Real>(x: T) -> T {
    if x < T::lit(-5.0) {
        T::lit(0.5).ln() + ln_gamma_q(T::lit(0.5), x * x * T::lit(0.5))
    } else {
        norm_cdf(x).ln()
    }
}

pub fn norm_pdf<T: Real>(x: T) -> T {
    (-(x * x) * T::lit(0.5)).exp() / T::TAU().sqrt()
}

/// Inverse standard normal CDF Φ⁻¹(p).
///
/// Rational starting point (Acklam) polished by two Halley steps against
/// [`norm_cdf`].
pub fn norm_ppf<T: Real>(p: T) -> T {
    if p.is_nan() || p < T::zero() || p > T::one() {
        return T::nan();
    }
    if p == T::zero() {
        return T::neg_infinity();
    }
    if p == T::one() {
        return T::infinity();
    }
    if p > T::lit(0.5) {
        return -norm_ppf(T::one() - p);
    }
    let start = T::lit(acklam(p.to_f64_lossy()));
    let mut x = start;
    for _ in 0..2 {
        let e = norm_cdf(x) - p;
        let u = e * T::TAU().sqrt() * (x * x * T::lit(0.5)).exp();
        x = x - u / (T::one() + x * u * T::lit(0.5));
    }
    if x.is_finite() {
        x
    } else {
        start
    }
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

fn beta_cf<T: Real>(a: T, b: T, x: T) -> T {
    let tiny = T::min_positive_value() / eps::<T>();
    let one = T::one();
    let two = T::lit(2.0);
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = one / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = T::from_usize_lossy(m);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let del = d * c;
        h = h * del;
        if (del - one).abs() < eps::<T>() {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn inc_beta<T: Real>(a: T, b: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + T::one()) / (a + b + T::lit(2.0)) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        T::one() - ln_front.exp() * beta_cf(b, a, T::one() - x) / b
    }
}
