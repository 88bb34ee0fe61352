use crate::scalar::Real;
use crate::special::{inc_beta, ln_beta, ln_norm_cdf, norm_cdf, norm_ppf};

use super::{invert_cdf, validate_params, Continuous, DistError, DistributionId, SupportInterval};

fn half<T: Real>() -> T {
    T::lit(0.5)
}

fn ln_sqrt_2pi<T: Real>() -> T {
    half::<T>() * T::TAU().ln()
}

macro_rules! family {
    ($(#[$doc:meta])* $name:ident, $id:expr, [$($field:ident),+]) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name<T> {
            $(pub(crate) $field: T,)+
        }

        impl<T: Real> $name<T> {
            pub fn new($($field: T),+) -> Result<Self, DistError> {
                validate_params($id, &[$($field),+])?;
                Ok(Self { $($field),+ })
            }

            pub(crate) fn new_unchecked($($field: T),+) -> Self {
                Self { $($field),+ }
            }

            $(
                pub fn $field(&self) -> T {
                    self.$field
                }
            )+
        }
    };
}

family!(
    /// Generalized extreme value with shape `k`, scale `sigma`, location `mu`:
    /// F(x) = exp(-(1 + k z)^(-1/k)), z = (x - mu) / sigma; Gumbel at k = 0.
    /// `k > 0` gives the heavy (Fréchet-type) upper tail.
    Gev, DistributionId::Gev, [k, sigma, mu]
);

impl<T: Real> Gev<T> {
    /// `(1 + k z)^(-1/k)`, or `exp(-z)` at k = 0. None outside the support.
    fn tail_term(&self, x: T) -> Option<T> {
        let z = (x - self.mu) / self.sigma;
        if self.k == T::zero() {
            return Some((-z).exp());
        }
        let kz = self.k * z;
        if kz <= -T::one() {
            return None;
        }
        Some((-kz.ln_1p() / self.k).exp())
    }
}

impl<T: Real> Continuous<T> for Gev<T> {
    fn ln_pdf(&self, x: T) -> T {
        let z = (x - self.mu) / self.sigma;
        if self.k == T::zero() {
            return -self.sigma.ln() - z - (-z).exp();
        }
        let kz = self.k * z;
        if kz <= -T::one() {
            return T::neg_infinity();
        }
        let l = kz.ln_1p();
        // (1 + 1/k) ln t, split so k -> 0 stays accurate
        -self.sigma.ln() - l - l / self.k - (-l / self.k).exp()
    }

    fn cdf(&self, x: T) -> T {
        match self.tail_term(x) {
            Some(s) => (-s).exp(),
            None if self.k > T::zero() => T::zero(),
            None => T::one(),
        }
    }

    fn quantile(&self, q: T) -> T {
        if !(q > T::zero() && q < T::one()) {
            return T::nan();
        }
        let ll = (-q.ln()).ln();
        if self.k == T::zero() {
            self.mu - self.sigma * ll
        } else {
            self.mu + self.sigma * (-self.k * ll).exp_m1() / self.k
        }
    }

    fn support(&self) -> SupportInterval<T> {
        let edge = self.mu - self.sigma / self.k;
        if self.k > T::zero() {
            SupportInterval {
                lo: edge,
                hi: T::infinity(),
                lo_closed: false,
                hi_closed: false,
            }
        } else if self.k < T::zero() {
            SupportInterval {
                lo: T::neg_infinity(),
                hi: edge,
                lo_closed: false,
                hi_closed: false,
            }
        } else {
            SupportInterval::real_line()
        }
    }
}

family!(Normal, DistributionId::Normal, [mu, sigma]);

impl<T: Real> Continuous<T> for Normal<T> {
    fn ln_pdf(&self, x: T) -> T {
        let z = (x - self.mu) / self.sigma;
        -half::<T>() * z * z - self.sigma.ln() - ln_sqrt_2pi::<T>()
    }

    fn pdf(&self, x: T) -> T {
        let z = (x - self.mu) / self.sigma;
        (-half::<T>() * z * z).exp() / (self.sigma * T::TAU().sqrt())
    }

    fn cdf(&self, x: T) -> T {
        norm_cdf((x - self.mu) / self.sigma)
    }

    fn quantile(&self, q: T) -> T {
        if !(q > T::zero() && q < T::one()) {
            return T::nan();
        }
        self.mu + self.sigma * norm_ppf(q)
    }

    fn support(&self) -> SupportInterval<T> {
        SupportInterval::real_line()
    }
}

family!(
    /// Johnson SB on `[xi, xi + lambda]`: `gamma + delta ln(z / (1 - z))` is
    /// standard normal for `z = (x - xi) / lambda`.
    JohnsonSb, DistributionId::JohnsonSb, [gamma, delta, lambda, xi]
);

impl<T: Real> JohnsonSb<T> {
    fn unit(&self, x: T) -> T {
        (x - self.xi) / self.lambda
    }

    fn normal_score(&self, z: T) -> T {
        self.gamma + self.delta * (z.ln() - (-z).ln_1p())
    }
}

impl<T: Real> Continuous<T> for JohnsonSb<T> {
    fn ln_pdf(&self, x: T) -> T {
        let z = self.unit(x);
        if !(z > T::zero() && z < T::one()) {
            return T::neg_infinity();
        }
        let u = self.normal_score(z);
        self.delta.ln()
            - self.lambda.ln()
            - ln_sqrt_2pi::<T>()
            - z.ln()
            - (-z).ln_1p()
            - half::<T>() * u * u
    }

    fn pdf(&self, x: T) -> T {
        let z = self.unit(x);
        if !(z > T::zero() && z < T::one()) {
            return T::zero();
        }
        let u = self.normal_score(z);
        self.delta / (self.lambda * T::TAU().sqrt() * z * (T::one() - z))
            * (-half::<T>() * u * u).exp()
    }

    fn cdf(&self, x: T) -> T {
        let z = self.unit(x);
        if z <= T::zero() {
            T::zero()
        } else if z >= T::one() {
            T::one()
        } else {
            norm_cdf(self.normal_score(z))
        }
    }

    fn quantile(&self, q: T) -> T {
        if !(q > T::zero() && q < T::one()) {
            return T::nan();
        }
        let w = (norm_ppf(q) - self.gamma) / self.delta;
        self.xi + self.lambda / (T::one() + (-w).exp())
    }

    fn support(&self) -> SupportInterval<T> {
        SupportInterval {
            lo: self.xi,
            hi: self.xi + self.lambda,
            lo_closed: true,
            hi_closed: true,
        }
    }
}

family!(
    /// Four-parameter beta on `[a, b]` with shapes `alpha1`, `alpha2`.
    Beta4, DistributionId::Beta4, [alpha1, alpha2, a, b]
);

impl<T: Real> Beta4<T> {
    fn unit(&self, x: T) -> T {
        (x - self.a) / (self.b - self.a)
    }
}

impl<T: Real> Continuous<T> for Beta4<T> {
    fn ln_pdf(&self, x: T) -> T {
        let z = self.unit(x);
        if !(z >= T::zero() && z <= T::one()) {
            return T::neg_infinity();
        }
        let one = T::one();
        let lz = if self.alpha1 == one {
            T::zero()
        } else {
            (self.alpha1 - one) * z.ln()
        };
        let l1z = if self.alpha2 == one {
            T::zero()
        } else {
            (self.alpha2 - one) * (-z).ln_1p()
        };
        lz + l1z - ln_beta(self.alpha1, self.alpha2) - (self.b - self.a).ln()
    }

    fn pdf(&self, x: T) -> T {
        let z = self.unit(x);
        if !(z >= T::zero() && z <= T::one()) {
            return T::zero();
        }
        let one = T::one();
        let num = (x - self.a).powf(self.alpha1 - one) * (self.b - x).powf(self.alpha2 - one);
        num / (ln_beta(self.alpha1, self.alpha2).exp()
            * (self.b - self.a).powf(self.alpha1 + self.alpha2 - one))
    }

    fn cdf(&self, x: T) -> T {
        inc_beta(self.alpha1, self.alpha2, self.unit(x))
    }

    fn quantile(&self, q: T) -> T {
        if !(q > T::zero() && q < T::one()) {
            return T::nan();
        }
        let (a1, a2) = (self.alpha1, self.alpha2);
        let unit = SupportInterval {
            lo: T::zero(),
            hi: T::one(),
            lo_closed: true,
            hi_closed: true,
        };
        let ln_b = ln_beta(a1, a2);
        let z = invert_cdf(
            |z| inc_beta(a1, a2, z),
            |z| {
                if z <= T::zero() || z >= T::one() {
                    T::zero()
                } else {
                    ((a1 - T::one()) * z.ln() + (a2 - T::one()) * (-z).ln_1p() - ln_b).exp()
                }
            },
            unit,
            a1 / (a1 + a2),
            T::lit(0.25),
            q,
        );
        self.a + (self.b - self.a) * z
    }

    fn support(&self) -> SupportInterval<T> {
        SupportInterval {
            lo: self.a,
            hi: self.b,
            lo_closed: true,
            hi_closed: true,
        }
    }
}

family!(
    /// Four-parameter Burr (type XII) with shapes `k`, `alpha`, scale `beta`,
    /// location `gamma`.
    Burr4, DistributionId::Burr4, [k, alpha, beta, gamma]
);

impl<T: Real> Continuous<T> for Burr4<T> {
    fn ln_pdf(&self, x: T) -> T {
        let y = (x - self.gamma) / self.beta;
        if y < T::zero() || (y == T::zero() && self.alpha > T::one()) {
            return T::neg_infinity();
        }
        let ly = y.ln();
        let ya = (self.alpha * ly).exp();
        let shape = if self.alpha == T::one() {
            T::zero()
        } else {
            (self.alpha - T::one()) * ly
        };
        (self.alpha * self.k).ln() + shape - self.beta.ln() - (self.k + T::one()) * ya.ln_1p()
    }

    fn pdf(&self, x: T) -> T {
        let y = (x - self.gamma) / self.beta;
        if y < T::zero() {
            return T::zero();
        }
        let one = T::one();
        self.alpha * self.k * y.powf(self.alpha - one)
            / (self.beta * (one + y.powf(self.alpha)).powf(self.k + one))
    }

    fn cdf(&self, x: T) -> T {
        let y = (x - self.gamma) / self.beta;
        if y <= T::zero() {
            return T::zero();
        }
        -(-self.k * y.powf(self.alpha).ln_1p()).exp_m1()
    }

    fn quantile(&self, q: T) -> T {
        if !(q > T::zero() && q < T::one()) {
            return T::nan();
        }
        let y = (-(-q).ln_1p() / self.k)
            .exp_m1()
            .powf(T::one() / self.alpha);
        self.gamma + self.beta * y
    }

    fn support(&self) -> SupportInterval<T> {
        SupportInterval {
            lo: self.gamma,
            hi: T::infinity(),
            lo_closed: true,
            hi_closed: false,
        }
    }
}

family!(
    /// Three-parameter inverse Gaussian: `lambda` shape, `mu` mean of the
    /// shifted variable, `gamma` location.
    InverseGaussian3, DistributionId::InverseGaussian3, [lambda, mu, gamma]
);

impl<T: Real> Continuous<T> for InverseGaussian3<T> {
    fn ln_pdf(&self, x: T) -> T {
        let y = x - self.gamma;
        if y <= T::zero() {
            return T::neg_infinity();
        }
        let d = y - self.mu;
        half::<T>() * (self.lambda.ln() - T::TAU().ln() - T::lit(3.0) * y.ln())
            - self.lambda * d * d / (T::lit(2.0) * self.mu * self.mu * y)
    }

    fn pdf(&self, x: T) -> T {
        let y = x - self.gamma;
        if y <= T::zero() {
            return T::zero();
        }
        let d = y - self.mu;
        (self.lambda / (T::TAU() * y * y * y)).sqrt()
            * (-self.lambda * d * d / (T::lit(2.0) * self.mu * self.mu * y)).exp()
    }

    fn cdf(&self, x: T) -> T {
        let y = x - self.gamma;
        if y <= T::zero() {
            return T::zero();
        }
        let r = (self.lambda / y).sqrt();
        let first = norm_cdf(r * (y / self.mu - T::one()));
        let second = (T::lit(2.0) * self.lambda / self.mu
            + ln_norm_cdf(-r * (y / self.mu + T::one())))
        .exp();
        (first + second).min(T::one())
    }

    fn quantile(&self, q: T) -> T {
        if !(q > T::zero() && q < T::one()) {
            return T::nan();
        }
        // Work on the unshifted variable so the bracket is relative to mu.
        let shifted = InverseGaussian3 {
            lambda: self.lambda,
            mu: self.mu,
            gamma: T::zero(),
        };
        let sd = (self.mu * self.mu * self.mu / self.lambda).sqrt();
        let support = SupportInterval {
            lo: T::zero(),
            hi: T::infinity(),
            lo_closed: false,
            hi_closed: false,
        };
        let y = invert_cdf(
            |y| shifted.cdf(y),
            |y| shifted.pdf(y),
            support,
            self.mu,
            sd.min(self.mu),
            q,
        );
        self.gamma + y
    }

    fn support(&self) -> SupportInterval<T> {
        SupportInterval {
            lo: self.gamma,
            hi: T::infinity(),
            lo_closed: false,
            hi_closed: false,
        }
    }
}

family!(
    /// Generalized Pareto with shape `k`, scale `sigma`, location `mu`;
    /// bounded above by `mu - sigma / k` when `k < 0`.
    GeneralizedPareto, DistributionId::GeneralizedPareto, [k, sigma, mu]
);

impl<T: Real> Continuous<T> for GeneralizedPareto<T> {
    fn ln_pdf(&self, x: T) -> T {
        let z = (x - self.mu) / self.sigma;
        if z < T::zero() {
            return T::neg_infinity();
        }
        if self.k == T::zero() {
            return -self.sigma.ln() - z;
        }
        let kz = self.k * z;
        if kz < -T::one() || (kz == -T::one() && self.k != -T::one()) {
            return T::neg_infinity();
        }
        if kz == -T::one() {
            // k = -1 is uniform on [mu, mu + sigma]
            return -self.sigma.ln();
        }
        let l = kz.ln_1p();
        -self.sigma.ln() - l - l / self.k
    }

    fn cdf(&self, x: T) -> T {
        let z = (x - self.mu) / self.sigma;
        if z <= T::zero() {
            return T::zero();
        }
        if self.k == T::zero() {
            return -(-z).exp_m1();
        }
        let kz = self.k * z;
        if kz <= -T::one() {
            return T::one();
        }
        -(-kz.ln_1p() / self.k).exp_m1()
    }

    fn quantile(&self, q: T) -> T {
        if !(q > T::zero() && q < T::one()) {
            return T::nan();
        }
        let l = (-q).ln_1p();
        if self.k == T::zero() {
            self.mu - self.sigma * l
        } else {
            self.mu + self.sigma * (-self.k * l).exp_m1() / self.k
        }
    }

    fn support(&self) -> SupportInterval<T> {
        if self.k < T::zero() {
            SupportInterval {
                lo: self.mu,
                hi: self.mu - self.sigma / self.k,
                lo_closed: true,
                hi_closed: true,
            }
        } else {
            SupportInterval {
                lo: self.mu,
                hi: T::infinity(),
                lo_closed: true,
                hi_closed: false,
            }
        }
    }
}

family!(
    /// Three-parameter Weibull: shape `alpha`, scale `beta`, location `gamma`.
    Weibull3, DistributionId::Weibull3, [alpha, beta, gamma]
);

impl<T: Real> Continuous<T> for Weibull3<T> {
    fn ln_pdf(&self, x: T) -> T {
        let y = (x - self.gamma) / self.beta;
        if y < T::zero() || (y == T::zero() && self.alpha > T::one()) {
            return T::neg_infinity();
        }
        let ly = y.ln();
        let shape = if self.alpha == T::one() {
            T::zero()
        } else {
            (self.alpha - T::one()) * ly
        };
        (self.alpha / self.beta).ln() + shape - (self.alpha * ly).exp()
    }

    fn pdf(&self, x: T) -> T {
        let y = (x - self.gamma) / self.beta;
        if y < T::zero() {
            return T::zero();
        }
        self.alpha / self.beta * y.powf(self.alpha - T::one()) * (-y.powf(self.alpha)).exp()
    }

    fn cdf(&self, x: T) -> T {
        let y = (x - self.gamma) / self.beta;
        if y <= T::zero() {
            return T::zero();
        }
        -(-y.powf(self.alpha)).exp_m1()
    }

    fn quantile(&self, q: T) -> T {
        if !(q > T::zero() && q < T::one()) {
            return T::nan();
        }
        self.gamma + self.beta * (-(-q).ln_1p()).powf(T::one() / self.alpha)
    }

    fn support(&self) -> SupportInterval<T> {
        SupportInterval {
            lo: self.gamma,
            hi: T::infinity(),
            lo_closed: true,
            hi_closed: false,
        }
    }
}

family!(
    /// Hyperbolic secant with location `mu` and scale `sigma` (the standard
    /// deviation): f(x) = sech(pi z / 2) / (2 sigma).
    HyperbolicSecant, DistributionId::HyperbolicSecant, [mu, sigma]
);

impl<T: Real> Continuous<T> for HyperbolicSecant<T> {
    fn ln_pdf(&self, x: T) -> T {
        let w = (T::FRAC_PI_2() * (x - self.mu) / self.sigma).abs();
        // ln cosh w = w + ln(1 + e^{-2w}) - ln 2
        let ln_cosh = w + (-(w + w)).exp().ln_1p() - T::LN_2();
        -(self.sigma + self.sigma).ln() - ln_cosh
    }

    fn pdf(&self, x: T) -> T {
        let w = T::FRAC_PI_2() * (x - self.mu) / self.sigma;
        T::one() / ((self.sigma + self.sigma) * w.cosh())
    }

    fn cdf(&self, x: T) -> T {
        let w = T::FRAC_PI_2() * (x - self.mu) / self.sigma;
        T::FRAC_2_PI() * w.exp().atan()
    }

    fn quantile(&self, q: T) -> T {
        if !(q > T::zero() && q < T::one()) {
            return T::nan();
        }
        self.mu + T::FRAC_2_PI() * self.sigma * (T::FRAC_PI_2() * q).tan().ln()
    }

    fn support(&self) -> SupportInterval<T> {
        SupportInterval::real_line()
    }
}
