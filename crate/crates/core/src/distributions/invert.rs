use crate::scalar::Real;

use super::SupportInterval;

const MAX_EXPAND: usize = 400;
const MAX_ITER: usize = 400;

/// Solve `cdf(x) = q` by bracketed bisection with safeguarded Newton steps.
///
/// Infinite support ends are bracketed by geometric expansion from `guess`
/// in steps of `scale`. Iterates until the bracket collapses to a few ulps,
/// which puts `cdf(x)` within about 1e-12 of `q` for smooth CDFs.
pub fn invert_cdf<T, F, D>(
    cdf: F,
    pdf: D,
    support: SupportInterval<T>,
    guess: T,
    scale: T,
    q: T,
) -> T
where
    T: Real,
    F: Fn(T) -> T,
    D: Fn(T) -> T,
{
    let two = T::lit(2.0);
    let mut lo = support.lo;
    let mut hi = support.hi;
    let mut step = if scale > T::zero() && scale.is_finite() {
        scale
    } else {
        T::one()
    };

    if !lo.is_finite() {
        let mut probe = guess.min(hi) - step;
        for _ in 0..MAX_EXPAND {
            if cdf(probe) < q {
                break;
            }
            step = step * two;
            probe = probe - step;
        }
        lo = probe;
    }
    step = if scale > T::zero() && scale.is_finite() {
        scale
    } else {
        T::one()
    };
    if !hi.is_finite() {
        let mut probe = guess.max(lo) + step;
        for _ in 0..MAX_EXPAND {
            if cdf(probe) > q {
                break;
            }
            step = step * two;
            probe = probe + step;
        }
        hi = probe;
    }

    let mut x = if guess > lo && guess < hi {
        guess
    } else {
        (lo + hi) / two
    };
    let tiny = T::epsilon() * T::lit(4.0);
    for _ in 0..MAX_ITER {
        let f = cdf(x) - q;
        if f == T::zero() {
            return x;
        }
        if f < T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let d = pdf(x);
        let newton = x - f / d;
        let next = if d > T::zero() && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            lo + (hi - lo) / two
        };
        let width_tol = tiny * lo.abs().max(hi.abs()).max(T::min_positive_value());
        if (next - x).abs() <= tiny * x.abs().max(T::min_positive_value()) || hi - lo <= width_tol {
            return next;
        }
        x = next;
    }
    x
}
