//! Sample descriptive statistics.

use serde::{Deserialize, Serialize};

use crate::scalar::{pairwise_sum, Real};

/// Summary of one sample.
///
/// `sd` uses the `n - 1` denominator. Skewness is the adjusted
/// Fisher-Pearson coefficient G1 and kurtosis is the bias-corrected sample
/// excess kurtosis G2; both are `None` when the sample is too small
/// (n < 3, n < 4) or has zero spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsRow<T> {
    pub mean: T,
    pub sd: T,
    pub median: T,
    pub min: T,
    pub max: T,
    pub skewness: Option<T>,
    pub excess_kurtosis: Option<T>,
    pub n: usize,
}

/// Describe a sample. Returns `None` for an empty sample or one containing
/// non-finite values.
pub fn describe<T: Real>(sample: &[T]) -> Option<StatsRow<T>> {
    let n = sample.len();
    if n == 0 || sample.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let min = sorted[0];
    let max = sorted[n - 1];
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) * T::lit(0.5)
    };

    if min == max {
        return Some(StatsRow {
            mean: min,
            sd: T::zero(),
            median,
            min,
            max,
            skewness: None,
            excess_kurtosis: None,
            n,
        });
    }

    // Sum in sorted order so the result does not depend on input order.
    let nf = T::from_usize_lossy(n);
    let mean = pairwise_sum(&sorted) / nf;
    let dev: Vec<T> = sorted.iter().map(|&x| x - mean).collect();
    let pow = |k: i32| pairwise_sum(&dev.iter().map(|d| d.powi(k)).collect::<Vec<_>>()) / nf;
    let m2 = pow(2);
    let m3 = pow(3);
    let m4 = pow(4);

    let sd = if n > 1 {
        (m2 * nf / (nf - T::one())).sqrt()
    } else {
        T::zero()
    };
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let skewness = (n >= 3 && m2 > T::zero()).then(|| {
        let g1 = m3 / m2.powf(T::lit(1.5));
        g1 * (nf * (nf - one)).sqrt() / (nf - two)
    });
    let excess_kurtosis = (n >= 4 && m2 > T::zero()).then(|| {
        let g2 = m4 / (m2 * m2) - three;
        (nf - one) / ((nf - two) * (nf - three)) * ((nf + one) * g2 + T::lit(6.0))
    });

    Some(StatsRow {
        mean,
        sd,
        median,
        min,
        max,
        skewness,
        excess_kurtosis,
        n,
    })
}
