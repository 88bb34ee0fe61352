use crate::distributions::{Continuous, Model, ParamVector};
use crate::scalar::Real;

use super::FitError;

/// Kolmogorov-Smirnov distance between the sample's empirical CDF and the
/// model CDF.
pub fn ks_statistic<T: Real>(p: &ParamVector<T>, data: &[T]) -> Result<T, FitError> {
    if data.is_empty() {
        return Err(FitError::TooFewObservations {
            family: p.id(),
            need: 1,
            got: 0,
        });
    }
    if data.iter().any(|x| x.is_nan()) {
        return Err(FitError::NonFiniteData);
    }
    let model = Model::new(p).map_err(|e| FitError::Distribution(e.to_string()))?;
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("not NaN"));
    Ok(ks_sorted(&model, &sorted))
}

pub(crate) fn ks_sorted<T: Real, D: Continuous<T>>(law: &D, sorted: &[T]) -> T {
    let n = T::from_usize_lossy(sorted.len());
    let mut d = T::zero();
    for (i, &x) in sorted.iter().enumerate() {
        let f = law.cdf(x);
        let above = T::from_usize_lossy(i + 1) / n - f;
        let below = f - T::from_usize_lossy(i) / n;
        d = d.max(above).max(below);
    }
    d.max(T::zero()).min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionId;

    #[test]
    fn hand_cases() {
        let p = ParamVector::new(DistributionId::Normal, vec![0.0f64, 1.0]).unwrap();
        assert_eq!(ks_statistic(&p, &[0.0]).unwrap(), 0.5);
        let q1 = crate::distributions::quantile(&p, 0.25).unwrap();
        let q3 = crate::distributions::quantile(&p, 0.75).unwrap();
        assert!((ks_statistic(&p, &[q3, q1]).unwrap() - 0.25).abs() < 1e-15);
        assert!(ks_statistic(&p, &[]).is_err());
    }
}
