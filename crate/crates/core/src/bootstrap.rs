//! Nonparametric bootstrap inference.
//!
//! Subjects are resampled with replacement, all nuisance models are refit
//! inside each resample, and the estimator is recomputed. Replicate `b`
//! draws from a stream keyed by `(seed, b)`, so results do not depend on
//! execution order or thread count, and the same seed reproduces the result
//! bit for bit. The standard error is the sample standard deviation over
//! replicates and the confidence interval is the empirical percentile
//! interval with type-7 interpolation.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::data::RestrictedDataset;
use crate::estimators::{estimate, EstimatorSpec};
use crate::nuisance::{fit_nuisances, NuisanceConfig};
use crate::rng::stream;

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("need at least 2 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("level must lie in (0,1), got {0}")]
    BadLevel(f64),
    #[error("{failed} of {total} bootstrap replicates failed")]
    TooManyFailures { failed: usize, total: usize },
    #[error("point estimate failed: {0}")]
    PointEstimate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BootstrapResult {
    pub point: f64,
    pub se: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// Requested number of replicates B.
    pub replicates: usize,
    pub level: f64,
    /// Replicates dropped because resampling or refitting failed.
    pub n_failed: usize,
}

/// Bootstraps an arbitrary statistic of the restricted dataset. The closure
/// returns `None` for replicates on which the statistic cannot be computed;
/// those are dropped and counted.
pub fn bootstrap_statistic<F>(
    rd: &RestrictedDataset,
    b: usize,
    level: f64,
    seed: u64,
    stat: F,
) -> Result<BootstrapResult, BootstrapError>
where
    F: Fn(&RestrictedDataset) -> Option<f64> + Sync,
{
    if b < 2 {
        return Err(BootstrapError::TooFewReplicates(b));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(BootstrapError::BadLevel(level));
    }
    let point = stat(rd)
        .ok_or_else(|| BootstrapError::PointEstimate("statistic undefined on the data".into()))?;
    let n = rd.n();
    let tau = rd.tau();
    let replicates: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, "bootstrap", &[rep as u64]);
            let indices: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let resampled = rd.base().resample(&indices);
            let restricted = resampled.restrict(tau).ok()?;
            stat(&restricted).filter(|v| v.is_finite())
        })
        .collect();
    let thetas: Vec<f64> = replicates.iter().filter_map(|v| *v).collect();
    let n_failed = b - thetas.len();
    if n_failed * 2 > b {
        return Err(BootstrapError::TooManyFailures { failed: n_failed, total: b });
    }
    let m = thetas.len();
    let mean = thetas.iter().sum::<f64>() / m as f64;
    let se = if m > 1 {
        (thetas.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (m - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = thetas;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha = 1.0 - level;
    Ok(BootstrapResult {
        point,
        se,
        ci_lower: percentile_type7(&sorted, alpha / 2.0),
        ci_upper: percentile_type7(&sorted, 1.0 - alpha / 2.0),
        replicates: b,
        level,
        n_failed,
    })
}

/// Percentile bootstrap for an estimator spec, refitting the configured
/// nuisances inside every resample.
pub fn bootstrap_ci(
    rd: &RestrictedDataset,
    spec: &EstimatorSpec,
    nuisance: &NuisanceConfig,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult, BootstrapError> {
    let mut cfg = nuisance.clone();
    if let Some(l) = spec.method.forced_learner() {
        cfg.outcome_learner = l;
    }
    let needs = spec.method.needs();
    bootstrap_statistic(rd, b, level, seed, |data| {
        let ns = fit_nuisances(data, &cfg, needs).ok()?;
        estimate(data, spec, &ns).ok().map(|e| e.theta)
    })
}

/// Empirical quantile with linear interpolation between order statistics.
fn percentile_type7(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, RawRecord};
    use crate::estimators::Method;

    fn constant_dataset() -> RestrictedDataset {
        let mut rows = Vec::new();
        for i in 0..40 {
            rows.push(RawRecord {
                covariates: vec![0.0],
                treatment: (i % 2) as f64,
                time: 3.0,
                status: 1.0,
            });
        }
        Dataset::validate(&rows, 1).unwrap().restrict(5.0).unwrap()
    }

    #[test]
    fn constant_statistic_has_zero_se_and_degenerate_ci() {
        let rd = constant_dataset();
        let r = bootstrap_ci(
            &rd,
            &EstimatorSpec::new(Method::Km),
            &NuisanceConfig::default(),
            200,
            0.95,
            11,
        )
        .unwrap();
        assert_eq!(r.se, 0.0);
        assert_eq!(r.ci_lower, r.point);
        assert_eq!(r.ci_upper, r.point);
        assert_eq!(r.n_failed, 0);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let rd = constant_dataset();
        let spec = EstimatorSpec::new(Method::Naive);
        let cfg = NuisanceConfig::default();
        let a = bootstrap_ci(&rd, &spec, &cfg, 50, 0.9, 123).unwrap();
        let b = bootstrap_ci(&rd, &spec, &cfg, 50, 0.9, 123).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_ci(&rd, &spec, &cfg, 50, 0.9, 124).unwrap();
        assert_eq!(c.point, a.point);
    }

    #[test]
    fn argument_validation() {
        let rd = constant_dataset();
        let spec = EstimatorSpec::new(Method::Km);
        let cfg = NuisanceConfig::default();
        assert!(matches!(
            bootstrap_ci(&rd, &spec, &cfg, 1, 0.95, 0),
            Err(BootstrapError::TooFewReplicates(1))
        ));
        assert!(matches!(
            bootstrap_ci(&rd, &spec, &cfg, 10, 1.0, 0),
            Err(BootstrapError::BadLevel(_))
        ));
    }

    #[test]
    fn failures_are_counted_and_bounded() {
        let rd = constant_dataset();
        // A statistic that fails on most replicates trips the failure bound.
        let r = bootstrap_statistic(&rd, 40, 0.95, 5, |d| {
            // Fail whenever the resample is arm-imbalanced by more than 4.
            let n1 = (0..d.n()).filter(|&i| d.arm(i) == 1).count();
            ((n1 as i64 - 20).abs() <= 1).then(|| 1.0)
        });
        match r {
            Err(BootstrapError::TooManyFailures { .. }) => {}
            Ok(res) => assert!(res.n_failed * 2 <= 40),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn percentile_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile_type7(&v, 0.0), 1.0);
        assert_eq!(percentile_type7(&v, 1.0), 4.0);
        assert_eq!(percentile_type7(&v, 0.5), 2.5);
        assert!((percentile_type7(&v, 0.25) - 1.75).abs() < 1e-15);
    }
}
