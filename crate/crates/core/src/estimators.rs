//! The RMST-difference estimators.
//!
//! Curve methods integrate both arm survival curves to τ and take the
//! difference; mean methods average pseudo-outcomes with the method's
//! weights. Every estimator declares which nuisance components it consumes:
//!
//! | method            | propensity | censoring | outcome |
//! |-------------------|-----------|-----------|---------|
//! | naive, km         |           |           |         |
//! | ipcw_km, ipcw_mean|           | ✓         |         |
//! | bj                |           |           | ✓       |
//! | gformula_t/s      |           |           | ✓       |
//! | iptw_km           | ✓         |           |         |
//! | iptw_ipcw_km/mean | ✓         | ✓         |         |
//! | iptw_bj           | ✓         |           | ✓       |
//! | aiptw_aipcw       | ✓         | ✓         | ✓       |
//!
//! Mean-type weighted methods optionally use a Hájek normalization, dividing
//! each arm's weighted sum by that arm's weight total instead of the sample
//! count.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::data::RestrictedDataset;
use crate::nuisance::{
    fit_cox, CoxOutcomeSingleLearner, CoxOutcomeTwoLearner, CoxStratum, CoxTarget, FeatureMap,
    FitError, Learner, NuisanceNeeds, NuisanceSet, OutcomeModel,
};
use crate::product_limit::{rmst_from_curve, weighted_product_limit, ProductLimitError, WeightPlan};
use crate::transforms::{self, TransformTag};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("method {method:?} requires the {component} nuisance model")]
    MissingNuisance { method: Method, component: &'static str },
    #[error("treatment arm {arm} has no usable subjects")]
    EmptyArm { arm: u8 },
    #[error("hajek normalization applies to weighted mean-type methods only")]
    InvalidNormalization,
    #[error("estimate is not finite")]
    NonFinite,
    #[error(transparent)]
    Fit(#[from] FitError),
}

impl From<ProductLimitError> for EstimatorError {
    fn from(e: ProductLimitError) -> Self {
        match e {
            ProductLimitError::EmptyArm { arm } => EstimatorError::EmptyArm { arm },
            ProductLimitError::UnsupportedWeightMode => EstimatorError::InvalidNormalization,
        }
    }
}

/// The estimator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Drop censored subjects, difference the arm means of t̃∧τ.
    Naive,
    Km,
    IpcwKm,
    IpcwMean,
    Bj,
    GformulaT,
    GformulaS,
    IptwKm,
    IptwIpcwKm,
    IptwIpcwMean,
    IptwBj,
    AiptwAipcw,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Km => "km",
            Method::IpcwKm => "ipcw_km",
            Method::IpcwMean => "ipcw_mean",
            Method::Bj => "bj",
            Method::GformulaT => "gformula_t",
            Method::GformulaS => "gformula_s",
            Method::IptwKm => "iptw_km",
            Method::IptwIpcwKm => "iptw_ipcw_km",
            Method::IptwIpcwMean => "iptw_ipcw_mean",
            Method::IptwBj => "iptw_bj",
            Method::AiptwAipcw => "aiptw_aipcw",
        }
    }

    pub fn all() -> [Method; 12] {
        [
            Method::Naive,
            Method::Km,
            Method::IpcwKm,
            Method::IpcwMean,
            Method::Bj,
            Method::GformulaT,
            Method::GformulaS,
            Method::IptwKm,
            Method::IptwIpcwKm,
            Method::IptwIpcwMean,
            Method::IptwBj,
            Method::AiptwAipcw,
        ]
    }

    /// Nuisance components the method consumes.
    pub fn needs(&self) -> NuisanceNeeds {
        let mut n = NuisanceNeeds::default();
        match self {
            Method::Naive | Method::Km => {}
            Method::IpcwKm | Method::IpcwMean => n.censoring = true,
            Method::Bj | Method::GformulaT | Method::GformulaS => n.outcome = true,
            Method::IptwKm => n.propensity = true,
            Method::IptwIpcwKm | Method::IptwIpcwMean => {
                n.propensity = true;
                n.censoring = true;
            }
            Method::IptwBj => {
                n.propensity = true;
                n.outcome = true;
            }
            Method::AiptwAipcw => n = NuisanceNeeds::all(),
        }
        n
    }

    /// Learner layout the method forces on the outcome model, if any.
    pub fn forced_learner(&self) -> Option<Learner> {
        match self {
            Method::GformulaS => Some(Learner::SinglePooled),
            Method::GformulaT => Some(Learner::TwoSeparate),
            _ => None,
        }
    }

    fn supports_hajek(&self) -> bool {
        matches!(self, Method::IpcwMean | Method::IptwIpcwMean | Method::IptwBj)
    }
}

/// Weight normalization of mean-type estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Standard,
    Hajek,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct EstimatorSpec {
    pub method: Method,
    #[serde(default)]
    pub normalization: Normalization,
}

impl EstimatorSpec {
    pub fn new(method: Method) -> Self {
        EstimatorSpec { method, normalization: Normalization::Standard }
    }

    pub fn hajek(method: Method) -> Self {
        EstimatorSpec { method, normalization: Normalization::Hajek }
    }
}

/// Fit diagnostics carried on every estimate.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct EstimateDiagnostics {
    pub weight_min: Option<f64>,
    pub weight_max: Option<f64>,
    /// Product-limit factors skipped on an empty weighted risk set.
    pub skipped_factors: usize,
    /// Subjects whose residual-mean evaluation hit a collapsed survival.
    pub degenerate_qs: usize,
    /// Largest fraction of [0, τ] covered by constant curve extension.
    pub extension_fraction: f64,
}

/// A point estimate of the RMST difference, with provenance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Estimate {
    pub method: Method,
    pub normalization: Normalization,
    pub tau: f64,
    pub theta: f64,
    pub diagnostics: EstimateDiagnostics,
}

/// Computes the estimator described by `spec` from the restricted data and
/// the supplied nuisance handles.
pub fn estimate(
    rd: &RestrictedDataset,
    spec: &EstimatorSpec,
    ns: &NuisanceSet,
) -> Result<Estimate, EstimatorError> {
    if spec.normalization == Normalization::Hajek && !spec.method.supports_hajek() {
        return Err(EstimatorError::InvalidNormalization);
    }
    check_needs(spec.method, ns)?;
    let tau = rd.tau();
    let mut diag = EstimateDiagnostics::default();
    let theta = match spec.method {
        Method::Naive => naive_theta(rd)?,
        Method::Km => curve_theta(rd, &WeightPlan::unit(), &mut diag)?,
        Method::IpcwKm => {
            let g = ns.censoring.as_deref().unwrap();
            curve_theta(rd, &WeightPlan::ipcw(g), &mut diag)?
        }
        Method::IptwKm => {
            let w = treatment_weights(rd, ns, &mut diag);
            curve_theta(rd, &WeightPlan::iptw(&w), &mut diag)?
        }
        Method::IptwIpcwKm => {
            let w = treatment_weights(rd, ns, &mut diag);
            let g = ns.censoring.as_deref().unwrap();
            curve_theta(rd, &WeightPlan::iptw_ipcw(&w, g), &mut diag)?
        }
        Method::IpcwMean => ipcw_mean_theta(rd, ns, spec.normalization, &mut diag)?,
        Method::Bj => bj_theta(rd, ns, &mut diag)?,
        Method::GformulaT | Method::GformulaS => {
            gformula_from_outcome(rd, ns.outcome.as_deref().unwrap())
        }
        Method::IptwIpcwMean => iptw_ipcw_mean_theta(rd, ns, spec.normalization, &mut diag)?,
        Method::IptwBj => iptw_bj_theta(rd, ns, spec.normalization, &mut diag)?,
        Method::AiptwAipcw => {
            let pos = transforms::batch(rd, ns, TransformTag::Qr).expect("components checked");
            diag.degenerate_qs = pos.iter().filter(|p| p.degenerate_qs).count();
            pos.iter().map(|p| p.value).sum::<f64>() / rd.n() as f64
        }
    };
    if !theta.is_finite() {
        return Err(EstimatorError::NonFinite);
    }
    Ok(Estimate { method: spec.method, normalization: spec.normalization, tau, theta, diagnostics: diag })
}

fn check_needs(method: Method, ns: &NuisanceSet) -> Result<(), EstimatorError> {
    let needs = method.needs();
    if needs.propensity && ns.propensity.is_none() {
        return Err(EstimatorError::MissingNuisance { method, component: "propensity" });
    }
    if needs.censoring && ns.censoring.is_none() {
        return Err(EstimatorError::MissingNuisance { method, component: "censoring" });
    }
    if needs.outcome && ns.outcome.is_none() {
        return Err(EstimatorError::MissingNuisance { method, component: "outcome" });
    }
    Ok(())
}

fn naive_theta(rd: &RestrictedDataset) -> Result<f64, EstimatorError> {
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for i in 0..rd.n() {
        if rd.rstatus(i) == 1 {
            sums[rd.arm(i) as usize] += rd.rtime(i);
            counts[rd.arm(i) as usize] += 1;
        }
    }
    for a in [0u8, 1u8] {
        if counts[a as usize] == 0 {
            return Err(EstimatorError::EmptyArm { arm: a });
        }
    }
    Ok(sums[1] / counts[1] as f64 - sums[0] / counts[0] as f64)
}

fn curve_theta(
    rd: &RestrictedDataset,
    plan: &WeightPlan,
    diag: &mut EstimateDiagnostics,
) -> Result<f64, EstimatorError> {
    let tau = rd.tau();
    let mut rmst = [0.0f64; 2];
    for a in [0u8, 1u8] {
        let fit = weighted_product_limit(rd, a, plan)?;
        diag.skipped_factors += fit.skipped_factors;
        let last = fit.curve.last_jump_time().unwrap_or(0.0);
        diag.extension_fraction = diag.extension_fraction.max((tau - last).max(0.0) / tau);
        rmst[a as usize] = rmst_from_curve(&fit.curve, tau);
    }
    Ok(rmst[1] - rmst[0])
}

/// Per-subject inverse-probability-of-treatment weights
/// `a/ê(x) + (1−a)/(1−ê(x))`.
fn treatment_weights(rd: &RestrictedDataset, ns: &NuisanceSet, diag: &mut EstimateDiagnostics) -> Vec<f64> {
    let e = ns.propensity.as_deref().unwrap();
    let w: Vec<f64> = (0..rd.n())
        .map(|i| {
            let p = e.propensity(rd.covariates(i));
            if rd.arm(i) == 1 {
                1.0 / p
            } else {
                1.0 / (1.0 - p)
            }
        })
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &w {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    diag.weight_min = Some(diag.weight_min.map_or(lo, |m| m.min(lo)));
    diag.weight_max = Some(diag.weight_max.map_or(hi, |m| m.max(hi)));
    w
}

fn ipcw_mean_theta(
    rd: &RestrictedDataset,
    ns: &NuisanceSet,
    norm: Normalization,
    diag: &mut EstimateDiagnostics,
) -> Result<f64, EstimatorError> {
    let g = ns.censoring.as_deref().unwrap();
    let pos = transforms::batch(rd, ns, TransformTag::Ipcw).expect("components checked");
    let mut value_sum = [0.0f64; 2];
    let mut denom = [0.0f64; 2];
    for (i, po) in pos.iter().enumerate() {
        let a = rd.arm(i) as usize;
        value_sum[a] += po.value;
        match norm {
            Normalization::Standard => denom[a] += 1.0,
            Normalization::Hajek => {
                if rd.rstatus(i) == 1 {
                    let w = 1.0 / g.g_left(rd.rtime(i), rd.covariates(i), rd.arm(i));
                    denom[a] += w;
                    diag.weight_min = Some(diag.weight_min.map_or(w, |m| m.min(w)));
                    diag.weight_max = Some(diag.weight_max.map_or(w, |m| m.max(w)));
                }
            }
        }
    }
    for a in [0usize, 1usize] {
        if denom[a] <= 0.0 {
            return Err(EstimatorError::EmptyArm { arm: a as u8 });
        }
    }
    Ok(value_sum[1] / denom[1] - value_sum[0] / denom[0])
}

fn bj_theta(
    rd: &RestrictedDataset,
    ns: &NuisanceSet,
    diag: &mut EstimateDiagnostics,
) -> Result<f64, EstimatorError> {
    let pos = transforms::batch(rd, ns, TransformTag::Bj).expect("components checked");
    diag.degenerate_qs = pos.iter().filter(|p| p.degenerate_qs).count();
    let mut sums = [0.0f64; 2];
    let mut counts = [0.0f64; 2];
    for (i, po) in pos.iter().enumerate() {
        sums[rd.arm(i) as usize] += po.value;
        counts[rd.arm(i) as usize] += 1.0;
    }
    Ok(sums[1] / counts[1] - sums[0] / counts[0])
}

fn gformula_from_outcome(rd: &RestrictedDataset, outcome: &dyn OutcomeModel) -> f64 {
    let tau = rd.tau();
    let total: f64 = (0..rd.n())
        .into_par_iter()
        .map(|i| {
            let x = rd.covariates(i);
            outcome.curve(x, 1, tau).restricted_mean() - outcome.curve(x, 0, tau).restricted_mean()
        })
        .sum();
    total / rd.n() as f64
}

fn iptw_ipcw_mean_theta(
    rd: &RestrictedDataset,
    ns: &NuisanceSet,
    norm: Normalization,
    diag: &mut EstimateDiagnostics,
) -> Result<f64, EstimatorError> {
    let e = ns.propensity.as_deref().unwrap();
    let g = ns.censoring.as_deref().unwrap();
    let pos = transforms::batch(rd, ns, TransformTag::Ipcw).expect("components checked");
    match norm {
        Normalization::Standard => {
            let mut acc = 0.0;
            for (i, po) in pos.iter().enumerate() {
                let p = e.propensity(rd.covariates(i));
                let sign = if rd.arm(i) == 1 { 1.0 / p } else { -1.0 / (1.0 - p) };
                track_weight(diag, sign.abs());
                acc += sign * po.value;
            }
            Ok(acc / rd.n() as f64)
        }
        Normalization::Hajek => {
            let mut value_sum = [0.0f64; 2];
            let mut weight_sum = [0.0f64; 2];
            for (i, po) in pos.iter().enumerate() {
                let a = rd.arm(i) as usize;
                let p = e.propensity(rd.covariates(i));
                let tw = if a == 1 { 1.0 / p } else { 1.0 / (1.0 - p) };
                value_sum[a] += tw * po.value;
                if rd.rstatus(i) == 1 {
                    let w = tw / g.g_left(rd.rtime(i), rd.covariates(i), rd.arm(i));
                    weight_sum[a] += w;
                    track_weight(diag, w);
                }
            }
            for a in [0usize, 1usize] {
                if weight_sum[a] <= 0.0 {
                    return Err(EstimatorError::EmptyArm { arm: a as u8 });
                }
            }
            Ok(value_sum[1] / weight_sum[1] - value_sum[0] / weight_sum[0])
        }
    }
}

fn iptw_bj_theta(
    rd: &RestrictedDataset,
    ns: &NuisanceSet,
    norm: Normalization,
    diag: &mut EstimateDiagnostics,
) -> Result<f64, EstimatorError> {
    let e = ns.propensity.as_deref().unwrap();
    let pos = transforms::batch(rd, ns, TransformTag::Bj).expect("components checked");
    diag.degenerate_qs = pos.iter().filter(|p| p.degenerate_qs).count();
    match norm {
        Normalization::Standard => {
            let mut acc = 0.0;
            for (i, po) in pos.iter().enumerate() {
                let p = e.propensity(rd.covariates(i));
                let sign = if rd.arm(i) == 1 { 1.0 / p } else { -1.0 / (1.0 - p) };
                track_weight(diag, sign.abs());
                acc += sign * po.value;
            }
            Ok(acc / rd.n() as f64)
        }
        Normalization::Hajek => {
            let mut value_sum = [0.0f64; 2];
            let mut weight_sum = [0.0f64; 2];
            for (i, po) in pos.iter().enumerate() {
                let a = rd.arm(i) as usize;
                let p = e.propensity(rd.covariates(i));
                let tw = if a == 1 { 1.0 / p } else { 1.0 / (1.0 - p) };
                value_sum[a] += tw * po.value;
                weight_sum[a] += tw;
                track_weight(diag, tw);
            }
            Ok(value_sum[1] / weight_sum[1] - value_sum[0] / weight_sum[0])
        }
    }
}

fn track_weight(diag: &mut EstimateDiagnostics, w: f64) {
    diag.weight_min = Some(diag.weight_min.map_or(w, |m| m.min(w)));
    diag.weight_max = Some(diag.weight_max.map_or(w, |m| m.max(w)));
}

/// The plug-in standardization estimator with a freshly fitted Cox outcome
/// model in the requested learner layout.
pub fn gformula_theta(
    rd: &RestrictedDataset,
    learner: Learner,
    features: FeatureMap,
) -> Result<Estimate, EstimatorError> {
    let outcome: Arc<dyn OutcomeModel> = match learner {
        Learner::TwoSeparate => {
            let m0 = fit_cox(rd, CoxTarget::Event, CoxStratum::Arm(0), features)?;
            let m1 = fit_cox(rd, CoxTarget::Event, CoxStratum::Arm(1), features)?;
            Arc::new(CoxOutcomeTwoLearner::new(Arc::new(m0), Arc::new(m1)))
        }
        Learner::SinglePooled => {
            let m = fit_cox(rd, CoxTarget::Event, CoxStratum::PooledWithTreatment, features)?;
            Arc::new(CoxOutcomeSingleLearner::new(Arc::new(m)))
        }
    };
    let theta = gformula_from_outcome(rd, outcome.as_ref());
    if !theta.is_finite() {
        return Err(EstimatorError::NonFinite);
    }
    Ok(Estimate {
        method: if learner == Learner::SinglePooled { Method::GformulaS } else { Method::GformulaT },
        normalization: Normalization::Standard,
        tau: rd.tau(),
        theta,
        diagnostics: EstimateDiagnostics::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, RawRecord};
    use crate::nuisance::{NuisanceConfig, NuisanceSet};
    use rand::Rng;

    fn uncensored_two_arm(times1: &[f64], times0: &[f64], tau: f64) -> RestrictedDataset {
        let mut rows = Vec::new();
        for &t in times1 {
            rows.push(RawRecord { covariates: vec![0.0], treatment: 1.0, time: t, status: 1.0 });
        }
        for &t in times0 {
            rows.push(RawRecord { covariates: vec![0.0], treatment: 0.0, time: t, status: 1.0 });
        }
        Dataset::validate(&rows, 1).unwrap().restrict(tau).unwrap()
    }

    #[test]
    fn km_without_censoring_equals_mean_difference() {
        let tau = 20.0;
        let rd = uncensored_two_arm(&[3.0, 9.0, 25.0, 14.0], &[2.0, 2.0, 7.0], tau);
        let est = estimate(&rd, &EstimatorSpec::new(Method::Km), &NuisanceSet::empty()).unwrap();
        let m1 = (3.0 + 9.0 + 20.0 + 14.0) / 4.0;
        let m0 = (2.0 + 2.0 + 7.0) / 3.0;
        assert!((est.theta - (m1 - m0)).abs() < 1e-12);
        // The naive estimator agrees here because nothing is censored.
        let nv = estimate(&rd, &EstimatorSpec::new(Method::Naive), &NuisanceSet::empty()).unwrap();
        assert!((nv.theta - est.theta).abs() < 1e-12);
    }

    #[test]
    fn missing_nuisances_are_reported_per_method() {
        let rd = uncensored_two_arm(&[1.0, 2.0], &[1.5], 10.0);
        let empty = NuisanceSet::empty();
        for m in [
            Method::IpcwKm,
            Method::IpcwMean,
            Method::Bj,
            Method::GformulaT,
            Method::IptwKm,
            Method::IptwIpcwKm,
            Method::IptwIpcwMean,
            Method::IptwBj,
            Method::AiptwAipcw,
        ] {
            assert!(matches!(
                estimate(&rd, &EstimatorSpec::new(m), &empty),
                Err(EstimatorError::MissingNuisance { .. })
            ));
        }
        // km and naive run with no nuisances at all.
        assert!(estimate(&rd, &EstimatorSpec::new(Method::Km), &empty).is_ok());
        assert!(estimate(&rd, &EstimatorSpec::new(Method::Naive), &empty).is_ok());
    }

    #[test]
    fn hajek_is_rejected_outside_mean_methods() {
        let rd = uncensored_two_arm(&[1.0, 2.0], &[1.5], 10.0);
        assert!(matches!(
            estimate(&rd, &EstimatorSpec::hajek(Method::Km), &NuisanceSet::empty()),
            Err(EstimatorError::InvalidNormalization)
        ));
    }

    #[test]
    fn equivariance_under_time_shift_without_censoring() {
        let mut rng = crate::rng::stream(12, "equivariance", &[]);
        let t1: Vec<f64> = (0..40).map(|_| rng.gen::<f64>() * 12.0).collect();
        let t0: Vec<f64> = (0..30).map(|_| rng.gen::<f64>() * 9.0).collect();
        let tau = 10.0;
        let base = estimate(
            &uncensored_two_arm(&t1, &t0, tau),
            &EstimatorSpec::new(Method::Km),
            &NuisanceSet::empty(),
        )
        .unwrap();
        let c = 4.5;
        let t1s: Vec<f64> = t1.iter().map(|v| v + c).collect();
        let t0s: Vec<f64> = t0.iter().map(|v| v + c).collect();
        let shifted = estimate(
            &uncensored_two_arm(&t1s, &t0s, tau + c),
            &EstimatorSpec::new(Method::Km),
            &NuisanceSet::empty(),
        )
        .unwrap();
        assert!((base.theta - shifted.theta).abs() < 1e-10);
    }

    #[test]
    fn determinism_bitwise() {
        let mut rng = crate::rng::stream(13, "determinism", &[]);
        let mut rows = Vec::new();
        for i in 0..120 {
            rows.push(RawRecord {
                covariates: vec![rng.gen::<f64>(), rng.gen::<f64>()],
                treatment: (i % 2) as f64,
                time: rng.gen::<f64>() * 10.0,
                status: (rng.gen::<f64>() < 0.7) as u8 as f64,
            });
        }
        let rd = Dataset::validate(&rows, 2).unwrap().restrict(6.0).unwrap();
        let cfg = NuisanceConfig::default();
        let ns = crate::nuisance::fit_nuisances(&rd, &cfg, NuisanceNeeds::all()).unwrap();
        for m in Method::all() {
            let a = estimate(&rd, &EstimatorSpec::new(m), &ns).unwrap().theta;
            let b = estimate(&rd, &EstimatorSpec::new(m), &ns).unwrap().theta;
            assert_eq!(a.to_bits(), b.to_bits(), "{m:?}");
        }
    }

    #[test]
    fn identical_baselines_give_zero_gformula() {
        // Same survival in both arms ⇒ μ̂(x,1) = μ̂(x,0) ⇒ θ = 0.
        struct Flat;
        impl OutcomeModel for Flat {
            fn survival(&self, t: f64, _x: &[f64], _a: u8) -> f64 {
                (-0.1 * t).exp()
            }
            fn curve(&self, _x: &[f64], _a: u8, tau: f64) -> crate::nuisance::OutcomeCurve {
                crate::nuisance::OutcomeCurve::Exponential { rate: 0.1, delay: 0.0, tau }
            }
        }
        let rd = uncensored_two_arm(&[1.0, 2.0], &[1.5], 10.0);
        assert_eq!(gformula_from_outcome(&rd, &Flat), 0.0);
    }

    #[test]
    fn hajek_weights_sum_to_one_within_arm() {
        // With Hájek normalization the implied normalized weights sum to 1
        // per arm by construction; verify through a constant pseudo-outcome:
        // a constant y must be returned exactly for each arm mean.
        let mut rng = crate::rng::stream(21, "hajek", &[]);
        let mut rows = Vec::new();
        for i in 0..60 {
            rows.push(RawRecord {
                covariates: vec![rng.gen::<f64>() - 0.5],
                treatment: (i % 2) as f64,
                time: 5.0,
                status: 1.0,
            });
        }
        let rd = Dataset::validate(&rows, 1).unwrap().restrict(5.0).unwrap();
        let ns =
            crate::nuisance::fit_nuisances(&rd, &NuisanceConfig::default(), NuisanceNeeds::all())
                .unwrap();
        // All restricted times equal 5 and uncensored: every BJ pseudo-outcome
        // is 5, so the Hájek IPTW-BJ difference is exactly 0.
        let est = estimate(&rd, &EstimatorSpec::hajek(Method::IptwBj), &ns).unwrap();
        assert!(est.theta.abs() < 1e-12);
    }
}
