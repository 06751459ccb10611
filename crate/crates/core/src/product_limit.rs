//! Weighted product-limit survival curves.
//!
//! One engine generates the four Kaplan-Meier variants used by the
//! estimators: unadjusted, IPCW (censoring-weighted), IPTW
//! (propensity-weighted) and IPTW-IPCW. The weighted numbers of deaths and
//! at-risk subjects at each grid time `t_k` are
//!
//! ```text
//! D_k(a) = Σ_i w_i / G(t_k|x_i,a) · 1{t̃_i = t_k, δᵗ_i = 1, a_i = a}
//! N_k(a) = Σ_i w_i / G(t_k|x_i,a) · 1{t̃_i ≥ t_k, a_i = a}
//! ```
//!
//! with `w_i` the treatment weight (1 outside IPTW modes) and `G` the
//! left-limit censoring survival (1 outside IPCW modes), and the curve is the
//! running product of `1 − D_k/N_k` over the arm's distinct observed times.
//! Greenwood's variance formula is provided for the unweighted curve only;
//! variance for weighted curves is a bootstrap concern.

use thiserror::Error;

use crate::data::RestrictedDataset;

#[derive(Debug, Error)]
pub enum ProductLimitError {
    #[error("treatment arm {arm} has no subjects")]
    EmptyArm { arm: u8 },
    #[error("Greenwood variance is defined for unit weights only")]
    UnsupportedWeightMode,
}

/// Left limit `G(t|x,a) = P(C ≥ t | x, a)` of a censoring survival model,
/// clipped away from zero by the implementation.
pub trait CensoringSurvival: Send + Sync {
    fn g_left(&self, t: f64, x: &[f64], arm: u8) -> f64;

    /// Prepared per-subject evaluator for repeated queries at one `(x, a)`;
    /// implementations hoist the covariate-dependent work out of the loop.
    fn prepare<'m>(&'m self, x: &'m [f64], arm: u8) -> Box<dyn CensorEval + 'm> {
        Box::new(DelegatingEval { model: self, x, arm })
    }
}

/// One subject's censoring survival as a function of time.
pub trait CensorEval {
    fn g_left(&self, t: f64) -> f64;
}

struct DelegatingEval<'m, T: CensoringSurvival + ?Sized> {
    model: &'m T,
    x: &'m [f64],
    arm: u8,
}

impl<T: CensoringSurvival + ?Sized> CensorEval for DelegatingEval<'_, T> {
    fn g_left(&self, t: f64) -> f64 {
        self.model.g_left(t, self.x, self.arm)
    }
}

/// A right-continuous, nonincreasing step function on `[0, ∞)` with value 1
/// at 0⁻, dropping at each stored jump time. Evaluation beyond the last jump
/// returns the last value.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSurvival {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl StepSurvival {
    /// Builds a curve from jump points `(t, value after t)`. Times must be
    /// strictly increasing and nonnegative, values nonincreasing in `[0, 1]`.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len());
        let mut prev_t = f64::NEG_INFINITY;
        let mut prev_v = 1.0;
        for (&t, &v) in times.iter().zip(&values) {
            assert!(t >= 0.0 && t > prev_t, "jump times must be increasing and nonnegative");
            assert!((0.0..=prev_v).contains(&v), "values must be nonincreasing in [0,1]");
            prev_t = t;
            prev_v = v;
        }
        StepSurvival { times, values }
    }

    /// The constant curve S ≡ 1.
    pub fn unit() -> Self {
        StepSurvival { times: Vec::new(), values: Vec::new() }
    }

    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn last_jump_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Right-continuous evaluation S(t).
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&u| u <= t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Left limit S(t⁻); equals 1 at t = 0.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&u| u < t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Exact rectangle integral ∫₀^b S(t) dt of the step function.
    pub fn integral(&self, b: f64) -> f64 {
        self.integral_from(0.0, b)
    }

    /// Exact rectangle integral ∫ₐᵇ S(t) dt. Returns 0 when b ≤ a.
    pub fn integral_from(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut t0 = a;
        let mut v = self.eval(a);
        let start = self.times.partition_point(|&u| u <= a);
        for k in start..self.times.len() {
            let t = self.times[k];
            if t >= b {
                break;
            }
            acc += v * (t - t0);
            t0 = t;
            v = self.values[k];
        }
        acc + v * (b - t0)
    }
}

/// Weighting scheme of a product-limit fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    Unit,
    Ipcw,
    Iptw,
    IptwIpcw,
}

/// Per-subject weights consumed by [`weighted_product_limit`]. Treatment
/// weights are indexed by dataset row; censoring weights are evaluated at
/// each grid time through the supplied model. All weights must be finite and
/// positive, which the nuisance clipping guarantees.
pub struct WeightPlan<'a> {
    mode: WeightMode,
    treat: Option<&'a [f64]>,
    censor: Option<&'a dyn CensoringSurvival>,
}

impl<'a> WeightPlan<'a> {
    pub fn unit() -> Self {
        WeightPlan { mode: WeightMode::Unit, treat: None, censor: None }
    }

    pub fn ipcw(censor: &'a dyn CensoringSurvival) -> Self {
        WeightPlan { mode: WeightMode::Ipcw, treat: None, censor: Some(censor) }
    }

    pub fn iptw(treat: &'a [f64]) -> Self {
        WeightPlan { mode: WeightMode::Iptw, treat: Some(treat), censor: None }
    }

    pub fn iptw_ipcw(treat: &'a [f64], censor: &'a dyn CensoringSurvival) -> Self {
        WeightPlan { mode: WeightMode::IptwIpcw, treat: Some(treat), censor: Some(censor) }
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }
}

/// A fitted curve plus fit diagnostics.
#[derive(Debug, Clone)]
pub struct ProductLimitFit {
    pub curve: StepSurvival,
    /// Grid factors skipped because the weighted risk set was empty.
    pub skipped_factors: usize,
}

/// Greenwood variance of the unweighted Kaplan-Meier curve at a time point.
#[derive(Debug, Clone, Copy)]
pub struct GreenwoodVariance {
    pub variance: f64,
    /// Terms skipped because every subject at risk died at that time.
    pub skipped_terms: usize,
}

/// Fits the weighted product-limit curve of one arm on the grid of the arm's
/// distinct observed (restricted) times. Factors with an empty weighted risk
/// set are skipped and counted.
pub fn weighted_product_limit(
    rd: &RestrictedDataset,
    arm: u8,
    plan: &WeightPlan,
) -> Result<ProductLimitFit, ProductLimitError> {
    let sorted = sorted_arm_indices(rd, arm);
    if sorted.is_empty() {
        return Err(ProductLimitError::EmptyArm { arm });
    }
    let m = sorted.len();
    let treat_w: Vec<f64> = match plan.treat {
        Some(w) => sorted.iter().map(|&i| w[i]).collect(),
        None => vec![1.0; m],
    };

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut skipped = 0usize;
    let mut surv = 1.0;

    match plan.censor {
        None => {
            // Suffix sums of integer-valued (or treatment) weights suffice.
            let mut nk = 0.0;
            let mut k_end = m;
            // Walk grid times in descending order accumulating the risk set,
            // recording (t, D, N) per distinct time.
            let mut per_time: Vec<(f64, f64, f64)> = Vec::new();
            while k_end > 0 {
                let t = rd.rtime(sorted[k_end - 1]);
                let mut k_start = k_end;
                let mut dk = 0.0;
                while k_start > 0 && rd.rtime(sorted[k_start - 1]) == t {
                    k_start -= 1;
                    nk += treat_w[k_start];
                    if rd.rstatus(sorted[k_start]) == 1 {
                        dk += treat_w[k_start];
                    }
                }
                per_time.push((t, dk, nk));
                k_end = k_start;
            }
            for &(t, dk, nk) in per_time.iter().rev() {
                push_factor(t, dk, nk, &mut surv, &mut times, &mut values, &mut skipped);
            }
        }
        Some(censor) => {
            // Censoring weights depend on the grid time, so each factor sums
            // over the full risk set; per-subject evaluators are prepared
            // once up front.
            let prepared: Vec<Box<dyn CensorEval>> =
                sorted.iter().map(|&i| censor.prepare(rd.covariates(i), arm)).collect();
            let grid = distinct_time_ranges(rd, &sorted);
            for &(t, lo, hi) in &grid {
                let mut dk = 0.0;
                let mut nk = 0.0;
                for pos in lo..m {
                    let w = treat_w[pos] / prepared[pos].g_left(t);
                    nk += w;
                    if pos < hi && rd.rstatus(sorted[pos]) == 1 {
                        dk += w;
                    }
                }
                push_factor(t, dk, nk, &mut surv, &mut times, &mut values, &mut skipped);
            }
        }
    }

    Ok(ProductLimitFit { curve: StepSurvival { times, values }, skipped_factors: skipped })
}

fn push_factor(
    t: f64,
    dk: f64,
    nk: f64,
    surv: &mut f64,
    times: &mut Vec<f64>,
    values: &mut Vec<f64>,
    skipped: &mut usize,
) {
    if nk <= 0.0 {
        *skipped += 1;
        return;
    }
    if dk > 0.0 {
        *surv *= 1.0 - dk / nk;
        times.push(t);
        values.push(*surv);
    }
}

/// RMST of a curve at horizon τ: the exact rectangle integral ∫₀^τ S(t) dt.
pub fn rmst_from_curve(s: &StepSurvival, tau: f64) -> f64 {
    s.integral(tau)
}

/// Greenwood's formula for the unweighted Kaplan-Meier at time `t`:
/// `Ŝ(t)² Σ_{t_k ≤ t} D_k / (N_k (N_k − D_k))`, skipping terms with
/// `N_k = D_k`.
pub fn greenwood_variance(
    rd: &RestrictedDataset,
    arm: u8,
    plan: &WeightPlan,
    t: f64,
) -> Result<GreenwoodVariance, ProductLimitError> {
    if plan.mode != WeightMode::Unit {
        return Err(ProductLimitError::UnsupportedWeightMode);
    }
    let sorted = sorted_arm_indices(rd, arm);
    if sorted.is_empty() {
        return Err(ProductLimitError::EmptyArm { arm });
    }
    let grid = distinct_time_ranges(rd, &sorted);
    let m = sorted.len();
    let mut surv = 1.0;
    let mut sum = 0.0;
    let mut skipped = 0usize;
    for &(tk, lo, hi) in &grid {
        if tk > t {
            break;
        }
        let nk = (m - lo) as f64;
        let dk = (lo..hi).filter(|&p| rd.rstatus(sorted[p]) == 1).count() as f64;
        if dk == 0.0 {
            continue;
        }
        surv *= 1.0 - dk / nk;
        if nk == dk {
            skipped += 1;
            continue;
        }
        sum += dk / (nk * (nk - dk));
    }
    Ok(GreenwoodVariance { variance: surv * surv * sum, skipped_terms: skipped })
}

fn sorted_arm_indices(rd: &RestrictedDataset, arm: u8) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rd.n()).filter(|&i| rd.arm(i) == arm).collect();
    idx.sort_by(|&a, &b| rd.rtime(a).partial_cmp(&rd.rtime(b)).unwrap());
    idx
}

/// Distinct times of the sorted arm as `(t, start, end)` position ranges.
fn distinct_time_ranges(rd: &RestrictedDataset, sorted: &[usize]) -> Vec<(f64, usize, usize)> {
    let mut grid = Vec::new();
    let mut lo = 0;
    while lo < sorted.len() {
        let t = rd.rtime(sorted[lo]);
        let mut hi = lo + 1;
        while hi < sorted.len() && rd.rtime(sorted[hi]) == t {
            hi += 1;
        }
        grid.push((t, lo, hi));
        lo = hi;
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, RawRecord};

    fn dataset(times: &[f64], status: &[u8], arms: &[u8]) -> RestrictedDataset {
        let rows: Vec<RawRecord> = times
            .iter()
            .zip(status)
            .zip(arms)
            .map(|((&t, &s), &a)| RawRecord {
                covariates: vec![0.0],
                treatment: a as f64,
                time: t,
                status: s as f64,
            })
            .collect();
        Dataset::validate(&rows, 1).unwrap().restrict(1e9).unwrap()
    }

    #[test]
    fn hand_computed_five_subject_curve() {
        // Times (1, 2+, 3, 4, 5+) with δ = (1,0,1,1,0):
        // S(3) = (1 - 1/5)(1 - 1/3) = 8/15.
        let rd = dataset(&[1.0, 2.0, 3.0, 4.0, 5.0, 1.0], &[1, 0, 1, 1, 0, 1], &[1, 1, 1, 1, 1, 0]);
        let fit = weighted_product_limit(&rd, 1, &WeightPlan::unit()).unwrap();
        assert!((fit.curve.eval(3.0) - 8.0 / 15.0).abs() < 1e-15);
        assert_eq!(fit.skipped_factors, 0);
        // S(4) = 8/15 * (1 - 1/2) = 4/15, S(5) unchanged by the censoring.
        assert!((fit.curve.eval(10.0) - 4.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn no_censoring_matches_empirical_survival() {
        let times = [3.0, 1.0, 4.0, 1.0, 5.0];
        let rd = dataset(
            &[3.0, 1.0, 4.0, 1.0, 5.0, 9.0],
            &[1, 1, 1, 1, 1, 1],
            &[1, 1, 1, 1, 1, 0],
        );
        let fit = weighted_product_limit(&rd, 1, &WeightPlan::unit()).unwrap();
        for t in [0.0, 0.5, 1.0, 2.0, 3.5, 4.0, 7.0] {
            let ecdf_surv = times.iter().filter(|&&u| u > t).count() as f64 / 5.0;
            assert_eq!(fit.curve.eval(t), ecdf_surv, "t = {t}");
        }
    }

    #[test]
    fn unit_censoring_weights_reduce_to_unit_mode() {
        struct UnitG;
        impl CensoringSurvival for UnitG {
            fn g_left(&self, _: f64, _: &[f64], _: u8) -> f64 {
                1.0
            }
        }
        let rd = dataset(
            &[1.0, 2.0, 2.0, 3.0, 4.5, 1.0],
            &[1, 0, 1, 1, 0, 1],
            &[1, 1, 1, 1, 1, 0],
        );
        let unit = weighted_product_limit(&rd, 1, &WeightPlan::unit()).unwrap();
        let ipcw = weighted_product_limit(&rd, 1, &WeightPlan::ipcw(&UnitG)).unwrap();
        assert_eq!(unit.curve, ipcw.curve);
    }

    #[test]
    fn treatment_weight_scale_invariance() {
        let rd = dataset(
            &[1.0, 2.0, 2.0, 3.0, 4.5, 0.5, 1.5],
            &[1, 0, 1, 1, 0, 1, 1],
            &[1, 1, 1, 1, 1, 0, 0],
        );
        let w: Vec<f64> = (0..rd.n()).map(|i| 0.3 + 0.1 * i as f64).collect();
        let w_scaled: Vec<f64> = w.iter().map(|v| v * 17.0).collect();
        let a = weighted_product_limit(&rd, 1, &WeightPlan::iptw(&w)).unwrap();
        let b = weighted_product_limit(&rd, 1, &WeightPlan::iptw(&w_scaled)).unwrap();
        for ((ta, va), (tb, vb)) in a.curve.jumps().zip(b.curve.jumps()) {
            assert_eq!(ta, tb);
            assert!((va - vb).abs() < 1e-12);
        }
    }

    #[test]
    fn rmst_of_unit_curve_is_tau() {
        assert_eq!(rmst_from_curve(&StepSurvival::unit(), 25.0), 25.0);
    }

    #[test]
    fn rmst_of_single_jump_curve() {
        // S = 1 on [0, τ/2), 0.5 after: RMST = 0.75 τ.
        let tau = 8.0;
        let s = StepSurvival::new(vec![tau / 2.0], vec![0.5]);
        assert!((rmst_from_curve(&s, tau) - 0.75 * tau).abs() < 1e-15);
        // A jump exactly at τ contributes nothing.
        let s2 = StepSurvival::new(vec![tau], vec![0.0]);
        assert_eq!(rmst_from_curve(&s2, tau), tau);
    }

    #[test]
    fn greenwood_hand_example() {
        let rd = dataset(&[1.0, 2.0, 3.0, 4.0, 5.0, 1.0], &[1, 0, 1, 1, 0, 1], &[1, 1, 1, 1, 1, 0]);
        let g = greenwood_variance(&rd, 1, &WeightPlan::unit(), 3.0).unwrap();
        let expected = (8.0f64 / 15.0).powi(2) * (1.0 / 20.0 + 1.0 / 6.0);
        assert!((g.variance - expected).abs() < 1e-15);
        assert_eq!(g.skipped_terms, 0);
        // No deaths before t = 0.5 → zero variance.
        let g0 = greenwood_variance(&rd, 1, &WeightPlan::unit(), 0.5).unwrap();
        assert_eq!(g0.variance, 0.0);
    }

    #[test]
    fn greenwood_rejects_weighted_plans() {
        let rd = dataset(&[1.0, 2.0], &[1, 1], &[1, 0]);
        let w = vec![1.0, 1.0];
        assert!(matches!(
            greenwood_variance(&rd, 1, &WeightPlan::iptw(&w), 1.0),
            Err(ProductLimitError::UnsupportedWeightMode)
        ));
    }

    #[test]
    fn greenwood_sum_is_nondecreasing_in_t() {
        let rd = dataset(
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 1.0],
            &[1, 1, 0, 1, 1, 0, 1],
            &[1, 1, 1, 1, 1, 1, 0],
        );
        let mut prev = 0.0;
        for t in [1.0, 2.0, 3.0, 4.0, 5.0, 6.0] {
            let g = greenwood_variance(&rd, 1, &WeightPlan::unit(), t).unwrap();
            let s = weighted_product_limit(&rd, 1, &WeightPlan::unit()).unwrap().curve.eval(t);
            let sum = if s > 0.0 { g.variance / (s * s) } else { 0.0 };
            assert!(sum >= prev - 1e-15);
            prev = sum;
        }
    }

    #[test]
    fn step_survival_integral_from_matches_manual() {
        let s = StepSurvival::new(vec![1.0, 2.0, 4.0], vec![0.8, 0.5, 0.1]);
        // ∫_0.5^3 = 1*0.5 + 0.8*1 + 0.5*1 = 1.8
        assert!((s.integral_from(0.5, 3.0) - 1.8).abs() < 1e-15);
        assert_eq!(s.integral_from(3.0, 3.0), 0.0);
        assert_eq!(s.eval_left(1.0), 1.0);
        assert_eq!(s.eval(1.0), 0.8);
    }
}
