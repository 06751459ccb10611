//! Nuisance models: propensity scores, conditional outcome survival,
//! conditional censoring survival, and the derived conditional restricted
//! means.
//!
//! Fitted models are logistic regression (IRLS) for the propensity and Cox
//! proportional hazards with Breslow ties/baseline for outcome and censoring.
//! Closed-form oracle nuisances for the built-in generators live in
//! [`oracle`]; they share the same handle traits so estimators cannot tell
//! fitted, oracle and deliberately misspecified nuisances apart.

mod cox;
mod logistic;
pub mod oracle;

pub use cox::{fit_cox, Baseline, CoxDiagnostics, CoxModel, CoxStratum, CoxTarget};
pub use logistic::{fit_logistic, LogisticDiagnostics, PropensityModel};

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::data::{Dataset, RestrictedDataset};
use crate::product_limit::CensoringSurvival;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("design matrix is rank deficient")]
    Singular,
    #[error("no target events in the stratum")]
    NoEvents,
    #[error("fit did not converge within {0} iterations")]
    NoConverge(usize),
    #[error("oracle nuisances unavailable: {0}")]
    UnsupportedDgp(String),
}

// ── Design expansion ────────────────────────────────────────────────────────

/// Covariate expansion applied in front of every fitted nuisance model.
///
/// `SquaresAndCross` appends all squares and pairwise products (the full
/// interaction set); `SquaresOnly` appends squares alone — the truncated
/// design used to misspecify a model on purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMap {
    Raw,
    SquaresOnly,
    SquaresAndCross,
}

impl FeatureMap {
    pub fn expanded_len(&self, p: usize) -> usize {
        match self {
            FeatureMap::Raw => p,
            FeatureMap::SquaresOnly => 2 * p,
            FeatureMap::SquaresAndCross => 2 * p + p * (p - 1) / 2,
        }
    }

    /// Appends the expanded covariates of `x` to `out`.
    pub fn expand(&self, x: &[f64], out: &mut Vec<f64>) {
        out.extend_from_slice(x);
        if matches!(self, FeatureMap::SquaresOnly | FeatureMap::SquaresAndCross) {
            out.extend(x.iter().map(|v| v * v));
        }
        if matches!(self, FeatureMap::SquaresAndCross) {
            for i in 0..x.len() {
                for j in i + 1..x.len() {
                    out.push(x[i] * x[j]);
                }
            }
        }
    }

    /// `β · expand(x)` without materializing the expansion.
    pub fn dot(&self, beta: &[f64], x: &[f64]) -> f64 {
        let p = x.len();
        let mut acc = 0.0;
        for j in 0..p {
            acc += beta[j] * x[j];
        }
        if matches!(self, FeatureMap::SquaresOnly | FeatureMap::SquaresAndCross) {
            for j in 0..p {
                acc += beta[p + j] * x[j] * x[j];
            }
        }
        if matches!(self, FeatureMap::SquaresAndCross) {
            let mut k = 2 * p;
            for i in 0..p {
                for j in i + 1..p {
                    acc += beta[k] * x[i] * x[j];
                    k += 1;
                }
            }
        }
        acc
    }
}

// ── Handle traits ───────────────────────────────────────────────────────────

/// Where a nuisance handle came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Fitted,
    Oracle,
    Constant,
}

/// Propensity score handle ê(x), clipped into the open unit interval.
pub trait PropensityScore: Send + Sync {
    fn propensity(&self, x: &[f64]) -> f64;
    fn clip_hits(&self) -> u64 {
        0
    }
}

/// Censoring survival handle: the left limit G(t|x,a) plus the correction
/// integral needed by the doubly robust transform,
/// `∫₀^upto m(t) / G(t|x,a)² dP_C(t|x,a)`.
///
/// For step-function (Breslow) censoring laws the integral is the exact sum
/// over the jump masses of `1 − Ĝ`; continuous oracle laws integrate the
/// density by quadrature, splitting at the kinks announced in `m_kinks`.
pub trait CensoringModel: CensoringSurvival {
    fn dr_correction(
        &self,
        upto: f64,
        x: &[f64],
        arm: u8,
        m: &mut dyn FnMut(f64) -> f64,
        m_kinks: &[f64],
    ) -> f64;

    fn clip_hits(&self) -> u64 {
        0
    }
}

/// Conditional outcome survival handle Ŝ(t|x,a).
pub trait OutcomeModel: Send + Sync {
    fn survival(&self, t: f64, x: &[f64], arm: u8) -> f64;
    /// Prepares the full survival curve of one subject for repeated
    /// evaluation (restricted mean, residual means, imputations).
    fn curve(&self, x: &[f64], arm: u8, tau: f64) -> OutcomeCurve;
}

/// Residual-mean value with a degeneracy flag: when Ŝ(t) has collapsed below
/// 1e-10 the value is carried over from the last time point where the
/// survival was still positive, and the flag is raised.
#[derive(Debug, Clone, Copy)]
pub struct QsValue {
    pub value: f64,
    pub degenerate: bool,
}

const QS_SURVIVAL_FLOOR: f64 = 1e-10;

/// One subject's prepared survival curve on `[0, τ]`.
#[derive(Debug, Clone)]
pub enum OutcomeCurve {
    /// Step curve on a shared jump grid; `tail[j] = ∫_{t_j}^τ S(u) du`.
    Step { times: Arc<[f64]>, surv: Vec<f64>, tail: Vec<f64>, tau: f64 },
    /// `S(t) = exp(−rate · (t − delay)⁺)` — the law of a delayed exponential.
    Exponential { rate: f64, delay: f64, tau: f64 },
}

impl OutcomeCurve {
    pub fn from_step(times: Arc<[f64]>, surv: Vec<f64>, tau: f64) -> Self {
        debug_assert_eq!(times.len(), surv.len());
        let k = times.len();
        let mut tail = vec![0.0; k];
        if k > 0 {
            tail[k - 1] = surv[k - 1] * (tau - times[k - 1]).max(0.0);
            for j in (0..k - 1).rev() {
                let upper = times[j + 1].min(tau);
                tail[j] = tail[j + 1] + surv[j] * (upper - times[j].min(tau)).max(0.0);
            }
        }
        OutcomeCurve::Step { times, surv, tail, tau }
    }

    pub fn tau(&self) -> f64 {
        match self {
            OutcomeCurve::Step { tau, .. } | OutcomeCurve::Exponential { tau, .. } => *tau,
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        match self {
            OutcomeCurve::Step { times, surv, .. } => {
                let k = times.partition_point(|&u| u <= t);
                if k == 0 {
                    1.0
                } else {
                    surv[k - 1]
                }
            }
            OutcomeCurve::Exponential { rate, delay, .. } => {
                if t <= *delay {
                    1.0
                } else {
                    (-rate * (t - delay)).exp()
                }
            }
        }
    }

    /// `∫_t^τ S(u) du`, exactly for step curves and in closed form for the
    /// exponential.
    pub fn integral_to_tau(&self, t: f64) -> f64 {
        match self {
            OutcomeCurve::Step { times, surv, tail, tau } => {
                if t >= *tau {
                    return 0.0;
                }
                let k = times.partition_point(|&u| u <= t);
                let s_t = if k == 0 { 1.0 } else { surv[k - 1] };
                if k == times.len() {
                    s_t * (tau - t)
                } else {
                    tail[k] + s_t * (times[k].min(*tau) - t)
                }
            }
            OutcomeCurve::Exponential { rate, delay, tau } => {
                if t >= *tau {
                    return 0.0;
                }
                // S ≡ 1 before the delay; a delayed exponential afterwards.
                let a = t.max(*delay);
                let head = (a - t).min(tau - t).max(0.0);
                let tail = if *tau > a {
                    (-rate * (a - delay)).exp() * (1.0 - (-rate * (tau - a)).exp()) / rate
                } else {
                    0.0
                };
                head + tail
            }
        }
    }

    /// μ̂ = ∫₀^τ S(u) du ∈ [0, τ].
    pub fn restricted_mean(&self) -> f64 {
        self.integral_to_tau(0.0)
    }

    /// Residual mean `Q_S(t) = S(t)⁻¹ ∫_t^τ S(u) du ∈ [0, τ − t]`.
    pub fn q_s(&self, t: f64) -> QsValue {
        let tau = self.tau();
        if t >= tau {
            return QsValue { value: 0.0, degenerate: false };
        }
        match self {
            OutcomeCurve::Exponential { .. } => {
                // Memoryless past the delay: no degeneracy possible.
                let s = self.survival(t);
                let value = (self.integral_to_tau(t) / s).clamp(0.0, tau - t);
                QsValue { value, degenerate: false }
            }
            OutcomeCurve::Step { times, surv, .. } => {
                let s = self.survival(t);
                if s >= QS_SURVIVAL_FLOOR {
                    let value = (self.integral_to_tau(t) / s).clamp(0.0, tau - t);
                    return QsValue { value, degenerate: false };
                }
                // Fall back to the last grid time with positive survival.
                let k = times.partition_point(|&u| u <= t);
                let mut j = k.min(times.len());
                while j > 0 && surv[j - 1] < QS_SURVIVAL_FLOOR {
                    j -= 1;
                }
                let t_ok = if j == 0 { 0.0 } else { times[j - 1] };
                let s_ok = if j == 0 { 1.0 } else { surv[j - 1] };
                let value = (self.integral_to_tau(t_ok) / s_ok).clamp(0.0, tau - t_ok);
                QsValue { value, degenerate: true }
            }
        }
    }

    /// Conditional mean of the restricted time given it exceeds `t`:
    /// `t + Q_S(t)`. This is the imputation used by the Buckley-James and
    /// doubly robust transforms.
    pub fn cond_mean(&self, t: f64) -> QsValue {
        let q = self.q_s(t);
        QsValue { value: (t + q.value).min(self.tau()), degenerate: q.degenerate }
    }

    /// Interior points where the curve (hence the residual mean) has kinks;
    /// quadrature over the curve splits at these.
    pub fn kinks(&self) -> Option<f64> {
        match self {
            OutcomeCurve::Exponential { delay, tau, .. } if *delay > 0.0 && delay < tau => {
                Some(*delay)
            }
            _ => None,
        }
    }
}

// ── Free operations over outcome handles ────────────────────────────────────

/// Conditional restricted mean μ̂(x,a) = ∫₀^τ Ŝ(t|x,a) dt.
pub fn conditional_rmst(model: &dyn OutcomeModel, x: &[f64], arm: u8, tau: f64) -> f64 {
    model.curve(x, arm, tau).restricted_mean()
}

/// Residual mean Q̂_S(t|x,a) = Ŝ(t|x,a)⁻¹ ∫_t^τ Ŝ(u|x,a) du.
pub fn q_s(model: &dyn OutcomeModel, t: f64, x: &[f64], arm: u8, tau: f64) -> QsValue {
    model.curve(x, arm, tau).q_s(t)
}

// ── Fitted handle wrappers ──────────────────────────────────────────────────

/// Censoring survival backed by one Cox model per arm.
pub struct CoxCensoring {
    models: [Arc<CoxModel>; 2],
    clip: f64,
    clip_hits: AtomicU64,
}

impl CoxCensoring {
    pub fn new(arm0: Arc<CoxModel>, arm1: Arc<CoxModel>, clip: f64) -> Self {
        CoxCensoring { models: [arm0, arm1], clip, clip_hits: AtomicU64::new(0) }
    }

    fn model(&self, arm: u8) -> &CoxModel {
        &self.models[arm as usize]
    }

    #[inline]
    fn clipped(&self, g: f64) -> f64 {
        if g < self.clip {
            self.clip_hits.fetch_add(1, Ordering::Relaxed);
            self.clip
        } else {
            g
        }
    }
}

impl CensoringSurvival for CoxCensoring {
    fn g_left(&self, t: f64, x: &[f64], arm: u8) -> f64 {
        let m = self.model(arm);
        self.clipped((-m.cumhaz_left(t) * m.risk_score(x, arm)).exp())
    }

    fn prepare<'m>(&'m self, x: &'m [f64], arm: u8) -> Box<dyn crate::product_limit::CensorEval + 'm> {
        let model = self.model(arm);
        Box::new(PreparedCoxCensor { parent: self, model, risk: model.risk_score(x, arm) })
    }
}

struct PreparedCoxCensor<'m> {
    parent: &'m CoxCensoring,
    model: &'m CoxModel,
    risk: f64,
}

impl crate::product_limit::CensorEval for PreparedCoxCensor<'_> {
    fn g_left(&self, t: f64) -> f64 {
        self.parent.clipped((-self.model.cumhaz_left(t) * self.risk).exp())
    }
}

impl CensoringModel for CoxCensoring {
    fn dr_correction(
        &self,
        upto: f64,
        x: &[f64],
        arm: u8,
        m: &mut dyn FnMut(f64) -> f64,
        _m_kinks: &[f64],
    ) -> f64 {
        let model = self.model(arm);
        let r = model.risk_score(x, arm);
        let base = model.baseline();
        let mut acc = 0.0;
        let mut prev_cum = 0.0;
        for (t_j, cum_j) in base.jumps() {
            if t_j > upto {
                break;
            }
            let g_left = (-prev_cum * r).exp();
            let mass = g_left - (-cum_j * r).exp();
            if mass > 0.0 {
                let g = self.clipped(g_left);
                acc += m(t_j) * mass / (g * g);
            }
            prev_cum = cum_j;
        }
        acc
    }

    fn clip_hits(&self) -> u64 {
        self.clip_hits.load(Ordering::Relaxed)
    }
}

/// Outcome survival from two per-arm Cox fits (the two-learner layout).
pub struct CoxOutcomeTwoLearner {
    models: [Arc<CoxModel>; 2],
}

impl CoxOutcomeTwoLearner {
    pub fn new(arm0: Arc<CoxModel>, arm1: Arc<CoxModel>) -> Self {
        CoxOutcomeTwoLearner { models: [arm0, arm1] }
    }
}

impl OutcomeModel for CoxOutcomeTwoLearner {
    fn survival(&self, t: f64, x: &[f64], arm: u8) -> f64 {
        self.models[arm as usize].predict_survival(x, arm, t)
    }

    fn curve(&self, x: &[f64], arm: u8, tau: f64) -> OutcomeCurve {
        self.models[arm as usize].survival_curve(x, arm, tau)
    }
}

/// Outcome survival from one pooled Cox fit with treatment as a covariate
/// (the single-learner layout).
pub struct CoxOutcomeSingleLearner {
    model: Arc<CoxModel>,
}

impl CoxOutcomeSingleLearner {
    pub fn new(model: Arc<CoxModel>) -> Self {
        CoxOutcomeSingleLearner { model }
    }
}

impl OutcomeModel for CoxOutcomeSingleLearner {
    fn survival(&self, t: f64, x: &[f64], arm: u8) -> f64 {
        self.model.predict_survival(x, arm, t)
    }

    fn curve(&self, x: &[f64], arm: u8, tau: f64) -> OutcomeCurve {
        self.model.survival_curve(x, arm, tau)
    }
}

impl PropensityScore for PropensityModel {
    fn propensity(&self, x: &[f64]) -> f64 {
        self.predict_clipped(x)
    }

    fn clip_hits(&self) -> u64 {
        self.clip_hit_count()
    }
}

// ── The nuisance bundle ─────────────────────────────────────────────────────

/// Which learner layout the outcome model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    /// Separate Cox fits per arm.
    TwoSeparate,
    /// One pooled Cox fit with treatment appended as a covariate.
    SinglePooled,
}

/// Model choices and numerical guards for fitted nuisances.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct NuisanceConfig {
    pub outcome_learner: Learner,
    /// Layout of the censoring model: per-arm fits or one pooled fit with
    /// treatment as a covariate.
    #[serde(default = "default_censoring_learner")]
    pub censoring_learner: Learner,
    pub outcome_features: FeatureMap,
    pub censoring_features: FeatureMap,
    pub propensity_features: FeatureMap,
    /// Propensity predictions are clipped to `[lo, 1 − lo]`.
    pub propensity_clip: f64,
    /// Censoring survival predictions are clipped below at this value.
    pub censoring_clip: f64,
}

fn default_censoring_learner() -> Learner {
    Learner::TwoSeparate
}

impl Default for NuisanceConfig {
    fn default() -> Self {
        NuisanceConfig {
            outcome_learner: Learner::TwoSeparate,
            censoring_learner: Learner::TwoSeparate,
            outcome_features: FeatureMap::Raw,
            censoring_features: FeatureMap::Raw,
            propensity_features: FeatureMap::Raw,
            propensity_clip: 0.01,
            censoring_clip: 0.01,
        }
    }
}

/// Which nuisance components a consumer requires.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NuisanceNeeds {
    pub propensity: bool,
    pub censoring: bool,
    pub outcome: bool,
}

impl NuisanceNeeds {
    pub fn all() -> Self {
        NuisanceNeeds { propensity: true, censoring: true, outcome: true }
    }

    pub fn union(self, other: Self) -> Self {
        NuisanceNeeds {
            propensity: self.propensity || other.propensity,
            censoring: self.censoring || other.censoring,
            outcome: self.outcome || other.outcome,
        }
    }
}

/// Provenance tags of the three component handles.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct NuisanceTags {
    pub propensity: Provenance,
    pub censoring: Provenance,
    pub outcome: Provenance,
}

/// The bundle of prediction handles consumed by the estimators. Missing
/// components are permitted; each estimator checks for what it needs.
///
/// The conditional restricted mean μ̂ and residual mean Q̂_S always derive
/// from the outcome handle, so `μ̂(x,a) = ∫₀^τ Ŝ(t|x,a) dt` holds by
/// construction.
#[derive(Clone)]
pub struct NuisanceSet {
    pub propensity: Option<Arc<dyn PropensityScore>>,
    pub censoring: Option<Arc<dyn CensoringModel>>,
    pub outcome: Option<Arc<dyn OutcomeModel>>,
    pub tags: NuisanceTags,
}

impl NuisanceSet {
    pub fn empty() -> Self {
        NuisanceSet {
            propensity: None,
            censoring: None,
            outcome: None,
            tags: NuisanceTags {
                propensity: Provenance::Constant,
                censoring: Provenance::Constant,
                outcome: Provenance::Constant,
            },
        }
    }
}

/// Trivial censoring model G ≡ 1: the maximum-likelihood censoring law when
/// no censoring events are observed below τ.
pub struct UnitCensoring;

impl CensoringSurvival for UnitCensoring {
    fn g_left(&self, _t: f64, _x: &[f64], _arm: u8) -> f64 {
        1.0
    }
}

impl CensoringModel for UnitCensoring {
    fn dr_correction(
        &self,
        _upto: f64,
        _x: &[f64],
        _arm: u8,
        _m: &mut dyn FnMut(f64) -> f64,
        _m_kinks: &[f64],
    ) -> f64 {
        0.0
    }
}

/// Fits the requested nuisance components on the restricted data.
///
/// The censoring model is a pair of per-arm Cox fits on the flipped status
/// `1 − δᵗ`; an arm with no censoring events below τ degenerates to the unit
/// censoring law. The outcome model follows the configured learner layout.
pub fn fit_nuisances(
    rd: &RestrictedDataset,
    cfg: &NuisanceConfig,
    need: NuisanceNeeds,
) -> Result<NuisanceSet, FitError> {
    let mut set = NuisanceSet::empty();

    if need.propensity {
        let m = fit_logistic(
            rd.base(),
            cfg.propensity_features,
            (cfg.propensity_clip, 1.0 - cfg.propensity_clip),
        )?;
        set.propensity = Some(Arc::new(m));
        set.tags.propensity = Provenance::Fitted;
    }

    if need.censoring {
        set.censoring = Some(fit_censoring_model(rd, cfg)?);
        set.tags.censoring = if (0..rd.n()).any(|i| rd.rstatus(i) == 0) {
            Provenance::Fitted
        } else {
            Provenance::Constant
        };
    }

    if need.outcome {
        match cfg.outcome_learner {
            Learner::TwoSeparate => {
                let m0 = fit_cox(rd, CoxTarget::Event, CoxStratum::Arm(0), cfg.outcome_features)?;
                let m1 = fit_cox(rd, CoxTarget::Event, CoxStratum::Arm(1), cfg.outcome_features)?;
                set.outcome =
                    Some(Arc::new(CoxOutcomeTwoLearner::new(Arc::new(m0), Arc::new(m1))));
            }
            Learner::SinglePooled => {
                let m = fit_cox(
                    rd,
                    CoxTarget::Event,
                    CoxStratum::PooledWithTreatment,
                    cfg.outcome_features,
                )?;
                set.outcome = Some(Arc::new(CoxOutcomeSingleLearner::new(Arc::new(m))));
            }
        }
        set.tags.outcome = Provenance::Fitted;
    }

    Ok(set)
}

/// Fits the censoring survival model in the configured layout. An arm (or a
/// whole dataset) with no censoring events below τ degenerates to the unit
/// censoring law, the maximum-likelihood answer in that case.
pub fn fit_censoring_model(
    rd: &RestrictedDataset,
    cfg: &NuisanceConfig,
) -> Result<Arc<dyn CensoringModel>, FitError> {
    if (0..rd.n()).all(|i| rd.rstatus(i) == 1) {
        return Ok(Arc::new(UnitCensoring));
    }
    match cfg.censoring_learner {
        Learner::TwoSeparate => {
            let fit_arm = |a: u8| -> Result<Arc<CoxModel>, FitError> {
                match fit_cox(rd, CoxTarget::Censoring, CoxStratum::Arm(a), cfg.censoring_features)
                {
                    Ok(m) => Ok(Arc::new(m)),
                    // An arm can be censoring-free even when the other is not.
                    Err(FitError::NoEvents) => Ok(Arc::new(CoxModel::null(
                        CoxTarget::Censoring,
                        CoxStratum::Arm(a),
                        cfg.censoring_features,
                        cfg.censoring_features.expanded_len(rd.covariate_dim()),
                    ))),
                    Err(e) => Err(e),
                }
            };
            Ok(Arc::new(CoxCensoring::new(fit_arm(0)?, fit_arm(1)?, cfg.censoring_clip)))
        }
        Learner::SinglePooled => {
            let m = Arc::new(fit_cox(
                rd,
                CoxTarget::Censoring,
                CoxStratum::PooledWithTreatment,
                cfg.censoring_features,
            )?);
            Ok(Arc::new(CoxCensoring::new(m.clone(), m, cfg.censoring_clip)))
        }
    }
}

/// Builds the oracle nuisance set implied by a built-in generator; see
/// [`oracle::make_oracle_nuisances`].
pub fn make_oracle_nuisances(
    dgp: &crate::sim::DgpConfig,
    tau: f64,
) -> Result<NuisanceSet, FitError> {
    oracle::make_oracle_nuisances(dgp, tau)
}

pub use fit_dataset_ext::*;

mod fit_dataset_ext {
    use super::*;

    /// Propensity fitting needs no survival information; accept a plain
    /// dataset as well.
    pub fn fit_propensity(
        d: &Dataset,
        features: FeatureMap,
        clip: f64,
    ) -> Result<PropensityModel, FitError> {
        fit_logistic(d, features, (clip, 1.0 - clip))
    }
}
