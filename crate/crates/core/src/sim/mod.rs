//! Synthetic data generation and Monte Carlo ground truth.
//!
//! Five built-in generators cover randomized and observational designs with
//! independent or covariate-dependent censoring, plus an interaction-driven
//! design used for misspecification studies. Event and censoring times follow
//! constant-baseline proportional-hazards laws, so sampling is the exact
//! inverse transform `T = −log(1−U) / rate(x)`, and the treated potential
//! time is the control time plus a constant shift. The shift construction
//! deliberately breaks proportional hazards in `(X, A)` jointly — a pooled
//! Cox model with a treatment covariate is therefore misspecified by design,
//! while each arm on its own stays a Cox model.

mod benchmark;

pub use benchmark::{
    run_benchmark, scenario_default_nuisance, BenchmarkConfig, BenchmarkError, EstimatorConfig,
    RepRow, ReplicationResults, ScenarioConfig, SummaryRow, BENCH_PROPENSITY_CLIP,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::data::Dataset;
use crate::nuisance::{FeatureMap, NuisanceConfig};
use crate::rng::stream;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad generator config: {0}")]
    BadConfig(String),
}

/// The built-in generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgpKind {
    /// Randomized treatment, constant-hazard censoring.
    RctIndep,
    /// Randomized treatment, covariate-dependent censoring.
    RctCond,
    /// Logistic treatment on X, constant-hazard censoring.
    ObsIndep,
    /// Logistic treatment on X, covariate-dependent censoring.
    ObsCond,
    /// Observational with all laws driven by squares and pairwise products
    /// of X; the design for misspecification experiments.
    Misspec,
}

impl DgpKind {
    pub fn name(&self) -> &'static str {
        match self {
            DgpKind::RctIndep => "rct_indep",
            DgpKind::RctCond => "rct_cond",
            DgpKind::ObsIndep => "obs_indep",
            DgpKind::ObsCond => "obs_cond",
            DgpKind::Misspec => "misspec",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "rct_indep" => DgpKind::RctIndep,
            "rct_cond" => DgpKind::RctCond,
            "obs_indep" => DgpKind::ObsIndep,
            "obs_cond" => DgpKind::ObsCond,
            "misspec" => DgpKind::Misspec,
            _ => return None,
        })
    }
}

/// Coefficients of one generator. Covariates are `X ~ N(mean, I)`. For the
/// `Misspec` kind every linear index acts on the interaction vector
/// `Z(X) = (X₁²,…,Xp², X₁X₂, X₁X₃, …)` instead of X itself.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DgpConfig {
    pub kind: DgpKind,
    pub mean: Vec<f64>,
    /// Baseline event rate λ₀ of the control arm.
    pub baseline_rate: f64,
    pub outcome_coef: Vec<f64>,
    /// Baseline censoring rate.
    pub censor_rate: f64,
    /// Censoring covariate effect; `None` means independent censoring.
    pub censor_coef: Option<Vec<f64>>,
    /// Propensity coefficients; `None` means randomized assignment at 1/2.
    pub treat_coef: Option<Vec<f64>>,
    /// Constant additive effect: T⁽¹⁾ = T⁽⁰⁾ + shift.
    pub shift: f64,
    /// Default restriction horizon for this generator.
    pub tau: f64,
}

/// Number of interaction terms (squares plus pairwise products) for p raw
/// covariates.
pub fn interaction_dim(p: usize) -> usize {
    p + p * (p - 1) / 2
}

/// `β · Z(x)` with Z the squares followed by lexicographic pairwise products.
fn interaction_dot(beta: &[f64], x: &[f64]) -> f64 {
    let p = x.len();
    let mut acc = 0.0;
    for j in 0..p {
        acc += beta[j] * x[j] * x[j];
    }
    let mut k = p;
    for i in 0..p {
        for j in i + 1..p {
            acc += beta[k] * x[i] * x[j];
            k += 1;
        }
    }
    acc
}

impl DgpConfig {
    pub fn preset(kind: DgpKind) -> DgpConfig {
        match kind {
            DgpKind::RctIndep | DgpKind::RctCond | DgpKind::ObsIndep | DgpKind::ObsCond => {
                DgpConfig {
                    kind,
                    mean: vec![1.0, 1.0, -1.0, 1.0],
                    baseline_rate: 0.01,
                    outcome_coef: vec![0.5, 0.5, -0.5, 0.5],
                    censor_rate: 0.03,
                    censor_coef: matches!(kind, DgpKind::RctCond | DgpKind::ObsCond)
                        .then(|| vec![0.7, 0.3, -0.25, -0.1]),
                    treat_coef: matches!(kind, DgpKind::ObsIndep | DgpKind::ObsCond)
                        .then(|| vec![-1.0, -1.0, -2.5, -1.0]),
                    shift: 10.0,
                    tau: 25.0,
                }
            }
            DgpKind::Misspec => DgpConfig {
                kind,
                mean: vec![0.1, 0.5, 0.7, 0.4],
                baseline_rate: 1.0,
                outcome_coef: vec![0.2, 0.3, 0.1, 0.1, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0],
                censor_rate: 1.0,
                censor_coef: Some(vec![0.05, -0.01, 0.05, -0.01, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0]),
                treat_coef: Some(vec![0.05, -0.1, 0.5, -0.1, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0]),
                shift: 0.3,
                tau: 1.0,
            },
        }
    }

    pub fn preset_by_name(name: &str) -> Option<DgpConfig> {
        DgpKind::from_name(name).map(DgpConfig::preset)
    }

    pub fn covariate_dim(&self) -> usize {
        self.mean.len()
    }

    /// Dimension every coefficient vector must have.
    fn coef_dim(&self) -> usize {
        match self.kind {
            DgpKind::Misspec => interaction_dim(self.covariate_dim()),
            _ => self.covariate_dim(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let d = self.coef_dim();
        if self.mean.is_empty() {
            return Err(SimError::BadConfig("empty covariate mean".into()));
        }
        if !(self.baseline_rate > 0.0) || !(self.censor_rate > 0.0) {
            return Err(SimError::BadConfig("rates must be positive".into()));
        }
        if !(self.tau > 0.0) {
            return Err(SimError::BadConfig("tau must be positive".into()));
        }
        for (name, c) in [
            ("outcome_coef", Some(&self.outcome_coef)),
            ("censor_coef", self.censor_coef.as_ref()),
            ("treat_coef", self.treat_coef.as_ref()),
        ] {
            if let Some(c) = c {
                if c.len() != d {
                    return Err(SimError::BadConfig(format!(
                        "{name} must have length {d}, got {}",
                        c.len()
                    )));
                }
            }
        }
        Ok(())
    }

    fn index(&self, beta: &[f64], x: &[f64]) -> f64 {
        match self.kind {
            DgpKind::Misspec => interaction_dot(beta, x),
            _ => beta.iter().zip(x).map(|(b, v)| b * v).sum(),
        }
    }

    /// True conditional event rate of the control potential time.
    pub fn event_rate(&self, x: &[f64]) -> f64 {
        self.baseline_rate * self.index(&self.outcome_coef, x).exp()
    }

    /// True conditional censoring rate.
    pub fn censoring_rate(&self, x: &[f64]) -> f64 {
        match &self.censor_coef {
            Some(bc) => self.censor_rate * self.index(bc, x).exp(),
            None => self.censor_rate,
        }
    }

    /// True propensity score e(x).
    pub fn propensity(&self, x: &[f64]) -> f64 {
        match &self.treat_coef {
            Some(ba) => {
                let eta = self.index(ba, x);
                1.0 / (1.0 + (-eta).exp())
            }
            None => 0.5,
        }
    }

    /// Feature map under which the fitted nuisance models are correctly
    /// specified for this generator.
    pub fn well_specified_features(&self) -> FeatureMap {
        match self.kind {
            DgpKind::Misspec => FeatureMap::SquaresAndCross,
            _ => FeatureMap::Raw,
        }
    }
}

/// Latent columns retained next to the observed dataset.
#[derive(Debug, Clone)]
pub struct LatentColumns {
    pub t0: Vec<f64>,
    pub t1: Vec<f64>,
    pub c: Vec<f64>,
}

/// An observed dataset plus the latent potential outcomes that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub data: Dataset,
    pub latent: LatentColumns,
}

/// Draws `n` subjects from the generator. Per subject the draw order is
/// fixed (covariates, treatment uniform, event uniform, censoring uniform),
/// so a given stream always produces the same dataset.
pub fn generate(cfg: &DgpConfig, n: usize, rng: &mut ChaCha8Rng) -> Result<SyntheticDataset, SimError> {
    cfg.validate()?;
    let p = cfg.covariate_dim();
    let mut x = Vec::with_capacity(n * p);
    let mut arm = Vec::with_capacity(n);
    let mut time = Vec::with_capacity(n);
    let mut status = Vec::with_capacity(n);
    let mut t0 = Vec::with_capacity(n);
    let mut t1 = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut xi = vec![0.0; p];
    for _ in 0..n {
        for v in xi.iter_mut().take(p) {
            let z: f64 = rng.sample(StandardNormal);
            *v = z;
        }
        for j in 0..p {
            xi[j] += cfg.mean[j];
        }
        let u_a: f64 = rng.gen();
        let u_t: f64 = rng.gen();
        let u_c: f64 = rng.gen();
        let a = u_a < cfg.propensity(&xi);
        let ti0 = -(-u_t).ln_1p() / cfg.event_rate(&xi);
        let ti1 = ti0 + cfg.shift;
        let ci = -(-u_c).ln_1p() / cfg.censoring_rate(&xi);
        let t = if a { ti1 } else { ti0 };
        x.extend_from_slice(&xi);
        arm.push(a as u8);
        time.push(t.min(ci));
        status.push((t <= ci) as u8);
        t0.push(ti0);
        t1.push(ti1);
        c.push(ci);
    }
    let data = Dataset::from_columns(p, x, arm, time, status)
        .map_err(|e| SimError::BadConfig(format!("generated dataset invalid: {e}")))?;
    Ok(SyntheticDataset { data, latent: LatentColumns { t0, t1, c } })
}

/// Convenience wrapper deriving the stream from `(seed, "dataset")`.
pub fn generate_seeded(cfg: &DgpConfig, n: usize, seed: u64) -> Result<SyntheticDataset, SimError> {
    generate(cfg, n, &mut stream(seed, "dataset", &[]))
}

/// Monte Carlo estimate of the true RMST difference with its standard error.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TruthEstimate {
    pub theta: f64,
    pub mc_se: f64,
    pub draws: u64,
}

/// Estimates `E[T⁽¹⁾∧τ − T⁽⁰⁾∧τ]` by simulating the latent times directly.
pub fn true_rmst(cfg: &DgpConfig, tau: f64, draws: u64, seed: u64) -> Result<TruthEstimate, SimError> {
    cfg.validate()?;
    if draws < 10_000 {
        return Err(SimError::BadConfig("truth oracle needs at least 1e4 draws".into()));
    }
    let p = cfg.covariate_dim();
    let mut rng = stream(seed, "truth", &[]);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut xi = vec![0.0; p];
    for _ in 0..draws {
        for (j, v) in xi.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            *v = cfg.mean[j] + z;
        }
        let u_t: f64 = rng.gen();
        let t0 = -(-u_t).ln_1p() / cfg.event_rate(&xi);
        let d = (t0 + cfg.shift).min(tau) - t0.min(tau);
        sum += d;
        sumsq += d * d;
    }
    let m = draws as f64;
    let mean = sum / m;
    let var = (sumsq / m - mean * mean).max(0.0) * m / (m - 1.0);
    Ok(TruthEstimate { theta: mean, mc_se: (var / m).sqrt(), draws })
}

/// Which nuisance models to misspecify by truncating their design.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MisspecSet {
    #[serde(default)]
    pub outcome: bool,
    #[serde(default)]
    pub censoring: bool,
    #[serde(default)]
    pub treatment: bool,
}

impl MisspecSet {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn all() -> Self {
        MisspecSet { outcome: true, censoring: true, treatment: true }
    }

    pub fn label(&self) -> String {
        if *self == Self::none() {
            return "well".into();
        }
        let mut parts = Vec::new();
        if self.outcome {
            parts.push("outcome");
        }
        if self.censoring {
            parts.push("censoring");
        }
        if self.treatment {
            parts.push("treatment");
        }
        parts.join("+")
    }
}

/// Rewrites a nuisance configuration for the misspecification study: flagged
/// models keep only the raw covariates plus the squared terms; unflagged
/// models receive the full interaction design.
pub fn misspecify(base: &NuisanceConfig, which: MisspecSet) -> NuisanceConfig {
    let pick = |flag: bool| if flag { FeatureMap::SquaresOnly } else { FeatureMap::SquaresAndCross };
    NuisanceConfig {
        outcome_features: pick(which.outcome),
        censoring_features: pick(which.censoring),
        propensity_features: pick(which.treatment),
        ..base.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_published_coefficients() {
        let c = DgpConfig::preset(DgpKind::RctIndep);
        assert_eq!(c.mean, vec![1.0, 1.0, -1.0, 1.0]);
        assert_eq!(c.baseline_rate, 0.01);
        assert_eq!(c.outcome_coef, vec![0.5, 0.5, -0.5, 0.5]);
        assert_eq!(c.censor_rate, 0.03);
        assert!(c.censor_coef.is_none() && c.treat_coef.is_none());
        assert_eq!((c.shift, c.tau), (10.0, 25.0));

        let c = DgpConfig::preset(DgpKind::RctCond);
        assert_eq!(c.censor_coef.as_deref(), Some(&[0.7, 0.3, -0.25, -0.1][..]));

        let c = DgpConfig::preset(DgpKind::ObsCond);
        assert_eq!(c.treat_coef.as_deref(), Some(&[-1.0, -1.0, -2.5, -1.0][..]));

        let c = DgpConfig::preset(DgpKind::Misspec);
        assert_eq!(c.mean, vec![0.1, 0.5, 0.7, 0.4]);
        assert_eq!(c.outcome_coef.len(), 10);
        assert_eq!((c.shift, c.tau), (0.3, 1.0));
        assert_eq!(c.baseline_rate, 1.0);
    }

    #[test]
    fn latent_consistency_holds_row_wise() {
        let cfg = DgpConfig::preset(DgpKind::ObsCond);
        let s = generate_seeded(&cfg, 500, 9).unwrap();
        for i in 0..s.data.n() {
            let t = if s.data.arm(i) == 1 { s.latent.t1[i] } else { s.latent.t0[i] };
            assert_eq!(s.data.time(i), t.min(s.latent.c[i]));
            assert_eq!(s.data.status(i), (t <= s.latent.c[i]) as u8);
            assert_eq!(s.latent.t1[i], s.latent.t0[i] + cfg.shift);
        }
    }

    #[test]
    fn seed_determinism() {
        let cfg = DgpConfig::preset(DgpKind::Misspec);
        let a = generate_seeded(&cfg, 200, 31).unwrap();
        let b = generate_seeded(&cfg, 200, 31).unwrap();
        for i in 0..a.data.n() {
            assert_eq!(a.data.time(i), b.data.time(i));
            assert_eq!(a.data.covariates(i), b.data.covariates(i));
        }
    }

    #[test]
    fn null_coefficients_give_exponential_marginal() {
        // β₀ = 0: T⁽⁰⁾ ~ Exp(λ₀); Kolmogorov-Smirnov over 1e5 draws must
        // stay below the 1% critical value 1.6276/√n.
        let mut cfg = DgpConfig::preset(DgpKind::RctIndep);
        cfg.outcome_coef = vec![0.0; 4];
        cfg.baseline_rate = 0.05;
        let s = generate_seeded(&cfg, 100_000, 44).unwrap();
        let mut t0 = s.latent.t0.clone();
        t0.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = t0.len() as f64;
        let mut ks = 0.0f64;
        for (i, t) in t0.iter().enumerate() {
            let f = 1.0 - (-0.05 * t).exp();
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(ks < 1.6276 / n.sqrt(), "KS = {ks}");
    }

    #[test]
    fn censoring_rate_is_monotone_in_baseline() {
        let mut prev = 0.0;
        for (k, rate) in [0.01, 0.03, 0.09].iter().enumerate() {
            let mut cfg = DgpConfig::preset(DgpKind::RctIndep);
            cfg.censor_rate = *rate;
            let s = generate_seeded(&cfg, 100_000, 50 + k as u64).unwrap();
            let frac =
                (0..s.data.n()).filter(|&i| s.data.status(i) == 0).count() as f64 / s.data.n() as f64;
            assert!(frac > prev, "censored fraction {frac} not above {prev}");
            prev = frac;
        }
    }

    #[test]
    fn zero_shift_truth_is_zero() {
        let mut cfg = DgpConfig::preset(DgpKind::RctIndep);
        cfg.shift = 0.0;
        let t = true_rmst(&cfg, 25.0, 100_000, 3).unwrap();
        assert_eq!(t.theta, 0.0);
        assert_eq!(t.mc_se, 0.0);
    }

    #[test]
    fn bad_config_is_rejected() {
        let mut cfg = DgpConfig::preset(DgpKind::Misspec);
        cfg.treat_coef = Some(vec![1.0; 4]);
        assert!(matches!(cfg.validate(), Err(SimError::BadConfig(_))));
        assert!(generate_seeded(&cfg, 10, 0).is_err());
    }

    #[test]
    fn misspecify_truncates_flagged_designs() {
        let base = NuisanceConfig::default();
        let c = misspecify(&base, MisspecSet { treatment: true, ..Default::default() });
        assert_eq!(c.propensity_features, FeatureMap::SquaresOnly);
        assert_eq!(c.outcome_features, FeatureMap::SquaresAndCross);
        assert_eq!(c.censoring_features, FeatureMap::SquaresAndCross);
        let full = misspecify(&base, MisspecSet::none());
        assert_eq!(full.propensity_features, FeatureMap::SquaresAndCross);
    }
}
