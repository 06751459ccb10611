//! Deterministic replication benchmark over the built-in generators.
//!
//! A benchmark config lists scenarios (generator, horizon, sample sizes,
//! replication count) and estimator entries. Every cell generates fresh
//! datasets from seeds derived as `(master, scenario, n, rep)`, shares each
//! dataset across all estimator entries, fits each distinct nuisance
//! component once per replicate, and records one row per successful
//! estimate. Failures are counted per cell and never abort the sweep.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use super::{generate, misspecify, true_rmst, DgpConfig, MisspecSet, SimError};
use crate::data::RestrictedDataset;
use crate::estimators::{estimate, EstimatorSpec, Method, Normalization};
use crate::nuisance::{
    fit_cox, fit_logistic, CoxOutcomeSingleLearner, CoxOutcomeTwoLearner, CoxStratum, CoxTarget,
    FeatureMap, FitError, Learner, NuisanceConfig, NuisanceSet, Provenance,
};
use crate::rng::stream;

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("benchmark config has no scenarios")]
    EmptyScenarios,
    #[error("scenario {0}: {1}")]
    BadScenario(String, String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One estimator entry of a scenario.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    #[serde(default)]
    pub normalization: Normalization,
    /// Display label; defaults to the method name plus flags.
    #[serde(default)]
    pub label: Option<String>,
    /// Explicit nuisance configuration; defaults to the scenario's
    /// well-specified setup.
    #[serde(default)]
    pub nuisance: Option<NuisanceConfig>,
    /// Truncate the designs of the flagged models (misspecification study).
    #[serde(default)]
    pub misspecify: Option<MisspecSet>,
}

impl EstimatorConfig {
    pub fn of(method: Method) -> Self {
        EstimatorConfig {
            method,
            normalization: Normalization::Standard,
            label: None,
            nuisance: None,
            misspecify: None,
        }
    }

    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let mut s = self.method.name().to_string();
        if self.normalization == Normalization::Hajek {
            s.push_str("_hajek");
        }
        if let Some(m) = &self.misspecify {
            if *m != MisspecSet::none() {
                s.push_str("~mis:");
                s.push_str(&m.label());
            }
        }
        s
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    /// Built-in generator name; ignored when `dgp` is given.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub dgp: Option<DgpConfig>,
    /// Restriction horizon; defaults to the generator's own.
    #[serde(default)]
    pub tau: Option<f64>,
    pub n: Vec<usize>,
    pub reps: usize,
    pub estimators: Vec<EstimatorConfig>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BenchmarkConfig {
    pub master_seed: u64,
    /// Monte Carlo draws for each scenario's ground truth.
    #[serde(default = "default_truth_draws")]
    pub truth_draws: u64,
    pub scenarios: Vec<ScenarioConfig>,
}

fn default_truth_draws() -> u64 {
    2_000_000
}

/// Clips used by benchmark scenarios unless overridden: loose, so weighted
/// estimators behave like their unclipped textbook definitions. A tight
/// censoring clip is not harmless here: it caps IPCW weights (shifting the
/// mean-type estimators) and makes the doubly-robust correction integral
/// inconsistent with the censoring law it integrates, which costs the
/// augmented estimator its robustness exactly where the clip binds.
pub const BENCH_PROPENSITY_CLIP: f64 = 1e-6;
pub const BENCH_CENSORING_CLIP: f64 = 1e-6;

/// Default nuisance configuration for a scenario: well-specified designs for
/// its generator, two-learner outcome fits.
pub fn scenario_default_nuisance(dgp: &DgpConfig) -> NuisanceConfig {
    let features = dgp.well_specified_features();
    NuisanceConfig {
        outcome_learner: Learner::TwoSeparate,
        censoring_learner: Learner::TwoSeparate,
        outcome_features: features,
        censoring_features: features,
        propensity_features: features,
        propensity_clip: BENCH_PROPENSITY_CLIP,
        censoring_clip: BENCH_CENSORING_CLIP,
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RepRow {
    pub scenario: String,
    pub estimator: String,
    pub n: usize,
    pub rep: usize,
    pub theta: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub estimator: String,
    pub n: usize,
    /// Mean and SD over successful replicates; `None` when all failed.
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub bias: Option<f64>,
    pub truth: f64,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct ReplicationResults {
    pub rows: Vec<RepRow>,
    pub summaries: Vec<SummaryRow>,
    /// Human-readable notes for failed replicates.
    pub failure_notes: Vec<String>,
}

impl ReplicationResults {
    pub fn write_replicates_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "scenario,estimator,n,rep,theta")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.scenario, r.estimator, r.n, r.rep, r.theta)?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "scenario,estimator,n,mean,sd,bias,truth,failures")?;
        for s in &self.summaries {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                s.scenario,
                s.estimator,
                s.n,
                opt(s.mean),
                opt(s.sd),
                opt(s.bias),
                s.truth,
                s.failures
            )?;
        }
        Ok(())
    }

    pub fn summary(&self, scenario: &str, estimator: &str, n: usize) -> Option<&SummaryRow> {
        self.summaries
            .iter()
            .find(|s| s.scenario == scenario && s.estimator == estimator && s.n == n)
    }
}

// Nuisance components are cached per replicate so estimator entries sharing
// a configuration do not refit.
#[derive(PartialEq, Eq, Hash, Clone)]
enum ComponentKey {
    Propensity(FeatureMap, u64),
    Censoring(Learner, FeatureMap, u64),
    Outcome(Learner, FeatureMap),
}

struct ComponentCache<'a> {
    rd: &'a RestrictedDataset,
    propensity: HashMap<ComponentKey, Arc<crate::nuisance::PropensityModel>>,
    censoring: HashMap<ComponentKey, Arc<dyn crate::nuisance::CensoringModel>>,
    outcome: HashMap<ComponentKey, Arc<dyn crate::nuisance::OutcomeModel>>,
}

impl<'a> ComponentCache<'a> {
    fn new(rd: &'a RestrictedDataset) -> Self {
        ComponentCache {
            rd,
            propensity: HashMap::new(),
            censoring: HashMap::new(),
            outcome: HashMap::new(),
        }
    }

    fn assemble(
        &mut self,
        cfg: &NuisanceConfig,
        needs: crate::nuisance::NuisanceNeeds,
    ) -> Result<NuisanceSet, FitError> {
        let mut set = NuisanceSet::empty();
        if needs.propensity {
            let key =
                ComponentKey::Propensity(cfg.propensity_features, cfg.propensity_clip.to_bits());
            if !self.propensity.contains_key(&key) {
                let m = fit_logistic(
                    self.rd.base(),
                    cfg.propensity_features,
                    (cfg.propensity_clip, 1.0 - cfg.propensity_clip),
                )?;
                self.propensity.insert(key.clone(), Arc::new(m));
            }
            set.propensity = Some(self.propensity[&key].clone());
            set.tags.propensity = Provenance::Fitted;
        }
        if needs.censoring {
            let key = ComponentKey::Censoring(
                cfg.censoring_learner,
                cfg.censoring_features,
                cfg.censoring_clip.to_bits(),
            );
            if !self.censoring.contains_key(&key) {
                self.censoring
                    .insert(key.clone(), crate::nuisance::fit_censoring_model(self.rd, cfg)?);
            }
            set.censoring = Some(self.censoring[&key].clone());
            set.tags.censoring = Provenance::Fitted;
        }
        if needs.outcome {
            let key = ComponentKey::Outcome(cfg.outcome_learner, cfg.outcome_features);
            if !self.outcome.contains_key(&key) {
                let model: Arc<dyn crate::nuisance::OutcomeModel> = match cfg.outcome_learner {
                    Learner::TwoSeparate => {
                        let m0 = fit_cox(
                            self.rd,
                            CoxTarget::Event,
                            CoxStratum::Arm(0),
                            cfg.outcome_features,
                        )?;
                        let m1 = fit_cox(
                            self.rd,
                            CoxTarget::Event,
                            CoxStratum::Arm(1),
                            cfg.outcome_features,
                        )?;
                        Arc::new(CoxOutcomeTwoLearner::new(Arc::new(m0), Arc::new(m1)))
                    }
                    Learner::SinglePooled => {
                        let m = fit_cox(
                            self.rd,
                            CoxTarget::Event,
                            CoxStratum::PooledWithTreatment,
                            cfg.outcome_features,
                        )?;
                        Arc::new(CoxOutcomeSingleLearner::new(Arc::new(m)))
                    }
                };
                self.outcome.insert(key.clone(), model);
            }
            set.outcome = Some(self.outcome[&key].clone());
            set.tags.outcome = Provenance::Fitted;
        }
        Ok(set)
    }
}

/// Resolved per-estimator nuisance configuration.
fn resolve_nuisance(entry: &EstimatorConfig, default: &NuisanceConfig) -> NuisanceConfig {
    let mut cfg = entry.nuisance.clone().unwrap_or_else(|| default.clone());
    if let Some(which) = entry.misspecify {
        cfg = misspecify(&cfg, which);
    }
    if let Some(l) = entry.method.forced_learner() {
        cfg.outcome_learner = l;
    }
    cfg
}

/// Runs the full sweep. Output is deterministic given the master seed:
/// replicate seeds derive from `(master, scenario, n, rep)` and results are
/// reduced in index order regardless of thread scheduling.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<ReplicationResults, BenchmarkError> {
    if cfg.scenarios.is_empty() {
        return Err(BenchmarkError::EmptyScenarios);
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut failure_notes = Vec::new();

    for sc in &cfg.scenarios {
        let dgp = match (&sc.dgp, &sc.preset) {
            (Some(d), _) => d.clone(),
            (None, Some(name)) => DgpConfig::preset_by_name(name).ok_or_else(|| {
                BenchmarkError::BadScenario(sc.name.clone(), format!("unknown preset {name}"))
            })?,
            (None, None) => {
                return Err(BenchmarkError::BadScenario(
                    sc.name.clone(),
                    "needs a preset or an explicit dgp".into(),
                ))
            }
        };
        dgp.validate()?;
        if sc.reps == 0 || sc.n.is_empty() || sc.estimators.is_empty() {
            return Err(BenchmarkError::BadScenario(
                sc.name.clone(),
                "needs reps ≥ 1, a sample-size grid and estimators".into(),
            ));
        }
        let tau = sc.tau.unwrap_or(dgp.tau);
        let truth = true_rmst(
            &dgp,
            tau,
            cfg.truth_draws,
            crate::rng::derive_seed_u64(cfg.master_seed, &format!("truth:{}", sc.name)),
        )?;
        let default_nuisance = scenario_default_nuisance(&dgp);
        let entries: Vec<(String, EstimatorSpec, NuisanceConfig, crate::nuisance::NuisanceNeeds)> =
            sc.estimators
                .iter()
                .map(|e| {
                    (
                        e.label(),
                        EstimatorSpec { method: e.method, normalization: e.normalization },
                        resolve_nuisance(e, &default_nuisance),
                        e.method.needs(),
                    )
                })
                .collect();

        for &n in &sc.n {
            let per_rep: Vec<Vec<(usize, Result<f64, String>)>> = (0..sc.reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng =
                        stream(cfg.master_seed, &format!("bench:{}", sc.name), &[n as u64, rep as u64]);
                    let synth = match generate(&dgp, n, &mut rng) {
                        Ok(s) => s,
                        Err(e) => {
                            return entries
                                .iter()
                                .enumerate()
                                .map(|(k, _)| (k, Err(format!("generate: {e}"))))
                                .collect()
                        }
                    };
                    let rd = match synth.data.restrict(tau) {
                        Ok(r) => r,
                        Err(e) => {
                            return entries
                                .iter()
                                .enumerate()
                                .map(|(k, _)| (k, Err(format!("restrict: {e}"))))
                                .collect()
                        }
                    };
                    let mut cache = ComponentCache::new(&rd);
                    entries
                        .iter()
                        .enumerate()
                        .map(|(k, (_, spec, ncfg, needs))| {
                            let out = cache
                                .assemble(ncfg, *needs)
                                .map_err(|e| format!("fit: {e}"))
                                .and_then(|ns| {
                                    estimate(&rd, spec, &ns)
                                        .map(|est| est.theta)
                                        .map_err(|e| format!("estimate: {e}"))
                                });
                            (k, out)
                        })
                        .collect()
                })
                .collect();

            // Deterministic reduction in (rep, estimator) order.
            let mut per_entry: Vec<Vec<f64>> = vec![Vec::new(); entries.len()];
            let mut failures = vec![0usize; entries.len()];
            for (rep, results) in per_rep.iter().enumerate() {
                for (k, res) in results {
                    match res {
                        Ok(theta) => {
                            per_entry[*k].push(*theta);
                            rows.push(RepRow {
                                scenario: sc.name.clone(),
                                estimator: entries[*k].0.clone(),
                                n,
                                rep,
                                theta: *theta,
                            });
                        }
                        Err(msg) => {
                            failures[*k] += 1;
                            failure_notes.push(format!(
                                "{} / {} / n={} / rep={}: {}",
                                sc.name, entries[*k].0, n, rep, msg
                            ));
                        }
                    }
                }
            }
            for (k, thetas) in per_entry.iter().enumerate() {
                let (mean, sd) = moments(thetas);
                summaries.push(SummaryRow {
                    scenario: sc.name.clone(),
                    estimator: entries[k].0.clone(),
                    n,
                    mean,
                    sd,
                    bias: mean.map(|m| m - truth.theta),
                    truth: truth.theta,
                    failures: failures[k],
                });
            }
        }
    }
    Ok(ReplicationResults { rows, summaries, failure_notes })
}

fn moments(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let sd = if v.len() > 1 {
        Some((v.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
    } else {
        None
    };
    (Some(mean), sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::DgpKind;

    fn tiny_config() -> BenchmarkConfig {
        BenchmarkConfig {
            master_seed: 3,
            truth_draws: 20_000,
            scenarios: vec![ScenarioConfig {
                name: "s1".into(),
                preset: Some(DgpKind::RctIndep.name().into()),
                dgp: None,
                tau: None,
                n: vec![120],
                reps: 4,
                estimators: vec![
                    EstimatorConfig::of(Method::Km),
                    EstimatorConfig::of(Method::Naive),
                ],
            }],
        }
    }

    #[test]
    fn rows_and_summaries_are_produced_deterministically() {
        let cfg = tiny_config();
        let a = run_benchmark(&cfg).unwrap();
        let b = run_benchmark(&cfg).unwrap();
        assert_eq!(a.rows.len(), 8);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.theta.to_bits(), rb.theta.to_bits());
            assert_eq!((ra.rep, &ra.estimator), (rb.rep, &rb.estimator));
        }
        let s = a.summary("s1", "km", 120).unwrap();
        assert_eq!(s.failures, 0);
        assert!(s.mean.is_some() && s.sd.is_some());
    }

    #[test]
    fn empty_scenarios_is_an_error() {
        let cfg = BenchmarkConfig { master_seed: 0, truth_draws: 20_000, scenarios: vec![] };
        assert!(matches!(run_benchmark(&cfg), Err(BenchmarkError::EmptyScenarios)));
    }

    #[test]
    fn csv_output_is_stable_bytes() {
        let res = run_benchmark(&tiny_config()).unwrap();
        let mut a = Vec::new();
        res.write_replicates_csv(&mut a).unwrap();
        let res2 = run_benchmark(&tiny_config()).unwrap();
        let mut b = Vec::new();
        res2.write_replicates_csv(&mut b).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(b"scenario,estimator,n,rep,theta\n"));
    }

    #[test]
    fn labels_include_flags() {
        let mut e = EstimatorConfig::of(Method::IptwIpcwMean);
        e.normalization = Normalization::Hajek;
        e.misspecify = Some(MisspecSet { treatment: true, ..Default::default() });
        assert_eq!(e.label(), "iptw_ipcw_mean_hajek~mis:treatment");
    }
}
