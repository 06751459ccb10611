use rmst_core::estimators::Method;
use rmst_core::nuisance::NuisanceConfig;
use rmst_core::sim::*;

fn main() {
    for clip in [0.01, 1e-6] {
        let cfgn = NuisanceConfig { censoring_clip: clip, propensity_clip: 1e-6, ..Default::default() };
        let scenarios = vec![ScenarioConfig {
            name: format!("s2c{clip}"),
            preset: Some("rct_cond".into()),
            dgp: None,
            tau: None,
            n: vec![500, 4000],
            reps: 100,
            estimators: vec![
                EstimatorConfig { nuisance: Some(cfgn.clone()), ..EstimatorConfig::of(Method::IpcwKm) },
                EstimatorConfig { nuisance: Some(cfgn.clone()), ..EstimatorConfig::of(Method::IpcwMean) },
            ],
        }];
        let cfg = BenchmarkConfig { master_seed: 42, truth_draws: 2_000_000, scenarios };
        let res = run_benchmark(&cfg).unwrap();
        for s in &res.summaries {
            println!(
                "{:10} {:10} n={:5} mean={:8.4} sd={:8.4} bias={:8.4} band={:6.4}",
                s.scenario, s.estimator, s.n,
                s.mean.unwrap_or(f64::NAN), s.sd.unwrap_or(f64::NAN),
                s.bias.unwrap_or(f64::NAN), 3.0 * s.sd.unwrap_or(f64::NAN) / 10.0
            );
        }
    }
}
