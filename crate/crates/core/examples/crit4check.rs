use rmst_core::estimators::Method;
use rmst_core::nuisance::NuisanceConfig;
use rmst_core::sim::*;

fn main() {
    for (eclip, gclip) in [(1e-6, 1e-6), (1e-6, 0.01), (0.01, 0.01)] {
        let cfgn = NuisanceConfig { censoring_clip: gclip, propensity_clip: eclip, ..Default::default() };
        let entry = |m: Method| EstimatorConfig { nuisance: Some(cfgn.clone()), ..EstimatorConfig::of(m) };
        let scenarios = vec![ScenarioConfig {
            name: "obs2".into(),
            preset: Some("obs_cond".into()),
            dgp: None,
            tau: None,
            n: vec![500, 8000],
            reps: 100,
            estimators: vec![entry(Method::IptwIpcwMean), entry(Method::IptwIpcwKm)],
        }];
        let cfg = BenchmarkConfig { master_seed: 42, truth_draws: 2_000_000, scenarios };
        let t0 = std::time::Instant::now();
        let res = run_benchmark(&cfg).unwrap();
        println!("--- eclip={eclip} gclip={gclip} ({:?})", t0.elapsed());
        for s in &res.summaries {
            println!(
                "  {:14} n={:5} mean={:8.4} sd={:8.4} bias={:8.4} band={:6.4} fail={} -> {}",
                s.estimator, s.n,
                s.mean.unwrap_or(f64::NAN), s.sd.unwrap_or(f64::NAN), s.bias.unwrap_or(f64::NAN),
                3.0 * s.sd.unwrap_or(f64::NAN) / 10.0, s.failures,
                if s.bias.unwrap_or(f64::NAN).abs() <= 3.0 * s.sd.unwrap_or(f64::NAN) / 10.0 { "UNBIASED" } else { "BIASED" }
            );
        }
    }
}
