use rmst_core::estimators::Method;
use rmst_core::sim::*;

fn main() {
    let scenarios = vec![ScenarioConfig {
        name: "s2".into(),
        preset: Some("rct_cond".into()),
        dgp: None,
        tau: None,
        n: vec![500, 4000],
        reps: 100,
        estimators: vec![
            EstimatorConfig::of(Method::Km),
            EstimatorConfig::of(Method::IpcwKm),
            EstimatorConfig::of(Method::IpcwMean),
            EstimatorConfig::of(Method::Bj),
            EstimatorConfig::of(Method::GformulaT),
            EstimatorConfig::of(Method::Naive),
        ],
    }];
    let cfg = BenchmarkConfig { master_seed: 42, truth_draws: 4_000_000, scenarios };
    let t0 = std::time::Instant::now();
    let res = run_benchmark(&cfg).unwrap();
    println!("elapsed {:?}", t0.elapsed());
    for s in &res.summaries {
        println!(
            "{:8} {:12} n={:5} mean={:8.4} sd={:7.4} bias={:8.4} (3*sd/sqrt(100)={:6.4}) fail={}",
            s.scenario, s.estimator, s.n,
            s.mean.unwrap_or(f64::NAN), s.sd.unwrap_or(f64::NAN), s.bias.unwrap_or(f64::NAN),
            3.0 * s.sd.unwrap_or(f64::NAN) / 10.0, s.failures
        );
    }
}
