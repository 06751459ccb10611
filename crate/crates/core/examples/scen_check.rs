use rmst_core::estimators::Method;
use rmst_core::sim::*;

fn main() {
    let all: Vec<EstimatorConfig> = Method::all().into_iter().map(EstimatorConfig::of).collect();
    let scenarios = vec![
        ScenarioConfig { name: "rct_indep".into(), preset: Some("rct_indep".into()), dgp: None,
            tau: None, n: vec![4000], reps: 100, estimators: all.clone() },
        ScenarioConfig { name: "rct_cond".into(), preset: Some("rct_cond".into()), dgp: None,
            tau: None, n: vec![500, 4000], reps: 100, estimators: all.clone() },
        ScenarioConfig { name: "obs_cond".into(), preset: Some("obs_cond".into()), dgp: None,
            tau: None, n: vec![500, 4000], reps: 100, estimators: all.clone() },
    ];
    let cfg = BenchmarkConfig { master_seed: 42, truth_draws: 4_000_000, scenarios };
    let t0 = std::time::Instant::now();
    let res = run_benchmark(&cfg).unwrap();
    println!("elapsed {:?} truth0 {:?}", t0.elapsed(), res.summaries[0].truth);
    for s in &res.summaries {
        let band = 3.0 * s.sd.unwrap_or(f64::NAN) / 10.0;
        println!(
            "{:10} {:15} n={:5} mean={:8.4} sd={:8.4} bias={:+8.4} band={:6.4} [{}] fail={}",
            s.scenario, s.estimator, s.n, s.mean.unwrap_or(f64::NAN), s.sd.unwrap_or(f64::NAN),
            s.bias.unwrap_or(f64::NAN), band,
            if s.bias.unwrap_or(f64::NAN).abs() <= band { "unb" } else { "BIA" }, s.failures
        );
    }
}
