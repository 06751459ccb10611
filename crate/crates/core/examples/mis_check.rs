use rmst_core::estimators::Method;
use rmst_core::sim::*;

fn main() {
    let reps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(24);
    let mis = |o: bool, c: bool, t: bool| MisspecSet { outcome: o, censoring: c, treatment: t };
    let with_mis = |m: Method, w: MisspecSet| EstimatorConfig { misspecify: Some(w), ..EstimatorConfig::of(m) };
    let mut estimators = vec![
        EstimatorConfig::of(Method::AiptwAipcw),
        with_mis(Method::AiptwAipcw, mis(true, false, false)),
        with_mis(Method::AiptwAipcw, mis(false, true, false)),
        with_mis(Method::AiptwAipcw, mis(false, false, true)),
        with_mis(Method::AiptwAipcw, mis(false, true, true)),
        with_mis(Method::IptwIpcwKm, mis(false, false, true)),
    ];
    for m in Method::all() {
        estimators.push(with_mis(m, mis(true, true, true)));
    }
    let cfg = BenchmarkConfig {
        master_seed: 42,
        truth_draws: 4_000_000,
        scenarios: vec![ScenarioConfig {
            name: "misspec".into(), preset: Some("misspec".into()), dgp: None, tau: None,
            n: vec![10_000], reps, estimators,
        }],
    };
    let t0 = std::time::Instant::now();
    let res = run_benchmark(&cfg).unwrap();
    println!("elapsed {:?} for {reps} reps; truth {:.5}", t0.elapsed(), res.summaries[0].truth);
    for s in &res.summaries {
        let band = 3.0 * s.sd.unwrap_or(f64::NAN) / (reps as f64).sqrt();
        println!(
            "{:42} mean={:8.5} sd={:8.5} bias={:+9.5} band={:8.5} [{}] fail={}",
            s.estimator, s.mean.unwrap_or(f64::NAN), s.sd.unwrap_or(f64::NAN),
            s.bias.unwrap_or(f64::NAN), band,
            if s.bias.unwrap_or(f64::NAN).abs() <= band { "unb" } else { "BIA" }, s.failures
        );
    }
    for n in res.failure_notes.iter().take(5) { println!("{n}"); }
}
