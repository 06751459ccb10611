use rmst_core::estimators::Method;
use rmst_core::nuisance::NuisanceConfig;
use rmst_core::sim::*;

fn main() {
    let gclip: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let mis = |o: bool, c: bool, t: bool| MisspecSet { outcome: o, censoring: c, treatment: t };
    let base = NuisanceConfig {
        censoring_clip: gclip,
        propensity_clip: 1e-6,
        ..Default::default()
    };
    let with_mis = |m: Method, w: MisspecSet| EstimatorConfig {
        misspecify: Some(w),
        nuisance: Some(base.clone()),
        ..EstimatorConfig::of(m)
    };
    let estimators = vec![
        with_mis(Method::AiptwAipcw, mis(false, false, false)),
        with_mis(Method::AiptwAipcw, mis(true, false, false)),
        with_mis(Method::AiptwAipcw, mis(false, true, false)),
        with_mis(Method::AiptwAipcw, mis(false, false, true)),
        with_mis(Method::AiptwAipcw, mis(false, true, true)),
        with_mis(Method::AiptwAipcw, mis(true, true, true)),
        with_mis(Method::IptwIpcwKm, mis(false, false, true)),
    ];
    let cfg = BenchmarkConfig {
        master_seed: 42,
        truth_draws: 4_000_000,
        scenarios: vec![ScenarioConfig {
            name: "misspec".into(), preset: Some("misspec".into()), dgp: None, tau: None,
            n: vec![10_000], reps: 100, estimators,
        }],
    };
    let t0 = std::time::Instant::now();
    let res = run_benchmark(&cfg).unwrap();
    println!("gclip={gclip} elapsed {:?}; truth {:.5}", t0.elapsed(), res.summaries[0].truth);
    for s in &res.summaries {
        let band = 3.0 * s.sd.unwrap_or(f64::NAN) / 10.0;
        println!(
            "{:44} bias={:+9.5} sd={:8.5} band={:8.5} [{}]",
            s.estimator, s.bias.unwrap_or(f64::NAN), s.sd.unwrap_or(f64::NAN), band,
            if s.bias.unwrap_or(f64::NAN).abs() <= band { "unb" } else { "BIA" }
        );
    }
}
