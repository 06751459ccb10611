use rmst_core::estimators::Method;
use rmst_core::nuisance::NuisanceConfig;
use rmst_core::sim::*;

fn main() {
    for (eclip, gclip) in [(0.01, 0.01), (1e-6, 1e-6)] {
        for seed in [1u64, 2, 3, 42] {
            let cfgn = NuisanceConfig { censoring_clip: gclip, propensity_clip: eclip, ..Default::default() };
            let entry = EstimatorConfig { nuisance: Some(cfgn), ..EstimatorConfig::of(Method::IptwIpcwMean) };
            let cfg = BenchmarkConfig {
                master_seed: seed,
                truth_draws: 1_000_000,
                scenarios: vec![ScenarioConfig {
                    name: "obs_cond".into(), preset: Some("obs_cond".into()), dgp: None, tau: None,
                    n: vec![500, 8000], reps: 100, estimators: vec![entry],
                }],
            };
            let res = run_benchmark(&cfg).unwrap();
            print!("clips=({eclip},{gclip}) seed={seed}: ");
            for s in &res.summaries {
                let band = 3.0 * s.sd.unwrap() / 10.0;
                print!(
                    "n={} bias={:+.3} band={:.3} [{}]  ",
                    s.n, s.bias.unwrap(), band,
                    if s.bias.unwrap().abs() <= band { "unb" } else { "BIA" }
                );
            }
            println!();
        }
    }
}
