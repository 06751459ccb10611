use rmst_core::estimators::{estimate, EstimatorSpec, Method};
use rmst_core::nuisance::{make_oracle_nuisances, Learner, NuisanceConfig};
use rmst_core::sim::*;
use rayon::prelude::*;

fn main() {
    let dgp = DgpConfig::preset(DgpKind::ObsCond);
    let tau = 25.0;
    // 1) oracle nuisances: is the bare estimator unbiased?
    let ns = make_oracle_nuisances(&dgp, tau).unwrap();
    for n in [500usize, 8000] {
        let thetas: Vec<f64> = (0..100u64).into_par_iter().map(|rep| {
            let s = generate(&dgp, n, &mut rmst_core::rng::stream(9, "oracle-check", &[n as u64, rep])).unwrap();
            let rd = s.data.restrict(tau).unwrap();
            estimate(&rd, &EstimatorSpec::new(Method::IptwIpcwMean), &ns).unwrap().theta
        }).collect();
        let m = thetas.iter().sum::<f64>() / 100.0;
        let sd = (thetas.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / 99.0).sqrt();
        println!("oracle iptw_ipcw_mean n={n}: mean {m:.4} sd {sd:.4} bias {:+.4} band {:.4}", m - 7.1244, 3.0 * sd / 10.0);
    }
    // 2) pooled censoring fit at n=8000
    for learner in [Learner::TwoSeparate, Learner::SinglePooled] {
        let cfgn = NuisanceConfig {
            censoring_learner: learner,
            censoring_clip: 1e-6,
            propensity_clip: 1e-6,
            ..Default::default()
        };
        let entry = EstimatorConfig { nuisance: Some(cfgn), ..EstimatorConfig::of(Method::IptwIpcwMean) };
        let cfg = BenchmarkConfig {
            master_seed: 42,
            truth_draws: 1_000_000,
            scenarios: vec![ScenarioConfig {
                name: "o".into(), preset: Some("obs_cond".into()), dgp: None, tau: None,
                n: vec![8000], reps: 100, estimators: vec![entry],
            }],
        };
        let res = run_benchmark(&cfg).unwrap();
        let s = &res.summaries[0];
        println!("fitted censoring={learner:?}: mean {:.4} sd {:.4} bias {:+.4} band {:.4}",
            s.mean.unwrap(), s.sd.unwrap(), s.bias.unwrap(), 3.0 * s.sd.unwrap() / 10.0);
    }
}
