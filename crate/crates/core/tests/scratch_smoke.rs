// Temporary exploration harness; deleted before the suite is finalized.

use rmst_core::estimators::{estimate, EstimatorSpec, Method};
use rmst_core::nuisance::make_oracle_nuisances;
use rmst_core::sim::{
    generate, run_benchmark, scenario_default_nuisance, true_rmst, BenchmarkConfig, DgpConfig,
    DgpKind, EstimatorConfig, ScenarioConfig,
};
use rmst_core::transforms::{batch, TransformTag};

#[test]
fn smoke_truths() {
    for kind in [DgpKind::RctIndep, DgpKind::RctCond, DgpKind::ObsIndep, DgpKind::ObsCond] {
        let cfg = DgpConfig::preset(kind);
        let t = true_rmst(&cfg, 25.0, 1_000_000, 7).unwrap();
        println!("truth {:?} = {:.5} ± {:.5}", kind, t.theta, t.mc_se);
        assert!((t.theta - 7.1244).abs() < 4.0 * t.mc_se + 0.002, "{kind:?} {t:?}");
    }
    let t = true_rmst(&DgpConfig::preset(DgpKind::Misspec), 1.0, 1_000_000, 7).unwrap();
    println!("truth misspec = {:.6} ± {:.6}", t.theta, t.mc_se);
    assert!((t.theta - 0.20641).abs() < 4.0 * t.mc_se + 0.0005, "{t:?}");
}

#[test]
fn smoke_cut_means() {
    // Oracle-nuisance transforms: arm-conditional mean of T* vs latent mean.
    let cfg = DgpConfig::preset(DgpKind::RctCond);
    let tau = 25.0;
    let n = 200_000;
    let synth = generate(&cfg, n, &mut rmst_core::rng::stream(11, "cut", &[])).unwrap();
    let rd = synth.data.restrict(tau).unwrap();
    let ns = make_oracle_nuisances(&cfg, tau).unwrap();
    for tag in [TransformTag::Ipcw, TransformTag::Bj, TransformTag::Dr] {
        let pos = batch(&rd, &ns, tag).unwrap();
        for arm in [0u8, 1u8] {
            let mut d = Vec::new();
            for i in 0..rd.n() {
                if rd.arm(i) == arm {
                    let latent =
                        if arm == 1 { synth.latent.t1[i] } else { synth.latent.t0[i] }.min(tau);
                    d.push(pos[i].value - latent);
                }
            }
            let m = d.iter().sum::<f64>() / d.len() as f64;
            let sd = (d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (d.len() - 1) as f64)
                .sqrt()
                / (d.len() as f64).sqrt();
            println!("{tag:?} arm {arm}: paired diff {m:.5} ± {sd:.5}");
            assert!(m.abs() < 5.0 * sd, "{tag:?} arm {arm}: {m} vs {sd}");
        }
    }
}

#[test]
fn smoke_small_benchmark() {
    let scenarios = vec![
        ScenarioConfig {
            name: "s1".into(),
            preset: Some("rct_indep".into()),
            dgp: None,
            tau: None,
            n: vec![4000],
            reps: 20,
            estimators: vec![
                EstimatorConfig::of(Method::Km),
                EstimatorConfig::of(Method::Naive),
                EstimatorConfig::of(Method::GformulaT),
                EstimatorConfig::of(Method::Bj),
            ],
        },
        ScenarioConfig {
            name: "s2".into(),
            preset: Some("rct_cond".into()),
            dgp: None,
            tau: None,
            n: vec![500],
            reps: 20,
            estimators: vec![
                EstimatorConfig::of(Method::Km),
                EstimatorConfig::of(Method::IpcwKm),
                EstimatorConfig::of(Method::IpcwMean),
                EstimatorConfig::of(Method::Bj),
                EstimatorConfig::of(Method::GformulaT),
                EstimatorConfig::of(Method::GformulaS),
            ],
        },
        ScenarioConfig {
            name: "obs2".into(),
            preset: Some("obs_cond".into()),
            dgp: None,
            tau: None,
            n: vec![1000],
            reps: 20,
            estimators: vec![
                EstimatorConfig::of(Method::Km),
                EstimatorConfig::of(Method::IptwKm),
                EstimatorConfig::of(Method::IptwIpcwKm),
                EstimatorConfig::of(Method::IptwIpcwMean),
                EstimatorConfig::of(Method::IptwBj),
                EstimatorConfig::of(Method::GformulaT),
                EstimatorConfig::of(Method::AiptwAipcw),
            ],
        },
    ];
    let cfg = BenchmarkConfig { master_seed: 42, truth_draws: 500_000, scenarios };
    let t0 = std::time::Instant::now();
    let res = run_benchmark(&cfg).unwrap();
    println!("benchmark took {:?}", t0.elapsed());
    for s in &res.summaries {
        println!(
            "{:8} {:16} n={:5} mean={:8.4} sd={:7.4} bias={:8.4} fail={}",
            s.scenario,
            s.estimator,
            s.n,
            s.mean.unwrap_or(f64::NAN),
            s.sd.unwrap_or(f64::NAN),
            s.bias.unwrap_or(f64::NAN),
            s.failures
        );
    }
    for note in res.failure_notes.iter().take(5) {
        println!("note: {note}");
    }
}

#[test]
fn smoke_misspec_aiptw() {
    use rmst_core::nuisance::fit_nuisances;
    use rmst_core::sim::{misspecify, MisspecSet};
    let cfg = DgpConfig::preset(DgpKind::Misspec);
    let tau = 1.0;
    let base = scenario_default_nuisance(&cfg);
    let mut means = Vec::new();
    for (mi, which) in [
        MisspecSet::none(),
        MisspecSet { treatment: true, ..Default::default() },
        MisspecSet::all(),
    ]
    .iter()
    .enumerate()
    {
        let ncfg = misspecify(&base, *which);
        let mut thetas = Vec::new();
        let t0 = std::time::Instant::now();
        for rep in 0..10u64 {
            let synth = generate(
                &cfg,
                4000,
                &mut rmst_core::rng::stream(100 + mi as u64, "mis", &[rep]),
            )
            .unwrap();
            let rd = synth.data.restrict(tau).unwrap();
            let ns =
                fit_nuisances(&rd, &ncfg, Method::AiptwAipcw.needs()).unwrap();
            let est = estimate(&rd, &EstimatorSpec::new(Method::AiptwAipcw), &ns).unwrap();
            thetas.push(est.theta);
        }
        let m = thetas.iter().sum::<f64>() / thetas.len() as f64;
        println!("aiptw misspec={} mean={:.4} (elapsed {:?})", which.label(), m, t0.elapsed());
        means.push(m);
    }
    println!("truth ≈ 0.2064; means: {means:?}");
}
