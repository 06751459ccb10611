use rayon::prelude::*;
use rmst_core::estimators::{estimate, EstimatorSpec, Method};
use rmst_core::nuisance::{fit_censoring_model, make_oracle_nuisances, Learner, NuisanceConfig, NuisanceSet};
use rmst_core::sim::*;

fn run(label: &str, n: usize, make: impl Fn(&rmst_core::data::RestrictedDataset) -> NuisanceSet + Sync) {
    let dgp = DgpConfig::preset(DgpKind::RctCond);
    let tau = 25.0;
    let thetas: Vec<(f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|rep| {
            let s = generate(&dgp, n, &mut rmst_core::rng::stream(42, "ipcwdiag", &[n as u64, rep])).unwrap();
            let rd = s.data.restrict(tau).unwrap();
            let ns = make(&rd);
            let a = estimate(&rd, &EstimatorSpec::new(Method::IpcwKm), &ns).unwrap().theta;
            let b = estimate(&rd, &EstimatorSpec::new(Method::AiptwAipcw), &ns)
                .map(|e| e.theta)
                .unwrap_or(f64::NAN);
            (a, b)
        })
        .collect();
    for (name, vals) in [("ipcw_km", 0usize), ("aiptw", 1)] {
        let v: Vec<f64> = thetas.iter().map(|t| if vals == 0 { t.0 } else { t.1 }).filter(|v| v.is_finite()).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
        println!("{label:28} {name:8} n={n}: bias {:+.4} sd {:.4} band {:.4}", m - 7.1244, sd, 3.0 * sd / 10.0);
    }
}

fn main() {
    let dgp = DgpConfig::preset(DgpKind::RctCond);
    // Oracle G + oracle everything.
    run("oracle", 4000, |_rd| make_oracle_nuisances(&dgp, 25.0).unwrap());
    // Fitted per-arm censoring, loose clip.
    for (gclip, label) in [(1e-6, "fitted per-arm g=1e-6"), (0.01, "fitted per-arm g=0.01")] {
        let dgp = dgp.clone();
        run(label, 4000, move |rd| {
            let cfg = NuisanceConfig { censoring_clip: gclip, propensity_clip: 1e-6, ..Default::default() };
            let mut ns = make_oracle_nuisances(&dgp, 25.0).unwrap();
            ns.censoring = Some(fit_censoring_model(rd, &cfg).unwrap());
            ns
        });
    }
    let dgp = DgpConfig::preset(DgpKind::RctCond);
    // Pooled censoring fit.
    run("fitted pooled g=0.01", 4000, move |rd| {
        let cfg = NuisanceConfig {
            censoring_clip: 0.01,
            censoring_learner: Learner::SinglePooled,
            ..Default::default()
        };
        let mut ns = make_oracle_nuisances(&dgp, 25.0).unwrap();
        ns.censoring = Some(fit_censoring_model(rd, &cfg).unwrap());
        ns
    });
}
