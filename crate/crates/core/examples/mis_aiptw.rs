use rayon::prelude::*;
use rmst_core::estimators::{estimate, EstimatorSpec, Method};
use rmst_core::nuisance::*;
use rmst_core::sim::*;

fn main() {
    let dgp = DgpConfig::preset(DgpKind::Misspec);
    let tau = 1.0;
    let truth = 0.20650;
    let sq = FeatureMap::SquaresOnly;
    let full = FeatureMap::SquaresAndCross;
    let variants: Vec<(&str, bool, bool)> = vec![
        // (label, oracle_g, oracle_e) ; outcome model always misspecified-fitted
        ("fitted G, fitted e", false, false),
        ("oracle G, fitted e", true, false),
        ("fitted G, oracle e", false, true),
        ("oracle G, oracle e", true, true),
    ];
    for (label, og, oe) in variants {
        let thetas: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|rep| {
                let s = generate(&dgp, 10_000, &mut rmst_core::rng::stream(42, "misaiptw", &[rep])).unwrap();
                let rd = s.data.restrict(tau).unwrap();
                let oracle = make_oracle_nuisances(&dgp, tau).unwrap();
                let mut ns = oracle.clone();
                // misspecified outcome (squares only)
                let cfg_o = NuisanceConfig { outcome_features: sq, ..Default::default() };
                let m0 = fit_cox(&rd, CoxTarget::Event, CoxStratum::Arm(0), cfg_o.outcome_features).unwrap();
                let m1 = fit_cox(&rd, CoxTarget::Event, CoxStratum::Arm(1), cfg_o.outcome_features).unwrap();
                ns.outcome = Some(std::sync::Arc::new(CoxOutcomeTwoLearner::new(
                    std::sync::Arc::new(m0), std::sync::Arc::new(m1))));
                if !og {
                    let cfg_g = NuisanceConfig { censoring_features: full, censoring_clip: 1e-6, ..Default::default() };
                    ns.censoring = Some(fit_censoring_model(&rd, &cfg_g).unwrap());
                }
                if !oe {
                    let m = fit_logistic(rd.base(), full, (1e-6, 1.0 - 1e-6)).unwrap();
                    ns.propensity = Some(std::sync::Arc::new(m));
                }
                estimate(&rd, &EstimatorSpec::new(Method::AiptwAipcw), &ns).unwrap().theta
            })
            .collect();
        let m = thetas.iter().sum::<f64>() / thetas.len() as f64;
        let sd = (thetas.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / 49.0).sqrt();
        println!("{label:22} bias {:+.5} sd {:.5} (se of mean {:.5})", m - truth, sd, sd / 50f64.sqrt());
    }
}
