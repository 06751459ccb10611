use rayon::prelude::*;
use rmst_core::estimators::{estimate, EstimatorSpec, Method};
use rmst_core::nuisance::*;
use rmst_core::sim::*;
use std::sync::Arc;

fn main() {
    let dgp = DgpConfig::preset(DgpKind::Misspec);
    let tau = 1.0;
    let truth = 0.20650;
    for (label, cross) in [("same-sample fit", false), ("independent fit", true)] {
        let thetas: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|rep| {
                let s = generate(&dgp, 10_000, &mut rmst_core::rng::stream(42, "miscross", &[rep])).unwrap();
                let rd = s.data.restrict(tau).unwrap();
                let fit_rd = if cross {
                    let s2 = generate(&dgp, 10_000, &mut rmst_core::rng::stream(43, "miscross-indep", &[rep])).unwrap();
                    s2.data.restrict(tau).unwrap()
                } else {
                    rd.clone()
                };
                let m0 = fit_cox(&fit_rd, CoxTarget::Event, CoxStratum::Arm(0), FeatureMap::SquaresOnly).unwrap();
                let m1 = fit_cox(&fit_rd, CoxTarget::Event, CoxStratum::Arm(1), FeatureMap::SquaresOnly).unwrap();
                let mut ns = make_oracle_nuisances(&dgp, tau).unwrap();
                ns.outcome = Some(Arc::new(CoxOutcomeTwoLearner::new(Arc::new(m0), Arc::new(m1))));
                estimate(&rd, &EstimatorSpec::new(Method::AiptwAipcw), &ns).unwrap().theta
            })
            .collect();
        let m = thetas.iter().sum::<f64>() / thetas.len() as f64;
        let sd = (thetas.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / 49.0).sqrt();
        let mut sorted = thetas.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "{label:18} bias {:+.5} sd {:.5} se {:.5} median-bias {:+.5}",
            m - truth, sd, sd / 50f64.sqrt(), sorted[25] - truth
        );
    }
}
