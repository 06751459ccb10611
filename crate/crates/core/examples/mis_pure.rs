use rayon::prelude::*;
use rmst_core::estimators::{estimate, EstimatorSpec, Method};
use rmst_core::nuisance::*;
use rmst_core::sim::*;
use std::sync::Arc;

// Deliberately wrong but smooth outcome model: exponential with doubled rate
// and no treatment delay.
struct WrongOutcome {
    dgp: DgpConfig,
}
impl OutcomeModel for WrongOutcome {
    fn survival(&self, t: f64, x: &[f64], _arm: u8) -> f64 {
        (-(2.0 * self.dgp.event_rate(x)) * t).exp()
    }
    fn curve(&self, x: &[f64], _arm: u8, tau: f64) -> OutcomeCurve {
        OutcomeCurve::Exponential { rate: 2.0 * self.dgp.event_rate(x), delay: 0.0, tau }
    }
}

fn main() {
    let dgp = DgpConfig::preset(DgpKind::Misspec);
    let tau = 1.0;
    let truth = 0.20650;
    let thetas: Vec<(f64, f64)> = (0..50u64)
        .into_par_iter()
        .map(|rep| {
            let s = generate(&dgp, 10_000, &mut rmst_core::rng::stream(42, "mispure", &[rep])).unwrap();
            let rd = s.data.restrict(tau).unwrap();
            let mut ns = make_oracle_nuisances(&dgp, tau).unwrap();
            ns.outcome = Some(Arc::new(WrongOutcome { dgp: dgp.clone() }));
            let qr = estimate(&rd, &EstimatorSpec::new(Method::AiptwAipcw), &ns).unwrap().theta;
            // Also the DR arm-means directly (CUT check under wrong S, oracle G).
            let pos = rmst_core::transforms::batch(&rd, &ns, rmst_core::transforms::TransformTag::Dr).unwrap();
            let mut diff = 0.0;
            let mut cnt = 0.0;
            for i in 0..rd.n() {
                let latent = if rd.arm(i) == 1 { s.latent.t1[i] } else { s.latent.t0[i] }.min(tau);
                diff += pos[i].value - latent;
                cnt += 1.0;
            }
            (qr, diff / cnt)
        })
        .collect();
    let qr: Vec<f64> = thetas.iter().map(|t| t.0).collect();
    let dr: Vec<f64> = thetas.iter().map(|t| t.1).collect();
    for (name, v, target) in [("qr theta", &qr, truth), ("dr paired-diff", &dr, 0.0)] {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / 49.0).sqrt();
        println!("{name:15} bias {:+.6} sd {:.5} se {:.6}", m - target, sd, sd / 50f64.sqrt());
    }
}
