use rmst_core::nuisance::oracle::OracleCensoring;
use rmst_core::nuisance::CensoringModel;

// Fixed subject: event value y, censoring Exp(lam). Brute-force E_C[T*_DR].
fn main() {
    let tau = 1.0;
    let lam = 1.7; // censoring rate at this x
    let y: f64 = 0.62; // realized T^(a) ∧ τ
    let m = |t: f64| t + (1.0 - (-3.0 * (tau - t)).exp()) / 3.0; // arbitrary smooth m

    let oc = OracleCensoring::new(move |_| lam, 1e-6);
    let g = |t: f64| (-lam * t).exp();

    // Monte Carlo over C with a deterministic grid of quantiles (1e7 points).
    let n = 10_000_000u64;
    let mut acc = 0.0;
    for k in 0..n {
        let u = (k as f64 + 0.5) / n as f64;
        let c = -(1.0 - u).ln() / lam;
        let tmin = y.min(c);
        let leading = if y <= c { y / g(y) } else { m(c) / g(c) };
        let corr = {
            use rmst_core::product_limit::CensoringSurvival;
            let _ = &oc as &dyn CensoringSurvival;
            oc.dr_correction(tmin, &[], 0, &mut |t| m(t), &[])
        };
        acc += leading - corr;
    }
    println!("E[T*_DR] = {:.8}  (should be y = {y})", acc / n as f64);

    // Also integral identity: E[term2] vs E[term3] separately.
    let mut t2 = 0.0;
    let mut t3 = 0.0;
    for k in 0..n {
        let u = (k as f64 + 0.5) / n as f64;
        let c = -(1.0 - u).ln() / lam;
        if c < y {
            t2 += m(c) / g(c);
        }
        t3 += oc.dr_correction(y.min(c), &[], 0, &mut |t| m(t), &[]);
    }
    println!("E[term2] = {:.8} E[term3] = {:.8} diff {:.2e}", t2 / n as f64, t3 / n as f64, (t2 - t3) / n as f64);
}
