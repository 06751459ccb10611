//! Closed-form nuisances implied by the built-in generators.
//!
//! Every generator draws its times from constant-baseline
//! proportional-hazards laws, so conditionally on the covariates the control
//! time, the treated time (delayed by the shift) and the censoring time are
//! all exponential. The oracle handles evaluate those laws directly:
//! `S(t|x,0) = exp(−λ_T(x) t)`, `S(t|x,1) = exp(−λ_T(x) (t − shift)⁺)`,
//! `G(t|x,a) = exp(−λ_C(x) t)` and `e(x)` from the assignment model.
//!
//! The doubly robust correction integral over a continuous censoring law is
//! computed by Gauss-Legendre panels split at the kinks of the integrand.
//! Oracle clipping is far looser than for fitted models (1e-6 instead of
//! 1e-2): the oracle laws satisfy positivity exactly, and a tight clip would
//! reintroduce bias into the transformations the oracles exist to certify.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::sync::OnceLock;

use super::{
    CensoringModel, FitError, NuisanceSet, OutcomeCurve, OutcomeModel, PropensityScore, Provenance,
};
use crate::product_limit::CensoringSurvival;
use crate::sim::DgpConfig;

pub const ORACLE_PROPENSITY_CLIP: f64 = 1e-6;
pub const ORACLE_CENSORING_CLIP: f64 = 1e-6;

/// True propensity of the generator, clipped.
pub struct OraclePropensity {
    cfg: DgpConfig,
    clip: f64,
    clip_hits: AtomicU64,
}

impl PropensityScore for OraclePropensity {
    fn propensity(&self, x: &[f64]) -> f64 {
        let e = self.cfg.propensity(x);
        if e < self.clip || e > 1.0 - self.clip {
            self.clip_hits.fetch_add(1, Ordering::Relaxed);
        }
        e.clamp(self.clip, 1.0 - self.clip)
    }

    fn clip_hits(&self) -> u64 {
        self.clip_hits.load(Ordering::Relaxed)
    }
}

/// Exponential censoring law with covariate-dependent rate.
pub struct OracleCensoring {
    rate: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    clip: f64,
    clip_hits: AtomicU64,
}

impl OracleCensoring {
    /// Censoring law `C|x ~ Exp(rate(x))`, identical in both arms.
    pub fn new(rate: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, clip: f64) -> Self {
        OracleCensoring { rate: Arc::new(rate), clip, clip_hits: AtomicU64::new(0) }
    }
}

impl CensoringSurvival for OracleCensoring {
    fn g_left(&self, t: f64, x: &[f64], _arm: u8) -> f64 {
        // A continuous law has no atoms: the left limit equals the value.
        let g = (-(self.rate)(x) * t).exp();
        if g < self.clip {
            self.clip_hits.fetch_add(1, Ordering::Relaxed);
            self.clip
        } else {
            g
        }
    }

    fn prepare<'m>(
        &'m self,
        x: &'m [f64],
        _arm: u8,
    ) -> Box<dyn crate::product_limit::CensorEval + 'm> {
        Box::new(PreparedOracleCensor { rate: (self.rate)(x), clip: self.clip })
    }
}

struct PreparedOracleCensor {
    rate: f64,
    clip: f64,
}

impl crate::product_limit::CensorEval for PreparedOracleCensor {
    fn g_left(&self, t: f64) -> f64 {
        (-self.rate * t).exp().max(self.clip)
    }
}

impl CensoringModel for OracleCensoring {
    fn dr_correction(
        &self,
        upto: f64,
        x: &[f64],
        _arm: u8,
        m: &mut dyn FnMut(f64) -> f64,
        m_kinks: &[f64],
    ) -> f64 {
        if upto <= 0.0 {
            return 0.0;
        }
        let lam = (self.rate)(x);
        // Integrand m(t)·λ e^{−λt} / max(e^{−λt}, clip)², smooth except at
        // the clip boundary and the kinks of m.
        let t_clip = -(self.clip.ln()) / lam;
        let mut cuts: Vec<f64> = m_knot_points(m_kinks, t_clip, upto);
        cuts.push(upto);
        let mut acc = 0.0;
        let mut lo = 0.0;
        for hi in cuts {
            if hi > lo {
                acc += gauss_legendre(lo, hi, |t| {
                    let g = (-lam * t).exp().max(self.clip);
                    m(t) * lam * (-lam * t).exp() / (g * g)
                });
                lo = hi;
            }
        }
        acc
    }

    fn clip_hits(&self) -> u64 {
        self.clip_hits.load(Ordering::Relaxed)
    }
}

fn m_knot_points(kinks: &[f64], t_clip: f64, upto: f64) -> Vec<f64> {
    let mut cuts: Vec<f64> = kinks
        .iter()
        .copied()
        .chain(std::iter::once(t_clip))
        .filter(|&t| t > 0.0 && t < upto)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    cuts
}

/// Delayed-exponential conditional outcome survival of the generator.
pub struct OracleOutcome {
    cfg: DgpConfig,
}

impl OutcomeModel for OracleOutcome {
    fn survival(&self, t: f64, x: &[f64], arm: u8) -> f64 {
        let delay = if arm == 1 { self.cfg.shift } else { 0.0 };
        if t <= delay {
            1.0
        } else {
            (-(self.cfg.event_rate(x)) * (t - delay)).exp()
        }
    }

    fn curve(&self, x: &[f64], arm: u8, tau: f64) -> OutcomeCurve {
        OutcomeCurve::Exponential {
            rate: self.cfg.event_rate(x),
            delay: if arm == 1 { self.cfg.shift } else { 0.0 },
            tau,
        }
    }
}

/// The oracle nuisance set implied by a built-in generator: the exact
/// propensity, censoring survival and outcome survival of its laws.
pub fn make_oracle_nuisances(dgp: &DgpConfig, _tau: f64) -> Result<NuisanceSet, FitError> {
    dgp.validate().map_err(|e| FitError::UnsupportedDgp(e.to_string()))?;
    let cfg_c = dgp.clone();
    Ok(NuisanceSet {
        propensity: Some(Arc::new(OraclePropensity {
            cfg: dgp.clone(),
            clip: ORACLE_PROPENSITY_CLIP,
            clip_hits: AtomicU64::new(0),
        })),
        censoring: Some(Arc::new(OracleCensoring::new(
            move |x| cfg_c.censoring_rate(x),
            ORACLE_CENSORING_CLIP,
        ))),
        outcome: Some(Arc::new(OracleOutcome { cfg: dgp.clone() })),
        tags: super::NuisanceTags {
            propensity: Provenance::Oracle,
            censoring: Provenance::Oracle,
            outcome: Provenance::Oracle,
        },
    })
}

// ── Gauss-Legendre quadrature ───────────────────────────────────────────────

const GL_ORDER: usize = 32;

fn gl_nodes() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static NODES: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_ORDER;
        let mut xs = [0.0; GL_ORDER];
        let mut ws = [0.0; GL_ORDER];
        for i in 0..n {
            let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..64 {
                let (p, d) = legendre(n, t);
                dp = d;
                let step = p / d;
                t -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            xs[i] = t;
            ws[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
        (xs, ws)
    })
}

/// Legendre polynomial P_n and its derivative at t, by recurrence.
fn legendre(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, dp)
}

/// 32-point Gauss-Legendre approximation of ∫ₐᵇ f.
pub fn gauss_legendre(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (xs, ws) = gl_nodes();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for i in 0..GL_ORDER {
        acc += ws[i] * f(mid + half * xs[i]);
    }
    acc * half
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::DgpKind;

    #[test]
    fn quadrature_is_exact_on_polynomials_and_exponentials() {
        // Degree-5 polynomial over [0, 2]: ∫ t^5 = 64/6.
        let p = gauss_legendre(0.0, 2.0, |t| t.powi(5));
        assert!((p - 64.0 / 6.0).abs() < 1e-12);
        // ∫_0^3 e^t = e³ − 1.
        let e = gauss_legendre(0.0, 3.0, f64::exp);
        assert!((e - (3f64.exp() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn scenario1_censoring_oracle_is_exponential_003() {
        let cfg = DgpConfig::preset(DgpKind::RctIndep);
        let ns = make_oracle_nuisances(&cfg, 25.0).unwrap();
        let g = ns.censoring.as_ref().unwrap();
        for t in [0.0, 1.0, 10.0, 25.0] {
            let expected = (-0.03_f64 * t).exp();
            assert!((g.g_left(t, &[1.0, 1.0, -1.0, 1.0], 0) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn scenario1_propensity_oracle_is_half() {
        let cfg = DgpConfig::preset(DgpKind::RctIndep);
        let ns = make_oracle_nuisances(&cfg, 25.0).unwrap();
        assert_eq!(ns.propensity.as_ref().unwrap().propensity(&[9.0, 0.0, 0.0, 0.0]), 0.5);
    }

    #[test]
    fn control_arm_survival_matches_direct_substitution() {
        // At x = μ = (1,1,−1,1): rate = 0.01·e^{0.5+0.5+0.5+0.5} = 0.01 e².
        let cfg = DgpConfig::preset(DgpKind::RctIndep);
        let ns = make_oracle_nuisances(&cfg, 25.0).unwrap();
        let s = ns.outcome.as_ref().unwrap();
        let x = [1.0, 1.0, -1.0, 1.0];
        for t in [0.5, 3.0, 20.0] {
            // β₀ᵀx = 2, so the conditional rate is 0.01·e².
            let expected = (-0.01 * (2.0f64).exp() * t).exp();
            assert!((s.survival(t, &x, 0) - expected).abs() < 1e-12);
        }
        // Treated arm is delayed by the shift.
        assert_eq!(s.survival(5.0, &x, 1), 1.0);
        assert!(s.survival(15.0, &x, 1) < 1.0);
    }

    #[test]
    fn dr_correction_matches_closed_form_for_constant_m() {
        // With m ≡ 1 and no clipping active:
        // ∫₀^u λe^{−λt}/e^{−2λt} dt = ∫₀^u λe^{λt} dt = e^{λu} − 1.
        let oc = OracleCensoring::new(|_| 0.2, 1e-12);
        let got = oc.dr_correction(3.0, &[], 0, &mut |_| 1.0, &[]);
        let expected = (0.2f64 * 3.0).exp() - 1.0;
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn dr_correction_splits_at_kinks() {
        // m(t) = max(t − 1, 0), λ = 0.5, upto = 2:
        // ∫_1^2 (t−1)·0.5 e^{0.5t} dt = 0.5·[(t−1)·2e^{0.5t} − 4e^{0.5t}]' …
        // evaluate numerically with a fine Simpson oracle instead.
        let lam = 0.5f64;
        let oc = OracleCensoring::new(move |_| lam, 1e-12);
        let got = oc.dr_correction(2.0, &[], 0, &mut |t| (t - 1.0).max(0.0), &[1.0]);
        let mut simpson = 0.0;
        let n = 200_000;
        let h = 2.0 / n as f64;
        for k in 0..n {
            let a = k as f64 * h;
            let f = |t: f64| (t - 1.0).max(0.0) * lam * (lam * t).exp();
            simpson += h / 6.0 * (f(a) + 4.0 * f(a + h / 2.0) + f(a + h));
        }
        assert!((got - simpson).abs() < 1e-8, "{got} vs {simpson}");
    }
}
