//! Cox proportional-hazards fitting.
//!
//! Newton-Raphson on the Breslow-ties partial likelihood with step-halving,
//! followed by the Breslow baseline cumulative hazard at the target-event
//! times. The linear predictor is max-centered inside the risk-set sweeps so
//! large coefficients cannot overflow the exponentials.

use std::sync::Arc;

use super::{FeatureMap, FitError, OutcomeCurve};
use crate::data::RestrictedDataset;
use crate::linalg::{cholesky_inverse, cholesky_solve, SymMatrix};

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 30;
const MONOTONE_NORM: f64 = 50.0;

/// Which time-to-event the model describes. `Censoring` flips the restricted
/// status, so censoring events become the modelled outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoxTarget {
    Event,
    Censoring,
}

/// Which subjects enter the fit, and whether treatment joins the design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoxStratum {
    Arm(u8),
    PooledWithTreatment,
}

/// Breslow baseline cumulative hazard: jump times with cumulative values.
#[derive(Debug, Clone)]
pub struct Baseline {
    times: Arc<[f64]>,
    cum: Arc<[f64]>,
}

impl Baseline {
    pub fn empty() -> Self {
        Baseline { times: Arc::from(Vec::new().into_boxed_slice()), cum: Arc::from(Vec::new().into_boxed_slice()) }
    }

    pub fn new(times: Vec<f64>, cum: Vec<f64>) -> Self {
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(cum.windows(2).all(|w| w[0] <= w[1]));
        Baseline { times: Arc::from(times.into_boxed_slice()), cum: Arc::from(cum.into_boxed_slice()) }
    }

    /// Λ̂₀(t), right-continuous; Λ̂₀(0⁻) = 0.
    pub fn cumhaz(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&u| u <= t);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// Λ̂₀(t⁻): the cumulative hazard just before t.
    pub fn cumhaz_left(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&u| u < t);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    pub fn times(&self) -> &Arc<[f64]> {
        &self.times
    }

    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.cum.iter().copied())
    }
}

#[derive(Debug, Clone)]
pub struct CoxDiagnostics {
    pub iterations: usize,
    pub grad_norm: f64,
    /// Divergent-coefficient guard tripped (‖β‖ > 50); the partial fit is
    /// still returned.
    pub monotone: bool,
    /// Inverse observed information, row-major, when available.
    pub covariance: Option<Vec<f64>>,
    pub log_likelihood: f64,
}

/// A fitted Cox model: coefficients on the expanded design plus the Breslow
/// baseline. Predicted survival is `exp(−Λ̂₀(t)·exp(βᵀz))`, right-continuous
/// in t, with constant extension beyond the last observed target event.
#[derive(Debug, Clone)]
pub struct CoxModel {
    coefficients: Vec<f64>,
    baseline: Baseline,
    target: CoxTarget,
    stratum: CoxStratum,
    features: FeatureMap,
    pub diagnostics: CoxDiagnostics,
}

impl CoxModel {
    /// The null model: zero coefficients, zero hazard. Used for strata with
    /// no target events (e.g. a censoring-free arm).
    pub fn null(target: CoxTarget, stratum: CoxStratum, features: FeatureMap, q: usize) -> Self {
        CoxModel {
            coefficients: vec![0.0; q],
            baseline: Baseline::empty(),
            target,
            stratum,
            features,
            diagnostics: CoxDiagnostics {
                iterations: 0,
                grad_norm: 0.0,
                monotone: false,
                covariance: None,
                log_likelihood: 0.0,
            },
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn baseline(&self) -> &Baseline {
        &self.baseline
    }

    pub fn target(&self) -> CoxTarget {
        self.target
    }

    pub fn stratum(&self) -> CoxStratum {
        self.stratum
    }

    /// exp(βᵀz) for the subject's expanded design row.
    pub fn risk_score(&self, x: &[f64], arm: u8) -> f64 {
        self.linear_predictor(x, arm).exp()
    }

    pub fn linear_predictor(&self, x: &[f64], arm: u8) -> f64 {
        match self.stratum {
            CoxStratum::Arm(_) => self.features.dot(&self.coefficients, x),
            CoxStratum::PooledWithTreatment => {
                let q = self.coefficients.len() - 1;
                self.features.dot(&self.coefficients[..q], x)
                    + self.coefficients[q] * arm as f64
            }
        }
    }

    /// Ŝ(t|x) = exp(−Λ̂₀(t)·exp(βᵀz)) ∈ [0, 1].
    pub fn predict_survival(&self, x: &[f64], arm: u8, t: f64) -> f64 {
        (-self.baseline.cumhaz(t) * self.risk_score(x, arm)).exp()
    }

    /// Λ̂₀(t⁻)·exp(βᵀz) evaluated as a left limit, for censoring survival.
    pub fn cumhaz_left(&self, t: f64) -> f64 {
        self.baseline.cumhaz_left(t)
    }

    /// The subject's full survival curve on the baseline grid up to τ.
    pub fn survival_curve(&self, x: &[f64], arm: u8, tau: f64) -> OutcomeCurve {
        let r = self.risk_score(x, arm);
        let times = self.baseline.times.clone();
        let surv: Vec<f64> = self.baseline.cum.iter().map(|&c| (-c * r).exp()).collect();
        OutcomeCurve::from_step(times, surv, tau)
    }
}

/// Fits a Cox model on the restricted data by Newton iteration on the
/// Breslow partial likelihood.
pub fn fit_cox(
    rd: &RestrictedDataset,
    target: CoxTarget,
    stratum: CoxStratum,
    features: FeatureMap,
) -> Result<CoxModel, FitError> {
    let rows: Vec<usize> = match stratum {
        CoxStratum::Arm(a) => (0..rd.n()).filter(|&i| rd.arm(i) == a).collect(),
        CoxStratum::PooledWithTreatment => (0..rd.n()).collect(),
    };
    let p = rd.covariate_dim();
    let base_q = features.expanded_len(p);
    let q = base_q + matches!(stratum, CoxStratum::PooledWithTreatment) as usize;
    let m = rows.len();
    if m == 0 {
        return Err(FitError::NoEvents);
    }

    // Expanded design, times, statuses for the stratum. Subjects still under
    // observation at τ are administratively censored there for likelihood
    // purposes: the restricted status δᵗ recodes them as events for the
    // estimand, but feeding that cluster of ties at τ into the partial
    // likelihood would attenuate the coefficients.
    let tau = rd.tau();
    let mut z = Vec::with_capacity(m * q);
    let mut time = Vec::with_capacity(m);
    let mut event = Vec::with_capacity(m);
    for &i in &rows {
        features.expand(rd.covariates(i), &mut z);
        if matches!(stratum, CoxStratum::PooledWithTreatment) {
            z.push(rd.arm(i) as f64);
        }
        let (raw_t, raw_s) = (rd.base().time(i), rd.base().status(i));
        time.push(rd.rtime(i));
        event.push(match target {
            CoxTarget::Event => {
                if raw_t <= tau {
                    raw_s
                } else {
                    0
                }
            }
            CoxTarget::Censoring => {
                if raw_t < tau {
                    1 - raw_s
                } else {
                    0
                }
            }
        });
    }
    if !event.contains(&1) {
        return Err(FitError::NoEvents);
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| time[a].partial_cmp(&time[b]).unwrap());

    let sweep = |beta: &[f64], want_derivs: bool| -> (f64, Vec<f64>, Option<SymMatrix>) {
        let eta: Vec<f64> = (0..m).map(|i| dot(&z[i * q..(i + 1) * q], beta)).collect();
        let c = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ex: Vec<f64> = eta.iter().map(|&e| (e - c).exp()).collect();

        let mut ll = 0.0;
        let mut grad = vec![0.0; q];
        let mut info = want_derivs.then(|| SymMatrix::zeros(q));
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; q];
        let mut s2 = vec![0.0; q * q];

        let mut hi = m;
        while hi > 0 {
            let t = time[order[hi - 1]];
            let mut lo = hi;
            while lo > 0 && time[order[lo - 1]] == t {
                lo -= 1;
                let i = order[lo];
                let w = ex[i];
                s0 += w;
                let zi = &z[i * q..(i + 1) * q];
                for a in 0..q {
                    s1[a] += w * zi[a];
                }
                if want_derivs {
                    for a in 0..q {
                        let wza = w * zi[a];
                        for b in 0..=a {
                            s2[a * q + b] += wza * zi[b];
                        }
                    }
                }
            }
            let mut dk = 0.0;
            for &i in &order[lo..hi] {
                if event[i] == 1 {
                    dk += 1.0;
                    ll += eta[i] - c;
                    let zi = &z[i * q..(i + 1) * q];
                    for a in 0..q {
                        grad[a] += zi[a];
                    }
                }
            }
            if dk > 0.0 {
                ll -= dk * s0.ln();
                let inv_s0 = 1.0 / s0;
                for a in 0..q {
                    grad[a] -= dk * s1[a] * inv_s0;
                }
                if let Some(info) = info.as_mut() {
                    for a in 0..q {
                        let ma = s1[a] * inv_s0;
                        for b in 0..=a {
                            let v = dk * (s2[a * q + b] * inv_s0 - ma * s1[b] * inv_s0);
                            info.add(a, b, v);
                            if a != b {
                                info.add(b, a, v);
                            }
                        }
                    }
                }
            }
            hi = lo;
        }
        (ll, grad, info)
    };

    let mut beta = vec![0.0; q];
    let (mut ll, mut grad, mut info) = sweep(&beta, true);
    let mut iterations = 0;
    let mut monotone = false;
    loop {
        let gnorm = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
        if gnorm <= GRAD_TOL {
            break;
        }
        if iterations >= MAX_ITER {
            return Err(FitError::NoConverge(MAX_ITER));
        }
        let factor = match info.as_ref().unwrap().cholesky(1e-12) {
            Some(f) => f,
            None => return Err(FitError::Singular),
        };
        let delta = cholesky_solve(&factor, q, &grad);
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = beta.iter().zip(&delta).map(|(b, d)| b + scale * d).collect();
            let (ll_t, grad_t, info_t) = sweep(&trial, true);
            if ll_t > ll - 1e-12 * ll.abs().max(1.0) {
                beta = trial;
                ll = ll_t;
                grad = grad_t;
                info = info_t;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        iterations += 1;
        if !accepted {
            // The quadratic model stopped improving; accept only if the
            // score is already negligible.
            let gnorm = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
            if gnorm <= 1e-5 {
                break;
            }
            return Err(FitError::NoConverge(iterations));
        }
        if beta.iter().map(|b| b * b).sum::<f64>().sqrt() > MONOTONE_NORM {
            monotone = true;
            break;
        }
    }

    // Breslow baseline at the final coefficients.
    let eta: Vec<f64> = (0..m).map(|i| dot(&z[i * q..(i + 1) * q], &beta)).collect();
    let c = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ex: Vec<f64> = eta.iter().map(|&e| (e - c).exp()).collect();
    let mut jump_t = Vec::new();
    let mut jump_v = Vec::new();
    {
        let mut s0 = 0.0;
        let mut hi = m;
        while hi > 0 {
            let t = time[order[hi - 1]];
            let mut lo = hi;
            while lo > 0 && time[order[lo - 1]] == t {
                lo -= 1;
                s0 += ex[order[lo]];
            }
            let dk = order[lo..hi].iter().filter(|&&i| event[i] == 1).count() as f64;
            if dk > 0.0 {
                jump_t.push(t);
                jump_v.push(dk * (-c).exp() / s0);
            }
            hi = lo;
        }
    }
    jump_t.reverse();
    jump_v.reverse();
    let mut acc = 0.0;
    for v in jump_v.iter_mut() {
        acc += *v;
        *v = acc;
    }

    let grad_norm = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let covariance =
        info.as_ref().and_then(|i| i.cholesky(1e-12)).map(|f| cholesky_inverse(&f, q));
    Ok(CoxModel {
        coefficients: beta,
        baseline: Baseline::new(jump_t, jump_v),
        target,
        stratum,
        features,
        diagnostics: CoxDiagnostics {
            iterations,
            grad_norm,
            monotone,
            covariance,
            log_likelihood: ll,
        },
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
