//! Logistic propensity model fitted by iteratively reweighted least squares.

use std::sync::atomic::{AtomicU64, Ordering};

use super::{FeatureMap, FitError};
use crate::data::Dataset;
use crate::linalg::{cholesky_inverse, cholesky_solve, SymMatrix};

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 30;

#[derive(Debug)]
pub struct LogisticDiagnostics {
    pub iterations: usize,
    pub grad_norm: f64,
    /// More than 90% of one arm had predictions pinned at the clip bounds.
    pub separation: bool,
    /// Inverse observed information of (intercept, coefficients), row-major.
    pub covariance: Option<Vec<f64>>,
}

/// Maximum-likelihood logistic regression of treatment on `(1, z(x))`,
/// predicting the propensity score ê(x) clipped to the configured bounds.
#[derive(Debug)]
pub struct PropensityModel {
    intercept: f64,
    coefficients: Vec<f64>,
    features: FeatureMap,
    clip: (f64, f64),
    clip_hits: AtomicU64,
    pub diagnostics: LogisticDiagnostics,
}

impl PropensityModel {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.intercept + self.features.dot(&self.coefficients, x)
    }

    /// Raw sigmoid prediction, before clipping.
    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(x))
    }

    /// Prediction clipped into `[lo, hi] ⊂ (0, 1)`.
    pub fn predict_clipped(&self, x: &[f64]) -> f64 {
        let p = self.predict_raw(x);
        if p < self.clip.0 {
            self.clip_hits.fetch_add(1, Ordering::Relaxed);
            self.clip.0
        } else if p > self.clip.1 {
            self.clip_hits.fetch_add(1, Ordering::Relaxed);
            self.clip.1
        } else {
            p
        }
    }

    pub fn clip_hit_count(&self) -> u64 {
        self.clip_hits.load(Ordering::Relaxed)
    }
}

#[inline]
fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli log-likelihood, numerically stable in the linear predictor.
#[inline]
fn loglik_term(a: f64, eta: f64) -> f64 {
    a * eta - (eta.max(0.0) + (-eta.abs()).exp().ln_1p())
}

/// Fits the propensity model by Newton/IRLS with step-halving, stopping when
/// the sum-score norm falls below 1e-8 or after 100 iterations.
pub fn fit_logistic(
    d: &Dataset,
    features: FeatureMap,
    clip: (f64, f64),
) -> Result<PropensityModel, FitError> {
    let n = d.n();
    let q = features.expanded_len(d.covariate_dim()) + 1;
    let mut z = Vec::with_capacity(n * q);
    for i in 0..n {
        z.push(1.0);
        features.expand(d.covariates(i), &mut z);
    }
    let a: Vec<f64> = (0..n).map(|i| d.arm(i) as f64).collect();

    let eval = |theta: &[f64]| -> (f64, Vec<f64>, SymMatrix) {
        let mut ll = 0.0;
        let mut grad = vec![0.0; q];
        let mut info = SymMatrix::zeros(q);
        for i in 0..n {
            let zi = &z[i * q..(i + 1) * q];
            let eta: f64 = zi.iter().zip(theta).map(|(u, v)| u * v).sum();
            let p = sigmoid(eta);
            ll += loglik_term(a[i], eta);
            let resid = a[i] - p;
            let w = p * (1.0 - p);
            for r in 0..q {
                grad[r] += resid * zi[r];
                let wr = w * zi[r];
                for c in 0..=r {
                    info.add(r, c, wr * zi[c]);
                }
            }
        }
        for r in 0..q {
            for c in r + 1..q {
                info.data[r * q + c] = info.data[c * q + r];
            }
        }
        (ll, grad, info)
    };

    let mut theta = vec![0.0; q];
    let (mut ll, mut grad, mut info) = eval(&theta);
    let mut iterations = 0;
    loop {
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm <= GRAD_TOL {
            break;
        }
        if iterations >= MAX_ITER {
            return Err(FitError::NoConverge(MAX_ITER));
        }
        let factor = match info.cholesky(1e-12) {
            Some(f) => f,
            None => return Err(FitError::Singular),
        };
        let delta = cholesky_solve(&factor, q, &grad);
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + scale * d).collect();
            let (ll_t, grad_t, info_t) = eval(&trial);
            if ll_t > ll - 1e-12 * ll.abs().max(1.0) {
                theta = trial;
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
            let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if gnorm <= 1e-5 {
                break;
            }
            return Err(FitError::NoConverge(iterations));
        }
    }

    let covariance = info.cholesky(1e-12).map(|f| cholesky_inverse(&f, q));
    let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let model = PropensityModel {
        intercept: theta[0],
        coefficients: theta[1..].to_vec(),
        features,
        clip,
        clip_hits: AtomicU64::new(0),
        diagnostics: LogisticDiagnostics {
            iterations,
            grad_norm,
            separation: false,
            covariance,
        },
    };

    // Separation check: fraction of one arm pinned at the clip bounds.
    let mut pinned = [0usize; 2];
    let mut counts = [0usize; 2];
    for i in 0..n {
        let arm = d.arm(i) as usize;
        counts[arm] += 1;
        let p = model.predict_raw(d.covariates(i));
        if p <= clip.0 || p >= clip.1 {
            pinned[arm] += 1;
        }
    }
    let separation = (0..2).any(|g| counts[g] > 0 && pinned[g] * 10 > counts[g] * 9);
    let mut model = model;
    model.diagnostics.separation = separation;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RawRecord;
    use rand::Rng;

    fn dataset(xs: &[Vec<f64>], arms: &[u8]) -> Dataset {
        let rows: Vec<RawRecord> = xs
            .iter()
            .zip(arms)
            .map(|(x, &a)| RawRecord {
                covariates: x.clone(),
                treatment: a as f64,
                time: 1.0,
                status: 1.0,
            })
            .collect();
        Dataset::validate(&rows, xs[0].len()).unwrap()
    }

    #[test]
    fn mirrored_arms_give_zero_coefficients() {
        // Identical covariate multisets in both arms force ê(x) ≡ 1/2.
        let mut xs = Vec::new();
        let mut arms = Vec::new();
        for v in [-1.0, -0.25, 0.5, 2.0] {
            xs.push(vec![v]);
            arms.push(1);
            xs.push(vec![v]);
            arms.push(0);
        }
        let m = fit_logistic(&dataset(&xs, &arms), FeatureMap::Raw, (0.01, 0.99)).unwrap();
        assert!(m.intercept().abs() <= 1e-6);
        assert!(m.coefficients()[0].abs() <= 1e-6);
    }

    #[test]
    fn binary_covariate_recovers_table_log_odds() {
        // x=1 stratum: 30 treated of 50; x=0 stratum: 20 treated of 50.
        // Saturated logistic: intercept = logit(0.4), slope = logit(0.6)−logit(0.4).
        let mut xs = Vec::new();
        let mut arms = Vec::new();
        for i in 0..50 {
            xs.push(vec![1.0]);
            arms.push((i < 30) as u8);
            xs.push(vec![0.0]);
            arms.push((i < 20) as u8);
        }
        let m = fit_logistic(&dataset(&xs, &arms), FeatureMap::Raw, (0.01, 0.99)).unwrap();
        let logit = |p: f64| (p / (1.0 - p)).ln();
        assert!((m.intercept() - logit(0.4)).abs() < 1e-7);
        assert!((m.coefficients()[0] - (logit(0.6) - logit(0.4))).abs() < 1e-7);
        // Equivalently the 2×2 log-odds-ratio log((30/20)/(20/30)).
        let lor = ((30.0_f64 / 20.0) / (20.0 / 30.0)).ln();
        assert!((m.coefficients()[0] - lor).abs() < 1e-7);
    }

    #[test]
    fn score_equations_hold_at_optimum() {
        let mut rng = crate::rng::stream(5, "logistic-score", &[]);
        let n = 2000;
        let mut xs = Vec::new();
        let mut arms = Vec::new();
        for _ in 0..n {
            let x = vec![rng.gen::<f64>() - 0.5, rng.gen::<f64>() * 2.0];
            let p = sigmoid(0.3 - 0.8 * x[0] + 0.5 * x[1]);
            arms.push((rng.gen::<f64>() < p) as u8);
            xs.push(x);
        }
        let d = dataset(&xs, &arms);
        let m = fit_logistic(&d, FeatureMap::Raw, (0.01, 0.99)).unwrap();
        let mut score = vec![0.0; 3];
        for i in 0..n {
            let r = arms[i] as f64 - m.predict_raw(d.covariates(i));
            score[0] += r;
            score[1] += r * xs[i][0];
            score[2] += r * xs[i][1];
        }
        for s in score {
            assert!(s.abs() <= 1e-6 * n as f64);
        }
    }

    #[test]
    fn randomized_assignment_recovers_null_model() {
        // A ~ Bernoulli(1/2) independent of X: coefficients within 3 SE of 0.
        let mut rng = crate::rng::stream(6, "rct-null", &[]);
        let n = 10_000;
        let mut xs = Vec::new();
        let mut arms = Vec::new();
        for _ in 0..n {
            xs.push(vec![
                rng.gen::<f64>() + 1.0,
                rng.gen::<f64>(),
                rng.gen::<f64>() - 1.0,
                rng.gen::<f64>(),
            ]);
            arms.push((rng.gen::<f64>() < 0.5) as u8);
        }
        let m = fit_logistic(&dataset(&xs, &arms), FeatureMap::Raw, (0.01, 0.99)).unwrap();
        let cov = m.diagnostics.covariance.as_ref().unwrap();
        let q = 5;
        let params = [
            m.intercept(),
            m.coefficients()[0],
            m.coefficients()[1],
            m.coefficients()[2],
            m.coefficients()[3],
        ];
        for (j, v) in params.iter().enumerate() {
            let se = cov[j * q + j].sqrt();
            assert!(v.abs() <= 3.0 * se, "param {j}: {v} vs se {se}");
        }
    }

    #[test]
    fn clipping_and_hit_counter() {
        let mut xs = Vec::new();
        let mut arms = Vec::new();
        // Strong but not perfect separation.
        for i in 0..40 {
            let noise = (i % 7) as f64 * 0.01;
            xs.push(vec![3.0 + noise]);
            arms.push((i % 10 != 0) as u8);
            xs.push(vec![-3.0 - noise]);
            arms.push((i % 10 == 0) as u8);
        }
        let m = fit_logistic(&dataset(&xs, &arms), FeatureMap::Raw, (0.1, 0.9)).unwrap();
        let p = m.propensity_for_test(&[50.0]);
        assert_eq!(p, 0.9);
        assert!(m.clip_hit_count() > 0);
    }

    impl PropensityModel {
        fn propensity_for_test(&self, x: &[f64]) -> f64 {
            self.predict_clipped(x)
        }
    }
}
