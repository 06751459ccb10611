//! Pseudo-outcome transformations of the restricted time.
//!
//! Each transformation maps an observed subject to a value whose conditional
//! mean recovers `E[T⁽ᵃ⁾∧τ | X]` under progressively weaker requirements on
//! the nuisance models:
//!
//! - IPCW keeps uncensored subjects only and reweights them by the inverse
//!   censoring survival — needs G;
//! - Buckley-James keeps observed events untouched and imputes censored
//!   subjects with the conditional mean of the restricted time given survival
//!   past the censoring point — needs S;
//! - the doubly robust transform combines both and stays valid when either
//!   G or S is correct;
//! - the quadruply robust contrast adds propensity weighting and the
//!   conditional-mean augmentation, and stays valid when one model from each
//!   of the pairs (G, S) and (e, μ) is correct.
//!
//! The correction integral of the doubly robust transform runs over the
//! censoring law associated with Ĝ: an exact jump sum for fitted step-hazard
//! models, quadrature for the continuous oracle laws.

use rayon::prelude::*;
use thiserror::Error;

use crate::data::RestrictedDataset;
use crate::nuisance::{CensoringModel, NuisanceSet, OutcomeCurve, OutcomeModel, PropensityScore};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("transformation requires the {0} nuisance model")]
    MissingNuisance(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformTag {
    Ipcw,
    Bj,
    Dr,
    Qr,
}

/// A transformed outcome for one subject.
#[derive(Debug, Clone, Copy)]
pub struct PseudoOutcome {
    pub value: f64,
    pub subject: usize,
    pub tag: TransformTag,
    /// The residual-mean evaluation hit a collapsed survival curve.
    pub degenerate_qs: bool,
}

/// `δᵗ · (t̃∧τ) / Ĝ(t̃∧τ | x, a)`; zero for subjects censored before τ.
pub fn ipcw_transform(
    rd: &RestrictedDataset,
    i: usize,
    ns: &NuisanceSet,
) -> Result<PseudoOutcome, TransformError> {
    let g = censoring(ns)?;
    Ok(PseudoOutcome {
        value: ipcw_value(rd, i, g),
        subject: i,
        tag: TransformTag::Ipcw,
        degenerate_qs: false,
    })
}

fn ipcw_value(rd: &RestrictedDataset, i: usize, g: &dyn CensoringModel) -> f64 {
    if rd.rstatus(i) == 0 {
        return 0.0;
    }
    let y = rd.rtime(i);
    y / g.g_left(y, rd.covariates(i), rd.arm(i))
}

/// `δᵗ·(t̃∧τ) + (1−δᵗ)·E[T∧τ | x, a, T∧τ > t̃]`, the censored values
/// replaced by the model's conditional mean `t̃ + Q̂_S(t̃ | x, a)`.
pub fn bj_transform(
    rd: &RestrictedDataset,
    i: usize,
    ns: &NuisanceSet,
) -> Result<PseudoOutcome, TransformError> {
    let s = outcome(ns)?;
    let curve = s.curve(rd.covariates(i), rd.arm(i), rd.tau());
    let (value, degenerate) = bj_value(rd, i, &curve);
    Ok(PseudoOutcome { value, subject: i, tag: TransformTag::Bj, degenerate_qs: degenerate })
}

fn bj_value(rd: &RestrictedDataset, i: usize, curve: &OutcomeCurve) -> (f64, bool) {
    let y = rd.rtime(i);
    if rd.rstatus(i) == 1 {
        (y, false)
    } else {
        let m = curve.cond_mean(y);
        (m.value, m.degenerate)
    }
}

/// The doubly robust transform
/// `δᵗ(t̃∧τ)/Ĝ(t̃∧τ) + (1−δᵗ)·m̂(t̃∧τ)/Ĝ(t̃∧τ) − ∫₀^{t̃∧τ} m̂(t)/Ĝ(t)² dP̂_C(t)`
/// with `m̂(t) = t + Q̂_S(t|x,a)` the conditional mean imputation.
pub fn dr_transform(
    rd: &RestrictedDataset,
    i: usize,
    ns: &NuisanceSet,
) -> Result<PseudoOutcome, TransformError> {
    let g = censoring(ns)?;
    let s = outcome(ns)?;
    let curve = s.curve(rd.covariates(i), rd.arm(i), rd.tau());
    let (value, degenerate) = dr_value(rd, i, g, &curve);
    Ok(PseudoOutcome { value, subject: i, tag: TransformTag::Dr, degenerate_qs: degenerate })
}

fn dr_value(
    rd: &RestrictedDataset,
    i: usize,
    g: &dyn CensoringModel,
    curve: &OutcomeCurve,
) -> (f64, bool) {
    let y = rd.rtime(i);
    let x = rd.covariates(i);
    let arm = rd.arm(i);
    let g_y = g.g_left(y, x, arm);
    let mut degenerate = false;
    let leading = if rd.rstatus(i) == 1 {
        y / g_y
    } else {
        let m = curve.cond_mean(y);
        degenerate |= m.degenerate;
        m.value / g_y
    };
    let kinks: Vec<f64> = curve.kinks().into_iter().collect();
    let correction = g.dr_correction(
        y,
        x,
        arm,
        &mut |t| {
            let m = curve.cond_mean(t);
            degenerate |= m.degenerate;
            m.value
        },
        &kinks,
    );
    (leading - correction, degenerate)
}

/// The quadruply robust contrast
/// `(a/ê − (1−a)/(1−ê))·(T*_DR − μ̂(x,a)) + μ̂(x,1) − μ̂(x,0)`.
pub fn qr_pseudo_outcome(
    rd: &RestrictedDataset,
    i: usize,
    ns: &NuisanceSet,
) -> Result<PseudoOutcome, TransformError> {
    let g = censoring(ns)?;
    let s = outcome(ns)?;
    let e = propensity(ns)?;
    let tau = rd.tau();
    let x = rd.covariates(i);
    let own = s.curve(x, rd.arm(i), tau);
    let (dr, degenerate) = dr_value(rd, i, g, &own);
    let mu_own = own.restricted_mean();
    let other = s.curve(x, 1 - rd.arm(i), tau);
    let (mu1, mu0) = if rd.arm(i) == 1 {
        (mu_own, other.restricted_mean())
    } else {
        (other.restricted_mean(), mu_own)
    };
    let value = qr_value(rd.arm(i), e.propensity(x), dr, mu_own, mu1, mu0);
    Ok(PseudoOutcome { value, subject: i, tag: TransformTag::Qr, degenerate_qs: degenerate })
}

fn qr_value(arm: u8, e: f64, dr: f64, mu_own: f64, mu1: f64, mu0: f64) -> f64 {
    let sign = if arm == 1 { 1.0 / e } else { -1.0 / (1.0 - e) };
    sign * (dr - mu_own) + mu1 - mu0
}

/// Batch evaluation reusing one prepared outcome curve per subject.
/// Values come back in subject order.
pub fn batch(
    rd: &RestrictedDataset,
    ns: &NuisanceSet,
    tag: TransformTag,
) -> Result<Vec<PseudoOutcome>, TransformError> {
    match tag {
        TransformTag::Ipcw => {
            let g = censoring(ns)?;
            Ok((0..rd.n())
                .map(|i| PseudoOutcome {
                    value: ipcw_value(rd, i, g),
                    subject: i,
                    tag,
                    degenerate_qs: false,
                })
                .collect())
        }
        TransformTag::Bj => {
            let s = outcome(ns)?;
            Ok((0..rd.n())
                .into_par_iter()
                .map(|i| {
                    let curve = s.curve(rd.covariates(i), rd.arm(i), rd.tau());
                    let (value, degenerate) = bj_value(rd, i, &curve);
                    PseudoOutcome { value, subject: i, tag, degenerate_qs: degenerate }
                })
                .collect())
        }
        TransformTag::Dr => {
            let g = censoring(ns)?;
            let s = outcome(ns)?;
            Ok((0..rd.n())
                .into_par_iter()
                .map(|i| {
                    let curve = s.curve(rd.covariates(i), rd.arm(i), rd.tau());
                    let (value, degenerate) = dr_value(rd, i, g, &curve);
                    PseudoOutcome { value, subject: i, tag, degenerate_qs: degenerate }
                })
                .collect())
        }
        TransformTag::Qr => {
            // Verify presence once, then run subjects in parallel.
            censoring(ns)?;
            outcome(ns)?;
            propensity(ns)?;
            Ok((0..rd.n())
                .into_par_iter()
                .map(|i| qr_pseudo_outcome(rd, i, ns).expect("components checked"))
                .collect())
        }
    }
}

fn censoring(ns: &NuisanceSet) -> Result<&dyn CensoringModel, TransformError> {
    ns.censoring.as_deref().ok_or(TransformError::MissingNuisance("censoring"))
}

fn outcome(ns: &NuisanceSet) -> Result<&dyn OutcomeModel, TransformError> {
    ns.outcome.as_deref().ok_or(TransformError::MissingNuisance("outcome"))
}

fn propensity(ns: &NuisanceSet) -> Result<&dyn PropensityScore, TransformError> {
    ns.propensity.as_deref().ok_or(TransformError::MissingNuisance("propensity"))
}
