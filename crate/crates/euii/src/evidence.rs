//! Likelihood ratios, the diagnostic odds ratio, fixed-sample evidence per
//! unit, and Bayesian posterior updating.
//!
//! A significance test is treated as a diagnostic procedure for the
//! alternative hypothesis: a significant result has likelihood ratio
//! `LR⁺ = power / t1e`, a nonsignificant one `LR⁻ = (1 − power)/(1 − t1e)`.
//! Their ratio — the diagnostic odds ratio `DOR = LR⁺/LR⁻` — measures the
//! full evidential separation of the two outcomes, and its `n`-th root
//! allocates that evidence evenly across the `n` experimental units that
//! produced it.  When working with the convention of
//! [`crate::fixed_design`], `power` is directional (one-tail) and `t1e` is
//! the full significance level of the test.
//!
//! All probability/odds conversions route through a single pair of helpers
//! so that identities such as `odds(update_odds(p, LR⁺)) /
//! odds(update_odds(p, LR⁻)) = DOR` hold to floating-point accuracy.

use crate::error::{Error, Result};

/// Likelihood ratios of the two test outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodRatios {
    /// `LR⁺ = power / t1e`: evidence carried by a significant result.
    pub lr_plus: f64,
    /// `LR⁻ = (1 − power)/(1 − t1e)`: evidence carried by a nonsignificant
    /// result (below 1 for a useful test).
    pub lr_minus: f64,
}

/// Condensed evidence summary of a fixed design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceSummary {
    /// Diagnostic odds ratio `LR⁺ / LR⁻`.
    pub dor: f64,
    /// Per-unit evidence index `DOR^(1/n_basis)`.
    pub euii: f64,
    /// Sample size the index was normalized by.
    pub n_basis: f64,
}

/// `p / (1 − p)`; the single odds-from-probability conversion point.
#[inline]
pub(crate) fn odds(p: f64) -> f64 {
    p / (1.0 - p)
}

/// `o / (1 + o)`; the single probability-from-odds conversion point.
#[inline]
pub(crate) fn prob(o: f64) -> f64 {
    o / (1.0 + o)
}

fn check_rates(power: f64, t1e: f64) -> Result<()> {
    if !power.is_finite() || !(0.0..=1.0).contains(&power) {
        return Err(Error::Domain(format!(
            "power must lie in [0,1], got {power}"
        )));
    }
    if !(t1e > 0.0 && t1e < 1.0) {
        return Err(Error::Domain(format!(
            "Type I error rate must lie strictly in (0,1), got {t1e}"
        )));
    }
    if power == 0.0 || power == 1.0 {
        return Err(Error::DegenerateEvidence(format!(
            "power of exactly {power} yields an infinite or zero likelihood ratio; \
             no finite evidence measure exists"
        )));
    }
    Ok(())
}

/// Likelihood ratios of significant / nonsignificant outcomes from the
/// operating characteristics of a test.
///
/// # Errors
///
/// [`Error::DegenerateEvidence`] when `power` is exactly 0 or 1;
/// [`Error::Domain`] when `t1e` is not strictly inside `(0,1)` or `power`
/// is outside `[0,1]`.
pub fn likelihood_ratios(power: f64, t1e: f64) -> Result<LikelihoodRatios> {
    check_rates(power, t1e)?;
    Ok(LikelihoodRatios {
        lr_plus: power / t1e,
        lr_minus: (1.0 - power) / (1.0 - t1e),
    })
}

/// Diagnostic odds ratio: `odds(power) / odds(t1e)`, identically equal to
/// `LR⁺ / LR⁻`.
pub fn dor(power: f64, t1e: f64) -> Result<f64> {
    check_rates(power, t1e)?;
    Ok(odds(power) / odds(t1e))
}

/// Per-unit evidence index of a fixed design: `dor^(1/n)`.
///
/// Greater than 1 exactly when `dor > 1`.
pub fn euii_fixed(dor: f64, n: f64) -> Result<f64> {
    if !(dor > 0.0) || !dor.is_finite() {
        return Err(Error::Domain(format!(
            "euii_fixed: dor must be positive and finite, got {dor}"
        )));
    }
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!(
            "euii_fixed: n must be positive and finite, got {n}"
        )));
    }
    Ok(dor.powf(1.0 / n))
}

/// Per-unit evidence index computed from log-scale operating
/// characteristics:  `exp((ln LR⁺ − ln LR⁻)/n)` with
/// `ln LR⁺ = ln_power − ln t1e` and `ln LR⁻ = ln_type_ii − ln(1 − t1e)`.
///
/// This is the deep-tail companion of [`euii_fixed`]: at large samples the
/// Type II error rate underflows `f64` (e.g. `β ≈ exp(−950)`), so the index
/// must be assembled from logarithms that never materialize `β` itself.
/// Pair it with [`crate::fixed_design::log_type_ii_error_z`] /
/// [`crate::fixed_design::log_type_ii_error_t`].
pub fn euii_fixed_from_logs(ln_power: f64, ln_type_ii: f64, t1e: f64, n: f64) -> Result<f64> {
    if !(t1e > 0.0 && t1e < 1.0) {
        return Err(Error::Domain(format!(
            "euii_fixed_from_logs: t1e must lie strictly in (0,1), got {t1e}"
        )));
    }
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!(
            "euii_fixed_from_logs: n must be positive and finite, got {n}"
        )));
    }
    if ln_power > 1e-12 || ln_type_ii > 1e-12 || ln_power.is_nan() || ln_type_ii.is_nan() {
        return Err(Error::Domain(format!(
            "euii_fixed_from_logs: log probabilities must be <= 0, \
             got ln_power={ln_power}, ln_type_ii={ln_type_ii}"
        )));
    }
    let ln_lr_plus = ln_power - t1e.ln();
    let ln_lr_minus = ln_type_ii - (-t1e).ln_1p();
    Ok(((ln_lr_plus - ln_lr_minus) / n).exp())
}

/// Bayesian update: posterior probability of the alternative after seeing a
/// result with likelihood ratio `lr`, starting from prior `prior_h1`.
///
/// # Errors
///
/// [`Error::Domain`] when `prior_h1 = 1` (infinite prior odds), when it is
/// outside `[0,1)`, or when `lr` is not a positive finite real.
pub fn update_odds(prior_h1: f64, lr: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&prior_h1) {
        return Err(Error::Domain(format!(
            "update_odds: prior must lie in [0,1), got {prior_h1}"
        )));
    }
    if !(lr > 0.0) || !lr.is_finite() {
        return Err(Error::Domain(format!(
            "update_odds: likelihood ratio must be positive and finite, got {lr}"
        )));
    }
    if prior_h1 == 0.0 {
        return Ok(0.0);
    }
    Ok(prob(lr * odds(prior_h1)))
}

/// Bundle operating characteristics into an [`EvidenceSummary`].
pub fn summarize(power: f64, t1e: f64, n_basis: f64) -> Result<EvidenceSummary> {
    let lr = likelihood_ratios(power, t1e)?;
    let d = lr.lr_plus / lr.lr_minus;
    Ok(EvidenceSummary {
        dor: d,
        euii: euii_fixed(d, n_basis)?,
        n_basis,
    })
}
