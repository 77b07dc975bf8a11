//! Per-unit evidence for designs whose terminal sample size is random.
//!
//! A sequential or adaptive procedure stops at a data-dependent sample size
//! `N`, so "evidence per unit" can no longer be a simple `n`-th root.  The
//! generalization used here mixes the four outcome cells — hypothesis
//! (null / alternative) crossed with result (significant / nonsignificant)
//! — with posterior weights for the hypothesis given the result, yielding
//! moments of `N` conditional on each result:
//!
//! * first order:  `EUII = (LR⁺)^{1/E(N₊)} / (LR⁻)^{1/E(N₋)}`
//! * second order: exponents `(1 + CV²)/E(N)` with `CV = sd(N)/E(N)`,
//!   a Taylor correction for the randomness of `N` that always increases
//!   the index when the test is informative.
//!
//! Posterior weights depend on an assumed prior probability of the
//! alternative; the conventional reporting grid is
//! [`DEFAULT_PRIORS`] = `{0.01, 0.1, 0.5}`.

use crate::error::{Error, Result};
use crate::evidence::{odds, prob};

/// Conventional prior-probability grid for reporting adaptive EUII.
pub const DEFAULT_PRIORS: [f64; 3] = [0.01, 0.1, 0.5];

/// Sample-size distribution of one (hypothesis, outcome) cell.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OutcomeCell {
    /// Probability of this outcome conditional on the hypothesis.
    pub mass: f64,
    /// Mean terminal sample size within the cell (0 when empty).
    pub mean_n: f64,
    /// Variance of the terminal sample size within the cell (0 when empty).
    pub var_n: f64,
    /// True when the cell holds no observations / probability mass; an
    /// empty cell is flagged rather than filled with NaN.
    pub empty: bool,
}

impl OutcomeCell {
    /// A populated cell.
    pub fn new(mass: f64, mean_n: f64, var_n: f64) -> Result<Self> {
        if !(mass >= 0.0) || mass > 1.0 + 1e-12 {
            return Err(Error::Domain(format!(
                "outcome cell: mass must lie in [0,1], got {mass}"
            )));
        }
        if !(mean_n > 0.0) || !mean_n.is_finite() {
            return Err(Error::Domain(format!(
                "outcome cell: mean_n must be positive and finite, got {mean_n}"
            )));
        }
        if !(var_n >= 0.0) || !var_n.is_finite() {
            return Err(Error::Domain(format!(
                "outcome cell: var_n must be nonnegative and finite, got {var_n}"
            )));
        }
        Ok(OutcomeCell {
            mass,
            mean_n,
            var_n,
            empty: false,
        })
    }

    /// The empty cell (zero mass, no moments).
    pub fn empty() -> Self {
        OutcomeCell {
            mass: 0.0,
            mean_n: 0.0,
            var_n: 0.0,
            empty: true,
        }
    }
}

/// The four outcome cells of a design: hypothesis × result.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OutcomeCells {
    /// Null hypothesis, significant result (a false positive).
    pub h0_sig: OutcomeCell,
    /// Null hypothesis, nonsignificant result.
    pub h0_nonsig: OutcomeCell,
    /// Alternative hypothesis, significant result.
    pub h1_sig: OutcomeCell,
    /// Alternative hypothesis, nonsignificant result.
    pub h1_nonsig: OutcomeCell,
}

impl OutcomeCells {
    /// Check that per-hypothesis outcome masses sum to 1 (within 1e-8).
    pub fn validate(&self) -> Result<()> {
        for (label, a, b) in [
            ("null", &self.h0_sig, &self.h0_nonsig),
            ("alternative", &self.h1_sig, &self.h1_nonsig),
        ] {
            let total = a.mass + b.mass;
            if (total - 1.0).abs() > 1e-8 {
                return Err(Error::Domain(format!(
                    "outcome cells: {label}-hypothesis masses sum to {total}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

/// Posterior probabilities of the alternative given each result.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PosteriorWeights {
    /// `Pr(H1 | significant)`.
    pub pr_h1_given_sig: f64,
    /// `Pr(H1 | nonsignificant)`.
    pub pr_h1_given_nonsig: f64,
}

/// Posterior-mixture moments of the terminal sample size.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MixtureMoments {
    /// `E(N₊)`: expected terminal n given a significant result.
    pub e_n_plus: f64,
    /// `Var(N₊)`.
    pub var_n_plus: f64,
    /// `E(N₋)`: expected terminal n given a nonsignificant result.
    pub e_n_minus: f64,
    /// `Var(N₋)`.
    pub var_n_minus: f64,
    /// The posterior weights the mixture was taken under.
    pub weights: PosteriorWeights,
}

/// Adaptive per-unit evidence index and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AdaptiveEuii {
    /// First-order index `(LR⁺)^{1/E(N₊)} / (LR⁻)^{1/E(N₋)}`.
    pub euii_first: f64,
    /// Second-order index with exponents `(1+CV²)/E(N)`.
    pub euii_second: f64,
    /// `E(N₊)`.
    pub e_n_plus: f64,
    /// `E(N₋)`.
    pub e_n_minus: f64,
    /// `CV(N₊) = sd(N₊)/E(N₊)`.
    pub cv_n_plus: f64,
    /// `CV(N₋)`.
    pub cv_n_minus: f64,
    /// `Pr(H1 | significant)` used for the mixture.
    pub pr_h1_given_sig: f64,
    /// `Pr(H1 | nonsignificant)` used for the mixture.
    pub pr_h1_given_nonsig: f64,
}

/// Posterior probability of the alternative given each test outcome.
///
/// Significant results update the prior odds by `LR⁺`; nonsignificant
/// results carry odds `odds_sig / DOR` (the DOR is exactly the factor
/// separating the two posterior odds).
///
/// # Errors
///
/// [`Error::Domain`] unless `0 < prior_h1 < 1`, `lr_plus > 0`, `dor > 0`.
pub fn posterior_weights(prior_h1: f64, lr_plus: f64, dor: f64) -> Result<PosteriorWeights> {
    if !(prior_h1 > 0.0 && prior_h1 < 1.0) {
        return Err(Error::Domain(format!(
            "posterior_weights: prior must lie strictly in (0,1), got {prior_h1}"
        )));
    }
    if !(lr_plus > 0.0) || !lr_plus.is_finite() || !(dor > 0.0) || !dor.is_finite() {
        return Err(Error::Domain(format!(
            "posterior_weights: lr_plus and dor must be positive and finite, \
             got lr_plus={lr_plus}, dor={dor}"
        )));
    }
    let odds_sig = lr_plus * odds(prior_h1);
    let odds_nonsig = odds_sig / dor;
    Ok(PosteriorWeights {
        pr_h1_given_sig: prob(odds_sig),
        pr_h1_given_nonsig: prob(odds_nonsig),
    })
}

/// Mix one outcome's two hypothesis cells with weight `w` on the
/// alternative cell, by the law of total mean/variance.
fn mix(
    outcome: &str,
    h0: &OutcomeCell,
    h1: &OutcomeCell,
    w: f64,
) -> Result<(f64, f64)> {
    if h1.empty && w > 0.0 {
        return Err(Error::Data(format!(
            "mixture_moments: the alternative-hypothesis {outcome} cell is empty \
             but carries posterior weight {w}; increase replications"
        )));
    }
    if h0.empty && w < 1.0 {
        return Err(Error::Data(format!(
            "mixture_moments: the null-hypothesis {outcome} cell is empty \
             but carries posterior weight {}; increase replications",
            1.0 - w
        )));
    }
    let (m0, v0) = if h0.empty { (0.0, 0.0) } else { (h0.mean_n, h0.var_n) };
    let (m1, v1) = if h1.empty { (0.0, 0.0) } else { (h1.mean_n, h1.var_n) };
    let mean = (1.0 - w) * m0 + w * m1;
    let within = (1.0 - w) * v0 + w * v1;
    let between = (1.0 - w) * (m0 - mean).powi(2) + w * (m1 - mean).powi(2);
    Ok((mean, within + between))
}

/// Posterior-mixture moments of the terminal sample size for both results.
///
/// # Errors
///
/// [`Error::Data`] when an empty cell carries nonzero posterior weight —
/// imputing a sample-size distribution for an outcome never observed would
/// silently bias the index, so the caller must supply more data instead.
pub fn mixture_moments(cells: &OutcomeCells, weights: &PosteriorWeights) -> Result<MixtureMoments> {
    cells.validate()?;
    for (name, w) in [
        ("pr_h1_given_sig", weights.pr_h1_given_sig),
        ("pr_h1_given_nonsig", weights.pr_h1_given_nonsig),
    ] {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Domain(format!(
                "mixture_moments: {name} must lie in [0,1], got {w}"
            )));
        }
    }
    let (e_plus, var_plus) = mix(
        "significant",
        &cells.h0_sig,
        &cells.h1_sig,
        weights.pr_h1_given_sig,
    )?;
    let (e_minus, var_minus) = mix(
        "nonsignificant",
        &cells.h0_nonsig,
        &cells.h1_nonsig,
        weights.pr_h1_given_nonsig,
    )?;
    Ok(MixtureMoments {
        e_n_plus: e_plus,
        var_n_plus: var_plus,
        e_n_minus: e_minus,
        var_n_minus: var_minus,
        weights: *weights,
    })
}

/// First- and second-order adaptive per-unit evidence index.
///
/// # Errors
///
/// [`Error::Domain`] unless both conditional means are positive and the
/// likelihood ratios are positive finite reals.
pub fn euii_adaptive(lr_plus: f64, lr_minus: f64, moments: &MixtureMoments) -> Result<AdaptiveEuii> {
    if !(lr_plus > 0.0) || !lr_plus.is_finite() || !(lr_minus > 0.0) || !lr_minus.is_finite() {
        return Err(Error::Domain(format!(
            "euii_adaptive: likelihood ratios must be positive and finite, \
             got lr_plus={lr_plus}, lr_minus={lr_minus}"
        )));
    }
    if !(moments.e_n_plus > 0.0) || !(moments.e_n_minus > 0.0) {
        return Err(Error::Domain(format!(
            "euii_adaptive: conditional mean sample sizes must be positive, \
             got E(N+)={}, E(N-)={}",
            moments.e_n_plus, moments.e_n_minus
        )));
    }
    let cv_plus = moments.var_n_plus.sqrt() / moments.e_n_plus;
    let cv_minus = moments.var_n_minus.sqrt() / moments.e_n_minus;
    let ln_plus = lr_plus.ln();
    let ln_minus = lr_minus.ln();
    let first = (ln_plus / moments.e_n_plus - ln_minus / moments.e_n_minus).exp();
    let second = (ln_plus * (1.0 + cv_plus * cv_plus) / moments.e_n_plus
        - ln_minus * (1.0 + cv_minus * cv_minus) / moments.e_n_minus)
        .exp();
    Ok(AdaptiveEuii {
        euii_first: first,
        euii_second: second,
        e_n_plus: moments.e_n_plus,
        e_n_minus: moments.e_n_minus,
        cv_n_plus: cv_plus,
        cv_n_minus: cv_minus,
        pr_h1_given_sig: moments.weights.pr_h1_given_sig,
        pr_h1_given_nonsig: moments.weights.pr_h1_given_nonsig,
    })
}
