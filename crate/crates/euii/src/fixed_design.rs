//! Power, sample size, and asymptotic evidence limits for one- and
//! two-sample z- and t-tests with a fixed (non-random) sample size.
//!
//! Conventions, fixed once here and reused by every downstream module:
//!
//! * Sample sizes are real numbers and are never rounded; published
//!   tabulations that quote `31.4` are reproduced exactly rather than
//!   through integer rounding.
//! * A two-sided test at level `α` uses the critical value at `α/2` but
//!   counts power in the direction of the effect only; the opposite-tail
//!   rejection probability is neglected.  Under the null this makes the
//!   directional "power" equal to the one-tail level `α/2`, while the
//!   Type I error rate of the test as a whole remains `α` — downstream
//!   evidence calculations therefore pair one-tail power with the full
//!   two-sided `α`.  A consequence worth knowing: at tiny effect sizes the
//!   directional t-test power can fall *below* `α`, the classical
//!   "biased test" phenomenon.
//! * Two-arm designs use the effective sample size `n₁n₂/(n₁+n₂)`, so the
//!   balanced two-arm test with total `n` behaves like a one-arm test with
//!   `n/4` units.

use crate::dist::{ln_noncentral_t_cdf, ln_phi, noncentral_t_cdf, phi, phi_inv, t_quantile};
use crate::error::{Error, Result};

/// Number of experimental arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arms {
    /// Single-sample design.
    One,
    /// Two-group comparison.
    Two,
}

/// Sidedness of the hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    /// One-sided test at level `α`.
    One,
    /// Two-sided test at level `α` (critical value at `α/2`).
    Two,
}

/// Test statistic family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    /// Known-variance z-test.
    Z,
    /// Student t-test (exact noncentral-t power).
    T,
}

/// A fully specified fixed-sample design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    /// Standardized effect size (mean difference in units of σ).
    pub delta: f64,
    /// One- or two-arm design.
    pub arms: Arms,
    /// Total sample size across arms (positive real, not rounded).
    pub n_total: f64,
    /// Optional per-arm split `(n₁, n₂)`; two-arm designs only.  When
    /// absent, a two-arm design is split equally.
    pub allocation: Option<(f64, f64)>,
    /// Significance level of the test as a whole.
    pub alpha: f64,
    /// One- or two-sided testing.
    pub sidedness: Sidedness,
    /// z or t statistic.
    pub test: TestKind,
}

impl DesignPoint {
    /// Check the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() {
            return Err(Error::Domain(format!(
                "design point: delta must be finite, got {}",
                self.delta
            )));
        }
        if !(self.n_total > 0.0) || !self.n_total.is_finite() {
            return Err(Error::Domain(format!(
                "design point: n_total must be positive and finite, got {}",
                self.n_total
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!(
                "design point: alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        match (self.arms, self.allocation) {
            (Arms::One, Some(_)) => Err(Error::Domain(
                "design point: allocation is meaningful only for two arms".into(),
            )),
            (Arms::Two, Some((n1, n2))) => {
                if !(n1 > 0.0 && n2 > 0.0) {
                    return Err(Error::Domain(format!(
                        "design point: allocation arms must be positive, got ({n1}, {n2})"
                    )));
                }
                if ((n1 + n2) - self.n_total).abs() > 1e-9 * self.n_total.max(1.0) {
                    return Err(Error::Domain(format!(
                        "design point: allocation ({n1}, {n2}) does not sum to n_total {}",
                        self.n_total
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// One-tail level actually used for the critical value.
    pub(crate) fn one_tail_alpha(&self) -> f64 {
        match self.sidedness {
            Sidedness::One => self.alpha,
            Sidedness::Two => 0.5 * self.alpha,
        }
    }

    /// Effective sample size entering the noncentrality: `n` for one arm,
    /// `n₁n₂/(n₁+n₂)` for two arms (equal split `n/4`).
    pub(crate) fn effective_n(&self) -> f64 {
        match self.arms {
            Arms::One => self.n_total,
            Arms::Two => {
                let (n1, n2) = self
                    .allocation
                    .unwrap_or((0.5 * self.n_total, 0.5 * self.n_total));
                n1 * n2 / (n1 + n2)
            }
        }
    }

    /// Degrees of freedom of the t statistic.
    pub(crate) fn t_df(&self) -> f64 {
        match self.arms {
            Arms::One => self.n_total - 1.0,
            Arms::Two => self.n_total - 2.0,
        }
    }
}

/// Unrounded sample size achieving power `1 − beta` at level `alpha` for
/// standardized effect `delta`:  `n = ((u + v)/δ)²` for one arm and four
/// times that total for two equal arms.  `u = Φ⁻¹(1−β)`, `v` is the critical
/// quantile implied by the sidedness.
///
/// # Errors
///
/// [`Error::Domain`] if `delta == 0` (no finite sample size exists) or the
/// probabilities are outside `(0,1)`.
pub fn required_n(
    delta: f64,
    alpha: f64,
    beta: f64,
    arms: Arms,
    sidedness: Sidedness,
) -> Result<f64> {
    if !delta.is_finite() || delta == 0.0 {
        return Err(Error::Domain(format!(
            "required_n: delta must be finite and nonzero, got {delta}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!(
            "required_n: alpha and beta must lie in (0,1), got alpha={alpha}, beta={beta}"
        )));
    }
    let one_tail = match sidedness {
        Sidedness::One => alpha,
        Sidedness::Two => 0.5 * alpha,
    };
    let u = phi_inv(1.0 - beta);
    let v = phi_inv(1.0 - one_tail);
    let n_one = ((u + v) / delta).powi(2);
    Ok(match arms {
        Arms::One => n_one,
        Arms::Two => 4.0 * n_one,
    })
}

/// Directional power of the z-test: `Φ(δ√n_eff − v)` with the one-tail
/// critical value `v` implied by the design's sidedness.
///
/// At `delta = 0` this returns the one-tail level (the opposite tail is
/// neglected by convention).
pub fn power_z(point: &DesignPoint) -> Result<f64> {
    point.validate()?;
    let v = phi_inv(1.0 - point.one_tail_alpha());
    Ok(phi(point.delta * point.effective_n().sqrt() - v))
}

/// z-test power for an explicitly unequal two-arm split:
/// `Φ(δ·√(n₁n₂/(n₁+n₂)) − v)`.  Symmetric in `(n₁, n₂)` and maximized by
/// the balanced split for a fixed total.
pub fn power_z_unequal(
    delta: f64,
    n1: f64,
    n2: f64,
    alpha: f64,
    sidedness: Sidedness,
) -> Result<f64> {
    let point = DesignPoint {
        delta,
        arms: Arms::Two,
        n_total: n1 + n2,
        allocation: Some((n1, n2)),
        alpha,
        sidedness,
        test: TestKind::Z,
    };
    power_z(&point)
}

/// Directional power of the exact t-test:
/// `1 − F_nct(t_crit; df, δ√n_eff)` with `df = n−1` (one arm) or `n−2`
/// (two arms) and `t_crit` the central-t critical value at the design's
/// one-tail level.
///
/// # Errors
///
/// [`Error::Domain`] when the degrees of freedom are not positive
/// (`n_total < 2` one-arm, `< 3` effective for two arms).
pub fn power_t(point: &DesignPoint) -> Result<f64> {
    point.validate()?;
    let df = point.t_df();
    if !(df > 0.0) {
        return Err(Error::Domain(format!(
            "power_t: insufficient degrees of freedom (n_total = {})",
            point.n_total
        )));
    }
    let t_crit = t_quantile(1.0 - point.one_tail_alpha(), df)?;
    let ncp = point.delta * point.effective_n().sqrt();
    Ok(1.0 - noncentral_t_cdf(t_crit, df, ncp)?)
}

/// Large-`n` limit of the per-unit evidence index of the z-test:
/// `exp(δ²/2)` for one arm, `exp(δ²/8)` for two equal arms (a two-arm
/// design needs the effect to be twice as large, or four times the units,
/// for the same limiting evidence).
pub fn euii_asymptote(delta: f64, arms: Arms) -> Result<f64> {
    if !delta.is_finite() {
        return Err(Error::Domain(format!(
            "euii_asymptote: delta must be finite, got {delta}"
        )));
    }
    Ok(match arms {
        Arms::One => (delta * delta / 2.0).exp(),
        Arms::Two => (delta * delta / 8.0).exp(),
    })
}

/// `ln β` of the z-test — the log Type II error rate, valid even when `β`
/// underflows the direct probability representation (e.g. `ln β ≈ −950` at
/// `n = 2¹³`, `δ = 0.5`).
pub fn log_type_ii_error_z(point: &DesignPoint) -> Result<f64> {
    point.validate()?;
    let v = phi_inv(1.0 - point.one_tail_alpha());
    Ok(ln_phi(v - point.delta * point.effective_n().sqrt()))
}

/// `ln β` of the exact t-test, computed on the log scale end to end.
pub fn log_type_ii_error_t(point: &DesignPoint) -> Result<f64> {
    point.validate()?;
    let df = point.t_df();
    if !(df > 0.0) {
        return Err(Error::Domain(format!(
            "log_type_ii_error_t: insufficient degrees of freedom (n_total = {})",
            point.n_total
        )));
    }
    let t_crit = t_quantile(1.0 - point.one_tail_alpha(), df)?;
    let ncp = point.delta * point.effective_n().sqrt();
    ln_noncentral_t_cdf(t_crit, df, ncp)
}

/// `ln` of the directional z-test power, the companion of
/// [`log_type_ii_error_z`] for log-scale evidence computations.
pub fn log_power_z(point: &DesignPoint) -> Result<f64> {
    point.validate()?;
    let v = phi_inv(1.0 - point.one_tail_alpha());
    Ok(ln_phi(point.delta * point.effective_n().sqrt() - v))
}

/// `ln` of the directional t-test power, the companion of
/// [`log_type_ii_error_t`].
pub fn log_power_t(point: &DesignPoint) -> Result<f64> {
    point.validate()?;
    let df = point.t_df();
    if !(df > 0.0) {
        return Err(Error::Domain(format!(
            "log_power_t: insufficient degrees of freedom (n_total = {})",
            point.n_total
        )));
    }
    let t_crit = t_quantile(1.0 - point.one_tail_alpha(), df)?;
    let ncp = point.delta * point.effective_n().sqrt();
    // ln(1 − F) = ln(survival); use the symmetry F̄(x; df, ncp) = F(−x; df, −ncp).
    ln_noncentral_t_cdf(-t_crit, df, -ncp)
}
