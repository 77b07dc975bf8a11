//! Group-sequential designs: per-look nominal levels, boundary-crossing
//! probabilities, overall error rates, and maximum / expected sample sizes.
//!
//! Crossing probabilities are computed by the classical stagewise recursion.
//! On the score scale `W_i = Z_i √t_i` the increments are independent
//! Gaussians, `W_{i+1} − W_i ~ N(θ·Δt, Δt)`, where `θ = δ√n_max` is the drift
//! at the final look. The sub-density of the not-yet-stopped statistic is
//! carried on a composite-Simpson grid (2001 points, 6σ span) over each
//! continuation region and propagated through the increment kernel.

use crate::adaptive_euii::{OutcomeCell, OutcomeCells};
use crate::dist::{normal_pdf, phi, std_normal_quantile};
use crate::error::{Error, Result};
use crate::fixed_design::{required_n, Arms, Sidedness};

/// Boundary family for a group-sequential design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Constant nominal level at every look (constant z-bound).
    Pocock,
    /// Conservative early bounds `z_i = c/√t_i`.
    OBrienFleming,
    /// Fixed 0.0005 one-tail interim levels; the final look spends the
    /// full level, so the overall type-I error slightly exceeds it.
    HaybittlePeto,
    /// Caller-supplied nominal levels.
    Custom,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Pocock => write!(f, "pocock"),
            Family::OBrienFleming => write!(f, "obrien_fleming"),
            Family::HaybittlePeto => write!(f, "haybittle_peto"),
            Family::Custom => write!(f, "custom"),
        }
    }
}

/// A fully specified group-sequential design.
#[derive(Debug, Clone, PartialEq)]
pub struct GsdSpec {
    /// Number of looks (interims plus final), `k ≥ 1`.
    pub k: usize,
    /// Information fractions `0 < t_1 < … < t_k = 1`.
    pub info_fractions: Vec<f64>,
    /// Per-look nominal levels as one-tail probabilities `a_i ∈ (0,1)`.
    pub nominal_levels: Vec<f64>,
    /// Boundary family the levels were derived from.
    pub family: Family,
    /// Whether the rejection region is one- or two-tailed.
    pub sidedness: Sidedness,
    /// Maximum (final-look) total sample size.
    pub n_max: f64,
}

impl GsdSpec {
    /// Builds a spec from explicit fractions and one-tail levels.
    pub fn new(
        info_fractions: Vec<f64>,
        nominal_levels: Vec<f64>,
        family: Family,
        sidedness: Sidedness,
        n_max: f64,
    ) -> Result<Self> {
        let spec = GsdSpec {
            k: info_fractions.len(),
            info_fractions,
            nominal_levels,
            family,
            sidedness,
            n_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a design with equally spaced looks `t_i = i/k` and nominal
    /// levels solved (or fixed) for the family at the given overall level.
    pub fn equally_spaced(
        family: Family,
        k: usize,
        alpha_overall: f64,
        sidedness: Sidedness,
        n_max: f64,
    ) -> Result<Self> {
        let levels = nominal_levels(family, k, alpha_overall, sidedness)?;
        let fractions = equal_fractions(k);
        GsdSpec::new(fractions, levels, family, sidedness, n_max)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Domain("a design needs at least one look".into()));
        }
        if self.info_fractions.len() != self.k || self.nominal_levels.len() != self.k {
            return Err(Error::Domain(format!(
                "k = {} but got {} information fractions and {} nominal levels",
                self.k,
                self.info_fractions.len(),
                self.nominal_levels.len()
            )));
        }
        let mut prev = 0.0;
        for &t in &self.info_fractions {
            if !t.is_finite() || t <= prev || t > 1.0 {
                return Err(Error::Domain(format!(
                    "information fractions must be strictly increasing in (0, 1], got {:?}",
                    self.info_fractions
                )));
            }
            prev = t;
        }
        let last = *self.info_fractions.last().expect("k >= 1");
        if (last - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "the final information fraction must be 1, got {last}"
            )));
        }
        for &a in &self.nominal_levels {
            if !a.is_finite() || a <= 0.0 || a >= 1.0 {
                return Err(Error::Domain(format!(
                    "nominal one-tail levels must lie in (0, 1), got {:?}",
                    self.nominal_levels
                )));
            }
        }
        if !self.n_max.is_finite() || self.n_max <= 0.0 {
            return Err(Error::Domain(format!(
                "n_max must be a positive real, got {}",
                self.n_max
            )));
        }
        Ok(())
    }

    /// Per-look z-scale bounds `b_i = Φ⁻¹(1 − a_i)`.
    pub fn z_bounds(&self) -> Result<Vec<f64>> {
        self.nominal_levels
            .iter()
            .map(|&a| std_normal_quantile(a).map(|q| -q))
            .collect()
    }
}

/// Stage-by-stage stopping probabilities and conditional sample-size moments
/// under a given drift.
#[derive(Debug, Clone, PartialEq)]
pub struct StagewiseResult {
    /// Probability of stopping for efficacy exactly at look `i` (for a
    /// two-sided rule this includes both tails).
    pub efficacy_stop_prob: Vec<f64>,
    /// Probability of stopping for futility at look `i`; all zero here since
    /// the analytic module has no futility rule.
    pub futility_stop_prob: Vec<f64>,
    /// Total rejection probability, `Σ efficacy_stop_prob`.
    pub overall_reject: f64,
    /// Mean terminal sample size conditional on rejecting (0 when the
    /// rejection mass is zero).
    pub e_n_reject: f64,
    /// Variance of terminal sample size conditional on rejecting.
    pub var_n_reject: f64,
    /// Mean terminal sample size conditional on not rejecting; without a
    /// futility rule every non-rejecting path runs to `n_max`.
    pub e_n_accept: f64,
    /// Variance of terminal sample size conditional on not rejecting.
    pub var_n_accept: f64,
}

const NPTS: usize = 2001;
const SPAN: f64 = 6.0;
const CHECKPOINT: usize = 32;

/// Composite-Simpson weights (the `h/3` factor folded in) for an odd-length
/// uniform grid.
fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    debug_assert!(n >= 3 && n % 2 == 1);
    let scale = h / 3.0;
    (0..n)
        .map(|i| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * scale
        })
        .collect()
}

/// Core stagewise recursion. Returns per-look upper-tail masses, lower-tail
/// masses (zeros for a one-sided rule), and the mass surviving past the
/// final look without crossing.
fn stagewise_masses(
    info_fractions: &[f64],
    z_bounds: &[f64],
    drift: f64,
    two_sided: bool,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let k = info_fractions.len();
    debug_assert_eq!(z_bounds.len(), k);
    let theta = drift;

    let mut upper = vec![0.0; k];
    let mut lower = vec![0.0; k];

    let t1 = info_fractions[0];
    let s1 = t1.sqrt();
    let up1 = z_bounds[0] * s1;
    let mean1 = theta * t1;
    upper[0] = phi(-(up1 - mean1) / s1);
    if two_sided {
        lower[0] = phi((-up1 - mean1) / s1);
    }
    if k == 1 {
        let surv = 1.0 - upper[0] - lower[0];
        return Ok((upper, lower, surv));
    }

    // Continuation-region grid at look 1; the not-yet-stopped sub-density is
    // exactly the N(θt₁, t₁) density restricted to it.
    let glo = {
        let trunc = mean1 - SPAN * s1;
        if two_sided {
            trunc.max(-up1)
        } else {
            trunc
        }
    };
    let ghi = up1.min(mean1 + SPAN * s1);
    if ghi <= glo {
        // The continuation region is empty: everything stopped at look 1
        // (up to the analytic masses already recorded).
        return Ok((upper, lower, 0.0));
    }
    let mut h = (ghi - glo) / (NPTS - 1) as f64;
    let mut grid: Vec<f64> = (0..NPTS).map(|j| glo + h * j as f64).collect();
    let mut dens: Vec<f64> = grid
        .iter()
        .map(|&w| normal_pdf((w - mean1) / s1) / s1)
        .collect();

    for i in 1..k {
        let dt = info_fractions[i] - info_fractions[i - 1];
        if dt <= 0.0 {
            return Err(Error::Domain(
                "information fractions must be strictly increasing".into(),
            ));
        }
        let sdt = dt.sqrt();
        let ti = info_fractions[i];
        let sti = ti.sqrt();
        let upi = z_bounds[i] * sti;
        let meani = theta * ti;

        // Simpson-weighted source masses.
        let weights = simpson_weights(NPTS, h);
        let src: Vec<f64> = dens
            .iter()
            .zip(&weights)
            .map(|(&f, &w)| f * w)
            .collect();

        // Exact tail masses for this look, integrating the increment's
        // Gaussian tail against the carried sub-density.
        let mut up_mass = 0.0;
        let mut lo_mass = 0.0;
        for (l, &g) in src.iter().enumerate() {
            let w = grid[l];
            up_mass += g * phi(-(upi - w - theta * dt) / sdt);
            if two_sided {
                lo_mass += g * phi((-upi - w - theta * dt) / sdt);
            }
        }
        upper[i] = up_mass;
        if two_sided {
            lower[i] = lo_mass;
        }

        if i == k - 1 {
            // Survivor mass: what stays strictly inside the final bounds.
            let mut surv = 0.0;
            for (l, &g) in src.iter().enumerate() {
                let w = grid[l];
                let hi_side = phi((upi - w - theta * dt) / sdt);
                let lo_side = if two_sided {
                    phi((-upi - w - theta * dt) / sdt)
                } else {
                    0.0
                };
                surv += g * (hi_side - lo_side);
            }
            return Ok((upper, lower, surv));
        }

        // Next continuation grid.
        let nglo = {
            let trunc = meani - SPAN * sti;
            if two_sided {
                trunc.max(-upi)
            } else {
                trunc
            }
        };
        let nghi = upi.min(meani + SPAN * sti);
        if nghi <= nglo {
            return Ok((upper, lower, 0.0));
        }
        let nh = (nghi - nglo) / (NPTS - 1) as f64;
        let ngrid: Vec<f64> = (0..NPTS).map(|j| nglo + nh * j as f64).collect();

        // Propagate the sub-density through the Gaussian increment. The
        // kernel exp(−x²/(2Δ)) along a uniform target grid satisfies
        // E_{j+1} = E_j·R_j, R_{j+1} = R_j·Q with Q = exp(−h²/Δ) constant,
        // so the inner loop needs two multiplies per cell; E and R are
        // recomputed from scratch every CHECKPOINT cells to stop rounding
        // drift and to recover from underflow.
        let mut ndens = vec![0.0; NPTS];
        let inv_dt = 1.0 / dt;
        let q = (-nh * nh * inv_dt).exp();
        let norm = 1.0 / (sdt * (2.0 * std::f64::consts::PI).sqrt());
        for (l, &g) in src.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let gl = g * norm;
            let x0 = ngrid[0] - grid[l] - theta * dt;
            let mut e = 0.0;
            let mut r = 0.0;
            for (j, nd) in ndens.iter_mut().enumerate() {
                if j % CHECKPOINT == 0 {
                    let x = x0 + nh * j as f64;
                    e = (-x * x * (0.5 * inv_dt)).exp();
                    r = (-(x * nh + 0.5 * nh * nh) * inv_dt).exp();
                }
                *nd += gl * e;
                e *= r;
                r *= q;
            }
        }

        grid = ngrid;
        dens = ndens;
        h = nh;
    }
    unreachable!("loop returns at the final look");
}

fn equal_fractions(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / k as f64).collect()
}

/// Boundary-crossing probabilities and conditional sample-size moments for a
/// design under `drift = δ√n_max` (the mean of the final-look z-statistic).
pub fn crossing_probabilities(spec: &GsdSpec, drift: f64) -> Result<StagewiseResult> {
    spec.validate()?;
    if !drift.is_finite() {
        return Err(Error::Domain(format!("drift must be finite, got {drift}")));
    }
    let bounds = spec.z_bounds()?;
    let two_sided = spec.sidedness == Sidedness::Two;
    let (upper, lower, _surv) =
        stagewise_masses(&spec.info_fractions, &bounds, drift, two_sided)?;

    let k = spec.k;
    let efficacy: Vec<f64> = (0..k).map(|i| upper[i] + lower[i]).collect();
    let reject_mass: f64 = efficacy.iter().sum();

    let (e_n_reject, var_n_reject) = if reject_mass > 0.0 {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for i in 0..k {
            let n_i = spec.info_fractions[i] * spec.n_max;
            m1 += efficacy[i] * n_i;
            m2 += efficacy[i] * n_i * n_i;
        }
        let mean = m1 / reject_mass;
        let var = (m2 / reject_mass - mean * mean).max(0.0);
        (mean, var)
    } else {
        (0.0, 0.0)
    };

    Ok(StagewiseResult {
        efficacy_stop_prob: efficacy,
        futility_stop_prob: vec![0.0; k],
        overall_reject: reject_mass,
        e_n_reject,
        var_n_reject,
        // Without a futility rule every non-rejecting path reaches n_max.
        e_n_accept: spec.n_max,
        var_n_accept: 0.0,
    })
}

/// Overall rejection probability at drift zero for equally spaced looks with
/// the given constant-parameter boundary shape.
fn null_reject_equal_looks(
    k: usize,
    sidedness: Sidedness,
    bounds: &[f64],
) -> Result<f64> {
    let fractions = equal_fractions(k);
    let two = sidedness == Sidedness::Two;
    let (upper, lower, _) = stagewise_masses(&fractions, bounds, 0.0, two)?;
    Ok(upper.iter().sum::<f64>() + lower.iter().sum::<f64>())
}

const BISECT_MAX_ITER: usize = 200;
const LEVEL_TOL: f64 = 1e-9;

/// Derives per-look one-tail nominal levels for a family at an overall level.
///
/// Pocock solves a constant z-bound, and O'Brien-Fleming solves `z_i = c/√t_i`,
/// each by bisection until the overall rejection probability at drift zero
/// matches `alpha_overall`. Haybittle-Peto is fixed — 0.0005 one-tail at every
/// interim and the full level at the final look — so its overall type-I error
/// may exceed `alpha_overall`. Looks are equally spaced, `t_i = i/k`.
pub fn nominal_levels(
    family: Family,
    k: usize,
    alpha_overall: f64,
    sidedness: Sidedness,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Domain("a design needs at least one look".into()));
    }
    if !alpha_overall.is_finite() || alpha_overall <= 0.0 || alpha_overall >= 1.0 {
        return Err(Error::Domain(format!(
            "overall level must lie in (0, 1), got {alpha_overall}"
        )));
    }
    let one_tail = match sidedness {
        Sidedness::One => alpha_overall,
        Sidedness::Two => alpha_overall / 2.0,
    };
    if k == 1 {
        return Ok(vec![one_tail]);
    }
    let fractions = equal_fractions(k);

    let bounds_for = |param: f64| -> Vec<f64> {
        match family {
            Family::Pocock => vec![param; k],
            Family::OBrienFleming => {
                fractions.iter().map(|&t| param / t.sqrt()).collect()
            }
            _ => unreachable!("only solved families reach here"),
        }
    };

    match family {
        Family::HaybittlePeto => {
            let mut levels = vec![0.0005; k];
            levels[k - 1] = one_tail;
            Ok(levels)
        }
        Family::Custom => Err(Error::Domain(
            "custom designs carry explicit nominal levels; none can be derived".into(),
        )),
        Family::Pocock | Family::OBrienFleming => {
            let mut lo = 0.5;
            let mut hi = 8.0;
            // Rejection probability decreases as the bound parameter grows.
            let g = |p: f64| -> Result<f64> {
                Ok(null_reject_equal_looks(k, sidedness, &bounds_for(p))? - alpha_overall)
            };
            let g_lo = g(lo)?;
            let g_hi = g(hi)?;
            if g_lo < 0.0 || g_hi > 0.0 {
                return Err(Error::Numeric(format!(
                    "boundary bisection bracket failed for {family} at k={k}, alpha={alpha_overall}"
                )));
            }
            let mut solved = None;
            for _ in 0..BISECT_MAX_ITER {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid)?;
                if gm.abs() <= LEVEL_TOL {
                    solved = Some(mid);
                    break;
                }
                if gm > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-13 * hi.max(1.0) {
                    solved = Some(0.5 * (lo + hi));
                    break;
                }
            }
            let param = solved.ok_or_else(|| {
                Error::Numeric(format!(
                    "boundary bisection did not converge after {BISECT_MAX_ITER} iterations"
                ))
            })?;
            bounds_for(param).iter().map(|&b| Ok(phi(-b))).collect()
        }
    }
}

/// Smallest final-look sample size whose design attains the target power at
/// effect size `delta` (one-sample scaling, `drift = δ√n`).
///
/// Haybittle-Peto keeps the fixed-design sample size: its interim spending is
/// negligible by construction and the cited tables size it that way.
pub fn max_sample_size(
    family: Family,
    k: usize,
    alpha_overall: f64,
    power: f64,
    delta: f64,
    sidedness: Sidedness,
) -> Result<f64> {
    if !(power.is_finite() && power > alpha_overall && power < 1.0) {
        return Err(Error::Domain(format!(
            "target power must lie in (alpha, 1), got {power} with alpha {alpha_overall}"
        )));
    }
    if !delta.is_finite() || delta == 0.0 {
        return Err(Error::Domain(format!(
            "effect size must be nonzero and finite, got {delta}"
        )));
    }
    let beta = 1.0 - power;
    if family == Family::HaybittlePeto {
        return required_n(delta, alpha_overall, beta, Arms::One, sidedness);
    }
    let levels = nominal_levels(family, k, alpha_overall, sidedness)?;
    let fractions = equal_fractions(k);
    let d = delta.abs();
    let spec_at = |n: f64| -> Result<GsdSpec> {
        GsdSpec::new(
            fractions.clone(),
            levels.clone(),
            family,
            sidedness,
            n,
        )
    };
    let reject_at = |n: f64| -> Result<f64> {
        let spec = spec_at(n)?;
        Ok(crossing_probabilities(&spec, d * n.sqrt())?.overall_reject)
    };

    // Bracket: power rises with n; start from the fixed-design size.
    let mut lo = 1e-3;
    let mut hi = required_n(d, alpha_overall, beta, Arms::One, sidedness)?.max(1.0);
    let mut expansions = 0;
    while reject_at(hi)? < power {
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Numeric(
                "sample-size search could not bracket the target power".into(),
            ));
        }
    }
    let mut solved = None;
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let gm = reject_at(mid)? - power;
        if gm.abs() <= 1e-6 {
            solved = Some(mid);
            break;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-9 * hi.max(1.0) {
            solved = Some(0.5 * (lo + hi));
            break;
        }
    }
    solved.ok_or_else(|| {
        Error::Numeric(format!(
            "sample-size bisection did not converge after {BISECT_MAX_ITER} iterations"
        ))
    })
}

/// Expected terminal sample sizes, split by hypothesis and by outcome.
///
/// Cells with zero probability are flagged empty rather than carrying NaN
/// moments. Without a futility rule, every non-significant path runs to
/// `n_max`, so both non-significant cells are degenerate at `n_max`.
pub fn expected_sample_sizes(
    spec: &GsdSpec,
    delta_null: f64,
    delta_alt: f64,
) -> Result<OutcomeCells> {
    if !delta_null.is_finite() || !delta_alt.is_finite() {
        return Err(Error::Domain(
            "effect sizes must be finite reals".into(),
        ));
    }
    let sqrt_n = spec.n_max.sqrt();
    let under = |delta: f64| crossing_probabilities(spec, delta * sqrt_n);
    let r0 = under(delta_null)?;
    let r1 = under(delta_alt)?;

    let sig_cell = |r: &StagewiseResult| -> Result<OutcomeCell> {
        if r.overall_reject > 0.0 {
            OutcomeCell::new(r.overall_reject, r.e_n_reject, r.var_n_reject)
        } else {
            Ok(OutcomeCell::empty())
        }
    };
    let nonsig_cell = |r: &StagewiseResult| -> Result<OutcomeCell> {
        let mass = 1.0 - r.overall_reject;
        if mass > 0.0 {
            OutcomeCell::new(mass, r.e_n_accept, r.var_n_accept)
        } else {
            Ok(OutcomeCell::empty())
        }
    };

    let cells = OutcomeCells {
        h0_sig: sig_cell(&r0)?,
        h0_nonsig: nonsig_cell(&r0)?,
        h1_sig: sig_cell(&r1)?,
        h1_nonsig: nonsig_cell(&r1)?,
    };
    cells.validate()?;
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn pocock4() -> GsdSpec {
        GsdSpec::equally_spaced(Family::Pocock, 4, 0.025, Sidedness::One, 59.15671819740917)
            .unwrap()
    }

    #[test]
    fn pocock_k4_one_sided_nominal_levels() {
        let levels = nominal_levels(Family::Pocock, 4, 0.025, Sidedness::One).unwrap();
        assert_eq!(levels.len(), 4);
        for &a in &levels {
            assert_relative_eq!(a, 0.009_105_504_333_400_396, max_relative = 1e-6);
        }
        // The published table rounds this to 0.00911.
        assert_abs_diff_eq!(levels[0], 0.00911, epsilon = 5e-6);
        let spec = pocock4();
        let r = crossing_probabilities(&spec, 0.0).unwrap();
        assert_abs_diff_eq!(r.overall_reject, 0.025, epsilon = 2e-9);
    }

    #[test]
    fn obrien_fleming_k4_nominal_levels() {
        let levels =
            nominal_levels(Family::OBrienFleming, 4, 0.025, Sidedness::One).unwrap();
        let expected = [
            2.576_344_976_264_684_5e-5,
            0.002_099_669_411_400_235_7,
            0.009_707_766_394_290_247_6,
            0.021_469_878_183_533_686,
        ];
        for (a, e) in levels.iter().zip(expected) {
            assert_relative_eq!(a, &e, max_relative = 1e-5);
        }
        // Published table, rounded: (0.00003, 0.0021, 0.0097, 0.0215).
        assert_abs_diff_eq!(levels[0], 0.00003, epsilon = 5e-6);
        assert_abs_diff_eq!(levels[1], 0.0021, epsilon = 5e-5);
        assert_abs_diff_eq!(levels[2], 0.0097, epsilon = 5e-5);
        assert_abs_diff_eq!(levels[3], 0.0215, epsilon = 5e-5);
        // Nominal levels rise towards the final look.
        for w in levels.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn haybittle_peto_overall_level_exceeds_target() {
        let levels =
            nominal_levels(Family::HaybittlePeto, 4, 0.025, Sidedness::One).unwrap();
        assert_eq!(levels, vec![0.0005, 0.0005, 0.0005, 0.025]);
        let spec = GsdSpec::new(
            equal_fractions(4),
            levels,
            Family::HaybittlePeto,
            Sidedness::One,
            50.0,
        )
        .unwrap();
        let r = crossing_probabilities(&spec, 0.0).unwrap();
        assert_relative_eq!(
            r.overall_reject,
            0.025_396_416_674_163_882,
            max_relative = 1e-6
        );
        // Rounded to two significant figures this is the published 2.54%.
        assert_abs_diff_eq!(r.overall_reject, 0.0254, epsilon = 5e-5);
        assert!(r.overall_reject > 0.025);
    }

    #[test]
    fn single_look_reduces_to_fixed_test() {
        for family in [
            Family::Pocock,
            Family::OBrienFleming,
            Family::HaybittlePeto,
            Family::Custom,
        ] {
            let levels = nominal_levels(family, 1, 0.025, Sidedness::One).unwrap();
            assert_eq!(levels, vec![0.025]);
            let levels2 = nominal_levels(family, 1, 0.05, Sidedness::Two).unwrap();
            assert_eq!(levels2, vec![0.025]);
        }
        let spec = GsdSpec::new(
            vec![1.0],
            vec![0.025],
            Family::Custom,
            Sidedness::One,
            50.0,
        )
        .unwrap();
        let r = crossing_probabilities(&spec, 0.0).unwrap();
        assert_abs_diff_eq!(r.overall_reject, 0.025, epsilon = 1e-12);
        assert_eq!(r.e_n_accept, 50.0);
        assert_eq!(r.e_n_reject, 50.0);
        assert_eq!(r.var_n_reject, 0.0);
    }

    // Five frozen recursion cases, each pinned against a high-precision
    // multivariate-normal rectangle oracle.
    #[test]
    fn frozen_recursion_case_symmetric_null() {
        let (up, lo, surv) =
            stagewise_masses(&[0.5, 1.0], &[2.0, 1.8], 0.0, true).unwrap();
        assert_abs_diff_eq!(up[0] + lo[0], 0.045_500_263_896_358_417, epsilon = 5e-8);
        assert_abs_diff_eq!(up[1] + lo[1], 0.052_210_696_497_218_101, epsilon = 5e-8);
        assert_abs_diff_eq!(surv, 0.902_289_039_606_423_48, epsilon = 5e-8);
        // Symmetry at zero drift.
        assert_abs_diff_eq!(up[0], lo[0], epsilon = 1e-15);
        assert_abs_diff_eq!(up[1], lo[1], epsilon = 1e-12);
    }

    #[test]
    fn frozen_recursion_case_two_sided_with_drift() {
        let bounds = [2.575_829_303_548_900_4, 1.959_963_984_540_054];
        let (up, lo, surv) = stagewise_masses(&[0.5, 1.0], &bounds, 1.2, true).unwrap();
        assert_abs_diff_eq!(up[0] + lo[0], 0.042_364_922_476_260_225, epsilon = 5e-8);
        assert_abs_diff_eq!(up[1] + lo[1], 0.188_994_611_279_857_28, epsilon = 5e-8);
        assert_abs_diff_eq!(surv, 0.768_640_466_243_882_49, epsilon = 5e-8);
        // The lower boundary is retained, not neglected, under positive drift.
        assert_abs_diff_eq!(lo[0], 3.081_275_373_501_399_2e-4, epsilon = 1e-9);
        assert_abs_diff_eq!(lo[1], 7.208_596_256_213_174_6e-4, epsilon = 1e-9);
    }

    #[test]
    fn frozen_recursion_case_one_sided_high_drift() {
        let (up, lo, surv) =
            stagewise_masses(&[0.3, 1.0], &[2.2, 2.0], 2.5, false).unwrap();
        assert_abs_diff_eq!(up[0], 0.203_073_369_617_583_82, epsilon = 5e-8);
        assert_abs_diff_eq!(up[1], 0.503_367_146_212_448_16, epsilon = 5e-8);
        assert_eq!(lo, vec![0.0, 0.0]);
        assert_abs_diff_eq!(surv, 0.293_559_484_169_968_02, epsilon = 5e-8);
    }

    #[test]
    fn frozen_recursion_case_three_stage_two_sided() {
        let (up, lo, surv) =
            stagewise_masses(&[0.25, 0.5, 1.0], &[2.8, 2.4, 2.0], 1.5, true).unwrap();
        let expected = [
            0.020_374_830_981_340_075,
            0.076_572_834_397_583_778,
            0.228_860_202_435_796_74,
        ];
        for i in 0..3 {
            assert_abs_diff_eq!(up[i] + lo[i], expected[i], epsilon = 5e-8);
        }
        assert_abs_diff_eq!(surv, 0.674_192_132_185_279_4, epsilon = 5e-8);
    }

    #[test]
    fn frozen_recursion_case_three_stage_one_sided() {
        let (up, _lo, surv) =
            stagewise_masses(&[0.2, 0.55, 1.0], &[3.0, 2.1, 1.7], 0.8, false).unwrap();
        let expected = [
            0.004_118_115_869_748_861_8,
            0.063_346_390_036_249_867,
            0.132_640_517_647_323_76,
        ];
        for i in 0..3 {
            assert_abs_diff_eq!(up[i], expected[i], epsilon = 5e-8);
        }
        assert_abs_diff_eq!(surv, 0.799_894_976_446_677_51, epsilon = 5e-8);
    }

    #[test]
    fn stage_masses_sum_to_one() {
        let cases: Vec<(GsdSpec, f64)> = vec![
            (pocock4(), 0.0),
            (pocock4(), 2.5),
            (
                GsdSpec::equally_spaced(
                    Family::OBrienFleming,
                    7,
                    0.05,
                    Sidedness::Two,
                    100.0,
                )
                .unwrap(),
                1.0,
            ),
            (
                GsdSpec::equally_spaced(
                    Family::HaybittlePeto,
                    4,
                    0.025,
                    Sidedness::One,
                    50.0,
                )
                .unwrap(),
                3.5,
            ),
        ];
        for (spec, drift) in cases {
            let bounds = spec.z_bounds().unwrap();
            let (up, lo, surv) = stagewise_masses(
                &spec.info_fractions,
                &bounds,
                drift,
                spec.sidedness == Sidedness::Two,
            )
            .unwrap();
            let total =
                up.iter().sum::<f64>() + lo.iter().sum::<f64>() + surv;
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn two_sided_k2_frozen_boundaries() {
        let pocock = nominal_levels(Family::Pocock, 2, 0.05, Sidedness::Two).unwrap();
        // One-tail level is half the published two-sided nominal level.
        assert_relative_eq!(
            2.0 * pocock[0],
            0.029_385_785_866_269_335,
            max_relative = 1e-6
        );
        assert_eq!(pocock[0], pocock[1]);

        let spec = GsdSpec::equally_spaced(
            Family::OBrienFleming,
            2,
            0.05,
            Sidedness::Two,
            1.0,
        )
        .unwrap();
        let bounds = spec.z_bounds().unwrap();
        assert_relative_eq!(bounds[0], 2.796_509_681_287_777_7, max_relative = 1e-6);
        assert_relative_eq!(bounds[1], 1.977_430_959_292_418_6, max_relative = 1e-6);
        assert_relative_eq!(
            2.0 * spec.nominal_levels[1],
            0.047_992_937_365_970_781,
            max_relative = 1e-6
        );
    }

    #[test]
    fn overall_reject_strictly_increasing_in_drift() {
        let spec = pocock4();
        let mut prev = -1.0;
        for drift in [0.0, 0.8, 1.6, 2.4, 3.2] {
            let r = crossing_probabilities(&spec, drift).unwrap();
            assert!(
                r.overall_reject > prev,
                "reject probability must rise with drift: {} after {prev}",
                r.overall_reject
            );
            prev = r.overall_reject;
        }
    }

    #[test]
    fn pocock_expected_sample_sizes_frozen() {
        let spec = pocock4();
        let n_max = spec.n_max;
        let cases = [
            (0.0, 32.089_134_850_900_415, 0.024_999_999_999_954_173),
            (0.2, 38.406_927_843_174_003, 0.269_451_694_885_358_69),
            (0.4, 34.707_061_650_885_045, 0.801_187_728_264_134_2),
            (0.458_419_525_357_300_24, 32.176_787_429_646_858, 0.899_999_999_986_484_72),
            (0.6, 25.314_211_984_311_711, 0.990_519_235_231_619_44),
        ];
        for (delta, e_n, reject) in cases {
            let r = crossing_probabilities(&spec, delta * n_max.sqrt()).unwrap();
            assert_abs_diff_eq!(r.overall_reject, reject, epsilon = 1e-7);
            assert_relative_eq!(r.e_n_reject, e_n, max_relative = 1e-6);
            assert_eq!(r.e_n_accept, n_max);
            assert_eq!(r.var_n_accept, 0.0);
            assert!(r.var_n_reject > 0.0);
        }
    }

    #[test]
    fn expected_sample_sizes_cells() {
        let spec = pocock4();
        // Below the design effect the significant-stop expectation is larger
        // under the alternative than under the null.
        let cells = expected_sample_sizes(&spec, 0.0, 0.2).unwrap();
        assert!(cells.h0_sig.mean_n < cells.h1_sig.mean_n);
        assert_eq!(cells.h0_nonsig.mean_n, spec.n_max);
        assert_eq!(cells.h1_nonsig.mean_n, spec.n_max);
        assert_eq!(cells.h0_nonsig.var_n, 0.0);
        assert_abs_diff_eq!(
            cells.h0_sig.mass + cells.h0_nonsig.mass,
            1.0,
            epsilon = 1e-12
        );
        assert!(!cells.h0_sig.empty && !cells.h1_sig.empty);

        // A single look makes every cell degenerate at n_max.
        let k1 = GsdSpec::new(
            vec![1.0],
            vec![0.025],
            Family::Custom,
            Sidedness::One,
            50.0,
        )
        .unwrap();
        let cells1 = expected_sample_sizes(&k1, 0.0, 0.458).unwrap();
        for cell in [
            &cells1.h0_sig,
            &cells1.h0_nonsig,
            &cells1.h1_sig,
            &cells1.h1_nonsig,
        ] {
            assert_eq!(cell.mean_n, 50.0);
            assert_eq!(cell.var_n, 0.0);
        }
    }

    #[test]
    fn haybittle_peto_significant_stops_cluster_at_final_look() {
        let levels =
            nominal_levels(Family::HaybittlePeto, 4, 0.025, Sidedness::One).unwrap();
        let spec = GsdSpec::new(
            equal_fractions(4),
            levels,
            Family::HaybittlePeto,
            Sidedness::One,
            50.0,
        )
        .unwrap();
        let cells = expected_sample_sizes(&spec, 0.0, 0.458).unwrap();
        assert!(
            cells.h0_sig.mean_n > 0.9 * spec.n_max,
            "null significant stops should be dominated by the final look, got {}",
            cells.h0_sig.mean_n
        );
    }

    #[test]
    fn max_sample_size_frozen_values() {
        let delta_star = 0.458_419_525_357_300_24;
        let n_pocock =
            max_sample_size(Family::Pocock, 4, 0.025, 0.90, delta_star, Sidedness::One)
                .unwrap();
        assert_abs_diff_eq!(n_pocock, 59.156_718_197_409_17, epsilon = 1e-3);
        // Published, rounded: 59.2.
        assert_abs_diff_eq!(n_pocock, 59.2, epsilon = 0.05);

        let n_obf = max_sample_size(
            Family::OBrienFleming,
            4,
            0.025,
            0.90,
            delta_star,
            Sidedness::One,
        )
        .unwrap();
        assert_abs_diff_eq!(n_obf, 51.108_151_903_253_209, epsilon = 1e-3);
        assert_abs_diff_eq!(n_obf, 51.1, epsilon = 0.05);

        // Haybittle-Peto is sized like the fixed design.
        let n_hp = max_sample_size(
            Family::HaybittlePeto,
            4,
            0.025,
            0.90,
            delta_star,
            Sidedness::One,
        )
        .unwrap();
        assert_abs_diff_eq!(n_hp, 50.0, epsilon = 1e-9);

        // A single look recovers the fixed design by bisection.
        let n_k1 =
            max_sample_size(Family::Custom, 1, 0.025, 0.90, delta_star, Sidedness::One)
                .unwrap();
        assert_abs_diff_eq!(n_k1, 50.0, epsilon = 1e-3);
    }

    #[test]
    fn max_sample_size_rounded_effect() {
        let n_pocock =
            max_sample_size(Family::Pocock, 4, 0.025, 0.90, 0.46, Sidedness::One).unwrap();
        assert_abs_diff_eq!(n_pocock, 58.750_913_518_616_528, epsilon = 1e-3);
        let n_obf = max_sample_size(
            Family::OBrienFleming,
            4,
            0.025,
            0.90,
            0.46,
            Sidedness::One,
        )
        .unwrap();
        assert_abs_diff_eq!(n_obf, 50.757_558_973_080_123, epsilon = 1e-3);
    }

    #[test]
    fn validation_rejects_malformed_specs() {
        assert!(matches!(
            GsdSpec::new(vec![], vec![], Family::Custom, Sidedness::One, 50.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            GsdSpec::new(
                vec![0.5, 0.4, 1.0],
                vec![0.01; 3],
                Family::Custom,
                Sidedness::One,
                50.0
            ),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            GsdSpec::new(
                vec![0.5, 0.9],
                vec![0.01; 2],
                Family::Custom,
                Sidedness::One,
                50.0
            ),
            Err(Error::Domain(_)),
        ));
        assert!(matches!(
            GsdSpec::new(
                vec![0.5, 1.0],
                vec![0.01],
                Family::Custom,
                Sidedness::One,
                50.0
            ),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            GsdSpec::new(
                vec![0.5, 1.0],
                vec![0.01, 1.0],
                Family::Custom,
                Sidedness::One,
                50.0
            ),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            GsdSpec::new(
                vec![0.5, 1.0],
                vec![0.01, 0.02],
                Family::Custom,
                Sidedness::One,
                0.0
            ),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            nominal_levels(Family::Custom, 4, 0.025, Sidedness::One),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            max_sample_size(Family::Pocock, 4, 0.025, 0.9, 0.0, Sidedness::One),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            max_sample_size(Family::Pocock, 4, 0.025, 0.01, 0.46, Sidedness::One),
            Err(Error::Domain(_))
        ));
        let spec = pocock4();
        assert!(matches!(
            crossing_probabilities(&spec, f64::NAN),
            Err(Error::Domain(_))
        ));
    }
}
