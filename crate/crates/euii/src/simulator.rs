//! Deterministic, parallel Monte Carlo engine for sequential two-sample
//! t-test experiments under several stopping methods, with and without
//! predictive-power futility.
//!
//! Experiments start at 8 observations per group and add batches of 4 per
//! group up to `n_max`, testing with a two-sided pooled-variance t-test at
//! every look. Each replication is seeded by a counter-based hash of
//! `(master_seed, condition, replication)`, and all per-replication tallies
//! are integers, so results are bit-identical for any worker count.

use crate::adaptive_euii::{
    euii_adaptive, mixture_moments, posterior_weights, AdaptiveEuii, OutcomeCell, OutcomeCells,
};
use crate::dist::{phi, t_quantile, t_two_sided_p};
use crate::error::{Error, Result};
use crate::evidence::likelihood_ratios;
use crate::fixed_design::Sidedness;
use crate::gsd::{nominal_levels, Family};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Per-group size at the first look.
pub const STAGE_START: u32 = 8;
/// Per-group batch size added at each subsequent look.
pub const STAGE_STEP: u32 = 4;
/// Default grid of maximum per-group sizes.
pub const DEFAULT_N_MAX_GRID: [u32; 6] = [12, 16, 20, 24, 28, 32];
/// Default grid of standardized effect sizes (0 is the null condition).
pub const DEFAULT_DELTAS: [f64; 5] = [0.0, 0.3, 0.5, 0.8, 1.0];
/// Default predictive-power futility threshold.
pub const DEFAULT_PP_THRESHOLD: f64 = 0.30;
/// Reinagel's fixed interim futility bound on the two-sided p-value.
pub const REINAGEL_FUTILITY_P: f64 = 0.1;
/// Two-sided significance level shared by every stopping method.
pub const STUDY_ALPHA: f64 = 0.05;
/// Default number of replications per condition.
pub const DEFAULT_NSIM: u64 = 100_000;

/// Stopping method applied at each look.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Control arm: a single test at `n_max`, no interim looks.
    Fixed,
    /// Test at the full level at every look (inflates the Type I error).
    NHacking,
    /// Reject at p ≤ 0.05, continue only in the promising zone
    /// 0.05 < p ≤ 0.1, stop for futility at p > 0.1.
    Reinagel,
    /// Pocock boundary at overall two-sided 5%.
    Pocock,
    /// O'Brien-Fleming boundary at overall two-sided 5%.
    ///
    /// The serde name matches [`Method::as_str`] (the label used in every
    /// table), not the default snake_case split of the camel-case name.
    #[serde(rename = "obrien_fleming")]
    OBrienFleming,
    /// 0.001 two-sided at interims, 0.05 at the final look.
    HaybittlePeto,
}

impl Method {
    /// Stable snake_case identifier used in tabular output.
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Fixed => "fixed",
            Method::NHacking => "n_hacking",
            Method::Reinagel => "reinagel",
            Method::Pocock => "pocock",
            Method::OBrienFleming => "obrien_fleming",
            Method::HaybittlePeto => "haybittle_peto",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Futility rule layered on top of a stopping method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Futility {
    /// No futility stopping.
    None,
    /// Stop when the predictive power to reject at the next look falls
    /// below the threshold.
    PredictivePower(f64),
    /// Reinagel's fixed interim bound: stop when p exceeds the threshold.
    ReinagelFixed(f64),
}

/// A stopping method paired with its futility rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodVariant {
    /// Efficacy stopping method.
    pub method: Method,
    /// Futility rule.
    pub futility: Futility,
}

impl MethodVariant {
    /// Builds a variant, enforcing the method/futility pairing rules.
    pub fn new(method: Method, futility: Futility) -> Result<Self> {
        let v = MethodVariant { method, futility };
        v.validate()?;
        Ok(v)
    }

    fn validate(&self) -> Result<()> {
        match (self.method, self.futility) {
            (Method::Reinagel, Futility::ReinagelFixed(t)) => {
                if !(t > 0.0 && t < 1.0) {
                    return Err(Error::Domain(format!(
                        "reinagel futility bound must lie in (0,1), got {t}"
                    )));
                }
            }
            (Method::Reinagel, _) | (_, Futility::ReinagelFixed(_)) => {
                return Err(Error::Domain(
                    "the reinagel method and its fixed futility bound are inseparable".into(),
                ));
            }
            (Method::Fixed, Futility::PredictivePower(_)) => {
                return Err(Error::Domain(
                    "the fixed design has no interim looks for a futility rule".into(),
                ));
            }
            (_, Futility::PredictivePower(t)) => {
                if !(t > 0.0 && t < 1.0) {
                    return Err(Error::Domain(format!(
                        "predictive-power threshold must lie in (0,1), got {t}"
                    )));
                }
            }
            (_, Futility::None) => {}
        }
        Ok(())
    }

    /// Stable identifier: the method name, with `_pp` appended when a
    /// predictive-power futility rule is active.
    pub fn label(&self) -> String {
        match self.futility {
            Futility::PredictivePower(_) => format!("{}_pp", self.method),
            _ => self.method.to_string(),
        }
    }
}

/// The ten default method variants of the study design.
pub fn default_variants() -> Vec<MethodVariant> {
    let pp = Futility::PredictivePower(DEFAULT_PP_THRESHOLD);
    vec![
        MethodVariant { method: Method::Fixed, futility: Futility::None },
        MethodVariant { method: Method::NHacking, futility: Futility::None },
        MethodVariant { method: Method::NHacking, futility: pp },
        MethodVariant {
            method: Method::Reinagel,
            futility: Futility::ReinagelFixed(REINAGEL_FUTILITY_P),
        },
        MethodVariant { method: Method::Pocock, futility: Futility::None },
        MethodVariant { method: Method::Pocock, futility: pp },
        MethodVariant { method: Method::OBrienFleming, futility: Futility::None },
        MethodVariant { method: Method::OBrienFleming, futility: pp },
        MethodVariant { method: Method::HaybittlePeto, futility: Futility::None },
        MethodVariant { method: Method::HaybittlePeto, futility: pp },
    ]
}

/// One simulation condition: a data-generating mechanism plus a variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimCondition {
    /// Maximum per-group sample size; must equal `8 + 4m` for some `m ≥ 0`.
    pub n_max_per_group: u32,
    /// True standardized mean difference of the treatment group.
    pub delta: f64,
    /// Stopping method and futility rule.
    pub variant: MethodVariant,
}

impl SimCondition {
    /// Validates the stage schedule and the variant pairing.
    pub fn validate(&self) -> Result<()> {
        if self.n_max_per_group < STAGE_START
            || (self.n_max_per_group - STAGE_START) % STAGE_STEP != 0
        {
            return Err(Error::Domain(format!(
                "n_max per group must be {STAGE_START} plus a multiple of {STAGE_STEP}, got {}",
                self.n_max_per_group
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::Domain(format!(
                "effect size must be finite, got {}",
                self.delta
            )));
        }
        self.variant.validate()
    }
}

/// Per-group sample sizes at each look: `8, 12, …, n_max`.
pub fn stage_sizes(n_max_per_group: u32) -> Vec<u32> {
    (STAGE_START..=n_max_per_group)
        .step_by(STAGE_STEP as usize)
        .collect()
}

/// The full default study grid: every `n_max`, effect size, and variant.
pub fn default_grid() -> Vec<SimCondition> {
    let mut grid = Vec::new();
    for &n_max in &DEFAULT_N_MAX_GRID {
        for &delta in &DEFAULT_DELTAS {
            for variant in default_variants() {
                grid.push(SimCondition { n_max_per_group: n_max, delta, variant });
            }
        }
    }
    grid
}

/// Why a trial stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The efficacy boundary was crossed.
    Efficacy,
    /// A futility rule fired at an interim look.
    Futility,
    /// The final look was reached without crossing.
    MaxReached,
}

/// Outcome of one simulated trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    /// Whether the null hypothesis was rejected.
    pub rejected: bool,
    /// 1-based look index at termination (on the full stage schedule).
    pub stop_stage: usize,
    /// Per-group sample size at termination.
    pub n_per_group_terminal: u32,
    /// Efficacy, futility, or ran to the final look.
    pub reason: StopReason,
}

/// Monte Carlo summary of one condition.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionSummary {
    /// The condition simulated.
    pub condition: SimCondition,
    /// Number of replications.
    pub nsim: u64,
    /// Master seed of the run.
    pub master_seed: u64,
    /// Fraction of replications that rejected.
    pub rejection_rate: f64,
    /// Binomial Monte Carlo standard error of the rejection rate.
    pub rejection_mcse: f64,
    /// Mean terminal sample size per group.
    pub mean_n_per_group: f64,
    /// Monte Carlo standard error of the per-group mean.
    pub mean_n_mcse: f64,
    /// Fraction of replications stopped by a futility rule.
    pub futility_stop_rate: f64,
    /// Terminal-total-sample-size statistics among rejecting replications
    /// (total = both groups combined, the evidence-per-unit basis).
    pub sig_cell: OutcomeCell,
    /// Terminal-total-sample-size statistics among non-rejecting replications.
    pub nonsig_cell: OutcomeCell,
}

/// One evidence row: a nonzero-effect condition combined with its null twin.
#[derive(Debug, Clone, Serialize)]
pub struct EuiiRow {
    /// Maximum per-group sample size.
    pub n_max_per_group: u32,
    /// Effect size of the alternative condition.
    pub delta: f64,
    /// Stopping method and futility rule.
    pub variant: MethodVariant,
    /// Assumed prior probability of a true effect.
    pub prior_h1: f64,
    /// Likelihood ratio of a significant result.
    pub lr_plus: f64,
    /// Likelihood ratio of a nonsignificant result.
    pub lr_minus: f64,
    /// First- and second-order evidence per unit with posterior moments.
    pub adaptive: AdaptiveEuii,
}

/// Everything a study run produces.
#[derive(Debug, Clone, Serialize)]
pub struct StudyResult {
    /// One summary per condition, in input order.
    pub summaries: Vec<ConditionSummary>,
    /// Evidence rows for each (condition with δ ≠ 0 whose δ = 0 twin is in
    /// the grid) × prior.
    pub euii_rows: Vec<EuiiRow>,
    /// How many empirical rates hit the `[1/(2·nsim), 1 − 1/(2·nsim)]` clamp
    /// during evidence assembly.
    pub clamped_rates: u64,
    /// Condition pairs whose evidence rows were skipped because an outcome
    /// never occurred in the sample, leaving a cell without moment
    /// estimates. Resolved by increasing replications.
    pub skipped_euii_conditions: u64,
    /// Number of replications per condition.
    pub nsim: u64,
    /// Master seed of the run.
    pub master_seed: u64,
}

// ---------------------------------------------------------------------------
// Deterministic seeding and normal variates.

const SM64_GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64_next(x: u64) -> u64 {
    let mut z = x.wrapping_add(SM64_GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based replication seed: a splitmix64 chain over
/// `(master, condition, replication)`. Parallel scheduling can never change
/// which stream a replication sees.
pub fn derive_seed(master: u64, condition: u64, replication: u64) -> u64 {
    splitmix64_next(splitmix64_next(splitmix64_next(master) ^ condition) ^ replication)
}

/// Key identifying a data-generating mechanism, so every variant sharing
/// `(n_max, delta)` sees identical data within a replication.
fn dgm_key(n_max_per_group: u32, delta: f64) -> u64 {
    splitmix64_next(splitmix64_next(n_max_per_group as u64) ^ delta.to_bits())
}

const INV_2_53: f64 = 1.0 / 9_007_199_254_740_992.0; // 2⁻⁵³

/// Box-Muller pair with fixed consumption: exactly two `u64` draws.
pub(crate) fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * INV_2_53; // (0, 1]
    let u2 = (rng.next_u64() >> 11) as f64 * INV_2_53; // [0, 1)
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Fills `out` with `N(mean, 1)` draws; `out.len()` must be even so the
/// stream position stays pair-aligned.
fn fill_normal(rng: &mut ChaCha8Rng, mean: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len() % 2, 0);
    for pair in out.chunks_exact_mut(2) {
        let (a, b) = normal_pair(rng);
        pair[0] = a + mean;
        pair[1] = b + mean;
    }
}

// ---------------------------------------------------------------------------
// Stage tests.

/// Pooled-variance two-sample t statistic and two-sided p-value.
///
/// Zero pooled variance is degenerate: p = 1 when the means are equal,
/// p = 0 otherwise (impossible under a continuous data-generating process;
/// the convention only guards synthetic inputs).
pub fn two_sample_t(group_a: &[f64], group_b: &[f64]) -> Result<(f64, f64)> {
    let na = group_a.len();
    let nb = group_b.len();
    if na < 2 || nb < 2 {
        return Err(Error::Domain(format!(
            "each group needs at least 2 observations, got {na} and {nb}"
        )));
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let ss = |xs: &[f64], m: f64| xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>();
    let ma = mean(group_a);
    let mb = mean(group_b);
    let df = (na + nb - 2) as f64;
    let sp2 = (ss(group_a, ma) + ss(group_b, mb)) / df;
    if sp2 <= 0.0 {
        return Ok(if ma == mb { (0.0, 1.0) } else { (f64::INFINITY * (ma - mb).signum(), 0.0) });
    }
    let se = (sp2 * (1.0 / na as f64 + 1.0 / nb as f64)).sqrt();
    let t = (ma - mb) / se;
    let p = t_two_sided_p(t, df)?;
    Ok((t, p))
}

/// Two-sided p-value of the pooled-variance two-sample t-test.
pub fn two_sample_t_p(group_a: &[f64], group_b: &[f64]) -> Result<f64> {
    two_sample_t(group_a, group_b).map(|(_, p)| p)
}

/// Predictive power to reject at the next look, given the current z-scale
/// statistic `z_i` at `n_i` per group and a next look at `n_next` per group
/// tested at the two-sided level `a_next`:
///
/// `PP = Φ(−c/s + z/√(1−f)) + Φ(−c/s − z/√(1−f))`
///
/// with `f = n_i/n_next`, `s = √(1/f − 1)`, and `c` the upper `a_next/2`
/// t-quantile at `2·n_next − 2` degrees of freedom.
pub fn predictive_power(z_i: f64, n_i: u32, n_next: u32, a_next: f64) -> Result<f64> {
    if n_i < 2 || n_next <= n_i {
        return Err(Error::Domain(format!(
            "need n_next > n_i >= 2, got n_i = {n_i}, n_next = {n_next}"
        )));
    }
    if !(a_next > 0.0 && a_next < 1.0) {
        return Err(Error::Domain(format!(
            "next-look level must lie in (0,1), got {a_next}"
        )));
    }
    if !z_i.is_finite() {
        return Err(Error::Domain(format!("z must be finite, got {z_i}")));
    }
    let f = n_i as f64 / n_next as f64;
    let df = (2 * n_next - 2) as f64;
    let crit = t_quantile(1.0 - a_next / 2.0, df)?;
    let s = (1.0 / f - 1.0).sqrt();
    let shrink = (1.0 - f).sqrt();
    Ok(phi(-crit / s + z_i / shrink) + phi(-crit / s - z_i / shrink))
}

/// The two-sided p-value at the current look below which (inclusive) the
/// predictive power to reject at the next look stays at or above
/// `pp_threshold`. An interim with `p > threshold` is futile.
pub fn futility_p_threshold(
    n_i: u32,
    n_next: u32,
    a_next: f64,
    pp_threshold: f64,
) -> Result<f64> {
    if !(pp_threshold > 0.0 && pp_threshold < 1.0) {
        return Err(Error::Domain(format!(
            "predictive-power threshold must lie in (0,1), got {pp_threshold}"
        )));
    }
    // Predictive power increases with |z|; bisect for the crossing point.
    let g = |z: f64| -> Result<f64> { Ok(predictive_power(z, n_i, n_next, a_next)? - pp_threshold) };
    if g(0.0)? >= 0.0 {
        // Even a flat interim clears the bar: nothing is ever futile.
        return Ok(1.0);
    }
    let mut lo = 0.0;
    let mut hi = 40.0;
    if g(hi)? < 0.0 {
        return Err(Error::Numeric(
            "predictive-power threshold not reachable at any interim statistic".into(),
        ));
    }
    let mut z_star = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm.abs() <= 1e-13 || hi - lo <= 1e-13 {
            z_star = Some(mid);
            break;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z_star = z_star
        .ok_or_else(|| Error::Numeric("futility threshold bisection did not converge".into()))?;
    Ok(2.0 * phi(-z_star))
}

// ---------------------------------------------------------------------------
// Stopping plans.

/// Cached boundary levels, keyed by (family, looks, overall level, sides).
pub(crate) fn cached_nominal_levels(
    family: Family,
    k: usize,
    alpha: f64,
    sidedness: Sidedness,
) -> Result<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u8, usize, u64, u8), Vec<f64>>>> = OnceLock::new();
    let fam_id = match family {
        Family::Pocock => 0u8,
        Family::OBrienFleming => 1,
        Family::HaybittlePeto => 2,
        Family::Custom => 3,
    };
    let side_id = match sidedness {
        Sidedness::One => 0u8,
        Sidedness::Two => 1,
    };
    let key = (fam_id, k, alpha.to_bits(), side_id);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(levels) = cache.lock().expect("cache lock").get(&key) {
        return Ok(levels.clone());
    }
    let levels = nominal_levels(family, k, alpha, sidedness)?;
    cache
        .lock()
        .expect("cache lock")
        .insert(key, levels.clone());
    Ok(levels)
}

/// Precomputed per-look rules for one variant on one stage schedule.
#[derive(Debug, Clone)]
pub(crate) struct StoppingPlan {
    /// Indices into the shared stagewise p-value sequence.
    stage_idx: Vec<usize>,
    /// 1-based look numbers on the full schedule (for `stop_stage`).
    stage_no: Vec<usize>,
    /// Per-group sizes at each of this variant's looks.
    sizes: Vec<u32>,
    /// Two-sided efficacy levels at each look.
    efficacy_levels: Vec<f64>,
    /// Two-sided p-value futility bounds (`None` at the final look and for
    /// variants without futility).
    futility_bounds: Vec<Option<f64>>,
}

impl StoppingPlan {
    pub(crate) fn build(variant: &MethodVariant, n_max_per_group: u32) -> Result<Self> {
        let schedule = stage_sizes(n_max_per_group);
        let k = schedule.len();
        let (stage_idx, sizes): (Vec<usize>, Vec<u32>) = if variant.method == Method::Fixed {
            (vec![k - 1], vec![n_max_per_group])
        } else {
            ((0..k).collect(), schedule.clone())
        };
        let stage_no: Vec<usize> = stage_idx.iter().map(|&i| i + 1).collect();
        let looks = stage_idx.len();

        let efficacy_levels: Vec<f64> = match variant.method {
            Method::Fixed => vec![STUDY_ALPHA],
            Method::NHacking | Method::Reinagel => vec![STUDY_ALPHA; looks],
            Method::HaybittlePeto => {
                let mut v = vec![0.001; looks];
                v[looks - 1] = STUDY_ALPHA;
                v
            }
            Method::Pocock => {
                cached_nominal_levels(Family::Pocock, looks, STUDY_ALPHA, Sidedness::Two)?
                    .iter()
                    .map(|a| 2.0 * a)
                    .collect()
            }
            Method::OBrienFleming => {
                cached_nominal_levels(Family::OBrienFleming, looks, STUDY_ALPHA, Sidedness::Two)?
                    .iter()
                    .map(|a| 2.0 * a)
                    .collect()
            }
        };

        let mut futility_bounds = vec![None; looks];
        match variant.futility {
            Futility::None => {}
            Futility::ReinagelFixed(bound) => {
                for fb in futility_bounds.iter_mut().take(looks - 1) {
                    *fb = Some(bound);
                }
            }
            Futility::PredictivePower(threshold) => {
                for i in 0..looks.saturating_sub(1) {
                    let bound = futility_p_threshold(
                        sizes[i],
                        sizes[i + 1],
                        efficacy_levels[i + 1],
                        threshold,
                    )?;
                    futility_bounds[i] = Some(bound);
                }
            }
        }

        Ok(StoppingPlan { stage_idx, stage_no, sizes, efficacy_levels, futility_bounds })
    }

    /// Applies the plan to a shared stagewise p-value sequence.
    pub(crate) fn apply(&self, stage_pvalues: &[f64]) -> TrialRecord {
        let last = self.stage_idx.len() - 1;
        for j in 0..=last {
            let p = stage_pvalues[self.stage_idx[j]];
            if p <= self.efficacy_levels[j] {
                return TrialRecord {
                    rejected: true,
                    stop_stage: self.stage_no[j],
                    n_per_group_terminal: self.sizes[j],
                    reason: StopReason::Efficacy,
                };
            }
            if j < last {
                if let Some(bound) = self.futility_bounds[j] {
                    if p > bound {
                        return TrialRecord {
                            rejected: false,
                            stop_stage: self.stage_no[j],
                            n_per_group_terminal: self.sizes[j],
                            reason: StopReason::Futility,
                        };
                    }
                }
            }
        }
        TrialRecord {
            rejected: false,
            stop_stage: self.stage_no[last],
            n_per_group_terminal: self.sizes[last],
            reason: StopReason::MaxReached,
        }
    }
}

/// Stagewise two-sided p-values for one replication: observations accrue in
/// per-group batches (control first, then treatment) and the test is rerun
/// on all data at each look.
fn stagewise_pvalues(rng: &mut ChaCha8Rng, schedule: &[u32], delta: f64) -> Result<Vec<f64>> {
    let n_max = *schedule.last().expect("nonempty schedule") as usize;
    let mut control = vec![0.0; n_max];
    let mut treatment = vec![0.0; n_max];
    let mut filled = 0usize;
    let mut pvalues = Vec::with_capacity(schedule.len());
    for &size in schedule {
        let size = size as usize;
        fill_normal(rng, 0.0, &mut control[filled..size]);
        fill_normal(rng, delta, &mut treatment[filled..size]);
        filled = size;
        pvalues.push(two_sample_t_p(&control[..size], &treatment[..size])?);
    }
    Ok(pvalues)
}

/// Simulates one trial of a condition from a replication seed.
pub fn simulate_trial(condition: &SimCondition, seed: u64) -> Result<TrialRecord> {
    condition.validate()?;
    let plan = StoppingPlan::build(&condition.variant, condition.n_max_per_group)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schedule = stage_sizes(condition.n_max_per_group);
    let pvalues = stagewise_pvalues(&mut rng, &schedule, condition.delta)?;
    Ok(plan.apply(&pvalues))
}

// ---------------------------------------------------------------------------
// Study engine.

/// Integer tallies per variant; `u64` addition makes the parallel reduction
/// order-insensitive and thus bit-identical for any worker count.
#[derive(Debug, Clone, Copy, Default)]
struct VariantTally {
    reject: u64,
    futility: u64,
    sig_n: u64,
    sig_n2: u64,
    nonsig_n: u64,
    nonsig_n2: u64,
}

impl VariantTally {
    fn add(&mut self, other: &VariantTally) {
        self.reject += other.reject;
        self.futility += other.futility;
        self.sig_n += other.sig_n;
        self.sig_n2 += other.sig_n2;
        self.nonsig_n += other.nonsig_n;
        self.nonsig_n2 += other.nonsig_n2;
    }

    fn record(&mut self, trial: &TrialRecord) {
        let n = trial.n_per_group_terminal as u64;
        if trial.rejected {
            self.reject += 1;
            self.sig_n += n;
            self.sig_n2 += n * n;
        } else {
            self.nonsig_n += n;
            self.nonsig_n2 += n * n;
        }
        if trial.reason == StopReason::Futility {
            self.futility += 1;
        }
    }
}

fn cell_from_tally(count: u64, sum_n: u64, sum_n2: u64, nsim: u64) -> Result<OutcomeCell> {
    if count == 0 {
        return Ok(OutcomeCell::empty());
    }
    let mass = count as f64 / nsim as f64;
    // Totals over both groups: 2n per group-size n.
    let mean = 2.0 * sum_n as f64 / count as f64;
    let var = (4.0 * sum_n2 as f64 / count as f64 - mean * mean).max(0.0);
    OutcomeCell::new(mass, mean, var)
}

/// Runs the study: `nsim` replications of every condition, reduced with
/// integer tallies, then summarized and combined into evidence rows for each
/// nonzero effect with its δ = 0 twin at assumed priors `priors`.
///
/// Results are bit-identical for any `workers ≥ 1`.
pub fn run_study(
    conditions: &[SimCondition],
    nsim: u64,
    master_seed: u64,
    workers: usize,
    priors: &[f64],
) -> Result<StudyResult> {
    if nsim < 1000 {
        return Err(Error::Domain(format!(
            "at least 1000 replications are needed for stable rates, got {nsim}"
        )));
    }
    if workers == 0 {
        return Err(Error::Domain("worker count must be at least 1".into()));
    }
    if conditions.is_empty() {
        return Err(Error::Domain("no conditions to simulate".into()));
    }
    for c in conditions {
        c.validate()?;
    }
    for &p in priors {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "assumed priors must lie strictly in (0,1), got {p}"
            )));
        }
    }

    // Group conditions by data-generating mechanism so every variant sees
    // the same data within a replication.
    let mut dgm_order: Vec<(u32, u64)> = Vec::new();
    let mut dgm_members: HashMap<(u32, u64), Vec<usize>> = HashMap::new();
    for (idx, c) in conditions.iter().enumerate() {
        let key = (c.n_max_per_group, c.delta.to_bits());
        if !dgm_members.contains_key(&key) {
            dgm_order.push(key);
        }
        dgm_members.entry(key).or_default().push(idx);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numeric(format!("could not build worker pool: {e}")))?;

    let mut tallies: Vec<VariantTally> = vec![VariantTally::default(); conditions.len()];

    for &(n_max, delta_bits) in &dgm_order {
        let members = &dgm_members[&(n_max, delta_bits)];
        let delta = f64::from_bits(delta_bits);
        let schedule = stage_sizes(n_max);
        let plans: Vec<StoppingPlan> = members
            .iter()
            .map(|&idx| StoppingPlan::build(&conditions[idx].variant, n_max))
            .collect::<Result<_>>()?;
        let cond_key = dgm_key(n_max, delta);

        let zero = || vec![VariantTally::default(); members.len()];
        let reduced: Vec<VariantTally> = pool.install(|| {
            (0..nsim)
                .into_par_iter()
                .fold(zero, |mut acc, rep| {
                    let seed = derive_seed(master_seed, cond_key, rep);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let pvalues = stagewise_pvalues(&mut rng, &schedule, delta)
                        .expect("stage schedule is valid");
                    for (slot, plan) in acc.iter_mut().zip(&plans) {
                        slot.record(&plan.apply(&pvalues));
                    }
                    acc
                })
                .reduce(zero, |mut a, b| {
                    for (x, y) in a.iter_mut().zip(&b) {
                        x.add(y);
                    }
                    a
                })
        });
        for (&idx, tally) in members.iter().zip(&reduced) {
            tallies[idx] = *tally;
        }
    }

    // Per-condition summaries.
    let mut summaries = Vec::with_capacity(conditions.len());
    for (c, t) in conditions.iter().zip(&tallies) {
        let n = nsim as f64;
        let rate = t.reject as f64 / n;
        let sum_n = (t.sig_n + t.nonsig_n) as f64;
        let sum_n2 = (t.sig_n2 + t.nonsig_n2) as f64;
        let mean_n = sum_n / n;
        let var_n = (sum_n2 / n - mean_n * mean_n).max(0.0);
        summaries.push(ConditionSummary {
            condition: *c,
            nsim,
            master_seed,
            rejection_rate: rate,
            rejection_mcse: (rate * (1.0 - rate) / n).sqrt(),
            mean_n_per_group: mean_n,
            mean_n_mcse: (var_n / n).sqrt(),
            futility_stop_rate: t.futility as f64 / n,
            sig_cell: cell_from_tally(t.reject, t.sig_n, t.sig_n2, nsim)?,
            nonsig_cell: cell_from_tally(nsim - t.reject, t.nonsig_n, t.nonsig_n2, nsim)?,
        });
    }

    // Evidence rows: each δ ≠ 0 condition with its δ = 0 twin.
    let mut null_index: HashMap<(u32, String), usize> = HashMap::new();
    for (idx, c) in conditions.iter().enumerate() {
        if c.delta == 0.0 {
            null_index.insert((c.n_max_per_group, c.variant.label()), idx);
        }
    }
    let clamp_lo = 1.0 / (2.0 * nsim as f64);
    let clamp_hi = 1.0 - clamp_lo;
    let mut clamped_rates = 0u64;
    let mut clamp = |r: f64| -> f64 {
        if r < clamp_lo {
            clamped_rates += 1;
            clamp_lo
        } else if r > clamp_hi {
            clamped_rates += 1;
            clamp_hi
        } else {
            r
        }
    };

    let mut euii_rows = Vec::new();
    let mut skipped_euii_conditions = 0u64;
    for (idx, c) in conditions.iter().enumerate() {
        if c.delta == 0.0 {
            continue;
        }
        let Some(&null_idx) = null_index.get(&(c.n_max_per_group, c.variant.label())) else {
            continue; // No null twin in this grid: nothing to calibrate against.
        };
        let alt = &summaries[idx];
        let null = &summaries[null_idx];
        let label = format!(
            "{} at n_max {} delta {}",
            c.variant.label(),
            c.n_max_per_group,
            c.delta
        );

        let t1e = clamp(null.rejection_rate);
        let power = clamp(alt.rejection_rate);
        let lrs = likelihood_ratios(power, t1e)
            .map_err(|e| Error::Data(format!("{label}: {e}")))?;
        let dor_hat = lrs.lr_plus / lrs.lr_minus;

        let cells = OutcomeCells {
            h0_sig: null.sig_cell,
            h0_nonsig: null.nonsig_cell,
            h1_sig: alt.sig_cell,
            h1_nonsig: alt.nonsig_cell,
        };
        // An outcome that never occurred leaves its cell without moment
        // estimates, so no evidence row can be formed at this replication
        // count; the clamp above only repairs the rates, not the moments.
        if cells.h0_sig.empty
            || cells.h0_nonsig.empty
            || cells.h1_sig.empty
            || cells.h1_nonsig.empty
        {
            skipped_euii_conditions += 1;
            continue;
        }
        for &prior in priors {
            let weights = posterior_weights(prior, lrs.lr_plus, dor_hat)
                .map_err(|e| Error::Data(format!("{label}: {e}")))?;
            let moments = mixture_moments(&cells, &weights)
                .map_err(|e| Error::Data(format!("{label}: {e}")))?;
            let adaptive = euii_adaptive(lrs.lr_plus, lrs.lr_minus, &moments)
                .map_err(|e| Error::Data(format!("{label}: {e}")))?;
            euii_rows.push(EuiiRow {
                n_max_per_group: c.n_max_per_group,
                delta: c.delta,
                variant: c.variant,
                prior_h1: prior,
                lr_plus: lrs.lr_plus,
                lr_minus: lrs.lr_minus,
                adaptive,
            });
        }
    }

    Ok(StudyResult {
        summaries,
        euii_rows,
        clamped_rates,
        skipped_euii_conditions,
        nsim,
        master_seed,
    })
}
