//! Post-hoc interim reanalysis of completed two-group experiments.
//!
//! Given a dataset of finished experiments (group sizes and a standardized
//! mean difference each), this module asks: had a single interim analysis
//! been conducted halfway through, how often would each stopping rule have
//! ended the experiment early, and how many experimental subjects would
//! that have saved?
//!
//! The final z-statistic is fixed by the observed effect,
//! `z_final = g · √(effective_n)`; the unobserved interim statistic is
//! drawn from its conditional distribution given the final one,
//! `Z₁ | Z₂ = z₂ ~ N(z₂·√t, 1 − t)` at information fraction `t` — the
//! true effect cancels out of this conditional law, so no effect-size
//! assumption is needed. Small-sample t corrections are deliberately not
//! applied when converting effects to z-statistics; the whole engine
//! operates on the normal scale.

use crate::dist::{phi, phi_inv, t_quantile};
use crate::error::{Error, Result};
use crate::fixed_design::Sidedness;
use crate::gsd::Family;
use crate::simulator::{cached_nominal_levels, derive_seed, normal_pair, StopReason};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Default number of simulated interim analyses.
pub const DEFAULT_REPS: u64 = 10_000;
/// Default predictive-power futility threshold.
pub const DEFAULT_FUTILITY_PP: f64 = 0.10;
/// Two-sided interim level of the Haybittle-Peto rule in this engine.
pub const HP_INTERIM_ALPHA: f64 = 0.01;
/// Two-sided final significance level shared by every rule.
pub const FINAL_ALPHA: f64 = 0.05;

/// How interim group sizes are rounded.
///
/// Half of an integer has fractional part 0 or ½, so round-half-up and
/// ceiling coincide on every input; both are provided because the halving
/// convention is a modeling choice worth exposing, and the equality makes
/// the sensitivity analysis free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterimRounding {
    /// Round `n/2` to the nearest integer, halves upward.
    HalfUp,
    /// Round `n/2` upward.
    Ceiling,
}

/// Which quantile the predictive-power formula uses for the final critical
/// value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PpQuantile {
    /// Standard-normal critical value (the default here; the engine works
    /// on the z scale).
    Normal,
    /// Student-t critical value at the experiment's full degrees of
    /// freedom (the convention of the sequential-trial simulator).
    StudentT,
}

/// Interim stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterimRule {
    /// Interim at two-sided 0.01, final at two-sided 0.05.
    HaybittlePeto,
    /// Two-look Pocock boundary at overall two-sided 5%.
    Pocock,
    /// Two-look O'Brien-Fleming boundary at overall two-sided 5%.
    ///
    /// The serde name matches [`InterimRule::as_str`] (the label used in
    /// every table), not the default snake_case split of the camel-case
    /// name.
    #[serde(rename = "obrien_fleming")]
    OBrienFleming,
}

impl InterimRule {
    /// Stable snake_case identifier.
    pub fn as_str(&self) -> &'static str {
        match self {
            InterimRule::HaybittlePeto => "haybittle_peto",
            InterimRule::Pocock => "pocock",
            InterimRule::OBrienFleming => "obrien_fleming",
        }
    }
}

impl std::fmt::Display for InterimRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A stopping rule with an optional predictive-power futility threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReanalysisMethod {
    /// Efficacy rule.
    pub rule: InterimRule,
    /// Stop for futility when the predictive power falls below this value
    /// (`None` disables futility stopping).
    pub futility_pp: Option<f64>,
    /// Quantile family of the predictive-power critical value.
    pub pp_quantile: PpQuantile,
}

impl ReanalysisMethod {
    /// Builds a method, validating the futility threshold.
    pub fn new(rule: InterimRule, futility_pp: Option<f64>, pp_quantile: PpQuantile) -> Result<Self> {
        if let Some(t) = futility_pp {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Domain(format!(
                    "futility threshold must lie in (0,1), got {t}"
                )));
            }
        }
        Ok(ReanalysisMethod { rule, futility_pp, pp_quantile })
    }

    /// Stable identifier: the rule name, `_futility`-suffixed when a
    /// futility threshold is active.
    pub fn label(&self) -> String {
        match self.futility_pp {
            Some(_) => format!("{}_futility", self.rule),
            None => self.rule.to_string(),
        }
    }
}

/// The six standard method rows: each rule without futility, then each
/// rule with the 10% predictive-power futility threshold.
pub fn default_methods() -> Vec<ReanalysisMethod> {
    let mut methods = Vec::with_capacity(6);
    for fut in [None, Some(DEFAULT_FUTILITY_PP)] {
        for rule in [
            InterimRule::HaybittlePeto,
            InterimRule::OBrienFleming,
            InterimRule::Pocock,
        ] {
            methods.push(ReanalysisMethod { rule, futility_pp: fut, pp_quantile: PpQuantile::Normal });
        }
    }
    methods
}

/// One completed experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    /// Identifier carried through to exclusion reports.
    pub id: String,
    /// Control-group size.
    pub n_control: u32,
    /// Treatment-group size.
    pub n_treatment: u32,
    /// Standardized mean difference (Hedges' g).
    pub effect: f64,
    /// Final-analysis z-statistic, `effect · √(effective_n)`.
    pub z_final: f64,
}

impl ExperimentRow {
    /// Builds a row, deriving `z_final` from the effect and group sizes.
    pub fn new(id: impl Into<String>, n_control: u32, n_treatment: u32, effect: f64) -> Result<Self> {
        if n_control < 2 || n_treatment < 2 {
            return Err(Error::Domain(format!(
                "each group needs at least 2 subjects, got {n_control} and {n_treatment}"
            )));
        }
        if !effect.is_finite() {
            return Err(Error::Domain(format!("effect must be finite, got {effect}")));
        }
        let z_final = effect * effective_n(n_control, n_treatment)?.sqrt();
        Ok(ExperimentRow { id: id.into(), n_control, n_treatment, effect, z_final })
    }
}

/// Effective per-stage sample size of a two-group comparison: half the
/// harmonic mean of the group sizes, `n1·n2/(n1+n2)`.
pub fn effective_n(n1: u32, n2: u32) -> Result<f64> {
    if n1 < 1 || n2 < 1 {
        return Err(Error::Domain(format!(
            "group sizes must be at least 1, got {n1} and {n2}"
        )));
    }
    let (a, b) = (n1 as f64, n2 as f64);
    Ok(a * b / (a + b))
}

fn split_one(n: u32, rounding: InterimRounding) -> u32 {
    match rounding {
        // n/2 has fractional part 0 or ½, so both conventions are (n+1)/2
        // in integer arithmetic.
        InterimRounding::HalfUp | InterimRounding::Ceiling => (n + 1) / 2,
    }
}

/// Interim group sizes: each group halved and rounded. Errors when an
/// interim group would equal the full group (nothing left to save).
pub fn interim_split(n1: u32, n2: u32, rounding: InterimRounding) -> Result<(u32, u32)> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::Domain(format!(
            "experiment too small for an interim: group sizes {n1} and {n2}"
        )));
    }
    let m1 = split_one(n1, rounding);
    let m2 = split_one(n2, rounding);
    if m1 >= n1 || m2 >= n2 {
        return Err(Error::Domain(format!(
            "interim sizes ({m1}, {m2}) would not precede the full sizes ({n1}, {n2})"
        )));
    }
    Ok((m1, m2))
}

/// One draw of the interim statistic given the final one:
/// `Z₁ | Z₂ = z₂ ~ N(z₂·√t, 1 − t)` at information fraction `t`.
///
/// Consumes one Box-Muller pair from the stream (the second variate is
/// discarded), so consecutive calls are stream-aligned.
pub fn simulate_interim_z(z2: f64, t: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!(
            "information fraction must lie strictly in (0,1), got {t}"
        )));
    }
    if !z2.is_finite() {
        return Err(Error::Domain(format!("z must be finite, got {z2}")));
    }
    let (std, _) = normal_pair(rng);
    Ok(z2 * t.sqrt() + (1.0 - t).sqrt() * std)
}

/// Predictive power to reject at the final analysis given the interim
/// statistic `z1` at information fraction `t`, with the final test at
/// two-sided level `alpha_final`:
///
/// `PP = Φ(−c/s + z₁/√(1−t)) + Φ(−c/s − z₁/√(1−t))`, `s = √(1/t − 1)`,
///
/// where `c` is the normal critical value `Φ⁻¹(1 − α/2)` or, for the
/// Student-t variant, the t critical value at `df_final` degrees of
/// freedom.
pub fn pp_final(
    z1: f64,
    t: f64,
    alpha_final: f64,
    df_final: f64,
    quantile: PpQuantile,
) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!(
            "information fraction must lie strictly in (0,1), got {t}"
        )));
    }
    if !(alpha_final > 0.0 && alpha_final < 1.0) {
        return Err(Error::Domain(format!(
            "final level must lie in (0,1), got {alpha_final}"
        )));
    }
    if !z1.is_finite() {
        return Err(Error::Domain(format!("z must be finite, got {z1}")));
    }
    let crit = match quantile {
        PpQuantile::Normal => phi_inv(1.0 - alpha_final / 2.0),
        PpQuantile::StudentT => {
            if !(df_final >= 1.0) {
                return Err(Error::Domain(format!(
                    "degrees of freedom must be at least 1, got {df_final}"
                )));
            }
            t_quantile(1.0 - alpha_final / 2.0, df_final)?
        }
    };
    let s = (1.0 / t - 1.0).sqrt();
    let shrink = (1.0 - t).sqrt();
    Ok(phi(-crit / s + z1 / shrink) + phi(-crit / s - z1 / shrink))
}

/// Interim and final z bounds of a rule, plus the final two-sided level
/// its predictive-power computation targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleBounds {
    /// Reject at the interim when `|z₁|` exceeds this.
    pub interim_z: f64,
    /// Reject at the final analysis when `|z₂|` exceeds this.
    pub final_z: f64,
    /// Two-sided level of the final test.
    pub final_alpha: f64,
}

/// Bounds of each rule. Haybittle-Peto uses its fixed (0.01, 0.05)
/// two-sided pair; Pocock and O'Brien-Fleming take their two-look levels
/// from the group-sequential boundary solver.
pub fn rule_bounds(rule: InterimRule) -> Result<RuleBounds> {
    match rule {
        InterimRule::HaybittlePeto => Ok(RuleBounds {
            interim_z: phi_inv(1.0 - HP_INTERIM_ALPHA / 2.0),
            final_z: phi_inv(1.0 - FINAL_ALPHA / 2.0),
            final_alpha: FINAL_ALPHA,
        }),
        InterimRule::Pocock | InterimRule::OBrienFleming => {
            let family = match rule {
                InterimRule::Pocock => Family::Pocock,
                _ => Family::OBrienFleming,
            };
            let levels = cached_nominal_levels(family, 2, FINAL_ALPHA, Sidedness::Two)?;
            Ok(RuleBounds {
                interim_z: phi_inv(1.0 - levels[0]),
                final_z: phi_inv(1.0 - levels[1]),
                final_alpha: 2.0 * levels[1],
            })
        }
    }
}

/// Outcome of one simulated interim on one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterimDecision {
    /// Whether the null hypothesis was rejected (at the interim or final).
    pub rejected: bool,
    /// Whether data collection stopped at the interim.
    pub stopped_at_interim: bool,
    /// Efficacy, futility, or ran to the final analysis.
    pub reason: StopReason,
}

/// Applies one rule to a simulated interim: efficacy first (`|z₁|` above
/// the interim bound), then futility (predictive power below the
/// threshold), otherwise the final test on `z₂`.
pub fn apply_single_interim(
    z1: f64,
    z2: f64,
    t: f64,
    df_final: f64,
    method: &ReanalysisMethod,
) -> Result<InterimDecision> {
    let bounds = rule_bounds(method.rule)?;
    if z1.abs() > bounds.interim_z {
        return Ok(InterimDecision {
            rejected: true,
            stopped_at_interim: true,
            reason: StopReason::Efficacy,
        });
    }
    if let Some(threshold) = method.futility_pp {
        let pp = pp_final(z1, t, bounds.final_alpha, df_final, method.pp_quantile)?;
        if pp < threshold {
            return Ok(InterimDecision {
                rejected: false,
                stopped_at_interim: true,
                reason: StopReason::Futility,
            });
        }
    }
    let rejected = z2.abs() > bounds.final_z;
    Ok(InterimDecision {
        rejected,
        stopped_at_interim: false,
        reason: if rejected { StopReason::Efficacy } else { StopReason::MaxReached },
    })
}

/// Median with 2.5% and 97.5% quantiles over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileTriple {
    /// 50% quantile.
    pub median: f64,
    /// 2.5% quantile.
    pub lo025: f64,
    /// 97.5% quantile.
    pub hi975: f64,
}

impl QuantileTriple {
    fn constant(v: f64) -> Self {
        QuantileTriple { median: v, lo025: v, hi975: v }
    }

    fn from_samples(values: &mut [f64]) -> Self {
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        QuantileTriple {
            median: quantile_type7(values, 0.5),
            lo025: quantile_type7(values, 0.025),
            hi975: quantile_type7(values, 0.975),
        }
    }
}

/// Linear-interpolation quantile (the common "type 7" convention) on an
/// ascending-sorted slice.
pub(crate) fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Summary of one method row over all repetitions.
#[derive(Debug, Clone, Serialize)]
pub struct ReanalysisSummary {
    /// Method label (`no_interim` for the deterministic baseline).
    pub method: String,
    /// Mean subjects used per experiment (total over both groups).
    pub mean_n: QuantileTriple,
    /// Percentage of (experiment, repetition) pairs that rejected.
    pub rejection_pct: f64,
    /// Percentage stopped at the interim for efficacy.
    pub interim_efficacy_pct: f64,
    /// Percentage stopped at the interim for futility.
    pub interim_futility_pct: f64,
    /// Subjects saved across the dataset relative to running every
    /// experiment to completion.
    pub animals_saved: QuantileTriple,
}

/// A dataset row set aside before simulation, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct ExclusionRecord {
    /// Identifier of the excluded row.
    pub id: String,
    /// Why it was excluded.
    pub reason: String,
}

/// Everything a reanalysis run produces.
#[derive(Debug, Clone, Serialize)]
pub struct ReanalysisResult {
    /// The deterministic no-interim baseline, then one row per method.
    pub summaries: Vec<ReanalysisSummary>,
    /// Rows set aside before simulation.
    pub excluded: Vec<ExclusionRecord>,
    /// Number of experiments actually simulated.
    pub n_experiments: usize,
    /// Repetitions per method.
    pub reps: u64,
    /// Master seed of the run.
    pub master_seed: u64,
}

/// Label of the deterministic baseline row.
pub const BASELINE_LABEL: &str = "no_interim";

struct PreparedExperiment {
    z_final: f64,
    t: f64,
    df_final: f64,
    full_total: u64,
    interim_total: u64,
}

struct PreparedMethod {
    method: ReanalysisMethod,
    bounds: RuleBounds,
}

#[derive(Clone, Copy, Default)]
struct MethodRepStat {
    used: u64,
    reject: u32,
    interim_efficacy: u32,
    interim_futility: u32,
}

/// Simulates one interim analysis per experiment and repetition and
/// summarizes each method, with the deterministic no-interim baseline as
/// the first row.
///
/// Per repetition, one interim statistic is drawn for each experiment from
/// its conditional law and shared by every method, so methods are compared
/// on identical data. Repetition `r` uses the stream seeded by
/// `derive_seed(master_seed, 0, r)`; results are bit-identical for any
/// `workers ≥ 1`.
pub fn reanalyze(
    dataset: &[ExperimentRow],
    methods: &[ReanalysisMethod],
    reps: u64,
    master_seed: u64,
    workers: usize,
    rounding: InterimRounding,
) -> Result<ReanalysisResult> {
    if dataset.is_empty() {
        return Err(Error::Domain("the dataset has no rows".into()));
    }
    if reps < 100 {
        return Err(Error::Domain(format!(
            "at least 100 repetitions are needed for quantiles, got {reps}"
        )));
    }
    if workers == 0 {
        return Err(Error::Domain("worker count must be at least 1".into()));
    }
    if methods.is_empty() {
        return Err(Error::Domain("no methods to apply".into()));
    }
    for m in methods {
        ReanalysisMethod::new(m.rule, m.futility_pp, m.pp_quantile)?;
    }

    // Validate and prepare rows; set bad ones aside with reasons.
    let mut prepared = Vec::with_capacity(dataset.len());
    let mut excluded = Vec::new();
    for row in dataset {
        match prepare_row(row, rounding) {
            Ok(p) => prepared.push(p),
            Err(e) => excluded.push(ExclusionRecord { id: row.id.clone(), reason: e.to_string() }),
        }
    }
    if prepared.is_empty() {
        return Err(Error::Data(format!(
            "no valid experiments remain: all {} rows were excluded",
            dataset.len()
        )));
    }

    let n_exp = prepared.len();
    let grand_total: u64 = prepared.iter().map(|p| p.full_total).sum();

    // Deterministic no-interim baseline.
    let final_bound = phi_inv(1.0 - FINAL_ALPHA / 2.0);
    let baseline_rejections = prepared.iter().filter(|p| p.z_final.abs() > final_bound).count();
    let baseline = ReanalysisSummary {
        method: BASELINE_LABEL.into(),
        mean_n: QuantileTriple::constant(grand_total as f64 / n_exp as f64),
        rejection_pct: 100.0 * baseline_rejections as f64 / n_exp as f64,
        interim_efficacy_pct: 0.0,
        interim_futility_pct: 0.0,
        animals_saved: QuantileTriple::constant(0.0),
    };

    let prepared_methods: Vec<PreparedMethod> = methods
        .iter()
        .map(|&method| Ok(PreparedMethod { method, bounds: rule_bounds(method.rule)? }))
        .collect::<Result<_>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numeric(format!("could not build worker pool: {e}")))?;

    // One record per repetition, in repetition order regardless of workers.
    let rep_stats: Vec<Vec<MethodRepStat>> = pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let seed = derive_seed(master_seed, 0, rep);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut stats = vec![MethodRepStat::default(); prepared_methods.len()];
                for exp in &prepared {
                    let (std, _) = normal_pair(&mut rng);
                    let z1 = exp.z_final * exp.t.sqrt() + (1.0 - exp.t).sqrt() * std;
                    for (stat, pm) in stats.iter_mut().zip(&prepared_methods) {
                        let decision = decide(z1, exp, pm);
                        stat.used += if decision.stopped_at_interim {
                            exp.interim_total
                        } else {
                            exp.full_total
                        };
                        stat.reject += decision.rejected as u32;
                        stat.interim_efficacy += (decision.stopped_at_interim
                            && decision.reason == StopReason::Efficacy)
                            as u32;
                        stat.interim_futility +=
                            (decision.reason == StopReason::Futility) as u32;
                    }
                }
                stats
            })
            .collect()
    });

    let mut summaries = vec![baseline];
    for (mi, pm) in prepared_methods.iter().enumerate() {
        let mut mean_n: Vec<f64> = Vec::with_capacity(reps as usize);
        let mut saved: Vec<f64> = Vec::with_capacity(reps as usize);
        let mut reject = 0u64;
        let mut int_eff = 0u64;
        let mut int_fut = 0u64;
        for rep in &rep_stats {
            let s = &rep[mi];
            mean_n.push(s.used as f64 / n_exp as f64);
            saved.push((grand_total - s.used) as f64);
            reject += s.reject as u64;
            int_eff += s.interim_efficacy as u64;
            int_fut += s.interim_futility as u64;
        }
        let denom = (reps * n_exp as u64) as f64;
        summaries.push(ReanalysisSummary {
            method: pm.method.label(),
            mean_n: QuantileTriple::from_samples(&mut mean_n),
            rejection_pct: 100.0 * reject as f64 / denom,
            interim_efficacy_pct: 100.0 * int_eff as f64 / denom,
            interim_futility_pct: 100.0 * int_fut as f64 / denom,
            animals_saved: QuantileTriple::from_samples(&mut saved),
        });
    }

    Ok(ReanalysisResult {
        summaries,
        excluded,
        n_experiments: n_exp,
        reps,
        master_seed,
    })
}

fn prepare_row(row: &ExperimentRow, rounding: InterimRounding) -> Result<PreparedExperiment> {
    if row.n_control < 2 || row.n_treatment < 2 {
        return Err(Error::Domain(format!(
            "each group needs at least 2 subjects, got {} and {}",
            row.n_control, row.n_treatment
        )));
    }
    if !row.effect.is_finite() || !row.z_final.is_finite() {
        return Err(Error::Domain("effect and z must be finite".into()));
    }
    let eff_full = effective_n(row.n_control, row.n_treatment)?;
    let implied = row.effect * eff_full.sqrt();
    if (row.z_final - implied).abs() > 1e-9 * implied.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "z {} is inconsistent with effect {} at these group sizes (expected {implied})",
            row.z_final, row.effect
        )));
    }
    let (m1, m2) = interim_split(row.n_control, row.n_treatment, rounding)?;
    let eff_interim = effective_n(m1, m2)?;
    let t = eff_interim / eff_full;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!(
            "information fraction {t} outside (0,1) for groups {} and {}",
            row.n_control, row.n_treatment
        )));
    }
    Ok(PreparedExperiment {
        z_final: row.z_final,
        t,
        df_final: (row.n_control + row.n_treatment - 2) as f64,
        full_total: (row.n_control + row.n_treatment) as u64,
        interim_total: (m1 + m2) as u64,
    })
}

fn decide(z1: f64, exp: &PreparedExperiment, pm: &PreparedMethod) -> InterimDecision {
    if z1.abs() > pm.bounds.interim_z {
        return InterimDecision {
            rejected: true,
            stopped_at_interim: true,
            reason: StopReason::Efficacy,
        };
    }
    if let Some(threshold) = pm.method.futility_pp {
        let pp = pp_final(
            z1,
            exp.t,
            pm.bounds.final_alpha,
            exp.df_final,
            pm.method.pp_quantile,
        )
        .expect("prepared inputs are in range");
        if pp < threshold {
            return InterimDecision {
                rejected: false,
                stopped_at_interim: true,
                reason: StopReason::Futility,
            };
        }
    }
    let rejected = exp.z_final.abs() > pm.bounds.final_z;
    InterimDecision {
        rejected,
        stopped_at_interim: false,
        reason: if rejected { StopReason::Efficacy } else { StopReason::MaxReached },
    }
}

/// A dataset line that could not be parsed, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedRow {
    /// 1-based line number in the file.
    pub line: u64,
    /// Why the row was skipped.
    pub reason: String,
}

/// Reads a delimited dataset with header `id,n_control,n_treatment,effect`.
/// Rows with missing or unparseable fields, or group sizes below 2, are
/// skipped and reported rather than failing the whole file.
pub fn read_dataset(path: &Path) -> Result<(Vec<ExperimentRow>, Vec<SkippedRow>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header of {}: {e}", path.display())))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Data(format!("missing column '{name}' in {}", path.display())))
    };
    let (ci, cc, ct, ce) = (col("id")?, col("n_control")?, col("n_treatment")?, col("effect")?);

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx as u64 + 2; // header is line 1
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                skipped.push(SkippedRow { line, reason: format!("unreadable row: {e}") });
                continue;
            }
        };
        let field = |i: usize| -> Option<&str> {
            record.get(i).map(str::trim).filter(|s| !s.is_empty())
        };
        let (Some(id), Some(nc), Some(nt), Some(eff)) =
            (field(ci), field(cc), field(ct), field(ce))
        else {
            skipped.push(SkippedRow { line, reason: "missing field".into() });
            continue;
        };
        let parsed = (|| -> std::result::Result<ExperimentRow, String> {
            let nc: u32 = nc.parse().map_err(|e| format!("n_control: {e}"))?;
            let nt: u32 = nt.parse().map_err(|e| format!("n_treatment: {e}"))?;
            let eff: f64 = eff.parse().map_err(|e| format!("effect: {e}"))?;
            ExperimentRow::new(id, nc, nt, eff).map_err(|e| e.to_string())
        })();
        match parsed {
            Ok(row) => rows.push(row),
            Err(reason) => skipped.push(SkippedRow { line, reason }),
        }
    }
    Ok((rows, skipped))
}
