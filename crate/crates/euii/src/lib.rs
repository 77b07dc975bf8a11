//! Evidentiary value per experimental unit for fixed, group-sequential, and
//! adaptive statistical designs.
//!
//! The crate quantifies how much diagnostic evidence a single experimental
//! unit contributes under a given design: it turns operating characteristics
//! (Type I error and power) into likelihood ratios, condenses them into a
//! per-unit evidence index, extends that index to sequential and adaptive
//! procedures whose sample size is random, and ships the Monte Carlo and
//! reanalysis machinery needed to estimate the same quantities empirically.
//!
//! Modules, bottom up:
//!
//! * [`dist`] — scalar normal / Student-t / noncentral-t kernels, including
//!   log-space tails for probabilities far below the smallest double.
//! * [`fixed_design`] — power, required sample size, and Type II error for
//!   single-look z and t tests.
//! * [`evidence`] — likelihood ratios, diagnostic odds ratios, and the
//!   per-unit evidence index for fixed designs.
//! * [`gsd`] — group-sequential boundary families (Pocock, O'Brien–Fleming,
//!   Haybittle–Peto), stagewise crossing probabilities, expected sample
//!   sizes, and maximum sample size solving.
//! * [`adaptive_euii`] — the per-unit evidence index for designs with random
//!   terminal sample size, via outcome-cell mixtures.
//! * [`simulator`] — reproducible Monte Carlo trials of fixed, naive
//!   sequential, and group-sequential testing policies.
//! * [`reanalysis`] — retrospective what-if reanalysis of completed
//!   two-group experiments under sequential rules.
//! * [`cli`] — the `euii` command-line interface with manifest-based replay.

#![forbid(unsafe_code)]
#![warn(missing_docs, rust_2018_idioms, missing_debug_implementations)]

pub mod adaptive_euii;
pub mod cli;
pub mod dist;
pub mod error;
pub mod evidence;
pub mod fixed_design;
pub mod gsd;
pub mod reanalysis;
pub mod simulator;

pub use error::{Error, Result};
