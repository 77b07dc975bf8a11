//! Contract tests for the shipped example dataset and the reanalysis
//! summaries built on it.

use std::path::Path;

use euii::reanalysis::{
    default_methods, read_dataset, reanalyze, InterimRounding, InterimRule, ReanalysisMethod,
    BASELINE_LABEL,
};

fn sample_path() -> &'static Path {
    Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/sample_experiments.csv"
    ))
}

#[test]
fn shipped_sample_dataset_loads_cleanly() {
    let (rows, skipped) = read_dataset(sample_path()).unwrap();
    assert_eq!(rows.len(), 20, "the sample ships twenty experiments");
    assert!(skipped.is_empty(), "no row of the sample may be skipped");
    for row in &rows {
        assert!(row.n_control >= 2 && row.n_treatment >= 2);
        assert!(row.effect.is_finite());
    }
    // Exactly three experiments are conventionally significant, so the
    // deterministic baseline rejects 3/20 = 15%.
    let sig = rows
        .iter()
        .filter(|r| {
            let n1 = r.n_control as f64;
            let n2 = r.n_treatment as f64;
            let z = r.effect * (n1 * n2 / (n1 + n2)).sqrt();
            z.abs() > 1.959963984540054
        })
        .count();
    assert_eq!(sig, 3);
}

#[test]
fn baseline_row_is_deterministic_and_first() {
    let (rows, _) = read_dataset(sample_path()).unwrap();
    let methods = default_methods();
    let result = reanalyze(&rows, &methods, 500, 7, 1, InterimRounding::HalfUp).unwrap();

    assert_eq!(result.summaries.len(), 1 + methods.len());
    assert_eq!(result.n_experiments, 20);
    assert!(result.excluded.is_empty());

    let base = &result.summaries[0];
    assert_eq!(base.method, BASELINE_LABEL);
    assert!((base.rejection_pct - 15.0).abs() <= 1e-12);
    assert_eq!(base.interim_efficacy_pct, 0.0);
    assert_eq!(base.interim_futility_pct, 0.0);
    // Without interim looks nothing is saved and every repetition uses the
    // same subjects, so the quantile triples are constants.
    assert_eq!(base.animals_saved.median, 0.0);
    assert_eq!(base.animals_saved.lo025, 0.0);
    assert_eq!(base.animals_saved.hi975, 0.0);
    assert_eq!(base.mean_n.lo025, base.mean_n.median);
    assert_eq!(base.mean_n.hi975, base.mean_n.median);
    let total: u32 = rows.iter().map(|r| r.n_control + r.n_treatment).sum();
    assert!((base.mean_n.median - total as f64 / 20.0).abs() <= 1e-12);
}

#[test]
fn futility_rules_save_subjects_on_the_sample() {
    let (rows, _) = read_dataset(sample_path()).unwrap();
    let methods = default_methods();
    let result = reanalyze(&rows, &methods, 2000, 11, 1, InterimRounding::HalfUp).unwrap();

    for (m, s) in methods.iter().zip(result.summaries.iter().skip(1)) {
        assert_eq!(s.method, m.label());
        if m.futility_pp.is_some() {
            assert!(
                s.animals_saved.median > 0.0,
                "{}: a futility rule must save subjects on a mostly-null dataset",
                s.method
            );
            assert!(s.interim_futility_pct > 0.0);
        } else {
            assert_eq!(
                s.interim_futility_pct, 0.0,
                "{}: no futility rule, no futility stops",
                s.method
            );
        }
        assert!(s.mean_n.median <= result.summaries[0].mean_n.median + 1e-12);
    }
}

#[test]
fn method_rows_are_seed_stable_and_worker_independent() {
    let (rows, _) = read_dataset(sample_path()).unwrap();
    let methods = vec![
        ReanalysisMethod::new(
            InterimRule::HaybittlePeto,
            Some(0.1),
            euii::reanalysis::PpQuantile::Normal,
        )
        .unwrap(),
    ];
    let a = reanalyze(&rows, &methods, 400, 99, 1, InterimRounding::HalfUp).unwrap();
    let b = reanalyze(&rows, &methods, 400, 99, 4, InterimRounding::HalfUp).unwrap();
    for (x, y) in a.summaries.iter().zip(&b.summaries) {
        assert_eq!(x.rejection_pct.to_bits(), y.rejection_pct.to_bits());
        assert_eq!(x.mean_n.median.to_bits(), y.mean_n.median.to_bits());
        assert_eq!(
            x.animals_saved.median.to_bits(),
            y.animals_saved.median.to_bits()
        );
        assert_eq!(
            x.interim_efficacy_pct.to_bits(),
            y.interim_efficacy_pct.to_bits()
        );
    }
}
