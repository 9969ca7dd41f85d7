//! Cross-module behavioral properties of the rectification engine.

use std::collections::{BTreeSet, HashSet};
use std::time::Instant;

use openrect::classifiers::{Classifier, ClassifierSpec};
use openrect::dataset::{generate_gaussian, make_scenario, RowOrigin};
use openrect::metrics::macro_f_measure;
use openrect::rtscv::{rectify, RtscvConfig};
use openrect::synthetic;
use openrect::{mix_seed, seed_tags};

#[test]
fn label_space_grows_by_exactly_one() {
    let spec = synthetic::benchmark_high_j1(1);
    let data = generate_gaussian(&spec, 60).unwrap();
    for n_uu in [1usize, 3] {
        let uu: BTreeSet<usize> = (10 - n_uu + 1..=10).map(|c| c % 11).collect();
        let uu: BTreeSet<usize> = if n_uu == 1 {
            BTreeSet::from([10])
        } else {
            uu
        };
        let sc = make_scenario(&data, &uu, 0.5, 2).unwrap();
        let cfg = RtscvConfig {
            c: 0.2,
            seed: 3,
            ..Default::default()
        };
        let outcome = rectify(
            &sc.train,
            &sc.test,
            &ClassifierSpec::Gda {
                mode: Default::default(),
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(outcome.model.n_classes(), sc.train.n_classes() + 1);
    }
}

#[test]
fn containment_rectified_train_is_train_plus_unknowns() {
    let spec = synthetic::benchmark_moderate(7);
    let data = generate_gaussian(&spec, 80).unwrap();
    let sc = make_scenario(&data, &BTreeSet::from([10]), 0.5, 9).unwrap();
    let cfg = RtscvConfig {
        c: 0.15,
        seed: 4,
        ..Default::default()
    };
    let outcome = rectify(
        &sc.train,
        &sc.test,
        &ClassifierSpec::Gda {
            mode: Default::default(),
        },
        &cfg,
    )
    .unwrap();

    // the first |X| rows are the original training set, bit for bit
    let n = sc.train.n_samples();
    assert_eq!(
        outcome.rectified_train.features().slice(ndarray::s![..n, ..]),
        sc.train.features()
    );
    assert_eq!(&outcome.rectified_train.labels()[..n], sc.train.labels());
    // everything after carries the dummy label and is a sample row
    let dummy = sc.train.n_classes();
    assert!(outcome.rectified_train.labels()[n..]
        .iter()
        .all(|&l| l == dummy));
    assert_eq!(
        outcome.rectified_train.n_samples() - n,
        outcome.uu_sample_indices.len()
    );
    // X_u rows really are the sample rows that kept the dummy prediction
    let sample_rows: HashSet<usize> = outcome.uu_sample_indices.iter().copied().collect();
    assert_eq!(sample_rows.len(), outcome.uu_sample_indices.len());
    for (aug_row, &pred) in outcome.cv_predictions.iter().enumerate() {
        if aug_row >= n {
            let sample_index = aug_row - n;
            assert_eq!(
                pred == dummy,
                sample_rows.contains(&sample_index),
                "sample row {sample_index} containment mismatch"
            );
        }
    }
}

/// Runtime stays within a constant factor of (k + 1) single fits.
#[test]
fn cost_tracks_fold_count() {
    let spec = synthetic::benchmark_high_j1(3);
    let data = generate_gaussian(&spec, 150).unwrap();
    let sc = make_scenario(&data, &BTreeSet::from([10]), 0.5, 5).unwrap();
    // an intentionally slow fit so timing noise is negligible
    let svm = ClassifierSpec::LinearSvm {
        lambda: 1e-3,
        epochs: 60,
    };
    let k = 3usize;

    // single fit on the augmented set
    let ts = openrect::dataset::sample_test(&sc.test, 0.1, mix_seed(11, seed_tags::SAMPLE)).unwrap();
    let aug = openrect::dataset::augment(&sc.train, &ts.sample, sc.train.n_classes()).unwrap();
    let single_start = Instant::now();
    svm.fit(&aug.data, 1).unwrap();
    let single = single_start.elapsed().as_secs_f64();

    let cfg = RtscvConfig {
        c: 0.1,
        k,
        seed: 11,
        ..Default::default()
    };
    let full_start = Instant::now();
    rectify(&sc.train, &sc.test, &svm, &cfg).unwrap();
    let full = full_start.elapsed().as_secs_f64();

    let bound = 3.0 * (k + 1) as f64 * single;
    assert!(
        full <= bound,
        "rectify took {full:.3}s, bound 3(k+1) fits = {bound:.3}s (single fit {single:.3}s)"
    );
}

/// The rectified model beats the pre-rectified model's macro F at every
/// openness level tested (the pre-rectified model can never emit the
/// unknown label, so its unknown-class F is zero).
#[test]
fn rectified_beats_pre_rectified_across_openness_levels() {
    let spec = synthetic::benchmark_high_j1(9);
    let data = generate_gaussian(&spec, 150).unwrap();
    let gda = ClassifierSpec::Gda {
        mode: Default::default(),
    };
    // unknown sets of growing size: openness rises as classes are removed
    for uu_set in [vec![10], vec![9, 10], vec![7, 8, 9, 10]] {
        let uu: BTreeSet<usize> = uu_set.iter().copied().collect();
        let sc = make_scenario(&data, &uu, 0.5, 21).unwrap();
        let cfg = RtscvConfig {
            c: 0.1,
            seed: 13,
            ..Default::default()
        };
        let outcome = rectify(&sc.train, &sc.test, &gda, &cfg).unwrap();
        let pre_model = gda.fit(&sc.train, 13).unwrap();

        let sampled: HashSet<usize> = outcome
            .diagnostics
            .sample_test_indices
            .iter()
            .copied()
            .collect();
        let held: Vec<usize> = (0..sc.test.n_samples())
            .filter(|i| !sampled.contains(i))
            .collect();
        let held_data = sc.test.subset(&held);
        let n_classes = sc.dummy_label + 1;

        let rect_preds = outcome.model.predict_batch(held_data.features()).unwrap();
        let pre_preds = pre_model.predict_batch(held_data.features()).unwrap();
        let rect_f = macro_f_measure(held_data.labels(), &rect_preds, n_classes).unwrap();
        let pre_f = macro_f_measure(held_data.labels(), &pre_preds, n_classes).unwrap();
        assert!(
            rect_f > pre_f,
            "openness {} known classes: rectified {rect_f:.4} <= pre {pre_f:.4}",
            sc.n_known()
        );
    }
}

/// Train-origin rows keep a single consistent label in the rectified set
/// under the default containment mode, for any seed.
#[test]
fn default_mode_never_duplicates_training_rows() {
    let spec = synthetic::benchmark_moderate(5);
    let data = generate_gaussian(&spec, 60).unwrap();
    let sc = make_scenario(&data, &BTreeSet::from([10]), 0.5, 1).unwrap();
    for seed in 0..5u64 {
        let cfg = RtscvConfig {
            c: 0.3,
            seed,
            ..Default::default()
        };
        let outcome = rectify(
            &sc.train,
            &sc.test,
            &ClassifierSpec::Knn { k: 5 },
            &cfg,
        )
        .unwrap();
        assert_eq!(
            outcome.rectified_train.n_samples(),
            sc.train.n_samples() + outcome.uu_sample_indices.len()
        );
    }
}

/// Sample-origin provenance is the only route into the unknown set, and the
/// engine reports how many train-origin rows would have qualified.
#[test]
fn train_origin_diagnostics_match_predictions() {
    let spec = synthetic::benchmark_moderate(2);
    let data = generate_gaussian(&spec, 80).unwrap();
    let sc = make_scenario(&data, &BTreeSet::from([10]), 0.5, 6).unwrap();
    let cfg = RtscvConfig {
        c: 0.25,
        seed: 17,
        ..Default::default()
    };
    let outcome = rectify(
        &sc.train,
        &sc.test,
        &ClassifierSpec::Gda {
            mode: Default::default(),
        },
        &cfg,
    )
    .unwrap();
    let ts = openrect::dataset::sample_test(
        &sc.test,
        cfg.c,
        mix_seed(cfg.seed, seed_tags::SAMPLE),
    )
    .unwrap();
    let aug = openrect::dataset::augment(&sc.train, &ts.sample, sc.train.n_classes()).unwrap();
    let recount = outcome
        .cv_predictions
        .iter()
        .enumerate()
        .filter(|&(row, &p)| {
            p == sc.dummy_label && matches!(aug.origin(row), RowOrigin::Train { .. })
        })
        .count();
    assert_eq!(outcome.diagnostics.train_origin_uu, recount);
}
