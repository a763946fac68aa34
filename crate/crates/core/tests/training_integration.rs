use std::collections::BTreeSet;
use std::sync::Mutex;

use granulex::combiners::{granular_classify, HFunction};
use granulex::learners::{Dataset, Learner, LearnerSpec, SoftClassifier};
use granulex::metadata::ClassCatalog;
use granulex::training::{
    error_for_alpha, generate_meta_cv, select_alpha, train, AlphaGrid, AlphaMode, FoldPlan, TrainedEnsemble,
};
use granulex::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Feature 0 carries the observation id. The fitted model remembers which
/// ids it saw and flags any of them at prediction time with class 0.
struct Auditor {
    fits: Mutex<Vec<BTreeSet<usize>>>,
}

struct AuditModel {
    seen: BTreeSet<usize>,
}

impl Learner for Auditor {
    type Model = AuditModel;

    fn fit(&self, data: &Dataset, _seed: u64) -> Result<AuditModel> {
        let seen: BTreeSet<usize> = data.rows().map(|r| r[0] as usize).collect();
        self.fits.lock().unwrap().push(seen.clone());
        Ok(AuditModel { seen })
    }

    fn name(&self) -> String {
        "auditor".into()
    }
}

impl SoftClassifier for AuditModel {
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(if self.seen.contains(&(x[0] as usize)) { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
    }
}

fn id_dataset(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
    let rows = (0..n).map(|i| vec![i as f64, rng.random::<f64>()]).collect();
    let mut labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    labels.rotate_left(rng.random_range(0..n));
    Dataset::new("ids", rows, labels, ClassCatalog::numbered(2).unwrap()).unwrap()
}

#[test]
fn meta_data_never_sees_its_own_observation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..50u64 {
        let n = rng.random_range(20..80);
        let folds = rng.random_range(2..=10);
        let data = id_dataset(&mut rng, n);
        let plan = FoldPlan::stratified(data.labels(), folds, trial).unwrap();
        let learners = [Auditor { fits: Mutex::new(Vec::new()) }, Auditor { fits: Mutex::new(Vec::new()) }];
        let meta = generate_meta_cv(&data, &learners, &plan, trial).unwrap();
        for profile in meta.rows() {
            for row in profile.rows() {
                assert_eq!(row, [0.0, 1.0], "trial {trial}: a held-out observation was in the training set");
            }
        }
        for learner in &learners {
            let mut fits = learner.fits.lock().unwrap().clone();
            fits.sort();
            let mut expected: Vec<BTreeSet<usize>> =
                (0..folds).map(|t| plan.train_indices(t).into_iter().collect()).collect();
            expected.sort();
            assert_eq!(fits, expected, "trial {trial}");
        }
    }
}

fn blobs(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let c = i % 3;
        let center = [(0.0, 0.0), (2.0, 0.5), (0.5, 2.0)][c];
        rows.push(vec![
            center.0 + rng.random::<f64>() * 2.0 - 1.0,
            center.1 + rng.random::<f64>() * 2.0 - 1.0,
        ]);
        labels.push(c);
    }
    Dataset::new("blobs", rows, labels, ClassCatalog::numbered(3).unwrap()).unwrap()
}

fn roster() -> Vec<LearnerSpec> {
    vec![LearnerSpec::Lda, LearnerSpec::GaussianNaiveBayes, LearnerSpec::knn(1), LearnerSpec::DecisionStump]
}

#[test]
fn meta_matrix_shape_and_determinism() {
    let data = blobs(1, 4 * 3);
    let plan = FoldPlan::stratified(data.labels(), 2, 5).unwrap();
    let a = generate_meta_cv(&data, &roster(), &plan, 9).unwrap();
    let b = generate_meta_cv(&data, &roster(), &plan, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 12);
    assert!(a.rows().iter().all(|p| p.n_classifiers() == 4 && p.n_classes() == 3));
}

#[test]
fn one_nn_meta_level_error_is_positive_on_noisy_data() {
    let data = blobs(2, 150);
    let plan = FoldPlan::stratified(data.labels(), 5, 1).unwrap();
    let meta = generate_meta_cv(&data, &[LearnerSpec::knn(1), LearnerSpec::knn(1)], &plan, 0).unwrap();
    let err = error_for_alpha(&meta, data.labels(), 1.0, HFunction::H3).unwrap();
    assert!(err > 0.0);
}

#[test]
fn absent_class_in_a_complement_is_named() {
    let rows = (0..6).map(|i| vec![f64::from(i)]).collect();
    let data = Dataset::new("tiny", rows, vec![0, 0, 0, 0, 0, 1], ClassCatalog::numbered(2).unwrap()).unwrap();
    let plan = FoldPlan::from_assignments(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
    let err = generate_meta_cv(&data, &roster(), &plan, 0).unwrap_err();
    match err {
        Error::MissingClass { class, context } => {
            assert_eq!(class, "y2");
            assert!(context.unwrap().contains("fold 1"));
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn select_alpha_agrees_with_a_linear_scan() {
    let data = blobs(3, 120);
    let plan = FoldPlan::stratified(data.labels(), 5, 2).unwrap();
    let meta = generate_meta_cv(&data, &roster(), &plan, 4).unwrap();
    let grid = AlphaGrid::default();
    for h in HFunction::ALL {
        let (alpha, curve) = select_alpha(&meta, data.labels(), &grid, h).unwrap();
        let mut best = (f64::NAN, f64::INFINITY);
        for &a in grid.values() {
            let e = error_for_alpha(&meta, data.labels(), a, h).unwrap();
            if e < best.1 {
                best = (a, e);
            }
        }
        assert_eq!(alpha, best.0);
        assert_eq!(curve.len(), 41);
        assert!(curve.iter().all(|&(_, e)| (0.0..=1.0).contains(&e)));
        assert_eq!(curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min), best.1);
    }
}

#[test]
fn error_for_alpha_counts_wrong_decisions() {
    let data = blobs(4, 60);
    let plan = FoldPlan::stratified(data.labels(), 3, 2).unwrap();
    let meta = generate_meta_cv(&data, &roster(), &plan, 4).unwrap();
    let wrong = meta
        .rows()
        .iter()
        .zip(data.labels())
        .filter(|(p, &y)| granular_classify(p, 0.7, HFunction::H2).unwrap().class != y)
        .count();
    let err = error_for_alpha(&meta, data.labels(), 0.7, HFunction::H2).unwrap();
    assert_eq!(err, wrong as f64 / 60.0);
    assert!(error_for_alpha(&meta, &data.labels()[1..], 0.7, HFunction::H2).is_err());
}

#[test]
fn flat_curve_selects_the_smallest_alpha() {
    // Every classifier agrees, so all alphas give identical decisions.
    let data = blobs(5, 30);
    let plan = FoldPlan::stratified(data.labels(), 3, 0).unwrap();
    let meta = generate_meta_cv(&data, &[LearnerSpec::NearestMean, LearnerSpec::NearestMean], &plan, 0).unwrap();
    let grid: AlphaGrid = "0.5:0.5:3".parse().unwrap();
    let (alpha, curve) = select_alpha(&meta, data.labels(), &grid, HFunction::H3).unwrap();
    assert!(curve.windows(2).all(|w| w[0].1 == w[1].1));
    assert_eq!(alpha, 0.5);
    let (single, _) = select_alpha(&meta, data.labels(), &AlphaGrid::single(1.0).unwrap(), HFunction::H3).unwrap();
    assert_eq!(single, 1.0);
}

#[test]
fn grid_training_picks_the_curve_minimum() {
    let data = blobs(6, 90);
    let ensemble = train(&data, &roster(), &AlphaMode::default(), HFunction::H3, 5, 11).unwrap();
    assert!(AlphaGrid::default().values().contains(&ensemble.alpha));
    let min = ensemble.alpha_error_curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let at = ensemble.alpha_error_curve.iter().find(|c| c.0 == ensemble.alpha).unwrap().1;
    assert_eq!(at, min);
}

#[test]
fn fixed_alpha_skips_cross_validation() {
    // Two observations of class 1 cannot fill 10 folds; fixed mode never tries.
    let rows = (0..12).map(|i| vec![f64::from(i), f64::from(i % 3)]).collect();
    let mut labels = vec![0; 12];
    labels[10] = 1;
    labels[11] = 1;
    let data = Dataset::new("small", rows, labels, ClassCatalog::numbered(2).unwrap()).unwrap();
    let ensemble = train(&data, &roster(), &AlphaMode::Fixed(1.0), HFunction::H3, 10, 0).unwrap();
    assert_eq!(ensemble.alpha, 1.0);
    assert!(ensemble.alpha_error_curve.is_empty());
    assert!(train(&data, &roster(), &AlphaMode::default(), HFunction::H3, 10, 0).is_err());
}

#[test]
fn refit_ignores_the_fold_seed() {
    let data = blobs(7, 90);
    let a = train(&data, &roster(), &AlphaMode::default(), HFunction::H3, 5, 1).unwrap();
    let b = train(&data, &roster(), &AlphaMode::default(), HFunction::H3, 5, 2).unwrap();
    assert_eq!(a.classifiers, b.classifiers);
}

#[test]
fn end_to_end_is_bitwise_reproducible() {
    let data = blobs(8, 90);
    let specs = LearnerSpec::extended_roster();
    let a = train(&data, &specs, &AlphaMode::default(), HFunction::H3, 5, 3).unwrap();
    let b = train(&data, &specs, &AlphaMode::default(), HFunction::H3, 5, 3).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let xs: Vec<Vec<f64>> = data.rows().map(<[f64]>::to_vec).collect();
    let pa = a.predict_batch(&xs).unwrap();
    let pb = b.predict_batch(&xs).unwrap();
    assert_eq!(pa, pb);
}

#[test]
fn prediction_exposes_every_stage() {
    let data = blobs(9, 60);
    let ensemble = train(&data, &roster(), &AlphaMode::Fixed(1.0), HFunction::H3, 5, 0).unwrap();
    let xs: Vec<Vec<f64>> = data.rows().take(10).map(<[f64]>::to_vec).collect();
    let batch = ensemble.predict_batch(&xs).unwrap();
    for (x, p) in xs.iter().zip(&batch) {
        let profile = ensemble.profile(x).unwrap();
        let direct = granular_classify(&profile, 1.0, HFunction::H3).unwrap();
        assert_eq!(p.decision, direct);
        assert_eq!(p.profile.len(), 4);
        assert_eq!(p.intervals.granules.len(), 3);
        assert_eq!(*p, ensemble.predict(x).unwrap());
    }
    assert!(ensemble.predict(&[0.0]).is_err());
    assert!(ensemble.predict(&[f64::NAN, 0.0]).is_err());
}

#[test]
fn unanimous_ensemble_gives_point_intervals() {
    let data = blobs(10, 60);
    let specs = [LearnerSpec::NearestMean, LearnerSpec::NearestMean, LearnerSpec::NearestMean];
    let ensemble = train(&data, &specs, &AlphaMode::Fixed(2.0), HFunction::H3, 5, 0).unwrap();
    let p = ensemble.predict(data.row(0)).unwrap();
    assert!(p.intervals.granules.iter().all(|g| g.length() == 0.0));
    let single = specs[0].fit(&data, 0).unwrap();
    assert_eq!(p.class(), single.predict(data.row(0)).unwrap());
}

#[test]
fn archive_round_trips_exactly() {
    let data = blobs(11, 60);
    let ensemble = train(&data, &LearnerSpec::extended_roster(), &AlphaMode::default(), HFunction::H1, 5, 0).unwrap();
    let json = ensemble.to_json().unwrap();
    let back = TrainedEnsemble::from_json(&json).unwrap();
    assert_eq!(back, ensemble);
    assert_eq!(back.to_json().unwrap(), json);
}
