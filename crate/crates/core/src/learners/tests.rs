use rand::Rng;

use super::*;
use crate::metadata::ClassCatalog;
use crate::seed;

fn catalog(m: usize) -> ClassCatalog {
    ClassCatalog::numbered(m).unwrap()
}

fn dataset(rows: Vec<Vec<f64>>, labels: Vec<usize>, m: usize) -> Dataset {
    Dataset::new("toy", rows, labels, catalog(m)).unwrap()
}

/// Two isotropic unit Gaussians at -2e1 and +2e1 (4 sigma apart), via Box-Muller.
fn two_gaussians(n: usize, d: usize, seed_value: u64) -> Dataset {
    let mut rng = seed::rng(seed_value);
    let mut normal = move || {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let y = i % 2;
        let mut row: Vec<f64> = (0..d).map(|_| normal()).collect();
        row[0] += if y == 0 { -2.0 } else { 2.0 };
        rows.push(row);
        labels.push(y);
    }
    dataset(rows, labels, 2)
}

fn stump_toy() -> Dataset {
    let a = [0.0, 0.5, 1.0, 1.5, 2.5, 3.0, 3.5, 3.75, 4.0];
    let b = [2.0, 6.0, 7.0, 8.0, 9.0, 10.0];
    let rows = a.iter().chain(&b).map(|&x| vec![x]).collect();
    let labels = a.iter().map(|_| 0).chain(b.iter().map(|_| 1)).collect();
    dataset(rows, labels, 2)
}

/// Weighted Gini of every midpoint split of a 1-D dataset, by direct counting.
fn gini_oracle(data: &Dataset) -> Vec<(f64, f64)> {
    let mut xs: Vec<f64> = data.rows().map(|r| r[0]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let gini = |side: &[usize]| {
        let n = side.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let a = side.iter().filter(|&&y| y == 0).count() as f64;
        let b = n - a;
        n * (1.0 - (a / n).powi(2) - (b / n).powi(2))
    };
    xs.windows(2)
        .map(|w| {
            let t = (w[0] + w[1]) / 2.0;
            let (mut left, mut right) = (Vec::new(), Vec::new());
            for (r, &y) in data.rows().zip(data.labels()) {
                if r[0] < t {
                    left.push(y)
                } else {
                    right.push(y)
                }
            }
            (t, gini(&left) + gini(&right))
        })
        .collect()
}

#[test]
fn nearest_mean_learns_singleton_means() {
    let data = dataset(vec![vec![0.0, 0.0], vec![10.0, 10.0]], vec![0, 1], 2);
    let fitted = LearnerSpec::NearestMean.fit(&data, 0).unwrap();
    let Model::NearestMean(m) = fitted.model() else { panic!("wrong model") };
    assert_eq!(m.means(), &[vec![0.0, 0.0], vec![10.0, 10.0]]);
    assert_eq!(fitted.predict(&[0.0, 0.0]).unwrap(), 0);
    let p = fitted.predict_proba(&[0.0, 0.0]).unwrap();
    assert!(p[0] > p[1]);
}

#[test]
fn one_nn_memorises_training_labels() {
    let data = two_gaussians(60, 3, 11);
    let fitted = LearnerSpec::knn(1).fit(&data, 0).unwrap();
    for (row, &y) in data.rows().zip(data.labels()) {
        let p = fitted.predict_proba(row).unwrap();
        assert_eq!(p[y], 1.0);
    }
}

#[test]
fn knn_vote_fractions() {
    // Three nearest to the query at 0: two A at 0.1/0.2, one B at 0.3.
    let data = dataset(
        vec![vec![0.1], vec![0.2], vec![0.3], vec![5.0], vec![6.0]],
        vec![0, 0, 1, 1, 1],
        2,
    );
    let p = LearnerSpec::knn(3).fit(&data, 0).unwrap().predict_proba(&[0.0]).unwrap();
    assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
    assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn knn_distance_ties_follow_training_order() {
    let data = dataset(vec![vec![-1.0], vec![1.0], vec![3.0]], vec![1, 0, 0], 2);
    let p = LearnerSpec::knn(1).fit(&data, 0).unwrap().predict_proba(&[0.0]).unwrap();
    assert_eq!(p, vec![0.0, 1.0]);
}

#[test]
fn knn_exact_match_takes_all_mass() {
    let data = dataset(vec![vec![0.0], vec![0.1], vec![0.2]], vec![1, 0, 0], 2);
    let p = LearnerSpec::knn(3).fit(&data, 0).unwrap().predict_proba(&[0.0]).unwrap();
    assert_eq!(p, vec![0.0, 1.0]);
}

#[test]
fn naive_bayes_symmetric_data_is_undecided_at_origin() {
    let data = dataset(
        vec![vec![-1.0, -2.0], vec![-2.0, -1.0], vec![1.0, 2.0], vec![2.0, 1.0]],
        vec![0, 0, 1, 1],
        2,
    );
    let p = LearnerSpec::GaussianNaiveBayes.fit(&data, 0).unwrap().predict_proba(&[0.0, 0.0]).unwrap();
    assert!((p[0] - 0.5).abs() < 1e-12, "{p:?}");
}

#[test]
fn naive_bayes_survives_constant_features() {
    let data = dataset(vec![vec![1.0, 0.0], vec![1.0, 0.5], vec![1.0, 3.0], vec![1.0, 3.5]], vec![0, 0, 1, 1], 2);
    let p = LearnerSpec::GaussianNaiveBayes.fit(&data, 0).unwrap().predict_proba(&[1.0, 0.2]).unwrap();
    assert!(p.iter().all(|v| v.is_finite()));
    assert!(p[0] > 0.99);
}

#[test]
fn stump_learns_the_oracle_split_and_leaf_proportions() {
    let data = stump_toy();
    let oracle = gini_oracle(&data);
    let best = oracle.iter().cloned().fold((f64::NAN, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    assert_eq!(best.0, 5.0);

    let fitted = LearnerSpec::DecisionStump.fit(&data, 0).unwrap();
    let Model::Tree(tree) = fitted.model() else { panic!("wrong model") };
    assert!(matches!(tree.nodes()[0], Node::Split { feature: 0, threshold, .. } if threshold == 5.0));
    let p = fitted.predict_proba(&[1.0]).unwrap();
    assert!((p[0] - 0.9).abs() < 1e-15 && (p[1] - 0.1).abs() < 1e-15, "{p:?}");
    assert_eq!(fitted.predict_proba(&[8.0]).unwrap(), vec![0.0, 1.0]);
}

#[test]
fn tree_respects_max_depth() {
    let data = two_gaussians(200, 2, 5);
    for depth in [1, 2, 4] {
        let spec = LearnerSpec::DecisionTree { max_depth: depth, min_leaf: 1 };
        let Model::Tree(tree) = spec.fit(&data, 0).unwrap().model().clone() else { panic!() };
        assert!(tree.depth() <= depth);
    }
}

#[test]
fn lda_handles_singular_scatter() {
    // Second feature duplicates the first: the scatter matrix is singular.
    let rows = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![4.0, 4.0], vec![5.0, 5.0]];
    let data = dataset(rows, vec![0, 0, 1, 1], 2);
    for spec in [LearnerSpec::Lda, LearnerSpec::Fisher] {
        let fitted = spec.fit(&data, 0).unwrap();
        assert_eq!(fitted.predict(&[0.5, 0.5]).unwrap(), 0, "{spec}");
        assert_eq!(fitted.predict(&[4.5, 4.5]).unwrap(), 1, "{spec}");
    }
}

#[test]
fn every_learner_fits_separated_gaussians() {
    let data = two_gaussians(200, 2, 1);
    for spec in LearnerSpec::extended_roster() {
        let fitted = spec.fit(&data, 3).unwrap();
        let wrong = data
            .rows()
            .zip(data.labels())
            .filter(|(r, &y)| fitted.predict(r).unwrap() != y)
            .count();
        assert!(wrong as f64 / data.len() as f64 <= 0.05, "{spec}: {wrong} training errors");
    }
}

#[test]
fn absent_classes_receive_zero() {
    let data = Dataset::new(
        "three",
        vec![vec![0.0], vec![1.0], vec![0.0], vec![1.0], vec![9.0]],
        vec![0, 1, 0, 1, 2],
        catalog(3),
    )
    .unwrap()
    .subset(&[0, 1, 2, 3]);
    for spec in LearnerSpec::extended_roster() {
        let p = spec.fit(&data, 0).unwrap().predict_proba(&[0.5]).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[2], 0.0, "{spec}");
    }
}

#[test]
fn outputs_are_valid_soft_labels_far_from_data() {
    let data = two_gaussians(80, 3, 9);
    for spec in LearnerSpec::extended_roster() {
        let fitted = spec.fit(&data, 0).unwrap();
        for x in [[1e6, -1e6, 0.0], [0.0; 3], [-3e3, 5.0, 7e4]] {
            let p = fitted.predict_proba(&x).unwrap();
            let mut rows = vec![p.clone()];
            assert!(crate::metadata::validate(&mut rows).is_ok(), "{spec}: {p:?}");
        }
    }
}

#[test]
fn fitting_is_deterministic() {
    let data = two_gaussians(100, 4, 21);
    for spec in LearnerSpec::extended_roster() {
        let a = spec.fit(&data, 77).unwrap();
        let b = spec.fit(&data, 77).unwrap();
        assert_eq!(a, b, "{spec}");
        let x = [0.3, -0.2, 1.0, 0.0];
        let pa = a.predict_proba(&x).unwrap();
        let pb = b.predict_proba(&x).unwrap();
        assert_eq!(pa.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), pb.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn prediction_errors() {
    let data = two_gaussians(40, 2, 2);
    let fitted = LearnerSpec::Lda.fit(&data, 0).unwrap();
    assert!(matches!(fitted.predict_proba(&[1.0]), Err(Error::LengthMismatch { expected: 2, actual: 1 })));
    assert!(fitted.predict_proba(&[1.0, f64::NAN]).is_err());
}

#[test]
fn fit_rejects_bad_inputs() {
    let data = two_gaussians(40, 2, 2);
    assert!(LearnerSpec::knn(0).fit(&data, 0).is_err());
    assert!(LearnerSpec::DecisionTree { max_depth: 0, min_leaf: 1 }.fit(&data, 0).is_err());
    let one_class = data.subset(&[0, 2, 4]);
    assert!(LearnerSpec::Lda.fit(&one_class, 0).is_err());
}

#[test]
fn compact_spec_parsing() {
    assert_eq!("knn:25".parse::<LearnerSpec>().unwrap(), LearnerSpec::knn(25));
    assert_eq!("lda".parse::<LearnerSpec>().unwrap(), LearnerSpec::Lda);
    assert_eq!(
        "decision-tree:4".parse::<LearnerSpec>().unwrap(),
        LearnerSpec::DecisionTree { max_depth: 4, min_leaf: 2 }
    );
    assert!("knn".parse::<LearnerSpec>().is_err());
    assert!("lda:3".parse::<LearnerSpec>().is_err());
    assert!("svm".parse::<LearnerSpec>().is_err());
    assert!("knn:0".parse::<LearnerSpec>().is_err());
}

#[test]
fn spec_json_shape() {
    let json = serde_json::to_string(&LearnerSpec::knn(5)).unwrap();
    assert_eq!(json, r#"{"kind":"knn","k":5}"#);
    let tree: LearnerSpec = serde_json::from_str(r#"{"kind":"decision-tree"}"#).unwrap();
    assert_eq!(tree, LearnerSpec::decision_tree());
    assert!(serde_json::from_str::<LearnerSpec>(r#"{"kind":"knn","k":5,"p":2}"#).is_err());
}

#[test]
fn default_roster_has_ten_learners() {
    assert_eq!(LearnerSpec::default_roster().len(), 10);
    assert_eq!(LearnerSpec::extended_roster().len(), 12);
}
