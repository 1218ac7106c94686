use mtae::classifier::*;
use mtae::math::{Activation, Matrix, RandomSource};
use proptest::prelude::*;

/// 40 points, 3 overlapping classes, deterministic jitter.
fn three_class_fixture() -> (Matrix, Vec<usize>) {
    let centers = [(0.0, 0.0), (2.0, 1.0), (-1.0, 2.0)];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40 {
        let c = i % 3;
        let t = i as f64;
        rows.push(vec![
            centers[c].0 + 0.9 * (1.7 * t + 0.3).sin(),
            centers[c].1 + 0.9 * (2.3 * t).cos(),
        ]);
        labels.push(c);
    }
    (Matrix::from_rows(&rows), labels)
}

// Optimal objective values of the same fixture with the bias as a
// regularized constant feature, from an interior-point convex solver.
const ORACLE_C1: f64 = 8.894733009446906;
const ORACLE_C01: f64 = 1.7744969971168736;

#[test]
fn svm_objective_is_near_solver_optimum() {
    let (x, y) = three_class_fixture();
    for (c, opt) in [(1.0, ORACLE_C1), (0.1, ORACLE_C01)] {
        let m = train_linear_svm(&x, &y, c, 300, 7).unwrap();
        let obj = svm_objective(&m, &x, &y, c).unwrap();
        assert!(obj >= opt - 1e-6, "below the optimum: {obj} < {opt}");
        assert!((obj - opt) / opt < 0.02, "C={c}: {obj} vs {opt}");
    }
}

#[test]
fn svm_is_deterministic_under_seed() {
    let (x, y) = three_class_fixture();
    let a = train_linear_svm(&x, &y, 1.0, 20, 3).unwrap();
    let b = train_linear_svm(&x, &y, 1.0, 20, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fold_partitions_over_seeds() {
    // 3 classes with 17, 11 and 9 members
    let labels: Vec<usize> = (0..37).map(|i| if i < 17 { 0 } else if i < 28 { 1 } else { 2 }).collect();
    for seed in 0..50 {
        for folds in [2, 3, 5, 9] {
            let parts = stratified_folds(&labels, folds, &mut RandomSource::new(seed)).unwrap();
            let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for class in 0..3 {
                let counts: Vec<usize> = parts
                    .iter()
                    .map(|p| p.iter().filter(|&&i| labels[i] == class).count())
                    .collect();
                assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            }
        }
    }
}

#[test]
fn cross_validation_prefers_the_separating_setting() {
    let mut rng = RandomSource::new(12);
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| {
            let s = if i % 2 == 0 { -3.0 } else { 3.0 };
            vec![s + 0.3 * rng.normal(), rng.normal()]
        })
        .collect();
    let x = Matrix::from_rows(&rows);
    let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
    // a useless grid point (ignores the data) against a real fit
    let out = cross_validate(&x, &y, &[false, true], 4, 1, |&fit, s| {
        if !fit {
            return Ok(accuracy(&vec![0; s.val_y.len()], &s.val_y));
        }
        let m = train_linear_svm(&s.train_x, &s.train_y, 1.0, 30, s.seed)?;
        Ok(accuracy(&predict(&m, &s.val_x)?, &s.val_y))
    })
    .unwrap();
    assert!(out.best);
    assert_eq!(out.mean_scores[1], 1.0);
}

fn small_net(rng: &mut RandomSource, d: usize, d_h: usize, c: usize, hidden: Activation) -> OneHiddenNet {
    let mut g = |r: usize, k: usize| Matrix::from_fn(r, k, |_, _| rng.normal());
    let w1 = g(d, d_h);
    let w2 = g(d_h, c);
    let b1 = g(1, d_h).into_vec();
    let b2 = g(1, c).into_vec();
    OneHiddenNet { w1, b1, w2, b2, hidden }
}

#[test]
fn network_gradients_match_finite_differences() {
    let mut rng = RandomSource::new(21);
    let eps = 1e-5;
    for case in 0..12 {
        let hidden = if case % 2 == 0 { Activation::Sigmoid } else { Activation::Linear };
        let (d, d_h, c) = (2 + case % 5, 1 + case % 4, 2 + case % 3);
        let net = small_net(&mut rng, d, d_h, c, hidden);
        let x = Matrix::from_fn(3, d, |_, _| rng.normal());
        let y: Vec<usize> = (0..3).map(|i| (i + case) % c).collect();
        let wd = 0.01 * case as f64;
        let g = net_gradients(&net, &x, &y, wd).unwrap();

        let check = |analytic: f64, mut perturb: Box<dyn FnMut(&mut OneHiddenNet, f64)>| {
            let mut plus = net.clone();
            perturb(&mut plus, eps);
            let mut minus = net.clone();
            perturb(&mut minus, -eps);
            let fd = (net_loss(&plus, &x, &y, wd).unwrap() - net_loss(&minus, &x, &y, wd).unwrap()) / (2.0 * eps);
            let scale = analytic.abs().max(fd.abs()).max(1e-3);
            assert!((analytic - fd).abs() / scale < 1e-6, "case {case}: {analytic} vs {fd}");
        };
        for k in 0..d * d_h {
            check(g.w1.as_slice()[k], Box::new(move |n, e| n.w1.as_mut_slice()[k] += e));
        }
        for k in 0..d_h * c {
            check(g.w2.as_slice()[k], Box::new(move |n, e| n.w2.as_mut_slice()[k] += e));
        }
        for k in 0..d_h {
            check(g.b1[k], Box::new(move |n, e| n.b1[k] += e));
        }
        for k in 0..c {
            check(g.b2[k], Box::new(move |n, e| n.b2[k] += e));
        }
    }
}

proptest! {
    #[test]
    fn prediction_ignores_common_score_shift(
        w in prop::collection::vec(-5.0f64..5.0, 12),
        b in prop::collection::vec(-5.0f64..5.0, 4),
        shift in -100.0f64..100.0,
        x in prop::collection::vec(-3.0f64..3.0, 6),
    ) {
        let m = LinearModel { weights: Matrix::new(4, 3, w).unwrap(), biases: b.clone() };
        let shifted = LinearModel { biases: b.iter().map(|v| v + shift).collect(), ..m.clone() };
        let x = Matrix::new(2, 3, x).unwrap();
        let p = predict(&m, &x).unwrap();
        let q = predict(&shifted, &x).unwrap();
        // adding a common constant can only change rounding-level ties
        for (r, (a, b)) in x.row_iter().zip(p.iter().zip(&q)) {
            if a != b {
                let s = m.scores(r);
                prop_assert!((s[*a] - s[*b]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn softmax_is_a_distribution(z in prop::collection::vec(-700.0f64..700.0, 1..12)) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|v| *v >= 0.0));
    }
}
