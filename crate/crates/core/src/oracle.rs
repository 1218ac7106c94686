//! Self-checks against independent references: central finite differences
//! for every analytic gradient, and small problems with known answers.
//! The same suites back the `oracle` command and the acceptance tests.

use std::time::Instant;

use crate::analysis::encoder_jacobian;
use crate::autoencoder::{gradients, objective, LossKind, ModelParams};
use crate::classifier::{net_gradients, net_loss, svm_objective, train_linear_svm, OneHiddenNet};
use crate::math::{singular_values, Activation, Matrix, RandomSource};

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Largest accepted coordinate error, relative to `max(|analytic|, |numeric|, FD_FLOOR)`.
pub const FD_TOLERANCE: f64 = 1e-6;
/// Gradient magnitude below which the error is measured on an absolute
/// scale; central differences of an O(1) objective carry ~1e-11 of rounding
/// noise, which would swamp a purely relative test on tiny coordinates.
pub const FD_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: String,
    /// Fixtures run.
    pub cases: usize,
    /// Worst error seen across all fixtures and coordinates.
    pub worst: f64,
    pub tolerance: f64,
    pub seconds: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.worst.is_finite() && self.worst <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<28} cases={:<3} worst={:.3e} tol={:.0e} ({:.2}s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tolerance,
            self.seconds
        )
    }
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FD_FLOOR)
}

/// Worst relative error between `analytic` and central differences of `f`
/// over every coordinate of `theta`.
pub fn fd_worst(theta: &[f64], analytic: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
    assert_eq!(theta.len(), analytic.len());
    let mut t = theta.to_vec();
    let mut worst = 0.0f64;
    for i in 0..t.len() {
        let orig = t[i];
        t[i] = orig + FD_STEP;
        let up = f(&t);
        t[i] = orig - FD_STEP;
        let down = f(&t);
        t[i] = orig;
        let num = (up - down) / (2.0 * FD_STEP);
        let e = rel_err(analytic[i], num);
        worst = if e.is_nan() { f64::NAN } else { worst.max(e) };
    }
    worst
}

fn randomized(d_x: usize, d_h: usize, m: usize, enc: Activation, dec: Activation, rng: &mut RandomSource) -> ModelParams {
    let mut p = ModelParams::random(d_x, d_h, m, enc, dec, rng).expect("positive dims");
    for w in p.w.as_mut_slice() {
        *w *= 3.0;
    }
    for v in p.v.iter_mut().flat_map(|v| v.as_mut_slice().iter_mut()) {
        *v *= 3.0;
    }
    p.b_enc.iter_mut().for_each(|b| *b = 0.5 * rng.normal());
    for b in p.b_dec.iter_mut().flatten() {
        *b = 0.5 * rng.normal();
    }
    p
}

fn pack(p: &ModelParams, task: usize) -> Vec<f64> {
    [p.w.as_slice(), &p.b_enc, p.v[task].as_slice(), &p.b_dec[task]].concat()
}

fn unpack(p: &mut ModelParams, task: usize, theta: &[f64]) {
    let (d_x, d_h) = p.w.shape();
    let (a, rest) = theta.split_at(d_x * d_h);
    let (b, rest) = rest.split_at(d_h);
    let (c, d) = rest.split_at(d_h * d_x);
    p.w.as_mut_slice().copy_from_slice(a);
    p.b_enc.copy_from_slice(b);
    p.v[task].as_mut_slice().copy_from_slice(c);
    p.b_dec[task].copy_from_slice(d);
}

/// One random autoencoder fixture; `domains = 1` is the single-task model.
fn autoencoder_fixture(rng: &mut RandomSource, domains: usize, loss: LossKind) -> f64 {
    let d_x = 3 + rng.below(5);
    let d_h = 2 + rng.below(4);
    let dec = match loss {
        LossKind::CrossEntropy => Activation::Sigmoid,
        LossKind::Squared => [Activation::Sigmoid, Activation::Linear][rng.below(2)],
    };
    let enc = Activation::Sigmoid;
    let p = randomized(d_x, d_h, domains, enc, dec, rng);
    let task = rng.below(domains);
    let x: Vec<f64> = (0..d_x).map(|_| rng.next_f64()).collect();
    let target: Vec<f64> = (0..d_x).map(|_| rng.next_f64()).collect();
    let eta = 0.01 * rng.next_f64();
    let g = gradients(&p, &x, &target, task, loss, eta).expect("valid fixture");
    let analytic = [g.w.as_slice(), &g.b_enc, g.v.as_slice(), &g.b_dec].concat();
    let theta = pack(&p, task);
    let mut q = p.clone();
    fd_worst(&theta, &analytic, |t| {
        let mut q2 = q.clone();
        unpack(&mut q2, task, t);
        objective(&q2, &x, &target, task, loss, eta).expect("valid fixture")
    })
    .max({
        // untouched decoders must stay untouched: perturbing one cannot move this task's objective
        let other = (task + 1) % domains;
        if other == task {
            0.0
        } else {
            let before = objective(&q, &x, &target, task, loss, eta).expect("valid fixture");
            q.v[other].as_mut_slice()[0] += 1.0;
            let after = objective(&q, &x, &target, task, loss, eta).expect("valid fixture");
            (after - before).abs()
        }
    })
}

fn net_fixture(rng: &mut RandomSource) -> f64 {
    let d = 2 + rng.below(4);
    let d_h = 2 + rng.below(4);
    let c = 2 + rng.below(3);
    let n = 2 + rng.below(4);
    let hidden = Activation::Sigmoid;
    let net = OneHiddenNet {
        w1: Matrix::from_fn(d, d_h, |_, _| rng.normal()),
        b1: (0..d_h).map(|_| 0.5 * rng.normal()).collect(),
        w2: Matrix::from_fn(d_h, c, |_, _| rng.normal()),
        b2: (0..c).map(|_| 0.5 * rng.normal()).collect(),
        hidden,
    };
    let x = Matrix::from_fn(n, d, |_, _| rng.normal());
    let y: Vec<usize> = (0..n).map(|_| rng.below(c)).collect();
    let eta = 0.01 * rng.next_f64();
    let g = net_gradients(&net, &x, &y, eta).expect("valid fixture");
    let analytic = [g.w1.as_slice(), &g.b1, g.w2.as_slice(), &g.b2].concat();
    let theta = [net.w1.as_slice(), &net.b1, net.w2.as_slice(), &net.b2].concat();
    fd_worst(&theta, &analytic, |t| {
        let mut m = net.clone();
        let (a, rest) = t.split_at(d * d_h);
        let (b, rest) = rest.split_at(d_h);
        let (w2, b2) = rest.split_at(d_h * c);
        m.w1.as_mut_slice().copy_from_slice(a);
        m.b1.copy_from_slice(b);
        m.w2.as_mut_slice().copy_from_slice(w2);
        m.b2.copy_from_slice(b2);
        net_loss(&m, &x, &y, eta).expect("valid fixture")
    })
}

/// Jacobian of the encoder against differences of the hidden code, one
/// output coordinate at a time.
fn jacobian_fixture(rng: &mut RandomSource) -> f64 {
    let d_x = 2 + rng.below(5);
    let d_h = 2 + rng.below(5);
    let p = randomized(d_x, d_h, 1, Activation::Sigmoid, Activation::Sigmoid, rng);
    let x: Vec<f64> = (0..d_x).map(|_| rng.next_f64()).collect();
    let j = encoder_jacobian(&p, &x).expect("sigmoid encoder");
    let mut worst = 0.0f64;
    for k in 0..d_h {
        let row: Vec<f64> = (0..d_x).map(|i| j[(k, i)]).collect();
        worst = worst.max(fd_worst(&x, &row, |t| p.hidden(t).expect("valid input")[k]));
    }
    worst
}

fn timed(name: &str, cases: usize, tolerance: f64, mut run: impl FnMut(usize) -> f64) -> OracleCheck {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..cases {
        let e = run(i);
        worst = if e.is_nan() || worst.is_nan() { f64::NAN } else { worst.max(e) };
    }
    OracleCheck {
        name: name.to_string(),
        cases,
        worst,
        tolerance,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Finite-difference checks of every analytic derivative, `fixtures`
/// random small instances per model family.
pub fn gradient_suite(fixtures: usize, seed: u64) -> Vec<OracleCheck> {
    let families: [(&str, Box<dyn Fn(&mut RandomSource) -> f64>); 6] = [
        ("autoencoder/cross-entropy", Box::new(|r| autoencoder_fixture(r, 1, LossKind::CrossEntropy))),
        ("autoencoder/squared", Box::new(|r| autoencoder_fixture(r, 1, LossKind::Squared))),
        ("multi-task/cross-entropy", Box::new(|r| autoencoder_fixture(r, 3, LossKind::CrossEntropy))),
        ("multi-task/squared", Box::new(|r| autoencoder_fixture(r, 3, LossKind::Squared))),
        ("one-hidden-net", Box::new(net_fixture)),
        ("encoder-jacobian", Box::new(jacobian_fixture)),
    ];
    families
        .iter()
        .enumerate()
        .map(|(k, (name, f))| {
            timed(name, fixtures, FD_TOLERANCE, |i| {
                f(&mut RandomSource::derive(seed ^ ((k as u64) << 32), i as u64))
            })
        })
        .collect()
}

/// Eigenvalues of a symmetric positive semidefinite matrix by power
/// iteration with deflation, descending.
pub fn power_iteration_eigenvalues(g: &Matrix, rng: &mut RandomSource) -> Vec<f64> {
    let n = g.rows();
    let mut a = g.clone();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let mut lambda = 0.0;
        for _ in 0..200_000 {
            let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)] * v[j]).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                lambda = 0.0;
                break;
            }
            let next: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
            v = w.into_iter().map(|x| x / norm).collect();
            if (next - lambda).abs() <= 1e-15 * next.abs() {
                lambda = next;
                break;
            }
            lambda = next;
        }
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] -= lambda * v[i] * v[j];
            }
        }
        out.push(lambda);
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

fn svd_fixture(rng: &mut RandomSource) -> f64 {
    let m = Matrix::from_fn(4, 3, |_, _| rng.normal());
    let mut g = Matrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            g[(i, j)] = (0..4).map(|r| m[(r, i)] * m[(r, j)]).sum();
        }
    }
    let want: Vec<f64> = power_iteration_eigenvalues(&g, rng).into_iter().map(|l| l.max(0.0).sqrt()).collect();
    let got = singular_values(&m).expect("finite matrix");
    got.iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1e-300))
        .fold(0.0, f64::max)
}

/// 40-point, 3-class, 2-D problem for the SVM objective check.
pub fn svm_fixture() -> (Matrix, Vec<usize>) {
    let centers = [(0.0, 0.0), (2.0, 1.0), (-1.0, 2.0)];
    let mut rows = Vec::with_capacity(40);
    let mut labels = Vec::with_capacity(40);
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

/// Optimal objective values of [`svm_fixture`] at C = 1 and C = 0.1, from
/// an off-line interior-point solve of the same primal problem.
pub const SVM_OPTIMA: [(f64, f64); 2] = [(1.0, 8.894733009446906), (0.1, 1.7744969971168736)];

/// Small instances with known answers.
pub fn small_instance_suite(seed: u64) -> Vec<OracleCheck> {
    let svd = timed("singular-values/gram", 20, 1e-8, |i| {
        svd_fixture(&mut RandomSource::derive(seed, 1000 + i as u64))
    });
    let (x, y) = svm_fixture();
    let svm = timed("linear-svm/objective", SVM_OPTIMA.len(), 0.02, |i| {
        let (c, opt) = SVM_OPTIMA[i];
        let m = train_linear_svm(&x, &y, c, 300, seed).expect("valid fixture");
        (svm_objective(&m, &x, &y, c).expect("valid fixture") - opt) / opt
    });
    vec![svd, svm]
}
