use crate::error::{Error, Result};
use crate::math::{axpy, dot, Matrix, RandomSource};

/// Multi-class linear scorer: `score_c(x) = w_cᵀx + b_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// One row per class.
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            weights: Matrix::zeros(classes, dim),
            biases: vec![0.0; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.weights.rows()
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .row_iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b)
            .collect()
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict(model: &LinearModel, x: &Matrix) -> Result<Vec<usize>> {
    if x.cols() != model.dim() {
        return Err(Error::DimensionMismatch {
            context: "linear model input",
            expected: model.dim(),
            actual: x.cols(),
        });
    }
    Ok(x.row_iter().map(|r| argmax(&model.scores(r))).collect())
}

/// Fraction of positions where `predicted == labels`.
pub fn accuracy(predicted: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / labels.len() as f64
}

pub(crate) fn check_labels(x: &Matrix, labels: &[usize]) -> Result<usize> {
    if x.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "labels",
            expected: x.rows(),
            actual: labels.len(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::Empty("training set"));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(Error::InvalidArgument(
            "classifier needs at least two classes".into(),
        ));
    }
    Ok(classes)
}

/// Multi-class hinge `max_c([c ≠ y] + s_c − s_y)` for one score vector.
fn hinge(scores: &[f64], y: usize) -> (f64, usize) {
    let mut best = (0.0, y);
    for (c, &s) in scores.iter().enumerate() {
        if c != y {
            let v = 1.0 + s - scores[y];
            if v > best.0 {
                best = (v, c);
            }
        }
    }
    best
}

/// `½Σ_c(‖w_c‖² + b_c²) + C·Σ_i max_c([c ≠ y_i] + s_c(x_i) − s_{y_i}(x_i))`.
///
/// The bias is treated as the weight of a constant feature and is
/// regularized with the rest.
pub fn svm_objective(model: &LinearModel, x: &Matrix, labels: &[usize], c_reg: f64) -> Result<f64> {
    if x.cols() != model.dim() || x.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "svm objective",
            expected: model.dim(),
            actual: x.cols(),
        });
    }
    let reg = 0.5 * (model.weights.frobenius_norm_sq() + dot(&model.biases, &model.biases));
    let loss: f64 = x
        .row_iter()
        .zip(labels)
        .map(|(r, &y)| hinge(&model.scores(r), y).0)
        .sum();
    Ok(reg + c_reg * loss)
}

/// Crammer-Singer linear SVM trained by stochastic subgradient descent with
/// step `1/(λt)`, `λ = 1/(C·n)`. Each epoch visits the samples in a fresh
/// random order; the returned model is the epoch-end iterate with the
/// lowest objective.
pub fn train_linear_svm(
    x: &Matrix,
    labels: &[usize],
    c_reg: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearModel> {
    train_linear_svm_traced(x, labels, c_reg, epochs, seed).map(|(m, _)| m)
}

/// As [`train_linear_svm`], also returning the objective of the kept model
/// after each epoch.
pub fn train_linear_svm_traced(
    x: &Matrix,
    labels: &[usize],
    c_reg: f64,
    epochs: usize,
    seed: u64,
) -> Result<(LinearModel, Vec<f64>)> {
    let classes = check_labels(x, labels)?;
    if !(c_reg > 0.0 && c_reg.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c_reg}")));
    }
    if epochs == 0 {
        return Err(Error::InvalidArgument("svm epochs must be >= 1".into()));
    }
    let (n, d) = x.shape();
    let lambda = 1.0 / (c_reg * n as f64);
    let mut rng = RandomSource::new(seed);

    // weights are `scale · u`, row c = [w_c, b_c]
    let mut u = Matrix::zeros(classes, d + 1);
    let mut scale = 1.0;
    let mut xa = vec![1.0; d + 1];
    let mut scores = vec![0.0; classes];
    let mut t = 0u64;
    let mut best: Option<(f64, LinearModel)> = None;
    let mut trace = Vec::with_capacity(epochs);

    for _ in 0..epochs {
        for i in rng.permutation(n) {
            t += 1;
            xa[..d].copy_from_slice(x.row(i));
            for (c, s) in scores.iter_mut().enumerate() {
                *s = scale * dot(u.row(c), &xa);
            }
            let y = labels[i];
            let (violation, rival) = hinge(&scores, y);
            let step = 1.0 / (lambda * t as f64);
            let shrink = 1.0 - 1.0 / t as f64;
            if shrink == 0.0 {
                u.as_mut_slice().fill(0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if violation > 0.0 {
                let a = step / scale;
                axpy(a, &xa, u.row_mut(y));
                axpy(-a, &xa, u.row_mut(rival));
            }
            if scale < 1e-150 {
                u.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
                scale = 1.0;
            }
        }
        let mut model = LinearModel::zeros(classes, d);
        for c in 0..classes {
            let row = u.row(c);
            for (w, &v) in model.weights.row_mut(c).iter_mut().zip(&row[..d]) {
                *w = scale * v;
            }
            model.biases[c] = scale * row[d];
        }
        if !model.weights.is_finite() || model.biases.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("svm weights"));
        }
        let obj = svm_objective(&model, x, labels, c_reg)?;
        if best.as_ref().map_or(true, |(b, _)| obj < *b) {
            best = Some((obj, model));
        }
        trace.push(best.as_ref().map(|(b, _)| *b).expect("set above"));
    }
    let (_, model) = best.expect("at least one epoch");
    Ok((model, trace))
}
