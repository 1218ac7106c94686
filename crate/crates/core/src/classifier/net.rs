use super::svm::{argmax, check_labels};
use crate::autoencoder::init_range;
use crate::error::{Error, Result};
use crate::math::{axpy, dot, Activation, Matrix, RandomSource};

/// Fully connected network with one hidden layer and a softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHiddenNet {
    /// `d × d_h`, same layout as an autoencoder encoder.
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// `d_h × C`.
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub hidden: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub hidden: Activation,
    pub seed: u64,
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.hidden_dim >= 1
            && self.epochs >= 1
            && self.batch_size >= 1
            && self.learning_rate >= 0.0
            && self.learning_rate.is_finite()
            && self.weight_decay >= 0.0
            && self.weight_decay.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid network config {self:?}")))
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Gradient of [`net_loss`] with the same layout as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradients {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl OneHiddenNet {
    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn classes(&self) -> usize {
        self.w2.cols()
    }

    fn hidden_into(&self, x: &[f64], h: &mut [f64]) {
        h.copy_from_slice(&self.b1);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, self.w1.row(i), h);
            }
        }
        for v in h.iter_mut() {
            *v = self.hidden.eval(*v);
        }
    }

    fn logits_into(&self, h: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&self.b2);
        for (j, &hj) in h.iter().enumerate() {
            axpy(hj, self.w2.row(j), z);
        }
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                actual: x.cols(),
            });
        }
        Ok(())
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.hidden_dim()];
        let mut z = vec![0.0; self.classes()];
        self.hidden_into(x, &mut h);
        self.logits_into(&h, &mut z);
        softmax(&z)
    }

    /// Most probable class per row; ties go to the lowest class id.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        self.check(x)?;
        let mut h = vec![0.0; self.hidden_dim()];
        let mut z = vec![0.0; self.classes()];
        Ok(x.row_iter()
            .map(|r| {
                self.hidden_into(r, &mut h);
                self.logits_into(&h, &mut z);
                argmax(&z)
            })
            .collect())
    }
}

/// Mean softmax cross-entropy over the rows plus `η(‖W1‖² + ‖W2‖²)`.
pub fn net_loss(net: &OneHiddenNet, x: &Matrix, labels: &[usize], weight_decay: f64) -> Result<f64> {
    net.check(x)?;
    if labels.len() != x.rows() || labels.iter().any(|&l| l >= net.classes()) {
        return Err(Error::InvalidArgument("labels do not match network".into()));
    }
    let mut total = 0.0;
    for (r, &y) in x.row_iter().zip(labels) {
        total -= net.probabilities(r)[y].ln();
    }
    let reg = weight_decay * (net.w1.frobenius_norm_sq() + net.w2.frobenius_norm_sq());
    Ok(total / x.rows().max(1) as f64 + reg)
}

/// Exact gradient of [`net_loss`].
pub fn net_gradients(
    net: &OneHiddenNet,
    x: &Matrix,
    labels: &[usize],
    weight_decay: f64,
) -> Result<NetGradients> {
    net.check(x)?;
    if labels.len() != x.rows() || labels.iter().any(|&l| l >= net.classes()) {
        return Err(Error::InvalidArgument("labels do not match network".into()));
    }
    let (d, d_h, c) = (net.input_dim(), net.hidden_dim(), net.classes());
    let mut g = NetGradients {
        w1: Matrix::zeros(d, d_h),
        b1: vec![0.0; d_h],
        w2: Matrix::zeros(d_h, c),
        b2: vec![0.0; c],
    };
    let inv = 1.0 / x.rows().max(1) as f64;
    let mut h = vec![0.0; d_h];
    let mut z = vec![0.0; c];
    let mut dh = vec![0.0; d_h];
    for (r, &y) in x.row_iter().zip(labels) {
        net.hidden_into(r, &mut h);
        net.logits_into(&h, &mut z);
        let mut dz = softmax(&z);
        dz[y] -= 1.0;
        dz.iter_mut().for_each(|v| *v *= inv);
        for j in 0..d_h {
            axpy(h[j], &dz, g.w2.row_mut(j));
            dh[j] = dot(net.w2.row(j), &dz) * net.hidden.derivative_from_output(h[j]);
        }
        axpy(1.0, &dz, &mut g.b2);
        for (i, &xi) in r.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, &dh, g.w1.row_mut(i));
            }
        }
        axpy(1.0, &dh, &mut g.b1);
    }
    axpy(2.0 * weight_decay, net.w1.as_slice(), g.w1.as_mut_slice());
    axpy(2.0 * weight_decay, net.w2.as_slice(), g.w2.as_mut_slice());
    Ok(g)
}

/// Trains a 1HNN by mini-batch SGD on the softmax cross-entropy. With
/// `init = Some((w, b))` the first layer starts from pretrained encoder
/// weights and bias; otherwise it gets fan-based uniform initialization.
pub fn fine_tune_1hnn(
    init: Option<(&Matrix, &[f64])>,
    x: &Matrix,
    labels: &[usize],
    cfg: &NetConfig,
) -> Result<OneHiddenNet> {
    cfg.validate()?;
    let classes = check_labels(x, labels)?;
    let d = x.cols();
    let mut rng = RandomSource::new(cfg.seed);
    let (w1, b1) = match init {
        Some((w, b)) => {
            if w.shape() != (d, cfg.hidden_dim) || b.len() != cfg.hidden_dim {
                return Err(Error::DimensionMismatch {
                    context: "pretrained first layer",
                    expected: d * cfg.hidden_dim,
                    actual: w.rows() * w.cols(),
                });
            }
            (w.clone(), b.to_vec())
        }
        None => {
            let r = init_range(d, cfg.hidden_dim, cfg.hidden);
            let w = Matrix::from_fn(d, cfg.hidden_dim, |_, _| r * (2.0 * rng.next_f64() - 1.0));
            (w, vec![0.0; cfg.hidden_dim])
        }
    };
    let r2 = init_range(cfg.hidden_dim, classes, Activation::Linear);
    let w2 = Matrix::from_fn(cfg.hidden_dim, classes, |_, _| r2 * (2.0 * rng.next_f64() - 1.0));
    let mut net = OneHiddenNet {
        w1,
        b1,
        w2,
        b2: vec![0.0; classes],
        hidden: cfg.hidden,
    };
    for epoch in 1..=cfg.epochs {
        let order = rng.permutation(x.rows());
        for batch in order.chunks(cfg.batch_size) {
            if cfg.learning_rate == 0.0 {
                continue;
            }
            let bx = x.select_rows(batch);
            let by: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let g = net_gradients(&net, &bx, &by, cfg.weight_decay)?;
            let lr = -cfg.learning_rate;
            axpy(lr, g.w1.as_slice(), net.w1.as_mut_slice());
            axpy(lr, &g.b1, &mut net.b1);
            axpy(lr, g.w2.as_slice(), net.w2.as_mut_slice());
            axpy(lr, &g.b2, &mut net.b2);
        }
        let finite = net.w1.is_finite()
            && net.w2.is_finite()
            && net.b1.iter().chain(&net.b2).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Divergence { epoch });
        }
    }
    Ok(net)
}
