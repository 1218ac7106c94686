use super::loss::{loss_from_preactivation, output_delta_into, LossKind};
use super::model::ModelParams;
use crate::error::{Error, Result};
use crate::math::{dot, Matrix};

/// Gradient of one reconstruction task with respect to the shared encoder
/// and decoder `task`. Every other decoder has zero gradient and is omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub task: usize,
    pub w: Matrix,
    pub b_enc: Vec<f64>,
    pub v: Matrix,
    pub b_dec: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(p: &ModelParams, task: usize) -> Self {
        let (d_x, d_h) = p.w.shape();
        Self {
            task,
            w: Matrix::zeros(d_x, d_h),
            b_enc: vec![0.0; d_h],
            v: Matrix::zeros(d_h, d_x),
            b_dec: vec![0.0; d_x],
        }
    }
}

fn check_task(p: &ModelParams, x: &[f64], target: &[f64], task: usize) -> Result<()> {
    if x.len() != p.input_dim() || target.len() != p.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "gradient input/target",
            expected: p.input_dim(),
            actual: if x.len() != p.input_dim() {
                x.len()
            } else {
                target.len()
            },
        });
    }
    if task >= p.domains() {
        return Err(Error::InvalidArgument(format!(
            "task {task} out of range for {} decoders",
            p.domains()
        )));
    }
    Ok(())
}

/// Per-task objective `L(f_l(x), target) + η(‖W‖² + ‖V_l‖²)`.
pub fn objective(
    p: &ModelParams,
    x: &[f64],
    target: &[f64],
    task: usize,
    loss: LossKind,
    weight_decay: f64,
) -> Result<f64> {
    check_task(p, x, target, task)?;
    let mut a_h = vec![0.0; p.hidden_dim()];
    p.hidden_into(x, &mut a_h);
    let mut a_o = vec![0.0; p.input_dim()];
    p.output_preactivation_into(&a_h, task, &mut a_o);
    let data = loss_from_preactivation(&a_o, target, p.dec, loss);
    let reg = weight_decay * (p.w.frobenius_norm_sq() + p.v[task].frobenius_norm_sq());
    Ok(data + reg)
}

/// Exact backpropagated gradient of [`objective`].
pub fn gradients(
    p: &ModelParams,
    x: &[f64],
    target: &[f64],
    task: usize,
    loss: LossKind,
    weight_decay: f64,
) -> Result<Gradients> {
    check_task(p, x, target, task)?;
    let (d_x, d_h) = p.w.shape();
    let mut h = vec![0.0; d_h];
    p.hidden_into(x, &mut h);
    let mut a_o = vec![0.0; d_x];
    p.output_preactivation_into(&h, task, &mut a_o);
    let mut delta_o = vec![0.0; d_x];
    output_delta_into(&a_o, target, p.dec, loss, &mut delta_o);

    let v = &p.v[task];
    let mut g = Gradients::zeros_like(p, task);
    for j in 0..d_h {
        g.b_enc[j] = dot(v.row(j), &delta_o) * p.enc.derivative_from_output(h[j]);
        let vrow = v.row(j);
        for (k, gv) in g.v.row_mut(j).iter_mut().enumerate() {
            *gv = h[j] * delta_o[k] + 2.0 * weight_decay * vrow[k];
        }
    }
    g.b_dec.copy_from_slice(&delta_o);
    for i in 0..d_x {
        let wrow = p.w.row(i);
        for (j, gw) in g.w.row_mut(i).iter_mut().enumerate() {
            *gw = x[i] * g.b_enc[j] + 2.0 * weight_decay * wrow[j];
        }
    }
    Ok(g)
}

/// `θ ← θ − α·∇θ` for the encoder and decoder `grads.task`; other decoders
/// are left untouched.
pub fn sgd_step(p: &mut ModelParams, grads: &Gradients, learning_rate: f64) -> Result<()> {
    if !(learning_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    if grads.task >= p.domains() || grads.w.shape() != p.w.shape() {
        return Err(Error::InvalidArgument(
            "gradient bundle does not match model".into(),
        ));
    }
    let l = grads.task;
    step(p.w.as_mut_slice(), grads.w.as_slice(), learning_rate);
    step(&mut p.b_enc, &grads.b_enc, learning_rate);
    step(p.v[l].as_mut_slice(), grads.v.as_slice(), learning_rate);
    step(&mut p.b_dec[l], &grads.b_dec, learning_rate);
    Ok(())
}

fn step(params: &mut [f64], grads: &[f64], lr: f64) {
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
}
