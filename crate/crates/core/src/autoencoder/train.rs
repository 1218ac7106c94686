use std::time::Instant;

use super::loss::{corrupt_in_place, loss_from_preactivation, output_delta_into, LossKind};
use super::model::ModelParams;
use crate::data::{rand_sel, MultiDomainCorpus};
use crate::error::{Error, Result};
use crate::math::{axpy, dot, Activation, Matrix, RandomSource};

/// Stop once the mean loss of the last `window` epochs differs from the
/// preceding `window` epochs by less than `tolerance` (relative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStop {
    pub window: usize,
    pub tolerance: f64,
}

/// Every hyperparameter of one feature-learning run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub hidden_dim: usize,
    /// Zero-masking probability; 0 trains a plain (non-denoising) model.
    pub corruption_level: f64,
    pub loss: LossKind,
    pub batch_size: usize,
    pub seed: u64,
    pub early_stop: Option<EarlyStop>,
    pub enc_activation: Activation,
    pub dec_activation: Activation,
}

impl TrainConfig {
    fn pixel(learning_rate: f64, corruption_level: f64) -> Self {
        Self {
            learning_rate,
            weight_decay: 3e-4,
            epochs: 100,
            hidden_dim: 500,
            corruption_level,
            loss: LossKind::CrossEntropy,
            batch_size: 1,
            seed: 0,
            early_stop: None,
            enc_activation: Activation::Sigmoid,
            dec_activation: Activation::Sigmoid,
        }
    }

    /// Single-task autoencoder on raw pixels.
    pub fn pixel_ae() -> Self {
        Self::pixel(0.1, 0.0)
    }

    /// Denoising autoencoder on raw pixels (30% zero-masking).
    pub fn pixel_dae() -> Self {
        Self::pixel(0.1, 0.3)
    }

    pub fn pixel_mtae() -> Self {
        Self::pixel(0.03, 0.0)
    }

    pub fn pixel_dmtae() -> Self {
        Self::pixel(0.03, 0.3)
    }

    /// MTAE pretraining on dense feature tables (sigmoid/linear, squared loss).
    pub fn feature_mtae() -> Self {
        Self {
            learning_rate: 5e-4,
            weight_decay: 3e-4,
            epochs: 500,
            hidden_dim: 2000,
            corruption_level: 0.0,
            loss: LossKind::Squared,
            batch_size: 10,
            seed: 0,
            early_stop: None,
            enc_activation: Activation::Sigmoid,
            dec_activation: Activation::Linear,
        }
    }

    pub fn feature_dmtae() -> Self {
        Self {
            corruption_level: 0.2,
            ..Self::feature_mtae()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be >= 0", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight decay {} must be >= 0", self.weight_decay));
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.hidden_dim == 0 {
            return bad("hidden dimension must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1".into());
        }
        crate::math::check_probability(self.corruption_level)?;
        if let Some(es) = self.early_stop {
            if es.window == 0 || !(es.tolerance >= 0.0) {
                return bad("early stop needs window >= 1 and tolerance >= 0".into());
            }
        }
        Ok(())
    }
}

/// Loss statistics of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// Average per-sample loss, indexed `[input domain][target domain]`.
    pub task_losses: Vec<Vec<f64>>,
    pub seconds: f64,
}

impl EpochStats {
    pub fn mean_loss(&self) -> f64 {
        let all: Vec<f64> = self.task_losses.iter().flatten().copied().collect();
        all.iter().sum::<f64>() / all.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub epochs: Vec<EpochStats>,
}

impl TrainTrace {
    pub fn mean_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(EpochStats::mean_loss).collect()
    }
}

/// Independent random streams of one run, all derived from `TrainConfig::seed`.
struct Streams {
    init: RandomSource,
    shuffle: RandomSource,
    corrupt: RandomSource,
    select: RandomSource,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            init: RandomSource::derive(seed, 0),
            shuffle: RandomSource::derive(seed, 1),
            corrupt: RandomSource::derive(seed, 2),
            select: RandomSource::derive(seed, 3),
        }
    }
}

/// Gradient sums of a mini-batch for one task.
struct BatchAccum {
    gw: Matrix,
    gb_enc: Vec<f64>,
    gv: Matrix,
    gb_dec: Vec<f64>,
    count: usize,
}

/// Work buffers reused across samples.
///
/// Single-sample updates decay encoder rows lazily: only rows whose input
/// is nonzero are read or written by a step, so a row's pending decay
/// `(1 − 2αη)^k` is applied the next time it is touched, or on [`Kernel::flush`].
pub(crate) struct Kernel {
    /// Update count at which each encoder row was last brought current.
    stamps: Vec<u64>,
    steps: u64,
    decay: f64,
    h: Vec<f64>,
    a_o: Vec<f64>,
    delta_o: Vec<f64>,
    delta_h: Vec<f64>,
    noisy: Vec<f64>,
    batch: Option<BatchAccum>,
}

impl Kernel {
    pub(crate) fn new(d_x: usize, d_h: usize, batch_size: usize) -> Self {
        Self {
            stamps: vec![0; d_x],
            steps: 0,
            decay: 1.0,
            h: vec![0.0; d_h],
            a_o: vec![0.0; d_x],
            delta_o: vec![0.0; d_x],
            delta_h: vec![0.0; d_h],
            noisy: vec![0.0; d_x],
            batch: (batch_size > 1).then(|| BatchAccum {
                gw: Matrix::zeros(d_x, d_h),
                gb_enc: vec![0.0; d_h],
                gv: Matrix::zeros(d_h, d_x),
                gb_dec: vec![0.0; d_x],
                count: 0,
            }),
        }
    }

    fn sync_row(&mut self, w: &mut Matrix, i: usize) {
        let lag = self.steps - self.stamps[i];
        if lag > 0 {
            let f = self.decay.powi(i32::try_from(lag).unwrap_or(i32::MAX));
            for r in w.row_mut(i) {
                *r *= f;
            }
            self.stamps[i] = self.steps;
        }
    }

    /// Brings the encoder rows read by input `x` up to date.
    fn sync_inputs(&mut self, p: &mut ModelParams, x: &[f64]) {
        if self.decay == 1.0 {
            return;
        }
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                self.sync_row(&mut p.w, i);
            }
        }
    }

    /// Applies every pending encoder decay.
    pub(crate) fn flush(&mut self, p: &mut ModelParams) {
        for i in 0..self.stamps.len() {
            self.sync_row(&mut p.w, i);
        }
    }

    /// Forward pass and output/hidden deltas for one pair; returns the loss.
    fn forward_backward(
        &mut self,
        p: &ModelParams,
        task: usize,
        x: &[f64],
        target: &[f64],
        loss: LossKind,
    ) -> f64 {
        p.hidden_into(x, &mut self.h);
        p.output_preactivation_into(&self.h, task, &mut self.a_o);
        output_delta_into(&self.a_o, target, p.dec, loss, &mut self.delta_o);
        let v = &p.v[task];
        for j in 0..self.h.len() {
            self.delta_h[j] = dot(v.row(j), &self.delta_o) * p.enc.derivative_from_output(self.h[j]);
        }
        loss_from_preactivation(&self.a_o, target, p.dec, loss)
    }

    fn clean_loss(&mut self, p: &mut ModelParams, task: usize, x: &[f64], target: &[f64], loss: LossKind) -> f64 {
        self.sync_inputs(p, x);
        p.hidden_into(x, &mut self.h);
        p.output_preactivation_into(&self.h, task, &mut self.a_o);
        loss_from_preactivation(&self.a_o, target, p.dec, loss)
    }

    /// One plain SGD update on a single pair, with the gradient and weight
    /// decay fused into a single pass over each weight matrix:
    /// `θ ← (1 − 2αη)θ − α·∂L/∂θ`.
    pub(crate) fn sgd_pair(
        &mut self,
        p: &mut ModelParams,
        task: usize,
        x: &[f64],
        target: &[f64],
        lr: f64,
        weight_decay: f64,
        loss: LossKind,
    ) -> f64 {
        let decay = 1.0 - 2.0 * lr * weight_decay;
        if decay != self.decay {
            self.flush(p);
            self.decay = decay;
        }
        self.sync_inputs(p, x);
        p.hidden_into(x, &mut self.h);
        p.output_preactivation_into(&self.h, task, &mut self.a_o);
        output_delta_into(&self.a_o, target, p.dec, loss, &mut self.delta_o);
        let value = loss_from_preactivation(&self.a_o, target, p.dec, loss);
        if lr == 0.0 {
            return value;
        }
        let enc = p.enc;

        let v = &mut p.v[task];
        for j in 0..self.h.len() {
            let row = v.row_mut(j);
            self.delta_h[j] = dot(row, &self.delta_o) * enc.derivative_from_output(self.h[j]);
            let a = -lr * self.h[j];
            for (r, &d) in row.iter_mut().zip(&self.delta_o) {
                *r = a.mul_add(d, *r * decay);
            }
        }
        axpy(-lr, &self.delta_o, &mut p.b_dec[task]);

        self.steps += 1;
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let a = -lr * xi;
                for (r, &d) in p.w.row_mut(i).iter_mut().zip(&self.delta_h) {
                    *r = a.mul_add(d, *r * decay);
                }
                self.stamps[i] = self.steps;
            }
        }
        axpy(-lr, &self.delta_h, &mut p.b_enc);
        value
    }

    /// Adds one pair's gradient to the mini-batch sums.
    fn accumulate(&mut self, p: &mut ModelParams, task: usize, x: &[f64], target: &[f64], loss: LossKind) -> f64 {
        self.sync_inputs(p, x);
        let value = self.forward_backward(p, task, x, target, loss);
        let acc = self.batch.as_mut().expect("batch buffers");
        for j in 0..self.h.len() {
            axpy(self.h[j], &self.delta_o, acc.gv.row_mut(j));
        }
        axpy(1.0, &self.delta_o, &mut acc.gb_dec);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, &self.delta_h, acc.gw.row_mut(i));
            }
        }
        axpy(1.0, &self.delta_h, &mut acc.gb_enc);
        acc.count += 1;
        value
    }

    /// Applies the averaged mini-batch gradient plus weight decay.
    fn apply_batch(&mut self, p: &mut ModelParams, task: usize, lr: f64, weight_decay: f64) {
        let acc = self.batch.as_mut().expect("batch buffers");
        if acc.count == 0 {
            return;
        }
        if lr != 0.0 {
            let scale = -lr / acc.count as f64;
            let decay = 1.0 - 2.0 * lr * weight_decay;
            for (w, g) in p.w.as_mut_slice().iter_mut().zip(acc.gw.as_slice()) {
                *w = scale.mul_add(*g, *w * decay);
            }
            axpy(scale, &acc.gb_enc, &mut p.b_enc);
            for (v, g) in p.v[task].as_mut_slice().iter_mut().zip(acc.gv.as_slice()) {
                *v = scale.mul_add(*g, *v * decay);
            }
            axpy(scale, &acc.gb_dec, &mut p.b_dec[task]);
        }
        acc.gw.as_mut_slice().fill(0.0);
        acc.gv.as_mut_slice().fill(0.0);
        acc.gb_enc.fill(0.0);
        acc.gb_dec.fill(0.0);
        acc.count = 0;
    }
}

/// Source of (input, target, input-domain) triples for one task.
trait PairSource {
    fn len(&self) -> usize;
    fn input(&self, j: usize) -> &[f64];
    fn target(&self, j: usize, task: usize) -> &[f64];
    fn domain(&self, j: usize) -> usize;
}

struct SelfPairs<'a>(&'a Matrix);

impl PairSource for SelfPairs<'_> {
    fn len(&self) -> usize {
        self.0.rows()
    }
    fn input(&self, j: usize) -> &[f64] {
        self.0.row(j)
    }
    fn target(&self, j: usize, _task: usize) -> &[f64] {
        self.0.row(j)
    }
    fn domain(&self, _j: usize) -> usize {
        0
    }
}

/// Row `j` of `X̄` and of `X̄ˡ` without materializing the replicated
/// matrices: input is view `j / n`, target is view `l`, both at row `j % n`.
struct ReplicatedPairs<'a> {
    corpus: &'a MultiDomainCorpus,
    n: usize,
}

impl PairSource for ReplicatedPairs<'_> {
    fn len(&self) -> usize {
        self.n * self.corpus.domains()
    }
    fn input(&self, j: usize) -> &[f64] {
        self.corpus.views[j / self.n].x.row(j % self.n)
    }
    fn target(&self, j: usize, task: usize) -> &[f64] {
        self.corpus.views[task].x.row(j % self.n)
    }
    fn domain(&self, j: usize) -> usize {
        j / self.n
    }
}

/// One pass of task `task` over all pairs in a fresh random order.
/// Accumulates clean-input losses into `sums[input_domain]`.
#[allow(clippy::too_many_arguments)]
fn task_pass(
    p: &mut ModelParams,
    task: usize,
    pairs: &dyn PairSource,
    cfg: &TrainConfig,
    streams: &mut Streams,
    kernel: &mut Kernel,
    sums: &mut [f64],
    counts: &mut [usize],
) {
    let order = streams.shuffle.permutation(pairs.len());
    let denoise = cfg.corruption_level > 0.0;
    let batched = cfg.batch_size > 1;
    for (pos, &j) in order.iter().enumerate() {
        let clean = pairs.input(j);
        let target = pairs.target(j, task);
        let domain = pairs.domain(j);
        let mut noisy = std::mem::take(&mut kernel.noisy);
        let x: &[f64] = if denoise {
            noisy.copy_from_slice(clean);
            corrupt_in_place(&mut noisy, cfg.corruption_level, &mut streams.corrupt);
            &noisy
        } else {
            clean
        };
        // the trace always records the clean-input loss, before the update
        let clean_value = if denoise {
            Some(kernel.clean_loss(p, task, clean, target, cfg.loss))
        } else {
            None
        };
        let value = if batched {
            kernel.accumulate(p, task, x, target, cfg.loss)
        } else {
            kernel.sgd_pair(p, task, x, target, cfg.learning_rate, cfg.weight_decay, cfg.loss)
        };
        kernel.noisy = noisy;
        sums[domain] += clean_value.unwrap_or(value);
        counts[domain] += 1;
        if batched && ((pos + 1) % cfg.batch_size == 0 || pos + 1 == order.len()) {
            kernel.apply_batch(p, task, cfg.learning_rate, cfg.weight_decay);
        }
    }
    kernel.flush(p);
}

fn finish_epoch(
    epoch: usize,
    sums: Vec<Vec<f64>>,
    counts: Vec<Vec<usize>>,
    started: Instant,
) -> Result<EpochStats> {
    let task_losses: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| s.into_iter().zip(c).map(|(s, c)| s / c.max(1) as f64).collect())
        .collect();
    if task_losses.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { epoch });
    }
    Ok(EpochStats {
        task_losses,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn should_stop(trace: &TrainTrace, early: Option<EarlyStop>) -> bool {
    let Some(es) = early else { return false };
    let losses = trace.mean_losses();
    if losses.len() < 2 * es.window {
        return false;
    }
    let n = losses.len();
    let recent: f64 = losses[n - es.window..].iter().sum::<f64>() / es.window as f64;
    let before: f64 = losses[n - 2 * es.window..n - es.window].iter().sum::<f64>() / es.window as f64;
    ((recent - before) / before.abs().max(f64::MIN_POSITIVE)).abs() < es.tolerance
}

/// Single-task AE (or DAE when `corruption_level > 0`) on the rows of `data`
/// (all source views concatenated).
pub fn train_single_task(cfg: &TrainConfig, data: &Matrix) -> Result<(ModelParams, TrainTrace)> {
    cfg.validate()?;
    if data.rows() == 0 {
        return Err(Error::Empty("training data"));
    }
    let mut streams = Streams::new(cfg.seed);
    let mut p = ModelParams::random(
        data.cols(),
        cfg.hidden_dim,
        1,
        cfg.enc_activation,
        cfg.dec_activation,
        &mut streams.init,
    )?;
    let mut kernel = Kernel::new(data.cols(), cfg.hidden_dim, cfg.batch_size);
    let mut trace = TrainTrace::default();
    let pairs = SelfPairs(data);
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let mut sums = vec![vec![0.0; 1]];
        let mut counts = vec![vec![0usize; 1]];
        let mut s = [0.0];
        let mut c = [0usize];
        task_pass(&mut p, 0, &pairs, cfg, &mut streams, &mut kernel, &mut s, &mut c);
        sums[0][0] = s[0];
        counts[0][0] = c[0];
        trace.epochs.push(finish_epoch(epoch, sums, counts, started)?);
        if should_stop(&trace, cfg.early_stop) {
            break;
        }
    }
    Ok((p, trace))
}

/// Multi-task autoencoder: one shared encoder, one decoder per domain.
///
/// Every epoch re-balances the corpus with [`rand_sel`], then visits tasks
/// `l = 0..M` in order; task `l` runs over every row of the stacked input
/// `X̄` (fresh permutation per task) with view `l` as the target, updating the
/// encoder and decoder `l` only. Inputs are zero-masked when
/// `corruption_level > 0`.
pub fn train_mtae(cfg: &TrainConfig, corpus: &MultiDomainCorpus) -> Result<(ModelParams, TrainTrace)> {
    cfg.validate()?;
    let m = corpus.domains();
    let d_x = corpus.dim();
    let mut streams = Streams::new(cfg.seed);
    let mut p = ModelParams::random(
        d_x,
        cfg.hidden_dim,
        m,
        cfg.enc_activation,
        cfg.dec_activation,
        &mut streams.init,
    )?;
    let mut kernel = Kernel::new(d_x, cfg.hidden_dim, cfg.batch_size);
    let mut trace = TrainTrace::default();
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let balanced = rand_sel(corpus, &mut streams.select)?;
        let n = balanced.views[0].len();
        if n == 0 {
            return Err(Error::Empty("balanced corpus"));
        }
        let pairs = ReplicatedPairs {
            corpus: &balanced,
            n,
        };
        // sums[input domain][task]
        let mut sums = vec![vec![0.0; m]; m];
        let mut counts = vec![vec![0usize; m]; m];
        for task in 0..m {
            let mut s = vec![0.0; m];
            let mut c = vec![0usize; m];
            task_pass(&mut p, task, &pairs, cfg, &mut streams, &mut kernel, &mut s, &mut c);
            for k in 0..m {
                sums[k][task] = s[k];
                counts[k][task] = c[k];
            }
        }
        trace.epochs.push(finish_epoch(epoch, sums, counts, started)?);
        if should_stop(&trace, cfg.early_stop) {
            break;
        }
    }
    Ok((p, trace))
}
