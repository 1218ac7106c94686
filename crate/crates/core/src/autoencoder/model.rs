use crate::error::{Error, Result};
use crate::math::{axpy, Activation, Matrix, RandomSource};
use crate::par;

/// Shared encoder plus one decoder per domain.
///
/// `w` is `d_x × d_h` (input-to-hidden), each `v[l]` is `d_h × d_x`
/// (hidden-to-output for domain `l`). Decoder biases live with their decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w: Matrix,
    pub b_enc: Vec<f64>,
    pub v: Vec<Matrix>,
    pub b_dec: Vec<Vec<f64>>,
    pub enc: Activation,
    pub dec: Activation,
}

/// Half-width of the uniform initialization range for a layer.
pub fn init_range(fan_in: usize, fan_out: usize, kind: Activation) -> f64 {
    let base = (6.0 / (fan_in + fan_out) as f64).sqrt();
    match kind {
        Activation::Sigmoid => 4.0 * base,
        Activation::Relu | Activation::Linear => base,
    }
}

impl ModelParams {
    pub fn zeros(
        d_x: usize,
        d_h: usize,
        domains: usize,
        enc: Activation,
        dec: Activation,
    ) -> Self {
        Self {
            w: Matrix::zeros(d_x, d_h),
            b_enc: vec![0.0; d_h],
            v: (0..domains).map(|_| Matrix::zeros(d_h, d_x)).collect(),
            b_dec: (0..domains).map(|_| vec![0.0; d_x]).collect(),
            enc,
            dec,
        }
    }

    /// Fan-scaled uniform weights, zero biases. Draws `W` first, then each
    /// decoder in domain order, all row-major.
    pub fn random(
        d_x: usize,
        d_h: usize,
        domains: usize,
        enc: Activation,
        dec: Activation,
        rng: &mut RandomSource,
    ) -> Result<Self> {
        if d_x == 0 || d_h == 0 || domains == 0 {
            return Err(Error::InvalidArgument(
                "model dimensions and domain count must be positive".into(),
            ));
        }
        let mut p = Self::zeros(d_x, d_h, domains, enc, dec);
        let r_enc = init_range(d_x, d_h, enc);
        for w in p.w.as_mut_slice() {
            *w = rng.uniform(-r_enc, r_enc)?;
        }
        let r_dec = init_range(d_h, d_x, dec);
        for v in &mut p.v {
            for x in v.as_mut_slice() {
                *x = rng.uniform(-r_dec, r_dec)?;
            }
        }
        Ok(p)
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.w.rows()
    }

    #[inline]
    pub fn hidden_dim(&self) -> usize {
        self.w.cols()
    }

    #[inline]
    pub fn domains(&self) -> usize {
        self.v.len()
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite()
            && self.v.iter().all(Matrix::is_finite)
            && self.b_enc.iter().all(|v| v.is_finite())
            && self.b_dec.iter().flatten().all(|v| v.is_finite())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "autoencoder input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Hidden pre-activation `Wᵀx + b_enc`, skipping zero inputs.
    pub(crate) fn hidden_preactivation_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.b_enc);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, self.w.row(i), out);
            }
        }
    }

    pub(crate) fn hidden_into(&self, x: &[f64], out: &mut [f64]) {
        self.hidden_preactivation_into(x, out);
        for h in out.iter_mut() {
            *h = self.enc.eval(*h);
        }
    }

    /// Output pre-activation `V[l]ᵀh + b_dec[l]`.
    pub(crate) fn output_preactivation_into(&self, h: &[f64], l: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.b_dec[l]);
        let v = &self.v[l];
        for (j, &hj) in h.iter().enumerate() {
            if hj != 0.0 {
                axpy(hj, v.row(j), out);
            }
        }
    }

    /// Hidden code of `x` through the shared encoder.
    pub fn hidden(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut h = vec![0.0; self.hidden_dim()];
        self.hidden_into(x, &mut h);
        Ok(h)
    }

    /// Single-task forward pass through decoder 0.
    pub fn ae_forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.mtae_forward(x, 0)
    }

    /// Forward pass through the shared encoder and decoder `l`.
    pub fn mtae_forward(&self, x: &[f64], l: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if l >= self.domains() {
            return Err(Error::InvalidArgument(format!(
                "domain index {l} out of range for {} decoders",
                self.domains()
            )));
        }
        let h = self.hidden(x)?;
        let mut out = vec![0.0; self.input_dim()];
        self.output_preactivation_into(&h, l, &mut out);
        for y in &mut out {
            *y = self.dec.eval(*y);
        }
        Ok((h, out))
    }

    /// Row-wise feature map `σ_enc(Wᵀx + b_enc)` over a sample matrix.
    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "encode input",
                expected: self.input_dim(),
                actual: x.cols(),
            });
        }
        let d_h = self.hidden_dim();
        let mut out = Matrix::zeros(x.rows(), d_h);
        const ROWS_PER_CHUNK: usize = 64;
        par::for_each_chunk_mut(out.as_mut_slice(), ROWS_PER_CHUNK * d_h, |c, chunk| {
            for (k, h) in chunk.chunks_mut(d_h).enumerate() {
                self.hidden_into(x.row(c * ROWS_PER_CHUNK + k), h);
            }
        });
        Ok(out)
    }

    /// Copies of the shared encoder weights and bias.
    pub fn encoder_only(&self) -> (Matrix, Vec<f64>) {
        (self.w.clone(), self.b_enc.clone())
    }
}
