use std::fmt::Write as _;
use std::path::Path;

use crate::autoencoder::ModelParams;
use crate::error::{Error, Result};
use crate::math::{singular_values, Activation, Matrix};
use crate::par;

/// `∂h/∂x` of a sigmoid encoder at `x`: `diag(h ∘ (1 − h)) · Wᵀ`, shape `d_h × d_x`.
pub fn encoder_jacobian(p: &ModelParams, x: &[f64]) -> Result<Matrix> {
    if p.enc != Activation::Sigmoid {
        return Err(Error::InvalidArgument(
            "jacobian defined for sigmoid encoder only".into(),
        ));
    }
    let h = p.hidden(x)?;
    let (d_x, d_h) = p.w.shape();
    let mut j = Matrix::zeros(d_h, d_x);
    for i in 0..d_x {
        let w = p.w.row(i);
        for k in 0..d_h {
            j[(k, i)] = h[k] * (1.0 - h[k]) * w[k];
        }
    }
    Ok(j)
}

/// Mean singular-value spectrum of the encoder Jacobian over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Descending.
    pub mean_spectrum: Vec<f64>,
    pub sample_count: usize,
    pub model_tag: String,
}

impl SpectrumReport {
    /// Share of the total spectrum mass held by the `k` largest values.
    pub fn top_k_mass(&self, k: usize) -> f64 {
        let total: f64 = self.mean_spectrum.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        self.mean_spectrum.iter().take(k).sum::<f64>() / total
    }

    /// Header comments, then `index,value` lines (1-based).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# model = {}", self.model_tag);
        let _ = writeln!(s, "# samples = {}", self.sample_count);
        let _ = writeln!(s, "index,mean_singular_value");
        for (i, v) in self.mean_spectrum.iter().enumerate() {
            let _ = writeln!(s, "{},{v:e}", i + 1);
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Per-sample spectra are sorted, then averaged index by index. Sums are
/// formed after sorting each index's values across samples, so the result
/// does not depend on sample order.
pub fn average_spectrum(p: &ModelParams, x: &Matrix, model_tag: &str) -> Result<SpectrumReport> {
    if x.rows() == 0 {
        return Err(Error::Empty("samples for spectrum"));
    }
    let spectra: Vec<Result<Vec<f64>>> = par::map_indexed(x.rows(), |i| {
        singular_values(&encoder_jacobian(p, x.row(i))?)
    });
    let spectra: Vec<Vec<f64>> = spectra.into_iter().collect::<Result<_>>()?;
    let len = spectra[0].len();
    let n = spectra.len() as f64;
    let mut column = Vec::with_capacity(spectra.len());
    let mean_spectrum = (0..len)
        .map(|k| {
            column.clear();
            column.extend(spectra.iter().map(|s| s[k]));
            column.sort_by(f64::total_cmp);
            column.iter().sum::<f64>() / n
        })
        .collect();
    Ok(SpectrumReport {
        mean_spectrum,
        sample_count: spectra.len(),
        model_tag: model_tag.to_string(),
    })
}
