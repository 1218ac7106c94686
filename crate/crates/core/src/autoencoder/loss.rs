use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::math::{check_probability, softplus, Activation, RandomSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    CrossEntropy,
    Squared,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::CrossEntropy => "cross_entropy",
            LossKind::Squared => "squared",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross_entropy" => Ok(LossKind::CrossEntropy),
            "squared" => Ok(LossKind::Squared),
            other => Err(Error::InvalidArgument(format!("unknown loss `{other}`"))),
        }
    }
}

/// Reconstruction loss between an output and its target.
///
/// `squared` is `½‖x̂ − t‖²`; `cross_entropy` is
/// `−Σ t·ln x̂ + (1 − t)·ln(1 − x̂)` and requires `t ∈ [0,1]`, `x̂ ∈ (0,1)`.
pub fn reconstruction_loss(x_hat: &[f64], target: &[f64], kind: LossKind) -> Result<f64> {
    if x_hat.len() != target.len() {
        return Err(Error::DimensionMismatch {
            context: "reconstruction loss",
            expected: target.len(),
            actual: x_hat.len(),
        });
    }
    match kind {
        LossKind::Squared => {
            if x_hat.iter().chain(target).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("squared loss input"));
            }
            Ok(0.5
                * x_hat
                    .iter()
                    .zip(target)
                    .map(|(y, t)| (y - t) * (y - t))
                    .sum::<f64>())
        }
        LossKind::CrossEntropy => {
            let mut s = 0.0;
            for (&y, &t) in x_hat.iter().zip(target) {
                if !(y > 0.0 && y < 1.0) || !(0.0..=1.0).contains(&t) {
                    return Err(Error::InvalidArgument(format!(
                        "cross-entropy needs outputs in (0,1) and targets in [0,1], got ({y}, {t})"
                    )));
                }
                s -= t * y.ln() + (1.0 - t) * (1.0 - y).ln();
            }
            Ok(s)
        }
    }
}

/// Loss from output pre-activations; exact and overflow-free for the
/// sigmoid/cross-entropy pairing where outputs may saturate to 0 or 1.
#[inline]
pub(crate) fn loss_from_preactivation(
    a: &[f64],
    target: &[f64],
    dec: Activation,
    kind: LossKind,
) -> f64 {
    match (kind, dec) {
        (LossKind::CrossEntropy, Activation::Sigmoid) => a
            .iter()
            .zip(target)
            .map(|(&a, &t)| softplus(a) - t * a)
            .sum(),
        (LossKind::CrossEntropy, _) => a
            .iter()
            .zip(target)
            .map(|(&a, &t)| {
                let y = dec.eval(a);
                -(t * y.ln() + (1.0 - t) * (1.0 - y).ln())
            })
            .sum(),
        (LossKind::Squared, _) => {
            0.5 * a
                .iter()
                .zip(target)
                .map(|(&a, &t)| {
                    let d = dec.eval(a) - t;
                    d * d
                })
                .sum::<f64>()
        }
    }
}

/// `∂L/∂a` for output pre-activations `a`, written into `out`.
#[inline]
pub(crate) fn output_delta_into(
    a: &[f64],
    target: &[f64],
    dec: Activation,
    kind: LossKind,
    out: &mut [f64],
) {
    match (kind, dec) {
        (LossKind::CrossEntropy, Activation::Sigmoid) => {
            for ((o, &a), &t) in out.iter_mut().zip(a).zip(target) {
                *o = crate::math::sigmoid(a) - t;
            }
        }
        (LossKind::CrossEntropy, _) => {
            for ((o, &a), &t) in out.iter_mut().zip(a).zip(target) {
                let y = dec.eval(a);
                *o = (y - t) / (y * (1.0 - y)) * dec.derivative_at(a);
            }
        }
        (LossKind::Squared, Activation::Linear) => {
            for ((o, &a), &t) in out.iter_mut().zip(a).zip(target) {
                *o = a - t;
            }
        }
        (LossKind::Squared, _) => {
            for ((o, &a), &t) in out.iter_mut().zip(a).zip(target) {
                *o = (dec.eval(a) - t) * dec.derivative_at(a);
            }
        }
    }
}

/// Zero-masking noise: each coordinate is dropped to 0 with probability
/// `level`. One uniform draw per coordinate.
pub fn corrupt_zero_mask(x: &[f64], level: f64, rng: &mut RandomSource) -> Result<Vec<f64>> {
    check_probability(level)?;
    let mut out = x.to_vec();
    corrupt_in_place(&mut out, level, rng);
    Ok(out)
}

#[inline]
pub(crate) fn corrupt_in_place(x: &mut [f64], level: f64, rng: &mut RandomSource) {
    for v in x {
        if rng.next_f64() < level {
            *v = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_oracle(y: &[f64], t: &[f64], kind: LossKind) -> f64 {
        let mut s = 0.0;
        for i in 0..y.len() {
            s += match kind {
                LossKind::Squared => 0.5 * (y[i] - t[i]).powi(2),
                LossKind::CrossEntropy => {
                    -(t[i] * y[i].ln()) - (1.0 - t[i]) * (1.0 - y[i]).ln()
                }
            };
        }
        s
    }

    #[test]
    fn closed_forms() {
        let t = [0.2, 0.9, 0.0, 1.0];
        assert_eq!(reconstruction_loss(&t, &t, LossKind::Squared).unwrap(), 0.0);
        let half = [0.5; 4];
        let ce = reconstruction_loss(&half, &t, LossKind::CrossEntropy).unwrap();
        assert!((ce - 4.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn random_pairs_match_scalar_loop() {
        let mut r = RandomSource::new(8);
        for _ in 0..20 {
            let y: Vec<f64> = (0..16).map(|_| r.uniform(0.01, 0.99).unwrap()).collect();
            let t: Vec<f64> = (0..16).map(|_| r.next_f64()).collect();
            for kind in [LossKind::Squared, LossKind::CrossEntropy] {
                let a = reconstruction_loss(&y, &t, kind).unwrap();
                assert!((a - scalar_oracle(&y, &t, kind)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_entropy_range_errors() {
        assert!(reconstruction_loss(&[1.0], &[0.5], LossKind::CrossEntropy).is_err());
        assert!(reconstruction_loss(&[0.5], &[1.5], LossKind::CrossEntropy).is_err());
        assert!(reconstruction_loss(&[0.5, 0.5], &[0.5], LossKind::Squared).is_err());
    }

    #[test]
    fn preactivation_loss_agrees_with_output_loss() {
        let a = [-2.0, 0.3, 1.7];
        let t = [0.0, 0.5, 1.0];
        let y: Vec<f64> = a.iter().map(|&v| crate::math::sigmoid(v)).collect();
        for kind in [LossKind::Squared, LossKind::CrossEntropy] {
            let l1 = loss_from_preactivation(&a, &t, Activation::Sigmoid, kind);
            let l2 = reconstruction_loss(&y, &t, kind).unwrap();
            assert!((l1 - l2).abs() < 1e-13);
        }
        // saturated logits stay finite
        let big = loss_from_preactivation(&[800.0], &[0.0], Activation::Sigmoid, LossKind::CrossEntropy);
        assert_eq!(big, 800.0);
    }

    #[test]
    fn zero_mask_levels() {
        let mut r = RandomSource::new(4);
        let x: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        assert_eq!(corrupt_zero_mask(&x, 0.0, &mut r).unwrap(), x);
        assert!(corrupt_zero_mask(&x, 1.0, &mut r).unwrap().iter().all(|&v| v == 0.0));
        assert!(corrupt_zero_mask(&x, 1.2, &mut r).is_err());

        let ones = vec![1.0; 100_000];
        let c = corrupt_zero_mask(&ones, 0.3, &mut r).unwrap();
        let frac = c.iter().filter(|&&v| v == 0.0).count() as f64 / 1e5;
        assert!((frac - 0.3).abs() < 0.01, "{frac}");
    }
}
