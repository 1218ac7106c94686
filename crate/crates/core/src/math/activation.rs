use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Element-wise nonlinearity used by encoder and decoder layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Sigmoid,
    Relu,
    Linear,
}

impl Activation {
    /// Checked evaluation.
    pub fn apply(self, a: f64) -> Result<f64> {
        if !a.is_finite() {
            return Err(Error::NonFiniteActivation);
        }
        Ok(self.eval(a))
    }

    /// Checked derivative with respect to the pre-activation.
    pub fn derivative(self, a: f64) -> Result<f64> {
        if !a.is_finite() {
            return Err(Error::NonFiniteActivation);
        }
        Ok(self.derivative_at(a))
    }

    #[inline]
    pub fn eval(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(a),
            Activation::Relu => a.max(0.0),
            Activation::Linear => a,
        }
    }

    #[inline]
    pub fn derivative_at(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = sigmoid(a);
                s * (1.0 - s)
            }
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    /// Derivative expressed through the activation output `y = eval(a)`.
    /// Exact for all three kinds (relu: `y > 0` iff `a > 0`).
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Relu => 1,
            Activation::Linear => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Activation::Sigmoid),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Linear),
            _ => None,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation `{other}`"
            ))),
        }
    }
}

#[inline]
pub fn sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

/// `ln(1 + e^a)` without overflow.
#[inline]
pub fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [Activation; 3] = [Activation::Sigmoid, Activation::Relu, Activation::Linear];

    #[test]
    fn closed_form_values() {
        assert_eq!(Activation::Sigmoid.apply(0.0).unwrap(), 0.5);
        assert_eq!(Activation::Relu.apply(-2.0).unwrap(), 0.0);
        assert!((Activation::Sigmoid.apply(3f64.ln()).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(Activation::Linear.apply(-1.5).unwrap(), -1.5);
    }

    #[test]
    fn derivative_values() {
        assert_eq!(Activation::Sigmoid.derivative(0.0).unwrap(), 0.25);
        assert_eq!(Activation::Linear.derivative(5.0).unwrap(), 1.0);
        assert_eq!(Activation::Relu.derivative(-0.1).unwrap(), 0.0);
        assert_eq!(Activation::Relu.derivative(0.1).unwrap(), 1.0);
    }

    #[test]
    fn sigmoid_derivative_at_point_seven_matches_central_difference() {
        let eps = 1e-5;
        let a = 0.7;
        let fd = (sigmoid(a + eps) - sigmoid(a - eps)) / (2.0 * eps);
        let an = Activation::Sigmoid.derivative(a).unwrap();
        assert!((fd - an).abs() < 1e-8, "{fd} vs {an}");
    }

    #[test]
    fn derivatives_match_finite_differences_at_random_points() {
        let mut rng = crate::math::RandomSource::new(11);
        let eps = 1e-5;
        for kind in KINDS {
            for _ in 0..10 {
                // keep away from the relu kink
                let mut a = rng.uniform(-4.0, 4.0).unwrap();
                if a.abs() < 1e-3 {
                    a += 0.5;
                }
                let fd = (kind.eval(a + eps) - kind.eval(a - eps)) / (2.0 * eps);
                let an = kind.derivative(a).unwrap();
                let rel = (fd - an).abs() / an.abs().max(1e-12);
                if an == 0.0 {
                    assert!(fd.abs() < 1e-12);
                } else {
                    assert!(rel < 1e-6, "{kind}: a={a} fd={fd} an={an}");
                }
            }
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        for kind in KINDS {
            assert!(matches!(
                kind.apply(f64::NAN),
                Err(Error::NonFiniteActivation)
            ));
            assert!(kind.derivative(f64::INFINITY).is_err());
        }
    }

    #[test]
    fn sigmoid_stays_in_open_interval_for_moderate_inputs() {
        for a in [-30.0, -1.0, 0.0, 1.0, 30.0] {
            let s = sigmoid(a);
            assert!(s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
    }

    #[test]
    fn parse_round_trip() {
        for kind in KINDS {
            assert_eq!(kind.as_str().parse::<Activation>().unwrap(), kind);
            assert_eq!(Activation::from_code(kind.code()), Some(kind));
        }
        assert!("tanh".parse::<Activation>().is_err());
    }
}
