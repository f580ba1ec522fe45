//! Huber training loss and the MSE/RMSE evaluation metrics.

use serde::{Deserialize, Serialize};

use crate::diffcore::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Transition point between the quadratic and linear Huber regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HuberDelta(f64);

impl HuberDelta {
    pub fn new(delta: f64) -> Result<Self> {
        if delta > 0.0 && delta.is_finite() {
            Ok(Self(delta))
        } else {
            Err(Error::Parameter {
                op: "huber",
                message: format!("delta must be positive and finite, got {delta}"),
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for HuberDelta {
    fn default() -> Self {
        Self(1.0)
    }
}

impl TryFrom<f64> for HuberDelta {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<HuberDelta> for f64 {
    fn from(d: HuberDelta) -> f64 {
        d.0
    }
}

/// Per-sample Huber value of residual `r`: `½r²` for `|r| ≤ δ`,
/// `δ(|r| − ½δ)` beyond.
pub fn huber_value(residual: f64, delta: HuberDelta) -> f64 {
    let d = delta.get();
    let a = residual.abs();
    if a <= d {
        0.5 * residual * residual
    } else {
        d * (a - 0.5 * d)
    }
}

fn check_pair(op: &'static str, y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::Dimension {
            op,
            left: vec![y.len()],
            right: vec![y_hat.len()],
        });
    }
    if y.is_empty() {
        return Err(Error::EmptySequence(op));
    }
    Ok(())
}

/// Mean Huber loss over samples.
pub fn huber_mean(y: &[f64], y_hat: &[f64], delta: HuberDelta) -> Result<f64> {
    check_pair("huber_loss", y, y_hat)?;
    let total: f64 = y.iter().zip(y_hat).map(|(a, b)| huber_value(a - b, delta)).sum();
    Ok(total / y.len() as f64)
}

/// Mean Huber loss as a scalar tensor.
pub fn huber_loss(y: &Tensor, y_hat: &Tensor, delta: HuberDelta) -> Result<Tensor> {
    Tensor::scalar(huber_mean(y.data(), y_hat.data(), delta)?)
}

/// Records the mean Huber loss of `y_hat` against fixed targets on `tape`.
pub fn huber_loss_on(tape: &mut Tape, y_hat: Var, y: &[f64], delta: HuberDelta) -> Result<Var> {
    if y.is_empty() {
        return Err(Error::EmptySequence("huber_loss"));
    }
    tape.huber(y_hat, y, delta.get())
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair("mse", y, y_hat)?;
    let total: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(total / y.len() as f64)
}

pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    mse(y, y_hat).map(f64::sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(v: f64) -> HuberDelta {
        HuberDelta::new(v).unwrap()
    }

    #[test]
    fn zero_residual_is_zero() {
        assert_eq!(huber_mean(&[1.0, -2.0], &[1.0, -2.0], d(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn branches_meet_at_delta() {
        for delta in [0.25, 1.0, 3.0] {
            let quad = 0.5 * delta * delta;
            let lin = delta * (delta - 0.5 * delta);
            assert_eq!(quad, lin);
            assert_eq!(huber_value(delta, d(delta)), quad);
            assert_eq!(huber_value(-delta, d(delta)), quad);
        }
    }

    #[test]
    fn hand_evaluated_fixture() {
        // residuals 0.5 (quadratic: 0.125) and 2.0 (linear: 1.5)
        let v = huber_mean(&[0.5, 2.0], &[0.0, 0.0], d(1.0)).unwrap();
        assert_eq!(v, 0.8125);
        let t = huber_loss(
            &Tensor::vector(vec![0.5, 2.0]).unwrap(),
            &Tensor::vector(vec![0.0, 0.0]).unwrap(),
            d(1.0),
        )
        .unwrap();
        assert_eq!(t.item().unwrap(), 0.8125);
    }

    #[test]
    fn errors() {
        assert!(huber_mean(&[1.0], &[1.0, 2.0], d(1.0)).is_err());
        assert!(huber_mean(&[], &[], d(1.0)).is_err());
        assert!(mse(&[], &[]).is_err());
        assert!(HuberDelta::new(0.0).is_err());
        assert!(HuberDelta::new(-1.0).is_err());
    }

    #[test]
    fn unit_residuals() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[4.0], &[4.0]).unwrap(), 0.0);
    }

    #[test]
    fn reported_metric_pair_is_consistent() {
        let rmse_from_mse = 1.51f64.sqrt();
        assert!((rmse_from_mse - 1.2288).abs() < 1e-4);
        assert_eq!((rmse_from_mse * 100.0).round() / 100.0, 1.23);
    }

    #[test]
    fn tape_gradient_matches_finite_differences_across_the_kink() {
        let delta = d(1.0);
        let y = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        // residuals on both sides of |r| = δ
        let preds = [-1.3, -1.0 + 1e-3, -0.4, 0.2, 1.0 - 1e-3, 1.0 + 1e-3];
        let mut tape = Tape::new();
        let p = tape.leaf(Tensor::vector(preds.to_vec()).unwrap().requiring_grad());
        let loss = huber_loss_on(&mut tape, p, &y, delta).unwrap();
        tape.backward(loss).unwrap();
        let g = tape.grad(p).unwrap().to_vec();
        let eps = 1e-7;
        for i in 0..preds.len() {
            let mut up = preds;
            let mut dn = preds;
            up[i] += eps;
            dn[i] -= eps;
            let fd = (huber_mean(&y, &up, delta).unwrap() - huber_mean(&y, &dn, delta).unwrap())
                / (2.0 * eps);
            assert!((g[i] - fd).abs() < 1e-6, "i={i}: {} vs {fd}", g[i]);
        }
    }

    proptest! {
        #[test]
        fn rmse_squared_is_mse(pairs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..64)) {
            let (y, yh): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = mse(&y, &yh).unwrap();
            let r = rmse(&y, &yh).unwrap();
            prop_assert!((r * r - m).abs() <= 1e-12 * m.max(1.0));
        }

        #[test]
        fn huber_bounded_by_half_square(r in -50.0f64..50.0, delta in 0.01f64..10.0) {
            let h = huber_value(r, d(delta));
            let q = 0.5 * r * r;
            prop_assert!(h <= q + 1e-12);
            if r.abs() <= delta {
                prop_assert_eq!(h, q);
            } else {
                prop_assert!(h < q);
            }
        }

        #[test]
        fn huber_is_symmetric(y in proptest::collection::vec(-5.0f64..5.0, 1..16), shift in -3.0f64..3.0) {
            let yh: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + shift * (i as f64 - 2.0)).collect();
            let a = huber_mean(&y, &yh, d(1.0)).unwrap();
            let b = huber_mean(&yh, &y, d(1.0)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
