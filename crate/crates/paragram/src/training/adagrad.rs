//! AdaGrad with per-coordinate accumulators.

use ndarray::{azip, Array, Dimension};

/// Default stabilizer added to the accumulator root.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Running sum of squared gradients for one parameter tensor.
#[derive(Debug, Clone)]
pub struct AdaGradState<D: Dimension> {
    accum: Array<f64, D>,
    eps: f64,
}

impl<D: Dimension> AdaGradState<D> {
    pub fn new(shape: D) -> Self {
        AdaGradState {
            accum: Array::zeros(shape),
            eps: DEFAULT_EPS,
        }
    }

    pub fn with_eps(shape: D, eps: f64) -> Self {
        AdaGradState {
            accum: Array::zeros(shape),
            eps,
        }
    }

    pub fn accum(&self) -> &Array<f64, D> {
        &self.accum
    }

    /// One step: `accum += grad^2; theta -= lr * grad / (sqrt(accum) + eps)`.
    pub fn update(&mut self, theta: &mut Array<f64, D>, grad: &Array<f64, D>, lr: f64) {
        let eps = self.eps;
        azip!((t in theta, g in grad, a in &mut self.accum) {
            *a += g * g;
            *t -= lr * g / (a.sqrt() + eps);
        });
    }
}
