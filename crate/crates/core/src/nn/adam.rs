use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::dense::Param;

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> Default for AdamConfig<T> {
    /// Learning rate 1e-4, betas (0.9, 0.999), eps 1e-8.
    fn default() -> Self {
        AdamConfig {
            lr: T::lit(1e-4),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }
}

/// Moment estimates for one parameter list.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig<T>,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig<T>, params: &[Param<T>]) -> Self {
        AdamState {
            config,
            m: params.iter().map(|p| vec![T::zero(); p.data.len()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.data.len()]).collect(),
            t: 0,
        }
    }

    /// One bias-corrected Adam descent step. Nothing is modified when any
    /// gradient is non-finite or misaligned.
    pub fn step(&mut self, params: &mut [Param<T>], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(Error::InvalidArgument(format!(
                "adam state for {} parameters, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.data.len() != g.len() || m.len() != g.len() {
                return Err(Error::InvalidArgument(format!(
                    "gradient for {} has {} entries, expected {}",
                    p.name,
                    g.len(),
                    p.data.len()
                )));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    op: format!("adam gradient for {}", p.name),
                });
            }
        }

        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let one = T::one();
        let t = self.t as i32;
        let bc1 = one - beta1.powi(t);
        let bc2 = one - beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..g.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (one - beta1) * gi;
                v[i] = beta2 * v[i] + (one - beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.data[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
