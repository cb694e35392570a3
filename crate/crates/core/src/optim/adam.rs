use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { alpha: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |b: f64| b > 0.0 && b < 1.0;
        if !(open_unit(self.beta1) && open_unit(self.beta2)) {
            return Err(Error::InvalidArgument(format!(
                "Adam betas must lie in (0, 1), got {} and {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Adam alpha and epsilon must be positive, got {} and {}",
                self.alpha, self.epsilon
            )));
        }
        Ok(())
    }
}

/// Adam state for an ordered list of parameter tensors.
///
/// Moments are stored in the parameter type `T`; every update is computed in `f64`.
#[derive(Debug, Clone)]
pub struct Adam<T: Scalar = f32> {
    config: AdamConfig,
    t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    /// `lens[i]` is the number of scalars in the i-th tensor passed to [`Adam::step`].
    pub fn new(config: AdamConfig, lens: &[usize]) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            t: 0,
            m: lens.iter().map(|&n| vec![T::default(); n]).collect(),
            v: lens.iter().map(|&n| vec![T::default(); n]).collect(),
        })
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self, tensor: usize) -> &[T] {
        &self.m[tensor]
    }

    pub fn second_moment(&self, tensor: usize) -> &[T] {
        &self.v[tensor]
    }

    /// One update. Shapes and finiteness are checked before anything is modified, so a
    /// rejected gradient leaves both the parameters and the state untouched.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                context: "Adam tensor count",
                expected: self.m.len(),
                actual: params.len().max(grads.len()),
            });
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            let expected = self.m[i].len();
            for actual in [p.len(), g.len()] {
                if actual != expected {
                    return Err(Error::DimensionMismatch { context: "Adam tensor length", expected, actual });
                }
            }
            if let Some(j) = g.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of tensor {i} at index {j} is {}", g[j])));
            }
        }

        self.t += 1;
        let AdamConfig { alpha, beta1, beta2, epsilon } = self.config;
        let t = self.t as f64;
        let bc1 = 1.0 - beta1.powf(t);
        let bc2 = 1.0 - beta2.powf(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                let m_new = beta1 * m.to_f64() + (1.0 - beta1) * g;
                let v_new = beta2 * v.to_f64() + (1.0 - beta2) * g * g;
                *m = T::from_f64(m_new);
                *v = T::from_f64(v_new);
                let m_hat = m_new / bc1;
                let v_hat = v_new / bc2;
                *p = T::from_f64(p.to_f64() - alpha * m_hat / (v_hat.sqrt() + epsilon));
            }
        }
        Ok(())
    }
}
