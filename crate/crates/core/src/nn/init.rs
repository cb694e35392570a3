use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StdNormal};

use super::{Dense, Model, Scalar};
use crate::error::Result;

/// Ratio between the scale of the underlying normal and the target standard deviation,
/// such that a zero-mean normal cut at ±2 target deviations has exactly the target
/// standard deviation.
///
/// Cutting `N(0, s)` at `±c·s` gives standard deviation `s·sqrt(1 - 2cφ(c)/(2Φ(c) - 1))`.
/// With the cut fixed at `2σ = c·s`, the condition becomes `sqrt(1 - 2cφ(c)/(2Φ(c) - 1)) = c/2`,
/// solved here by bisection; the returned ratio is `s/σ = 2/c` (≈ 1.378).
pub fn truncated_normal_scale() -> f64 {
    static SCALE: OnceLock<f64> = OnceLock::new();
    *SCALE.get_or_init(|| {
        let unit = StdNormal::new(0.0, 1.0).expect("unit normal");
        let excess = |c: f64| {
            let mass = 2.0 * unit.cdf(c) - 1.0;
            (1.0 - 2.0 * c * unit.pdf(c) / mass).sqrt() - c / 2.0
        };
        // excess(1) > 0, excess(2) < 0
        let (mut lo, mut hi) = (1.0, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        2.0 / (0.5 * (lo + hi))
    })
}

/// Zero-mean normal restricted to `[-2σ, 2σ]` with standard deviation `σ`, by rejection.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedNormal {
    std_dev: f64,
    base: Normal<f64>,
}

impl TruncatedNormal {
    pub fn new(std_dev: f64) -> Self {
        assert!(std_dev > 0.0 && std_dev.is_finite(), "std_dev must be positive");
        let base = Normal::new(0.0, std_dev * truncated_normal_scale()).expect("valid normal");
        Self { std_dev, base }
    }

    pub fn bound(&self) -> f64 {
        2.0 * self.std_dev
    }

    /// Draws in storage precision; rounding can not push a value past the bound.
    pub fn sample_as<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let bound = self.bound();
        loop {
            let x = T::from_f64(self.base.sample(rng));
            if x.to_f64().abs() <= bound {
                return x;
            }
        }
    }
}

fn init_dense<T: Scalar>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Dense<T> {
    // fan-in: the number of columns multiplied into the layer input
    let dist = TruncatedNormal::new(1.0 / (cols as f64).sqrt());
    Dense {
        rows,
        cols,
        w: (0..rows * cols).map(|_| dist.sample_as(rng)).collect(),
        b: vec![T::default(); rows],
    }
}

/// Fresh model: weights from [`TruncatedNormal`] with `σ = 1/sqrt(columns)`, biases zero.
/// Deterministic in `seed`.
pub fn init_model<T: Scalar>(
    vocab_dim: usize,
    hidden: usize,
    visual_dim: usize,
    has_text_branch: bool,
    seed: u64,
) -> Result<Model<T>> {
    super::check_dims(vocab_dim, hidden, visual_dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let encoder = init_dense(hidden, vocab_dim, &mut rng);
    let text_head = has_text_branch.then(|| init_dense(vocab_dim, hidden, &mut rng));
    let visual_head = init_dense(visual_dim, hidden, &mut rng);
    Ok(Model { encoder, text_head, visual_head })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ParamId;

    #[test]
    fn scale_constant() {
        let s = truncated_normal_scale();
        assert!((s - 1.377_902_124).abs() < 1e-8, "{s}");
    }

    #[test]
    fn biases_start_at_zero() {
        for seed in 0..5 {
            let m = init_model::<f32>(10, 6, 4, true, seed).unwrap();
            for id in [ParamId::B1, ParamId::B2, ParamId::B3] {
                assert!(m.param(id).unwrap().iter().all(|&b| b == 0.0));
            }
        }
    }

    #[test]
    fn same_seed_same_model() {
        let a = init_model::<f32>(30, 8, 5, true, 42).unwrap();
        let b = init_model::<f32>(30, 8, 5, true, 42).unwrap();
        assert_eq!(a, b);
        let c = init_model::<f32>(30, 8, 5, true, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_dims_error() {
        assert!(init_model::<f32>(0, 8, 5, true, 1).is_err());
        assert!(init_model::<f32>(3, 0, 5, true, 1).is_err());
        assert!(init_model::<f32>(3, 8, 0, true, 1).is_err());
    }

    #[test]
    fn weights_respect_bound_per_layer() {
        let m = init_model::<f32>(50, 20, 7, true, 11).unwrap();
        for (id, fan_in) in [(ParamId::W1, 50.0f64), (ParamId::W2, 20.0), (ParamId::W3, 20.0)] {
            let bound = 2.0 / fan_in.sqrt();
            assert!(m.param(id).unwrap().iter().all(|w| (*w as f64).abs() <= bound));
        }
    }
}
