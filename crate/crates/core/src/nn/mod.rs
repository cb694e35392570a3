//! The two-head network.
//!
//! ```text
//! z  = ReLU(W1 t_in + b1)      shared hidden layer
//! t' = ReLU(W2 z + b2)         text head (absent for the visual-only regressor)
//! v' = ReLU(W3 z + b3)         visual head
//! ```
//!
//! Weights are row-major `[out × in]` so that `W x` multiplies columns by input entries.
//! Parameters are stored as `T` (f32 by default); every dot product and loss sum is
//! accumulated in f64.

mod backward;
mod checkpoint;
mod init;

use std::fmt;

pub(crate) use backward::Scratch;
pub use backward::{backward_text, backward_visual, Branch, Gradients, Target};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use init::{init_model, truncated_normal_scale, TruncatedNormal};

use crate::error::{Error, Result};
use crate::textvec::BowVector;

/// Storage type for parameters.
pub trait Scalar: Copy + Default + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(x: f64) -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
}

/// Names one parameter tensor of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamId {
    W1,
    B1,
    W2,
    B2,
    W3,
    B3,
}

impl ParamId {
    pub const ALL: [ParamId; 6] =
        [ParamId::W1, ParamId::B1, ParamId::W2, ParamId::B2, ParamId::W3, ParamId::B3];
}

pub(crate) fn check_dims(vocab_dim: usize, hidden: usize, visual_dim: usize) -> Result<()> {
    for (name, d) in [("vocab_dim", vocab_dim), ("hidden", hidden), ("visual_dim", visual_dim)] {
        if d == 0 {
            return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
        }
    }
    Ok(())
}

/// A dense layer `[rows × cols]` with bias `[rows]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense<T> {
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) w: Vec<T>,
    pub(crate) b: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, w: vec![T::default(); rows * cols], b: vec![T::default(); rows] }
    }

    /// Pre-activation `W x + b` for a dense f64 input.
    fn affine(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.w
            .chunks_exact(self.cols)
            .zip(&self.b)
            .map(|(row, b)| {
                let mut acc = 0.0;
                for (w, xi) in row.iter().zip(x) {
                    acc += w.to_f64() * xi;
                }
                acc + b.to_f64()
            })
            .collect()
    }

    /// Pre-activation for a binary input given by its active column indices.
    fn affine_sparse(&self, on: &[u32]) -> Vec<f64> {
        self.w
            .chunks_exact(self.cols)
            .zip(&self.b)
            .map(|(row, b)| {
                let mut acc = 0.0;
                for &j in on {
                    acc += row[j as usize].to_f64();
                }
                acc + b.to_f64()
            })
            .collect()
    }
}

/// Parameters of the two-head network.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Scalar = f32> {
    pub(crate) encoder: Dense<T>,
    pub(crate) text_head: Option<Dense<T>>,
    pub(crate) visual_head: Dense<T>,
}

impl<T: Scalar> Model<T> {
    /// All-zero model. Use [`init_model`] for training.
    pub fn zeros(vocab_dim: usize, hidden: usize, visual_dim: usize, has_text_branch: bool) -> Result<Self> {
        check_dims(vocab_dim, hidden, visual_dim)?;
        Ok(Self {
            encoder: Dense::zeros(hidden, vocab_dim),
            text_head: has_text_branch.then(|| Dense::zeros(vocab_dim, hidden)),
            visual_head: Dense::zeros(visual_dim, hidden),
        })
    }

    pub fn vocab_dim(&self) -> usize {
        self.encoder.cols
    }

    pub fn hidden(&self) -> usize {
        self.encoder.rows
    }

    pub fn visual_dim(&self) -> usize {
        self.visual_head.rows
    }

    pub fn has_text_branch(&self) -> bool {
        self.text_head.is_some()
    }

    /// Drops the text head, leaving a visual-only regressor.
    pub fn without_text_branch(mut self) -> Self {
        self.text_head = None;
        self
    }

    /// Row-major shape of a parameter tensor, or `None` if it is absent.
    pub fn shape(&self, id: ParamId) -> Option<(usize, usize)> {
        let layer = self.layer(id)?;
        Some(match id {
            ParamId::W1 | ParamId::W2 | ParamId::W3 => (layer.rows, layer.cols),
            ParamId::B1 | ParamId::B2 | ParamId::B3 => (layer.rows, 1),
        })
    }

    fn layer(&self, id: ParamId) -> Option<&Dense<T>> {
        match id {
            ParamId::W1 | ParamId::B1 => Some(&self.encoder),
            ParamId::W2 | ParamId::B2 => self.text_head.as_ref(),
            ParamId::W3 | ParamId::B3 => Some(&self.visual_head),
        }
    }

    pub fn param(&self, id: ParamId) -> Option<&[T]> {
        let layer = self.layer(id)?;
        Some(match id {
            ParamId::W1 | ParamId::W2 | ParamId::W3 => &layer.w,
            ParamId::B1 | ParamId::B2 | ParamId::B3 => &layer.b,
        })
    }

    pub fn param_mut(&mut self, id: ParamId) -> Option<&mut [T]> {
        let layer = match id {
            ParamId::W1 | ParamId::B1 => Some(&mut self.encoder),
            ParamId::W2 | ParamId::B2 => self.text_head.as_mut(),
            ParamId::W3 | ParamId::B3 => Some(&mut self.visual_head),
        }?;
        Some(match id {
            ParamId::W1 | ParamId::W2 | ParamId::W3 => &mut layer.w,
            ParamId::B1 | ParamId::B2 | ParamId::B3 => &mut layer.b,
        })
    }

    /// Mutable views of several distinct tensors at once, in the order requested.
    pub(crate) fn params_mut(&mut self, ids: &[ParamId]) -> Vec<&mut [T]> {
        let Model { encoder, text_head, visual_head } = self;
        let mut w1 = Some(&mut encoder.w[..]);
        let mut b1 = Some(&mut encoder.b[..]);
        let (mut w2, mut b2) = match text_head {
            Some(h) => (Some(&mut h.w[..]), Some(&mut h.b[..])),
            None => (None, None),
        };
        let mut w3 = Some(&mut visual_head.w[..]);
        let mut b3 = Some(&mut visual_head.b[..]);
        ids.iter()
            .map(|id| {
                let slot = match id {
                    ParamId::W1 => &mut w1,
                    ParamId::B1 => &mut b1,
                    ParamId::W2 => &mut w2,
                    ParamId::B2 => &mut b2,
                    ParamId::W3 => &mut w3,
                    ParamId::B3 => &mut b3,
                };
                slot.take().unwrap_or_else(|| panic!("parameter {id:?} absent or requested twice"))
            })
            .collect()
    }

    /// Exact number of scalars across all present tensors.
    pub fn param_count(&self) -> usize {
        ParamId::ALL.iter().filter_map(|id| self.param(*id)).map(<[T]>::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        ParamId::ALL.iter().filter_map(|id| self.param(*id)).all(|p| p.iter().all(|x| x.to_f64().is_finite()))
    }

    /// Converts the storage type.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        let conv = |d: &Dense<T>| Dense {
            rows: d.rows,
            cols: d.cols,
            w: d.w.iter().map(|x| U::from_f64(x.to_f64())).collect(),
            b: d.b.iter().map(|x| U::from_f64(x.to_f64())).collect(),
        };
        Model {
            encoder: conv(&self.encoder),
            text_head: self.text_head.as_ref().map(conv),
            visual_head: conv(&self.visual_head),
        }
    }

    fn check_input(&self, t_in: &BowVector) -> Result<()> {
        if t_in.dim() != self.vocab_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.vocab_dim(),
                actual: t_in.dim(),
            });
        }
        Ok(())
    }

    pub(crate) fn activations(&self, t_in: &BowVector, with_text: bool) -> Activations {
        let hidden_pre = self.encoder.affine_sparse(t_in.indices());
        self.heads(hidden_pre, with_text)
    }

    fn heads(&self, hidden_pre: Vec<f64>, with_text: bool) -> Activations {
        let z = relu(&hidden_pre);
        let text_pre = match (&self.text_head, with_text) {
            (Some(head), true) => Some(head.affine(&z)),
            _ => None,
        };
        let visual_pre = self.visual_head.affine(&z);
        Activations { hidden_pre, z, text_pre, visual_pre }
    }

    /// Runs both heads on a sparse binary input. Only the active columns of `W1` are read.
    pub fn forward(&self, t_in: &BowVector) -> Result<ForwardResult> {
        self.check_input(t_in)?;
        Ok(self.activations(t_in, true).into_result())
    }

    /// Visual head only; skips the text head entirely.
    pub fn predict_visual(&self, t_in: &BowVector) -> Result<Vec<f64>> {
        self.check_input(t_in)?;
        Ok(relu(&self.activations(t_in, false).visual_pre))
    }

    /// Same as [`Model::forward`] but with a dense input vector.
    pub fn forward_dense(&self, x: &[f64]) -> Result<ForwardResult> {
        if x.len() != self.vocab_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.vocab_dim(),
                actual: x.len(),
            });
        }
        let hidden_pre = self.encoder.affine(x);
        Ok(self.heads(hidden_pre, true).into_result())
    }
}

/// Pre- and post-activations of one forward pass.
#[derive(Debug, Clone)]
pub(crate) struct Activations {
    pub(crate) hidden_pre: Vec<f64>,
    pub(crate) z: Vec<f64>,
    pub(crate) text_pre: Option<Vec<f64>>,
    pub(crate) visual_pre: Vec<f64>,
}

impl Activations {
    fn into_result(self) -> ForwardResult {
        ForwardResult {
            z: self.z,
            t_pred: self.text_pre.as_deref().map(relu),
            v_pred: relu(&self.visual_pre),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    /// Hidden representation.
    pub z: Vec<f64>,
    /// Text reconstruction; `None` without a text head.
    pub t_pred: Option<Vec<f64>>,
    /// Predicted visual feature.
    pub v_pred: Vec<f64>,
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// Mean squared error `(1/n) Σ (x_i - y_i)^2`.
pub fn mse(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { context: "mse", expected: x.len(), actual: y.len() });
    }
    if x.is_empty() {
        return Err(Error::Empty("mse input"));
    }
    let sum: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / x.len() as f64)
}

/// Parameter count of a model with the given shape, without allocating it.
pub fn param_count_for(vocab_dim: usize, hidden: usize, visual_dim: usize, has_text_branch: bool) -> usize {
    let encoder = hidden * vocab_dim + hidden;
    let text = if has_text_branch { vocab_dim * hidden + vocab_dim } else { 0 };
    encoder + text + visual_dim * hidden + visual_dim
}
