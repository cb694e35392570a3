use super::{Activations, Model, ParamId, Scalar};
use crate::error::{Error, Result};
use crate::textvec::BowVector;

/// Which head a loss (and its gradient) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Text,
    Visual,
}

impl Branch {
    /// Parameter tensors the branch's loss depends on: the shared encoder and the head.
    pub fn params(self) -> [ParamId; 4] {
        match self {
            Branch::Text => [ParamId::W1, ParamId::B1, ParamId::W2, ParamId::B2],
            Branch::Visual => [ParamId::W1, ParamId::B1, ParamId::W3, ParamId::B3],
        }
    }
}

/// Regression target of one head.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    /// Binary bag of words (text head).
    Bow(&'a BowVector),
    /// Dense feature vector (visual head).
    Dense(&'a [f32]),
}

impl Target<'_> {
    fn len(&self) -> usize {
        match self {
            Target::Bow(b) => b.dim(),
            Target::Dense(v) => v.len(),
        }
    }

    /// Writes `pred - target` into `out`.
    fn residual(&self, pred: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(pred);
        match self {
            Target::Bow(b) => {
                for &i in b.indices() {
                    out[i as usize] -= 1.0;
                }
            }
            Target::Dense(v) => {
                for (o, t) in out.iter_mut().zip(v.iter()) {
                    *o -= *t as f64;
                }
            }
        }
    }
}

/// Gradient of one branch's loss w.r.t. the shared encoder (`W1`, `b1`) and that branch's
/// head. Shapes follow the model tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub branch: Branch,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: Vec<f64>,
}

impl Gradients {
    pub fn zeros_for<T: Scalar>(model: &Model<T>, branch: Branch) -> Self {
        let out_rows = match branch {
            Branch::Text => model.vocab_dim(),
            Branch::Visual => model.visual_dim(),
        };
        Self {
            branch,
            w1: vec![0.0; model.hidden() * model.vocab_dim()],
            b1: vec![0.0; model.hidden()],
            w_out: vec![0.0; out_rows * model.hidden()],
            b_out: vec![0.0; out_rows],
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        match (id, self.branch) {
            (ParamId::W1, _) => Some(&self.w1),
            (ParamId::B1, _) => Some(&self.b1),
            (ParamId::W2, Branch::Text) | (ParamId::W3, Branch::Visual) => Some(&self.w_out),
            (ParamId::B2, Branch::Text) | (ParamId::B3, Branch::Visual) => Some(&self.b_out),
            _ => None,
        }
    }

    /// Slices in [`Branch::params`] order.
    pub fn slices(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w_out, &self.b_out]
    }

    pub fn scale(&mut self, factor: f64) {
        for g in [&mut self.w1, &mut self.b1, &mut self.w_out, &mut self.b_out] {
            g.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn fill_zero(&mut self) {
        for g in [&mut self.w1, &mut self.b1, &mut self.w_out, &mut self.b_out] {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }
}

/// Reusable buffers for [`Model::accumulate_branch`].
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    residual: Vec<f64>,
    delta_out: Vec<f64>,
    delta_hidden: Vec<f64>,
}

impl<T: Scalar> Model<T> {
    /// Adds `scale * dL/dθ` for one example to `grads` and returns the unscaled loss.
    ///
    /// ReLU's derivative at exactly zero is taken as zero.
    pub(crate) fn accumulate_branch(
        &self,
        t_in: &BowVector,
        target: Target<'_>,
        grads: &mut Gradients,
        scale: f64,
        scratch: &mut Scratch,
    ) -> Result<f64> {
        self.check_input(t_in)?;
        let branch = grads.branch;
        let head = match branch {
            Branch::Text => self.text_head.as_ref().ok_or_else(|| {
                Error::InvalidArgument("text branch gradient requested on a model without a text head".into())
            })?,
            Branch::Visual => &self.visual_head,
        };
        if target.len() != head.rows {
            return Err(Error::DimensionMismatch {
                context: "regression target",
                expected: head.rows,
                actual: target.len(),
            });
        }
        let hidden = self.hidden();
        let acts: Activations = self.activations(t_in, branch == Branch::Text);
        let out_pre = match branch {
            Branch::Text => acts.text_pre.as_deref().expect("text head requested"),
            Branch::Visual => &acts.visual_pre,
        };
        let pred = super::relu(out_pre);
        target.residual(&pred, &mut scratch.residual);
        let n = head.rows as f64;
        let loss = scratch.residual.iter().map(|r| r * r).sum::<f64>() / n;

        // dL/d(out_pre) = 2/n (pred - target) * 1[out_pre > 0]
        scratch.delta_out.clear();
        scratch.delta_out.extend(scratch.residual.iter().zip(out_pre).map(|(r, &p)| {
            if p > 0.0 {
                2.0 * r / n
            } else {
                0.0
            }
        }));

        scratch.delta_hidden.clear();
        scratch.delta_hidden.resize(hidden, 0.0);
        for (r, &d) in scratch.delta_out.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grads.b_out[r] += scale * d;
            let w_row = &head.w[r * hidden..(r + 1) * hidden];
            let g_row = &mut grads.w_out[r * hidden..(r + 1) * hidden];
            for h in 0..hidden {
                g_row[h] += scale * d * acts.z[h];
                scratch.delta_hidden[h] += w_row[h].to_f64() * d;
            }
        }

        let vocab = self.vocab_dim();
        for h in 0..hidden {
            if acts.hidden_pre[h] <= 0.0 {
                continue;
            }
            let d = scale * scratch.delta_hidden[h];
            grads.b1[h] += d;
            let g_row = &mut grads.w1[h * vocab..(h + 1) * vocab];
            for &j in t_in.indices() {
                g_row[j as usize] += d;
            }
        }
        Ok(loss)
    }

    /// Loss of one head on one example without computing gradients.
    pub fn branch_loss(&self, t_in: &BowVector, target: Target<'_>, branch: Branch) -> Result<f64> {
        self.check_input(t_in)?;
        let pred = match branch {
            Branch::Text => {
                if !self.has_text_branch() {
                    return Err(Error::InvalidArgument("model has no text head".into()));
                }
                let acts = self.activations(t_in, true);
                super::relu(acts.text_pre.as_deref().expect("text head present"))
            }
            Branch::Visual => self.predict_visual(t_in)?,
        };
        if target.len() != pred.len() {
            return Err(Error::DimensionMismatch {
                context: "regression target",
                expected: pred.len(),
                actual: target.len(),
            });
        }
        let mut residual = Vec::new();
        target.residual(&pred, &mut residual);
        Ok(residual.iter().map(|r| r * r).sum::<f64>() / residual.len() as f64)
    }
}

/// Text-head loss `MSE(t', t_out)` and its gradient over `{W1, b1, W2, b2}`.
pub fn backward_text<T: Scalar>(
    model: &Model<T>,
    t_in: &BowVector,
    t_out: &BowVector,
) -> Result<(f64, Gradients)> {
    if !model.has_text_branch() {
        return Err(Error::InvalidArgument("model has no text head".into()));
    }
    let mut grads = Gradients::zeros_for(model, Branch::Text);
    let loss = model.accumulate_branch(t_in, Target::Bow(t_out), &mut grads, 1.0, &mut Scratch::default())?;
    Ok((loss, grads))
}

/// Visual-head loss `MSE(v', v)` and its gradient over `{W1, b1, W3, b3}`.
pub fn backward_visual<T: Scalar>(model: &Model<T>, t_in: &BowVector, v: &[f32]) -> Result<(f64, Gradients)> {
    let mut grads = Gradients::zeros_for(model, Branch::Visual);
    let loss = model.accumulate_branch(t_in, Target::Dense(v), &mut grads, 1.0, &mut Scratch::default())?;
    Ok((loss, grads))
}
