use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::early_stop::early_stop_check;
use super::history::{TrainHistory, TrainRecord};
use super::sampling::{BatchSampler, EncodedImage, TrainTriple};
use crate::error::{Error, Result};
use crate::nn::{mse, Branch, Gradients, Model, ParamId, Scalar, Scratch, Target};
use crate::textvec::BowVector;

/// Examples per gradient work unit. Partial gradients are summed in chunk order, so results
/// do not depend on the thread count.
const GRAD_CHUNK: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_iterations: u64,
    pub eval_every: u64,
    /// `None` disables early stopping.
    pub patience: Option<usize>,
    pub sl_prob_visual: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            max_iterations: 300_000,
            eval_every: 500,
            patience: Some(10),
            sl_prob_visual: 0.5,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidArgument("eval_every must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.sl_prob_visual) {
            return Err(Error::InvalidArgument(format!(
                "sl_prob_visual must lie in [0, 1], got {}",
                self.sl_prob_visual
            )));
        }
        self.adam.validate()
    }
}

/// Result of a training run. `model` is the checkpoint with the lowest validation visual loss.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T: Scalar = f32> {
    pub model: Model<T>,
    pub history: TrainHistory,
    pub best_iteration: u64,
    pub stopped_early: bool,
    pub iterations: u64,
    /// Iterations that updated the text head / the visual head.
    pub text_updates: u64,
    pub visual_updates: u64,
    /// Time spent in gradient computation and parameter updates, excluding validation.
    pub step_time: Duration,
}

impl<T: Scalar> TrainOutcome<T> {
    pub fn mean_step_time(&self) -> Duration {
        if self.iterations == 0 {
            Duration::ZERO
        } else {
            self.step_time.div_f64(self.iterations as f64)
        }
    }
}

/// Validation losses: `L_v` averaged over every (image, caption) input, `L_t` over every
/// ordered caption pair of each image. This is the exact expectation over triples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationLoss {
    pub text: Option<f64>,
    pub visual: f64,
}

fn bow_mse(pred: &[f64], target: &BowVector) -> f64 {
    let mut sum: f64 = pred.iter().map(|p| p * p).sum();
    for &i in target.indices() {
        let p = pred[i as usize];
        sum += (p - 1.0) * (p - 1.0) - p * p;
    }
    sum / pred.len() as f64
}

pub fn validation_loss<T: Scalar>(model: &Model<T>, images: &[EncodedImage]) -> Result<ValidationLoss> {
    if images.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let per_image: Vec<(f64, f64, usize, usize)> = images
        .par_iter()
        .map(|im| {
            let (mut lv, mut lt) = (0.0, 0.0);
            for t_in in &im.captions {
                let out = model.forward(t_in)?;
                lv += mse(&out.v_pred, &im.feature.iter().map(|&x| x as f64).collect::<Vec<_>>())?;
                if let Some(t_pred) = &out.t_pred {
                    lt += im.captions.iter().map(|t_out| bow_mse(t_pred, t_out)).sum::<f64>();
                }
            }
            let n = im.captions.len();
            Ok((lv, lt, n, n * n))
        })
        .collect::<Result<_>>()?;
    let (mut lv, mut lt, mut nv, mut nt) = (0.0, 0.0, 0usize, 0usize);
    for (a, b, c, d) in per_image {
        lv += a;
        lt += b;
        nv += c;
        nt += d;
    }
    Ok(ValidationLoss { text: model.has_text_branch().then(|| lt / nt as f64), visual: lv / nv as f64 })
}

/// Mean loss and mean gradient of one branch over a batch.
pub fn batch_gradient<T: Scalar>(
    model: &Model<T>,
    batch: &[TrainTriple<'_>],
    branch: Branch,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let scale = 1.0 / batch.len() as f64;
    let parts: Vec<(f64, Gradients)> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grads = Gradients::zeros_for(model, branch);
            let mut scratch = Scratch::default();
            let mut loss = 0.0;
            for t in chunk {
                let target = match branch {
                    Branch::Text => Target::Bow(t.t_out),
                    Branch::Visual => Target::Dense(t.v),
                };
                loss += model.accumulate_branch(t.t_in, target, &mut grads, scale, &mut scratch)?;
            }
            Ok((loss, grads))
        })
        .collect::<Result<_>>()?;
    let mut parts = parts.into_iter();
    let (mut loss, mut total) = parts.next().expect("non-empty batch");
    for (l, g) in parts {
        loss += l;
        for (dst, src) in [
            (&mut total.w1, &g.w1),
            (&mut total.b1, &g.b1),
            (&mut total.w_out, &g.w_out),
            (&mut total.b_out, &g.b_out),
        ] {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
        }
    }
    Ok((loss * scale, total))
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct StepLosses {
    pub(crate) text: Option<f64>,
    pub(crate) visual: Option<f64>,
}

/// One parameter update per call.
pub(crate) trait Stepper<T: Scalar> {
    fn step(
        &mut self,
        model: &mut Model<T>,
        batch: &[TrainTriple<'_>],
        rng: &mut ChaCha8Rng,
    ) -> Result<StepLosses>;
}

impl<T: Scalar, S: Stepper<T> + ?Sized> Stepper<T> for &mut S {
    fn step(
        &mut self,
        model: &mut Model<T>,
        batch: &[TrainTriple<'_>],
        rng: &mut ChaCha8Rng,
    ) -> Result<StepLosses> {
        (**self).step(model, batch, rng)
    }
}

fn adam_for<T: Scalar>(model: &Model<T>, ids: &[ParamId], config: AdamConfig) -> Result<Adam<T>> {
    let lens: Vec<usize> = ids
        .iter()
        .map(|&id| model.param(id).map(<[T]>::len))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidArgument("model is missing a tensor the optimizer needs".into()))?;
    Adam::new(config, &lens)
}

fn apply<T: Scalar>(adam: &mut Adam<T>, model: &mut Model<T>, grads: &Gradients) -> Result<()> {
    let mut params = model.params_mut(&grads.branch.params());
    adam.step(&mut params, &grads.slices())
}

/// Stochastic Loss: one coin per batch picks a branch; each branch owns its optimizer.
pub(crate) struct SlStepper<T: Scalar> {
    pub(crate) prob_visual: f64,
    pub(crate) text_adam: Adam<T>,
    pub(crate) visual_adam: Adam<T>,
}

impl<T: Scalar> SlStepper<T> {
    pub(crate) fn new(model: &Model<T>, config: &TrainConfig) -> Result<Self> {
        if !model.has_text_branch() {
            return Err(Error::InvalidArgument("SL training needs a model with a text branch".into()));
        }
        Ok(Self {
            prob_visual: config.sl_prob_visual,
            text_adam: adam_for(model, &Branch::Text.params(), config.adam)?,
            visual_adam: adam_for(model, &Branch::Visual.params(), config.adam)?,
        })
    }
}

impl<T: Scalar> Stepper<T> for SlStepper<T> {
    fn step(
        &mut self,
        model: &mut Model<T>,
        batch: &[TrainTriple<'_>],
        rng: &mut ChaCha8Rng,
    ) -> Result<StepLosses> {
        if rng.random_bool(self.prob_visual) {
            let (loss, grads) = batch_gradient(model, batch, Branch::Visual)?;
            apply(&mut self.visual_adam, model, &grads)?;
            Ok(StepLosses { text: None, visual: Some(loss) })
        } else {
            let (loss, grads) = batch_gradient(model, batch, Branch::Text)?;
            apply(&mut self.text_adam, model, &grads)?;
            Ok(StepLosses { text: Some(loss), visual: None })
        }
    }
}

/// `L_v + λ L_t` with a single optimizer over every tensor.
pub(crate) struct AggregatedStepper<T: Scalar> {
    lambda: f64,
    adam: Adam<T>,
}

impl<T: Scalar> AggregatedStepper<T> {
    pub(crate) fn new(model: &Model<T>, config: &TrainConfig, lambda: f64) -> Result<Self> {
        if !model.has_text_branch() {
            return Err(Error::InvalidArgument(
                "aggregated training needs a model with a text branch".into(),
            ));
        }
        check_lambda(lambda)?;
        Ok(Self { lambda, adam: adam_for(model, &ParamId::ALL, config.adam)? })
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")))
    }
}

impl<T: Scalar> Stepper<T> for AggregatedStepper<T> {
    fn step(
        &mut self,
        model: &mut Model<T>,
        batch: &[TrainTriple<'_>],
        _rng: &mut ChaCha8Rng,
    ) -> Result<StepLosses> {
        let (loss_v, gv) = batch_gradient(model, batch, Branch::Visual)?;
        let (loss_t, gt) = batch_gradient(model, batch, Branch::Text)?;
        let lambda = self.lambda;
        let combine =
            |v: &[f64], t: &[f64]| -> Vec<f64> { v.iter().zip(t).map(|(a, b)| a + lambda * b).collect() };
        let w1 = combine(&gv.w1, &gt.w1);
        let b1 = combine(&gv.b1, &gt.b1);
        let w2: Vec<f64> = gt.w_out.iter().map(|g| lambda * g).collect();
        let b2: Vec<f64> = gt.b_out.iter().map(|g| lambda * g).collect();
        let mut params = model.params_mut(&ParamId::ALL);
        self.adam.step(&mut params, &[&w1, &b1, &w2, &b2, &gv.w_out, &gv.b_out])?;
        Ok(StepLosses { text: Some(loss_t), visual: Some(loss_v) })
    }
}

/// Visual regression only (VisReg); the text head, if present, is never touched.
pub(crate) struct VisualStepper<T: Scalar> {
    adam: Adam<T>,
}

impl<T: Scalar> VisualStepper<T> {
    pub(crate) fn new(model: &Model<T>, config: &TrainConfig) -> Result<Self> {
        Ok(Self { adam: adam_for(model, &Branch::Visual.params(), config.adam)? })
    }
}

impl<T: Scalar> Stepper<T> for VisualStepper<T> {
    fn step(
        &mut self,
        model: &mut Model<T>,
        batch: &[TrainTriple<'_>],
        _rng: &mut ChaCha8Rng,
    ) -> Result<StepLosses> {
        let (loss, grads) = batch_gradient(model, batch, Branch::Visual)?;
        apply(&mut self.adam, model, &grads)?;
        Ok(StepLosses { text: None, visual: Some(loss) })
    }
}

fn check_data<T: Scalar>(model: &Model<T>, sets: [(&'static str, &[EncodedImage]); 2]) -> Result<()> {
    for (name, set) in sets {
        if set.is_empty() {
            return Err(Error::Empty(name));
        }
        for im in set {
            if im.feature.len() != model.visual_dim() {
                return Err(Error::DimensionMismatch {
                    context: "visual feature vs model output",
                    expected: model.visual_dim(),
                    actual: im.feature.len(),
                });
            }
            if im.captions.is_empty() {
                return Err(Error::InvalidArgument(format!("image {} has no captions", im.image_id)));
            }
            if let Some(c) = im.captions.iter().find(|c| c.dim() != model.vocab_dim()) {
                return Err(Error::DimensionMismatch {
                    context: "caption vector vs model vocabulary",
                    expected: model.vocab_dim(),
                    actual: c.dim(),
                });
            }
        }
    }
    Ok(())
}

#[derive(Default)]
struct Running {
    sum: f64,
    count: u64,
}

impl Running {
    fn add(&mut self, x: Option<f64>) {
        if let Some(x) = x {
            self.sum += x;
            self.count += 1;
        }
    }

    fn take(&mut self) -> Option<f64> {
        let mean = (self.count > 0).then(|| self.sum / self.count as f64);
        *self = Self::default();
        mean
    }
}

pub(crate) fn run_training<T: Scalar, S: Stepper<T>>(
    mut model: Model<T>,
    train: &[EncodedImage],
    val: &[EncodedImage],
    config: &TrainConfig,
    mut stepper: S,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    check_data(&model, [("training set", train), ("validation set", val)])?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sampler = BatchSampler::new(train.len(), &mut rng)?;

    let mut history = TrainHistory::new();
    let first = validation_loss(&model, val)?;
    if !first.visual.is_finite() || first.text.is_some_and(|t| !t.is_finite()) {
        return Err(Error::Diverged {
            iteration: 0,
            detail: format!("initial validation loss is not finite ({first:?})"),
        });
    }
    history.push(TrainRecord {
        iteration: 0,
        train_loss_t: None,
        train_loss_v: None,
        val_loss_t: first.text,
        val_loss_v: first.visual,
    })?;
    let mut best_model = model.clone();
    let mut best = (0u64, first.visual);

    let (mut run_t, mut run_v) = (Running::default(), Running::default());
    let (mut text_updates, mut visual_updates) = (0u64, 0u64);
    let mut step_time = Duration::ZERO;
    let mut stopped_early = false;
    let mut iterations = 0;

    for it in 1..=config.max_iterations {
        let batch = sampler.next_batch(train, config.batch_size, &mut rng)?;
        let started = Instant::now();
        let losses = stepper.step(&mut model, &batch, &mut rng).map_err(|e| match e {
            Error::NonFinite(detail) => Error::Diverged { iteration: it, detail },
            e => e,
        })?;
        step_time += started.elapsed();
        iterations = it;

        for (loss, count, name) in
            [(losses.text, &mut text_updates, "text"), (losses.visual, &mut visual_updates, "visual")]
        {
            if let Some(l) = loss {
                if !l.is_finite() {
                    return Err(Error::Diverged {
                        iteration: it,
                        detail: format!("{name} training loss is {l}"),
                    });
                }
                *count += 1;
            }
        }
        run_t.add(losses.text);
        run_v.add(losses.visual);

        if it % config.eval_every != 0 && it != config.max_iterations {
            continue;
        }
        let vl = validation_loss(&model, val)?;
        if !vl.visual.is_finite() || vl.text.is_some_and(|t| !t.is_finite()) {
            return Err(Error::Diverged {
                iteration: it,
                detail: format!("validation loss is not finite ({vl:?})"),
            });
        }
        history.push(TrainRecord {
            iteration: it,
            train_loss_t: run_t.take(),
            train_loss_v: run_v.take(),
            val_loss_t: vl.text,
            val_loss_v: vl.visual,
        })?;
        log::info!(
            "iteration {it}: val_loss_v {:.6} val_loss_t {}",
            vl.visual,
            vl.text.map_or("-".to_string(), |t| format!("{t:.6}"))
        );
        if vl.visual < best.1 {
            best = (it, vl.visual);
            best_model = model.clone();
        }
        if let Some(patience) = config.patience {
            let check = early_stop_check(&history.val_losses_v(), patience).expect("history is non-empty");
            if check.stop {
                log::info!("early stop at iteration {it}, best iteration {}", best.0);
                stopped_early = true;
                break;
            }
        }
    }

    Ok(TrainOutcome {
        model: best_model,
        history,
        best_iteration: best.0,
        stopped_early,
        iterations,
        text_updates,
        visual_updates,
        step_time,
    })
}

/// Stochastic Loss training of a two-branch model.
pub fn sl_train<T: Scalar>(
    model: Model<T>,
    train: &[EncodedImage],
    val: &[EncodedImage],
    config: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    let stepper = SlStepper::new(&model, config)?;
    run_training(model, train, val, config, stepper)
}

/// Single-optimizer training of `L_v + λ L_t`.
pub fn aggregated_train<T: Scalar>(
    model: Model<T>,
    train: &[EncodedImage],
    val: &[EncodedImage],
    config: &TrainConfig,
    lambda: f64,
) -> Result<TrainOutcome<T>> {
    let stepper = AggregatedStepper::new(&model, config, lambda)?;
    run_training(model, train, val, config, stepper)
}

/// Visual-loss-only training. Works on models with or without a text head.
pub fn visual_train<T: Scalar>(
    model: Model<T>,
    train: &[EncodedImage],
    val: &[EncodedImage],
    config: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    let stepper = VisualStepper::new(&model, config)?;
    run_training(model, train, val, config, stepper)
}
