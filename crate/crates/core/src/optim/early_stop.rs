/// Outcome of [`early_stop_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EarlyStop {
    pub stop: bool,
    /// Index into the evaluated sequence of the first strict minimum.
    pub best_index: usize,
}

/// Decides whether training should stop given validation losses in evaluation order.
///
/// A value improves only if it is strictly below every earlier value. Training stops once
/// the number of evaluations since the best one reaches `patience`; `patience = 0` behaves
/// like 1. Returns `None` for an empty sequence.
pub fn early_stop_check(val_losses: &[f64], patience: usize) -> Option<EarlyStop> {
    let (best_index, _) =
        val_losses.iter().enumerate().fold(None, |best: Option<(usize, f64)>, (i, &x)| match best {
            Some((_, b)) if x >= b => best,
            _ => Some((i, x)),
        })?;
    let since_best = val_losses.len() - 1 - best_index;
    Some(EarlyStop { stop: since_best >= patience.max(1), best_index })
}
