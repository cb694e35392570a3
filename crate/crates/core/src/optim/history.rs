use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HISTORY_HEADER: &str = "iteration,train_loss_t,train_loss_v,val_loss_t,val_loss_v";

/// Losses at one evaluation point. Training losses are means over the batches since the
/// previous evaluation that used that branch; absent when none did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub iteration: u64,
    pub train_loss_t: Option<f64>,
    pub train_loss_v: Option<f64>,
    pub val_loss_t: Option<f64>,
    pub val_loss_v: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    records: Vec<TrainRecord>,
}

impl TrainHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; iterations must strictly increase and losses be finite and `>= 0`.
    pub fn push(&mut self, record: TrainRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.iteration <= last.iteration {
                return Err(Error::InvalidArgument(format!(
                    "history iteration {} does not follow {}",
                    record.iteration, last.iteration
                )));
            }
        }
        let values = [record.train_loss_t, record.train_loss_v, record.val_loss_t, Some(record.val_loss_v)];
        if values.iter().flatten().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::NonFinite(format!("loss record at iteration {}", record.iteration)));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[TrainRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn val_losses_v(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.val_loss_v).collect()
    }

    pub fn min_val_loss_v(&self) -> Option<f64> {
        self.records.iter().map(|r| r.val_loss_v).min_by(f64::total_cmp)
    }

    pub fn min_val_loss_t(&self) -> Option<f64> {
        self.records.iter().filter_map(|r| r.val_loss_t).min_by(f64::total_cmp)
    }

    /// `(final value − minimum) / minimum` of the validation visual loss: how far the
    /// curve has climbed back above its best point by the end.
    pub fn final_rise_v(&self) -> Option<f64> {
        let min = self.min_val_loss_v()?;
        let last = self.records.last()?.val_loss_v;
        Some(if min > 0.0 { (last - min) / min } else { 0.0 })
    }

    /// Largest relative rise of the validation visual loss above its running minimum at any
    /// later evaluation.
    pub fn max_rise_v(&self) -> Option<f64> {
        let mut best = f64::INFINITY;
        let mut rise: Option<f64> = None;
        for r in &self.records {
            best = best.min(r.val_loss_v);
            let here = if best > 0.0 { (r.val_loss_v - best) / best } else { 0.0 };
            rise = Some(rise.map_or(here, |x| x.max(here)));
        }
        rise
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HISTORY_HEADER);
        out.push('\n');
        let cell = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.iteration,
                cell(r.train_loss_t),
                cell(r.train_loss_v),
                cell(r.val_loss_t),
                r.val_loss_v
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let origin = Path::new("<history csv>");
        let mut lines = text.lines();
        if lines.next() != Some(HISTORY_HEADER) {
            return Err(Error::format(origin, "missing or wrong header"));
        }
        let mut history = Self::new();
        for (n, line) in lines.enumerate() {
            let bad = |what: &str| Error::format(origin, format!("line {}: {what}", n + 2));
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 5 {
                return Err(bad("expected 5 cells"));
            }
            let opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad("bad number"))
                }
            };
            history.push(TrainRecord {
                iteration: cells[0].parse().map_err(|_| bad("bad iteration"))?,
                train_loss_t: opt(cells[1])?,
                train_loss_v: opt(cells[2])?,
                val_loss_t: opt(cells[3])?,
                val_loss_v: opt(cells[4])?.ok_or_else(|| bad("val_loss_v is required"))?,
            })?;
        }
        Ok(history)
    }
}
