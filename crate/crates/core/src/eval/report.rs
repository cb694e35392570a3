use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dcg::dcg;
use super::methods::{Query, RankingMethod};
use super::relevance::{relevance, Aggregation};
use crate::data::CaptionedImage;
use crate::error::{Error, Result};
use crate::retrieval::VisualIndex;
use crate::textvec::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub p: usize,
    pub beta: f64,
    pub aggregation: Aggregation,
    /// Remove the query's own image from every candidate list.
    pub exclude_query_image: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { p: 25, beta: 1.2, aggregation: Aggregation::MaxF, exclude_query_image: true }
    }
}

impl EvalOptions {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidArgument("p must be at least 1".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Tokenized reference captions of every candidate image.
#[derive(Debug, Clone, Default)]
pub struct RelevanceCorpus {
    captions: HashMap<u64, Vec<Vec<String>>>,
}

impl RelevanceCorpus {
    pub fn from_images(images: &[CaptionedImage]) -> Self {
        Self {
            captions: images
                .iter()
                .map(|im| (im.image_id, im.captions.iter().map(|c| tokenize(c)).collect()))
                .collect(),
        }
    }

    pub fn references(&self, image_id: u64) -> Result<&[Vec<String>]> {
        self.captions.get(&image_id).map(Vec::as_slice).ok_or(Error::UnknownId(image_id))
    }
}

/// Per-query DCG values of several methods on one query set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub p: usize,
    pub methods: Vec<String>,
    pub query_ids: Vec<u64>,
    /// `dcg[m][q]`: method `m`, query `q`.
    pub dcg: Vec<Vec<f64>>,
}

impl EvalReport {
    fn method_index(&self, name: &str) -> Result<usize> {
        self.methods.iter().position(|m| m == name).ok_or_else(|| Error::UnknownName {
            kind: "method",
            name: name.to_owned(),
            known: self.methods.join(", "),
        })
    }

    pub fn per_query(&self, method: &str) -> Result<&[f64]> {
        Ok(&self.dcg[self.method_index(method)?])
    }

    pub fn mean_dcg(&self, method: &str) -> Result<f64> {
        let values = self.per_query(method)?;
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    }

    /// Fraction of queries where `a` scores higher than `b`; ties count one half.
    pub fn win_rate(&self, a: &str, b: &str) -> Result<f64> {
        let (xa, xb) = (self.per_query(a)?, self.per_query(b)?);
        let score: f64 = xa
            .iter()
            .zip(xb)
            .map(|(x, y)| match x.total_cmp(y) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            })
            .sum();
        Ok(score / xa.len() as f64)
    }

    /// Empirical CDF of per-query `dcg(a) − dcg(b)`: one point per distinct difference, with
    /// the fraction of queries at or below it.
    pub fn difference_cdf(&self, a: &str, b: &str) -> Result<Vec<(f64, f64)>> {
        let (xa, xb) = (self.per_query(a)?, self.per_query(b)?);
        let mut deltas: Vec<f64> = xa.iter().zip(xb).map(|(x, y)| x - y).collect();
        deltas.sort_by(f64::total_cmp);
        let n = deltas.len() as f64;
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (i, &d) in deltas.iter().enumerate() {
            let frac = (i + 1) as f64 / n;
            match points.last_mut() {
                Some(last) if last.0 == d => last.1 = frac,
                _ => points.push((d, frac)),
            }
        }
        Ok(points)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("method,mean_dcg,p\n");
        for m in &self.methods {
            let mean = self.mean_dcg(m).expect("method listed in report");
            let _ = writeln!(out, "{m},{mean},{}", self.p);
        }
        out
    }

    pub fn per_query_csv(&self) -> String {
        let mut out = String::from("query_id,method,dcg\n");
        for (q, id) in self.query_ids.iter().enumerate() {
            for (m, name) in self.methods.iter().enumerate() {
                let _ = writeln!(out, "{id},{name},{}", self.dcg[m][q]);
            }
        }
        out
    }

    pub fn cdf_csv(&self, a: &str, b: &str) -> Result<String> {
        let mut out = String::from("delta,cumulative_fraction\n");
        for (d, f) in self.difference_cdf(a, b)? {
            let _ = writeln!(out, "{d},{f}");
        }
        Ok(out)
    }

    /// Writes `summary.csv`, `per_query.csv` and `cdf_<a>_vs_<b>.csv` for every method pair
    /// in report order. Returns the written paths.
    pub fn write_csvs(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = vec![
            (dir.join("summary.csv"), self.summary_csv()),
            (dir.join("per_query.csv"), self.per_query_csv()),
        ];
        for (i, a) in self.methods.iter().enumerate() {
            for b in &self.methods[i + 1..] {
                files.push((dir.join(format!("cdf_{a}_vs_{b}.csv")), self.cdf_csv(a, b)?));
            }
        }
        let mut written = Vec::with_capacity(files.len());
        for (path, text) in files {
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Ranks the index for every query with every method and scores the top `p` by ROUGE-L
/// relevance to the query caption.
pub fn evaluate(
    methods: &[&dyn RankingMethod],
    queries: &[Query],
    index: &VisualIndex,
    corpus: &RelevanceCorpus,
    options: &EvalOptions,
) -> Result<EvalReport> {
    options.validate()?;
    if methods.is_empty() {
        return Err(Error::Empty("method list"));
    }
    if queries.is_empty() {
        return Err(Error::Empty("query set"));
    }
    let mut names: Vec<String> = Vec::with_capacity(methods.len());
    for m in methods {
        if names.iter().any(|n| n == m.name()) {
            return Err(Error::InvalidArgument(format!("method {} listed twice", m.name())));
        }
        names.push(m.name().to_owned());
    }
    let per_query: Vec<Vec<f64>> = queries
        .par_iter()
        .map(|q| {
            corpus.references(q.image_id)?;
            let tokens = tokenize(&q.caption);
            let exclude = options.exclude_query_image.then_some(q.image_id);
            methods
                .iter()
                .map(|m| {
                    let list = m.rank(q, index, options.p, exclude)?;
                    let rels = list
                        .entries
                        .iter()
                        .map(|e| {
                            relevance(
                                &tokens,
                                corpus.references(e.image_id)?,
                                options.beta,
                                options.aggregation,
                            )
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    Ok(dcg(&rels, options.p))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let dcg = (0..methods.len()).map(|m| per_query.iter().map(|row| row[m]).collect()).collect();
    Ok(EvalReport {
        p: options.p,
        methods: names,
        query_ids: queries.iter().map(|q| q.image_id).collect(),
        dcg,
    })
}
