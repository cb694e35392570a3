//! Retrieval evaluation: ROUGE-L relevance, DCG@p, ranking methods (trained models and the
//! RRank / VisSim baselines) and the comparison report.

mod dcg;
mod methods;
mod relevance;
mod report;

pub use dcg::{dcg, dcg_upper_bound};
pub use methods::{
    queries_from, rank_prediction, rrank_ranking, MethodContext, MethodRegistry, ModelRanker, Query, RRank,
    RankingMethod, VisSim,
};
pub use relevance::{lcs_length, relevance, rouge_l, Aggregation};
pub use report::{evaluate, EvalOptions, EvalReport, RelevanceCorpus};
