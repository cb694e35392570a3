//! Text-to-visual-feature translation for image search.
//!
//! A caption is turned into a sparse binary bag-of-words vector, pushed through a
//! shallow network with one shared hidden layer and two heads, and the visual head's
//! output is used as a query against a collection of l2-normalized image features.
//!
//! The two heads are a text autoencoder (caption in, paraphrase out) and a visual
//! regressor (caption in, image feature out). Training picks one head per iteration at
//! random and updates only that head's parameters with its own Adam instance; the
//! text head works as a regularizer on the shared hidden layer.
//!
//! Module map:
//!
//! - [`textvec`]: tokenization, lexicon POS tags, POS-pattern n-grams, vocabularies, BoW vectors
//! - [`nn`]: the two-head network, MSE, analytic gradients, initialization, checkpoints
//! - [`optim`]: Adam, triple sampling, early stopping, and the training strategies
//! - [`retrieval`]: exact Euclidean search over unit vectors
//! - [`eval`]: ROUGE-L relevance, DCG@p, ranking methods and evaluation reports
//! - [`data`]: caption/feature files, splits, and the synthetic topic dataset

mod binio;
pub mod data;
pub mod error;
pub mod eval;
pub mod nn;
pub mod optim;
pub mod retrieval;
pub mod textvec;

pub use error::{Error, Result};
