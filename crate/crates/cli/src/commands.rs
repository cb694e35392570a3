use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use text2vis::data::{
    assemble, disassemble, generate_synthetic, load_captions, load_features, save_captions, save_features,
    save_ground_truth, split_dataset, CaptionedImage, SplitFractions, SplitIds, SynthConfig,
};
use text2vis::eval::{
    evaluate, queries_from, rank_prediction, Aggregation, EvalOptions, MethodContext, MethodRegistry,
    RankingMethod, RelevanceCorpus,
};
use text2vis::nn::{init_model, load_checkpoint, save_checkpoint, Model};
use text2vis::optim::{encode_images, AdamConfig, StrategyParams, StrategyRegistry, TrainConfig};
use text2vis::retrieval::VisualIndex;
use text2vis::textvec::{caption_terms, Lexicon, TextEncoder, VocabConfig, VocabMode, Vocabulary};

use crate::config::write_effective_config;

#[derive(Debug, Parser)]
#[command(
    name = "text2vis",
    version,
    about = "Map captions into a visual feature space and evaluate text-to-image retrieval",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a vocabulary file from a caption document.
    BuildVocab(BuildVocabArgs),
    /// Train a model and write its best checkpoint and loss history.
    Train(TrainArgs),
    /// Compare ranking methods by mean DCG on a query set.
    Eval(EvalArgs),
    /// Rank images for a free-text query.
    Search(SearchArgs),
    /// Generate a synthetic captioned-image dataset.
    GenSynth(GenSynthArgs),
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct BuildVocabArgs {
    #[arg(long)]
    pub captions: PathBuf,
    #[arg(long, default_value = "unigram")]
    pub mode: VocabMode,
    /// Output vocabulary file (one term per line).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    #[arg(long)]
    pub captions: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// One of the registered strategies: sl, aggregated, visreg.
    #[arg(long, default_value = "sl")]
    pub strategy: String,
    /// Text-loss weight of the aggregated strategy.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sl_prob_visual: f64,
    #[arg(long, default_value_t = 100)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 300_000)]
    pub max_iters: u64,
    #[arg(long, default_value_t = 500)]
    pub eval_every: u64,
    /// Evaluations without improvement of the validation visual loss before stopping.
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    /// Train for the full iteration budget regardless of validation loss.
    #[arg(long)]
    pub no_early_stop: bool,
    #[arg(long, default_value_t = 1024)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Seed for initialization, batch sampling and branch selection.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed of the 80/10/10 train/validation/test split.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[arg(long)]
    pub captions: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Needed by the model-based methods.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Two-branch model used by the `text2vis` method.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Visual-only model used by the `visreg` method.
    #[arg(long)]
    pub visreg_checkpoint: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "text2vis,visreg,vissim,rrank")]
    pub methods: Vec<String>,
    /// Split file written by `train`; queries and candidates come from its test part.
    /// Without it every image is used.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long, default_value_t = 25)]
    pub p: usize,
    #[arg(long, default_value_t = 1.2)]
    pub beta: f64,
    /// How ROUGE-L scores over an image's captions combine: max-f or max-precision-recall.
    #[arg(long, default_value = "max-f")]
    pub aggregation: String,
    /// Keep each query's own image among the candidates.
    #[arg(long)]
    pub include_query_image: bool,
    /// Seed of the random-ranking baseline.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SearchArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct GenSynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub images: usize,
    #[arg(long, default_value_t = 10)]
    pub topics: usize,
    #[arg(long, default_value_t = 200)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 64)]
    pub visual_dim: usize,
    #[arg(long, default_value_t = 5)]
    pub captions_per_image: usize,
    #[arg(long, default_value_t = 0.5)]
    pub noise_sigma: f64,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Command-line values plus the library configuration they resolve to, including settings
/// that have no flag.
#[derive(Serialize)]
struct Resolved<'a, A: Serialize, R: Serialize> {
    #[serde(flatten)]
    args: &'a A,
    resolved: R,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildVocab(a) => build_vocab(&a),
        Command::Train(a) => train(&a),
        Command::Eval(a) => eval(&a),
        Command::Search(a) => search(&a),
        Command::GenSynth(a) => gen_synth(&a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn load_dataset(captions: &Path, features: &Path) -> Result<Vec<CaptionedImage>> {
    let records = load_captions(captions)?;
    let features = load_features(features)?;
    Ok(assemble(records, &features)?)
}

fn load_encoder(vocab: &Path) -> Result<TextEncoder> {
    Ok(TextEncoder::with_bundled_lexicon(Vocabulary::load(vocab)?))
}

fn build_vocab(a: &BuildVocabArgs) -> Result<()> {
    let records = load_captions(&a.captions)?;
    let lexicon = Lexicon::bundled();
    let captions: Vec<Vec<String>> =
        records.iter().flat_map(|r| r.captions.iter().map(|c| caption_terms(c, a.mode, lexicon))).collect();
    let vocab = Vocabulary::build(&captions, VocabConfig::for_mode(a.mode))?;
    vocab.save(&a.out)?;
    println!("vocabulary: {} terms ({} mode) written to {}", vocab.len(), a.mode, a.out.display());
    Ok(())
}

fn train(a: &TrainArgs) -> Result<()> {
    let registry = StrategyRegistry::builtin();
    let strategy = registry.create(&a.strategy, &StrategyParams { lambda: a.lambda })?;
    let config = TrainConfig {
        batch_size: a.batch_size,
        max_iterations: a.max_iters,
        eval_every: a.eval_every,
        patience: (!a.no_early_stop).then_some(a.patience),
        sl_prob_visual: a.sl_prob_visual,
        seed: a.seed,
        adam: AdamConfig { alpha: a.learning_rate, ..AdamConfig::default() },
    };
    config.validate()?;

    let images = load_dataset(&a.captions, &a.features)?;
    let encoder = load_encoder(&a.vocab)?;
    let split = split_dataset(images, SplitFractions::default(), a.split_seed)?;
    ensure!(
        !split.train.is_empty() && !split.validation.is_empty(),
        "dataset too small for a train/validation split"
    );
    let train_set = encode_images(&split.train, &encoder)?;
    let val_set = encode_images(&split.validation, &encoder)?;
    let visual_dim = train_set[0].feature.len();
    let model = init_model(encoder.vocab().len(), a.hidden, visual_dim, strategy.uses_text_branch(), a.seed)?;
    log::info!(
        "training {} on {} images ({} validation), {} parameters",
        strategy.name(),
        train_set.len(),
        val_set.len(),
        model.param_count()
    );

    create_dir(&a.out)?;
    write_effective_config(&a.out, "train", &Resolved { args: a, resolved: config })?;
    let outcome = strategy.train(model, &train_set, &val_set, &config)?;
    save_checkpoint(&outcome.model, a.out.join("model.t2vm"))?;
    outcome.history.write_csv(a.out.join("history.csv"))?;
    SplitIds::of(&split).save(a.out.join("split.json"))?;
    println!(
        "{}: {} iterations, best iteration {}, min val_loss_v {}{}",
        strategy.name(),
        outcome.iterations,
        outcome.best_iteration,
        outcome.history.min_val_loss_v().unwrap_or(f64::NAN),
        if outcome.stopped_early { " (early stop)" } else { "" }
    );
    Ok(())
}

fn load_model(path: &Option<PathBuf>) -> Result<Option<Arc<Model>>> {
    path.as_ref().map(|p| Ok(Arc::new(load_checkpoint(p)?))).transpose()
}

fn eval(a: &EvalArgs) -> Result<()> {
    let options = EvalOptions {
        p: a.p,
        beta: a.beta,
        aggregation: a.aggregation.parse::<Aggregation>()?,
        exclude_query_image: !a.include_query_image,
    };
    options.validate()?;
    let mut images = load_dataset(&a.captions, &a.features)?;
    if let Some(split) = &a.split {
        let test: std::collections::HashSet<u64> = SplitIds::load(split)?.test.into_iter().collect();
        images.retain(|im| test.contains(&im.image_id));
        ensure!(!images.is_empty(), "no image of the split's test part is in the dataset");
    }
    let ctx = MethodContext {
        encoder: a.vocab.as_ref().map(|v| load_encoder(v).map(Arc::new)).transpose()?,
        text2vis: load_model(&a.checkpoint)?,
        visreg: load_model(&a.visreg_checkpoint)?,
        seed: a.seed,
    };
    let registry = MethodRegistry::builtin();
    let methods: Vec<Box<dyn RankingMethod>> =
        a.methods.iter().map(|m| registry.create(m.trim(), &ctx)).collect::<text2vis::Result<_>>()?;
    let method_refs: Vec<&dyn RankingMethod> = methods.iter().map(|m| m.as_ref()).collect();

    let (_, features) = disassemble(&images)?;
    let rows: Vec<&[f32]> = (0..features.len()).map(|i| features.row(i)).collect();
    let index = VisualIndex::build(features.ids().to_vec(), &rows)?;
    let queries = queries_from(&images)?;
    let corpus = RelevanceCorpus::from_images(&images);
    let report = evaluate(&method_refs, &queries, &index, &corpus, &options)?;

    create_dir(&a.out)?;
    write_effective_config(&a.out, "eval", &Resolved { args: a, resolved: options })?;
    report.write_csvs(&a.out)?;
    print!("{}", report.summary_csv());
    for (i, x) in report.methods.iter().enumerate() {
        for y in &report.methods[i + 1..] {
            println!("win rate {x} over {y}: {:.4}", report.win_rate(x, y)?);
        }
    }
    Ok(())
}

fn search(a: &SearchArgs) -> Result<()> {
    ensure!(a.k >= 1, "--k must be at least 1");
    let model: Model = load_checkpoint(&a.checkpoint)?;
    let encoder = load_encoder(&a.vocab)?;
    ensure!(
        model.vocab_dim() == encoder.vocab().len(),
        "checkpoint expects {} input terms but the vocabulary has {}",
        model.vocab_dim(),
        encoder.vocab().len()
    );
    let features = load_features(&a.features)?;
    let rows: Vec<&[f32]> = (0..features.len()).map(|i| features.row(i)).collect();
    let index = VisualIndex::build(features.ids().to_vec(), &rows)?;

    let bow = encoder.encode(&a.query);
    if bow.nnz() == 0 {
        log::warn!("every query term is out of vocabulary; ranking uses the bias-only representation");
        println!("# warning: query is fully out of vocabulary, ranking from the bias-only representation");
    }
    let prediction = model.predict_visual(&bow)?;
    let list = rank_prediction(&index, &prediction, a.k, None)?;
    for (rank, e) in list.entries.iter().enumerate() {
        println!("{}\t{}\t{:.6}", rank + 1, e.image_id, e.distance);
    }
    Ok(())
}

fn gen_synth(a: &GenSynthArgs) -> Result<()> {
    let config = SynthConfig {
        num_topics: a.topics,
        vocab_size: a.vocab_size,
        visual_dim: a.visual_dim,
        images: a.images,
        captions_per_image: a.captions_per_image,
        noise_sigma: a.noise_sigma,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let ds = generate_synthetic(&config)?;
    create_dir(&a.out)?;
    let (records, features) = disassemble(&ds.images)?;
    save_captions(a.out.join("captions.json"), &records)?;
    save_features(a.out.join("features.t2vf"), &features)?;
    save_ground_truth(a.out.join("topics.json"), &ds.topics)?;
    write_effective_config(&a.out, "gen-synth", &Resolved { args: a, resolved: &config })?;
    println!("{} images written to {}", ds.images.len(), a.out.display());
    Ok(())
}
