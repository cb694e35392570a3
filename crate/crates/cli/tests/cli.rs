use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_text2vis"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).env("RUST_LOG", "warn").output().expect("binary runs");
    out
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small synthetic dataset plus a unigram vocabulary.
fn dataset(dir: &Path, seed: &str) -> (PathBuf, PathBuf, PathBuf) {
    let data = dir.join("data");
    ok(&["gen-synth", "--out", p(&data), "--seed", seed, "--images", "120", "--visual-dim", "16"]);
    let vocab = dir.join("vocab.txt");
    ok(&[
        "build-vocab",
        "--captions",
        p(&data.join("captions.json")),
        "--mode",
        "unigram",
        "--out",
        p(&vocab),
    ]);
    (data.join("captions.json"), data.join("features.t2vf"), vocab)
}

fn train_args<'a>(
    captions: &'a Path,
    features: &'a Path,
    vocab: &'a Path,
    out: &'a Path,
    strategy: &'a str,
) -> Vec<&'a str> {
    vec![
        "train",
        "--captions",
        p(captions),
        "--features",
        p(features),
        "--vocab",
        p(vocab),
        "--strategy",
        strategy,
        "--hidden",
        "16",
        "--batch-size",
        "20",
        "--max-iters",
        "200",
        "--eval-every",
        "50",
        "--seed",
        "11",
        "--out",
        p(out),
    ]
}

#[test]
fn gen_synth_is_deterministic_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&["gen-synth", "--out", p(d), "--seed", "7", "--images", "50"]);
    }
    for f in ["captions.json", "features.t2vf", "topics.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let recs = text2vis::data::load_captions(a.join("captions.json")).unwrap();
    assert_eq!(recs.len(), 50);
    assert!(recs.iter().all(|r| r.captions.len() == 5));
    assert_eq!(text2vis::data::load_features(a.join("features.t2vf")).unwrap().len(), 50);
}

#[test]
fn build_vocab_modes() {
    let dir = tempfile::tempdir().unwrap();
    // Word pairs are drawn at random, so n-grams need a larger corpus to clear the threshold.
    let data = dir.path().join("data");
    ok(&["gen-synth", "--out", p(&data), "--seed", "1", "--images", "1000", "--visual-dim", "4"]);
    let captions = data.join("captions.json");
    let vocab = dir.path().join("vocab.txt");
    ok(&["build-vocab", "--captions", p(&captions), "--out", p(&vocab)]);
    let uni = std::fs::read_to_string(&vocab).unwrap();
    assert!(uni.lines().all(|l| !l.is_empty() && !l.contains(' ') && !l.contains('_')));
    let cfg = dir.path().join("ngram.toml");
    let ngram = dir.path().join("ngram.txt");
    std::fs::write(&cfg, "mode = \"ngram\"\n").unwrap();
    ok(&["build-vocab", "--config", p(&cfg), "--captions", p(&captions), "--out", p(&ngram)]);
    let ngram_terms = std::fs::read_to_string(&ngram).unwrap();
    assert!(ngram_terms.lines().any(|l| l.contains('_')));
    let mut sorted: Vec<&str> = ngram_terms.lines().collect();
    sorted.sort_unstable();
    assert_eq!(sorted, ngram_terms.lines().collect::<Vec<_>>());
}

#[test]
fn train_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (captions, features, vocab) = dataset(dir.path(), "2");
    let (a, b) = (dir.path().join("run_a"), dir.path().join("run_b"));
    ok(&train_args(&captions, &features, &vocab, &a, "sl"));
    ok(&train_args(&captions, &features, &vocab, &b, "sl"));
    for f in ["history.csv", "model.t2vm", "split.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let history = std::fs::read_to_string(a.join("history.csv")).unwrap();
    assert!(history.starts_with("iteration,train_loss_t,train_loss_v,val_loss_t,val_loss_v\n0,,,"));
    let config = std::fs::read_to_string(a.join("effective_config.toml")).unwrap();
    assert!(config.contains("command = \"train\"") && config.contains("seed = 11"), "{config}");
    assert!(config.contains("beta2"), "resolved optimizer settings missing: {config}");
}

#[test]
fn effective_config_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let (captions, features, vocab) = dataset(dir.path(), "3");
    let a = dir.path().join("run_a");
    ok(&train_args(&captions, &features, &vocab, &a, "aggregated"));
    let b = dir.path().join("run_b");
    ok(&["train", "--config", p(&a.join("effective_config.toml")), "--out", p(&b)]);
    assert_eq!(std::fs::read(a.join("model.t2vm")).unwrap(), std::fs::read(b.join("model.t2vm")).unwrap());
}

#[test]
fn visreg_checkpoint_has_no_text_branch() {
    let dir = tempfile::tempdir().unwrap();
    let (captions, features, vocab) = dataset(dir.path(), "4");
    let out = dir.path().join("visreg");
    ok(&train_args(&captions, &features, &vocab, &out, "visreg"));
    let bytes = std::fs::read(out.join("model.t2vm")).unwrap();
    let flags = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    assert_eq!(flags & 1, 0);
    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert!(history.lines().skip(1).all(|l| l.split(',').nth(3) == Some("")));
}

#[test]
fn eval_and_search_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (captions, features, vocab) = dataset(dir.path(), "5");
    let sl = dir.path().join("sl");
    let vr = dir.path().join("vr");
    ok(&train_args(&captions, &features, &vocab, &sl, "sl"));
    ok(&train_args(&captions, &features, &vocab, &vr, "visreg"));

    let ev = dir.path().join("eval");
    let stdout = ok(&[
        "eval",
        "--captions",
        p(&captions),
        "--features",
        p(&features),
        "--vocab",
        p(&vocab),
        "--checkpoint",
        p(&sl.join("model.t2vm")),
        "--visreg-checkpoint",
        p(&vr.join("model.t2vm")),
        "--split",
        p(&sl.join("split.json")),
        "--out",
        p(&ev),
    ]);
    let summary = std::fs::read_to_string(ev.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5, "{summary}");
    assert!(summary.lines().skip(1).all(|l| l.ends_with(",25")));
    assert!(stdout.contains("win rate text2vis over rrank"));
    assert!(ev.join("cdf_text2vis_vs_vissim.csv").exists());
    assert!(ev.join("per_query.csv").exists());

    let only = dir.path().join("eval_rrank");
    ok(&[
        "eval",
        "--captions",
        p(&captions),
        "--features",
        p(&features),
        "--methods",
        "rrank",
        "--out",
        p(&only),
    ]);
    assert_eq!(std::fs::read_to_string(only.join("summary.csv")).unwrap().lines().count(), 2);

    let search = |query: &str, k: &str| {
        ok(&[
            "search",
            "--checkpoint",
            p(&sl.join("model.t2vm")),
            "--vocab",
            p(&vocab),
            "--features",
            p(&features),
            "--query",
            query,
            "--k",
            k,
        ])
    };
    let word = std::fs::read_to_string(&vocab).unwrap().lines().next().unwrap().to_owned();
    let one = search(&word, "1");
    assert_eq!(one.lines().count(), 1);
    assert_eq!(search(&word, "5"), search(&word, "5"));
    let oov = search("zzzz qqqq", "3");
    assert!(oov.starts_with("# warning"), "{oov}");
    assert_eq!(oov.lines().count(), 4);
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = run(&["build-vocab", "--captions", p(&missing), "--out", p(&dir.path().join("v.txt"))]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error:") && err.contains("missing.json"), "{err}");

    let (captions, features, _) = dataset(dir.path(), "6");
    let out = run(&[
        "eval",
        "--captions",
        p(&captions),
        "--features",
        p(&features),
        "--methods",
        "text2vis",
        "--out",
        p(dir.path()),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("checkpoint"));

    let out = run(&[
        "train",
        "--captions",
        p(&captions),
        "--features",
        p(&features),
        "--vocab",
        p(&missing),
        "--out",
        p(dir.path()),
    ]);
    assert!(!out.status.success());
    let out = run(&[
        "train",
        "--strategy",
        "nope",
        "--captions",
        p(&captions),
        "--features",
        p(&features),
        "--vocab",
        p(&missing),
        "--out",
        p(dir.path()),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}
