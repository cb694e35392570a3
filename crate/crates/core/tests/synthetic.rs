use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use text2vis::data::{generate_synthetic, SynthConfig, SynthDataset};
use text2vis::eval::rouge_l;

fn distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) as f64).powi(2)).sum::<f64>().sqrt()
}

fn disjoint(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|t| !b.contains(t))
}

fn dataset(seed: u64) -> SynthDataset {
    generate_synthetic(&SynthConfig { seed, ..SynthConfig::default() }).unwrap()
}

#[test]
fn same_topic_features_are_closer_by_three_noise_sigmas() {
    for seed in 0..3 {
        let ds = dataset(seed);
        let sigma = SynthConfig::default().noise_sigma;
        let (mut same, mut n_same, mut across, mut n_across) = (0.0, 0usize, 0.0, 0usize);
        for i in 0..ds.images.len() {
            for j in i + 1..ds.images.len() {
                let (a, b) = (&ds.topics[i].topics, &ds.topics[j].topics);
                let d = distance(&ds.images[i].feature, &ds.images[j].feature);
                if a == b {
                    same += d;
                    n_same += 1;
                } else if disjoint(a, b) {
                    across += d;
                    n_across += 1;
                }
            }
        }
        let margin = across / n_across as f64 - same / n_same as f64;
        assert!(margin >= 3.0 * sigma, "seed {seed}: margin {margin:.3} below {}", 3.0 * sigma);
    }
}

/// Mean ROUGE-L over every caption pair of two images, estimating the expected score.
fn mean_rouge(ds: &[Vec<Vec<&str>>], i: usize, j: usize) -> f64 {
    let mut total = 0.0;
    for a in &ds[i] {
        for b in &ds[j] {
            total += rouge_l(a, b, 1.2);
        }
    }
    total / (ds[i].len() * ds[j].len()) as f64
}

#[test]
fn same_topic_captions_score_higher_rouge() {
    let ds = dataset(0);
    let tokens: Vec<Vec<Vec<&str>>> =
        ds.images.iter().map(|im| im.captions.iter().map(|c| c.split(' ').collect()).collect()).collect();
    let n = ds.images.len();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut ordered, mut sampled) = (0, 0);
    while sampled < 500 {
        let (i, j, k) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
        let anchor = &ds.topics[i].topics;
        if i == j || *anchor != ds.topics[j].topics || !disjoint(anchor, &ds.topics[k].topics) {
            continue;
        }
        sampled += 1;
        ordered += usize::from(mean_rouge(&tokens, i, j) > mean_rouge(&tokens, i, k));
    }
    assert!(ordered * 100 >= sampled * 95, "{ordered}/{sampled} ordered");
}

#[test]
fn captions_use_topic_words() {
    let ds = dataset(2);
    for (image, truth) in ds.images.iter().zip(&ds.topics).take(100) {
        let topical: Vec<&String> = truth.topics.iter().flat_map(|&t| &ds.topic_words[t]).collect();
        let words: Vec<&str> = image.captions.iter().flat_map(|c| c.split(' ')).collect();
        let hits = words.iter().filter(|w| topical.iter().any(|t| t == *w)).count();
        assert!(hits * 2 > words.len(), "image {}: {hits}/{} topical words", image.image_id, words.len());
    }
}
