/// Discounted cumulative gain over the first `p` relevances: `Σ (2^rel − 1) / log2(i + 1)`
/// with ranks `i` starting at 1. `p = 0` yields 0.
pub fn dcg(rels: &[f64], p: usize) -> f64 {
    rels.iter().take(p).enumerate().map(|(i, &rel)| (rel.exp2() - 1.0) / ((i + 2) as f64).log2()).sum()
}

/// DCG of `p` perfectly relevant results: the largest value reachable with `rel <= 1`.
pub fn dcg_upper_bound(p: usize) -> f64 {
    (1..=p).map(|i| 1.0 / ((i + 1) as f64).log2()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(dcg(&[0.0; 10], 25), 0.0);
        assert_eq!(dcg(&[1.0], 25), 1.0);
        let expected = 1.0 + (2f64.sqrt() - 1.0) / 3f64.log2();
        assert!((dcg(&[1.0, 0.5, 0.0], 25) - expected).abs() < 1e-15);
        assert!((dcg(&[1.0, 0.5, 0.0], 25) - 1.2613396608340124).abs() < 1e-12);
        assert_eq!(dcg(&[1.0, 1.0], 1), 1.0);
        assert_eq!(dcg(&[1.0], 0), 0.0);
    }

    proptest! {
        #[test]
        fn monotone_in_each_rel(
            rels in prop::collection::vec(0.0f64..=1.0, 1..30),
            i in 0usize..30,
            bump in 0.0f64..=1.0,
        ) {
            let i = i % rels.len();
            let mut up = rels.clone();
            up[i] = (up[i] + bump).min(1.0);
            prop_assert!(dcg(&up, 25) >= dcg(&rels, 25));
        }

        #[test]
        fn bounded(rels in prop::collection::vec(0.0f64..=1.0, 0..40)) {
            let d = dcg(&rels, 25);
            prop_assert!(d >= 0.0 && d <= dcg_upper_bound(25) + 1e-12);
        }
    }
}
