use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of the longest common subsequence (two-row dynamic program).
pub fn lcs_length<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn f_measure(recall: f64, precision: f64, beta: f64) -> f64 {
    if recall == 0.0 || precision == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    (1.0 + b2) * recall * precision / (recall + b2 * precision)
}

/// ROUGE-L F-measure of `candidate` against `reference`, with recall weighted by `beta`.
pub fn rouge_l<S: PartialEq>(candidate: &[S], reference: &[S], beta: f64) -> f64 {
    let lcs = lcs_length(candidate, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    f_measure(lcs / reference.len() as f64, lcs / candidate.len() as f64, beta)
}

/// How per-reference ROUGE-L scores combine into one relevance value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Maximum F over references.
    #[default]
    MaxF,
    /// F of the maximum precision and maximum recall over references, as in the common
    /// caption-evaluation toolkit.
    MaxPrecisionRecall,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-f" => Ok(Self::MaxF),
            "max-precision-recall" => Ok(Self::MaxPrecisionRecall),
            other => Err(Error::UnknownName {
                kind: "aggregation",
                name: other.to_owned(),
                known: "max-f, max-precision-recall".into(),
            }),
        }
    }
}

/// Relevance in `[0, 1]` of an image, described by `references`, to a query caption.
pub fn relevance<S: PartialEq, R: AsRef<[S]>>(
    query: &[S],
    references: &[R],
    beta: f64,
    aggregation: Aggregation,
) -> Result<f64> {
    if references.is_empty() {
        return Err(Error::Empty("reference caption set"));
    }
    Ok(match aggregation {
        Aggregation::MaxF => references.iter().map(|r| rouge_l(query, r.as_ref(), beta)).fold(0.0, f64::max),
        Aggregation::MaxPrecisionRecall => {
            let (mut p, mut r) = (0.0f64, 0.0f64);
            for reference in references {
                let reference = reference.as_ref();
                let lcs = lcs_length(query, reference) as f64;
                if lcs > 0.0 {
                    p = p.max(lcs / query.len() as f64);
                    r = r.max(lcs / reference.len() as f64);
                }
            }
            f_measure(r, p, beta)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn lcs_examples() {
        assert_eq!(lcs_length(&toks("a b c"), &toks("a b c")), 3);
        assert_eq!(lcs_length(&toks("a b c"), &[]), 0);
        assert_eq!(lcs_length(&toks("a woman cuts pizza"), &toks("a woman cutting a pizza")), 3);
    }

    #[test]
    fn rouge_examples() {
        let c = toks("a woman cuts pizza");
        let r = toks("a woman cutting a pizza");
        assert_eq!(rouge_l(&c, &c, 1.2), 1.0);
        assert_eq!(rouge_l(&c, &toks("dog park"), 1.2), 0.0);
        assert_eq!(rouge_l(&c, &[], 1.2), 0.0);
        let (rec, prec) = (0.6, 0.75);
        let expected = (1.0 + 1.44) * rec * prec / (rec + 1.44 * prec);
        assert!((rouge_l(&c, &r, 1.2) - expected).abs() < 1e-15);
        assert!((rouge_l(&c, &r, 1.2) - 0.6535714285714285).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_unless_beta_one() {
        let c = toks("a woman cuts pizza");
        let r = toks("a woman cutting a pizza");
        assert_ne!(rouge_l(&c, &r, 1.2), rouge_l(&r, &c, 1.2));
        assert!((rouge_l(&c, &r, 1.0) - rouge_l(&r, &c, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn relevance_aggregations() {
        let q = toks("a dog on grass");
        let refs = [toks("a dog runs"), toks("grass field with a dog on grass")];
        let max_f = relevance(&q, &refs, 1.2, Aggregation::MaxF).unwrap();
        let expected = rouge_l(&q, &refs[0], 1.2).max(rouge_l(&q, &refs[1], 1.2));
        assert_eq!(max_f, expected);
        assert_eq!(relevance(&q, std::slice::from_ref(&q), 1.2, Aggregation::MaxF).unwrap(), 1.0);
        assert_eq!(relevance(&q, &[toks("cat")], 1.2, Aggregation::MaxF).unwrap(), 0.0);
        let pr = relevance(&q, &refs, 1.2, Aggregation::MaxPrecisionRecall).unwrap();
        assert!(pr >= max_f);
        let none: [Vec<&str>; 0] = [];
        assert!(relevance(&q, &none, 1.2, Aggregation::MaxF).is_err());
        assert_eq!("max-f".parse::<Aggregation>().unwrap(), Aggregation::MaxF);
        assert!("min".parse::<Aggregation>().is_err());
    }

    proptest! {
        #[test]
        fn rouge_in_unit_interval(
            a in prop::collection::vec(0u8..5, 0..12),
            b in prop::collection::vec(0u8..5, 0..12),
            beta in 0.1f64..3.0,
        ) {
            let s = rouge_l(&a, &b, beta);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
            prop_assert!(lcs_length(&a, &b) <= a.len().min(b.len()));
            prop_assert_eq!(lcs_length(&a, &b), lcs_length(&b, &a));
        }
    }
}
