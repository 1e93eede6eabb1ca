use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use serde::Serialize;

use crate::error::{Error, Result};

fn check_lengths(pred: usize, gold: usize) -> Result<()> {
    if pred != gold {
        return Err(Error::Config(format!(
            "{pred} predictions for {gold} gold utterances"
        )));
    }
    Ok(())
}

/// Per-utterance exact-set correctness and the corpus accuracy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrictMatch {
    pub correct: Vec<bool>,
    pub accuracy: f64,
}

/// An utterance is correct iff its predicted set equals the gold set; two
/// empty sets count as correct. An empty corpus has accuracy 1.
pub fn strict_match<T: Ord>(pred: &[BTreeSet<T>], gold: &[BTreeSet<T>]) -> Result<StrictMatch> {
    check_lengths(pred.len(), gold.len())?;
    let correct: Vec<bool> = pred.iter().zip(gold).map(|(p, g)| p == g).collect();
    let hits = correct.iter().filter(|&&c| c).count();
    let accuracy = if correct.is_empty() {
        1.0
    } else {
        hits as f64 / correct.len() as f64
    };
    Ok(StrictMatch { correct, accuracy })
}

/// Micro-averaged precision, recall and F1 with raw counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Prf {
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// With nothing predicted and nothing to find every score is 1.
    pub fn from_counts(true_positives: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let (precision, recall, f1) = if predicted == 0 && gold == 0 {
            (1.0, 1.0, 1.0)
        } else {
            let p = ratio(true_positives, predicted);
            let r = ratio(true_positives, gold);
            let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            (p, r, f)
        };
        Prf {
            true_positives,
            predicted,
            gold,
            precision,
            recall,
            f1,
        }
    }
}

/// Micro F1 over exact-match set elements across the corpus.
pub fn triplet_f1<T: Ord>(pred: &[BTreeSet<T>], gold: &[BTreeSet<T>]) -> Result<Prf> {
    check_lengths(pred.len(), gold.len())?;
    let (mut tp, mut np, mut ng) = (0, 0, 0);
    for (p, g) in pred.iter().zip(gold) {
        tp += p.intersection(g).count();
        np += p.len();
        ng += g.len();
    }
    Ok(Prf::from_counts(tp, np, ng))
}

/// Corpus-level BLEU-1: clipped unigram counts summed over utterances,
/// times the brevity penalty `exp(1 - r/c)` when `c <= r`. Zero when the
/// candidate corpus is empty.
pub fn bleu1<T: AsRef<str>>(candidates: &[Vec<T>], references: &[Vec<T>]) -> Result<f64> {
    check_lengths(candidates.len(), references.len())?;
    let (mut clipped, mut c, mut r) = (0usize, 0usize, 0usize);
    for (cand, refr) in candidates.iter().zip(references) {
        let mut budget = counts(refr);
        for tok in cand {
            if let Some(n) = budget.get_mut(tok.as_ref()) {
                if *n > 0 {
                    *n -= 1;
                    clipped += 1;
                }
            }
        }
        c += cand.len();
        r += refr.len();
    }
    if c == 0 {
        return Ok(0.0);
    }
    let precision = clipped as f64 / c as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(precision * bp)
}

fn counts<T: AsRef<str>>(tokens: &[T]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for t in tokens {
        *m.entry(t.as_ref()).or_insert(0) += 1;
    }
    m
}

/// True positives, predicted and gold counts per key.
pub fn per_key_counts<T, K, F>(
    pred: &[BTreeSet<T>],
    gold: &[BTreeSet<T>],
    key: F,
) -> HashMap<K, (usize, usize, usize)>
where
    T: Ord,
    K: Eq + Hash,
    F: Fn(&T) -> K,
{
    let mut table: HashMap<K, (usize, usize, usize)> = HashMap::new();
    for (p, g) in pred.iter().zip(gold) {
        for t in p {
            let e = table.entry(key(t)).or_default();
            e.1 += 1;
            if g.contains(t) {
                e.0 += 1;
            }
        }
        for t in g {
            table.entry(key(t)).or_default().2 += 1;
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn strict_examples() {
        let m = strict_match(&[set(&[])], &[set(&[])]).unwrap();
        assert_eq!(m.correct, vec![true]);
        let m = strict_match(&[set(&["basketball"])], &[set(&["basketballs"])]).unwrap();
        assert_eq!(m.accuracy, 0.0);
        assert!(strict_match(&[set(&[])], &[]).is_err());
    }

    #[test]
    fn f1_examples() {
        let prf = triplet_f1(&[set(&["a", "b"])], &[set(&["b", "c"])]).unwrap();
        assert_eq!((prf.precision, prf.recall, prf.f1), (0.5, 0.5, 0.5));
        let prf = triplet_f1(&[set(&["a"])], &[set(&["a"])]).unwrap();
        assert_eq!(prf.f1, 1.0);
        let prf = triplet_f1(&[set(&[]), set(&[])], &[set(&[]), set(&[])]).unwrap();
        assert_eq!(prf.f1, 1.0);
        let prf = triplet_f1(&[set(&[])], &[set(&["a"])]).unwrap();
        assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn bleu_examples() {
        let b = bleu1(&[vec!["dogs"]], &[vec!["two", "dogs"]]).unwrap();
        assert!((b - (-1.0f64).exp()).abs() < 1e-12);
        let x = vec!["i", ";", "like", ";", "dogs"];
        assert_eq!(bleu1(std::slice::from_ref(&x), std::slice::from_ref(&x)).unwrap(), 1.0);
        assert_eq!(bleu1(&[vec!["cats"]], &[vec!["dogs"]]).unwrap(), 0.0);
        assert_eq!(bleu1::<&str>(&[vec![]], &[vec!["dogs"]]).unwrap(), 0.0);
        // clipping: "the the the" vs "the cat" clips to one match of three
        let b = bleu1(&[vec!["the", "the", "the"]], &[vec!["the", "cat"]]).unwrap();
        assert!((b - 1.0 / 3.0).abs() < 1e-15);
    }
}
