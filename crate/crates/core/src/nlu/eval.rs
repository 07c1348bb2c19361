use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::params::ParameterBinding;
use super::NluError;

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Adjusted Rand index between two partitions of the same elements, each
/// given as a list of clusters. Two trivial partitions (where the chance
/// correction leaves nothing to measure) score 1.
pub fn adjusted_rand_index<E: Ord + Clone, T: Scalar>(predicted: &[Vec<E>], truth: &[Vec<E>]) -> Result<T, NluError> {
    let label = |parts: &[Vec<E>]| -> Result<BTreeMap<E, usize>, NluError> {
        let mut m = BTreeMap::new();
        for (k, part) in parts.iter().enumerate() {
            for e in part {
                if m.insert(e.clone(), k).is_some() {
                    return Err(NluError::Usage("element appears in more than one cluster".into()));
                }
            }
        }
        Ok(m)
    };
    let (p, t) = (label(predicted)?, label(truth)?);
    if p.keys().ne(t.keys()) {
        return Err(NluError::Usage("partitions cover different elements".into()));
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (e, &a) in &p {
        *table.entry((a, t[e])).or_default() += 1;
    }
    let count_sizes = |m: &BTreeMap<E, usize>| -> u64 {
        let mut sizes: BTreeMap<usize, u64> = BTreeMap::new();
        for &k in m.values() {
            *sizes.entry(k).or_default() += 1;
        }
        sizes.values().map(|&s| pairs(s)).sum()
    };
    let index = T::from_u64(table.values().map(|&n| pairs(n)).sum()).expect("count");
    let sa = T::from_u64(count_sizes(&p)).expect("count");
    let sb = T::from_u64(count_sizes(&t)).expect("count");
    let total = T::from_u64(pairs(p.len() as u64)).expect("count");
    if total.is_zero() {
        return Ok(T::one());
    }
    let expected = sa * sb / total;
    let max = (sa + sb) / T::lit(2.0);
    let denom = max - expected;
    if denom.is_zero() {
        return Ok(T::one());
    }
    Ok((index - expected) / denom)
}

/// [`adjusted_rand_index`] over parallel label sequences.
pub fn adjusted_rand_index_from_labels<L: Ord + Clone, T: Scalar>(predicted: &[L], truth: &[L]) -> Result<T, NluError> {
    if predicted.len() != truth.len() {
        return Err(NluError::Usage(format!("{} predicted labels for {} elements", predicted.len(), truth.len())));
    }
    let group = |labels: &[L]| -> Vec<Vec<usize>> {
        let mut m: BTreeMap<L, Vec<usize>> = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            m.entry(l.clone()).or_default().push(i);
        }
        m.into_values().collect()
    };
    adjusted_rand_index(&group(predicted), &group(truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamScores<T> {
    pub exact_accuracy: T,
    pub word_precision: T,
    pub word_recall: T,
    pub word_f1: T,
}

fn slot_values(bs: &[ParameterBinding]) -> BTreeMap<&str, String> {
    let mut by_slot: BTreeMap<&str, Vec<&ParameterBinding>> = BTreeMap::new();
    for b in bs {
        by_slot.entry(b.slot.as_str()).or_default().push(b);
    }
    by_slot
        .into_iter()
        .map(|(s, mut v)| {
            v.sort_by_key(|b| b.start);
            (s, v.iter().map(|b| b.value.as_str()).collect::<Vec<_>>().join(" "))
        })
        .collect()
}

fn words(bs: &[ParameterBinding]) -> BTreeMap<String, usize> {
    let mut bag = BTreeMap::new();
    for b in bs {
        for w in b.value.split_whitespace() {
            *bag.entry(w.to_string()).or_default() += 1;
        }
    }
    bag
}

/// Exact slot-string accuracy per utterance, plus precision/recall/F1 over
/// bags of parameter words pooled across utterances. Comparison is case
/// sensitive.
pub fn parameter_eval<T: Scalar>(
    predicted: &[Vec<ParameterBinding>],
    gold: &[Vec<ParameterBinding>],
) -> Result<ParamScores<T>, NluError> {
    if predicted.len() != gold.len() {
        return Err(NluError::Usage(format!("{} predictions for {} gold utterances", predicted.len(), gold.len())));
    }
    let (mut exact, mut hit, mut npred, mut ngold) = (0usize, 0usize, 0usize, 0usize);
    for (p, g) in predicted.iter().zip(gold) {
        if slot_values(p) == slot_values(g) {
            exact += 1;
        }
        let (bp, bg) = (words(p), words(g));
        let keys: BTreeSet<&String> = bp.keys().collect();
        hit += keys.iter().map(|k| bp[*k].min(bg.get(*k).copied().unwrap_or(0))).sum::<usize>();
        npred += bp.values().sum::<usize>();
        ngold += bg.values().sum::<usize>();
    }
    let f = T::from_usize_lossy;
    let ratio = |a: usize, b: usize, empty: T| if b == 0 { empty } else { f(a) / f(b) };
    let both_empty = npred == 0 && ngold == 0;
    let one_if_both_empty = if both_empty { T::one() } else { T::zero() };
    let precision = ratio(hit, npred, one_if_both_empty);
    let recall = ratio(hit, ngold, one_if_both_empty);
    let f1 = if precision + recall > T::zero() {
        T::lit(2.0) * precision * recall / (precision + recall)
    } else {
        T::zero()
    };
    Ok(ParamScores {
        exact_accuracy: if gold.is_empty() { T::one() } else { f(exact) / f(gold.len()) },
        word_precision: precision,
        word_recall: recall,
        word_f1: f1,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn b(slot: &str, value: &str) -> ParameterBinding {
        ParameterBinding { slot: slot.into(), start: 0, end: 1, value: value.into() }
    }

    /// ARI straight from the pair-counting definition over all element pairs.
    fn ari_oracle(p: &[usize], t: &[usize]) -> f64 {
        let n = p.len();
        let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                match (p[i] == p[j], t[i] == t[j]) {
                    (true, true) => a += 1.0,
                    (true, false) => b += 1.0,
                    (false, true) => c += 1.0,
                    (false, false) => d += 1.0,
                }
            }
        }
        let total: f64 = a + b + c + d;
        if total == 0.0 {
            return 1.0;
        }
        let expected = (a + b) * (a + c) / total;
        let max = ((a + b) + (a + c)) / 2.0;
        if max == expected {
            1.0
        } else {
            (a - expected) / (max - expected)
        }
    }

    #[test]
    fn ari_reference_values() {
        let same: f64 =
            adjusted_rand_index(&[vec!['a', 'b'], vec!['c', 'd']], &[vec!['c', 'd'], vec!['a', 'b']]).unwrap();
        assert_eq!(same, 1.0);
        let singletons: f64 = adjusted_rand_index(&[vec![1], vec![2], vec![3], vec![4]], &[vec![1, 2, 3, 4]]).unwrap();
        assert_eq!(singletons, 0.0);
        assert!(adjusted_rand_index::<_, f64>(&[vec![1]], &[vec![2]]).is_err());
        assert!(adjusted_rand_index::<_, f64>(&[vec![1, 1]], &[vec![1]]).is_err());
    }

    #[test]
    fn word_scores_for_extra_article() {
        let s: ParamScores<f64> = parameter_eval(&[vec![b("s0", "an Italian")]], &[vec![b("s0", "Italian")]]).unwrap();
        assert_eq!(s.exact_accuracy, 0.0);
        assert_eq!(s.word_precision, 0.5);
        assert_eq!(s.word_recall, 1.0);
        assert!((s.word_f1 - 2.0 / 3.0).abs() < 1e-12);
        let s: ParamScores<f64> = parameter_eval(&[vec![b("s0", "Italian")]], &[vec![b("s0", "Italian")]]).unwrap();
        assert_eq!((s.exact_accuracy, s.word_precision, s.word_recall, s.word_f1), (1.0, 1.0, 1.0, 1.0));
        let s: ParamScores<f64> = parameter_eval(&[vec![]], &[vec![b("s0", "Italian")]]).unwrap();
        assert_eq!((s.exact_accuracy, s.word_recall), (0.0, 0.0));
        let s: ParamScores<f64> = parameter_eval(&[vec![b("s0", "italian")]], &[vec![b("s0", "Italian")]]).unwrap();
        assert_eq!(s.word_precision, 0.0);
    }

    proptest! {
        #[test]
        fn ari_matches_pair_counting(labels in proptest::collection::vec((0usize..4, 0usize..4), 1..12), perm_seed in any::<u64>()) {
            let (p, t): (Vec<usize>, Vec<usize>) = labels.iter().copied().unzip();
            let got: f64 = adjusted_rand_index_from_labels(&p, &t).unwrap();
            prop_assert!((got - ari_oracle(&p, &t)).abs() < 1e-9);
            // relabel clusters and permute elements
            let relabel: Vec<usize> = p.iter().map(|l| (l * 7 + 3) % 11).collect();
            let mut idx: Vec<usize> = (0..p.len()).collect();
            idx.sort_by_key(|&i| (i as u64).wrapping_mul(perm_seed | 1).rotate_left(13));
            let rp: Vec<usize> = idx.iter().map(|&i| relabel[i]).collect();
            let rt: Vec<usize> = idx.iter().map(|&i| t[i]).collect();
            let again: f64 = adjusted_rand_index_from_labels(&rp, &rt).unwrap();
            prop_assert!((got - again).abs() < 1e-9);
        }
    }
}
