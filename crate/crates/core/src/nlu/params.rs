use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::matching::{max_weight_matching, Matching};
use crate::scalar::{Scalar, Weight};

use super::parse::ParsedUtterance;
use super::tokenize::{tokenize, tokenize_spans};
use super::vectors::WordVectorTable;
use super::NluError;

/// A slot bound to the tokens `start..end` of an utterance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParameterBinding {
    pub slot: String,
    pub start: usize,
    pub end: usize,
    pub value: String,
}

pub fn slot_name(k: usize) -> String {
    format!("s{k}")
}

/// Relative weights of the four edge components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeights<T> {
    pub cosine: T,
    pub lemma: T,
    pub pos: T,
    pub dep: T,
}

impl<T: Scalar> Default for EdgeWeights<T> {
    fn default() -> Self {
        let q = T::lit(0.25);
        EdgeWeights { cosine: q, lemma: q, pos: q, dep: q }
    }
}

fn lookup<'a, T: Scalar>(p: &ParsedUtterance, i: usize, vectors: &'a WordVectorTable<T>) -> Option<&'a [T]> {
    let t = &p.tokens[i];
    vectors.get(&t.surface).or_else(|| vectors.get(&t.lemma))
}

fn cos01<T: Scalar>(a: Option<&[T]>, b: Option<&[T]>) -> T {
    let (Some(a), Some(b)) = (a, b) else { return T::zero() };
    let dot = a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y);
    let na = a.iter().fold(T::zero(), |s, x| s + *x * *x).sqrt();
    let nb = b.iter().fold(T::zero(), |s, x| s + *x * *x).sqrt();
    if na.is_zero() || nb.is_zero() {
        return T::zero();
    }
    let c = (dot / (na * nb)).max(-T::one()).min(T::one());
    (c + T::one()) / T::lit(2.0)
}

/// Shared fraction of two sets, |A and B| / max(|A|, |B|); two empty sets
/// agree fully.
fn overlap<T: Scalar>(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> T {
    let m = a.len().max(b.len());
    if m == 0 {
        return T::one();
    }
    T::from_usize_lossy(a.intersection(b).count()) / T::from_usize_lossy(m)
}

fn indicator<T: Scalar>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

/// Similarity of token `i` of `pa` and token `j` of `pb` from word vectors,
/// lemma and tag agreement (of the nodes and of their neighbourhoods) and
/// dependency label agreement.
pub fn edge_weight<T: Scalar>(
    i: usize,
    j: usize,
    pa: &ParsedUtterance,
    pb: &ParsedUtterance,
    vectors: &WordVectorTable<T>,
    w: &EdgeWeights<T>,
) -> T {
    let (ta, tb) = (&pa.tokens[i], &pb.tokens[j]);
    let (na, nb) = (pa.neighbours(i), pb.neighbours(j));
    let field = |p: &'_ ParsedUtterance, ns: &[usize], lemma: bool| -> BTreeSet<String> {
        ns.iter().map(|&k| if lemma { p.tokens[k].lemma.clone() } else { p.tokens[k].pos.clone() }).collect()
    };
    let half = T::lit(0.5);
    let neighbour_score = |lemma: bool| -> T {
        let a = field(pa, &na, lemma);
        let b = field(pb, &nb, lemma);
        overlap(&a.iter().map(String::as_str).collect(), &b.iter().map(String::as_str).collect())
    };
    let lemma_nb = (indicator::<T>(ta.lemma == tb.lemma) + neighbour_score(true)) * half;
    let pos_nb = (indicator::<T>(ta.pos == tb.pos) + neighbour_score(false)) * half;
    let dep = indicator::<T>(ta.deplabel == tb.deplabel);
    let cos = cos01(lookup(pa, i, vectors), lookup(pb, j, vectors));
    w.cosine * cos + w.lemma * lemma_nb + w.pos * pos_nb + w.dep * dep
}

/// Maximum-weight token alignment, canonical tokens as rows.
pub fn parameter_matching<T: Scalar + Weight>(
    canonical: &ParsedUtterance,
    new_parse: &ParsedUtterance,
    vectors: &WordVectorTable<T>,
    w: &EdgeWeights<T>,
) -> Matching<T> {
    let matrix: Vec<Vec<T>> = (0..canonical.len())
        .map(|i| (0..new_parse.len()).map(|j| edge_weight(i, j, canonical, new_parse, vectors, w)).collect())
        .collect();
    max_weight_matching(&matrix)
}

/// Transfers each canonical binding to the new utterance through the token
/// alignment. Partners of a binding's tokens are grouped into maximal
/// contiguous runs; a slot whose partners are not contiguous yields several
/// bindings, and a slot with no partner yields none.
pub fn predict_parameters<T: Scalar + Weight>(
    canonical: &ParsedUtterance,
    bindings: &[ParameterBinding],
    new_parse: &ParsedUtterance,
    vectors: &WordVectorTable<T>,
    w: &EdgeWeights<T>,
) -> Result<Vec<ParameterBinding>, NluError> {
    if new_parse.is_empty() {
        return Err(NluError::EmptyUtterance);
    }
    if bindings.is_empty() {
        return Err(NluError::NoBindings);
    }
    let matching = parameter_matching(canonical, new_parse, vectors, w);
    let mut out = Vec::new();
    for b in bindings {
        let mut partners: Vec<usize> =
            (b.start..b.end.min(canonical.len())).filter_map(|i| matching.row_to_col[i]).collect();
        partners.sort_unstable();
        let mut k = 0;
        while k < partners.len() {
            let start = partners[k];
            let mut end = start + 1;
            while k + 1 < partners.len() && partners[k + 1] == end {
                k += 1;
                end += 1;
            }
            out.push(ParameterBinding { slot: b.slot.clone(), start, end, value: new_parse.surfaces(start..end) });
            k += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactRole {
    ClickedText,
    TypedText,
}

/// Text the user touched or typed during a demonstration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoArtifact {
    pub step: usize,
    pub role: ArtifactRole,
    pub text: String,
}

/// A binding found by [`bootstrap_parameters`], tied to the demonstration
/// step it came from. `artifact_start..artifact_end` is the byte range of the
/// matched words inside the artifact text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapBinding {
    pub binding: ParameterBinding,
    pub step: usize,
    pub role: ArtifactRole,
    pub artifact_start: usize,
    pub artifact_end: usize,
}

/// Longest common run of tokens, compared case-insensitively; earliest in
/// `a` on ties. Returns (start in a, start in b, length).
fn longest_common_run(a: &[String], b: &[String]) -> (usize, usize, usize) {
    let la: Vec<String> = a.iter().map(|s| s.to_lowercase()).collect();
    let lb: Vec<String> = b.iter().map(|s| s.to_lowercase()).collect();
    let mut prev = vec![0usize; lb.len() + 1];
    let mut best = (0, 0, 0);
    for i in 1..=la.len() {
        let mut cur = vec![0usize; lb.len() + 1];
        for j in 1..=lb.len() {
            if la[i - 1] == lb[j - 1] {
                cur[j] = prev[j - 1] + 1;
                if cur[j] > best.2 {
                    best = (i - cur[j], j - cur[j], cur[j]);
                }
            }
        }
        prev = cur;
    }
    best
}

/// Finds utterance words that reappear in clicked or typed text.
pub fn bootstrap_parameters(utterance: &str, artifacts: &[DemoArtifact]) -> Vec<BootstrapBinding> {
    bootstrap_on_tokens(&tokenize(utterance), artifacts)
}

/// [`bootstrap_parameters`] over an already tokenized utterance.
pub fn bootstrap_on_tokens(tokens: &[String], artifacts: &[DemoArtifact]) -> Vec<BootstrapBinding> {
    let mut candidates = Vec::new();
    for a in artifacts {
        let spans = tokenize_spans(&a.text);
        let words: Vec<String> = spans.iter().map(|s| s.text.clone()).collect();
        let (us, as_, len) = longest_common_run(tokens, &words);
        if len == 0 {
            continue;
        }
        let value = tokens[us..us + len].join(" ");
        if value.chars().count() < 3 {
            continue;
        }
        candidates.push(BootstrapBinding {
            binding: ParameterBinding { slot: String::new(), start: us, end: us + len, value },
            step: a.step,
            role: a.role,
            artifact_start: spans[as_].start,
            artifact_end: spans[as_ + len - 1].end,
        });
    }
    candidates.sort_by(|x, y| {
        let lx = x.binding.end - x.binding.start;
        let ly = y.binding.end - y.binding.start;
        ly.cmp(&lx).then(x.step.cmp(&y.step))
    });
    let mut accepted: Vec<BootstrapBinding> = Vec::new();
    for c in candidates {
        let clash = accepted.iter().any(|a| c.binding.start < a.binding.end && a.binding.start < c.binding.end);
        if !clash {
            accepted.push(c);
        }
    }
    accepted.sort_by_key(|a| a.binding.start);
    for (k, a) in accepted.iter_mut().enumerate() {
        a.binding.slot = slot_name(k);
    }
    accepted
}
