use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::tokenize::tokenize;
use super::vectors::WordVectorTable;
use super::NluError;

/// Sentence vector with unit norm, or all zeros when nothing was known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding<T>(pub Vec<T>);

impl<T: Scalar> Embedding<T> {
    pub fn zeros(dim: usize) -> Self {
        Embedding(vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| v.is_zero())
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0.iter().zip(&other.0).fold(T::zero(), |acc, (a, b)| acc + *a * *b)
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    /// Scales to unit length; the zero vector stays zero.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            for v in &mut self.0 {
                *v = *v / n;
            }
        }
        self
    }

    /// Rounds every component to `digits` significant digits.
    pub fn quantized(self, digits: usize) -> Self {
        Embedding(self.0.into_iter().map(|v| v.round_sig(digits)).collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMode {
    /// `1 - arccos(cos) / pi`, in [0, 1].
    #[default]
    Angular,
    /// Plain cosine, in [-1, 1].
    Cosine,
}

fn clamped_cos<T: Scalar>(a: &Embedding<T>, b: &Embedding<T>) -> Option<T> {
    if a.is_zero() || b.is_zero() {
        return None;
    }
    let c = a.dot(b) / (a.norm() * b.norm());
    Some(c.max(-T::one()).min(T::one()))
}

/// 0 when either vector is zero.
pub fn angular_similarity<T: Scalar>(a: &Embedding<T>, b: &Embedding<T>) -> T {
    clamped_cos(a, b).map_or(T::zero(), |c| T::one() - c.acos() / T::lit(std::f64::consts::PI))
}

/// 0 when either vector is zero.
pub fn cosine_similarity<T: Scalar>(a: &Embedding<T>, b: &Embedding<T>) -> T {
    clamped_cos(a, b).unwrap_or(T::zero())
}

pub fn similarity<T: Scalar>(mode: SimilarityMode, a: &Embedding<T>, b: &Embedding<T>) -> T {
    match mode {
        SimilarityMode::Angular => angular_similarity(a, b),
        SimilarityMode::Cosine => cosine_similarity(a, b),
    }
}

/// Normalized mean of the embeddings.
pub fn compute_centroid<'a, T: Scalar>(
    members: impl IntoIterator<Item = &'a Embedding<T>>,
) -> Result<Embedding<T>, NluError> {
    let mut iter = members.into_iter();
    let first = iter.next().ok_or(NluError::EmptyCluster)?;
    let mut sum = first.0.clone();
    let mut n = 1usize;
    for e in iter {
        if e.dim() != sum.len() {
            return Err(NluError::Dimension { expected: sum.len(), found: e.dim() });
        }
        for (s, v) in sum.iter_mut().zip(&e.0) {
            *s = *s + *v;
        }
        n += 1;
    }
    let n = T::from_usize_lossy(n);
    Ok(Embedding(sum.into_iter().map(|s| s / n).collect()).normalized())
}

pub trait SentenceEncoder<T>: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, text: &str) -> Embedding<T>;
}

/// Lowercase, tokenize, average the known word vectors, normalize.
pub fn encode<T: Scalar>(text: &str, vectors: &WordVectorTable<T>) -> Embedding<T> {
    let mut sum = vec![T::zero(); vectors.dim()];
    let mut known = 0usize;
    for token in tokenize(&text.to_lowercase()) {
        if let Some(v) = vectors.get(&token) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s = *s + *x;
            }
            known += 1;
        }
    }
    if known == 0 {
        return Embedding(sum);
    }
    let n = T::from_usize_lossy(known);
    Embedding(sum.into_iter().map(|s| s / n).collect()).normalized()
}

#[derive(Debug, Clone)]
pub struct MeanWordVector<T> {
    vectors: Arc<WordVectorTable<T>>,
}

impl<T: Scalar> MeanWordVector<T> {
    pub fn new(vectors: Arc<WordVectorTable<T>>) -> Self {
        MeanWordVector { vectors }
    }

    pub fn vectors(&self) -> &Arc<WordVectorTable<T>> {
        &self.vectors
    }
}

impl<T: Scalar> SentenceEncoder<T> for MeanWordVector<T> {
    fn dim(&self) -> usize {
        self.vectors.dim()
    }

    fn encode(&self, text: &str) -> Embedding<T> {
        encode(text, &self.vectors)
    }
}

/// Embeddings supplied ahead of time, keyed by exact utterance text. Unknown
/// utterances encode to the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedEncoder<T> {
    dim: usize,
    table: HashMap<String, Embedding<T>>,
}

impl<T: Scalar> PrecomputedEncoder<T> {
    pub fn new(dim: usize) -> Self {
        PrecomputedEncoder { dim, table: HashMap::new() }
    }

    pub fn insert(&mut self, text: &str, embedding: Embedding<T>) -> Result<(), NluError> {
        if embedding.dim() != self.dim {
            return Err(NluError::Dimension { expected: self.dim, found: embedding.dim() });
        }
        self.table.insert(text.to_string(), embedding.normalized());
        Ok(())
    }

    /// One entry per line: the utterance, a tab, then the components.
    pub fn from_text(text: &str) -> Result<Self, NluError> {
        let mut out: Option<Self> = None;
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| NluError::VectorFormat { line: n + 1, message };
            let (utt, rest) = line.split_once('\t').ok_or_else(|| err("missing tab separator".into()))?;
            let v = rest
                .split_whitespace()
                .map(|p| p.parse::<f64>().ok().and_then(T::from_f64).ok_or_else(|| err(format!("bad component '{p}'"))))
                .collect::<Result<Vec<T>, _>>()?;
            let enc = out.get_or_insert_with(|| Self::new(v.len()));
            enc.insert(utt, Embedding(v)).map_err(|e| err(e.to_string()))?;
        }
        out.ok_or(NluError::VectorFormat { line: 0, message: "no embeddings".into() })
    }

    pub fn load(path: &Path) -> Result<Self, NluError> {
        let text = std::fs::read_to_string(path).map_err(|e| NluError::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}

impl<T: Scalar> SentenceEncoder<T> for PrecomputedEncoder<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Embedding<T> {
        self.table.get(text).cloned().unwrap_or_else(|| Embedding::zeros(self.dim))
    }
}
