//! Utterance corpora for the evaluation verbs.
//!
//! A corpus directory holds `utterances.jsonl` (one
//! `{"task": .., "text": .., "bindings": [..]}` object per line),
//! `vectors.txt` and optionally `parses.conllu` with `# text = ` comments.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use showme_core::nlu::{
    adjusted_rand_index_from_labels, assign_utterance, parameter_eval, parse_conllu_corpus, predict_parameters,
    AssignmentKind, ParameterBinding, ParsedUtterance, Thresholds,
};
use showme_core::{Clusters, EdgeWeights, MeanEncoder, Scores, WordVectors};

use crate::session::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub task: String,
    pub text: String,
    #[serde(default)]
    pub bindings: Vec<ParameterBinding>,
}

pub struct Corpus {
    pub entries: Vec<Entry>,
    pub vectors: WordVectors,
    pub parses: BTreeMap<String, ParsedUtterance>,
}

fn other(path: &Path, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Validation(format!("{}: {e}", path.display()))
}

impl Corpus {
    pub fn load(dir: &Path) -> Result<Self, ServiceError> {
        let path = dir.join("utterances.jsonl");
        let text = fs::read_to_string(&path).map_err(|e| other(&path, e))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            entries
                .push(serde_json::from_str::<Entry>(line).map_err(|e| other(&path, format!("line {}: {e}", i + 1)))?);
        }
        let vectors = WordVectors::load(&dir.join("vectors.txt"))?;
        let conllu = dir.join("parses.conllu");
        let parses = if conllu.exists() {
            let text = fs::read_to_string(&conllu).map_err(|e| other(&conllu, e))?;
            parse_conllu_corpus(&text)?
                .into_iter()
                .map(|(t, p)| (t.unwrap_or_else(|| p.text()).trim().to_lowercase(), p))
                .collect()
        } else {
            BTreeMap::new()
        };
        Ok(Corpus { entries, vectors, parses })
    }

    pub fn parse(&self, text: &str) -> ParsedUtterance {
        self.parses.get(&text.trim().to_lowercase()).cloned().unwrap_or_else(|| ParsedUtterance::flat(text))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringEval {
    pub ari: f64,
    pub utterances: usize,
    pub clusters: usize,
    pub verifications: usize,
}

/// Clusters the corpus incrementally, answering verification questions
/// from the gold labels. `seed` shuffles the order first.
pub fn eval_clustering(corpus: &Corpus, th: &Thresholds, seed: Option<u64>) -> Result<ClusteringEval, ServiceError> {
    let mut order: Vec<usize> = (0..corpus.entries.len()).collect();
    if let Some(seed) = seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let encoder = MeanEncoder::new(std::sync::Arc::new(corpus.vectors.clone()));
    let mut store = Clusters::default();
    let mut canonical_task: BTreeMap<String, String> = BTreeMap::new();
    let mut predicted = Vec::new();
    let mut truth = Vec::new();
    let mut verifications = 0;
    for &i in &order {
        let entry = &corpus.entries[i];
        let task = entry.task.clone();
        let mut asked = false;
        let mut verify = |canonical: &str| {
            asked = true;
            canonical_task.get(canonical) == Some(&task)
        };
        let out = assign_utterance(&entry.text, &encoder, &mut store, th, Some(&mut verify))?;
        verifications += usize::from(asked);
        if matches!(out.kind, AssignmentKind::NewCluster | AssignmentKind::RejectedVerifyNewCluster) {
            canonical_task.insert(entry.text.clone(), entry.task.clone());
        }
        predicted.push(format!("c{}", out.cluster));
        truth.push(entry.task.clone());
    }
    let ari = if predicted.is_empty() { 1.0 } else { adjusted_rand_index_from_labels(&predicted, &truth)? };
    Ok(ClusteringEval { ari, utterances: predicted.len(), clusters: store.len(), verifications })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEval {
    pub scores: Scores,
    pub evaluated: usize,
    /// Per utterance: text, predicted and gold bindings.
    pub rows: Vec<(String, Vec<ParameterBinding>, Vec<ParameterBinding>)>,
}

/// Transfers each task's first utterance's bindings to the task's other
/// utterances and scores them against the gold bindings.
pub fn eval_params(corpus: &Corpus, weights: &EdgeWeights) -> Result<ParamEval, ServiceError> {
    let mut canonical: BTreeMap<&str, &Entry> = BTreeMap::new();
    let mut rows = Vec::new();
    for entry in &corpus.entries {
        let Some(canon) = canonical.get(entry.task.as_str()) else {
            canonical.insert(&entry.task, entry);
            continue;
        };
        let predicted = if canon.bindings.is_empty() {
            Vec::new()
        } else {
            predict_parameters(
                &corpus.parse(&canon.text),
                &canon.bindings,
                &corpus.parse(&entry.text),
                &corpus.vectors,
                weights,
            )?
        };
        rows.push((entry.text.clone(), predicted, entry.bindings.clone()));
    }
    let pred: Vec<_> = rows.iter().map(|r| r.1.clone()).collect();
    let gold: Vec<_> = rows.iter().map(|r| r.2.clone()).collect();
    let scores = parameter_eval(&pred, &gold)?;
    Ok(ParamEval { scores, evaluated: rows.len(), rows })
}
