//! Utterance understanding: encoding, incremental task clustering,
//! dependency-parse based parameter transfer and evaluation metrics.

mod cluster;
mod embed;
mod eval;
mod params;
mod parse;
mod tokenize;
mod vectors;

use thiserror::Error;

pub use cluster::{
    assign_utterance, classify_similarity, AssignmentKind, AssignmentOutcome, Branch, Canonical, Cluster, ClusterId,
    ClusterMember, ClusterStore, Plan, Thresholds, EMBEDDING_DIGITS,
};
pub use embed::{
    angular_similarity, compute_centroid, cosine_similarity, encode, similarity, Embedding, MeanWordVector,
    PrecomputedEncoder, SentenceEncoder, SimilarityMode,
};
pub use eval::{adjusted_rand_index, adjusted_rand_index_from_labels, parameter_eval, ParamScores};
pub use params::{
    bootstrap_on_tokens, bootstrap_parameters, edge_weight, parameter_matching, predict_parameters, slot_name,
    ArtifactRole, BootstrapBinding, DemoArtifact, EdgeWeights, ParameterBinding,
};
pub use parse::{parse_conllu_corpus, parse_ingest, ParsedUtterance, Token};
pub use tokenize::{tokenize, tokenize_spans, TokenSpan};
pub use vectors::WordVectorTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NluError {
    #[error("word vectors line {line}: {message}")]
    VectorFormat { line: usize, message: String },
    #[error("CoNLL-U line {line}: {message}")]
    Conllu { line: usize, message: String },
    #[error("invalid parse: {0}")]
    InvalidParse(String),
    #[error("embedding dimension {found} does not match {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("cluster has no utterances")]
    EmptyCluster,
    #[error("unknown cluster {0}")]
    UnknownCluster(ClusterId),
    #[error("thresholds must satisfy hard >= soft (hard {hard}, soft {soft})")]
    Thresholds { hard: f64, soft: f64 },
    #[error("verification required: did you mean a task similar to '{canonical}'?")]
    InteractionRequired { cluster: ClusterId, canonical: String, similarity: f64 },
    #[error("cannot predict parameters for an empty utterance")]
    EmptyUtterance,
    #[error("canonical utterance has no parameter bindings")]
    NoBindings,
    #[error("{0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
}
