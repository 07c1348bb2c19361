//! Record a touchscreen demonstration once, learn a parameterized script
//! from it and replay it later with new values.
//!
//! The numeric pieces (template scores, similarities, embeddings, matching)
//! are generic over the scalar type; the aliases below fix it to `f64` for
//! the engine.

pub mod device;
pub mod executor;
pub mod learner;
pub mod matching;
pub mod nlu;
pub mod perception;
pub mod recorder;
pub mod scalar;
pub mod store;
pub mod vision;

pub type Embedding = nlu::Embedding<f64>;
pub type WordVectors = nlu::WordVectorTable<f64>;
pub type Clusters = nlu::ClusterStore<f64>;
pub type Cluster = nlu::Cluster<f64>;
pub type Assignment = nlu::AssignmentOutcome<f64>;
pub type Encoder = dyn nlu::SentenceEncoder<f64> + Send + Sync;
pub type MeanEncoder = nlu::MeanWordVector<f64>;
pub type StubEncoder = nlu::PrecomputedEncoder<f64>;
pub type Scores = nlu::ParamScores<f64>;
pub type EdgeWeights = nlu::EdgeWeights<f64>;
pub type TemplateMatch = vision::MatchResult<f64>;
