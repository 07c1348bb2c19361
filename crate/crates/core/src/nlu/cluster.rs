use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::embed::{compute_centroid, similarity, Embedding, SentenceEncoder, SimilarityMode};
use super::params::ParameterBinding;
use super::parse::ParsedUtterance;
use super::NluError;

pub type ClusterId = u64;

/// Significant digits kept for stored embeddings.
pub const EMBEDDING_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub hard: f64,
    pub soft: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { hard: 0.7, soft: 0.6 }
    }
}

impl Thresholds {
    pub fn new(hard: f64, soft: f64) -> Result<Self, NluError> {
        if hard.is_nan() || soft.is_nan() || hard < soft {
            return Err(NluError::Thresholds { hard, soft });
        }
        Ok(Thresholds { hard, soft })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Hard,
    Soft,
    New,
}

/// Above `hard` joins silently, above `soft` asks, anything else starts a
/// new cluster.
pub fn classify_similarity<T: Scalar>(bsim: T, th: &Thresholds) -> Branch {
    if bsim > T::lit(th.hard) {
        Branch::Hard
    } else if bsim > T::lit(th.soft) {
        Branch::Soft
    } else {
        Branch::New
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMember<T> {
    pub text: String,
    pub embedding: Embedding<T>,
}

/// The reference command of a cluster and its known parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Canonical {
    pub text: String,
    pub parse: ParsedUtterance,
    pub bindings: Vec<ParameterBinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster<T> {
    pub id: ClusterId,
    pub members: Vec<ClusterMember<T>>,
    pub canonical: Canonical,
    pub script: Option<String>,
}

impl<T: Scalar> Cluster<T> {
    pub fn centroid(&self) -> Result<Embedding<T>, NluError> {
        compute_centroid(self.members.iter().map(|m| &m.embedding))
    }
}

/// What clustering would do with an embedding, before any mutation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plan<T> {
    pub branch: Branch,
    /// Best cluster, if the store is not empty.
    pub best: Option<ClusterId>,
    pub similarity: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentKind {
    AssignedHard,
    AssignedAfterVerify,
    RejectedVerifyNewCluster,
    NewCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignmentOutcome<T> {
    pub kind: AssignmentKind,
    pub cluster: ClusterId,
    /// Similarity to the best existing cluster (0 for an empty store).
    pub similarity: T,
}

/// Task clusters. Single writer; callers serialize mutations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStore<T> {
    pub(crate) dim: Option<usize>,
    pub(crate) mode: SimilarityMode,
    pub(crate) next_id: ClusterId,
    pub(crate) clusters: Vec<Cluster<T>>,
}

impl<T: Scalar> Default for ClusterStore<T> {
    fn default() -> Self {
        Self::new(SimilarityMode::Angular)
    }
}

impl<T: Scalar> ClusterStore<T> {
    pub fn new(mode: SimilarityMode) -> Self {
        ClusterStore { dim: None, mode, next_id: 1, clusters: Vec::new() }
    }

    /// Rebuilds a store from saved parts, validating dimensions and ids.
    pub fn from_parts(
        dim: Option<usize>,
        mode: SimilarityMode,
        next_id: ClusterId,
        clusters: Vec<Cluster<T>>,
    ) -> Result<Self, NluError> {
        let mut store = ClusterStore { dim, mode, next_id, clusters: Vec::new() };
        for c in clusters {
            if c.members.is_empty() {
                return Err(NluError::EmptyCluster);
            }
            if c.id >= store.next_id || store.get(c.id).is_some() {
                return Err(NluError::Usage(format!("cluster id {} reused or beyond next id {}", c.id, store.next_id)));
            }
            for m in &c.members {
                store.check_dim(&m.embedding)?;
            }
            store.clusters.push(c);
        }
        Ok(store)
    }

    pub fn mode(&self) -> SimilarityMode {
        self.mode
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn next_id(&self) -> ClusterId {
        self.next_id
    }

    pub fn clusters(&self) -> &[Cluster<T>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn get(&self, id: ClusterId) -> Option<&Cluster<T>> {
        self.clusters.iter().find(|c| c.id == id)
    }

    fn get_mut(&mut self, id: ClusterId) -> Result<&mut Cluster<T>, NluError> {
        self.clusters.iter_mut().find(|c| c.id == id).ok_or(NluError::UnknownCluster(id))
    }

    fn check_dim(&mut self, e: &Embedding<T>) -> Result<(), NluError> {
        match self.dim {
            Some(d) if d != e.dim() => Err(NluError::Dimension { expected: d, found: e.dim() }),
            Some(_) => Ok(()),
            None => {
                self.dim = Some(e.dim());
                Ok(())
            }
        }
    }

    /// Best cluster by centroid similarity; ties keep the older cluster.
    pub fn best_match(&self, e: &Embedding<T>) -> Result<Option<(ClusterId, T)>, NluError> {
        if let Some(d) = self.dim {
            if d != e.dim() {
                return Err(NluError::Dimension { expected: d, found: e.dim() });
            }
        }
        let mut best: Option<(ClusterId, T)> = None;
        let mut bsim = T::zero();
        for c in &self.clusters {
            let sim = similarity(self.mode, e, &c.centroid()?);
            if sim > bsim {
                bsim = sim;
                best = Some((c.id, sim));
            }
        }
        Ok(best)
    }

    pub fn plan(&self, e: &Embedding<T>, th: &Thresholds) -> Result<Plan<T>, NluError> {
        let best = self.best_match(e)?;
        let similarity = best.map_or(T::zero(), |b| b.1);
        let branch = if best.is_some() { classify_similarity(similarity, th) } else { Branch::New };
        Ok(Plan { branch, best: best.map(|b| b.0), similarity })
    }

    /// Appends an utterance to an existing cluster.
    pub fn join(&mut self, id: ClusterId, text: &str, e: Embedding<T>) -> Result<(), NluError> {
        self.check_dim(&e)?;
        let c = self.get_mut(id)?;
        c.members.push(ClusterMember { text: text.to_string(), embedding: e.quantized(EMBEDDING_DIGITS) });
        Ok(())
    }

    /// Starts a cluster with `text` as its canonical utterance.
    pub fn create(&mut self, text: &str, e: Embedding<T>, parse: ParsedUtterance) -> Result<ClusterId, NluError> {
        self.check_dim(&e)?;
        let id = self.next_id;
        self.next_id += 1;
        self.clusters.push(Cluster {
            id,
            members: vec![ClusterMember { text: text.to_string(), embedding: e.quantized(EMBEDDING_DIGITS) }],
            canonical: Canonical { text: text.to_string(), parse, bindings: Vec::new() },
            script: None,
        });
        Ok(id)
    }

    pub fn set_script(&mut self, id: ClusterId, script: Option<String>) -> Result<(), NluError> {
        self.get_mut(id)?.script = script;
        Ok(())
    }

    /// Replaces the canonical parse and bindings; the canonical text is fixed.
    pub fn set_canonical_analysis(
        &mut self,
        id: ClusterId,
        parse: ParsedUtterance,
        bindings: Vec<ParameterBinding>,
    ) -> Result<(), NluError> {
        let c = self.get_mut(id)?;
        c.canonical.parse = parse;
        c.canonical.bindings = bindings;
        Ok(())
    }

    /// Removes a cluster, e.g. when its demonstration was abandoned.
    pub fn remove(&mut self, id: ClusterId) -> Result<Cluster<T>, NluError> {
        let idx = self.clusters.iter().position(|c| c.id == id).ok_or(NluError::UnknownCluster(id))?;
        Ok(self.clusters.remove(idx))
    }
}

/// Clusters one utterance. `verify` is asked only for soft matches; when it
/// is needed but absent the store is left untouched and
/// [`NluError::InteractionRequired`] is returned.
pub fn assign_utterance<T: Scalar>(
    utterance: &str,
    encoder: &dyn SentenceEncoder<T>,
    store: &mut ClusterStore<T>,
    th: &Thresholds,
    verify: Option<&mut dyn FnMut(&str) -> bool>,
) -> Result<AssignmentOutcome<T>, NluError> {
    let th = Thresholds::new(th.hard, th.soft)?;
    let e = encoder.encode(utterance);
    let plan = store.plan(&e, &th)?;
    let new_parse = || ParsedUtterance::flat(utterance);
    let (kind, cluster) = match (plan.branch, plan.best) {
        (Branch::Hard, Some(id)) => {
            store.join(id, utterance, e)?;
            (AssignmentKind::AssignedHard, id)
        }
        (Branch::Soft, Some(id)) => {
            let canonical = store.get(id).expect("planned cluster").canonical.text.clone();
            let Some(verify) = verify else {
                return Err(NluError::InteractionRequired {
                    cluster: id,
                    canonical,
                    similarity: plan.similarity.to_f64().unwrap_or(0.0),
                });
            };
            if verify(&canonical) {
                store.join(id, utterance, e)?;
                (AssignmentKind::AssignedAfterVerify, id)
            } else {
                (AssignmentKind::RejectedVerifyNewCluster, store.create(utterance, e, new_parse())?)
            }
        }
        _ => (AssignmentKind::NewCluster, store.create(utterance, e, new_parse())?),
    };
    Ok(AssignmentOutcome { kind, cluster, similarity: plan.similarity })
}
