//! The dialogue: utterance, clarification, demonstration, learning and
//! execution, driven one command at a time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use showme_core::device::{
    load_package, sample::sample_package, DevicePackage, InputEvent, SimDevice, TransitionOutcome,
};
use showme_core::executor::{complete_assignment, ExecConfig, ExecutionReport, Executor, ParameterAssignment};
use showme_core::learner::{learn, parameterize, AutomationScript};
use showme_core::nlu::{
    bootstrap_on_tokens, parse_conllu_corpus, predict_parameters, AssignmentKind, Branch, ClusterId, NluError,
    ParsedUtterance, SentenceEncoder, Thresholds,
};
use showme_core::perception::{Detector, ExternalDetector, ExternalOcr, Ocr, OracleDetector, OracleOcr};
use showme_core::recorder::{begin_demo, DemoTrace, RecorderError, RecordingSession};
use showme_core::store::{StoreError, TaskRecord, Workspace};
use showme_core::{Assignment, Clusters, EdgeWeights, MeanEncoder, WordVectors};

pub const UNKNOWN_TASK_PROMPT: &str = "I do not know how to do that. Can you show me?";

pub fn verification_question(canonical: &str) -> String {
    format!("Did you mean a task similar to: '{canonical}'?")
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    State(String),
    #[error("{0}")]
    Validation(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("execution failed: {0}")]
    Execution(String),
    #[error("{0}")]
    Other(String),
}

impl ServiceError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ServiceError::Validation(_) | ServiceError::NotFound(_) => 2,
            ServiceError::Execution(_) => 3,
            ServiceError::State(_) => 4,
            ServiceError::Other(_) => 1,
        }
    }
}

impl From<StoreError> for ServiceError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(m) => ServiceError::NotFound(m),
            StoreError::Locked(_) => ServiceError::State(e.to_string()),
            StoreError::Io { .. } => ServiceError::Other(e.to_string()),
            _ => ServiceError::Validation(e.to_string()),
        }
    }
}

impl From<NluError> for ServiceError {
    fn from(e: NluError) -> Self {
        match e {
            NluError::Io(_) => ServiceError::Other(e.to_string()),
            _ => ServiceError::Validation(e.to_string()),
        }
    }
}

impl From<RecorderError> for ServiceError {
    fn from(e: RecorderError) -> Self {
        match e {
            RecorderError::State(m) => ServiceError::State(m),
            _ => ServiceError::Validation(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, ServiceError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Oracle,
    External,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub workspace: PathBuf,
    /// Package directory, or `sample` for the bundled one.
    pub package: String,
    pub vectors: PathBuf,
    pub parses: Option<PathBuf>,
    pub thresholds: Thresholds,
    pub edge_weights: EdgeWeights,
    pub tolerance: f64,
    pub ocr: Backend,
    pub ocr_cmd: Option<PathBuf>,
    pub detector: Backend,
    pub detector_cmd: Option<PathBuf>,
}

impl Config {
    /// Defaults for a workspace: bundled package, `vectors.txt` inside it.
    pub fn new(workspace: &Path) -> Self {
        Config {
            workspace: workspace.to_path_buf(),
            package: "sample".into(),
            vectors: workspace.join("vectors.txt"),
            parses: None,
            thresholds: Thresholds::default(),
            edge_weights: EdgeWeights::default(),
            tolerance: 0.0,
            ocr: Backend::Oracle,
            ocr_cmd: None,
            detector: Backend::Oracle,
            detector_cmd: None,
        }
    }
}

pub fn load_package_arg(package: &str) -> Result<DevicePackage> {
    if package == "sample" {
        Ok(sample_package())
    } else {
        load_package(Path::new(package)).map_err(|e| ServiceError::Validation(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SessionState {
    Idle,
    AwaitingDemoConsent { utterance: String, cluster: ClusterId },
    AwaitingVerification { utterance: String, cluster: ClusterId, canonical: String, similarity: f64 },
    Demonstrating { utterance: String, cluster: ClusterId, steps: usize },
    Learning { utterance: String },
    Executing { task_id: String },
}

impl SessionState {
    pub fn kind(&self) -> StateKind {
        match self {
            SessionState::Idle => StateKind::Idle,
            SessionState::AwaitingDemoConsent { .. } => StateKind::AwaitingDemoConsent,
            SessionState::AwaitingVerification { .. } => StateKind::AwaitingVerification,
            SessionState::Demonstrating { .. } => StateKind::Demonstrating,
            SessionState::Learning { .. } => StateKind::Learning,
            SessionState::Executing { .. } => StateKind::Executing,
        }
    }

    pub fn question(&self) -> Option<String> {
        match self {
            SessionState::AwaitingDemoConsent { .. } => Some(UNKNOWN_TASK_PROMPT.into()),
            SessionState::AwaitingVerification { canonical, .. } => Some(verification_question(canonical)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateKind {
    Idle,
    AwaitingDemoConsent,
    AwaitingVerification,
    Demonstrating,
    Learning,
    Executing,
}

impl StateKind {
    pub const ALL: [StateKind; 6] = [
        StateKind::Idle,
        StateKind::AwaitingDemoConsent,
        StateKind::AwaitingVerification,
        StateKind::Demonstrating,
        StateKind::Learning,
        StateKind::Executing,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
    Utterance,
    Consent,
    Verify,
    Event,
    EndDemo,
    Execute,
    Cancel,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Utterance,
        Command::Consent,
        Command::Verify,
        Command::Event,
        Command::EndDemo,
        Command::Execute,
        Command::Cancel,
    ];
}

/// The transition table.
pub fn allowed(state: StateKind, command: Command) -> bool {
    use Command as C;
    use StateKind as S;
    matches!(
        (state, command),
        (S::Idle, C::Utterance | C::Execute | C::Cancel)
            | (S::AwaitingDemoConsent, C::Consent | C::Cancel)
            | (S::AwaitingVerification, C::Verify | C::Cancel)
            | (S::Demonstrating, C::Event | C::EndDemo | C::Cancel)
    )
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Assignment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ExecutionReport>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub params: ParameterAssignment,
    /// Slots run with their demonstrated values.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub defaulted: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<TransitionOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterView {
    pub id: ClusterId,
    pub canonical: String,
    pub members: Vec<String>,
    pub task: Option<String>,
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn load_parses(path: &Path) -> Result<BTreeMap<String, ParsedUtterance>> {
    let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Other(format!("{}: {e}", path.display())))?;
    Ok(parse_conllu_corpus(&text)?
        .into_iter()
        .map(|(t, p)| (t.unwrap_or_else(|| p.text()).trim().to_lowercase(), p))
        .collect())
}

/// One workspace, one device, one dialogue.
pub struct Service {
    config: Config,
    ws: Workspace,
    pkg: Arc<DevicePackage>,
    device: SimDevice,
    detector: Box<dyn Detector>,
    ocr: Box<dyn Ocr>,
    vectors: Arc<WordVectors>,
    encoder: MeanEncoder,
    parses: BTreeMap<String, ParsedUtterance>,
    clusters: Clusters,
    state: SessionState,
    recording: Option<RecordingSession>,
    /// Cluster created by the pending flow, dropped if no task results.
    provisional: Option<ClusterId>,
}

impl Service {
    pub fn open(config: Config) -> Result<Self> {
        let pkg = Arc::new(load_package_arg(&config.package)?);
        let vectors = Arc::new(WordVectors::load(&config.vectors).map_err(|e| match e {
            NluError::Io(m) => ServiceError::Validation(format!("word vectors {}: {m}", config.vectors.display())),
            other => other.into(),
        })?);
        let parses = config.parses.as_deref().map(load_parses).transpose()?.unwrap_or_default();
        let detector: Box<dyn Detector> = match config.detector {
            Backend::Oracle => Box::new(OracleDetector::new(pkg.clone())),
            Backend::External => Box::new(ExternalDetector {
                program: config
                    .detector_cmd
                    .clone()
                    .ok_or_else(|| ServiceError::Validation("--detector-cmd is required".into()))?,
                args: Vec::new(),
            }),
        };
        let ocr: Box<dyn Ocr> = match config.ocr {
            Backend::Oracle => Box::new(OracleOcr::new(&pkg)),
            Backend::External => Box::new(ExternalOcr {
                program: config
                    .ocr_cmd
                    .clone()
                    .ok_or_else(|| ServiceError::Validation("--ocr-cmd is required".into()))?,
                args: Vec::new(),
            }),
        };
        let ws = Workspace::open(&config.workspace)?;
        let clusters = ws.load_clusters(Some(vectors.dim()))?;
        Ok(Service {
            device: SimDevice::new(pkg.clone()),
            encoder: MeanEncoder::new(vectors.clone()),
            config,
            ws,
            pkg,
            detector,
            ocr,
            vectors,
            parses,
            clusters,
            state: SessionState::Idle,
            recording: None,
            provisional: None,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn workspace(&self) -> &Workspace {
        &self.ws
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn device(&self) -> &SimDevice {
        &self.device
    }

    pub fn package(&self) -> &Arc<DevicePackage> {
        &self.pkg
    }

    pub fn clusters(&self) -> &Clusters {
        &self.clusters
    }

    pub fn cluster_views(&self) -> Vec<ClusterView> {
        self.clusters
            .clusters()
            .iter()
            .map(|c| ClusterView {
                id: c.id,
                canonical: c.canonical.text.clone(),
                members: c.members.iter().map(|m| m.text.clone()).collect(),
                task: c.script.clone(),
            })
            .collect()
    }

    pub fn screen_png(&self) -> Result<Vec<u8>> {
        self.device.screenshot().to_png().map_err(|e| ServiceError::Other(e.to_string()))
    }

    fn check(&self, command: Command) -> Result<()> {
        if allowed(self.state.kind(), command) {
            Ok(())
        } else {
            Err(ServiceError::State(format!("{command:?} is not allowed while {:?}", self.state.kind())))
        }
    }

    /// Parse from the configured CoNLL-U file, or a flat parse.
    pub fn parse_for(&self, utterance: &str) -> ParsedUtterance {
        self.parses.get(&utterance.trim().to_lowercase()).cloned().unwrap_or_else(|| ParsedUtterance::flat(utterance))
    }

    fn persist_clusters(&self) -> Result<()> {
        Ok(self.ws.save_clusters(&self.clusters)?)
    }

    fn drop_provisional(&mut self) {
        if let Some(id) = self.provisional.take() {
            let _ = self.clusters.remove(id);
        }
    }

    fn ask_for_demo(&mut self, utterance: &str, cluster: ClusterId, assignment: Option<Assignment>) -> Reply {
        self.state = SessionState::AwaitingDemoConsent { utterance: utterance.to_string(), cluster };
        Reply { message: UNKNOWN_TASK_PROMPT.into(), question: self.state.question(), assignment, ..Reply::default() }
    }

    pub fn handle_utterance(&mut self, text: &str) -> Result<Reply> {
        self.check(Command::Utterance)?;
        let utterance = text.trim();
        if utterance.is_empty() {
            return Err(ServiceError::Validation("empty utterance".into()));
        }
        let e = self.encoder.encode(utterance);
        let plan = self.clusters.plan(&e, &self.config.thresholds)?;
        match (plan.branch, plan.best) {
            (Branch::Hard, Some(id)) => {
                self.clusters.join(id, utterance, e)?;
                let assignment =
                    Assignment { kind: AssignmentKind::AssignedHard, cluster: id, similarity: plan.similarity };
                self.run_cluster(utterance, id, assignment)
            }
            (Branch::Soft, Some(id)) => {
                let canonical = self.clusters.get(id).map(|c| c.canonical.text.clone()).unwrap_or_default();
                self.state = SessionState::AwaitingVerification {
                    utterance: utterance.to_string(),
                    cluster: id,
                    canonical,
                    similarity: plan.similarity,
                };
                Ok(Reply {
                    message: self.state.question().unwrap_or_default(),
                    question: self.state.question(),
                    ..Reply::default()
                })
            }
            _ => {
                let id = self.clusters.create(utterance, e, self.parse_for(utterance))?;
                self.provisional = Some(id);
                let assignment =
                    Assignment { kind: AssignmentKind::NewCluster, cluster: id, similarity: plan.similarity };
                Ok(self.ask_for_demo(utterance, id, Some(assignment)))
            }
        }
    }

    pub fn verify(&mut self, accept: bool) -> Result<Reply> {
        self.check(Command::Verify)?;
        let SessionState::AwaitingVerification { utterance, cluster, similarity, .. } = self.state.clone() else {
            unreachable!("checked state")
        };
        let e = self.encoder.encode(&utterance);
        if accept {
            self.clusters.join(cluster, &utterance, e)?;
            self.state = SessionState::Idle;
            let assignment = Assignment { kind: AssignmentKind::AssignedAfterVerify, cluster, similarity };
            self.run_cluster(&utterance, cluster, assignment)
        } else {
            let id = self.clusters.create(&utterance, e, self.parse_for(&utterance))?;
            self.provisional = Some(id);
            let assignment = Assignment { kind: AssignmentKind::RejectedVerifyNewCluster, cluster: id, similarity };
            Ok(self.ask_for_demo(&utterance, id, Some(assignment)))
        }
    }

    pub fn consent(&mut self, accept: bool) -> Result<Reply> {
        self.check(Command::Consent)?;
        let SessionState::AwaitingDemoConsent { utterance, cluster } = self.state.clone() else {
            unreachable!("checked state")
        };
        if !accept {
            self.drop_provisional();
            self.state = SessionState::Idle;
            return Ok(Reply { message: "Okay, never mind.".into(), ..Reply::default() });
        }
        self.recording = Some(begin_demo(&mut self.device, &utterance)?);
        self.state = SessionState::Demonstrating { utterance, cluster, steps: 0 };
        Ok(Reply { message: "Recording. Show me, then end the demonstration.".into(), ..Reply::default() })
    }

    pub fn event(&mut self, event: InputEvent) -> Result<Reply> {
        self.check(Command::Event)?;
        if matches!(event, InputEvent::EndDemo) {
            return self.end_demo();
        }
        let rec = self.recording.as_mut().expect("recording while demonstrating");
        let outcome = rec.record_event(&mut self.device, event)?;
        let n = rec.steps().len();
        if let SessionState::Demonstrating { steps, .. } = &mut self.state {
            *steps = n;
        }
        Ok(Reply { message: format!("recorded step {}", n - 1), outcome: Some(outcome), ..Reply::default() })
    }

    pub fn end_demo(&mut self) -> Result<Reply> {
        self.check(Command::EndDemo)?;
        let SessionState::Demonstrating { utterance, cluster, .. } = self.state.clone() else {
            unreachable!("checked state")
        };
        let trace = {
            let rec = self.recording.as_mut().expect("recording while demonstrating");
            rec.end_demo(&mut self.device)
        };
        self.recording = None;
        let trace = match trace {
            Ok(t) => t,
            Err(e) => {
                self.drop_provisional();
                self.state = SessionState::Idle;
                return Err(e.into());
            }
        };
        self.state = SessionState::Learning { utterance: utterance.clone() };
        let result = self.learn_into(&trace, cluster);
        self.state = SessionState::Idle;
        match result {
            Ok(reply) => Ok(reply),
            Err(e) => {
                self.drop_provisional();
                Err(e)
            }
        }
    }

    /// Saves the trace, learns a script and attaches it to the cluster.
    fn learn_into(&mut self, trace: &DemoTrace, cluster: ClusterId) -> Result<Reply> {
        let trace_id = self.ws.next_id("traces", "trace")?;
        self.ws.save_trace(&trace_id, trace)?;
        let (record, script) = self.learn_trace(trace, cluster, &trace_id)?;
        self.provisional = None;
        self.persist_clusters()?;
        Ok(Reply {
            message: format!("Learned {} with {} steps.", record.task_id, script.steps.len()),
            task_id: Some(record.task_id),
            trace_id: Some(trace_id),
            params: script.slots.clone(),
            ..Reply::default()
        })
    }

    fn learn_trace(
        &mut self,
        trace: &DemoTrace,
        cluster: ClusterId,
        trace_id: &str,
    ) -> Result<(TaskRecord, AutomationScript)> {
        if trace.package_id != self.pkg.id() {
            return Err(ServiceError::Validation(format!(
                "trace was recorded on package '{}', not '{}'",
                trace.package_id,
                self.pkg.id()
            )));
        }
        let script = learn(trace, &*self.detector, &*self.ocr, &self.pkg)
            .map_err(|e| ServiceError::Validation(e.to_string()))?;
        let parse = self.parse_for(&trace.utterance);
        let tokens: Vec<String> = parse.tokens.iter().map(|t| t.surface.clone()).collect();
        let boot = bootstrap_on_tokens(&tokens, &script.artifacts());
        let mut script = parameterize(&script, &boot).map_err(|e| ServiceError::Validation(e.to_string()))?;
        script.task_id = self.ws.next_id("tasks", "task")?;
        let record = TaskRecord {
            task_id: script.task_id.clone(),
            cluster_id: cluster,
            script: String::new(),
            created_at: now_secs(),
            package_id: script.package_id.clone(),
            trace: Some(format!("traces/{trace_id}")),
        };
        let record = self.ws.save_task(&record, &script)?;
        self.clusters.set_script(cluster, Some(record.task_id.clone()))?;
        self.clusters.set_canonical_analysis(cluster, parse, boot.into_iter().map(|b| b.binding).collect())?;
        Ok((record, script))
    }

    /// Learns a saved trace as a new task for its utterance (CLI `learn`).
    pub fn learn_saved_trace(&mut self, trace_id: &str) -> Result<Reply> {
        self.check(Command::Utterance)?;
        let trace = self.ws.load_trace(trace_id)?;
        let e = self.encoder.encode(&trace.utterance);
        let cluster = self.clusters.create(&trace.utterance, e, self.parse_for(&trace.utterance))?;
        self.provisional = Some(cluster);
        match self.learn_trace(&trace, cluster, trace_id) {
            Ok((record, script)) => {
                self.provisional = None;
                self.persist_clusters()?;
                Ok(Reply {
                    message: format!("Learned {} with {} steps.", record.task_id, script.steps.len()),
                    task_id: Some(record.task_id),
                    trace_id: Some(trace_id.to_string()),
                    params: script.slots,
                    ..Reply::default()
                })
            }
            Err(e) => {
                self.drop_provisional();
                Err(e)
            }
        }
    }

    pub fn cancel(&mut self) -> Result<Reply> {
        self.check(Command::Cancel)?;
        if let Some(rec) = self.recording.take() {
            rec.abandon(&mut self.device);
        }
        self.drop_provisional();
        self.state = SessionState::Idle;
        Ok(Reply { message: "Cancelled.".into(), ..Reply::default() })
    }

    /// Predicts parameters for a matched utterance and runs the cluster's
    /// task.
    fn run_cluster(&mut self, utterance: &str, cluster: ClusterId, assignment: Assignment) -> Result<Reply> {
        self.persist_clusters()?;
        let c = self.clusters.get(cluster).ok_or_else(|| ServiceError::NotFound(format!("cluster {cluster}")))?.clone();
        let Some(task_id) = c.script.clone() else {
            return Ok(self.ask_for_demo(utterance, cluster, Some(assignment)));
        };
        let params = if c.canonical.bindings.is_empty() {
            ParameterAssignment::new()
        } else {
            let new_parse = self.parse_for(utterance);
            let predicted = predict_parameters(
                &c.canonical.parse,
                &c.canonical.bindings,
                &new_parse,
                &self.vectors,
                &self.config.edge_weights,
            )?;
            let mut params = ParameterAssignment::new();
            for b in predicted {
                params.entry(b.slot).or_insert(b.value);
            }
            params
        };
        let mut reply = self.run_task(&task_id, &params)?;
        reply.assignment = Some(assignment);
        Ok(reply)
    }

    /// Runs a stored task. Unknown slots are a validation error; missing
    /// ones keep their demonstrated values.
    pub fn execute(&mut self, task_id: &str, params: &ParameterAssignment) -> Result<Reply> {
        self.check(Command::Execute)?;
        self.run_task(task_id, params)
    }

    fn run_task(&mut self, task_id: &str, params: &ParameterAssignment) -> Result<Reply> {
        let (_, script) = self.ws.load_task(task_id)?;
        if script.package_id != self.pkg.id() {
            return Err(ServiceError::Validation(format!(
                "{task_id} was learned on package '{}', not '{}'",
                script.package_id,
                self.pkg.id()
            )));
        }
        if let Some(k) = params.keys().find(|k| !script.slots.contains_key(*k)) {
            return Err(ServiceError::Validation(format!("{task_id} has no slot '{k}'")));
        }
        let defaulted: Vec<String> = script.slots.keys().filter(|k| !params.contains_key(*k)).cloned().collect();
        let full = complete_assignment(&script, params);
        self.state = SessionState::Executing { task_id: task_id.to_string() };
        let exec = Executor {
            detector: &*self.detector,
            ocr: &*self.ocr,
            config: ExecConfig { tolerance: self.config.tolerance, ..ExecConfig::default() },
        };
        let report = exec.execute_script(&mut self.device, &script, &full);
        self.state = SessionState::Idle;
        let report = report.map_err(|e| ServiceError::Validation(e.to_string()))?;
        let report_id = self.ws.next_id("reports", "run")?;
        self.ws.save_report(&report_id, &report)?;
        let mut message = if report.success {
            format!("Done: {task_id} finished on screen '{}'.", report.final_screen)
        } else {
            format!("{task_id} failed at step {}.", report.steps.last().map_or(0, |s| s.index))
        };
        if !defaulted.is_empty() {
            message.push_str(&format!(" Using demonstrated values for {}.", defaulted.join(", ")));
        }
        Ok(Reply {
            message,
            task_id: Some(task_id.to_string()),
            report_id: Some(report_id),
            report: Some(report),
            params: full,
            defaulted,
            ..Reply::default()
        })
    }

    pub fn tasks(&self) -> Result<Vec<TaskRecord>> {
        Ok(self.ws.list_tasks()?)
    }

    pub fn report(&self, id: &str) -> Result<ExecutionReport> {
        Ok(self.ws.load_report(id)?)
    }
}
