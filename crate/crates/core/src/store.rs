//! On-disk formats and the workspace directory.
//!
//! ```text
//! <root>/workspace.lock
//! <root>/tasks/<id>/task.json
//! <root>/tasks/<id>/script/{script.json, templates/NNNN.png}
//! <root>/traces/<id>/{trace.json, steps/NNNN.png}
//! <root>/clusters/clusters.json
//! <root>/packages/<package id>/...
//! <root>/reports/<id>.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::device::InputEvent;
use crate::executor::ExecutionReport;
use crate::learner::{is_zero, AutomationScript, ScriptStep, SlotSpan, SwipeDirection, TapKind};
use crate::nlu::{ClusterId, ClusterStore};
use crate::perception::UIElementObservation;
use crate::recorder::{DemoStep, DemoTrace};
use crate::scalar::Scalar;
use crate::vision::{Image, Rect};

pub const FORMAT_VERSION: u32 = 1;
pub const LOCK_FILE: &str = "workspace.lock";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: format version {found}, expected {expected}")]
    Version { path: PathBuf, found: u32, expected: u32 },
    #[error("{path}: checksum mismatch")]
    Checksum { path: PathBuf },
    #[error("invalid content: {0}")]
    Validation(String),
    #[error("embedding dimension {found} does not match the configured {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("workspace {0} is locked by another process (remove {LOCK_FILE} if none is running)")]
    Locked(PathBuf),
    #[error("not found: {0}")]
    NotFound(String),
}

type Result<T> = std::result::Result<T, StoreError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |e| StoreError::Io { path: path.to_path_buf(), message: e.to_string() }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => StoreError::NotFound(path.display().to_string()),
        _ => io_err(path)(e),
    })
}

fn to_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

fn from_json<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| StoreError::Format { path: path.to_path_buf(), message: e.to_string() })
}

fn check_version(path: &Path, found: u32) -> Result<()> {
    if found == FORMAT_VERSION {
        Ok(())
    } else {
        Err(StoreError::Version { path: path.to_path_buf(), found, expected: FORMAT_VERSION })
    }
}

/// Replaces the directory's contents atomically enough for a single writer:
/// builds next to it, then swaps.
fn replace_dir(dir: &Path, build: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let parent = dir.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = parent.join(format!(".{name}.tmp"));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(io_err(&tmp))?;
    }
    fs::create_dir_all(&tmp).map_err(io_err(&tmp))?;
    build(&tmp)?;
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::rename(&tmp, dir).map_err(io_err(dir))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRef {
    pub path: String,
    pub sha256: String,
}

fn save_image(root: &Path, rel: String, img: &Image) -> Result<ImageRef> {
    let bytes = img.to_png().map_err(|e| StoreError::Validation(e.to_string()))?;
    write(&root.join(&rel), &bytes)?;
    Ok(ImageRef { sha256: sha256_hex(&bytes), path: rel })
}

fn load_image(root: &Path, r: &ImageRef) -> Result<Image> {
    if r.path.contains("..") || Path::new(&r.path).is_absolute() {
        return Err(StoreError::Validation(format!("image path '{}' leaves the archive", r.path)));
    }
    let path = root.join(&r.path);
    let bytes = read(&path)?;
    if bytes.is_empty() {
        return Err(StoreError::Validation(format!("{}: empty image", r.path)));
    }
    if sha256_hex(&bytes) != r.sha256 {
        return Err(StoreError::Checksum { path });
    }
    Image::from_png(&bytes).map_err(|e| StoreError::Format { path, message: e.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum StepRecord {
    AppStart {
        app: String,
    },
    StaticTap {
        kind: TapKind,
        x: u32,
        y: u32,
        duration_ms: u32,
    },
    TypeText {
        text: String,
        slots: Vec<SlotSpan>,
        #[serde(default, skip_serializing_if = "is_zero")]
        erase: usize,
    },
    ElementInteraction {
        kind: TapKind,
        duration_ms: u32,
        rect: Rect,
        text: String,
        template: ImageRef,
        click_offset: (u32, u32),
        slot: Option<SlotSpan>,
    },
    DirectionalSwipe {
        direction: SwipeDirection,
        x1: u32,
        y1: u32,
        x2: u32,
        y2: u32,
        duration_ms: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScriptBody {
    task_id: String,
    utterance: String,
    package_id: String,
    steps: Vec<StepRecord>,
    sources: Vec<Vec<usize>>,
    slots: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScriptFile {
    format_version: u32,
    checksum: String,
    body: ScriptBody,
}

fn body_checksum(body: &ScriptBody) -> String {
    sha256_hex(&serde_json::to_vec(body).expect("serializable"))
}

pub const SCRIPT_FILE: &str = "script.json";

/// Writes a script archive directory: `script.json` plus one PNG per
/// element template.
pub fn save_script(script: &AutomationScript, dir: &Path) -> Result<PathBuf> {
    script.validate().map_err(|e| StoreError::Validation(e.to_string()))?;
    replace_dir(dir, |tmp| {
        let mut steps = Vec::with_capacity(script.steps.len());
        for (k, step) in script.steps.iter().enumerate() {
            steps.push(match step.clone() {
                ScriptStep::AppStart { app } => StepRecord::AppStart { app },
                ScriptStep::StaticTap { kind, x, y, duration_ms } => StepRecord::StaticTap { kind, x, y, duration_ms },
                ScriptStep::TypeText { text, slots, erase } => StepRecord::TypeText { text, slots, erase },
                ScriptStep::ElementInteraction { kind, duration_ms, signature, click_offset, slot } => {
                    let template = save_image(tmp, format!("templates/{k:04}.png"), &signature.template)?;
                    StepRecord::ElementInteraction {
                        kind,
                        duration_ms,
                        rect: signature.rect,
                        text: signature.text,
                        template,
                        click_offset,
                        slot,
                    }
                }
                ScriptStep::DirectionalSwipe { direction, x1, y1, x2, y2, duration_ms } => {
                    StepRecord::DirectionalSwipe { direction, x1, y1, x2, y2, duration_ms }
                }
            });
        }
        let body = ScriptBody {
            task_id: script.task_id.clone(),
            utterance: script.utterance.clone(),
            package_id: script.package_id.clone(),
            steps,
            sources: script.sources.clone(),
            slots: script.slots.clone(),
        };
        let file = ScriptFile { format_version: FORMAT_VERSION, checksum: body_checksum(&body), body };
        write(&tmp.join(SCRIPT_FILE), &to_pretty(&file))
    })?;
    Ok(dir.join(SCRIPT_FILE))
}

/// Reads a script archive, checking version, checksums and invariants.
pub fn load_script(dir: &Path) -> Result<AutomationScript> {
    let path = dir.join(SCRIPT_FILE);
    let bytes = read(&path)?;
    let header: serde_json::Value = from_json(&path, &bytes)?;
    let version = header.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0);
    check_version(&path, u32::try_from(version).unwrap_or(0))?;
    let file: ScriptFile = from_json(&path, &bytes)?;
    if body_checksum(&file.body) != file.checksum {
        return Err(StoreError::Checksum { path });
    }
    let body = file.body;
    let mut steps = Vec::with_capacity(body.steps.len());
    for record in body.steps {
        steps.push(match record {
            StepRecord::AppStart { app } => ScriptStep::AppStart { app },
            StepRecord::StaticTap { kind, x, y, duration_ms } => ScriptStep::StaticTap { kind, x, y, duration_ms },
            StepRecord::TypeText { text, slots, erase } => ScriptStep::TypeText { text, slots, erase },
            StepRecord::ElementInteraction { kind, duration_ms, rect, text, template, click_offset, slot } => {
                let template = load_image(dir, &template)?;
                ScriptStep::ElementInteraction {
                    kind,
                    duration_ms,
                    signature: UIElementObservation { rect, template, text },
                    click_offset,
                    slot,
                }
            }
            StepRecord::DirectionalSwipe { direction, x1, y1, x2, y2, duration_ms } => {
                ScriptStep::DirectionalSwipe { direction, x1, y1, x2, y2, duration_ms }
            }
        });
    }
    let script = AutomationScript {
        task_id: body.task_id,
        utterance: body.utterance,
        package_id: body.package_id,
        steps,
        sources: body.sources,
        slots: body.slots,
    };
    script.validate().map_err(|e| StoreError::Validation(e.to_string()))?;
    Ok(script)
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceStepRecord {
    index: usize,
    timestamp_ms: u64,
    event: InputEvent,
    screenshot: ImageRef,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceFile {
    format_version: u32,
    utterance: String,
    package_id: String,
    steps: Vec<TraceStepRecord>,
}

pub const TRACE_FILE: &str = "trace.json";

pub fn save_trace(trace: &DemoTrace, dir: &Path) -> Result<PathBuf> {
    trace.validate().map_err(|e| StoreError::Validation(e.to_string()))?;
    replace_dir(dir, |tmp| {
        let mut steps = Vec::with_capacity(trace.steps.len());
        for s in &trace.steps {
            steps.push(TraceStepRecord {
                index: s.index,
                timestamp_ms: s.timestamp_ms,
                event: s.event.clone(),
                screenshot: save_image(tmp, format!("steps/{:04}.png", s.index), &s.pre_screenshot)?,
            });
        }
        let file = TraceFile {
            format_version: FORMAT_VERSION,
            utterance: trace.utterance.clone(),
            package_id: trace.package_id.clone(),
            steps,
        };
        write(&tmp.join(TRACE_FILE), &to_pretty(&file))
    })?;
    Ok(dir.join(TRACE_FILE))
}

pub fn load_trace(dir: &Path) -> Result<DemoTrace> {
    let path = dir.join(TRACE_FILE);
    let bytes = read(&path)?;
    let file: TraceFile = from_json(&path, &bytes)?;
    check_version(&path, file.format_version)?;
    let mut steps = Vec::with_capacity(file.steps.len());
    for s in file.steps {
        steps.push(DemoStep {
            index: s.index,
            pre_screenshot: load_image(dir, &s.screenshot)?,
            event: s.event,
            timestamp_ms: s.timestamp_ms,
        });
    }
    let trace = DemoTrace { utterance: file.utterance, package_id: file.package_id, steps };
    trace.validate().map_err(|e| StoreError::Validation(e.to_string()))?;
    Ok(trace)
}

#[derive(Serialize, Deserialize)]
struct ClusterFile<T> {
    format_version: u32,
    #[serde(flatten)]
    store: ClusterStore<T>,
}

pub fn save_clusters<T: Scalar + Serialize>(store: &ClusterStore<T>, path: &Path) -> Result<()> {
    write(path, &to_pretty(&ClusterFile { format_version: FORMAT_VERSION, store: store.clone() }))
}

/// Loads clusters, rejecting embeddings whose size differs from
/// `expected_dim` when given.
pub fn load_clusters<T: Scalar + DeserializeOwned>(
    path: &Path,
    expected_dim: Option<usize>,
) -> Result<ClusterStore<T>> {
    let bytes = read(path)?;
    let header: serde_json::Value = from_json(path, &bytes)?;
    let version = header.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0);
    check_version(path, u32::try_from(version).unwrap_or(0))?;
    let file: ClusterFile<T> = from_json(path, &bytes)?;
    let s = file.store;
    let store = ClusterStore::from_parts(s.dim, s.mode, s.next_id, s.clusters)
        .map_err(|e| StoreError::Format { path: path.to_path_buf(), message: e.to_string() })?;
    if let (Some(expected), Some(found)) = (expected_dim, store.dim()) {
        if expected != found {
            return Err(StoreError::Dimension { expected, found });
        }
    }
    Ok(store)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub cluster_id: ClusterId,
    /// Script archive, relative to the workspace root.
    pub script: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub package_id: String,
    /// Trace the script was learned from, relative to the workspace root.
    pub trace: Option<String>,
}

/// Exclusive handle on a workspace directory. The lock file is removed on
/// drop.
#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    lock: PathBuf,
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

const DIRS: [&str; 5] = ["tasks", "traces", "clusters", "packages", "reports"];

fn valid_id(id: &str) -> Result<()> {
    if !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        Ok(())
    } else {
        Err(StoreError::Validation(format!("'{id}' is not a valid identifier")))
    }
}

impl Workspace {
    /// Creates the layout if needed and takes the lock.
    pub fn open(root: &Path) -> Result<Self> {
        for d in DIRS {
            let p = root.join(d);
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        let lock = root.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                use std::io::Write;
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => return Err(StoreError::Locked(root.to_path_buf())),
            Err(e) => return Err(io_err(&lock)(e)),
        }
        Ok(Workspace { root: root.to_path_buf(), lock })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn packages_dir(&self) -> PathBuf {
        self.root.join("packages")
    }

    pub fn package_dir(&self, id: &str) -> PathBuf {
        self.packages_dir().join(id)
    }

    pub fn clusters_path(&self) -> PathBuf {
        self.root.join("clusters").join("clusters.json")
    }

    fn ids_in(&self, dir: &str) -> Result<Vec<String>> {
        let p = self.root.join(dir);
        let mut ids: Vec<String> = fs::read_dir(&p)
            .map_err(io_err(&p))?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| !n.starts_with('.'))
            .map(|n| n.trim_end_matches(".json").to_string())
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Next unused id of the form `<prefix>-NNNN` in a top-level directory.
    pub fn next_id(&self, dir: &str, prefix: &str) -> Result<String> {
        let used = self.ids_in(dir)?;
        let n = used
            .iter()
            .filter_map(|id| id.strip_prefix(prefix)?.strip_prefix('-')?.parse::<u64>().ok())
            .max()
            .map_or(1, |m| m + 1);
        Ok(format!("{prefix}-{n:04}"))
    }

    pub fn save_clusters<T: Scalar + Serialize>(&self, store: &ClusterStore<T>) -> Result<()> {
        save_clusters(store, &self.clusters_path())
    }

    /// Loads clusters, or an empty store when none were saved yet.
    pub fn load_clusters<T: Scalar + DeserializeOwned>(&self, expected_dim: Option<usize>) -> Result<ClusterStore<T>> {
        match load_clusters(&self.clusters_path(), expected_dim) {
            Err(StoreError::NotFound(_)) => Ok(ClusterStore::default()),
            other => other,
        }
    }

    pub fn trace_dir(&self, id: &str) -> PathBuf {
        self.root.join("traces").join(id)
    }

    pub fn save_trace(&self, id: &str, trace: &DemoTrace) -> Result<PathBuf> {
        valid_id(id)?;
        save_trace(trace, &self.trace_dir(id))
    }

    pub fn load_trace(&self, id: &str) -> Result<DemoTrace> {
        valid_id(id)?;
        load_trace(&self.trace_dir(id))
    }

    pub fn trace_ids(&self) -> Result<Vec<String>> {
        self.ids_in("traces")
    }

    fn task_dir(&self, id: &str) -> PathBuf {
        self.root.join("tasks").join(id)
    }

    /// Stores the script and its record; the record's script path is set
    /// to the archive location.
    pub fn save_task(&self, record: &TaskRecord, script: &AutomationScript) -> Result<TaskRecord> {
        valid_id(&record.task_id)?;
        if script.task_id != record.task_id {
            return Err(StoreError::Validation(format!(
                "script belongs to '{}', not '{}'",
                script.task_id, record.task_id
            )));
        }
        let dir = self.task_dir(&record.task_id);
        save_script(script, &dir.join("script"))?;
        let record = TaskRecord { script: format!("tasks/{}/script", record.task_id), ..record.clone() };
        write(&dir.join("task.json"), &to_pretty(&record))?;
        Ok(record)
    }

    pub fn load_task_record(&self, id: &str) -> Result<TaskRecord> {
        valid_id(id)?;
        let path = self.task_dir(id).join("task.json");
        from_json(&path, &read(&path)?)
    }

    pub fn load_task(&self, id: &str) -> Result<(TaskRecord, AutomationScript)> {
        let record = self.load_task_record(id)?;
        if record.script.contains("..") {
            return Err(StoreError::Validation(format!("script path '{}' leaves the workspace", record.script)));
        }
        let script = load_script(&self.root.join(&record.script))?;
        Ok((record, script))
    }

    pub fn list_tasks(&self) -> Result<Vec<TaskRecord>> {
        self.ids_in("tasks")?.iter().map(|id| self.load_task_record(id)).collect()
    }

    pub fn remove_task(&self, id: &str) -> Result<()> {
        valid_id(id)?;
        let dir = self.task_dir(id);
        fs::remove_dir_all(&dir).map_err(io_err(&dir))
    }

    pub fn report_path(&self, id: &str) -> PathBuf {
        self.root.join("reports").join(format!("{id}.json"))
    }

    pub fn save_report(&self, id: &str, report: &ExecutionReport) -> Result<PathBuf> {
        valid_id(id)?;
        let path = self.report_path(id);
        write(&path, &to_pretty(report))?;
        Ok(path)
    }

    pub fn load_report(&self, id: &str) -> Result<ExecutionReport> {
        valid_id(id)?;
        let path = self.report_path(id);
        from_json(&path, &read(&path)?)
    }

    pub fn report_ids(&self) -> Result<Vec<String>> {
        self.ids_in("reports")
    }
}
