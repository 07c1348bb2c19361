//! The `showme` command line.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use showme_core::device::sample::{sample_demos, sample_package};
use showme_core::device::{InputEvent, SimDevice};
use showme_core::executor::ParameterAssignment;
use showme_core::nlu::Thresholds;
use showme_core::recorder::record_events;
use showme_core::store::Workspace;
use showme_core::EdgeWeights;

use crate::corpus::{eval_clustering, eval_params, Corpus};
use crate::session::{load_package_arg, Backend, Config, Reply, Service, ServiceError, SessionState};
use crate::SAMPLE_VECTORS;

#[derive(Debug, Parser)]
#[command(name = "showme", version, about = "Teach a simulated phone a task by showing it once.")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Args)]
pub struct Global {
    #[arg(long, global = true, env = "SHOWME_WORKSPACE", default_value = "showme-workspace")]
    pub workspace: PathBuf,
    /// Device package directory, or `sample`.
    #[arg(long, global = true, env = "SHOWME_PACKAGE", default_value = "sample")]
    pub package: String,
    /// Word vectors (`word v1 v2 ...` per line). Defaults to `<workspace>/vectors.txt`.
    #[arg(long, global = true, env = "SHOWME_VECTORS")]
    pub vectors: Option<PathBuf>,
    /// CoNLL-U parses for known utterances.
    #[arg(long, global = true, env = "SHOWME_PARSES")]
    pub parses: Option<PathBuf>,
    #[arg(long, global = true, env = "SHOWME_T_HARD", default_value_t = 0.7)]
    pub t_hard: f64,
    #[arg(long, global = true, env = "SHOWME_T_SOFT", default_value_t = 0.6)]
    pub t_soft: f64,
    /// Parameter alignment weights: vector, lemma, tag and dependency label.
    #[arg(long, global = true, env = "SHOWME_EDGE_WEIGHTS", value_parser = parse_weights, default_value = "0.25,0.25,0.25,0.25")]
    pub edge_weights: EdgeWeights,
    /// Largest mean squared pixel difference accepted as a template match.
    #[arg(long, global = true, env = "SHOWME_TOLERANCE", default_value_t = 0.0)]
    pub tolerance: f64,
    #[arg(long, global = true, env = "SHOWME_OCR", value_enum, default_value = "oracle")]
    pub ocr: Backend,
    #[arg(long, global = true, env = "SHOWME_OCR_CMD")]
    pub ocr_cmd: Option<PathBuf>,
    #[arg(long, global = true, env = "SHOWME_DETECTOR", value_enum, default_value = "oracle")]
    pub detector: Backend,
    #[arg(long, global = true, env = "SHOWME_DETECTOR_CMD")]
    pub detector_cmd: Option<PathBuf>,
    /// Print replies as JSON.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Answer {
    Yes,
    No,
    Ask,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Create a workspace with the sample word vectors and demo event files.
    Init,
    /// Record a demonstration from an event file (JSON array or JSON lines).
    Record {
        #[arg(long)]
        utterance: String,
        #[arg(long)]
        events: PathBuf,
    },
    /// Learn a task from a recorded trace.
    Learn {
        trace: String,
    },
    /// Say something; runs a known task or asks for a demonstration.
    Utter {
        text: String,
        /// Answer to a clarification question.
        #[arg(long, value_enum, default_value = "ask")]
        answer: Answer,
        /// Events to demonstrate with if the task is unknown.
        #[arg(long)]
        demo: Option<PathBuf>,
    },
    /// Run a task with parameter values.
    Run {
        task: String,
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, String)>,
    },
    /// List tasks and clusters.
    List,
    EvalClustering {
        corpus: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    EvalParams {
        corpus: PathBuf,
    },
    PackageValidate {
        dir: PathBuf,
    },
    /// Write the bundled sample package to a directory.
    PackageSample {
        dir: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "SHOWME_ADDR", default_value = "127.0.0.1:7878")]
        addr: SocketAddr,
    },
}

fn parse_weights(s: &str) -> Result<EdgeWeights, String> {
    let v: Vec<f64> =
        s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"))).collect::<Result<_, _>>()?;
    match v[..] {
        [cosine, lemma, pos, dep] if v.iter().all(|w| w.is_finite() && *w >= 0.0) => {
            Ok(EdgeWeights { cosine, lemma, pos, dep })
        }
        _ => Err(format!("expected four non-negative weights, got '{s}'")),
    }
}

fn parse_param(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.to_string()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected slot=value, got '{s}'"))
}

impl Global {
    pub fn config(&self) -> Result<Config, ServiceError> {
        let thresholds = Thresholds::new(self.t_hard, self.t_soft)?;
        Ok(Config {
            workspace: self.workspace.clone(),
            package: self.package.clone(),
            vectors: self.vectors.clone().unwrap_or_else(|| self.workspace.join("vectors.txt")),
            parses: self.parses.clone(),
            thresholds,
            edge_weights: self.edge_weights,
            tolerance: self.tolerance,
            ocr: self.ocr,
            ocr_cmd: self.ocr_cmd.clone(),
            detector: self.detector,
            detector_cmd: self.detector_cmd.clone(),
        })
    }
}

/// Reads events from a JSON array or one JSON object per line.
pub fn read_events(path: &Path) -> Result<Vec<InputEvent>, ServiceError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ServiceError::Validation(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| ServiceError::Validation(format!("{}: {e}", path.display()));
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(bad);
    }
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(bad)).collect()
}

struct Out {
    json: bool,
}

impl Out {
    fn reply(&self, r: &Reply) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(r).expect("serializable"));
            return;
        }
        println!("{}", r.message);
        if let Some(report) = &r.report {
            for s in &report.steps {
                println!(
                    "  step {:>2} {:<20} {}",
                    s.index,
                    s.step,
                    serde_json::to_string(&s.outcome).expect("serializable")
                );
            }
        }
    }

    fn line(&self, text: &str) {
        if !self.json {
            println!("{text}");
        }
    }
}

fn report_path(svc: &Service, r: &Reply) -> Option<PathBuf> {
    r.report_id.as_ref().map(|id| svc.workspace().report_path(id))
}

fn finish_run(svc: &Service, r: &Reply, out: &Out) -> Result<(), ServiceError> {
    out.reply(r);
    if let Some(p) = report_path(svc, r) {
        out.line(&format!("report: {}", p.display()));
    }
    match &r.report {
        Some(rep) if !rep.success => Err(ServiceError::Execution(r.message.clone())),
        _ => Ok(()),
    }
}

fn ask(question: &str) -> Result<bool, ServiceError> {
    eprint!("{question} [y/n] ");
    let mut line = String::new();
    let n = std::io::stdin().lock().read_line(&mut line).map_err(|e| ServiceError::Other(e.to_string()))?;
    if n == 0 {
        return Err(ServiceError::State(format!("{question} (no answer; pass --answer yes|no)")));
    }
    Ok(matches!(line.trim().to_lowercase().as_str(), "y" | "yes"))
}

fn utter(svc: &mut Service, text: &str, answer: Answer, demo: Option<&Path>, out: &Out) -> Result<(), ServiceError> {
    let mut reply = svc.handle_utterance(text)?;
    if let SessionState::AwaitingVerification { canonical, .. } = svc.state().clone() {
        out.reply(&reply);
        let yes = match answer {
            Answer::Yes => true,
            Answer::No => false,
            Answer::Ask => match ask(&crate::session::verification_question(&canonical)) {
                Ok(a) => a,
                Err(e) => {
                    svc.cancel()?;
                    return Err(e);
                }
            },
        };
        reply = svc.verify(yes)?;
    }
    if matches!(svc.state(), SessionState::AwaitingDemoConsent { .. }) {
        out.reply(&reply);
        let Some(demo) = demo else {
            svc.cancel()?;
            out.line("(pass --demo <events> to demonstrate)");
            return Ok(());
        };
        let events = read_events(demo)?;
        svc.consent(true)?;
        for e in events {
            if let Err(err) = svc.event(e) {
                svc.cancel()?;
                return Err(err);
            }
        }
        let learned = svc.end_demo()?;
        out.reply(&learned);
        return Ok(());
    }
    finish_run(svc, &reply, out)
}

fn run_verb(cli: Cli) -> Result<(), ServiceError> {
    let out = Out { json: cli.global.json };
    match cli.verb {
        Verb::Init => {
            let ws = Workspace::open(&cli.global.workspace)?;
            let root = ws.root().to_path_buf();
            let write = |rel: &str, text: &str| -> Result<(), ServiceError> {
                let path = root.join(rel);
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir).map_err(|e| ServiceError::Other(e.to_string()))?;
                }
                if !path.exists() {
                    std::fs::write(&path, text).map_err(|e| ServiceError::Other(format!("{}: {e}", path.display())))?;
                }
                Ok(())
            };
            write("vectors.txt", SAMPLE_VECTORS)?;
            for (name, demo) in ["message", "pizza", "school", "contact"].into_iter().zip(sample_demos()) {
                let lines: String =
                    demo.events.iter().map(|e| serde_json::to_string(e).expect("serializable") + "\n").collect();
                write(&format!("demos/{name}.jsonl"), &lines)?;
                write(&format!("demos/{name}.txt"), &format!("{}\n", demo.utterance))?;
            }
            out.line(&format!("initialized {}", root.display()));
            Ok(())
        }
        Verb::Record { utterance, events } => {
            let events = read_events(&events)?;
            let pkg = Arc::new(load_package_arg(&cli.global.package)?);
            let ws = Workspace::open(&cli.global.workspace)?;
            let trace = record_events(&mut SimDevice::new(pkg), &utterance, &events)?;
            let id = ws.next_id("traces", "trace")?;
            let path = ws.save_trace(&id, &trace)?;
            out.reply(&Reply { message: format!("{id} {}", path.display()), trace_id: Some(id), ..Reply::default() });
            Ok(())
        }
        Verb::Learn { trace } => {
            let mut svc = Service::open(cli.global.config()?)?;
            out.reply(&svc.learn_saved_trace(&trace)?);
            Ok(())
        }
        Verb::Utter { text, answer, demo } => {
            let mut svc = Service::open(cli.global.config()?)?;
            utter(&mut svc, &text, answer, demo.as_deref(), &out)
        }
        Verb::Run { task, params } => {
            let mut svc = Service::open(cli.global.config()?)?;
            let params: ParameterAssignment = params.into_iter().collect();
            let r = svc.execute(&task, &params)?;
            finish_run(&svc, &r, &out)
        }
        Verb::List => {
            let svc = Service::open(cli.global.config()?)?;
            let tasks = svc.tasks()?;
            let clusters = svc.cluster_views();
            if out.json {
                println!("{}", serde_json::json!({ "tasks": tasks, "clusters": clusters }));
                return Ok(());
            }
            for t in tasks {
                println!("{}  cluster {}  package {}", t.task_id, t.cluster_id, t.package_id);
            }
            for c in clusters {
                println!(
                    "cluster {}  '{}'  {} utterances  task {}",
                    c.id,
                    c.canonical,
                    c.members.len(),
                    c.task.unwrap_or("-".into())
                );
            }
            Ok(())
        }
        Verb::EvalClustering { corpus, seed } => {
            let corpus = Corpus::load(&corpus)?;
            let th = Thresholds::new(cli.global.t_hard, cli.global.t_soft)?;
            let r = eval_clustering(&corpus, &th, seed)?;
            if out.json {
                println!("{}", serde_json::to_string(&r).expect("serializable"));
            } else {
                println!(
                    "ARI {:.6}  utterances {}  clusters {}  verifications {}",
                    r.ari, r.utterances, r.clusters, r.verifications
                );
            }
            Ok(())
        }
        Verb::EvalParams { corpus } => {
            let corpus = Corpus::load(&corpus)?;
            let r = eval_params(&corpus, &cli.global.edge_weights)?;
            if out.json {
                println!("{}", serde_json::to_string(&r).expect("serializable"));
                return Ok(());
            }
            println!("{:<48} {:<24} gold", "utterance", "predicted");
            let show = |b: &[showme_core::nlu::ParameterBinding]| {
                let m: BTreeMap<_, _> = b.iter().map(|b| (b.slot.as_str(), b.value.as_str())).collect();
                m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
            };
            for (text, pred, gold) in &r.rows {
                println!("{text:<48} {:<24} {}", show(pred), show(gold));
            }
            let s = &r.scores;
            println!(
                "exact {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}  ({} utterances)",
                s.exact_accuracy, s.word_precision, s.word_recall, s.word_f1, r.evaluated
            );
            Ok(())
        }
        Verb::PackageValidate { dir } => {
            let pkg = showme_core::device::load_package(&dir).map_err(|e| ServiceError::Validation(e.to_string()))?;
            out.line(&format!("package '{}' is valid: {} screens", pkg.id(), pkg.screens().count()));
            Ok(())
        }
        Verb::PackageSample { dir } => {
            sample_package().save(&dir).map_err(|e| ServiceError::Other(e.to_string()))?;
            out.line(&format!("wrote {}", dir.display()));
            Ok(())
        }
        Verb::Serve { addr } => {
            let svc = Service::open(cli.global.config()?)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| ServiceError::Other(e.to_string()))?;
            rt.block_on(crate::http::serve(svc, addr)).map_err(|e| ServiceError::Other(e.to_string()))
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_verb(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
