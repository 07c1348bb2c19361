#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use showme_core::device::sample::{message_demo, pizza_demo, sample_package, SampleDemo};
use showme_core::device::{DevicePackage, SimDevice};
use showme_core::learner::{learn, parameterize, AutomationScript};
use showme_core::nlu::*;
use showme_core::perception::{OracleDetector, OracleOcr};
use showme_core::recorder::{record_events, DemoTrace};

pub struct Rig {
    pub pkg: Arc<DevicePackage>,
    pub detector: OracleDetector,
    pub ocr: OracleOcr,
}

impl Rig {
    pub fn new(pkg: DevicePackage) -> Self {
        let pkg = Arc::new(pkg);
        Rig { detector: OracleDetector::new(pkg.clone()), ocr: OracleOcr::new(&pkg), pkg }
    }

    pub fn sample() -> Self {
        Rig::new(sample_package())
    }

    pub fn device(&self) -> SimDevice {
        SimDevice::new(self.pkg.clone())
    }

    pub fn record(&self, demo: &SampleDemo) -> DemoTrace {
        record_events(&mut self.device(), demo.utterance, &demo.events).expect("demo records")
    }

    pub fn learn(&self, demo: &SampleDemo) -> AutomationScript {
        learn(&self.record(demo), &self.detector, &self.ocr, &self.pkg).expect("demo learns")
    }
}

pub fn pizza_script(rig: &Rig) -> AutomationScript {
    let u = "order a large pepperoni pizza";
    let mut s = rig.learn(&pizza_demo(u, 2, 0));
    s.task_id = "task-0001".into();
    let b = bootstrap_parameters(u, &s.artifacts());
    parameterize(&s, &b).unwrap()
}

pub fn message_trace(rig: &Rig) -> DemoTrace {
    rig.record(&message_demo("send hi to the team", 1, "hi"))
}

pub const VECTORS: &str = "\
order 0.9 0.1 0.0
pizza 0.8 0.2 0.1
large 0.7 0.1 0.2
small 0.7 0.15 0.2
send 0.0 0.9 0.1
message 0.1 0.8 0.0
grades 0.1 0.1 0.9
";

pub fn clusters() -> (MeanWordVector<f64>, ClusterStore<f64>) {
    let enc = MeanWordVector::new(Arc::new(WordVectorTable::from_text(VECTORS).unwrap()));
    let mut store = ClusterStore::default();
    for u in ["order a large pizza", "send a message", "order pizza", "show grades"] {
        assign_utterance(u, &enc, &mut store, &Thresholds::default(), Some(&mut |_: &str| true)).unwrap();
    }
    (enc, store)
}

/// Relative path to sha256 for every file under `dir`, sorted.
pub fn digests(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, hex::encode(Sha256::digest(fs::read(&p).unwrap())));
            }
        }
    }
    out
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.sha256"))
}

pub fn digest_text(d: &BTreeMap<String, String>) -> String {
    d.iter().map(|(k, v)| format!("{v}  {k}\n")).collect()
}
