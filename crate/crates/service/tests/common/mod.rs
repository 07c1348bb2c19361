#![allow(dead_code)]

use std::path::Path;

use showme_core::device::sample::{message_demo, pizza_demo, SampleDemo};
use showme_service::{Config, Reply, Service};

pub fn config(dir: &Path) -> Config {
    std::fs::write(dir.join("vectors.txt"), showme_service::SAMPLE_VECTORS).unwrap();
    Config::new(dir)
}

pub fn service(dir: &Path) -> Service {
    Service::open(config(dir)).unwrap()
}

pub fn message() -> SampleDemo {
    message_demo("tell the team hello", 1, "hello")
}

pub fn pizza() -> SampleDemo {
    pizza_demo("order a large pepperoni pizza", 2, 0)
}

/// Utterance, consent and the full demonstration.
pub fn teach(svc: &mut Service, demo: &SampleDemo) -> Reply {
    let r = svc.handle_utterance(demo.utterance).unwrap();
    assert_eq!(r.message, showme_service::session::UNKNOWN_TASK_PROMPT);
    svc.consent(true).unwrap();
    for e in &demo.events {
        svc.event(e.clone()).unwrap();
    }
    svc.end_demo().unwrap()
}
