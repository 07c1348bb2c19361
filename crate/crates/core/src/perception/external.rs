use std::path::PathBuf;
use std::process::Command;

use crate::vision::Image;

use super::{BoundingBoxProposal, Detector, Ocr};

fn run_on_png(program: &PathBuf, args: &[String], img: &Image) -> Option<String> {
    let dir = tempfile::tempdir().ok()?;
    let path = dir.path().join("input.png");
    img.save_png(&path).ok()?;
    let out = Command::new(program).args(args).arg(&path).output().ok()?;
    out.status.success().then(|| String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Runs an OCR executable on a temporary PNG (passed as the last argument)
/// and uses its trimmed standard output. Failures read as empty text.
#[derive(Debug, Clone)]
pub struct ExternalOcr {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl Ocr for ExternalOcr {
    fn read(&self, crop: &Image) -> String {
        run_on_png(&self.program, &self.args, crop).map(|s| s.trim().to_string()).unwrap_or_default()
    }
}

/// Runs a detector executable on a temporary PNG; it must print a JSON list
/// of `{"rect": [x, y, w, h], "confidence": c}` objects.
#[derive(Debug, Clone)]
pub struct ExternalDetector {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl Detector for ExternalDetector {
    fn detect(&self, screen: &Image) -> Vec<BoundingBoxProposal> {
        run_on_png(&self.program, &self.args, screen)
            .and_then(|s| serde_json::from_str::<Vec<BoundingBoxProposal>>(&s).ok())
            .unwrap_or_default()
            .into_iter()
            .filter(|p| (0.0..=1.0).contains(&p.confidence))
            .collect()
    }
}
