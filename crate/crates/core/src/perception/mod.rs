//! Element detection and text reading behind pluggable interfaces.

mod external;
mod oracle;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vision::{Image, Rect, VisionError};

pub use external::{ExternalDetector, ExternalOcr};
pub use oracle::{OracleDetector, OracleOcr};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBoxProposal {
    pub rect: Rect,
    pub confidence: f64,
}

/// One element as seen on a screenshot: where, what it looks like, what it says.
#[derive(Debug, Clone, PartialEq)]
pub struct UIElementObservation {
    pub rect: Rect,
    pub template: Image,
    pub text: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("no element at ({x}, {y})")]
    ElementNotFound { x: u32, y: u32 },
    #[error(transparent)]
    Vision(#[from] VisionError),
}

pub trait Detector: Send + Sync {
    fn detect(&self, screen: &Image) -> Vec<BoundingBoxProposal>;
}

pub trait Ocr: Send + Sync {
    fn read(&self, crop: &Image) -> String;
}

impl<D: Detector + ?Sized> Detector for &D {
    fn detect(&self, screen: &Image) -> Vec<BoundingBoxProposal> {
        (**self).detect(screen)
    }
}

impl<O: Ocr + ?Sized> Ocr for &O {
    fn read(&self, crop: &Image) -> String {
        (**self).read(crop)
    }
}

impl<D: Detector + ?Sized> Detector for Box<D> {
    fn detect(&self, screen: &Image) -> Vec<BoundingBoxProposal> {
        (**self).detect(screen)
    }
}

impl<O: Ocr + ?Sized> Ocr for Box<O> {
    fn read(&self, crop: &Image) -> String {
        (**self).read(crop)
    }
}

/// Higher confidence first, then smaller area, then smaller (y, x).
fn preference(a: &BoundingBoxProposal, b: &BoundingBoxProposal) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.rect.area().cmp(&b.rect.area()))
        .then((a.rect.y, a.rect.x).cmp(&(b.rect.y, b.rect.x)))
        .then((a.rect.w, a.rect.h).cmp(&(b.rect.w, b.rect.h)))
}

/// The most probable proposal containing the point.
pub fn select_element_at(proposals: &[BoundingBoxProposal], x: u32, y: u32) -> Option<BoundingBoxProposal> {
    proposals.iter().filter(|p| p.rect.contains(x, y)).min_by(|a, b| preference(a, b)).copied()
}

/// Detect, pick the box under the click, crop it and read its text.
pub fn extract_element(
    screen: &Image,
    x: u32,
    y: u32,
    detector: &dyn Detector,
    ocr: &dyn Ocr,
) -> Result<UIElementObservation, PerceptionError> {
    let proposals: Vec<_> =
        detector.detect(screen).into_iter().filter(|p| p.rect.fits_in(screen.width(), screen.height())).collect();
    let chosen = select_element_at(&proposals, x, y).ok_or(PerceptionError::ElementNotFound { x, y })?;
    let template = screen.crop(&chosen.rect)?;
    let text = ocr.read(&template);
    Ok(UIElementObservation { rect: chosen.rect, template, text })
}

/// Every proposal as an observation, most confident first. Proposals that do
/// not lie inside the screen are dropped.
pub fn detect_all_elements(screen: &Image, detector: &dyn Detector, ocr: &dyn Ocr) -> Vec<(UIElementObservation, f64)> {
    let mut proposals: Vec<_> = detector
        .detect(screen)
        .into_iter()
        .filter(|p| !p.rect.is_degenerate() && p.rect.fits_in(screen.width(), screen.height()))
        .collect();
    proposals.sort_by(preference);
    proposals
        .into_iter()
        .map(|p| {
            let template = screen.crop(&p.rect).expect("filtered to screen bounds");
            let text = ocr.read(&template);
            (UIElementObservation { rect: p.rect, template, text }, p.confidence)
        })
        .collect()
}
