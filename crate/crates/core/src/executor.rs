//! Replays an automation script on a device, relocating elements that moved
//! or changed appearance and substituting new parameter values.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{DeviceError, InputEvent, Key, SimDevice};
use crate::learner::{char_slice, AutomationScript, ScriptStep, SlotSpan, SwipeDirection};
use crate::perception::{detect_all_elements, Detector, Ocr, UIElementObservation};
use crate::vision::{template_match_at, template_match_global, text_similarity, Image, Rect, VisionError};

/// Slot id to the value to use for this run.
pub type ParameterAssignment = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecConfig {
    /// Largest mean squared pixel difference accepted as a template match.
    pub tolerance: f64,
    /// Minimum text similarity for the text search.
    pub text_threshold: f64,
    /// Upper bound on synthetic swipes per search.
    pub max_swipes: u32,
    /// Fraction of the screen covered by a synthetic swipe.
    pub swipe_fraction: f64,
    /// Tap at the demonstrated offset inside the element when it fits,
    /// otherwise at the centre.
    pub relative_offset: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig { tolerance: 0.0, text_threshold: 0.8, max_swipes: 25, swipe_fraction: 0.9, relative_offset: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Verbatim,
    Relocated,
    TextMatched,
}

/// Which lookup stages ran while locating an element.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindTrace {
    pub template_at: u32,
    pub template_global: u32,
    pub text_search: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Located {
    pub rect: Rect,
    pub method: Method,
    /// Text similarity for text matches.
    pub similarity: Option<f64>,
    /// Another element scored the same in the text search.
    pub ambiguous: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error("element not found: {0}")]
    ElementNotFound(String),
    #[error("unknown slot '{0}'")]
    UnknownSlot(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Vision(#[from] VisionError),
}

/// Signature text with the slot replaced by its assigned value, if the
/// value differs (ignoring case) from the demonstrated one.
fn changed_target(
    signature: &UIElementObservation,
    slot: &Option<SlotSpan>,
    script_slots: &BTreeMap<String, String>,
    params: &ParameterAssignment,
) -> Option<String> {
    let span = slot.as_ref()?;
    let new = params.get(&span.slot)?;
    let old = script_slots.get(&span.slot)?;
    if new.to_lowercase() == old.to_lowercase() {
        return None;
    }
    Some(splice(&signature.text, std::slice::from_ref(span), params, script_slots))
}

/// Replaces each span's characters with its assigned (or original) value.
fn splice(
    text: &str,
    spans: &[SlotSpan],
    params: &ParameterAssignment,
    script_slots: &BTreeMap<String, String>,
) -> String {
    let mut sorted: Vec<&SlotSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| s.start);
    let mut out = String::new();
    let mut pos = 0;
    for s in sorted {
        if s.start < pos {
            continue;
        }
        out.push_str(&char_slice(text, pos, s.start));
        let original = char_slice(text, s.start, s.end);
        let value = match (params.get(&s.slot), script_slots.get(&s.slot)) {
            (Some(new), Some(old)) if new.to_lowercase() != old.to_lowercase() => new.clone(),
            _ => original,
        };
        out.push_str(&value);
        pos = s.end;
    }
    out.push_str(&char_slice(text, pos, usize::MAX));
    out
}

/// Text search over detector proposals; highest similarity, then detector
/// confidence, then smallest (y, x).
fn text_search(
    current: &Image,
    target: &str,
    detector: &dyn Detector,
    ocr: &dyn Ocr,
    cfg: &ExecConfig,
) -> Option<Located> {
    let target = target.to_lowercase();
    let mut ranked: Vec<(f64, f64, Rect)> = detect_all_elements(current, detector, ocr)
        .into_iter()
        .map(|(obs, conf)| (text_similarity::<f64>(&target, &obs.text.to_lowercase()), conf, obs.rect))
        .filter(|(sim, _, _)| *sim >= cfg.text_threshold)
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)).then((a.2.y, a.2.x).cmp(&(b.2.y, b.2.x))));
    let (sim, _, rect) = *ranked.first()?;
    let ambiguous = ranked.iter().skip(1).any(|(s, _, _)| *s == sim);
    Some(Located { rect, method: Method::TextMatched, similarity: Some(sim), ambiguous })
}

/// Locates an element: at its demonstrated position, then anywhere on the
/// screen by template, then by text. A slot whose value changed skips the
/// template stages since the demonstrated pixels no longer apply.
#[allow(clippy::too_many_arguments)]
pub fn find_element(
    current: &Image,
    signature: &UIElementObservation,
    slot: &Option<SlotSpan>,
    script_slots: &BTreeMap<String, String>,
    params: &ParameterAssignment,
    detector: &dyn Detector,
    ocr: &dyn Ocr,
    cfg: &ExecConfig,
    trace: &mut FindTrace,
) -> Result<Located, ExecError> {
    let changed = changed_target(signature, slot, script_slots, params);
    if changed.is_none() {
        trace.template_at += 1;
        if signature.rect.fits_in(current.width(), current.height())
            && template_match_at(current, &signature.template, &signature.rect, cfg.tolerance)?
        {
            return Ok(Located { rect: signature.rect, method: Method::Verbatim, similarity: None, ambiguous: false });
        }
        trace.template_global += 1;
        if let Some(m) = template_match_global(current, &signature.template, cfg.tolerance)? {
            return Ok(Located { rect: m.rect, method: Method::Relocated, similarity: None, ambiguous: false });
        }
    }
    let target = changed.unwrap_or_else(|| signature.text.clone());
    if target.is_empty() {
        return Err(ExecError::ElementNotFound("element has no text to search for".into()));
    }
    trace.text_search += 1;
    text_search(current, &target, detector, ocr, cfg)
        .ok_or_else(|| ExecError::ElementNotFound(format!("no element reads like '{target}'")))
}

fn tap_point(rect: &Rect, offset: (u32, u32), cfg: &ExecConfig) -> (u32, u32) {
    if cfg.relative_offset && offset.0 < rect.w && offset.1 < rect.h {
        (rect.x + offset.0, rect.y + offset.1)
    } else {
        rect.center()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum StepOutcome {
    ReplayedVerbatim,
    Relocated {
        rect: Rect,
    },
    TextMatched {
        rect: Rect,
        similarity: f64,
        ambiguous: bool,
    },
    /// A demonstrated swipe replaced by the search for the element after it.
    FoldedIntoSearch {
        target: usize,
    },
    Failed {
        reason: String,
    },
}

impl From<&Located> for StepOutcome {
    fn from(l: &Located) -> Self {
        match l.method {
            Method::Verbatim => StepOutcome::ReplayedVerbatim,
            Method::Relocated => StepOutcome::Relocated { rect: l.rect },
            Method::TextMatched => StepOutcome::TextMatched {
                rect: l.rect,
                similarity: l.similarity.unwrap_or(0.0),
                ambiguous: l.ambiguous,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub index: usize,
    pub step: String,
    #[serde(flatten)]
    pub outcome: StepOutcome,
    pub elapsed_ms: f64,
    pub synthetic_swipes: u32,
    pub probes: FindTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub task_id: String,
    pub params: ParameterAssignment,
    pub steps: Vec<StepReport>,
    pub success: bool,
    pub total_ms: f64,
    pub final_screen: String,
}

impl ExecutionReport {
    pub fn count(&self, pred: impl Fn(&StepOutcome) -> bool) -> usize {
        self.steps.iter().filter(|s| pred(&s.outcome)).count()
    }
}

/// Everything the executor needs besides the device.
pub struct Executor<'a> {
    pub detector: &'a dyn Detector,
    pub ocr: &'a dyn Ocr,
    pub config: ExecConfig,
}

impl Executor<'_> {
    fn locate(
        &self,
        device: &SimDevice,
        script: &AutomationScript,
        step: &ScriptStep,
        params: &ParameterAssignment,
        trace: &mut FindTrace,
    ) -> Result<Located, ExecError> {
        let ScriptStep::ElementInteraction { signature, slot, .. } = step else {
            unreachable!("only element interactions are located")
        };
        find_element(
            &device.screenshot(),
            signature,
            slot,
            &script.slots,
            params,
            self.detector,
            self.ocr,
            &self.config,
            trace,
        )
    }

    fn interact(&self, device: &mut SimDevice, step: &ScriptStep, at: &Located) -> Result<(), ExecError> {
        let ScriptStep::ElementInteraction { kind, duration_ms, click_offset, .. } = step else {
            unreachable!("only element interactions are tapped")
        };
        let (x, y) = tap_point(&at.rect, *click_offset, &self.config);
        device.inject(&kind.event(x, y, *duration_ms))?;
        Ok(())
    }

    /// Runs one step that is not part of a swipe search.
    pub fn execute_step(
        &self,
        device: &mut SimDevice,
        script: &AutomationScript,
        step: &ScriptStep,
        params: &ParameterAssignment,
        trace: &mut FindTrace,
    ) -> Result<StepOutcome, ExecError> {
        match step {
            ScriptStep::AppStart { app } => {
                device.inject(&InputEvent::AppLaunch { app: app.clone() })?;
                Ok(StepOutcome::ReplayedVerbatim)
            }
            ScriptStep::StaticTap { kind, x, y, duration_ms } => {
                device.inject(&kind.event(*x, *y, *duration_ms))?;
                Ok(StepOutcome::ReplayedVerbatim)
            }
            &ScriptStep::DirectionalSwipe { x1, y1, x2, y2, duration_ms, .. } => {
                device.inject(&InputEvent::Swipe { x1, y1, x2, y2, duration_ms })?;
                Ok(StepOutcome::ReplayedVerbatim)
            }
            ScriptStep::TypeText { text, slots, erase } => {
                for _ in 0..*erase {
                    device.inject(&InputEvent::TypeChar { key: Key::Backspace })?;
                }
                for c in splice(text, slots, params, &script.slots).chars() {
                    device.inject(&InputEvent::ch(c))?;
                }
                Ok(StepOutcome::ReplayedVerbatim)
            }
            ScriptStep::ElementInteraction { .. } => {
                let at = self.locate(device, script, step, params, trace)?;
                self.interact(device, step, &at)?;
                Ok(StepOutcome::from(&at))
            }
        }
    }

    /// The synthetic swipe used while searching.
    pub fn synthetic_swipe(&self, device: &SimDevice, direction: SwipeDirection) -> InputEvent {
        let (w, h) = (device.package().width(), device.package().height());
        let lo = |n: u32| ((f64::from(n) * (1.0 - self.config.swipe_fraction) / 2.0).round() as u32).min(n - 1);
        let hi = |n: u32| ((f64::from(n) * (1.0 + self.config.swipe_fraction) / 2.0).round() as u32).min(n - 1);
        let (cx, cy) = (w / 2, h / 2);
        match direction {
            SwipeDirection::Up => InputEvent::swipe(cx, hi(h), cx, lo(h)),
            SwipeDirection::Down => InputEvent::swipe(cx, lo(h), cx, hi(h)),
            SwipeDirection::Left => InputEvent::swipe(hi(w), cy, lo(w), cy),
            SwipeDirection::Right => InputEvent::swipe(lo(w), cy, hi(w), cy),
        }
    }

    /// Looks for the target first and swipes in `direction` while it is not
    /// found. When a swipe changes nothing the search turns around once; it
    /// gives up at the second dead end or the swipe cap. Returns the location
    /// and the number of swipes made.
    pub fn execute_swipe_search(
        &self,
        device: &mut SimDevice,
        script: &AutomationScript,
        direction: SwipeDirection,
        target: &ScriptStep,
        params: &ParameterAssignment,
        trace: &mut FindTrace,
    ) -> Result<(Located, u32), (ExecError, u32)> {
        let mut swipes = 0;
        let mut direction = direction;
        let mut turned = false;
        loop {
            let before = device.screenshot();
            match self.locate(device, script, target, params, trace) {
                Ok(at) => return Ok((at, swipes)),
                Err(ExecError::ElementNotFound(reason)) => {
                    if swipes >= self.config.max_swipes {
                        return Err((ExecError::ElementNotFound(format!("{reason} after {swipes} swipes")), swipes));
                    }
                    let ev = self.synthetic_swipe(device, direction);
                    device.inject(&ev).map_err(|e| (e.into(), swipes))?;
                    swipes += 1;
                    if device.screenshot() == before {
                        if !turned {
                            turned = true;
                            direction = direction.opposite();
                            continue;
                        }
                        return Err((
                            ExecError::ElementNotFound(format!("{reason}; scrolling reached the end")),
                            swipes,
                        ));
                    }
                }
                Err(e) => return Err((e, swipes)),
            }
        }
    }

    /// Resets the device and runs the script, stopping at the first failure.
    pub fn execute_script(
        &self,
        device: &mut SimDevice,
        script: &AutomationScript,
        params: &ParameterAssignment,
    ) -> Result<ExecutionReport, ExecError> {
        if let Some(unknown) = params.keys().find(|k| !script.slots.contains_key(*k)) {
            return Err(ExecError::UnknownSlot(unknown.clone()));
        }
        device.reset();
        let started = Instant::now();
        let mut reports = Vec::new();
        let mut success = true;
        let mut k = 0;
        while k < script.steps.len() {
            let t0 = Instant::now();
            let mut trace = FindTrace::default();
            let run_end = script.steps[k..]
                .iter()
                .position(|s| !matches!(s, ScriptStep::DirectionalSwipe { .. }))
                .map_or(script.steps.len(), |p| k + p);
            let searched =
                run_end > k && matches!(script.steps.get(run_end), Some(ScriptStep::ElementInteraction { .. }));
            if searched {
                let (dx, dy) = script.steps[k..run_end].iter().fold((0i64, 0i64), |(dx, dy), s| match *s {
                    ScriptStep::DirectionalSwipe { x1, y1, x2, y2, .. } => {
                        (dx + i64::from(x2) - i64::from(x1), dy + i64::from(y2) - i64::from(y1))
                    }
                    _ => (dx, dy),
                });
                let direction = SwipeDirection::from_displacement(dx, dy);
                for j in k..run_end {
                    reports.push(StepReport {
                        index: j,
                        step: script.steps[j].name().into(),
                        outcome: StepOutcome::FoldedIntoSearch { target: run_end },
                        elapsed_ms: 0.0,
                        synthetic_swipes: 0,
                        probes: FindTrace::default(),
                    });
                }
                let target = &script.steps[run_end];
                let result = self
                    .execute_swipe_search(device, script, direction, target, params, &mut trace)
                    .and_then(|(at, n)| self.interact(device, target, &at).map(|_| (at, n)).map_err(|e| (e, n)));
                let (outcome, swipes) = match result {
                    Ok((at, n)) => (StepOutcome::from(&at), n),
                    Err((e, n)) => (StepOutcome::Failed { reason: e.to_string() }, n),
                };
                success = !matches!(outcome, StepOutcome::Failed { .. });
                reports.push(StepReport {
                    index: run_end,
                    step: target.name().into(),
                    outcome,
                    elapsed_ms: t0.elapsed().as_secs_f64() * 1e3,
                    synthetic_swipes: swipes,
                    probes: trace,
                });
                k = run_end + 1;
            } else {
                let step = &script.steps[k];
                let outcome = self
                    .execute_step(device, script, step, params, &mut trace)
                    .unwrap_or_else(|e| StepOutcome::Failed { reason: e.to_string() });
                success = !matches!(outcome, StepOutcome::Failed { .. });
                reports.push(StepReport {
                    index: k,
                    step: step.name().into(),
                    outcome,
                    elapsed_ms: t0.elapsed().as_secs_f64() * 1e3,
                    synthetic_swipes: 0,
                    probes: trace,
                });
                k += 1;
            }
            if !success {
                break;
            }
        }
        Ok(ExecutionReport {
            task_id: script.task_id.clone(),
            params: params.clone(),
            steps: reports,
            success,
            total_ms: started.elapsed().as_secs_f64() * 1e3,
            final_screen: device.current_screen().to_string(),
        })
    }
}

/// Fills unassigned slots with their demonstrated values.
pub fn complete_assignment(script: &AutomationScript, params: &ParameterAssignment) -> ParameterAssignment {
    let mut out = script.slots.clone();
    out.extend(params.iter().map(|(k, v)| (k.clone(), v.clone())));
    out
}
