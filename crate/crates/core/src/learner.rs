//! Turns a demonstration trace into a parameterized automation script.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{Action, DevicePackage, InputEvent, Key};
use crate::nlu::{ArtifactRole, BootstrapBinding, DemoArtifact};
use crate::perception::{extract_element, Detector, Ocr, PerceptionError, UIElementObservation};
use crate::recorder::{DemoStep, DemoTrace, RecorderError};
use crate::vision::{template_match_global, Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwipeDirection {
    Up,
    Down,
    Left,
    Right,
}

impl SwipeDirection {
    /// Direction of the finger movement along its dominant axis; vertical
    /// wins ties.
    pub fn from_displacement(dx: i64, dy: i64) -> Self {
        if dx.abs() > dy.abs() {
            if dx < 0 {
                SwipeDirection::Left
            } else {
                SwipeDirection::Right
            }
        } else if dy < 0 {
            SwipeDirection::Up
        } else {
            SwipeDirection::Down
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            SwipeDirection::Up => SwipeDirection::Down,
            SwipeDirection::Down => SwipeDirection::Up,
            SwipeDirection::Left => SwipeDirection::Right,
            SwipeDirection::Right => SwipeDirection::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TapKind {
    Tap,
    LongTap,
}

impl TapKind {
    pub fn event(self, x: u32, y: u32, duration_ms: u32) -> InputEvent {
        match self {
            TapKind::Tap => InputEvent::Tap { x, y, duration_ms },
            TapKind::LongTap => InputEvent::LongTap { x, y, duration_ms },
        }
    }
}

/// A slot occupying the characters `start..end` of some text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSpan {
    pub slot: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScriptStep {
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
        /// Backspaces into text that was in the field before the run.
        erase: usize,
    },
    ElementInteraction {
        kind: TapKind,
        duration_ms: u32,
        signature: UIElementObservation,
        /// Click position relative to the signature's top-left corner.
        click_offset: (u32, u32),
        /// Slot inside the signature text.
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

impl ScriptStep {
    pub fn name(&self) -> &'static str {
        match self {
            ScriptStep::AppStart { .. } => "app_start",
            ScriptStep::StaticTap { .. } => "static_tap",
            ScriptStep::TypeText { .. } => "type_text",
            ScriptStep::ElementInteraction { .. } => "element_interaction",
            ScriptStep::DirectionalSwipe { .. } => "directional_swipe",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutomationScript {
    pub task_id: String,
    pub utterance: String,
    pub package_id: String,
    pub steps: Vec<ScriptStep>,
    /// Demonstration step indices each script step was learned from.
    pub sources: Vec<Vec<usize>>,
    /// Slot id to the value seen during the demonstration.
    pub slots: BTreeMap<String, String>,
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Characters `start..end` of `s`.
pub fn char_slice(s: &str, start: usize, end: usize) -> String {
    s.chars().skip(start).take(end.saturating_sub(start)).collect()
}

impl AutomationScript {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: String| Err(LearnError::InvalidScript(m));
        if self.steps.is_empty() {
            return bad("script has no steps".into());
        }
        if self.sources.len() != self.steps.len() {
            return bad(format!("{} source lists for {} steps", self.sources.len(), self.steps.len()));
        }
        let check_span = |k: usize, span: &SlotSpan, text: &str| -> Result<(), LearnError> {
            if !self.slots.contains_key(&span.slot) {
                return Err(LearnError::InvalidScript(format!("step {k} uses unknown slot '{}'", span.slot)));
            }
            if span.start >= span.end || span.end > char_len(text) {
                return Err(LearnError::InvalidScript(format!(
                    "step {k}: slot span {}..{} outside text",
                    span.start, span.end
                )));
            }
            Ok(())
        };
        for (k, step) in self.steps.iter().enumerate() {
            match step {
                ScriptStep::TypeText { text, slots, .. } => {
                    for s in slots {
                        check_span(k, s, text)?;
                    }
                }
                ScriptStep::ElementInteraction { signature, slot, .. } => {
                    let r = signature.rect;
                    if r.is_degenerate() || signature.template.width() != r.w || signature.template.height() != r.h {
                        return bad(format!("step {k}: template does not match its rect {r:?}"));
                    }
                    if let Some(s) = slot {
                        check_span(k, s, &signature.text)?;
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Texts the user clicked or typed, for parameter bootstrapping.
    pub fn artifacts(&self) -> Vec<DemoArtifact> {
        let mut out = Vec::new();
        for (step, sources) in self.steps.iter().zip(&self.sources) {
            let Some(&first) = sources.first() else { continue };
            match step {
                ScriptStep::TypeText { text, .. } => {
                    out.push(DemoArtifact { step: first, role: ArtifactRole::TypedText, text: text.clone() })
                }
                ScriptStep::ElementInteraction { signature, .. } if !signature.text.is_empty() => out
                    .push(DemoArtifact { step: first, role: ArtifactRole::ClickedText, text: signature.text.clone() }),
                _ => {}
            }
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("step {step}: {source}")]
    Element { step: usize, source: PerceptionError },
    #[error("binding: {0}")]
    Binding(String),
    #[error("invalid script: {0}")]
    InvalidScript(String),
    #[error(transparent)]
    Trace(#[from] RecorderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventCategory {
    AppStart,
    Static,
    Keyboard,
    NonStatic,
    End,
}

/// App launched by tapping its icon on the launcher, if that is what the
/// tap does.
fn launcher_tap(pkg: &DevicePackage, frame: &Image, x: u32, y: u32) -> Option<String> {
    let state = pkg.identify(frame)?;
    if state.screen != pkg.launcher() {
        return None;
    }
    let screen = pkg.screen(&state.screen)?;
    match &screen.regions.iter().find(|r| r.rect.contains(x, y))?.action {
        Action::Launch { app } => Some(app.clone()),
        _ => None,
    }
}

fn keyboard_shown(frame: &Image, keyboard: &Image) -> bool {
    matches!(template_match_global(frame, keyboard, 0.0f64), Ok(Some(_)))
}

pub fn classify_event(step: &DemoStep, pkg: &DevicePackage, keyboard: &Image) -> EventCategory {
    match &step.event {
        InputEvent::EndDemo => EventCategory::End,
        InputEvent::AppLaunch { .. } => EventCategory::AppStart,
        InputEvent::TypeChar { .. } => {
            if keyboard_shown(&step.pre_screenshot, keyboard) {
                EventCategory::Keyboard
            } else {
                EventCategory::NonStatic
            }
        }
        InputEvent::Tap { x, y, .. } | InputEvent::LongTap { x, y, .. } => {
            if pkg.static_region_at(*x, *y).is_some() {
                EventCategory::Static
            } else if pkg.keyboard_rect().contains(*x, *y) && keyboard_shown(&step.pre_screenshot, keyboard) {
                EventCategory::Keyboard
            } else if launcher_tap(pkg, &step.pre_screenshot, *x, *y).is_some() {
                EventCategory::AppStart
            } else {
                EventCategory::NonStatic
            }
        }
        InputEvent::Swipe { .. } => EventCategory::NonStatic,
    }
}

/// Final text after applying the keys in order; backspace on an empty buffer
/// does nothing.
pub fn merge_typing<'a>(keys: impl IntoIterator<Item = &'a Key>) -> String {
    merge_typing_erase(keys).1
}

/// Like [`merge_typing`], also counting the backspaces that landed on an
/// empty buffer. Those only delete older field content, so replaying them
/// first gives the same field.
pub fn merge_typing_erase<'a>(keys: impl IntoIterator<Item = &'a Key>) -> (usize, String) {
    let mut buf = String::new();
    let mut erase = 0;
    for k in keys {
        match k {
            Key::Char(c) => buf.push(*c),
            Key::Backspace => {
                if buf.pop().is_none() {
                    erase += 1;
                }
            }
        }
    }
    (erase, buf)
}

pub(crate) fn is_zero(n: &usize) -> bool {
    *n == 0
}

#[derive(Default)]
struct Out {
    steps: Vec<ScriptStep>,
    sources: Vec<Vec<usize>>,
}

impl Out {
    fn push(&mut self, step: ScriptStep, sources: Vec<usize>) {
        self.steps.push(step);
        self.sources.push(sources);
    }

    fn flush_typing(&mut self, run: &mut Vec<(usize, Option<Key>)>) {
        if run.is_empty() {
            return;
        }
        let (erase, text) = merge_typing_erase(run.iter().filter_map(|(_, k)| k.as_ref()));
        let sources = run.iter().map(|(i, _)| *i).collect();
        run.clear();
        if !text.is_empty() || erase > 0 {
            self.push(ScriptStep::TypeText { text, slots: Vec::new(), erase }, sources);
        }
    }
}

/// Classifies each event, merges typing runs and extracts element
/// signatures for taps on non-static elements.
pub fn learn(
    trace: &DemoTrace,
    detector: &dyn Detector,
    ocr: &dyn Ocr,
    pkg: &DevicePackage,
) -> Result<AutomationScript, LearnError> {
    trace.validate()?;
    let keyboard = pkg.keyboard_image();
    let mut out = Out::default();
    let mut typing: Vec<(usize, Option<Key>)> = Vec::new();
    for step in &trace.steps {
        let category = classify_event(step, pkg, keyboard);
        if category != EventCategory::Keyboard {
            out.flush_typing(&mut typing);
        }
        let i = step.index;
        match (&step.event, category) {
            (_, EventCategory::End) => break,
            (InputEvent::TypeChar { key }, EventCategory::Keyboard) => typing.push((i, Some(*key))),
            (_, EventCategory::Keyboard) => typing.push((i, None)),
            (InputEvent::AppLaunch { app }, _) => out.push(ScriptStep::AppStart { app: app.clone() }, vec![i]),
            (InputEvent::Tap { x, y, .. } | InputEvent::LongTap { x, y, .. }, EventCategory::AppStart) => {
                let app = launcher_tap(pkg, &step.pre_screenshot, *x, *y).expect("classified as app start");
                out.push(ScriptStep::AppStart { app }, vec![i]);
            }
            (&InputEvent::Tap { x, y, duration_ms }, EventCategory::Static) => {
                out.push(ScriptStep::StaticTap { kind: TapKind::Tap, x, y, duration_ms }, vec![i])
            }
            (&InputEvent::LongTap { x, y, duration_ms }, EventCategory::Static) => {
                out.push(ScriptStep::StaticTap { kind: TapKind::LongTap, x, y, duration_ms }, vec![i])
            }
            (&InputEvent::Swipe { x1, y1, x2, y2, duration_ms }, _) => {
                let direction =
                    SwipeDirection::from_displacement(i64::from(x2) - i64::from(x1), i64::from(y2) - i64::from(y1));
                out.push(ScriptStep::DirectionalSwipe { direction, x1, y1, x2, y2, duration_ms }, vec![i]);
            }
            (&InputEvent::Tap { x, y, duration_ms } | &InputEvent::LongTap { x, y, duration_ms }, _) => {
                let kind = if matches!(step.event, InputEvent::Tap { .. }) { TapKind::Tap } else { TapKind::LongTap };
                let signature = extract_element(&step.pre_screenshot, x, y, detector, ocr)
                    .map_err(|source| LearnError::Element { step: i, source })?;
                let click_offset = (x - signature.rect.x, y - signature.rect.y);
                out.push(
                    ScriptStep::ElementInteraction { kind, duration_ms, signature, click_offset, slot: None },
                    vec![i],
                );
            }
            (InputEvent::TypeChar { .. }, _) => {
                return Err(LearnError::Binding(format!("step {i}: typing without a visible keyboard")));
            }
            (InputEvent::EndDemo, _) => unreachable!("end marker is classified as End"),
        }
    }
    out.flush_typing(&mut typing);
    let script = AutomationScript {
        task_id: String::new(),
        utterance: trace.utterance.clone(),
        package_id: trace.package_id.clone(),
        steps: out.steps,
        sources: out.sources,
        slots: BTreeMap::new(),
    };
    script.validate()?;
    Ok(script)
}

fn byte_to_char(s: &str, byte: usize) -> usize {
    s[..byte.min(s.len())].chars().count()
}

/// Attaches bootstrapped bindings to the steps they came from.
pub fn parameterize(script: &AutomationScript, bindings: &[BootstrapBinding]) -> Result<AutomationScript, LearnError> {
    let mut out = script.clone();
    for b in bindings {
        let k =
            out.sources.iter().position(|s| s.contains(&b.step)).ok_or_else(|| {
                LearnError::Binding(format!("no script step comes from demonstration step {}", b.step))
            })?;
        let slot = b.binding.slot.clone();
        let span_in = |text: &str| -> Result<SlotSpan, LearnError> {
            if b.artifact_end > text.len()
                || !text.is_char_boundary(b.artifact_start)
                || !text.is_char_boundary(b.artifact_end)
            {
                return Err(LearnError::Binding(format!("slot {slot}: range outside '{text}'")));
            }
            Ok(SlotSpan {
                slot: slot.clone(),
                start: byte_to_char(text, b.artifact_start),
                end: byte_to_char(text, b.artifact_end),
            })
        };
        let original = match &mut out.steps[k] {
            ScriptStep::TypeText { text, slots, .. } => {
                let span = span_in(text)?;
                let value = char_slice(text, span.start, span.end);
                slots.push(span);
                slots.sort_by_key(|s| s.start);
                value
            }
            ScriptStep::ElementInteraction { signature, slot: current, .. } => {
                if current.is_some() {
                    return Err(LearnError::Binding(format!("step {k} already carries a slot")));
                }
                let span = span_in(&signature.text)?;
                let value = char_slice(&signature.text, span.start, span.end);
                *current = Some(span);
                value
            }
            other => {
                return Err(LearnError::Binding(format!("slot {slot} cannot bind to a {} step", other.name())));
            }
        };
        out.slots.insert(slot, original);
    }
    out.validate()?;
    Ok(out)
}
