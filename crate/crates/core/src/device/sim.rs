use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::vision::{Image, Rect};

use super::font;
use super::package::{Action, DevicePackage, StaticAction};
use super::render;
use super::DeviceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Key {
    Char(char),
    Backspace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputEvent {
    Tap { x: u32, y: u32, duration_ms: u32 },
    LongTap { x: u32, y: u32, duration_ms: u32 },
    Swipe { x1: u32, y1: u32, x2: u32, y2: u32, duration_ms: u32 },
    TypeChar { key: Key },
    AppLaunch { app: String },
    EndDemo,
}

impl InputEvent {
    pub fn tap(x: u32, y: u32) -> Self {
        InputEvent::Tap { x, y, duration_ms: 80 }
    }

    pub fn swipe(x1: u32, y1: u32, x2: u32, y2: u32) -> Self {
        InputEvent::Swipe { x1, y1, x2, y2, duration_ms: 300 }
    }

    pub fn ch(c: char) -> Self {
        InputEvent::TypeChar { key: Key::Char(c) }
    }

    /// Touch point for taps and long taps.
    pub fn touch_point(&self) -> Option<(u32, u32)> {
        match *self {
            InputEvent::Tap { x, y, .. } | InputEvent::LongTap { x, y, .. } => Some((x, y)),
            _ => None,
        }
    }

    /// Checks coordinates and durations against the screen size.
    pub fn validate(&self, width: u32, height: u32) -> Result<(), DeviceError> {
        let inside = |x: u32, y: u32| x < width && y < height;
        let ok = match *self {
            InputEvent::Tap { x, y, duration_ms } | InputEvent::LongTap { x, y, duration_ms } => {
                inside(x, y) && duration_ms > 0
            }
            InputEvent::Swipe { x1, y1, x2, y2, duration_ms } => inside(x1, y1) && inside(x2, y2) && duration_ms > 0,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(DeviceError::InvalidEvent(format!("{self:?} outside {width}x{height} or zero duration")))
        }
    }
}

/// What an injected event changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TransitionOutcome {
    Navigated { from: String, to: String },
    Launched { app: String, screen: String },
    Home,
    Focused { field: String },
    Submitted { field: String, value: String },
    Scrolled { list: String, offset: u32, delta: i64 },
    Edited { field: String, buffer: String },
    Unchanged,
    Ended,
}

/// Deterministic simulated touchscreen.
#[derive(Debug, Clone)]
pub struct SimDevice {
    pkg: Arc<DevicePackage>,
    current: String,
    scroll: BTreeMap<String, u32>,
    focused: Option<String>,
    buffers: BTreeMap<String, String>,
    submitted: BTreeMap<String, String>,
    running: BTreeSet<String>,
    pub(crate) session_active: bool,
}

impl SimDevice {
    pub fn new(pkg: Arc<DevicePackage>) -> Self {
        let current = pkg.launcher().to_string();
        SimDevice {
            pkg,
            current,
            scroll: BTreeMap::new(),
            focused: None,
            buffers: BTreeMap::new(),
            submitted: BTreeMap::new(),
            running: BTreeSet::new(),
            session_active: false,
        }
    }

    pub fn package(&self) -> &Arc<DevicePackage> {
        &self.pkg
    }

    pub fn current_screen(&self) -> &str {
        &self.current
    }

    pub fn focused_field(&self) -> Option<&str> {
        self.focused.as_deref()
    }

    pub fn keyboard_visible(&self) -> bool {
        self.focused.is_some()
    }

    pub fn buffer(&self, field: &str) -> &str {
        self.buffers.get(field).map_or("", String::as_str)
    }

    pub fn submitted(&self, field: &str) -> Option<&str> {
        self.submitted.get(field).map(String::as_str)
    }

    pub fn scroll_offset(&self, list: &str) -> u32 {
        self.scroll.get(list).copied().unwrap_or(0)
    }

    pub fn running_apps(&self) -> &BTreeSet<String> {
        &self.running
    }

    pub fn is_recording(&self) -> bool {
        self.session_active
    }

    /// Home screen, no running apps, no scroll, no focus, empty buffers.
    pub fn reset(&mut self) {
        self.current = self.pkg.launcher().to_string();
        self.scroll.clear();
        self.focused = None;
        self.buffers.clear();
        self.submitted.clear();
        self.running.clear();
    }

    fn navigate(&mut self, to: &str) -> TransitionOutcome {
        let from = std::mem::replace(&mut self.current, to.to_string());
        self.scroll.clear();
        self.focused = None;
        TransitionOutcome::Navigated { from, to: to.to_string() }
    }

    fn apply(&mut self, action: &Action) -> TransitionOutcome {
        match action {
            Action::Navigate { screen } => self.navigate(screen),
            Action::FocusField { field } => {
                self.focused = Some(field.clone());
                TransitionOutcome::Focused { field: field.clone() }
            }
            Action::Submit { field, screen } => {
                let value = self.buffers.remove(field).unwrap_or_default();
                self.submitted.insert(field.clone(), value.clone());
                self.focused = None;
                if let Some(s) = screen {
                    self.navigate(s);
                }
                TransitionOutcome::Submitted { field: field.clone(), value }
            }
            Action::Launch { app } => self.launch(app).unwrap_or(TransitionOutcome::Unchanged),
            Action::None => TransitionOutcome::Unchanged,
        }
    }

    fn launch(&mut self, app: &str) -> Result<TransitionOutcome, DeviceError> {
        let entry = self
            .pkg
            .app_entry(app)
            .ok_or_else(|| DeviceError::InvalidEvent(format!("unknown app '{app}'")))?
            .to_string();
        self.navigate(&entry);
        self.running.insert(app.to_string());
        Ok(TransitionOutcome::Launched { app: app.to_string(), screen: entry })
    }

    /// Region action under a tap, honoring keyboard occlusion and list
    /// scrolling.
    fn action_at(&self, x: u32, y: u32) -> Option<Action> {
        if self.keyboard_visible() && self.pkg.keyboard_rect().contains(x, y) {
            return None;
        }
        let screen = self.pkg.screen(&self.current)?;
        for list in &screen.lists {
            if list.viewport.contains(x, y) {
                let content_y = y - list.viewport.y + self.scroll_offset(&list.id);
                let idx = (content_y / list.item_height) as usize;
                return list.items.get(idx).map(|i| i.action.clone());
            }
        }
        screen.regions.iter().find(|r| r.rect.contains(x, y)).map(|r| r.action.clone())
    }

    fn scroll_list(&mut self, x1: u32, y1: u32, y2: u32) -> TransitionOutcome {
        let Some(screen) = self.pkg.screen(&self.current) else { return TransitionOutcome::Unchanged };
        let (lo, hi) = (y1.min(y2), y1.max(y2));
        // the list under the finger path; content follows the finger while it is over the viewport
        let target = screen.lists.iter().find(|l| {
            let vp = l.viewport;
            x1 >= vp.x && x1 < vp.right() && lo < vp.bottom() && hi >= vp.y
        });
        let Some(list) = target else { return TransitionOutcome::Unchanged };
        let vp = list.viewport;
        let travel = i64::from(hi.min(vp.bottom())) - i64::from(lo.max(vp.y));
        let delta = if y2 < y1 { travel } else { -travel };
        let before = self.scroll_offset(&list.id);
        let after = (i64::from(before) + delta).clamp(0, i64::from(list.max_offset())) as u32;
        let id = list.id.clone();
        self.scroll.insert(id.clone(), after);
        TransitionOutcome::Scrolled { list: id, offset: after, delta: i64::from(after) - i64::from(before) }
    }

    /// Applies one input event.
    pub fn inject(&mut self, event: &InputEvent) -> Result<TransitionOutcome, DeviceError> {
        event.validate(self.pkg.width(), self.pkg.height())?;
        match event {
            InputEvent::Tap { x, y, .. } | InputEvent::LongTap { x, y, .. } => {
                if let Some(r) = self.pkg.static_region_at(*x, *y) {
                    return Ok(match r.action {
                        StaticAction::Home => {
                            let launcher = self.pkg.launcher().to_string();
                            self.navigate(&launcher);
                            TransitionOutcome::Home
                        }
                        StaticAction::None => TransitionOutcome::Unchanged,
                    });
                }
                Ok(match self.action_at(*x, *y) {
                    Some(a) => self.apply(&a),
                    None => TransitionOutcome::Unchanged,
                })
            }
            InputEvent::Swipe { x1, y1, y2, .. } => Ok(self.scroll_list(*x1, *y1, *y2)),
            InputEvent::TypeChar { key } => {
                let field = self
                    .focused
                    .clone()
                    .ok_or_else(|| DeviceError::InputState("typing with no focused text field".into()))?;
                let buf = self.buffers.entry(field.clone()).or_default();
                match key {
                    Key::Char(c) => buf.push(*c),
                    Key::Backspace => {
                        buf.pop();
                    }
                }
                Ok(TransitionOutcome::Edited { field, buffer: buf.clone() })
            }
            InputEvent::AppLaunch { app } => self.launch(app),
            InputEvent::EndDemo => Ok(TransitionOutcome::Ended),
        }
    }

    /// Composites the current frame: base layer, scrolled lists, field
    /// buffers, submitted values and keyboard.
    pub fn screenshot(&self) -> Image {
        let pkg = &self.pkg;
        let screen = pkg.screen(&self.current).expect("current screen exists");
        let mut frame = pkg.screen_image(&screen.id).expect("screen image").clone();
        for list in &screen.lists {
            let content = pkg.list_content(&list.id).expect("list content");
            let off = self.scroll_offset(&list.id);
            let rows = list.viewport.h.min(list.content_height() - off);
            let crop = content.crop(&Rect::new(0, off, list.viewport.w, rows)).expect("offset within content");
            frame.paste(&crop, list.viewport.x, list.viewport.y).expect("viewport within screen");
        }
        let color = pkg.manifest().text_color;
        let scale = pkg.manifest().text_scale;
        for field in &screen.fields {
            let text = self.buffer(&field.id);
            if !text.is_empty() {
                // typed text replaces the placeholder
                let inner = Rect::new(
                    field.rect.x + 1,
                    field.rect.y + 1,
                    field.rect.w.saturating_sub(2),
                    field.rect.h.saturating_sub(2),
                );
                let fill = frame.pixel(inner.x, inner.y);
                frame.fill_rect(&inner, fill);
                render::draw_text_left(
                    &mut frame,
                    &field.rect,
                    visible_tail(text, field.rect.w, scale),
                    color,
                    scale,
                    3,
                );
            }
        }
        for display in &screen.displays {
            if let Some(text) = self.submitted(&display.field) {
                render::draw_text_left(&mut frame, &display.rect, text, color, scale, 3);
            }
        }
        if self.keyboard_visible() {
            let r = pkg.keyboard_rect();
            frame.paste(pkg.keyboard_image(), r.x, r.y).expect("keyboard within screen");
        }
        frame
    }
}

/// Longest suffix of `text` that fits in a field of width `w`.
fn visible_tail(text: &str, w: u32, scale: u32) -> &str {
    let avail = w.saturating_sub(6);
    let mut start = 0;
    for (i, _) in text.char_indices() {
        if font::text_width(&text[i..], scale) <= avail {
            start = i;
            break;
        }
        start = text.len();
    }
    &text[start..]
}
