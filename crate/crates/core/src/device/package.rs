//! Device package: manifest, rendered assets and annotation sidecars.
//!
//! On disk a package is a directory:
//!
//! ```text
//! manifest.json
//! screens/<screen>.png
//! screens/<screen>.annotations.json
//! lists/<list>.png                  # full scrollable content, items stacked
//! lists/<list>.annotations.json     # item boxes in content coordinates
//! keyboard.png
//! ```

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::vision::{Image, Rect};

use super::DeviceError;

pub const FORMAT_VERSION: u32 = 1;

/// What tapping a region does.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Navigate {
        screen: String,
    },
    FocusField {
        field: String,
    },
    /// Stores the field's buffer as its submitted value, clears it, and
    /// optionally navigates.
    Submit {
        field: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        screen: Option<String>,
    },
    Launch {
        app: String,
    },
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub rect: Rect,
    #[serde(default)]
    pub text: String,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListItem {
    pub text: String,
    pub action: Action,
}

/// Vertical list whose items are stacked strips of `item_height` pixels in
/// the content image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListSpec {
    pub id: String,
    pub viewport: Rect,
    pub item_height: u32,
    pub content: String,
    pub annotations: String,
    pub items: Vec<ListItem>,
}

impl ListSpec {
    pub fn content_height(&self) -> u32 {
        self.item_height * self.items.len() as u32
    }

    pub fn max_offset(&self) -> u32 {
        self.content_height().saturating_sub(self.viewport.h)
    }

    /// Item rectangle in content coordinates.
    pub fn item_rect(&self, index: usize) -> Rect {
        Rect::new(0, index as u32 * self.item_height, self.viewport.w, self.item_height)
    }
}

/// Text input rendering the live buffer of `id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub id: String,
    pub rect: Rect,
}

/// Read-only area rendering the last submitted value of `field`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplaySpec {
    pub field: String,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenSpec {
    pub id: String,
    pub image: String,
    pub annotations: String,
    pub background: [u8; 3],
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub lists: Vec<ListSpec>,
    #[serde(default)]
    pub fields: Vec<FieldSpec>,
    #[serde(default)]
    pub displays: Vec<DisplaySpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticAction {
    Home,
    None,
}

/// System control whose look and position never change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticRegion {
    pub name: String,
    pub rect: Rect,
    pub action: StaticAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyboardSpec {
    pub image: String,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub launcher: String,
    pub apps: BTreeMap<String, String>,
    pub screens: Vec<ScreenSpec>,
    pub keyboard: KeyboardSpec,
    pub static_regions: Vec<StaticRegion>,
    pub text_color: [u8; 3],
    pub text_scale: u32,
}

/// One entry of an annotation sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub rect: Rect,
    pub text: String,
    pub confidence: f64,
}

/// A validated package with all assets in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct DevicePackage {
    pub(crate) manifest: Manifest,
    pub(crate) screen_images: BTreeMap<String, Image>,
    pub(crate) screen_annotations: BTreeMap<String, Vec<Annotation>>,
    pub(crate) list_contents: BTreeMap<String, Image>,
    pub(crate) list_annotations: BTreeMap<String, Vec<Annotation>>,
    pub(crate) keyboard_image: Image,
}

/// Scroll and keyboard state recovered from a screenshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameState {
    pub screen: String,
    pub list_offsets: BTreeMap<String, u32>,
    pub keyboard_visible: bool,
}

impl DevicePackage {
    /// Assembles and validates a package from in-memory parts.
    pub fn from_parts(
        manifest: Manifest,
        screen_images: BTreeMap<String, Image>,
        screen_annotations: BTreeMap<String, Vec<Annotation>>,
        list_contents: BTreeMap<String, Image>,
        list_annotations: BTreeMap<String, Vec<Annotation>>,
        keyboard_image: Image,
    ) -> Result<Self, DeviceError> {
        let pkg = DevicePackage {
            manifest,
            screen_images,
            screen_annotations,
            list_contents,
            list_annotations,
            keyboard_image,
        };
        pkg.validate()?;
        Ok(pkg)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn id(&self) -> &str {
        &self.manifest.id
    }

    pub fn width(&self) -> u32 {
        self.manifest.width
    }

    pub fn height(&self) -> u32 {
        self.manifest.height
    }

    pub fn launcher(&self) -> &str {
        &self.manifest.launcher
    }

    pub fn screen(&self, id: &str) -> Option<&ScreenSpec> {
        self.manifest.screens.iter().find(|s| s.id == id)
    }

    pub fn screens(&self) -> impl Iterator<Item = &ScreenSpec> {
        self.manifest.screens.iter()
    }

    pub fn screen_image(&self, id: &str) -> Option<&Image> {
        self.screen_images.get(id)
    }

    pub fn screen_annotations(&self, id: &str) -> &[Annotation] {
        self.screen_annotations.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn list(&self, id: &str) -> Option<(&ScreenSpec, &ListSpec)> {
        self.manifest.screens.iter().find_map(|s| s.lists.iter().find(|l| l.id == id).map(|l| (s, l)))
    }

    pub fn list_content(&self, id: &str) -> Option<&Image> {
        self.list_contents.get(id)
    }

    pub fn list_annotations(&self, id: &str) -> &[Annotation] {
        self.list_annotations.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn keyboard_image(&self) -> &Image {
        &self.keyboard_image
    }

    pub fn keyboard_rect(&self) -> Rect {
        self.manifest.keyboard.rect
    }

    pub fn static_regions(&self) -> &[StaticRegion] {
        &self.manifest.static_regions
    }

    pub fn app_entry(&self, app: &str) -> Option<&str> {
        self.manifest.apps.get(app).map(String::as_str)
    }

    /// Static region containing the point, if any.
    pub fn static_region_at(&self, x: u32, y: u32) -> Option<&StaticRegion> {
        self.manifest.static_regions.iter().find(|r| r.rect.contains(x, y))
    }

    /// Screens reachable from the launcher through any action.
    pub fn reachable_screens(&self) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([self.manifest.launcher.clone()]);
        while let Some(id) = queue.pop_front() {
            if !seen.insert(id.clone()) {
                continue;
            }
            let Some(screen) = self.screen(&id) else { continue };
            let actions = screen
                .regions
                .iter()
                .map(|r| &r.action)
                .chain(screen.lists.iter().flat_map(|l| l.items.iter().map(|i| &i.action)));
            for action in actions {
                let next = match action {
                    Action::Navigate { screen } => Some(screen.as_str()),
                    Action::Submit { screen: Some(s), .. } => Some(s.as_str()),
                    Action::Launch { app } => self.app_entry(app),
                    _ => None,
                };
                if let Some(n) = next {
                    queue.push_back(n.to_string());
                }
            }
        }
        seen
    }

    /// Areas whose pixels depend on device state rather than the base layer.
    fn dynamic_rects(&self, screen: &ScreenSpec) -> Vec<Rect> {
        let mut rects: Vec<Rect> = screen.lists.iter().map(|l| l.viewport).collect();
        rects.extend(screen.fields.iter().map(|f| f.rect));
        rects.extend(screen.displays.iter().map(|d| d.rect));
        if !screen.fields.is_empty() {
            rects.push(self.manifest.keyboard.rect);
        }
        rects
    }

    /// Compares `frame` with the base layer of `screen` outside its dynamic
    /// areas.
    fn base_layer_matches(&self, frame: &Image, screen: &ScreenSpec) -> bool {
        let Some(base) = self.screen_images.get(&screen.id) else { return false };
        if frame.width() != base.width() || frame.height() != base.height() {
            return false;
        }
        let masked = self.dynamic_rects(screen);
        for y in 0..frame.height() {
            let mut spans = vec![(0u32, frame.width())];
            for r in masked.iter().filter(|r| y >= r.y && y < r.bottom()) {
                spans = spans
                    .into_iter()
                    .flat_map(|(a, b)| {
                        let mut out = Vec::with_capacity(2);
                        if r.x > a {
                            out.push((a, r.x.min(b)));
                        }
                        if r.right() < b {
                            out.push((r.right().max(a), b));
                        }
                        out.into_iter().filter(|(s, e)| s < e)
                    })
                    .collect();
            }
            for (a, b) in spans {
                if frame.row(a, y, b - a) != base.row(a, y, b - a) {
                    return false;
                }
            }
        }
        true
    }

    pub fn keyboard_visible_in(&self, frame: &Image) -> bool {
        let rect = self.manifest.keyboard.rect;
        frame.check_rect(&rect).is_ok()
            && (0..rect.h).all(|row| frame.row(rect.x, rect.y + row, rect.w) == self.keyboard_image.row(0, row, rect.w))
    }

    /// Identifies the screen by its base layer and recovers list offsets.
    pub fn identify(&self, frame: &Image) -> Option<FrameState> {
        let screen = self.manifest.screens.iter().find(|s| self.base_layer_matches(frame, s))?;
        let keyboard_visible = !screen.fields.is_empty() && self.keyboard_visible_in(frame);
        let kb = self.manifest.keyboard.rect;
        let mut list_offsets = BTreeMap::new();
        for list in &screen.lists {
            let content = self.list_contents.get(&list.id)?;
            let vp = list.viewport;
            let visible_rows: Vec<u32> = (0..vp.h.min(list.content_height()))
                .filter(|row| !(keyboard_visible && kb.intersects(&Rect::new(vp.x, vp.y + row, vp.w, 1))))
                .collect();
            let offset = (0..=list.max_offset()).find(|&off| {
                visible_rows.iter().all(|&row| frame.row(vp.x, vp.y + row, vp.w) == content.row(0, off + row, vp.w))
            })?;
            list_offsets.insert(list.id.clone(), offset);
        }
        Some(FrameState { screen: screen.id.clone(), list_offsets, keyboard_visible })
    }

    /// Checks every package invariant, naming the first offender.
    pub fn validate(&self) -> Result<(), DeviceError> {
        let m = &self.manifest;
        let invalid = |what: String| Err(DeviceError::Validation(what));
        if m.format_version != FORMAT_VERSION {
            return Err(DeviceError::FormatVersion { found: m.format_version, expected: FORMAT_VERSION });
        }
        if m.width == 0 || m.height == 0 {
            return invalid("screen dimensions must be positive".into());
        }
        if m.text_scale == 0 {
            return invalid("text_scale must be positive".into());
        }
        let screen_ids: BTreeSet<&str> = m.screens.iter().map(|s| s.id.as_str()).collect();
        if screen_ids.len() != m.screens.len() {
            return invalid("duplicate screen id".into());
        }
        if !screen_ids.contains(m.launcher.as_str()) {
            return invalid(format!("launcher screen '{}' does not exist", m.launcher));
        }
        for (app, entry) in &m.apps {
            if !screen_ids.contains(entry.as_str()) {
                return invalid(format!("app '{app}' entry screen '{entry}' does not exist"));
            }
        }
        let field_ids: BTreeSet<&str> = m.screens.iter().flat_map(|s| s.fields.iter().map(|f| f.id.as_str())).collect();
        let mut list_ids = BTreeSet::new();
        let in_bounds = |r: &Rect| r.fits_in(m.width, m.height);
        let check_action = |owner: &str, a: &Action| -> Result<(), DeviceError> {
            match a {
                Action::Navigate { screen } | Action::Submit { screen: Some(screen), .. }
                    if !screen_ids.contains(screen.as_str()) =>
                {
                    Err(DeviceError::Validation(format!("{owner}: target screen '{screen}' does not exist")))
                }
                Action::FocusField { field } | Action::Submit { field, .. } if !field_ids.contains(field.as_str()) => {
                    Err(DeviceError::Validation(format!("{owner}: field '{field}' does not exist")))
                }
                Action::Launch { app } if !m.apps.contains_key(app) => {
                    Err(DeviceError::Validation(format!("{owner}: app '{app}' does not exist")))
                }
                _ => Ok(()),
            }
        };
        for s in &m.screens {
            let img = self
                .screen_images
                .get(&s.id)
                .ok_or_else(|| DeviceError::Validation(format!("screen '{}': image '{}' missing", s.id, s.image)))?;
            if img.width() != m.width || img.height() != m.height {
                return invalid(format!(
                    "screen '{}': image is {}x{}, expected {}x{}",
                    s.id,
                    img.width(),
                    img.height(),
                    m.width,
                    m.height
                ));
            }
            for (i, r) in s.regions.iter().enumerate() {
                if !in_bounds(&r.rect) {
                    return invalid(format!("screen '{}' region {i}: {:?} out of bounds", s.id, r.rect));
                }
                check_action(&format!("screen '{}' region {i}", s.id), &r.action)?;
            }
            for f in &s.fields {
                if !in_bounds(&f.rect) {
                    return invalid(format!("screen '{}' field '{}': {:?} out of bounds", s.id, f.id, f.rect));
                }
            }
            for d in &s.displays {
                if !in_bounds(&d.rect) {
                    return invalid(format!("screen '{}' display: {:?} out of bounds", s.id, d.rect));
                }
                if !field_ids.contains(d.field.as_str()) {
                    return invalid(format!("screen '{}' display: field '{}' does not exist", s.id, d.field));
                }
            }
            for a in self.screen_annotations(&s.id) {
                if !in_bounds(&a.rect) {
                    return invalid(format!("screen '{}' annotation '{}': {:?} out of bounds", s.id, a.text, a.rect));
                }
                if !(0.0..=1.0).contains(&a.confidence) {
                    return invalid(format!("screen '{}' annotation '{}': confidence {}", s.id, a.text, a.confidence));
                }
            }
            for l in &s.lists {
                if !list_ids.insert(l.id.as_str()) {
                    return invalid(format!("duplicate list id '{}'", l.id));
                }
                if !in_bounds(&l.viewport) || l.item_height == 0 {
                    return invalid(format!(
                        "list '{}': bad viewport {:?} / item height {}",
                        l.id, l.viewport, l.item_height
                    ));
                }
                let content = self.list_contents.get(&l.id).ok_or_else(|| {
                    DeviceError::Validation(format!("list '{}': content '{}' missing", l.id, l.content))
                })?;
                if l.items.is_empty() || content.width() != l.viewport.w || content.height() != l.content_height() {
                    return invalid(format!(
                        "list '{}': content is {}x{}, expected {}x{}",
                        l.id,
                        content.width(),
                        content.height(),
                        l.viewport.w,
                        l.content_height()
                    ));
                }
                for (i, item) in l.items.iter().enumerate() {
                    check_action(&format!("list '{}' item {i}", l.id), &item.action)?;
                }
                for a in self.list_annotations(&l.id) {
                    if !a.rect.fits_in(content.width(), content.height()) {
                        return invalid(format!("list '{}' annotation '{}': {:?} out of bounds", l.id, a.text, a.rect));
                    }
                }
            }
        }
        if !in_bounds(&m.keyboard.rect)
            || self.keyboard_image.width() != m.keyboard.rect.w
            || self.keyboard_image.height() != m.keyboard.rect.h
        {
            return invalid(format!("keyboard: rect {:?} inconsistent with image", m.keyboard.rect));
        }
        for r in &m.static_regions {
            if !in_bounds(&r.rect) {
                return invalid(format!("static region '{}': {:?} out of bounds", r.name, r.rect));
            }
        }
        for a in &m.screens {
            for b in &m.screens {
                if a.id != b.id && self.base_layer_matches(&self.screen_images[&a.id], b) {
                    return invalid(format!("screens '{}' and '{}' are indistinguishable", a.id, b.id));
                }
            }
        }
        Ok(())
    }

    /// Reads and validates a package directory.
    pub fn load(dir: &Path) -> Result<Self, DeviceError> {
        let manifest_path = dir.join("manifest.json");
        let text = fs::read_to_string(&manifest_path)
            .map_err(|e| DeviceError::Io(format!("{}: {e}", manifest_path.display())))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| DeviceError::Validation(format!("manifest.json: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(DeviceError::FormatVersion { found: manifest.format_version, expected: FORMAT_VERSION });
        }
        let image = |rel: &str| {
            Image::load_png(&dir.join(rel)).map_err(|e| DeviceError::Validation(format!("image '{rel}': {e}")))
        };
        let sidecar = |rel: &str| -> Result<Vec<Annotation>, DeviceError> {
            let p = dir.join(rel);
            let t = fs::read_to_string(&p).map_err(|e| DeviceError::Validation(format!("sidecar '{rel}': {e}")))?;
            serde_json::from_str(&t).map_err(|e| DeviceError::Validation(format!("sidecar '{rel}': {e}")))
        };
        let mut screen_images = BTreeMap::new();
        let mut screen_annotations = BTreeMap::new();
        let mut list_contents = BTreeMap::new();
        let mut list_annotations = BTreeMap::new();
        for s in &manifest.screens {
            screen_images.insert(s.id.clone(), image(&s.image)?);
            screen_annotations.insert(s.id.clone(), sidecar(&s.annotations)?);
            for l in &s.lists {
                list_contents.insert(l.id.clone(), image(&l.content)?);
                list_annotations.insert(l.id.clone(), sidecar(&l.annotations)?);
            }
        }
        let keyboard_image = image(&manifest.keyboard.image)?;
        DevicePackage::from_parts(
            manifest,
            screen_images,
            screen_annotations,
            list_contents,
            list_annotations,
            keyboard_image,
        )
    }

    /// Writes the package directory; output bytes depend only on contents.
    pub fn save(&self, dir: &Path) -> Result<(), DeviceError> {
        let io = |e: std::io::Error| DeviceError::Io(e.to_string());
        let write_png = |rel: &str, img: &Image| -> Result<(), DeviceError> {
            let p = dir.join(rel);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).map_err(io)?;
            }
            img.save_png(&p).map_err(|e| DeviceError::Io(e.to_string()))
        };
        let write_json = |rel: &str, v: &dyn erased::Json| -> Result<(), DeviceError> {
            let p = dir.join(rel);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).map_err(io)?;
            }
            fs::write(p, v.to_pretty()).map_err(io)
        };
        fs::create_dir_all(dir).map_err(io)?;
        write_json("manifest.json", &self.manifest)?;
        for s in &self.manifest.screens {
            write_png(&s.image, &self.screen_images[&s.id])?;
            write_json(&s.annotations, &self.screen_annotations.get(&s.id).cloned().unwrap_or_default())?;
            for l in &s.lists {
                write_png(&l.content, &self.list_contents[&l.id])?;
                write_json(&l.annotations, &self.list_annotations.get(&l.id).cloned().unwrap_or_default())?;
            }
        }
        write_png(&self.manifest.keyboard.image, &self.keyboard_image)
    }
}

mod erased {
    pub trait Json {
        fn to_pretty(&self) -> String;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_pretty(&self) -> String {
            let mut s = serde_json::to_string_pretty(self).expect("manifest types serialize");
            s.push('\n');
            s
        }
    }
}
