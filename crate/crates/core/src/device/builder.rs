//! Programmatic package authoring. Every screen gets the same system chrome:
//! a status bar, a title bar and a navigation bar with a home button.

use std::collections::BTreeMap;

use crate::vision::{Image, Rect};

use super::package::{
    Action, Annotation, DevicePackage, DisplaySpec, FieldSpec, KeyboardSpec, ListItem, ListSpec, Manifest, Region,
    ScreenSpec, StaticAction, StaticRegion, FORMAT_VERSION,
};
use super::render;
use super::DeviceError;

pub const STATUS_BAR_H: u32 = 16;
pub const TITLE_BAR_H: u32 = 32;
pub const NAV_BAR_H: u32 = 24;
pub const KEYBOARD_H: u32 = 120;

const INK: [u8; 3] = [20, 20, 30];
const CHROME: [u8; 3] = [40, 44, 52];
const CHROME_INK: [u8; 3] = [230, 230, 230];

pub struct PackageBuilder {
    id: String,
    width: u32,
    height: u32,
    launcher: Option<String>,
    apps: BTreeMap<String, String>,
    screens: Vec<ScreenSpec>,
    images: BTreeMap<String, Image>,
    annotations: BTreeMap<String, Vec<Annotation>>,
    list_contents: BTreeMap<String, Image>,
    list_annotations: BTreeMap<String, Vec<Annotation>>,
}

impl PackageBuilder {
    pub fn new(id: &str, width: u32, height: u32) -> Self {
        PackageBuilder {
            id: id.to_string(),
            width,
            height,
            launcher: None,
            apps: BTreeMap::new(),
            screens: Vec::new(),
            images: BTreeMap::new(),
            annotations: BTreeMap::new(),
            list_contents: BTreeMap::new(),
            list_annotations: BTreeMap::new(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// First row below the title bar.
    pub fn content_top(&self) -> u32 {
        STATUS_BAR_H + TITLE_BAR_H
    }

    /// First row of the navigation bar.
    pub fn content_bottom(&self) -> u32 {
        self.height - NAV_BAR_H
    }

    pub fn keyboard_rect(&self) -> Rect {
        Rect::new(0, self.content_bottom() - KEYBOARD_H, self.width, KEYBOARD_H)
    }

    pub fn home_button(&self) -> Rect {
        Rect::new(self.width / 2 - 24, self.height - NAV_BAR_H + 2, 48, NAV_BAR_H - 4)
    }

    pub fn launcher(&mut self, screen: &str) -> &mut Self {
        self.launcher = Some(screen.to_string());
        self
    }

    pub fn app(&mut self, app: &str, entry: &str) -> &mut Self {
        self.apps.insert(app.to_string(), entry.to_string());
        self
    }

    pub fn screen(&mut self, id: &str, title: &str, background: [u8; 3]) -> ScreenBuilder<'_> {
        let mut img = Image::filled(self.width, self.height, background);
        img.fill_rect(&Rect::new(0, 0, self.width, STATUS_BAR_H), CHROME);
        render::draw_text_left(&mut img, &Rect::new(0, 0, self.width, STATUS_BAR_H), "12:00", CHROME_INK, 1, 4);
        let title_rect = Rect::new(0, STATUS_BAR_H, self.width, TITLE_BAR_H);
        img.fill_rect(&title_rect, [60, 90, 160]);
        render::draw_text_left(&mut img, &title_rect, title, [255, 255, 255], 2, 8);
        img.fill_rect(&Rect::new(0, self.content_bottom(), self.width, NAV_BAR_H), CHROME);
        let home = self.home_button();
        img.fill_rect(&home, [90, 94, 104]);
        render::draw_text_centered(&mut img, &home, "HOME", CHROME_INK, 1);
        ScreenBuilder {
            pkg: self,
            spec: ScreenSpec {
                id: id.to_string(),
                image: format!("screens/{id}.png"),
                annotations: format!("screens/{id}.annotations.json"),
                background,
                regions: Vec::new(),
                lists: Vec::new(),
                fields: Vec::new(),
                displays: Vec::new(),
            },
            img,
            annotations: Vec::new(),
        }
    }

    fn keyboard_image(&self) -> Image {
        let r = self.keyboard_rect();
        let mut img = Image::filled(r.w, r.h, [200, 203, 210]);
        let rows = ["QWERTYUIOP", "ASDFGHJKL", "ZXCVBNM"];
        let key_h = r.h / 4;
        for (ri, row) in rows.iter().enumerate() {
            let n = row.len() as u32;
            let key_w = r.w / 10;
            let x0 = (r.w - n * key_w) / 2;
            for (ci, c) in row.chars().enumerate() {
                let key = Rect::new(x0 + ci as u32 * key_w + 1, ri as u32 * key_h + 2, key_w - 2, key_h - 4);
                img.fill_rect(&key, [250, 250, 250]);
                render::draw_text_centered(&mut img, &key, &c.to_string(), INK, 1);
            }
        }
        let space = Rect::new(r.w / 4, 3 * key_h + 2, r.w / 2, key_h - 4);
        img.fill_rect(&space, [250, 250, 250]);
        img
    }

    pub fn build(self) -> Result<DevicePackage, DeviceError> {
        let launcher = self
            .launcher
            .clone()
            .or_else(|| self.screens.first().map(|s| s.id.clone()))
            .ok_or_else(|| DeviceError::Validation("package has no screens".into()))?;
        let keyboard_rect = self.keyboard_rect();
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            id: self.id.clone(),
            width: self.width,
            height: self.height,
            launcher,
            apps: self.apps.clone(),
            screens: self.screens.clone(),
            keyboard: KeyboardSpec { image: "keyboard.png".into(), rect: keyboard_rect },
            static_regions: vec![
                StaticRegion {
                    name: "status_bar".into(),
                    rect: Rect::new(0, 0, self.width, STATUS_BAR_H),
                    action: StaticAction::None,
                },
                StaticRegion { name: "home".into(), rect: self.home_button(), action: StaticAction::Home },
            ],
            text_color: INK,
            text_scale: 1,
        };
        let keyboard = self.keyboard_image();
        DevicePackage::from_parts(
            manifest,
            self.images,
            self.annotations,
            self.list_contents,
            self.list_annotations,
            keyboard,
        )
    }
}

pub struct ScreenBuilder<'a> {
    pkg: &'a mut PackageBuilder,
    spec: ScreenSpec,
    img: Image,
    annotations: Vec<Annotation>,
}

impl ScreenBuilder<'_> {
    fn interactive(&mut self, rect: Rect, text: &str, action: Action, confidence: f64) {
        self.spec.regions.push(Region { rect, text: text.to_string(), action });
        self.annotations.push(Annotation { rect, text: text.to_string(), confidence });
    }

    /// Static text drawn into the base layer.
    pub fn label(mut self, rect: Rect, text: &str) -> Self {
        render::draw_text_left(&mut self.img, &rect, text, INK, 1, 2);
        self
    }

    pub fn button(mut self, rect: Rect, text: &str, action: Action) -> Self {
        self.img.fill_rect(&rect, [225, 232, 245]);
        render::draw_border(&mut self.img, &rect, [70, 100, 170]);
        render::draw_text_centered(&mut self.img, &rect, text, INK, 1);
        self.interactive(rect, text, action, 0.9);
        self
    }

    /// Icon square above a text label. See [`Self::icon_area`].
    pub fn icon_button(mut self, rect: Rect, text: &str, seed: u32, action: Action) -> Self {
        let side = rect.w.min(rect.h.saturating_sub(14)).saturating_sub(8);
        let icon = Rect::new(rect.x + (rect.w - side) / 2, rect.y + 4, side, side);
        self.img.fill_rect(&rect, self.spec.background);
        render::draw_icon(&mut self.img, &icon, seed, [40, 120, 90], [245, 245, 240]);
        let label = Rect::new(rect.x, rect.bottom() - 12, rect.w, 10);
        render::draw_text_centered(&mut self.img, &label, text, INK, 1);
        self.interactive(rect, text, action, 0.95);
        self
    }

    /// Offset and size of the icon that [`Self::icon_button`] draws.
    pub fn icon_area(rect: Rect) -> (u32, u32, u32) {
        let side = rect.w.min(rect.h.saturating_sub(14)).saturating_sub(8);
        ((rect.w - side) / 2, 4, side)
    }

    pub fn text_field(mut self, id: &str, rect: Rect, placeholder: &str) -> Self {
        self.img.fill_rect(&rect, [255, 255, 255]);
        render::draw_border(&mut self.img, &rect, [150, 150, 160]);
        render::draw_text_left(&mut self.img, &rect, placeholder, [150, 150, 160], 1, 3);
        self.spec.fields.push(FieldSpec { id: id.to_string(), rect });
        self.interactive(rect, placeholder, Action::FocusField { field: id.to_string() }, 0.8);
        self
    }

    pub fn display(mut self, field: &str, rect: Rect) -> Self {
        self.img.fill_rect(&rect, [236, 244, 236]);
        self.spec.displays.push(DisplaySpec { field: field.to_string(), rect });
        self
    }

    /// Scrollable list; each item is a strip with a small avatar and its text.
    pub fn list(mut self, id: &str, viewport: Rect, item_height: u32, items: Vec<(String, Action)>) -> Self {
        let mut content = Image::filled(viewport.w, item_height * items.len() as u32, [255, 255, 255]);
        let mut annotations = Vec::new();
        for (i, (text, _)) in items.iter().enumerate() {
            let strip = Rect::new(0, i as u32 * item_height, viewport.w, item_height);
            let avatar = Rect::new(6, strip.y + 4, item_height - 8, item_height - 8);
            let seed = text.bytes().fold(7u32, |h, b| h.wrapping_mul(31).wrapping_add(u32::from(b)));
            render::draw_icon(&mut content, &avatar, seed, [160, 60, 60], [250, 236, 236]);
            let text_rect = Rect::new(item_height, strip.y, viewport.w - item_height, item_height);
            render::draw_text_left(&mut content, &text_rect, text, INK, 1, 2);
            content.fill_rect(&Rect::new(0, strip.bottom() - 1, viewport.w, 1), [210, 210, 215]);
            annotations.push(Annotation { rect: strip, text: text.clone(), confidence: 0.85 });
        }
        self.spec.lists.push(ListSpec {
            id: id.to_string(),
            viewport,
            item_height,
            content: format!("lists/{id}.png"),
            annotations: format!("lists/{id}.annotations.json"),
            items: items.into_iter().map(|(text, action)| ListItem { text, action }).collect(),
        });
        self.pkg.list_contents.insert(id.to_string(), content);
        self.pkg.list_annotations.insert(id.to_string(), annotations);
        self
    }

    pub fn finish(self) {
        let id = self.spec.id.clone();
        self.pkg.images.insert(id.clone(), self.img);
        self.pkg.annotations.insert(id, self.annotations);
        self.pkg.screens.push(self.spec);
    }
}
