//! Package mutations used to exercise positional, visual and ordering
//! changes between demonstration and execution.

use crate::vision::{Image, Rect};

use super::builder::ScreenBuilder;
use super::package::DevicePackage;
use super::render::draw_icon;
use super::DeviceError;

/// Replacement pixels pasted inside a region, leaving its text untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct IconSwap {
    pub screen: String,
    pub region: usize,
    /// Offset of the icon inside the region.
    pub at: (u32, u32),
    pub icon: Image,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mutation {
    /// Translates regions, fields and annotations (and their pixels) on the
    /// given screens.
    ShiftRegions {
        dx: i64,
        dy: i64,
        screens: Vec<String>,
    },
    Reskin {
        swaps: Vec<IconSwap>,
    },
    /// `permutation[i]` is the old index of the item placed at `i`.
    ReorderList {
        list: String,
        permutation: Vec<usize>,
    },
}

fn shift(r: &Rect, dx: i64, dy: i64, w: u32, h: u32, owner: &str) -> Result<Rect, DeviceError> {
    r.translated(dx, dy)
        .filter(|t| t.fits_in(w, h))
        .ok_or_else(|| DeviceError::Validation(format!("{owner}: {r:?} shifted by ({dx},{dy}) leaves the screen")))
}

/// A freshly drawn icon for an icon button, in a different colour scheme.
pub fn icon_swap(pkg: &DevicePackage, screen: &str, region: usize, seed: u32) -> Result<IconSwap, DeviceError> {
    let rect = pkg
        .screen(screen)
        .and_then(|s| s.regions.get(region))
        .ok_or_else(|| DeviceError::Validation(format!("reskin: screen '{screen}' has no region {region}")))?
        .rect;
    let (ox, oy, side) = ScreenBuilder::icon_area(rect);
    let mut icon = Image::filled(side, side, [250, 236, 220]);
    let all = icon.bounds();
    draw_icon(&mut icon, &all, seed, [170, 40, 120], [250, 236, 220]);
    Ok(IconSwap { screen: screen.to_string(), region, at: (ox, oy), icon })
}

/// Returns a new validated package with the mutation applied.
pub fn mutate_package(pkg: &DevicePackage, mutation: &Mutation) -> Result<DevicePackage, DeviceError> {
    let mut out = pkg.clone();
    let (w, h) = (pkg.width(), pkg.height());
    let tag = match mutation {
        Mutation::ShiftRegions { dx, dy, screens } => {
            for id in screens {
                let idx = out
                    .manifest
                    .screens
                    .iter()
                    .position(|s| &s.id == id)
                    .ok_or_else(|| DeviceError::Validation(format!("shift: screen '{id}' does not exist")))?;
                let spec = &mut out.manifest.screens[idx];
                let base = &pkg.screen_images[id];
                let mut img = base.clone();
                let mut moved = Vec::new();
                for (i, region) in spec.regions.iter_mut().enumerate() {
                    let target = shift(&region.rect, *dx, *dy, w, h, &format!("screen '{id}' region {i}"))?;
                    img.fill_rect(&region.rect, spec.background);
                    moved.push((base.crop(&region.rect).expect("validated region"), target));
                    region.rect = target;
                }
                for (crop, target) in moved {
                    img.paste(&crop, target.x, target.y).expect("shifted rect in bounds");
                }
                for field in &mut spec.fields {
                    field.rect = shift(&field.rect, *dx, *dy, w, h, &format!("field '{}'", field.id))?;
                }
                for a in out.screen_annotations.entry(id.clone()).or_default() {
                    a.rect = shift(&a.rect, *dx, *dy, w, h, &format!("annotation '{}'", a.text))?;
                }
                out.screen_images.insert(id.clone(), img);
            }
            "shift"
        }
        Mutation::Reskin { swaps } => {
            for swap in swaps {
                let spec = out.screen(&swap.screen).ok_or_else(|| {
                    DeviceError::Validation(format!("reskin: screen '{}' does not exist", swap.screen))
                })?;
                let region = spec.regions.get(swap.region).ok_or_else(|| {
                    DeviceError::Validation(format!("reskin: screen '{}' has no region {}", swap.screen, swap.region))
                })?;
                let target = Rect::new(
                    region.rect.x + swap.at.0,
                    region.rect.y + swap.at.1,
                    swap.icon.width(),
                    swap.icon.height(),
                );
                if !region.rect.contains_rect(&target) {
                    return Err(DeviceError::Validation(format!(
                        "reskin: icon {target:?} does not fit region {:?}",
                        region.rect
                    )));
                }
                let img = out.screen_images.get_mut(&swap.screen).expect("validated screen");
                img.paste(&swap.icon, target.x, target.y).expect("checked placement");
            }
            "reskin"
        }
        Mutation::ReorderList { list, permutation } => {
            let (screen_id, spec) = pkg
                .list(list)
                .map(|(s, l)| (s.id.clone(), l.clone()))
                .ok_or_else(|| DeviceError::Validation(format!("reorder: list '{list}' does not exist")))?;
            let n = spec.items.len();
            let mut seen = vec![false; n];
            if permutation.len() != n || !permutation.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true)) {
                return Err(DeviceError::Validation(format!("reorder: not a permutation of {n} items")));
            }
            let content = &pkg.list_contents[list];
            let mut new_content = content.clone();
            for (i, &old) in permutation.iter().enumerate() {
                let strip = content.crop(&spec.item_rect(old)).expect("item within content");
                let dst = spec.item_rect(i);
                new_content.paste(&strip, dst.x, dst.y).expect("item within content");
            }
            let new_items = permutation.iter().map(|&p| spec.items[p].clone()).collect();
            let strip_of = |r: &Rect| (r.y / spec.item_height) as usize;
            let mut new_annotations = Vec::new();
            for (i, &old) in permutation.iter().enumerate() {
                for a in pkg.list_annotations(list).iter().filter(|a| strip_of(&a.rect) == old) {
                    let mut moved = a.clone();
                    moved.rect.y = a.rect.y - old as u32 * spec.item_height + i as u32 * spec.item_height;
                    new_annotations.push(moved);
                }
            }
            let screen = out.manifest.screens.iter_mut().find(|s| s.id == screen_id).expect("list owner");
            let target = screen.lists.iter_mut().find(|l| &l.id == list).expect("list");
            target.items = new_items;
            out.list_contents.insert(list.clone(), new_content);
            out.list_annotations.insert(list.clone(), new_annotations);
            "reorder"
        }
    };
    out.manifest.id = format!("{}+{tag}", pkg.id());
    out.validate()?;
    Ok(out)
}
