//! Deterministic simulated touchscreen driven by a device package.

pub mod builder;
pub mod font;
mod mutate;
mod package;
pub mod render;
pub mod sample;
mod sim;

use std::path::Path;

use thiserror::Error;

pub use mutate::{icon_swap, mutate_package, IconSwap, Mutation};
pub use package::{
    Action, Annotation, DevicePackage, DisplaySpec, FieldSpec, FrameState, KeyboardSpec, ListItem, ListSpec, Manifest,
    Region, ScreenSpec, StaticAction, StaticRegion, FORMAT_VERSION,
};
pub use sim::{InputEvent, Key, SimDevice, TransitionOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("package validation failed: {0}")]
    Validation(String),
    #[error("package format version {found}, expected {expected}")]
    FormatVersion { found: u32, expected: u32 },
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("input state: {0}")]
    InputState(String),
    #[error("io: {0}")]
    Io(String),
}

/// Loads and validates a package directory.
pub fn load_package(dir: &Path) -> Result<DevicePackage, DeviceError> {
    DevicePackage::load(dir)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::sample::*;
    use super::*;
    use crate::vision::{Image, Rect};

    fn device() -> SimDevice {
        SimDevice::new(Arc::new(sample_package()))
    }

    #[test]
    fn fresh_device_shows_launcher_base() {
        let d = device();
        assert_eq!(&d.screenshot(), d.package().screen_image("launcher").unwrap());
        assert_eq!(d.screenshot(), d.screenshot());
    }

    #[test]
    fn taps_follow_manifest_actions() {
        let mut d = device();
        let (x, y) = app_icon_rect(1).center();
        assert!(matches!(d.inject(&InputEvent::tap(x, y)).unwrap(), TransitionOutcome::Launched { .. }));
        assert_eq!(d.current_screen(), "pizza_size");
        assert!(d.running_apps().contains("pizza"));
        let (x, y) = menu_button_rect(2).center();
        d.inject(&InputEvent::tap(x, y)).unwrap();
        assert_eq!(d.current_screen(), "pizza_type");
        let (x, y) = d.package().static_regions()[1].rect.center();
        assert_eq!(d.inject(&InputEvent::tap(x, y)).unwrap(), TransitionOutcome::Home);
        assert_eq!(d.current_screen(), "launcher");
    }

    #[test]
    fn typing_requires_focus_and_renders_text() {
        let mut d = device();
        d.inject(&InputEvent::AppLaunch { app: "messages".into() }).unwrap();
        d.inject(&InputEvent::tap(100, 120)).unwrap();
        assert_eq!(d.current_screen(), "chat_team");
        assert!(matches!(d.inject(&InputEvent::ch('x')), Err(DeviceError::InputState(_))));
        let before = d.screenshot();
        let (x, y) = CHAT_FIELD.center();
        d.inject(&InputEvent::tap(x, y)).unwrap();
        assert!(d.keyboard_visible());
        let with_kb = d.screenshot();
        assert_ne!(before, with_kb);
        for c in "hi".chars() {
            d.inject(&InputEvent::ch(c)).unwrap();
        }
        d.inject(&InputEvent::TypeChar { key: Key::Backspace }).unwrap();
        d.inject(&InputEvent::ch('o')).unwrap();
        assert_eq!(d.buffer("team_msg"), "ho");
        assert_ne!(d.screenshot(), with_kb);
        let (x, y) = CHAT_SEND.center();
        d.inject(&InputEvent::tap(x, y)).unwrap();
        assert_eq!(d.submitted("team_msg"), Some("ho"));
        assert!(!d.keyboard_visible());
    }

    #[test]
    fn swipe_scroll_clamps() {
        // 600px viewport, 20 items of 50px: 1000px content, 400px of travel
        let mut b = builder::PackageBuilder::new("tall", 200, 800);
        let items = (0..20).map(|i| (format!("item {i}"), Action::None)).collect();
        b.screen("home", "List", [255, 255, 255]).list("l", Rect::new(0, 60, 200, 600), 50, items).finish();
        let mut d = SimDevice::new(Arc::new(b.build().unwrap()));
        // the clamp oracle: min(max(0, 0 + 500), 1000 - 600)
        let expected = 500i64.clamp(0, 1000 - 600) as u32;
        let out = d.inject(&InputEvent::swipe(100, 640, 100, 140)).unwrap();
        assert_eq!(out, TransitionOutcome::Scrolled { list: "l".into(), offset: expected, delta: 400 });
        assert_eq!(d.scroll_offset("l"), 400);
        d.inject(&InputEvent::swipe(100, 100, 100, 300)).unwrap();
        assert_eq!(d.scroll_offset("l"), 200);
    }

    #[test]
    fn scrolled_list_matches_compositor_oracle() {
        let mut d = device();
        d.inject(&InputEvent::AppLaunch { app: "contacts".into() }).unwrap();
        let vp = contacts_viewport();
        d.inject(&InputEvent::swipe(120, vp.bottom() - 1, 120, vp.y)).unwrap();
        let off = d.scroll_offset("contacts_list");
        assert_eq!(off, vp.h - 1);
        // re-render from the manifest: base with the content window pasted in
        let pkg = d.package().clone();
        let mut expected = pkg.screen_image("contacts").unwrap().clone();
        let window = pkg.list_content("contacts_list").unwrap().crop(&Rect::new(0, off, vp.w, vp.h)).unwrap();
        expected.paste(&window, vp.x, vp.y).unwrap();
        assert_eq!(d.screenshot(), expected);
        let state = pkg.identify(&d.screenshot()).unwrap();
        assert_eq!(state.screen, "contacts");
        assert_eq!(state.list_offsets["contacts_list"], off);
    }

    #[test]
    fn reset_is_idempotent() {
        let mut d = device();
        d.inject(&InputEvent::AppLaunch { app: "school".into() }).unwrap();
        d.inject(&InputEvent::tap(40, 100)).unwrap();
        d.reset();
        let once = (d.current_screen().to_string(), d.screenshot());
        d.reset();
        assert_eq!(once, (d.current_screen().to_string(), d.screenshot()));
        assert_eq!(once.0, "launcher");
        assert!(d.running_apps().is_empty());
    }

    #[test]
    fn events_are_validated() {
        let mut d = device();
        assert!(d.inject(&InputEvent::tap(SAMPLE_WIDTH, 0)).is_err());
        assert!(d.inject(&InputEvent::Tap { x: 1, y: 1, duration_ms: 0 }).is_err());
        assert!(d.inject(&InputEvent::AppLaunch { app: "nope".into() }).is_err());
    }

    #[test]
    fn package_round_trips_through_disk() {
        let pkg = sample_package();
        let dir = tempfile::tempdir().unwrap();
        pkg.save(dir.path()).unwrap();
        let back = load_package(dir.path()).unwrap();
        assert_eq!(back, pkg);
    }

    #[test]
    fn missing_image_is_named() {
        let mut b = builder::PackageBuilder::new("one", 100, 200);
        b.screen("only", "One", [1, 2, 3]).finish();
        let pkg = b.build().unwrap();
        let dir = tempfile::tempdir().unwrap();
        pkg.save(dir.path()).unwrap();
        assert!(load_package(dir.path()).is_ok());
        std::fs::remove_file(dir.path().join("screens/only.png")).unwrap();
        let err = load_package(dir.path()).unwrap_err();
        assert!(err.to_string().contains("screens/only.png"), "{err}");
    }

    #[test]
    fn out_of_bounds_region_rejected() {
        let mut b = builder::PackageBuilder::new("bad", 100, 200);
        b.screen("s", "S", [9, 9, 9]).button(Rect::new(80, 60, 30, 10), "Wide", Action::None).finish();
        let err = b.build().unwrap_err();
        assert!(err.to_string().contains("region 0"), "{err}");
    }

    #[test]
    fn shift_translates_regions_and_pixels() {
        let pkg = sample_package();
        let shifted =
            mutate_package(&pkg, &Mutation::ShiftRegions { dx: 40, dy: 0, screens: vec!["school_home".into()] })
                .unwrap();
        let before = &pkg.screen("school_home").unwrap().regions;
        let after = &shifted.screen("school_home").unwrap().regions;
        for (a, b) in before.iter().zip(after) {
            assert_eq!(b.rect, a.rect.translated(40, 0).unwrap());
            let old = pkg.screen_image("school_home").unwrap().crop(&a.rect).unwrap();
            let new = shifted.screen_image("school_home").unwrap().crop(&b.rect).unwrap();
            assert_eq!(old, new);
        }
        assert!(mutate_package(&pkg, &Mutation::ShiftRegions { dx: 400, dy: 0, screens: vec!["school_home".into()] })
            .is_err());
    }

    #[test]
    fn reskin_keeps_text_and_other_pixels() {
        let pkg = sample_package();
        let region = pkg.screen("school_home").unwrap().regions[0].clone();
        let (ox, oy, side) = builder::ScreenBuilder::icon_area(region.rect);
        let icon = Image::filled(side, side, [200, 30, 160]);
        let skinned = mutate_package(
            &pkg,
            &Mutation::Reskin { swaps: vec![IconSwap { screen: "school_home".into(), region: 0, at: (ox, oy), icon }] },
        )
        .unwrap();
        let s = skinned.screen("school_home").unwrap();
        assert_eq!(s.regions.iter().map(|r| &r.text).collect::<Vec<_>>(), ["Grades", "Courses", "Profile"]);
        let (a, b) = (pkg.screen_image("school_home").unwrap(), skinned.screen_image("school_home").unwrap());
        assert_ne!(a.crop(&region.rect).unwrap(), b.crop(&region.rect).unwrap());
        let other = s.regions[1].rect;
        assert!(crate::vision::template_match_at(b, &a.crop(&other).unwrap(), &other, 0.0f64).unwrap());
    }

    #[test]
    fn reorder_moves_item() {
        let pkg = sample_package();
        let n = contact_names().len();
        // move index 1 to index 7, shifting 2..=7 up by one
        let mut perm: Vec<usize> = (0..n).collect();
        let moved = perm.remove(1);
        perm.insert(7, moved);
        let out =
            mutate_package(&pkg, &Mutation::ReorderList { list: "contacts_list".into(), permutation: perm.clone() })
                .unwrap();
        let (_, list) = out.list("contacts_list").unwrap();
        assert_eq!(list.items[7].text, contact_names()[1]);
        for (i, &old) in perm.iter().enumerate() {
            assert_eq!(list.items[i].text, contact_names()[old]);
            assert_eq!(out.list_annotations("contacts_list")[i].text, contact_names()[old]);
        }
        let strip =
            |p: &DevicePackage, i: usize| p.list_content("contacts_list").unwrap().crop(&list.item_rect(i)).unwrap();
        assert_eq!(strip(&out, 7), strip(&pkg, 1));
        assert!(mutate_package(&pkg, &Mutation::ReorderList { list: "contacts_list".into(), permutation: vec![0; n] })
            .is_err());
    }
}
