use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::device::DevicePackage;
use crate::vision::{Image, Rect};

use super::{BoundingBoxProposal, Detector, Ocr};

/// Detector that recognises package screens and reports their annotated
/// elements, including list items that are fully visible at the current
/// scroll offset. Elements under a visible keyboard are not reported.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    pkg: Arc<DevicePackage>,
}

impl OracleDetector {
    pub fn new(pkg: Arc<DevicePackage>) -> Self {
        OracleDetector { pkg }
    }
}

impl Detector for OracleDetector {
    fn detect(&self, screen: &Image) -> Vec<BoundingBoxProposal> {
        let Some(state) = self.pkg.identify(screen) else { return Vec::new() };
        let spec = self.pkg.screen(&state.screen).expect("identified screen exists");
        let kb = self.pkg.keyboard_rect();
        let hidden = |r: &Rect| state.keyboard_visible && r.intersects(&kb);
        let mut out: Vec<BoundingBoxProposal> = self
            .pkg
            .screen_annotations(&spec.id)
            .iter()
            .filter(|a| !hidden(&a.rect))
            .map(|a| BoundingBoxProposal { rect: a.rect, confidence: a.confidence })
            .collect();
        for list in &spec.lists {
            let vp = list.viewport;
            let off = state.list_offsets.get(&list.id).copied().unwrap_or(0);
            for a in self.pkg.list_annotations(&list.id) {
                if a.rect.y < off {
                    continue;
                }
                let rect = Rect::new(vp.x + a.rect.x, vp.y + a.rect.y - off, a.rect.w, a.rect.h);
                if vp.contains_rect(&rect) && !hidden(&rect) {
                    out.push(BoundingBoxProposal { rect, confidence: a.confidence });
                }
            }
        }
        out
    }
}

/// OCR that recognises the exact pixels of annotated elements and returns
/// their annotation text. Anything else reads as empty.
#[derive(Debug, Clone, Default)]
pub struct OracleOcr {
    known: HashMap<String, String>,
    corruption: f64,
    seed: u64,
}

impl OracleOcr {
    pub fn new(pkg: &DevicePackage) -> Self {
        let mut known = HashMap::new();
        for screen in pkg.screens() {
            let img = pkg.screen_image(&screen.id).expect("validated package");
            for a in pkg.screen_annotations(&screen.id) {
                let crop = img.crop(&a.rect).expect("validated annotation");
                known.entry(crop.digest()).or_insert_with(|| a.text.clone());
            }
            for list in &screen.lists {
                let content = pkg.list_content(&list.id).expect("validated package");
                for a in pkg.list_annotations(&list.id) {
                    let crop = content.crop(&a.rect).expect("validated annotation");
                    known.entry(crop.digest()).or_insert_with(|| a.text.clone());
                }
            }
        }
        OracleOcr { known, corruption: 0.0, seed: 0 }
    }

    /// Replaces each character with probability `rate`. The substitution is
    /// seeded by `seed` and the crop contents, so reads stay deterministic.
    pub fn with_corruption(mut self, rate: f64, seed: u64) -> Self {
        self.corruption = rate.clamp(0.0, 1.0);
        self.seed = seed;
        self
    }

    pub fn len(&self) -> usize {
        self.known.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known.is_empty()
    }
}

impl Ocr for OracleOcr {
    fn read(&self, crop: &Image) -> String {
        let digest = crop.digest();
        let Some(text) = self.known.get(&digest) else { return String::new() };
        if self.corruption <= 0.0 {
            return text.clone();
        }
        let salt = u64::from_str_radix(&digest[..16], 16).expect("hex digest");
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ salt);
        text.chars()
            .map(|c| if rng.gen_bool(self.corruption) { char::from(b'a' + rng.gen_range(0..26u8)) } else { c })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::device::sample::*;
    use crate::device::{InputEvent, SimDevice};
    use crate::perception::{detect_all_elements, extract_element, PerceptionError};

    #[test]
    fn every_annotated_element_round_trips() {
        let pkg = Arc::new(sample_package());
        let det = OracleDetector::new(pkg.clone());
        let ocr = OracleOcr::new(&pkg);
        for screen in pkg.screens() {
            let mut frame = pkg.screen_image(&screen.id).unwrap().clone();
            for l in &screen.lists {
                let window =
                    pkg.list_content(&l.id).unwrap().crop(&Rect::new(0, 0, l.viewport.w, l.viewport.h)).unwrap();
                frame.paste(&window, l.viewport.x, l.viewport.y).unwrap();
            }
            let img = &frame;
            let anns = pkg.screen_annotations(&screen.id);
            let all = detect_all_elements(img, &det, &ocr);
            let visible_items: usize = screen
                .lists
                .iter()
                .map(|l| pkg.list_annotations(&l.id).iter().filter(|a| a.rect.bottom() <= l.viewport.h).count())
                .sum();
            assert_eq!(all.len(), anns.len() + visible_items, "{}", screen.id);
            for a in anns {
                let (x, y) = a.rect.center();
                let obs = extract_element(img, x, y, &det, &ocr).unwrap();
                assert_eq!((obs.rect, obs.text.as_str()), (a.rect, a.text.as_str()), "{}", screen.id);
            }
        }
    }

    #[test]
    fn background_click_is_not_found() {
        let pkg = Arc::new(sample_package());
        let img = pkg.screen_image("grades").unwrap();
        let err = extract_element(img, 200, 300, &OracleDetector::new(pkg.clone()), &OracleOcr::new(&pkg)).unwrap_err();
        assert_eq!(err, PerceptionError::ElementNotFound { x: 200, y: 300 });
    }

    #[test]
    fn unknown_frames_have_no_proposals() {
        let pkg = Arc::new(sample_package());
        let det = OracleDetector::new(pkg.clone());
        assert!(det.detect(&Image::filled(SAMPLE_WIDTH, SAMPLE_HEIGHT, [1, 2, 3])).is_empty());
        assert_eq!(OracleOcr::new(&pkg).read(&Image::filled(3, 3, [0, 0, 0])), "");
    }

    #[test]
    fn scrolled_list_items_are_readable() {
        let pkg = Arc::new(sample_package());
        let mut d = SimDevice::new(pkg.clone());
        d.inject(&InputEvent::AppLaunch { app: "contacts".into() }).unwrap();
        let vp = contacts_viewport();
        d.inject(&InputEvent::swipe(120, vp.y + 100, 120, vp.y + 80)).unwrap();
        let frame = d.screenshot();
        let all = detect_all_elements(&frame, &OracleDetector::new(pkg.clone()), &OracleOcr::new(&pkg));
        let texts: Vec<_> = all.iter().map(|(o, _)| o.text.as_str()).collect();
        // offset 20: item 0 is cut off at the top, items 1..=7 are whole, item 8 is cut off
        assert_eq!(texts, &contact_names()[1..8]);
    }

    #[test]
    fn keyboard_hides_covered_elements() {
        let mut b = crate::device::builder::PackageBuilder::new("kb", 200, 300);
        let kb = b.keyboard_rect();
        b.screen("s", "S", [250, 250, 250])
            .text_field("f", crate::vision::Rect::new(10, 60, 100, 20), "Name")
            .button(crate::vision::Rect::new(10, kb.y + 10, 80, 20), "Hidden", crate::device::Action::None)
            .finish();
        let pkg = Arc::new(b.build().unwrap());
        let mut d = SimDevice::new(pkg.clone());
        let det = OracleDetector::new(pkg.clone());
        assert_eq!(det.detect(&d.screenshot()).len(), 2);
        d.inject(&InputEvent::tap(20, 70)).unwrap();
        assert_eq!(det.detect(&d.screenshot()).len(), 1);
    }

    #[test]
    fn corruption_is_deterministic() {
        let pkg = sample_package();
        let img = pkg.screen_image("pizza_type").unwrap();
        let crop = img.crop(&menu_button_rect(0)).unwrap();
        let noisy = OracleOcr::new(&pkg).with_corruption(0.5, 7);
        assert_eq!(noisy.read(&crop), noisy.read(&crop));
        assert_eq!(noisy.read(&crop).chars().count(), "Pepperoni".len());
        assert_eq!(
            OracleOcr::new(&pkg).with_corruption(1.0, 7).read(&crop).chars().filter(|c| c.is_ascii_lowercase()).count(),
            9
        );
    }
}
