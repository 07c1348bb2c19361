//! Drawing helpers used by the compositor and the package builder.

use crate::vision::{Image, Rect};

use super::font::{self, ADVANCE, GLYPH_H};

/// Draws `text` with its top-left at `(x, y)`; pixels outside `clip` (and the
/// image) are skipped.
pub fn draw_text(img: &mut Image, x: i64, y: i64, text: &str, rgb: [u8; 3], scale: u32, clip: &Rect) {
    let mut pen = x;
    for c in text.chars() {
        let g = font::glyph(c);
        for (col, bits) in g.iter().enumerate() {
            for row in 0..GLYPH_H {
                if bits >> row & 1 == 0 {
                    continue;
                }
                for sy in 0..scale {
                    for sx in 0..scale {
                        let px = pen + (col as i64) * i64::from(scale) + i64::from(sx);
                        let py = y + i64::from(row * scale + sy);
                        if px < 0 || py < 0 {
                            continue;
                        }
                        let (px, py) = (px as u32, py as u32);
                        if clip.contains(px, py) && px < img.width() && py < img.height() {
                            img.set_pixel(px, py, rgb);
                        }
                    }
                }
            }
        }
        pen += i64::from(ADVANCE * scale);
    }
}

/// Text horizontally and vertically centered in `rect`, clipped to it.
pub fn draw_text_centered(img: &mut Image, rect: &Rect, text: &str, rgb: [u8; 3], scale: u32) {
    let tw = i64::from(font::text_width(text, scale));
    let th = i64::from(font::text_height(scale));
    let x = i64::from(rect.x) + (i64::from(rect.w) - tw) / 2;
    let y = i64::from(rect.y) + (i64::from(rect.h) - th) / 2;
    draw_text(img, x, y, text, rgb, scale, rect);
}

/// Text left-aligned with `pad` pixels of inset, vertically centered.
pub fn draw_text_left(img: &mut Image, rect: &Rect, text: &str, rgb: [u8; 3], scale: u32, pad: u32) {
    let th = i64::from(font::text_height(scale));
    let y = i64::from(rect.y) + (i64::from(rect.h) - th) / 2;
    draw_text(img, i64::from(rect.x + pad), y, text, rgb, scale, rect);
}

pub fn draw_border(img: &mut Image, rect: &Rect, rgb: [u8; 3]) {
    let r = rect;
    img.fill_rect(&Rect::new(r.x, r.y, r.w, 1), rgb);
    img.fill_rect(&Rect::new(r.x, r.bottom() - 1, r.w, 1), rgb);
    img.fill_rect(&Rect::new(r.x, r.y, 1, r.h), rgb);
    img.fill_rect(&Rect::new(r.right() - 1, r.y, 1, r.h), rgb);
}

/// Deterministic glyph-like icon: a filled square with a pattern derived
/// from `seed`, so distinct seeds give distinct pixels.
pub fn draw_icon(img: &mut Image, rect: &Rect, seed: u32, fg: [u8; 3], bg: [u8; 3]) {
    img.fill_rect(rect, bg);
    let cells = 5u32;
    let cw = (rect.w / cells).max(1);
    let ch = (rect.h / cells).max(1);
    let mut state = seed.wrapping_mul(2_654_435_761).wrapping_add(0x9E37_79B9);
    for cy in 0..cells {
        for cx in 0..=cells / 2 {
            state ^= state << 13;
            state ^= state >> 17;
            state ^= state << 5;
            if state & 1 == 1 {
                for mirrored in [cx, cells - 1 - cx] {
                    let cell = Rect::new(rect.x + mirrored * cw, rect.y + cy * ch, cw, ch);
                    if rect.contains_rect(&cell) {
                        img.fill_rect(&cell, fg);
                    }
                }
            }
        }
    }
    draw_border(img, rect, fg);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_changes_pixels_inside_clip_only() {
        let mut img = Image::filled(40, 12, [255, 255, 255]);
        let clip = Rect::new(0, 0, 10, 12);
        draw_text(&mut img, 1, 2, "Hello", [0, 0, 0], 1, &clip);
        let dark = |img: &Image, xs: std::ops::Range<u32>| {
            xs.flat_map(|x| (0..12).map(move |y| (x, y))).filter(|&(x, y)| img.pixel(x, y) == [0, 0, 0]).count()
        };
        assert!(dark(&img, 0..10) > 0);
        assert_eq!(dark(&img, 10..40), 0);
    }

    #[test]
    fn different_text_renders_differently() {
        let r = Rect::new(0, 0, 60, 12);
        let mut a = Image::filled(60, 12, [255, 255, 255]);
        let mut b = a.clone();
        draw_text_centered(&mut a, &r, "Veggie", [0, 0, 0], 1);
        draw_text_centered(&mut b, &r, "Pepperoni", [0, 0, 0], 1);
        assert_ne!(a, b);
    }

    #[test]
    fn icons_depend_on_seed() {
        let r = Rect::new(0, 0, 20, 20);
        let mut a = Image::filled(20, 20, [0, 0, 0]);
        let mut b = a.clone();
        draw_icon(&mut a, &r, 1, [200, 0, 0], [255, 255, 255]);
        draw_icon(&mut b, &r, 2, [200, 0, 0], [255, 255, 255]);
        assert_ne!(a, b);
    }
}
