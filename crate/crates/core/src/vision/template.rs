//! Template matching scored by mean squared pixel difference.
//!
//! Scores are normalized by the pixel-channel count so a tolerance means the
//! same thing for every template size. Sums are accumulated in integers, so a
//! score is exactly zero only for pixel-identical regions.

use crate::scalar::Scalar;

use super::{Image, Rect, VisionError};

/// Best placement found by [`template_match_global`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult<T> {
    pub rect: Rect,
    pub mse: T,
}

/// Largest possible score for 8-bit channels.
pub const MAX_MSE: f64 = 65025.0;

fn check_placement(screen: &Image, template: &Image, at: &Rect) -> Result<(), VisionError> {
    if at.w != template.width() || at.h != template.height() {
        return Err(VisionError::SizeMismatch {
            rect: *at,
            template_w: template.width(),
            template_h: template.height(),
        });
    }
    screen.check_rect(at)
}

#[inline]
fn row_sse(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let d = i32::from(p) - i32::from(q);
            (d * d) as u64
        })
        .sum()
}

/// Sum of squared differences at `(x, y)`, abandoning once it exceeds `limit`.
fn sse_bounded(screen: &Image, template: &Image, x: u32, y: u32, limit: u64) -> Option<u64> {
    let w = template.width();
    let mut sum = 0u64;
    for row in 0..template.height() {
        let a = screen.row(x, y + row, w);
        let b = template.row(0, row, w);
        if a != b {
            sum += row_sse(a, b);
            if sum > limit {
                return None;
            }
        }
    }
    Some(sum)
}

fn channel_count(template: &Image) -> u64 {
    u64::from(template.width()) * u64::from(template.height()) * 3
}

fn to_mse<T: Scalar>(sse: u64, n: u64) -> T {
    T::from_u64(sse).expect("u64 to scalar") / T::from_u64(n).expect("u64 to scalar")
}

/// Mean per-channel squared difference between `template` and the region of
/// `screen` at `at`.
pub fn mse_score<T: Scalar>(screen: &Image, template: &Image, at: &Rect) -> Result<T, VisionError> {
    check_placement(screen, template, at)?;
    let sse = sse_bounded(screen, template, at.x, at.y, u64::MAX).expect("unbounded");
    Ok(to_mse(sse, channel_count(template)))
}

/// Whether the template sits at exactly `at` within `tolerance`.
pub fn template_match_at<T: Scalar>(
    screen: &Image,
    template: &Image,
    at: &Rect,
    tolerance: T,
) -> Result<bool, VisionError> {
    Ok(mse_score::<T>(screen, template, at)? <= tolerance)
}

/// Integer bound above which no placement can be within `tolerance`.
fn prune_limit<T: Scalar>(tolerance: T, n: u64) -> u64 {
    if tolerance < T::zero() {
        return 0;
    }
    let bound = tolerance.to_f64().unwrap_or(f64::INFINITY) * n as f64;
    if !bound.is_finite() || bound >= u64::MAX as f64 / 2.0 {
        u64::MAX
    } else {
        // one unit of slack so float rounding never prunes an accepted placement
        bound.ceil() as u64 + 1
    }
}

/// Slides `template` over every placement of `screen` and returns the
/// minimal-score placement if it is within `tolerance`. Ties go to the
/// smallest `y`, then the smallest `x`.
pub fn template_match_global<T: Scalar>(
    screen: &Image,
    template: &Image,
    tolerance: T,
) -> Result<Option<MatchResult<T>>, VisionError> {
    if template.width() > screen.width() || template.height() > screen.height() {
        return Err(VisionError::TemplateTooLarge {
            template_w: template.width(),
            template_h: template.height(),
            screen_w: screen.width(),
            screen_h: screen.height(),
        });
    }
    let n = channel_count(template);
    let limit = prune_limit(tolerance, n);
    let mut best: Option<(u64, u32, u32)> = None;
    for y in 0..=screen.height() - template.height() {
        for x in 0..=screen.width() - template.width() {
            let bound = best.map_or(limit, |(s, _, _)| s.min(limit));
            if let Some(sse) = sse_bounded(screen, template, x, y, bound) {
                if best.is_none_or(|(s, _, _)| sse < s) {
                    best = Some((sse, x, y));
                    if sse == 0 {
                        return Ok(Some(MatchResult {
                            rect: Rect::new(x, y, template.width(), template.height()),
                            mse: T::zero(),
                        }));
                    }
                }
            }
        }
    }
    Ok(best.and_then(|(sse, x, y)| {
        let mse: T = to_mse(sse, n);
        (mse <= tolerance).then(|| MatchResult { rect: Rect::new(x, y, template.width(), template.height()), mse })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> Image {
        let mut img = Image::filled(w, h, [0, 0, 0]);
        for y in 0..h {
            for x in 0..w {
                img.set_pixel(x, y, [(x * 17 + y * 3) as u8, (y * 29) as u8, (x * y) as u8]);
            }
        }
        img
    }

    #[test]
    fn identical_crop_scores_zero() {
        let screen = gradient(8, 8);
        let at = Rect::new(2, 3, 3, 2);
        let t = screen.crop(&at).unwrap();
        assert_eq!(mse_score::<f64>(&screen, &t, &at).unwrap(), 0.0);
        assert!(template_match_at(&screen, &t, &at, 0.0f64).unwrap());
    }

    #[test]
    fn single_pixel_arithmetic() {
        let screen = Image::filled(1, 1, [3, 0, 0]);
        let t = Image::filled(1, 1, [0, 0, 0]);
        assert_eq!(mse_score::<f64>(&screen, &t, &Rect::new(0, 0, 1, 1)).unwrap(), 3.0);
    }

    #[test]
    fn black_versus_white_is_max() {
        // direct summation: 12 channels each (255-0)^2, divided by 12
        let screen = Image::filled(2, 2, [255, 255, 255]);
        let t = Image::filled(2, 2, [0, 0, 0]);
        let expected: f64 = (0..12).map(|_| 255.0f64 * 255.0).sum::<f64>() / 12.0;
        assert_eq!(expected, 65025.0);
        assert_eq!(mse_score::<f64>(&screen, &t, &Rect::new(0, 0, 2, 2)).unwrap(), expected);
        assert!(template_match_at(&screen, &t, &Rect::new(0, 0, 2, 2), MAX_MSE).unwrap());
    }

    #[test]
    fn shifted_region_does_not_match_exactly() {
        let screen = gradient(10, 10);
        let t = screen.crop(&Rect::new(3, 3, 4, 4)).unwrap();
        let shifted = Rect::new(4, 3, 4, 4);
        let oracle: u64 = (0..4u32)
            .flat_map(|dy| (0..4u32).map(move |dx| (dx, dy)))
            .flat_map(|(dx, dy)| {
                let a = screen.pixel(4 + dx, 3 + dy);
                let b = t.pixel(dx, dy);
                (0..3).map(move |c| (i64::from(a[c]) - i64::from(b[c])).pow(2) as u64)
            })
            .sum();
        assert!(oracle > 0);
        assert!(!template_match_at(&screen, &t, &shifted, 0.0f64).unwrap());
    }

    #[test]
    fn bounds_and_size_errors() {
        let screen = gradient(4, 4);
        let t = Image::filled(2, 2, [0, 0, 0]);
        assert!(matches!(mse_score::<f64>(&screen, &t, &Rect::new(3, 3, 2, 2)), Err(VisionError::OutOfBounds { .. })));
        assert!(matches!(mse_score::<f64>(&screen, &t, &Rect::new(0, 0, 3, 2)), Err(VisionError::SizeMismatch { .. })));
        let big = Image::filled(5, 1, [0, 0, 0]);
        assert!(matches!(template_match_global(&screen, &big, 0.0f64), Err(VisionError::TemplateTooLarge { .. })));
    }

    #[test]
    fn finds_planted_template() {
        let mut screen = Image::filled(10, 10, [200, 200, 200]);
        let mut t = Image::filled(2, 2, [10, 20, 30]);
        t.set_pixel(1, 1, [90, 0, 0]);
        screen.paste(&t, 5, 3).unwrap();
        let m = template_match_global(&screen, &t, 0.0f64).unwrap().unwrap();
        assert_eq!(m.rect, Rect::new(5, 3, 2, 2));
        assert_eq!(m.mse, 0.0);
    }

    #[test]
    fn absent_template_yields_none() {
        let screen = Image::filled(10, 10, [200, 200, 200]);
        let t = Image::filled(2, 2, [10, 20, 30]);
        assert_eq!(template_match_global(&screen, &t, 0.0f64).unwrap(), None);
    }

    #[test]
    fn uniform_screen_ties_break_top_left() {
        let screen = Image::filled(6, 5, [0, 0, 0]);
        let t = Image::filled(1, 1, [0, 0, 0]);
        let m = template_match_global(&screen, &t, 0.0f64).unwrap().unwrap();
        assert_eq!(m.rect, Rect::new(0, 0, 1, 1));
    }

    #[test]
    fn tolerant_search_returns_minimum() {
        let mut screen = Image::filled(8, 8, [100, 100, 100]);
        screen.fill_rect(&Rect::new(5, 6, 2, 2), [12, 12, 12]);
        screen.fill_rect(&Rect::new(1, 1, 2, 2), [40, 40, 40]);
        let t = Image::filled(2, 2, [10, 10, 10]);
        let m = template_match_global(&screen, &t, 100.0f64).unwrap().unwrap();
        assert_eq!(m.rect, Rect::new(5, 6, 2, 2));
        assert_eq!(m.mse, 4.0);
        assert_eq!(template_match_global(&screen, &t, 3.9f32).unwrap(), None);
    }
}
