//! Pixel and string primitives: images, MSE template matching and
//! Levenshtein similarity.

mod image;
mod template;
mod text;

use thiserror::Error;

pub use self::image::{Image, Rect};
pub use self::template::{mse_score, template_match_at, template_match_global, MatchResult, MAX_MSE};
pub use self::text::{levenshtein, text_similarity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VisionError {
    #[error("image dimensions must be positive")]
    EmptyImage,
    #[error("pixel buffer has {actual} bytes, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("{rect:?} is outside a {width}x{height} image")]
    OutOfBounds { rect: Rect, width: u32, height: u32 },
    #[error("{rect:?} does not match template size {template_w}x{template_h}")]
    SizeMismatch { rect: Rect, template_w: u32, template_h: u32 },
    #[error("template {template_w}x{template_h} larger than screen {screen_w}x{screen_h}")]
    TemplateTooLarge { template_w: u32, template_h: u32, screen_w: u32, screen_h: u32 },
    #[error("png codec: {0}")]
    Codec(String),
    #[error("io: {0}")]
    Io(String),
}
