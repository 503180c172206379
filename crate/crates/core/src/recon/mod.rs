//! Classical event-to-video reconstruction: a leaky per-pixel integrator,
//! robust cross-view fusion, image quality metrics and x-t slice export.

mod fusion;
mod integrate;
mod metrics;
mod slice;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventio::EventIoError;

pub use fusion::{fuse_frames, fuse_views, FusionMode};
pub use integrate::{integrate_events, integrate_log, robust_range};
pub use metrics::{evaluate_clip, psnr, ssim, ssim_with, FrameMetrics, MetricsReport, SSIM_K1, SSIM_K2, SSIM_WINDOW};
pub use slice::{export_xt_slice, xt_slice, SlicePath};

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("invalid reconstruction config: {0}")]
    InvalidConfig(String),
    #[error("at least one view is required")]
    NoViews,
    #[error("{views} views but {homographies} homographies")]
    MissingHomographies { views: usize, homographies: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("timestamp mismatch: {0}")]
    TimestampMismatch(String),
    #[error("{width}x{height} frame is smaller than the {window}x{window} window")]
    TooSmall { width: usize, height: usize, window: usize },
    #[error("slice out of bounds: {0}")]
    SliceOutOfBounds(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] EventIoError),
}

pub type Result<T> = std::result::Result<T, ReconError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconConfig {
    /// Log-intensity step added per event.
    pub contrast_threshold: f64,
    /// Decay rate toward the spatial mean, per second.
    pub leak_rate: f64,
    pub fusion: FusionMode,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self { contrast_threshold: 0.2, leak_rate: 1.0, fusion: FusionMode::Median }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.contrast_threshold > 0.0 && self.contrast_threshold.is_finite()) {
            return Err(ReconError::InvalidConfig(format!("contrast threshold {}", self.contrast_threshold)));
        }
        if !(self.leak_rate >= 0.0 && self.leak_rate.is_finite()) {
            return Err(ReconError::InvalidConfig(format!("leak rate {}", self.leak_rate)));
        }
        Ok(())
    }
}
