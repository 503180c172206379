use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ReconError, Result};
use crate::eventio::{Frame, FrameSequence};
use crate::lfgeom::{warp_frame, Homography};

/// Per-pixel statistic taken across aligned views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FusionMode {
    Mean,
    #[default]
    Median,
    /// Mean after dropping the `k` lowest and `k` highest values.
    TrimmedMean(usize),
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FusionMode::Mean => f.write_str("mean"),
            FusionMode::Median => f.write_str("median"),
            FusionMode::TrimmedMean(k) => write!(f, "trimmed-mean:{k}"),
        }
    }
}

impl FromStr for FusionMode {
    type Err = ReconError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mean" => Ok(FusionMode::Mean),
            "median" => Ok(FusionMode::Median),
            other => other
                .strip_prefix("trimmed-mean:")
                .and_then(|k| k.parse().ok())
                .map(FusionMode::TrimmedMean)
                .ok_or_else(|| ReconError::InvalidConfig(format!("unknown fusion mode {other:?}"))),
        }
    }
}

impl TryFrom<String> for FusionMode {
    type Error = ReconError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FusionMode> for String {
    fn from(m: FusionMode) -> String {
        m.to_string()
    }
}

impl FusionMode {
    /// Reduces `values` in place (they get reordered).
    pub fn reduce(self, values: &mut [f32]) -> f32 {
        let n = values.len();
        match self {
            FusionMode::Mean => (values.iter().map(|&v| v as f64).sum::<f64>() / n as f64) as f32,
            FusionMode::Median => {
                values.sort_by(f32::total_cmp);
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    ((values[n / 2 - 1] as f64 + values[n / 2] as f64) / 2.0) as f32
                }
            }
            FusionMode::TrimmedMean(k) => {
                values.sort_by(f32::total_cmp);
                let kept = &values[k..n - k];
                (kept.iter().map(|&v| v as f64).sum::<f64>() / kept.len() as f64) as f32
            }
        }
    }

    fn check(self, n: usize) -> Result<()> {
        match self {
            FusionMode::TrimmedMean(k) if 2 * k >= n => {
                Err(ReconError::InvalidConfig(format!("cannot trim {k} from each end of {n} views")))
            }
            _ => Ok(()),
        }
    }
}

/// Fuses frames of the same instant from several views.
pub fn fuse_frames(frames: &[Frame], mode: FusionMode) -> Result<Frame> {
    let first = frames.first().ok_or(ReconError::NoViews)?;
    mode.check(frames.len())?;
    let (w, h) = first.shape();
    if frames.iter().any(|f| f.shape() != (w, h)) {
        return Err(ReconError::ShapeMismatch("views differ in size".into()));
    }
    let mut buf = vec![0f32; frames.len()];
    let data = (0..w * h)
        .map(|i| {
            for (b, f) in buf.iter_mut().zip(frames) {
                *b = f.data()[i];
            }
            mode.reduce(&mut buf)
        })
        .collect();
    Ok(Frame::from_clamped(w, h, data)?)
}

/// Warps every view to the center view with its homography and fuses them
/// frame by frame.
pub fn fuse_views(views: &[FrameSequence], homographies: &[Homography], mode: FusionMode) -> Result<FrameSequence> {
    let first = views.first().ok_or(ReconError::NoViews)?;
    if homographies.len() != views.len() {
        return Err(ReconError::MissingHomographies { views: views.len(), homographies: homographies.len() });
    }
    if views.iter().any(|v| v.timestamps() != first.timestamps()) {
        return Err(ReconError::TimestampMismatch("views have different timestamps".into()));
    }
    if views.iter().any(|v| v.shape() != first.shape()) {
        return Err(ReconError::ShapeMismatch("views differ in size".into()));
    }
    mode.check(views.len())?;
    let frames = (0..first.len())
        .into_par_iter()
        .map(|k| {
            let aligned: Vec<Frame> = views.iter().zip(homographies).map(|(v, h)| warp_frame(&v.frames()[k], h)).collect();
            fuse_frames(&aligned, mode)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameSequence::new(frames, first.timestamps().to_vec())?)
}
