use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Result, StatsError};
use crate::eventio::{event_rate, EventStream, FrameSequence};
use crate::evsim::{frames_to_events, EventSimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastEstimate {
    pub threshold: f64,
    /// Adjacent grid thresholds whose simulated rates enclose the observed rate.
    pub bracket: (f64, f64),
    /// Events per pixel per second.
    pub observed_rate: f64,
    /// `(threshold, simulated rate)` for every grid point.
    pub curve: Vec<(f64, f64)>,
}

/// Simulated event rate at each of `points` evenly spaced thresholds in
/// `[lo, hi]`.
pub fn event_rate_curve(frames: &FrameSequence, (lo, hi): (f64, f64), points: usize, base: &EventSimConfig) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(StatsError::DegenerateGrid(points));
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(StatsError::InvalidInput(format!("threshold range [{lo}, {hi}]")));
    }
    (0..points)
        .into_par_iter()
        .map(|k| {
            let c = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            let stream = frames_to_events(frames, &EventSimConfig { contrast_threshold: c, ..*base })?;
            Ok((c, event_rate(&stream)?))
        })
        .collect()
}

/// Finds the threshold at which simulating `frames` reproduces the event rate
/// of `observed`, by linear interpolation on a grid of thresholds.
pub fn estimate_contrast_threshold(
    observed: &EventStream,
    frames: &FrameSequence,
    range: (f64, f64),
    points: usize,
    base: &EventSimConfig,
) -> Result<ContrastEstimate> {
    let (w, h) = frames.shape().ok_or(StatsError::InvalidInput("empty recording".into()))?;
    if (observed.width() as usize, observed.height() as usize) != (w, h) {
        return Err(StatsError::InvalidInput(format!(
            "observed stream is {}x{}, frames are {w}x{h}",
            observed.width(),
            observed.height()
        )));
    }
    let span = frames.timestamps().last().unwrap();
    if observed.duration() != *span {
        return Err(StatsError::InvalidInput(format!("observed duration {} vs frames {span}", observed.duration())));
    }
    let observed_rate = event_rate(observed)?;
    let curve = event_rate_curve(frames, range, points, base)?;
    let (max_rate, min_rate) = (curve[0].1, curve[curve.len() - 1].1);
    if observed_rate > max_rate || observed_rate < min_rate {
        return Err(StatsError::RateOutOfRange { observed: observed_rate, min: min_rate, max: max_rate });
    }
    let k = curve
        .windows(2)
        .position(|w| w[0].1 >= observed_rate && observed_rate >= w[1].1)
        .ok_or_else(|| StatsError::InvalidInput("simulated rate is not monotone in the threshold".into()))?;
    let ((c0, r0), (c1, r1)) = (curve[k], curve[k + 1]);
    let threshold = if r0 > r1 { c0 + (c1 - c0) * (r0 - observed_rate) / (r0 - r1) } else { 0.5 * (c0 + c1) };
    Ok(ContrastEstimate { threshold, bracket: (c0, c1), observed_rate, curve })
}
