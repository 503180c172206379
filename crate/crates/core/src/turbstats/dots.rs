use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussfit::{fit_gaussian2d, GaussianFit, GaussianParams, Patch};
use super::{Result, StatsError};
use crate::eventio::{Frame, FrameSequence};

/// Nominal dot positions of a calibration grid, stored in row-alternating
/// (snake) order: left to right on even rows, right to left on odd rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotGridLayout {
    pub rows: usize,
    pub cols: usize,
    pub centers: Vec<(f64, f64)>,
    /// Half side of the square fitting window around each nominal center.
    pub roi_half: usize,
}

impl DotGridLayout {
    /// Evenly spaced `rows`x`cols` grid with `margin` pixels to the image
    /// border.
    pub fn uniform(width: usize, height: usize, rows: usize, cols: usize, margin: f64, roi_half: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(StatsError::InvalidInput("empty dot grid".into()));
        }
        let step = |n: usize, size: usize| if n > 1 { (size as f64 - 1.0 - 2.0 * margin) / (n - 1) as f64 } else { 0.0 };
        let (sx, sy) = (step(cols, width), step(rows, height));
        let mid = |n: usize, size: usize| if n > 1 { margin } else { (size as f64 - 1.0) / 2.0 };
        let (x0, y0) = (mid(cols, width), mid(rows, height));
        let mut centers = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for k in 0..cols {
                let c = if r % 2 == 0 { k } else { cols - 1 - k };
                centers.push((x0 + c as f64 * sx, y0 + r as f64 * sy));
            }
        }
        Ok(Self { rows, cols, centers, roi_half })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Position in the grid of snake index `i` as `(row, col)`.
    pub fn grid_position(&self, i: usize) -> (usize, usize) {
        let r = i / self.cols;
        let k = i % self.cols;
        (r, if r.is_multiple_of(2) { k } else { self.cols - 1 - k })
    }

    /// Index of the dot nearest the grid center.
    pub fn center_dot(&self) -> usize {
        let target = ((self.rows / 2) as f64, (self.cols / 2) as f64);
        (0..self.len())
            .min_by(|&a, &b| {
                let d = |i| {
                    let (r, c) = self.grid_position(i);
                    (r as f64 - target.0).powi(2) + (c as f64 - target.1).powi(2)
                };
                d(a).total_cmp(&d(b))
            })
            .unwrap_or(0)
    }

    /// Fitting window of dot `i` as `(x0, y0, w, h)`, clipped to the image.
    pub fn roi(&self, i: usize, width: usize, height: usize) -> (usize, usize, usize, usize) {
        let (cx, cy) = self.centers[i];
        let r = self.roi_half as f64;
        let x0 = (cx - r).round().max(0.0) as usize;
        let y0 = (cy - r).round().max(0.0) as usize;
        let x1 = ((cx + r).round() as usize + 1).min(width);
        let y1 = ((cy + r).round() as usize + 1).min(height);
        (x0, y0, x1.saturating_sub(x0), y1.saturating_sub(y0))
    }
}

/// Renders Gaussian dots of spread `sigma` and peak `amplitude` above
/// `background` at the layout's centers.
pub fn render_dot_grid(width: usize, height: usize, layout: &DotGridLayout, sigma: f64, amplitude: f64, background: f64) -> Frame {
    let dots: Vec<GaussianParams> = layout
        .centers
        .iter()
        .map(|&(cx, cy)| GaussianParams { amplitude, offset: 0.0, cx, cy, sigma_x: sigma, sigma_y: sigma })
        .collect();
    Frame::from_fn(width, height, |x, y| {
        (background + dots.iter().map(|d| d.eval(x as f64, y as f64)).sum::<f64>()) as f32
    })
    .expect("non-empty frame")
}

/// Fits every dot of one frame.
pub fn fit_dots(frame: &Frame, layout: &DotGridLayout) -> Result<Vec<GaussianFit>> {
    let (w, h) = frame.shape();
    (0..layout.len())
        .map(|i| {
            let (x0, y0, pw, ph) = layout.roi(i, w, h);
            let patch = Patch::from_frame(frame, x0, y0, pw, ph)?;
            let fit = fit_gaussian2d(&patch, None).and_then(|fit| {
                let (cx, cy) = (fit.params.cx, fit.params.cy);
                let inside = cx >= x0 as f64 && cy >= y0 as f64 && cx <= (x0 + pw - 1) as f64 && cy <= (y0 + ph - 1) as f64;
                if inside {
                    Ok(fit)
                } else {
                    Err(StatsError::CenterOutsideWindow { cx, cy })
                }
            });
            fit.map_err(|e| StatsError::DotFit { dot: i, source: Box::new(e) })
        })
        .collect()
}

/// Fits every dot in every frame, in parallel over frames.
pub fn track_dots(frames: &FrameSequence, layout: &DotGridLayout) -> Result<Vec<Vec<GaussianFit>>> {
    frames.frames().par_iter().map(|f| fit_dots(f, layout)).collect()
}

/// Sum of the samples in each dot's fitting window, per dot per frame.
pub fn dot_intensity_series(frames: &FrameSequence, layout: &DotGridLayout) -> Result<Vec<Vec<f64>>> {
    let (w, h) = frames.shape().ok_or(StatsError::InvalidInput("empty recording".into()))?;
    (0..layout.len())
        .map(|i| {
            let (x0, y0, pw, ph) = layout.roi(i, w, h);
            frames.frames().iter().map(|f| Ok(Patch::from_frame(f, x0, y0, pw, ph)?.sum())).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltVector {
    pub x: f64,
    pub y: f64,
}

impl TiltVector {
    pub fn dot(&self, o: &TiltVector) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }
}

/// Dot fits of a multi-view recording, indexed `[view][frame][dot]`, with the
/// turbulence-free reference centroids `[view][dot]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DotGridTrack {
    fits: Vec<Vec<Vec<GaussianFit>>>,
    reference: Vec<Vec<(f64, f64)>>,
}

impl DotGridTrack {
    pub fn new(fits: Vec<Vec<Vec<GaussianFit>>>, reference: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if fits.is_empty() {
            return Err(StatsError::InvalidInput("no views".into()));
        }
        if reference.len() != fits.len() {
            return Err(StatsError::MissingReference);
        }
        let dots = reference[0].len();
        if dots == 0 || reference.iter().any(|r| r.len() != dots) {
            return Err(StatsError::MissingReference);
        }
        let frames = fits[0].len();
        if fits.iter().any(|v| v.len() != frames || v.iter().any(|f| f.len() != dots)) {
            return Err(StatsError::InvalidInput("incomplete dot grid".into()));
        }
        Ok(Self { fits, reference })
    }

    /// Tracks `views` and derives per-view reference centroids as the mean
    /// centroid over the frames of the matching turbulence-free recording.
    pub fn from_recordings(views: &[FrameSequence], references: &[FrameSequence], layout: &DotGridLayout) -> Result<Self> {
        if references.len() != views.len() {
            return Err(StatsError::MissingReference);
        }
        let fits = views.iter().map(|v| track_dots(v, layout)).collect::<Result<Vec<_>>>()?;
        let reference = references
            .iter()
            .map(|r| {
                let ref_fits = track_dots(r, layout)?;
                let n = ref_fits.len() as f64;
                Ok((0..layout.len())
                    .map(|d| {
                        let sx: f64 = ref_fits.iter().map(|f| f[d].params.cx).sum();
                        let sy: f64 = ref_fits.iter().map(|f| f[d].params.cy).sum();
                        (sx / n, sy / n)
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(fits, reference)
    }

    pub fn views(&self) -> usize {
        self.fits.len()
    }

    pub fn frames(&self) -> usize {
        self.fits[0].len()
    }

    pub fn dots(&self) -> usize {
        self.reference[0].len()
    }

    pub fn fits(&self) -> &[Vec<Vec<GaussianFit>>] {
        &self.fits
    }

    pub fn reference(&self) -> &[Vec<(f64, f64)>] {
        &self.reference
    }

    /// Keeps frames `start..end`.
    pub fn window(&self, start: usize, end: usize) -> Self {
        let end = end.min(self.frames());
        let start = start.min(end);
        Self { fits: self.fits.iter().map(|v| v[start..end].to_vec()).collect(), reference: self.reference.clone() }
    }
}

/// Centroid deviation from the reference, indexed `[view][dot][frame]`.
pub fn tilt_series(track: &DotGridTrack) -> Vec<Vec<Vec<TiltVector>>> {
    (0..track.views())
        .map(|v| {
            (0..track.dots())
                .map(|d| {
                    let (rx, ry) = track.reference[v][d];
                    track.fits[v].iter().map(|f| TiltVector { x: f[d].params.cx - rx, y: f[d].params.cy - ry }).collect()
                })
                .collect()
        })
        .collect()
}

/// Mean isotropic spread per dot per frame, indexed `[view][dot][frame]`.
pub fn blur_series(track: &DotGridTrack) -> Vec<Vec<Vec<f64>>> {
    (0..track.views())
        .map(|v| (0..track.dots()).map(|d| track.fits[v].iter().map(|f| f[d].params.mean_sigma()).collect()).collect())
        .collect()
}
