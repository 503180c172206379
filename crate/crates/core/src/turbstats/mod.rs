//! Turbulence characterization from dot-grid recordings: Gaussian spot
//! fitting, tilt, blur and scintillation statistics, and contrast threshold
//! calibration by event-rate matching.

mod contrast;
mod dots;
mod gaussfit;
mod stats;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventio::EventIoError;
use crate::evsim::EvSimError;

pub use contrast::{estimate_contrast_threshold, event_rate_curve, ContrastEstimate};
pub use dots::{
    blur_series, dot_intensity_series, fit_dots, render_dot_grid, tilt_series, track_dots, DotGridLayout, DotGridTrack,
    TiltVector,
};
pub use gaussfit::{fit_gaussian2d, fit_gaussian2d_with, moment_init, FitOptions, GaussianFit, GaussianParams, Patch};
pub use stats::{mean_tilt_autocorrelation, scintillation_index, tilt_autocorrelation, tilt_spatial_correlation, RunningMoments};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("fit diverged: {0}")]
    Divergence(String),
    #[error("fitted spread collapsed to ({sigma_x}, {sigma_y}) px")]
    SigmaCollapse { sigma_x: f64, sigma_y: f64 },
    #[error("fit of dot {dot} failed: {source}")]
    DotFit { dot: usize, source: Box<StatsError> },
    #[error("turbulence-free reference recording is missing or incomplete")]
    MissingReference,
    #[error("fitted center ({cx:.2}, {cy:.2}) lies outside the fitting window")]
    CenterOutsideWindow { cx: f64, cy: f64 },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("intensity series has zero mean")]
    ZeroMean,
    #[error("threshold grid needs at least 2 points, got {0}")]
    DegenerateGrid(usize),
    #[error("observed event rate {observed} is outside the simulated range [{min}, {max}]")]
    RateOutOfRange { observed: f64, min: f64, max: f64 },
    #[error(transparent)]
    Simulation(#[from] EvSimError),
    #[error(transparent)]
    Data(#[from] EventIoError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serialize(String),
}

impl StatsError {
    /// True for failures of the numerical solver rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            StatsError::Divergence(_) | StatsError::SigmaCollapse { .. } | StatsError::CenterOutsideWindow { .. } => true,
            StatsError::DotFit { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, StatsError>;

/// Frames per statistics window: 4 s at 60 fps.
pub const DEFAULT_WINDOW_FRAMES: usize = 240;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsConfig {
    pub window_frames: usize,
    pub max_lag: usize,
    /// View used for the temporal and within-view statistics; the middle
    /// view when absent.
    pub view: Option<usize>,
    /// Dot used for the temporal and cross-view statistics; the middle dot
    /// when absent.
    pub dot: Option<usize>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self { window_frames: DEFAULT_WINDOW_FRAMES, max_lag: 10, view: None, dot: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub views: usize,
    pub dots: usize,
    pub frames: usize,
    pub view: usize,
    pub dot: usize,
    /// Root-mean-square tilt magnitude over the dots and frames of the
    /// analysed view, in pixels.
    pub tilt_rms: f64,
    /// NaN throughout when the analysed tilt series is constant.
    pub tilt_autocorrelation: Vec<f64>,
    /// Off-diagonal entries are NaN when some dot's tilt is constant.
    pub within_view_correlation: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_view_correlation: Option<Vec<Vec<f64>>>,
    /// Mean spread over the dots of the analysed view, per frame.
    pub blur: Vec<f64>,
    /// Per view, the mean over dots of the scintillation index.
    pub scintillation_index: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrast_threshold: Option<f64>,
}

/// Runs the statistics suite on the first `window_frames` frames of `track`.
/// `intensities` is indexed `[view][dot][frame]`.
pub fn analyze(track: &DotGridTrack, intensities: &[Vec<Vec<f64>>], config: &StatsConfig) -> Result<StatsReport> {
    let track = track.window(0, config.window_frames);
    let view = config.view.unwrap_or(track.views() / 2);
    let dot = config.dot.unwrap_or(track.dots() / 2);
    if view >= track.views() || dot >= track.dots() {
        return Err(StatsError::InvalidInput(format!("view {view} / dot {dot} out of range")));
    }
    if intensities.len() != track.views() {
        return Err(StatsError::InvalidInput("intensity series do not match the views".into()));
    }
    let tilt = tilt_series(&track);
    let samples = (track.dots() * track.frames()).max(1) as f64;
    let tilt_rms = (tilt[view].iter().flatten().map(TiltVector::norm_sq).sum::<f64>() / samples).sqrt();
    let tilt_autocorrelation = undefined_if_constant(tilt_autocorrelation(&tilt[view][dot], config.max_lag), || {
        vec![f64::NAN; config.max_lag + 1]
    })?;
    let within_view_correlation = undefined_if_constant(tilt_spatial_correlation(&tilt[view]), || nan_matrix(track.dots()))?;
    let cross_view_correlation = if track.views() > 1 {
        let per_view: Vec<Vec<TiltVector>> = tilt.iter().map(|v| v[dot].clone()).collect();
        Some(undefined_if_constant(tilt_spatial_correlation(&per_view), || nan_matrix(track.views()))?)
    } else {
        None
    };
    let blur_all = blur_series(&track);
    let blur = (0..track.frames())
        .map(|f| blur_all[view].iter().map(|d| d[f]).sum::<f64>() / track.dots() as f64)
        .collect();
    let scintillation_index = intensities
        .iter()
        .map(|per_dot| {
            let vals = per_dot
                .iter()
                .map(|s| scintillation_index(&s[..s.len().min(config.window_frames)]))
                .collect::<Result<Vec<_>>>()?;
            Ok(vals.iter().sum::<f64>() / vals.len().max(1) as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StatsReport {
        views: track.views(),
        dots: track.dots(),
        frames: track.frames(),
        view,
        dot,
        tilt_rms,
        tilt_autocorrelation,
        within_view_correlation,
        cross_view_correlation,
        blur,
        scintillation_index,
        contrast_threshold: None,
    })
}

fn undefined_if_constant<T>(r: Result<T>, fallback: impl FnOnce() -> T) -> Result<T> {
    match r {
        Err(StatsError::ZeroVariance) => Ok(fallback()),
        other => other,
    }
}

fn nan_matrix(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { f64::NAN }).collect()).collect()
}

fn write_matrix(path: &Path, m: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| StatsError::Serialize(e.to_string()))?;
    for row in m {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| StatsError::Serialize(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_series(path: &Path, header: [&str; 2], rows: impl Iterator<Item = (String, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| StatsError::Serialize(e.to_string()))?;
    w.write_record(header).map_err(|e| StatsError::Serialize(e.to_string()))?;
    for (k, v) in rows {
        w.write_record([k, v.to_string()]).map_err(|e| StatsError::Serialize(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

impl StatsReport {
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| StatsError::Serialize(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| StatsError::Serialize(e.to_string()))
    }

    /// Writes `report.toml` and one CSV per curve into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.toml"), self.to_toml_string()?)?;
        write_series(
            &dir.join("tilt_autocorrelation.csv"),
            ["lag", "correlation"],
            self.tilt_autocorrelation.iter().enumerate().map(|(k, &v)| (k.to_string(), v)),
        )?;
        write_matrix(&dir.join("within_view_correlation.csv"), &self.within_view_correlation)?;
        if let Some(m) = &self.cross_view_correlation {
            write_matrix(&dir.join("cross_view_correlation.csv"), m)?;
        }
        write_series(&dir.join("blur.csv"), ["frame", "sigma"], self.blur.iter().enumerate().map(|(k, &v)| (k.to_string(), v)))?;
        write_series(
            &dir.join("scintillation.csv"),
            ["view", "index"],
            self.scintillation_index.iter().enumerate().map(|(k, &v)| (k.to_string(), v)),
        )?;
        Ok(())
    }
}
