//! Flat key-value pipeline configuration.
//!
//! Every key can be set in a TOML file and overridden by a command-line flag
//! of the same name (`--contrast_min 0.2`). Unset keys take the defaults
//! documented on each accessor.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use lfturb::evsim::EventSimConfig;
use lfturb::recon::{FusionMode, ReconConfig};
use lfturb::turbsim::{TurbulenceParams, TurbulencePreset};
use lfturb::turbstats::StatsConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

macro_rules! config_keys {
    ($($(#[$meta:meta])* $name:ident: $ty:ty,)*) => {
        #[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct Config {
            $(
                $(#[$meta])*
                #[arg(long = stringify!($name), global = true)]
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $name: Option<$ty>,
            )*
        }

        impl Config {
            /// Keys set in `other` replace those of `self`.
            pub fn overlay(mut self, other: Config) -> Config {
                $(if other.$name.is_some() {
                    self.$name = other.$name;
                })*
                self
            }
        }
    };
}

config_keys! {
    /// Worker threads; 0 uses every core.
    workers: usize,
    /// Master seed of every random draw.
    seed: u64,
    /// Input path of the command.
    input: PathBuf,
    /// Output path of the command.
    output: PathBuf,

    /// Working width in pixels.
    width: usize,
    /// Working height in pixels.
    height: usize,
    /// Frame rate assumed for inputs without a timestamps file.
    fps: f64,
    /// Frames kept per clip.
    clip_frames: usize,
    /// Views per light field.
    views: usize,
    /// Turbulence severity: weak, medium, strong or mixture.
    turbulence: String,
    /// Overrides the preset tilt standard deviation (pixels).
    tilt_std: f64,
    /// Overrides the preset coherence length (pixels).
    coherence_length: f64,
    /// Overrides the preset lower blur sigma (pixels).
    blur_sigma_min: f64,
    /// Overrides the preset upper blur sigma (pixels).
    blur_sigma_max: f64,
    /// Overrides the preset log-gain standard deviation.
    scint_log_std: f64,
    /// Overrides the preset frame-to-frame correlation.
    ar_coeff: f64,
    /// Overrides the preset lattice resolution.
    grid_res: usize,
    /// Lower bound of the per-view contrast threshold.
    contrast_min: f64,
    /// Upper bound of the per-view contrast threshold.
    contrast_max: f64,
    /// Per-pixel refractory period in microseconds.
    refractory_us: u64,
    /// Floor applied to intensities before taking the log.
    log_eps: f64,
    /// Fraction of clips in the training split.
    split_train: f64,
    /// Fraction of clips in the validation split.
    split_val: f64,
    /// Fraction of clips in the test split.
    split_test: f64,
    /// Bit depth of written frames: 8 or 16.
    bit_depth: u32,
    /// Also write the raw turbulence fields of every frame.
    #[arg(num_args = 0..=1, default_missing_value = "true")]
    dump_fields: bool,
    /// Regenerate a single clip from its manifest.
    replay: PathBuf,

    /// Contrast threshold for event simulation and reconstruction.
    contrast_threshold: f64,
    /// Event file format: evlf or csv.
    event_format: String,
    /// Temporal bins per voxel grid.
    bins: usize,
    /// Voxel window length in microseconds.
    window_us: u64,

    /// Dot-grid reference recording.
    references: PathBuf,
    /// Dot-grid rows.
    grid_rows: usize,
    /// Dot-grid columns.
    grid_cols: usize,
    /// Distance from the frame border to the outer dots (pixels).
    grid_margin: f64,
    /// Half-size of the square fitting window around each dot.
    roi_half: usize,
    /// Frames per statistics window.
    window_frames: usize,
    /// Largest autocorrelation lag.
    max_lag: usize,
    /// View analysed for temporal and within-view statistics.
    stats_view: usize,
    /// Dot analysed for temporal and cross-view statistics.
    stats_dot: usize,
    /// Event stream whose contrast threshold is calibrated.
    contrast_events: PathBuf,
    /// Grid points of the event-rate curve.
    contrast_points: usize,

    /// Per-second decay toward the spatial mean.
    leak_rate: f64,
    /// Cross-view fusion: mean, median or trimmed-mean:k.
    fusion: String,
    /// Directory of view_i.homography files.
    homographies: PathBuf,
    /// Ground-truth frame directory.
    truth: PathBuf,

    /// Row sampled by the slice command.
    row: usize,
    /// Column sampled by the slice command.
    column: usize,
    /// Explicit slice points, `x:y;x:y;...`.
    points: String,
}

/// Loads `path` (when given) and overlays the command-line keys on it.
pub fn load(path: Option<&Path>, flags: Config) -> Result<Config> {
    let file = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            Config::from_toml_str(&text)?
        }
        None => Config::default(),
    };
    Ok(file.overlay(flags))
}

fn existing(p: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
    let p = p.clone().ok_or_else(|| CliError::config(format!("`{key}` is required")))?;
    if !p.exists() {
        return Err(CliError::config(format!("`{key}` path {} does not exist", p.display())));
    }
    Ok(p)
}

/// Severity choice for simulated clips.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Fixed(TurbulencePreset),
    /// Drawn per clip from [`TurbulencePreset::MIXTURE`].
    Mixture,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Config> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn input(&self) -> Result<PathBuf> {
        existing(&self.input, "input")
    }

    pub fn output(&self) -> Result<PathBuf> {
        self.output.clone().ok_or_else(|| CliError::config("`output` is required"))
    }

    pub fn references(&self) -> Result<Option<PathBuf>> {
        self.references.as_ref().map(|_| existing(&self.references, "references")).transpose()
    }

    pub fn truth(&self) -> Result<Option<PathBuf>> {
        self.truth.as_ref().map(|_| existing(&self.truth, "truth")).transpose()
    }

    pub fn homographies(&self) -> Result<Option<PathBuf>> {
        self.homographies.as_ref().map(|_| existing(&self.homographies, "homographies")).transpose()
    }

    pub fn contrast_events(&self) -> Result<Option<PathBuf>> {
        self.contrast_events.as_ref().map(|_| existing(&self.contrast_events, "contrast_events")).transpose()
    }

    /// Default 0 (all cores).
    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(0)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Default 256x256.
    pub fn resolution(&self) -> Result<(usize, usize)> {
        let (w, h) = (self.width.unwrap_or(256), self.height.unwrap_or(256));
        if w == 0 || h == 0 || w > u16::MAX as usize || h > u16::MAX as usize {
            return Err(CliError::config(format!("invalid resolution {w}x{h}")));
        }
        Ok((w, h))
    }

    /// Default 120.
    pub fn fps(&self) -> Result<f64> {
        let fps = self.fps.unwrap_or(120.0);
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(CliError::config(format!("fps must be positive, got {fps}")));
        }
        Ok(fps)
    }

    /// Default 480 (4 s at 120 fps).
    pub fn clip_frames(&self) -> Result<usize> {
        match self.clip_frames.unwrap_or(480) {
            n if n >= 2 => Ok(n),
            n => Err(CliError::config(format!("clip_frames must be at least 2, got {n}"))),
        }
    }

    /// Default 9.
    pub fn views(&self) -> Result<usize> {
        match self.views.unwrap_or(9) {
            0 => Err(CliError::config("views must be at least 1")),
            n => Ok(n),
        }
    }

    /// Default mixture.
    pub fn severity(&self) -> Result<Severity> {
        match self.turbulence.as_deref().unwrap_or("mixture") {
            "weak" => Ok(Severity::Fixed(TurbulencePreset::Weak)),
            "medium" => Ok(Severity::Fixed(TurbulencePreset::Medium)),
            "strong" => Ok(Severity::Fixed(TurbulencePreset::Strong)),
            "mixture" => Ok(Severity::Mixture),
            other => Err(CliError::config(format!("unknown turbulence {other:?}"))),
        }
    }

    /// Preset parameters with any explicitly set turbulence keys applied.
    pub fn turbulence_params(&self, preset: TurbulencePreset, seed: u64) -> Result<TurbulenceParams> {
        let mut p = preset.params(seed);
        p.tilt_std = self.tilt_std.unwrap_or(p.tilt_std);
        p.coherence_length = self.coherence_length.unwrap_or(p.coherence_length);
        p.blur_sigma_range = [
            self.blur_sigma_min.unwrap_or(p.blur_sigma_range[0]),
            self.blur_sigma_max.unwrap_or(p.blur_sigma_range[1]),
        ];
        p.scint_log_std = self.scint_log_std.unwrap_or(p.scint_log_std);
        p.ar_coeff = self.ar_coeff.unwrap_or(p.ar_coeff);
        p.grid_res = self.grid_res.unwrap_or(p.grid_res);
        p.validate()?;
        Ok(p)
    }

    /// Default [0.1, 0.7].
    pub fn contrast_range(&self) -> Result<(f64, f64)> {
        let (lo, hi) = (self.contrast_min.unwrap_or(0.1), self.contrast_max.unwrap_or(0.7));
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(CliError::config(format!("contrast range [{lo}, {hi}] must satisfy 0 < min <= max")));
        }
        Ok((lo, hi))
    }

    /// Event model with the default 0.2 threshold, 5000 us refractory
    /// period and 1e-3 log floor.
    pub fn event_sim(&self) -> Result<EventSimConfig> {
        let d = EventSimConfig::default();
        let c = EventSimConfig {
            contrast_threshold: self.contrast_threshold.unwrap_or(d.contrast_threshold),
            refractory_us: self.refractory_us.unwrap_or(d.refractory_us),
            log_eps: self.log_eps.unwrap_or(d.log_eps),
        };
        c.validate()?;
        Ok(c)
    }

    /// Default 0.8 / 0.1 / 0.1.
    pub fn splits(&self) -> Result<[f64; 3]> {
        let s = [self.split_train.unwrap_or(0.8), self.split_val.unwrap_or(0.1), self.split_test.unwrap_or(0.1)];
        if s.iter().any(|&f| !(0.0..=1.0).contains(&f)) || (s.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CliError::config(format!("split fractions {s:?} must lie in [0, 1] and sum to 1")));
        }
        Ok(s)
    }

    /// Default 16.
    pub fn bit_depth(&self) -> Result<lfturb::eventio::BitDepth> {
        match self.bit_depth.unwrap_or(16) {
            8 => Ok(lfturb::eventio::BitDepth::Eight),
            16 => Ok(lfturb::eventio::BitDepth::Sixteen),
            d => Err(CliError::config(format!("bit_depth must be 8 or 16, got {d}"))),
        }
    }

    pub fn dump_fields(&self) -> bool {
        self.dump_fields.unwrap_or(false)
    }

    /// Default evlf.
    pub fn event_format(&self) -> Result<EventFormat> {
        match self.event_format.as_deref().unwrap_or("evlf") {
            "evlf" => Ok(EventFormat::Evlf),
            "csv" => Ok(EventFormat::Csv),
            other => Err(CliError::config(format!("unknown event_format {other:?}"))),
        }
    }

    /// Default 5.
    pub fn bins(&self) -> Result<usize> {
        match self.bins.unwrap_or(5) {
            0 => Err(CliError::config("bins must be at least 1")),
            b => Ok(b),
        }
    }

    /// Default 50000.
    pub fn window_us(&self) -> Result<u64> {
        match self.window_us.unwrap_or(50_000) {
            0 => Err(CliError::config("window_us must be positive")),
            w => Ok(w),
        }
    }

    /// Default 3x3.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.grid_rows.unwrap_or(3), self.grid_cols.unwrap_or(3))
    }

    /// Default 3/16 of the smaller frame side.
    pub fn grid_margin(&self, width: usize, height: usize) -> f64 {
        self.grid_margin.unwrap_or(width.min(height) as f64 * 3.0 / 16.0)
    }

    /// Default 8.
    pub fn roi_half(&self) -> usize {
        self.roi_half.unwrap_or(8)
    }

    pub fn stats(&self) -> StatsConfig {
        let d = StatsConfig::default();
        StatsConfig {
            window_frames: self.window_frames.unwrap_or(d.window_frames),
            max_lag: self.max_lag.unwrap_or(d.max_lag),
            view: self.stats_view,
            dot: self.stats_dot,
        }
    }

    /// Default 13.
    pub fn contrast_points(&self) -> Result<usize> {
        match self.contrast_points.unwrap_or(13) {
            n if n >= 2 => Ok(n),
            n => Err(CliError::config(format!("contrast_points must be at least 2, got {n}"))),
        }
    }

    /// Default threshold 0.2, leak rate 1 per second, median fusion.
    pub fn recon(&self) -> Result<ReconConfig> {
        let d = ReconConfig::default();
        let fusion = match &self.fusion {
            Some(s) => s.parse::<FusionMode>()?,
            None => d.fusion,
        };
        let c = ReconConfig {
            contrast_threshold: self.contrast_threshold.unwrap_or(d.contrast_threshold),
            leak_rate: self.leak_rate.unwrap_or(d.leak_rate),
            fusion,
        };
        c.validate()?;
        Ok(c)
    }

    /// Points of `points` as (x, y) pairs.
    pub fn slice_points(&self) -> Result<Option<Vec<(f64, f64)>>> {
        let Some(text) = &self.points else { return Ok(None) };
        text.split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|pair| {
                let (x, y) = pair.split_once(':').ok_or_else(|| CliError::config(format!("bad point {pair:?}")))?;
                let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| CliError::config(format!("bad point {pair:?}")));
                Ok((parse(x)?, parse(y)?))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Evlf,
    Csv,
}
