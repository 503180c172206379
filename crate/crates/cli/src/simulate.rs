//! Dataset generation.
//!
//! Layout of a generated dataset:
//!
//! ```text
//! <output>/dataset.toml                  effective config and clip index
//! <output>/<split>/<clip>/manifest.toml  every sampled value of the clip
//! <output>/<split>/<clip>/clean/         prepared clean frames
//! <output>/<split>/<clip>/view_<i>/      degraded frames of view i
//! <output>/<split>/<clip>/view_<i>.evlf  events of view i
//! <output>/<split>/<clip>/view_<i>.homography
//! <output>/<split>/<clip>/fields/view_<i>/frame_<k>.f32  (with dump_fields)
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use lfturb::eventio::{write_events, write_frames, BitDepth, FrameSequence};
use lfturb::evsim::{frames_to_events, EventSimConfig, ThresholdSpec};
use lfturb::lfgeom::Homography;
use lfturb::rng::{derive_seed, purpose, substream};
use lfturb::turbsim::{apply_turbulence, TurbulenceParams, TurbulencePreset, ViewTurbulence};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, Severity};
use crate::error::{CliError, Result};
use crate::input::{discover_clips, prepare_clip};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const DATASET_FILE: &str = "dataset.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Assigns `n` clips to splits: a seeded shuffle, then the first
/// `round(train * n)` clips go to train and the next `round(val * n)` to val.
pub fn assign_splits(n: usize, fractions: [f64; 3], seed: u64) -> Vec<Split> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, &[purpose::SPLIT]));
    let n_train = ((fractions[0] * n as f64).round() as usize).min(n);
    let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train);
    let mut out = vec![Split::Test; n];
    for (rank, &clip) in order.iter().enumerate() {
        if rank < n_train {
            out[clip] = Split::Train;
        } else if rank < n_train + n_val {
            out[clip] = Split::Val;
        }
    }
    out
}

/// Everything needed to regenerate one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipManifest {
    pub clip: String,
    pub source: PathBuf,
    pub split: Split,
    pub index: usize,
    pub master_seed: u64,
    pub clip_seed: u64,
    pub width: usize,
    pub height: usize,
    /// Rate used when the source has no timestamps file.
    pub fps: f64,
    pub frames: usize,
    pub views: usize,
    pub bit_depth: u32,
    pub dump_fields: bool,
    pub preset: TurbulencePreset,
    pub contrast_range: [f64; 2],
    /// Threshold of each view, drawn uniformly from `contrast_range`.
    pub contrast_thresholds: Vec<f64>,
    pub refractory_us: u64,
    pub log_eps: f64,
    pub turbulence: TurbulenceParams,
}

impl ClipManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    fn depth(&self) -> Result<BitDepth> {
        match self.bit_depth {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            d => Err(CliError::config(format!("bit_depth must be 8 or 16, got {d}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipEntry {
    pub clip: String,
    pub split: Split,
    pub preset: TurbulencePreset,
}

/// Index written at the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub config: Config,
    pub clips: Vec<ClipEntry>,
}

fn bit_depth_value(d: BitDepth) -> u32 {
    match d {
        BitDepth::Eight => 8,
        BitDepth::Sixteen => 16,
    }
}

/// Generates the dataset described by `cfg`, or replays a single clip when
/// `replay` is set. Returns the manifests of the written clips.
pub fn cmd_simulate(cfg: &Config) -> Result<Vec<ClipManifest>> {
    let out = cfg.output()?;
    if let Some(path) = &cfg.replay {
        let m = ClipManifest::read(path)?;
        let clean = prepare(&m)?;
        run_clip(&m, &clean, &out.join(&m.clip))?;
        return Ok(vec![m]);
    }

    let input = cfg.input()?;
    let seed = cfg.seed();
    let (width, height) = cfg.resolution()?;
    let fps = cfg.fps()?;
    let frames = cfg.clip_frames()?;
    let views = cfg.views()?;
    let severity = cfg.severity()?;
    let (c_lo, c_hi) = cfg.contrast_range()?;
    let events = cfg.event_sim()?;
    let fractions = cfg.splits()?;
    let depth = cfg.bit_depth()?;
    cfg.turbulence_params(TurbulencePreset::Medium, 0)?;

    let clips = discover_clips(&input)?;
    let splits = assign_splits(clips.len(), fractions, seed);
    let mut manifests = Vec::with_capacity(clips.len());
    for (index, (clip, split)) in clips.iter().zip(splits).enumerate() {
        let clip_seed = derive_seed(seed, &[purpose::CLIP, index as u64]);
        let preset = match severity {
            Severity::Fixed(p) => p,
            Severity::Mixture => TurbulencePreset::sample(&mut substream(seed, &[purpose::PRESET, index as u64])),
        };
        let clean = prepare_clip(&clip.dir, fps, frames, width, height)?;
        let m = ClipManifest {
            clip: clip.name.clone(),
            source: clip.dir.clone(),
            split,
            index,
            master_seed: seed,
            clip_seed,
            width,
            height,
            fps,
            frames: clean.len(),
            views,
            bit_depth: bit_depth_value(depth),
            dump_fields: cfg.dump_fields(),
            preset,
            contrast_range: [c_lo, c_hi],
            contrast_thresholds: ThresholdSpec::Uniform { min: c_lo, max: c_hi, seed: clip_seed }.resolve(views)?,
            refractory_us: events.refractory_us,
            log_eps: events.log_eps,
            turbulence: cfg.turbulence_params(preset, clip_seed)?,
        };
        log::info!("clip {} ({}, {}): {} frames", m.clip, split.dir_name(), preset.name(), m.frames);
        run_clip(&m, &clean, &out.join(split.dir_name()).join(&m.clip))?;
        manifests.push(m);
    }

    let index = DatasetIndex {
        config: Config { output: None, workers: None, ..cfg.clone() },
        clips: manifests.iter().map(|m| ClipEntry { clip: m.clip.clone(), split: m.split, preset: m.preset }).collect(),
    };
    fs::write(out.join(DATASET_FILE), toml::to_string(&index)?)?;
    Ok(manifests)
}

fn prepare(m: &ClipManifest) -> Result<FrameSequence> {
    let clean = prepare_clip(&m.source, m.fps, m.frames, m.width, m.height)?;
    if clean.len() != m.frames {
        return Err(CliError::data(format!("{} now yields {} frames, manifest records {}", m.source.display(), clean.len(), m.frames)));
    }
    Ok(clean)
}

/// Writes every artifact of one clip into `dir`.
pub fn run_clip(m: &ClipManifest, clean: &FrameSequence, dir: &Path) -> Result<()> {
    if m.contrast_thresholds.len() != m.views {
        return Err(CliError::config(format!("{} thresholds for {} views", m.contrast_thresholds.len(), m.views)));
    }
    let depth = m.depth()?;
    fs::create_dir_all(dir)?;
    write_frames(clean, &dir.join("clean"), depth)?;
    (0..m.views).into_par_iter().map(|v| run_view(m, clean, v, dir, depth)).collect::<Result<()>>()?;
    for v in 0..m.views {
        fs::write(dir.join(format!("view_{v}.homography")), Homography::identity().to_string())?;
    }
    fs::write(dir.join(MANIFEST_FILE), toml::to_string(m)?)?;
    Ok(())
}

fn run_view(m: &ClipManifest, clean: &FrameSequence, v: usize, dir: &Path, depth: BitDepth) -> Result<()> {
    let (w, h) = clean.shape().expect("prepared clips are non-empty");
    let mut turb = ViewTurbulence::new(&m.turbulence, v, w, h)?;
    let fields_dir = dir.join("fields").join(format!("view_{v}"));
    if m.dump_fields {
        fs::create_dir_all(&fields_dir)?;
    }
    let mut frames = Vec::with_capacity(clean.len());
    for (k, frame) in clean.frames().iter().enumerate() {
        let coarse = turb.next_coarse()?;
        if m.dump_fields {
            coarse.write_raw(BufWriter::new(File::create(fields_dir.join(format!("frame_{k:06}.f32")))?))?;
        }
        frames.push(apply_turbulence(frame, &coarse.upsample())?);
    }
    let degraded = FrameSequence::new(frames, clean.timestamps().to_vec())?;
    write_frames(&degraded, &dir.join(format!("view_{v}")), depth)?;
    let sim = EventSimConfig { contrast_threshold: m.contrast_thresholds[v], refractory_us: m.refractory_us, log_eps: m.log_eps };
    let stream = frames_to_events(&degraded, &sim)?;
    write_events(&stream, BufWriter::new(File::create(dir.join(format!("view_{v}.evlf")))?))?;
    Ok(())
}
