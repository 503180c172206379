//! Source clip discovery and preparation.

use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::{ImageBuffer, Luma};
use lfturb::eventio::{decode_pgm, frame_files, parse_timestamps, Frame, FrameSequence, TIMESTAMPS_FILE};

use crate::error::{CliError, Result};

/// A directory of graymap frames making up one clip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceClip {
    pub name: String,
    pub dir: PathBuf,
}

fn dir_name(p: &Path) -> String {
    p.file_name().map_or_else(|| "clip".to_string(), |n| n.to_string_lossy().into_owned())
}

/// Clips under `input`: the directory itself when it holds frames, otherwise
/// every subdirectory that does, in name order.
pub fn discover_clips(input: &Path) -> Result<Vec<SourceClip>> {
    if !input.is_dir() {
        return Err(CliError::data(format!("{} is not a directory", input.display())));
    }
    if !frame_files(input)?.is_empty() {
        return Ok(vec![SourceClip { name: dir_name(input), dir: input.to_path_buf() }]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(input)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    dirs.sort();
    let mut clips = Vec::new();
    for dir in dirs {
        if !frame_files(&dir)?.is_empty() {
            clips.push(SourceClip { name: dir_name(&dir), dir });
        }
    }
    if clips.is_empty() {
        return Err(CliError::data(format!("no frame directories found in {}", input.display())));
    }
    Ok(clips)
}

/// Loads at most `max_frames` frames of a clip. Timestamps come from the
/// clip's timestamps file when present, otherwise from `fps`; either way
/// they are shifted to start at zero.
pub fn load_clip(dir: &Path, fps: f64, max_frames: usize) -> Result<FrameSequence> {
    let files = frame_files(dir)?;
    let ts_path = dir.join(TIMESTAMPS_FILE);
    let timestamps = if ts_path.exists() {
        let ts = parse_timestamps(&fs::read_to_string(&ts_path)?)?;
        if ts.len() != files.len() {
            return Err(CliError::data(format!("{}: {} frames but {} timestamps", dir.display(), files.len(), ts.len())));
        }
        ts
    } else {
        (0..files.len()).map(|k| (k as f64 * 1e6 / fps).round() as u64).collect()
    };
    let n = files.len().min(max_frames);
    if n < 2 {
        return Err(CliError::data(format!("{} holds fewer than 2 frames", dir.display())));
    }
    let frames = files[..n].iter().map(|p| Ok(decode_pgm(&fs::read(p)?)?)).collect::<Result<Vec<_>>>()?;
    let t0 = timestamps[0];
    Ok(FrameSequence::new(frames, timestamps[..n].iter().map(|t| t - t0).collect())?)
}

/// Center-crops `frame` to the aspect ratio of `width`x`height` and resamples
/// it to that size with a triangle filter.
pub fn fit_frame(frame: &Frame, width: usize, height: usize) -> Result<Frame> {
    let (w, h) = frame.shape();
    if (w, h) == (width, height) {
        return Ok(frame.clone());
    }
    let (cw, ch) = if w * height > h * width { (h * width / height, h) } else { (w, w * height / width) };
    let (cw, ch) = (cw.max(1), ch.max(1));
    let buf: ImageBuffer<Luma<f32>, Vec<f32>> =
        ImageBuffer::from_raw(w as u32, h as u32, frame.data().to_vec()).expect("buffer matches frame size");
    let cropped = imageops::crop_imm(&buf, ((w - cw) / 2) as u32, ((h - ch) / 2) as u32, cw as u32, ch as u32).to_image();
    let resized = imageops::resize(&cropped, width as u32, height as u32, FilterType::Triangle);
    Ok(Frame::from_clamped(width, height, resized.into_raw())?)
}

/// Loads and fits a clip to the working resolution.
pub fn prepare_clip(dir: &Path, fps: f64, max_frames: usize, width: usize, height: usize) -> Result<FrameSequence> {
    let (frames, ts) = load_clip(dir, fps, max_frames)?.into_parts();
    let frames = frames.iter().map(|f| fit_frame(f, width, height)).collect::<Result<Vec<_>>>()?;
    Ok(FrameSequence::new(frames, ts)?)
}
