//! Frame directories: one binary graymap (`.pgm`) per frame plus a sidecar
//! `timestamps.txt` holding one integer microsecond timestamp per line.
//!
//! Frames are named `frame_000000.pgm`, `frame_000001.pgm`, ... on write and
//! read back in lexicographic file-name order.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat};

use super::{EventIoError, Frame, FrameSequence, Result};

pub const TIMESTAMPS_FILE: &str = "timestamps.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    Eight,
    #[default]
    Sixteen,
}

/// Encodes a frame as a binary (`P5`) graymap, quantizing with
/// round-to-nearest. 16-bit samples are big-endian.
pub fn encode_pgm(frame: &Frame, depth: BitDepth) -> Result<Vec<u8>> {
    let (w, h) = frame.shape();
    let maxval = match depth {
        BitDepth::Eight => 255u32,
        BitDepth::Sixteen => 65535,
    };
    let header = format!("P5\n{w} {h}\n{maxval}\n");
    let bytes_per = if maxval > 255 { 2 } else { 1 };
    let mut out = Vec::with_capacity(header.len() + bytes_per * w * h);
    out.extend_from_slice(header.as_bytes());
    for &v in frame.data() {
        let q = (v as f64 * maxval as f64).round() as u32;
        match depth {
            BitDepth::Eight => out.push(q as u8),
            BitDepth::Sixteen => out.extend_from_slice(&(q as u16).to_be_bytes()),
        }
    }
    Ok(out)
}

/// Decodes an 8- or 16-bit graymap into linear `[0, 1]` intensities.
pub fn decode_pgm(bytes: &[u8]) -> Result<Frame> {
    let img = image::load(Cursor::new(bytes), ImageFormat::Pnm)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f32> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| v as f32 / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(|v| v as f32 / 65535.0).collect(),
        other => {
            return Err(EventIoError::Malformed {
                what: "graymap",
                detail: format!("expected a grayscale image, got {:?}", other.color()),
            })
        }
    };
    Frame::new(w, h, data)
}

pub fn parse_timestamps(text: &str) -> Result<Vec<u64>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<u64>()
                .map_err(|e| EventIoError::Malformed { what: "timestamp list", detail: format!("{l:?}: {e}") })
        })
        .collect()
}

/// PGM files in `dir`, sorted by name.
pub fn frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    Ok(files)
}

/// Loads a frame directory.
pub fn read_frames(dir: &Path) -> Result<FrameSequence> {
    let timestamps = parse_timestamps(&fs::read_to_string(dir.join(TIMESTAMPS_FILE))?)?;
    let files = frame_files(dir)?;
    if files.len() != timestamps.len() {
        return Err(EventIoError::CountMismatch { frames: files.len(), timestamps: timestamps.len() });
    }
    let frames = files.iter().map(|p| decode_pgm(&fs::read(p)?)).collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, timestamps)
}

/// Writes `seq` into `dir`, creating it if needed.
pub fn write_frames(seq: &FrameSequence, dir: &Path, depth: BitDepth) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, frame) in seq.frames().iter().enumerate() {
        fs::write(dir.join(format!("frame_{k:06}.pgm")), encode_pgm(frame, depth)?)?;
    }
    let mut ts = String::with_capacity(seq.len() * 10);
    for t in seq.timestamps() {
        ts.push_str(&t.to_string());
        ts.push('\n');
    }
    fs::write(dir.join(TIMESTAMPS_FILE), ts)?;
    Ok(())
}
