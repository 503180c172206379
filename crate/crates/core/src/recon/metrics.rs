use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{ReconError, Result};
use crate::eventio::{Frame, FrameSequence};

pub const SSIM_WINDOW: usize = 8;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn check_shapes(a: &Frame, b: &Frame) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(ReconError::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB. Identical frames give `f64::INFINITY`.
pub fn psnr(a: &Frame, b: &Frame, peak: f64) -> Result<f64> {
    check_shapes(a, b)?;
    let mse = a.data().iter().zip(b.data()).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>() / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Summed-area table with a zero first row and column.
fn integral(w: usize, h: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut s = vec![0.0; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += f(y * w + x);
            s[(y + 1) * (w + 1) + x + 1] = s[y * (w + 1) + x + 1] + row;
        }
    }
    s
}

/// Structural similarity with uniform `window`x`window` windows at every
/// position (stride 1), population statistics and dynamic range 1, averaged
/// over windows.
pub fn ssim_with(a: &Frame, b: &Frame, window: usize, k1: f64, k2: f64) -> Result<f64> {
    check_shapes(a, b)?;
    let (w, h) = a.shape();
    if window == 0 || w < window || h < window {
        return Err(ReconError::TooSmall { width: w, height: h, window });
    }
    let (da, db) = (a.data(), b.data());
    let sa = integral(w, h, |i| da[i] as f64);
    let sb = integral(w, h, |i| db[i] as f64);
    let saa = integral(w, h, |i| (da[i] as f64).powi(2));
    let sbb = integral(w, h, |i| (db[i] as f64).powi(2));
    let sab = integral(w, h, |i| da[i] as f64 * db[i] as f64);
    let box_sum = |s: &[f64], x: usize, y: usize| {
        let (x1, y1) = (x + window, y + window);
        s[y1 * (w + 1) + x1] - s[y * (w + 1) + x1] - s[y1 * (w + 1) + x] + s[y * (w + 1) + x]
    };
    let c1 = k1 * k1;
    let c2 = k2 * k2;
    let n = (window * window) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=h - window {
        for x in 0..=w - window {
            let ma = box_sum(&sa, x, y) / n;
            let mb = box_sum(&sb, x, y) / n;
            let va = (box_sum(&saa, x, y) / n - ma * ma).max(0.0);
            let vb = (box_sum(&sbb, x, y) / n - mb * mb).max(0.0);
            let cov = box_sum(&sab, x, y) / n - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok((total / count as f64).clamp(-1.0, 1.0))
}

pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    ssim_with(a, b, SSIM_WINDOW, SSIM_K1, SSIM_K2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub timestamp: u64,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub frames: Vec<FrameMetrics>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

impl MetricsReport {
    pub fn from_frames(frames: Vec<FrameMetrics>) -> Self {
        let n = frames.len().max(1) as f64;
        let mean_psnr = frames.iter().map(|m| m.psnr).sum::<f64>() / n;
        let mean_ssim = frames.iter().map(|m| m.ssim).sum::<f64>() / n;
        Self { frames, mean_psnr, mean_ssim }
    }

    /// Mean of the per-clip means.
    pub fn aggregate(reports: &[MetricsReport]) -> (f64, f64) {
        let n = reports.len().max(1) as f64;
        (
            reports.iter().map(|r| r.mean_psnr).sum::<f64>() / n,
            reports.iter().map(|r| r.mean_ssim).sum::<f64>() / n,
        )
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["timestamp", "psnr", "ssim"])?;
        for m in &self.frames {
            w.write_record([m.timestamp.to_string(), m.psnr.to_string(), m.ssim.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scores every reconstructed frame whose timestamp also appears in `truth`.
pub fn evaluate_clip(recon: &FrameSequence, truth: &FrameSequence) -> Result<MetricsReport> {
    let mut frames = Vec::new();
    let mut j = 0;
    for (t, f) in recon.iter() {
        while j < truth.len() && truth.timestamps()[j] < t {
            j += 1;
        }
        if j < truth.len() && truth.timestamps()[j] == t {
            let g = &truth.frames()[j];
            frames.push(FrameMetrics { timestamp: t, psnr: psnr(f, g, 1.0)?, ssim: ssim(f, g)? });
        }
    }
    if frames.is_empty() {
        return Err(ReconError::TimestampMismatch("no common timestamps between reconstruction and truth".into()));
    }
    Ok(MetricsReport::from_frames(frames))
}
