use crate::eventio::Frame;

use super::{Result, SensorFields, TurbError};

/// Number of precomputed blur levels spanning the sigma range.
pub const BLUR_LEVELS: usize = 5;

/// Normalized 1-D Gaussian taps, radius `ceil(4 sigma)`.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 1e-6 {
        return vec![1.0];
    }
    let r = (4.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-0.5 * (i * i) as f64 / (sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur with clamp-to-edge borders.
pub(crate) fn gaussian_blur(src: &[f32], width: usize, height: usize, sigma: f64) -> Vec<f32> {
    let k = gaussian_kernel(sigma);
    if k.len() == 1 {
        return src.to_vec();
    }
    let r = (k.len() / 2) as i64;
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0f32; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0f64;
            for (i, &w) in k.iter().enumerate() {
                acc += w * row[clamp(x as i64 + i as i64 - r, width)] as f64;
            }
            tmp[y * width + x] = acc as f32;
        }
    }
    let mut out = vec![0f32; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0f64;
            for (i, &w) in k.iter().enumerate() {
                acc += w * tmp[clamp(y as i64 + i as i64 - r, height) * width + x] as f64;
            }
            out[y * width + x] = acc as f32;
        }
    }
    out
}

fn blur_levels([lo, hi]: [f64; 2]) -> Vec<f64> {
    if hi - lo <= 1e-12 {
        return vec![lo];
    }
    (0..BLUR_LEVELS).map(|k| lo + (hi - lo) * k as f64 / (BLUR_LEVELS - 1) as f64).collect()
}

/// Degrades `frame` with `fields`: backward warp by the tilt (bilinear,
/// clamp-to-edge), spatially varying blur by per-pixel interpolation between
/// uniformly blurred copies, then multiplication by the gain. Output is
/// clamped to `[0, 1]`.
pub fn apply_turbulence(frame: &Frame, fields: &SensorFields) -> Result<Frame> {
    let (w, h) = frame.shape();
    if (fields.width, fields.height) != (w, h) {
        return Err(TurbError::ShapeMismatch(format!(
            "fields {}x{} vs frame {w}x{h}",
            fields.width, fields.height
        )));
    }

    let mut warped = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let sx = x as f64 - fields.tilt_x[i] as f64;
            let sy = y as f64 - fields.tilt_y[i] as f64;
            warped.push(frame.sample_clamped(sx, sy) as f32);
        }
    }

    let levels = blur_levels(fields.blur_sigma_range);
    let blurred = if levels.len() == 1 && levels[0] <= 1e-6 {
        warped
    } else {
        let bank: Vec<Vec<f32>> = levels.iter().map(|&s| gaussian_blur(&warped, w, h, s)).collect();
        let [lo, hi] = fields.blur_sigma_range;
        let last = (bank.len() - 1) as f64;
        (0..w * h)
            .map(|i| {
                if bank.len() == 1 {
                    return bank[0][i];
                }
                let u = ((fields.blur_sigma[i] as f64 - lo) / (hi - lo) * last).clamp(0.0, last);
                let k = (u.floor() as usize).min(bank.len() - 2);
                let f = (u - k as f64) as f32;
                bank[k][i] + (bank[k + 1][i] - bank[k][i]) * f
            })
            .collect()
    };

    let out = blurred.iter().zip(&fields.gain).map(|(&v, &g)| v * g).collect();
    Ok(Frame::from_clamped(w, h, out)?)
}
