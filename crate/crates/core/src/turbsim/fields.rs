//! Latent AR(1) chain and the coarse-to-sensor field realization.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Result, TurbError, TurbulenceParams};

/// Number of latent channels: tilt x, tilt y, blur, log-gain.
pub const LATENT_CHANNELS: usize = 4;

/// Standard-normal latent lattice driving all fields of one view.
/// Layout: `[channel][row][column]`, each channel `grid_res`x`grid_res`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    grid_res: usize,
    values: Vec<f64>,
}

impl LatentState {
    /// Fresh i.i.d. standard-normal state.
    pub fn fresh<R: Rng + ?Sized>(grid_res: usize, rng: &mut R) -> Self {
        let n = LATENT_CHANNELS * grid_res * grid_res;
        Self { grid_res, values: (0..n).map(|_| rng.sample(StandardNormal)).collect() }
    }

    pub fn from_values(grid_res: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != LATENT_CHANNELS * grid_res * grid_res {
            return Err(TurbError::ShapeMismatch(format!(
                "latent state of {} values for grid_res {grid_res}",
                values.len()
            )));
        }
        Ok(Self { grid_res, values })
    }

    pub fn zeros(grid_res: usize) -> Self {
        Self { grid_res, values: vec![0.0; LATENT_CHANNELS * grid_res * grid_res] }
    }

    pub fn grid_res(&self) -> usize {
        self.grid_res
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.grid_res * self.grid_res;
        &self.values[c * n..(c + 1) * n]
    }
}

/// One AR(1) step on a latent array: `alpha * prev + sqrt(1 - alpha^2) * eps`
/// with fresh standard-normal `eps`.
pub fn advance_values<R: Rng + ?Sized>(prev: &[f64], alpha: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(TurbError::InvalidParams(format!("ar_coeff must lie in [0, 1), got {alpha}")));
    }
    let innovation = (1.0 - alpha * alpha).sqrt();
    Ok(prev
        .iter()
        .map(|&n| {
            let eps: f64 = rng.sample(StandardNormal);
            alpha * n + innovation * eps
        })
        .collect())
}

pub fn advance_state<R: Rng + ?Sized>(state: &LatentState, alpha: f64, rng: &mut R) -> Result<LatentState> {
    Ok(LatentState { grid_res: state.grid_res, values: advance_values(&state.values, alpha, rng)? })
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Lattice-resolution fields. Node `(i, j)` sits at pixel
/// `(j * spacing_x, i * spacing_y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseFields {
    pub grid_res: usize,
    pub width: usize,
    pub height: usize,
    pub tilt_x: Vec<f64>,
    pub tilt_y: Vec<f64>,
    pub blur_sigma: Vec<f64>,
    pub log_gain: Vec<f64>,
    pub blur_sigma_range: [f64; 2],
}

/// Sensor-resolution fields ready to be applied to a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFields {
    pub width: usize,
    pub height: usize,
    pub tilt_x: Vec<f32>,
    pub tilt_y: Vec<f32>,
    pub blur_sigma: Vec<f32>,
    pub gain: Vec<f32>,
    pub blur_sigma_range: [f64; 2],
}

impl SensorFields {
    /// Fields that leave a frame untouched.
    pub fn identity(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            tilt_x: vec![0.0; n],
            tilt_y: vec![0.0; n],
            blur_sigma: vec![0.0; n],
            gain: vec![1.0; n],
            blur_sigma_range: [0.0, 0.0],
        }
    }
}

fn gaussian_weights(len: usize, sigma: f64, center: usize) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let d = i as f64 - center as f64;
            (-0.5 * d * d / (sigma * sigma)).exp()
        })
        .collect()
}

/// Smooths each lattice row (`axis == 0`) or column (`axis == 1`) with a
/// Gaussian of `sigma` nodes, renormalized per output node so a field of
/// i.i.d. unit-variance values keeps unit variance everywhere.
fn smooth_axis(field: &[f64], n: usize, sigma: f64, axis: usize) -> Vec<f64> {
    if sigma < 1e-6 {
        return field.to_vec();
    }
    let kernels: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let w = gaussian_weights(n, sigma, c);
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            w.into_iter().map(|v| v / norm).collect()
        })
        .collect();
    let mut out = vec![0.0; n * n];
    for line in 0..n {
        for (c, k) in kernels.iter().enumerate() {
            let mut acc = 0.0;
            for (i, &w) in k.iter().enumerate() {
                let idx = if axis == 0 { line * n + i } else { i * n + line };
                acc += w * field[idx];
            }
            let o = if axis == 0 { line * n + c } else { c * n + line };
            out[o] = acc;
        }
    }
    out
}

fn spacing(size: usize, grid_res: usize) -> f64 {
    (size.max(2) - 1) as f64 / (grid_res - 1) as f64
}

/// Maps a latent state to lattice fields for a `width`x`height` sensor.
///
/// Each channel is first spatially correlated on the lattice (correlation
/// `exp(-d^2 / (2 L^2))` for `L = coherence_length`, unit marginal variance
/// preserved) and then passed through its transform:
/// tilt = `tilt_std * z`, blur = `min + (max - min) * Phi(z)`,
/// log-gain = `s * z - s^2 / 2`.
pub fn coarse_fields(params: &TurbulenceParams, state: &LatentState, width: usize, height: usize) -> Result<CoarseFields> {
    params.validate()?;
    let g = params.grid_res;
    if state.grid_res != g {
        return Err(TurbError::ShapeMismatch(format!("latent grid_res {} vs params {}", state.grid_res, g)));
    }
    if width == 0 || height == 0 {
        return Err(TurbError::ShapeMismatch(format!("invalid sensor size {width}x{height}")));
    }
    let kernel_sigma = params.coherence_length / std::f64::consts::SQRT_2;
    let sx = kernel_sigma / spacing(width, g);
    let sy = kernel_sigma / spacing(height, g);
    let correlated = |c: usize| smooth_axis(&smooth_axis(state.channel(c), g, sx, 0), g, sy, 1);

    let [lo, hi] = params.blur_sigma_range;
    let s = params.scint_log_std;
    Ok(CoarseFields {
        grid_res: g,
        width,
        height,
        tilt_x: correlated(0).into_iter().map(|z| params.tilt_std * z).collect(),
        tilt_y: correlated(1).into_iter().map(|z| params.tilt_std * z).collect(),
        blur_sigma: correlated(2).into_iter().map(|z| lo + (hi - lo) * normal_cdf(z)).collect(),
        log_gain: correlated(3).into_iter().map(|z| s * z - 0.5 * s * s).collect(),
        blur_sigma_range: params.blur_sigma_range,
    })
}

struct Axis {
    lo: Vec<usize>,
    frac: Vec<f64>,
}

fn axis_map(size: usize, grid_res: usize) -> Axis {
    let sp = spacing(size, grid_res);
    let mut lo = Vec::with_capacity(size);
    let mut frac = Vec::with_capacity(size);
    for p in 0..size {
        let u = (p as f64 / sp).min((grid_res - 1) as f64);
        let i = (u.floor() as usize).min(grid_res - 2);
        lo.push(i);
        frac.push(u - i as f64);
    }
    Axis { lo, frac }
}

impl CoarseFields {
    /// Bilinear upsampling to sensor resolution; the gain is exponentiated
    /// after interpolation.
    pub fn upsample(&self) -> SensorFields {
        let g = self.grid_res;
        let ax = axis_map(self.width, g);
        let ay = axis_map(self.height, g);
        let n = self.width * self.height;
        let mut out = SensorFields {
            width: self.width,
            height: self.height,
            tilt_x: Vec::with_capacity(n),
            tilt_y: Vec::with_capacity(n),
            blur_sigma: Vec::with_capacity(n),
            gain: Vec::with_capacity(n),
            blur_sigma_range: self.blur_sigma_range,
        };
        let interp = |f: &[f64], i: usize, j: usize, fy: f64, fx: f64| {
            let a = f[i * g + j];
            let b = f[i * g + j + 1];
            let c = f[(i + 1) * g + j];
            let d = f[(i + 1) * g + j + 1];
            let top = a + (b - a) * fx;
            let bottom = c + (d - c) * fx;
            top + (bottom - top) * fy
        };
        for y in 0..self.height {
            let (i, fy) = (ay.lo[y], ay.frac[y]);
            for x in 0..self.width {
                let (j, fx) = (ax.lo[x], ax.frac[x]);
                out.tilt_x.push(interp(&self.tilt_x, i, j, fy, fx) as f32);
                out.tilt_y.push(interp(&self.tilt_y, i, j, fy, fx) as f32);
                let [lo, hi] = self.blur_sigma_range;
                out.blur_sigma.push(interp(&self.blur_sigma, i, j, fy, fx).clamp(lo, hi) as f32);
                out.gain.push(interp(&self.log_gain, i, j, fy, fx).exp() as f32);
            }
        }
        out
    }

    /// Raw little-endian f32 dump: tilt x, tilt y, blur sigma and log-gain
    /// planes, each `grid_res * grid_res` values.
    pub fn write_raw<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        for plane in [&self.tilt_x, &self.tilt_y, &self.blur_sigma, &self.log_gain] {
            let bytes: Vec<u8> = plane.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
            sink.write_all(&bytes)?;
        }
        Ok(())
    }
}

/// Sensor-resolution fields for a latent state.
pub fn realize_fields(params: &TurbulenceParams, state: &LatentState, width: usize, height: usize) -> Result<SensorFields> {
    Ok(coarse_fields(params, state, width, height)?.upsample())
}
