use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use super::{Result, StatsError};
use crate::eventio::Frame;

/// Rectangular block of samples. Sample `(i, j)` sits at image coordinates
/// `(origin.0 + i, origin.1 + j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    width: usize,
    height: usize,
    origin: (f64, f64),
    values: Vec<f64>,
}

impl Patch {
    pub fn new(width: usize, height: usize, origin: (f64, f64), values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(StatsError::InvalidInput(format!("patch {width}x{height} with {} values", values.len())));
        }
        Ok(Self { width, height, origin, values })
    }

    /// The `w`x`h` block of `frame` at (`x0`, `y0`), clipped to the frame.
    pub fn from_frame(frame: &Frame, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        let x1 = (x0 + w).min(frame.width());
        let y1 = (y0 + h).min(frame.height());
        if x0 >= x1 || y0 >= y1 {
            return Err(StatsError::InvalidInput("patch outside frame".into()));
        }
        let mut values = Vec::with_capacity((x1 - x0) * (y1 - y0));
        for y in y0..y1 {
            values.extend((x0..x1).map(|x| frame.get(x, y) as f64));
        }
        Self::new(x1 - x0, y1 - y0, (x0 as f64, y0 as f64), values)
    }

    /// Samples `params` on a `w`x`h` grid.
    pub fn render(params: &GaussianParams, width: usize, height: usize, origin: (f64, f64)) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                values.push(params.eval(origin.0 + i as f64, origin.1 + j as f64));
            }
        }
        Self { width, height, origin, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    fn coords(&self) -> impl Iterator<Item = ((f64, f64), f64)> + '_ {
        self.values.iter().enumerate().map(|(k, &v)| {
            let (i, j) = (k % self.width, k / self.width);
            ((self.origin.0 + i as f64, self.origin.1 + j as f64), v)
        })
    }

    fn border_mean(&self) -> f64 {
        let (w, h) = (self.width, self.height);
        let mut sum = 0.0;
        let mut n = 0usize;
        for j in 0..h {
            for i in 0..w {
                if i == 0 || j == 0 || i + 1 == w || j + 1 == h {
                    sum += self.values[j * w + i];
                    n += 1;
                }
            }
        }
        sum / n as f64
    }
}

/// Elliptical Gaussian spot on a constant background:
/// `A exp(-(x-cx)²/2σx² - (y-cy)²/2σy²) + B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub amplitude: f64,
    pub offset: f64,
    pub cx: f64,
    pub cy: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl GaussianParams {
    pub fn to_array(&self) -> [f64; 6] {
        [self.amplitude, self.offset, self.cx, self.cy, self.sigma_x, self.sigma_y]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self { amplitude: a[0], offset: a[1], cx: a[2], cy: a[3], sigma_x: a[4], sigma_y: a[5] }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.cx;
        let dy = y - self.cy;
        self.amplitude * (-0.5 * (dx * dx / (self.sigma_x * self.sigma_x) + dy * dy / (self.sigma_y * self.sigma_y))).exp()
            + self.offset
    }

    /// Partial derivatives of [`eval`](Self::eval) in `to_array` order.
    #[inline]
    pub fn gradient(&self, x: f64, y: f64) -> [f64; 6] {
        let dx = x - self.cx;
        let dy = y - self.cy;
        let sx2 = self.sigma_x * self.sigma_x;
        let sy2 = self.sigma_y * self.sigma_y;
        let e = (-0.5 * (dx * dx / sx2 + dy * dy / sy2)).exp();
        let ae = self.amplitude * e;
        [e, 1.0, ae * dx / sx2, ae * dy / sy2, ae * dx * dx / (sx2 * self.sigma_x), ae * dy * dy / (sy2 * self.sigma_y)]
    }

    /// Mean isotropic spread `(σx + σy) / 2`.
    pub fn mean_sigma(&self) -> f64 {
        0.5 * (self.sigma_x + self.sigma_y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub params: GaussianParams,
    pub residual_rms: f64,
    pub iterations: usize,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub initial_damping: f64,
    pub max_damping: f64,
    pub min_sigma: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 200, relative_tolerance: 1e-10, initial_damping: 1e-3, max_damping: 1e12, min_sigma: 0.1 }
    }
}

/// Starting point from the background-subtracted patch: border mean as
/// background, peak as amplitude, first and second moments as centroid and
/// spreads.
pub fn moment_init(patch: &Patch) -> Result<GaussianParams> {
    let offset = patch.border_mean();
    let peak = patch.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut m0 = 0.0;
    let (mut mx, mut my) = (0.0, 0.0);
    for ((x, y), v) in patch.coords() {
        let w = (v - offset).max(0.0);
        m0 += w;
        mx += w * x;
        my += w * y;
    }
    if !(m0 > 0.0 && peak > offset) {
        return Err(StatsError::Divergence("patch has no positive contrast".into()));
    }
    let (cx, cy) = (mx / m0, my / m0);
    let (mut vx, mut vy) = (0.0, 0.0);
    for ((x, y), v) in patch.coords() {
        let w = (v - offset).max(0.0);
        vx += w * (x - cx) * (x - cx);
        vy += w * (y - cy) * (y - cy);
    }
    Ok(GaussianParams {
        amplitude: peak - offset,
        offset,
        cx,
        cy,
        sigma_x: (vx / m0).sqrt().max(0.5),
        sigma_y: (vy / m0).sqrt().max(0.5),
    })
}

fn cost(patch: &Patch, p: &GaussianParams) -> f64 {
    patch.coords().map(|((x, y), v)| (p.eval(x, y) - v).powi(2)).sum::<f64>() * 0.5
}

/// Levenberg-Marquardt least-squares fit with Marquardt (diagonal) damping.
/// Without `init` the fit starts from [`moment_init`].
pub fn fit_gaussian2d(patch: &Patch, init: Option<GaussianParams>) -> Result<GaussianFit> {
    fit_gaussian2d_with(patch, init, &FitOptions::default())
}

pub fn fit_gaussian2d_with(patch: &Patch, init: Option<GaussianParams>, opts: &FitOptions) -> Result<GaussianFit> {
    let mut p = match init {
        Some(p) => p,
        None => moment_init(patch)?,
    };
    if p.to_array().iter().any(|v| !v.is_finite()) || p.sigma_x <= 0.0 || p.sigma_y <= 0.0 {
        return Err(StatsError::InvalidInput(format!("bad initial guess {p:?}")));
    }
    let mut c = cost(patch, &p);
    let mut history = vec![c];
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    // Below this cost the residual is pure rounding noise.
    let scale = p.amplitude.abs().max(p.offset.abs()).max(1.0);
    let floor = patch.values.len() as f64 * (1e-14 * scale).powi(2);

    'outer: while iterations < opts.max_iterations && c > floor {
        iterations += 1;
        let mut jtj = Matrix6::<f64>::zeros();
        let mut jtr = Vector6::<f64>::zeros();
        for ((x, y), v) in patch.coords() {
            let g = Vector6::from(p.gradient(x, y));
            let r = p.eval(x, y) - v;
            jtj += g * g.transpose();
            jtr += g * r;
        }
        loop {
            let mut damped = jtj;
            for k in 0..6 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let step = damped.cholesky().map(|ch| -ch.solve(&jtr));
            let trial = step.map(|d| {
                let a = p.to_array();
                GaussianParams::from_array(std::array::from_fn(|k| a[k] + d[k]))
            });
            if let Some(t) = trial.filter(|t| t.sigma_x > 0.0 && t.sigma_y > 0.0) {
                let tc = cost(patch, &t);
                if tc.is_finite() && tc <= c {
                    let converged = (c - tc) <= opts.relative_tolerance * c;
                    p = t;
                    c = tc;
                    history.push(c);
                    lambda = (lambda / 10.0).max(1e-15);
                    if converged {
                        break 'outer;
                    }
                    break;
                }
                if tc.is_finite() && (tc - c) <= opts.relative_tolerance * c {
                    break 'outer;
                }
            }
            lambda *= 10.0;
            if lambda > opts.max_damping {
                if history.len() > 1 || c <= floor {
                    break 'outer;
                }
                return Err(StatsError::Divergence(format!("no descent step at maximum damping, cost {c:e}")));
            }
        }
    }

    if p.to_array().iter().any(|v| !v.is_finite()) {
        return Err(StatsError::Divergence("non-finite parameters".into()));
    }
    if p.sigma_x < opts.min_sigma || p.sigma_y < opts.min_sigma {
        return Err(StatsError::SigmaCollapse { sigma_x: p.sigma_x, sigma_y: p.sigma_y });
    }
    let residual_rms = (2.0 * c / patch.values.len() as f64).sqrt();
    Ok(GaussianFit { params: p, residual_rms, iterations, cost_history: history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn truth() -> GaussianParams {
        GaussianParams { amplitude: 2.0, offset: 0.1, cx: 10.5, cy: 12.25, sigma_x: 2.0, sigma_y: 3.0 }
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let patch = Patch::render(&truth(), 24, 26, (0.0, 0.0));
        let fit = fit_gaussian2d(&patch, None).unwrap();
        for (a, b) in fit.params.to_array().iter().zip(truth().to_array()) {
            assert!((a - b).abs() < 1e-6, "{:?}", fit.params);
        }
        assert!(fit.residual_rms < 1e-8);
    }

    #[test]
    fn origin_is_respected() {
        let t = GaussianParams { cx: 110.5, cy: 52.25, ..truth() };
        let patch = Patch::render(&t, 24, 26, (100.0, 40.0));
        let fit = fit_gaussian2d(&patch, None).unwrap();
        assert!((fit.params.cx - 110.5).abs() < 1e-6 && (fit.params.cy - 52.25).abs() < 1e-6);
    }

    #[test]
    fn exact_guess_is_a_fixed_point() {
        let patch = Patch::render(&truth(), 24, 26, (0.0, 0.0));
        let fit = fit_gaussian2d(&patch, Some(truth())).unwrap();
        assert_eq!(fit.params, truth());
        assert_eq!(fit.iterations, 0);
    }

    #[test]
    fn flat_patch_fails() {
        let patch = Patch::new(16, 16, (0.0, 0.0), vec![0.3; 256]).unwrap();
        assert!(matches!(fit_gaussian2d(&patch, None), Err(StatsError::Divergence(_) | StatsError::SigmaCollapse { .. })));
        let guess = GaussianParams { amplitude: 0.5, offset: 0.3, cx: 8.0, cy: 8.0, sigma_x: 2.0, sigma_y: 2.0 };
        assert!(fit_gaussian2d(&patch, Some(guess)).is_err() || {
            let f = fit_gaussian2d(&patch, Some(guess)).unwrap();
            f.params.amplitude.abs() < 1e-6
        });
    }

    #[test]
    fn accepted_steps_never_increase_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut patch = Patch::render(&truth(), 24, 26, (0.0, 0.0));
        patch.values_mut().iter_mut().for_each(|v| *v += noise.sample(&mut rng));
        let fit = fit_gaussian2d(&patch, None).unwrap();
        assert!(fit.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.cost_history.len() > 1);
    }

    fn jacobian_rel_error(p: &GaussianParams) -> f64 {
        let pts: Vec<(f64, f64)> = (0..15).flat_map(|j| (0..15).map(move |i| (i as f64 * 1.3, j as f64 * 1.7))).collect();
        let mut worst: f64 = 0.0;
        let a = p.to_array();
        for k in 0..6 {
            let h = 1e-5 * a[k].abs().max(1.0);
            let mut plus = a;
            let mut minus = a;
            plus[k] += h;
            minus[k] -= h;
            let (pp, pm) = (GaussianParams::from_array(plus), GaussianParams::from_array(minus));
            let mut diff = 0.0;
            let mut norm = 0.0;
            for &(x, y) in &pts {
                let analytic = p.gradient(x, y)[k];
                let numeric = (pp.eval(x, y) - pm.eval(x, y)) / (2.0 * h);
                diff += (analytic - numeric).powi(2);
                norm += analytic.powi(2);
            }
            worst = worst.max((diff / norm.max(1e-300)).sqrt());
        }
        worst
    }

    proptest! {
        #[test]
        fn jacobian_matches_central_differences(
            a in 0.2f64..5.0, b in -1.0f64..1.0, cx in 3.0f64..15.0, cy in 3.0f64..20.0,
            sx in 0.8f64..5.0, sy in 0.8f64..5.0,
        ) {
            let p = GaussianParams { amplitude: a, offset: b, cx, cy, sigma_x: sx, sigma_y: sy };
            prop_assert!(jacobian_rel_error(&p) < 1e-6);
        }
    }
}
