use super::dots::TiltVector;
use super::{Result, StatsError};

/// Two-axis normalized tilt autocorrelation for lags `0..=max_lag`.
///
/// Each axis is mean-removed; the lagged product is averaged over the
/// `n - τ` available pairs and divided by the axis variance. The two axis
/// ratios are averaged. Lag 0 is exactly 1 and values are clamped to
/// `[-1, 1]`.
pub fn tilt_autocorrelation(series: &[TiltVector], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag {
        return Err(StatsError::InvalidInput(format!("series of {n} samples is too short for lag {max_lag}")));
    }
    let mx = series.iter().map(|t| t.x).sum::<f64>() / n as f64;
    let my = series.iter().map(|t| t.y).sum::<f64>() / n as f64;
    let xs: Vec<f64> = series.iter().map(|t| t.x - mx).collect();
    let ys: Vec<f64> = series.iter().map(|t| t.y - my).collect();
    let var = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>() / n as f64;
    let (vx, vy) = (var(&xs), var(&ys));
    if !(vx > 0.0 && vy > 0.0) {
        return Err(StatsError::ZeroVariance);
    }
    let lagged = |v: &[f64], tau: usize| v.iter().zip(&v[tau..]).map(|(a, b)| a * b).sum::<f64>() / (n - tau) as f64;
    Ok((0..=max_lag)
        .map(|tau| {
            if tau == 0 {
                1.0
            } else {
                (0.5 * (lagged(&xs, tau) / vx + lagged(&ys, tau) / vy)).clamp(-1.0, 1.0)
            }
        })
        .collect())
}

/// Average of [`tilt_autocorrelation`] over several series.
pub fn mean_tilt_autocorrelation(series: &[Vec<TiltVector>], max_lag: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(StatsError::InvalidInput("no series".into()));
    }
    let mut acc = vec![0.0; max_lag + 1];
    for s in series {
        for (a, c) in acc.iter_mut().zip(tilt_autocorrelation(s, max_lag)?) {
            *a += c;
        }
    }
    Ok(acc.into_iter().map(|a| a / series.len() as f64).collect())
}

/// Pairwise vector correlation `⟨αᵢ·αⱼ⟩ / √(⟨|αᵢ|²⟩⟨|αⱼ|²⟩)` between units
/// (dots of one view, or views of one dot). The matrix is symmetric with a
/// unit diagonal.
pub fn tilt_spatial_correlation(units: &[Vec<TiltVector>]) -> Result<Vec<Vec<f64>>> {
    let n = units.len();
    if n == 0 {
        return Err(StatsError::InvalidInput("no series".into()));
    }
    let len = units[0].len();
    if len == 0 || units.iter().any(|u| u.len() != len) {
        return Err(StatsError::InvalidInput("series lengths differ".into()));
    }
    let power: Vec<f64> = units.iter().map(|u| u.iter().map(TiltVector::norm_sq).sum::<f64>() / len as f64).collect();
    if power.iter().any(|&p| p.is_nan() || p <= 0.0) {
        return Err(StatsError::ZeroVariance);
    }
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][i] = 1.0;
        for j in i + 1..n {
            let cross = units[i].iter().zip(&units[j]).map(|(a, b)| a.dot(b)).sum::<f64>() / len as f64;
            let c = (cross / (power[i] * power[j]).sqrt()).clamp(-1.0, 1.0);
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    Ok(m)
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m2 / self.n as f64
        }
    }
}

/// `Var(I) / ⟨I⟩²`, zero for a constant series.
pub fn scintillation_index(intensity: &[f64]) -> Result<f64> {
    let mut m = RunningMoments::default();
    intensity.iter().for_each(|&v| m.push(v));
    if m.count() == 0 || m.mean().is_nan() || m.mean() <= 0.0 {
        return Err(StatsError::ZeroMean);
    }
    Ok(m.variance() / (m.mean() * m.mean()))
}
