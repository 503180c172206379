use crate::eventio::{EventStream, Frame, FrameSequence};

use super::{ReconConfig, ReconError, Result};

/// Exponent span after which the accumulator is rebased to keep the scale
/// factors bounded.
const REBASE_SPAN: f64 = 30.0;

/// Leaky per-pixel integrator.
///
/// Every event adds `p * C` to its pixel; between events each pixel decays
/// toward the current spatial mean at rate `λ`. The spatial mean itself only
/// changes at events. Pixel values are stored as
/// `L_i = m + e^{-λ(t - t_base)} (a_i + g)` so that an event costs O(1).
struct LeakyIntegrator {
    lambda: f64,
    step: f64,
    n: f64,
    base_t: f64,
    mean: f64,
    shift: f64,
    acc: Vec<f64>,
}

impl LeakyIntegrator {
    fn new(pixels: usize, lambda: f64, step: f64) -> Self {
        Self { lambda, step, n: pixels as f64, base_t: 0.0, mean: 0.0, shift: 0.0, acc: vec![0.0; pixels] }
    }

    fn rebase(&mut self, t: f64) {
        let decay = (-self.lambda * (t - self.base_t)).exp();
        for a in &mut self.acc {
            *a = (*a + self.shift) * decay;
        }
        self.shift = 0.0;
        self.base_t = t;
    }

    fn growth(&mut self, t: f64) -> f64 {
        if self.lambda == 0.0 {
            return 1.0;
        }
        if self.lambda * (t - self.base_t) > REBASE_SPAN {
            self.rebase(t);
        }
        (self.lambda * (t - self.base_t)).exp()
    }

    fn event(&mut self, pixel: usize, t: f64, sign: f64) {
        let jump = sign * self.step;
        let g = self.growth(t);
        self.acc[pixel] += jump * g;
        self.shift -= jump / self.n * g;
        self.mean += jump / self.n;
    }

    fn sample(&mut self, t: f64) -> Vec<f64> {
        let g = self.growth(t);
        self.acc.iter().map(|a| self.mean + (a + self.shift) / g).collect()
    }
}

/// Raw log-intensity estimates at `timestamps` (microseconds), one row-major
/// plane per timestamp. Estimates start at zero.
pub fn integrate_log(stream: &EventStream, timestamps: &[u64], config: &ReconConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    if timestamps.windows(2).any(|w| w[0] > w[1]) {
        return Err(ReconError::InvalidConfig("output timestamps must be non-decreasing".into()));
    }
    let w = stream.width() as usize;
    let mut integ = LeakyIntegrator::new(w * stream.height() as usize, config.leak_rate, config.contrast_threshold);
    let events = stream.events();
    let mut next = 0;
    let mut out = Vec::with_capacity(timestamps.len());
    for &ts in timestamps {
        while next < events.len() && events[next].t <= ts {
            let e = &events[next];
            integ.event(e.y as usize * w + e.x as usize, e.t as f64 * 1e-6, e.p.sign() as f64);
            next += 1;
        }
        out.push(integ.sample(ts as f64 * 1e-6));
    }
    Ok(out)
}

/// Percentile by linear interpolation between order statistics.
pub(crate) fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Display range of a clip: 2nd and 98th percentiles of all estimates in
/// the first second.
pub fn robust_range(planes: &[Vec<f64>], timestamps: &[u64]) -> (f64, f64) {
    let Some(&t0) = timestamps.first() else { return (0.0, 0.0) };
    let mut vals: Vec<f64> = planes
        .iter()
        .zip(timestamps)
        .filter(|(_, &t)| t < t0 + 1_000_000)
        .flat_map(|(p, _)| p.iter().copied())
        .collect();
    vals.sort_by(f64::total_cmp);
    (percentile(&vals, 0.02), percentile(&vals, 0.98))
}

/// Integrates `stream` and maps the estimates linearly to `[0, 1]` using the
/// clip's robust range. A degenerate range gives uniform 0.5 frames.
pub fn integrate_events(stream: &EventStream, timestamps: &[u64], config: &ReconConfig) -> Result<FrameSequence> {
    let planes = integrate_log(stream, timestamps, config)?;
    let (lo, hi) = robust_range(&planes, timestamps);
    let (w, h) = (stream.width() as usize, stream.height() as usize);
    let frames = planes
        .into_iter()
        .map(|p| {
            let data = if hi - lo > 1e-12 {
                p.iter().map(|v| ((v - lo) / (hi - lo)) as f32).collect()
            } else {
                vec![0.5; w * h]
            };
            Frame::from_clamped(w, h, data)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(FrameSequence::new(frames, timestamps.to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventio::{Event, Polarity};

    fn cfg(lambda: f64) -> ReconConfig {
        ReconConfig { contrast_threshold: 0.25, leak_rate: lambda, ..Default::default() }
    }

    #[test]
    fn no_events_gives_zero_estimates() {
        let s = EventStream::empty(4, 3, 1000).unwrap();
        let planes = integrate_log(&s, &[0, 500, 1000], &cfg(0.0)).unwrap();
        assert!(planes.iter().flatten().all(|&v| v == 0.0));
        let frames = integrate_events(&s, &[0, 500, 1000], &cfg(0.0)).unwrap();
        assert!(frames.frames().iter().all(|f| f.data().iter().all(|&v| v == 0.5)));
    }

    #[test]
    fn single_event_offsets_one_pixel() {
        let s = EventStream::new(4, 3, 10_000, vec![Event::new(1, 2, 100, Polarity::On)]).unwrap();
        let planes = integrate_log(&s, &[50, 100, 9_000], &cfg(0.0)).unwrap();
        assert!(planes[0].iter().all(|&v| v == 0.0));
        for p in &planes[1..] {
            for (i, &v) in p.iter().enumerate() {
                let expected = if i == 2 * 4 + 1 { 0.25 } else { 0.0 };
                assert!((v - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn opposite_events_cancel() {
        let events = vec![Event::new(0, 0, 10, Polarity::On), Event::new(0, 0, 20, Polarity::Off)];
        let s = EventStream::new(2, 2, 100, events).unwrap();
        let planes = integrate_log(&s, &[100], &cfg(0.0)).unwrap();
        assert!(planes[0].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn leak_decays_toward_the_spatial_mean() {
        let lambda = 2.0;
        let s = EventStream::new(2, 1, 3_000_000, vec![Event::new(0, 0, 0, Polarity::On)]).unwrap();
        let planes = integrate_log(&s, &[0, 1_000_000, 3_000_000], &cfg(lambda)).unwrap();
        let mean = 0.125;
        for (p, t) in planes.iter().zip([0.0, 1.0, 3.0f64]) {
            let dev = 0.125 * (-lambda * t).exp();
            assert!((p[0] - (mean + dev)).abs() < 1e-12, "{p:?}");
            assert!((p[1] - (mean - dev)).abs() < 1e-12);
        }
    }

    #[test]
    fn rebasing_matches_direct_formula() {
        // Events spread over a span long enough to trigger several rebases.
        let lambda = 25.0;
        let events: Vec<Event> = (0..40).map(|k| Event::new(k % 3, 0, k as u64 * 100_000, Polarity::On)).collect();
        let s = EventStream::new(3, 1, 4_000_000, events.clone()).unwrap();
        let got = integrate_log(&s, &[4_000_000], &cfg(lambda)).unwrap();
        // Reference: brute-force superposition of decaying jumps.
        let mut expected = [0.0f64; 3];
        let t_end = 4.0;
        for e in &events {
            let t = e.t as f64 * 1e-6;
            let d = (-lambda * (t_end - t)).exp();
            for (i, v) in expected.iter_mut().enumerate() {
                let own = if i == e.x as usize { 0.25 } else { 0.0 };
                *v += 0.25 / 3.0 + (own - 0.25 / 3.0) * d;
            }
        }
        for (a, b) in got[0].iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn percentile_interpolates() {
        let v: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        assert_eq!(percentile(&v, 0.02), 2.0);
        assert_eq!(percentile(&v, 0.98), 98.0);
        assert_eq!(percentile(&[1.0, 3.0], 0.5), 2.0);
    }
}
