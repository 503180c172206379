//! Frame-to-event conversion under the log-intensity threshold model.
//!
//! Each pixel tracks a reference log level. Between two frames its log
//! intensity is interpolated linearly in time; every time the interpolated
//! value reaches `level ± C` an event is emitted at the interpolated crossing
//! time and the level moves to the crossed value. A crossing that falls
//! within the refractory period of the pixel's previous emitted event still
//! moves the level but produces no event.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventio::{Event, EventIoError, EventStream, FrameSequence, Polarity};
use crate::rng::{purpose, substream};

#[derive(Debug, Error)]
pub enum EvSimError {
    #[error("invalid event simulator config: {0}")]
    InvalidConfig(String),
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("at least one view is required")]
    NoViews,
    #[error("threshold list has {got} entries for {views} views")]
    ThresholdCount { got: usize, views: usize },
    #[error(transparent)]
    Data(#[from] EventIoError),
}

pub type Result<T> = std::result::Result<T, EvSimError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSimConfig {
    /// Log-intensity step per event.
    pub contrast_threshold: f64,
    /// Per-pixel dead time after an emitted event, microseconds.
    pub refractory_us: u64,
    /// Intensity floor applied before taking the logarithm.
    pub log_eps: f64,
}

impl Default for EventSimConfig {
    fn default() -> Self {
        Self { contrast_threshold: 0.2, refractory_us: 5000, log_eps: 1e-3 }
    }
}

impl EventSimConfig {
    pub fn with_threshold(contrast_threshold: f64) -> Self {
        Self { contrast_threshold, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contrast_threshold > 0.0 && self.contrast_threshold.is_finite()) {
            return Err(EvSimError::InvalidConfig(format!(
                "contrast threshold must be positive, got {}",
                self.contrast_threshold
            )));
        }
        if !(self.log_eps > 0.0 && self.log_eps.is_finite()) {
            return Err(EvSimError::InvalidConfig(format!("log_eps must be positive, got {}", self.log_eps)));
        }
        Ok(())
    }

    #[inline]
    pub fn log_intensity(&self, v: f32) -> f64 {
        (v as f64).max(self.log_eps).ln()
    }
}

/// Per-pixel simulator state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelState {
    pub level: f64,
    pub last_event: Option<u64>,
}

impl PixelState {
    pub fn new(initial_log: f64) -> Self {
        Self { level: initial_log, last_event: None }
    }

    /// Processes one interval where the log intensity goes linearly from
    /// `l0` at `t0` to `l1` at `t1`, calling `emit` for each event.
    pub fn advance(
        &mut self,
        (t0, l0): (u64, f64),
        (t1, l1): (u64, f64),
        config: &EventSimConfig,
        mut emit: impl FnMut(u64, Polarity),
    ) {
        let c = config.contrast_threshold;
        let span = (t1 - t0) as f64;
        let slope = l1 - l0;
        let mut crossing = |level: f64, p: Polarity, state: &mut PixelState| {
            let frac = if slope != 0.0 { ((level - l0) / slope).clamp(0.0, 1.0) } else { 1.0 };
            let t = t0 + (frac * span).round() as u64;
            let allowed = state.last_event.is_none_or(|last| t - last >= config.refractory_us);
            if allowed {
                state.last_event = Some(t);
                emit(t, p);
            }
        };
        if l1 >= self.level + c {
            while l1 >= self.level + c {
                self.level += c;
                let level = self.level;
                crossing(level, Polarity::On, self);
            }
        } else {
            while l1 <= self.level - c {
                self.level -= c;
                let level = self.level;
                crossing(level, Polarity::Off, self);
            }
        }
    }
}

/// Converts one view's frames into its event stream. The stream duration is
/// the last frame timestamp.
pub fn frames_to_events(frames: &FrameSequence, config: &EventSimConfig) -> Result<EventStream> {
    config.validate()?;
    if frames.len() < 2 {
        return Err(EvSimError::TooFewFrames(frames.len()));
    }
    let (w, h) = frames.shape().expect("non-empty");
    let ts = frames.timestamps();
    let rows: Vec<Vec<Event>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut events = Vec::new();
            let mut states: Vec<PixelState> =
                (0..w).map(|x| PixelState::new(config.log_intensity(frames.frames()[0].get(x, y)))).collect();
            for k in 1..frames.len() {
                let prev = &frames.frames()[k - 1];
                let cur = &frames.frames()[k];
                for (x, state) in states.iter_mut().enumerate() {
                    let l0 = config.log_intensity(prev.get(x, y));
                    let l1 = config.log_intensity(cur.get(x, y));
                    state.advance((ts[k - 1], l0), (ts[k], l1), config, |t, p| {
                        events.push(Event::new(x as u32, y as u32, t, p))
                    });
                }
            }
            events
        })
        .collect();
    let events: Vec<Event> = rows.into_iter().flatten().collect();
    Ok(EventStream::from_unsorted(w as u32, h as u32, *ts.last().unwrap(), events)?)
}

/// How contrast thresholds are assigned to the views of a light field.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdSpec {
    Shared(f64),
    PerView(Vec<f64>),
    /// Uniform draw in `[min, max]` per view from the substream
    /// `(seed, CONTRAST, view)`.
    Uniform { min: f64, max: f64, seed: u64 },
}

impl ThresholdSpec {
    pub fn resolve(&self, views: usize) -> Result<Vec<f64>> {
        use rand::Rng;
        match self {
            ThresholdSpec::Shared(c) => Ok(vec![*c; views]),
            ThresholdSpec::PerView(cs) if cs.len() == views => Ok(cs.clone()),
            ThresholdSpec::PerView(cs) => Err(EvSimError::ThresholdCount { got: cs.len(), views }),
            ThresholdSpec::Uniform { min, max, seed } => {
                if !(0.0 < *min && min <= max) {
                    return Err(EvSimError::InvalidConfig(format!("threshold range [{min}, {max}]")));
                }
                Ok((0..views)
                    .map(|v| {
                        let u: f64 = substream(*seed, &[purpose::CONTRAST, v as u64]).random();
                        min + (max - min) * u
                    })
                    .collect())
            }
        }
    }
}

/// Converts every view independently; returns the streams and the threshold
/// used for each view.
pub fn simulate_lightfield_events(
    views: &[FrameSequence],
    thresholds: &ThresholdSpec,
    base: &EventSimConfig,
) -> Result<(Vec<EventStream>, Vec<f64>)> {
    if views.is_empty() {
        return Err(EvSimError::NoViews);
    }
    let cs = thresholds.resolve(views.len())?;
    let streams = views
        .par_iter()
        .zip(cs.par_iter())
        .map(|(v, &c)| frames_to_events(v, &EventSimConfig { contrast_threshold: c, ..*base }))
        .collect::<Result<Vec<_>>>()?;
    Ok((streams, cs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventio::Frame;

    fn pixel_seq(values: &[f32], dt: u64) -> FrameSequence {
        let frames = values.iter().map(|&v| Frame::filled(1, 1, v).unwrap()).collect();
        FrameSequence::new(frames, (0..values.len() as u64).map(|k| k * dt).collect()).unwrap()
    }

    #[test]
    fn constant_sequence_is_silent() {
        let s = frames_to_events(&pixel_seq(&[0.3; 10], 1000), &EventSimConfig::default()).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.duration(), 9000);
    }

    #[test]
    fn step_of_three_point_two_thresholds() {
        let c = 0.1f64;
        let i0 = 0.2f32;
        let i1 = (0.2f64 * (3.2 * c).exp()) as f32;
        let dt = 32_000;
        let cfg = EventSimConfig { contrast_threshold: c, refractory_us: 0, log_eps: 1e-3 };
        let s = frames_to_events(&pixel_seq(&[i0, i1], dt), &cfg).unwrap();
        let times: Vec<u64> = s.events().iter().map(|e| e.t).collect();
        assert_eq!(times, vec![10_000, 20_000, 30_000]);
        assert!(s.events().iter().all(|e| e.p == Polarity::On));

        let cfg = EventSimConfig { refractory_us: 40_000, ..cfg };
        let s = frames_to_events(&pixel_seq(&[i0, i1], dt), &cfg).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.events()[0].t, 10_000);
    }

    #[test]
    fn suppressed_crossings_still_move_the_level() {
        let cfg = EventSimConfig { contrast_threshold: 0.5, refractory_us: 10_000, log_eps: 1e-3 };
        let mut st = PixelState::new(0.0);
        let mut got = Vec::new();
        st.advance((0, 0.0), (1000, 1.2), &cfg, |t, p| got.push((t, p)));
        assert_eq!(got.len(), 1);
        assert!((st.level - 1.0).abs() < 1e-12);
        // Going back down past 0.5 after the dead time emits one OFF event.
        st.advance((1000, 1.2), (20_000, 0.4), &cfg, |t, p| got.push((t, p)));
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].1, Polarity::Off);
    }

    #[test]
    fn too_few_frames_and_bad_config() {
        assert!(matches!(
            frames_to_events(&pixel_seq(&[0.5], 10), &EventSimConfig::default()),
            Err(EvSimError::TooFewFrames(1))
        ));
        let bad = EventSimConfig { contrast_threshold: 0.0, ..Default::default() };
        assert!(frames_to_events(&pixel_seq(&[0.5, 0.6], 10), &bad).is_err());
    }

    fn textured_clip() -> FrameSequence {
        let frames = (0..12)
            .map(|k| {
                Frame::from_fn(20, 16, |x, y| {
                    let phase = (x as f32 + 0.7 * k as f32) * 0.5 + y as f32 * 0.2;
                    0.45 + 0.4 * phase.sin()
                })
                .unwrap()
            })
            .collect();
        FrameSequence::at_rate(frames, 120.0).unwrap()
    }

    #[test]
    fn count_non_increasing_in_threshold() {
        let clip = textured_clip();
        let mut last = usize::MAX;
        for c in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let n = frames_to_events(&clip, &EventSimConfig::with_threshold(c)).unwrap().len();
            assert!(n <= last, "C={c}: {n} > {last}");
            last = n;
        }
    }

    #[test]
    fn level_tracks_final_intensity() {
        let clip = textured_clip();
        let cfg = EventSimConfig { contrast_threshold: 0.15, refractory_us: 0, log_eps: 1e-3 };
        let s = frames_to_events(&clip, &cfg).unwrap();
        let (w, h) = clip.shape().unwrap();
        let mut sum = vec![0.0f64; w * h];
        for e in s.events() {
            sum[e.y as usize * w + e.x as usize] += e.p.sign() as f64 * cfg.contrast_threshold;
        }
        let first = &clip.frames()[0];
        let last = clip.frames().last().unwrap();
        for y in 0..h {
            for x in 0..w {
                let excursion = cfg.log_intensity(last.get(x, y)) - cfg.log_intensity(first.get(x, y));
                assert!((excursion - sum[y * w + x]).abs() < cfg.contrast_threshold + 1e-9);
            }
        }
        let ts = clip.timestamps();
        assert!(s.events().iter().all(|e| e.t >= ts[0] && e.t <= *ts.last().unwrap()));
    }

    #[test]
    fn lightfield_thresholds() {
        let clip = textured_clip();
        let views = vec![clip.clone(); 3];
        let (streams, cs) = simulate_lightfield_events(&views, &ThresholdSpec::Shared(0.2), &Default::default()).unwrap();
        assert_eq!(cs, vec![0.2; 3]);
        assert!(streams.windows(2).all(|w| w[0] == w[1]));

        let spec = ThresholdSpec::Uniform { min: 0.1, max: 0.7, seed: 4 };
        let a = spec.resolve(9).unwrap();
        assert_eq!(a, spec.resolve(9).unwrap());
        assert!(a.iter().all(|c| (0.1..=0.7).contains(c)));
        assert!(ThresholdSpec::PerView(vec![0.1]).resolve(2).is_err());
        assert!(matches!(simulate_lightfield_events(&[], &ThresholdSpec::Shared(0.2), &Default::default()), Err(EvSimError::NoViews)));
    }

    #[test]
    fn static_scene_views_are_empty() {
        let frames = vec![Frame::filled(8, 8, 0.5).unwrap(); 5];
        let clip = FrameSequence::at_rate(frames, 120.0).unwrap();
        let (streams, _) =
            simulate_lightfield_events(&vec![clip; 9], &ThresholdSpec::Shared(0.1), &Default::default()).unwrap();
        assert_eq!(streams.len(), 9);
        assert!(streams.iter().all(EventStream::is_empty));
    }
}
