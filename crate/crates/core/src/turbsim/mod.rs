//! Parametric anisoplanatic turbulence: temporally correlated tilt, blur and
//! scintillation fields, realized independently per view and applied to
//! clean frames as gain after blur after warp.

mod apply;
mod fields;
mod params;

use rayon::prelude::*;
use thiserror::Error;

use crate::eventio::{EventIoError, Frame, FrameSequence};
use crate::rng::{purpose, substream};

pub use apply::{apply_turbulence, BLUR_LEVELS};
pub use fields::{
    advance_state, advance_values, coarse_fields, normal_cdf, realize_fields, CoarseFields, LatentState,
    SensorFields, LATENT_CHANNELS,
};
pub use params::{params_from_optics, AngularStrength, OpticalSetup, TurbulenceParams, TurbulencePreset};

#[derive(Debug, Error)]
pub enum TurbError {
    #[error("invalid turbulence parameters: {0}")]
    InvalidParams(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("at least one view is required")]
    NoViews,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] EventIoError),
}

pub type Result<T> = std::result::Result<T, TurbError>;

/// Frame-by-frame field generator for one view.
///
/// Frame `k` of view `v` draws its innovations from the substream
/// `(seed, TURBULENCE, v, k)`; frame 0 draws a fresh stationary state.
#[derive(Debug, Clone)]
pub struct ViewTurbulence {
    params: TurbulenceParams,
    view: u64,
    width: usize,
    height: usize,
    frame: u64,
    state: Option<LatentState>,
}

impl ViewTurbulence {
    pub fn new(params: &TurbulenceParams, view: usize, width: usize, height: usize) -> Result<Self> {
        params.validate()?;
        Ok(Self { params: params.clone(), view: view as u64, width, height, frame: 0, state: None })
    }

    /// Advances the latent chain and returns the latent state of the next frame.
    pub fn next_state(&mut self) -> Result<&LatentState> {
        let mut rng = substream(self.params.seed, &[purpose::TURBULENCE, self.view, self.frame]);
        let next = match &self.state {
            None => LatentState::fresh(self.params.grid_res, &mut rng),
            Some(prev) => advance_state(prev, self.params.ar_coeff, &mut rng)?,
        };
        self.frame += 1;
        Ok(self.state.insert(next))
    }

    /// Lattice fields of the next frame.
    pub fn next_coarse(&mut self) -> Result<CoarseFields> {
        let (w, h) = (self.width, self.height);
        let params = self.params.clone();
        let state = self.next_state()?;
        coarse_fields(&params, state, w, h)
    }

    pub fn next_fields(&mut self) -> Result<SensorFields> {
        Ok(self.next_coarse()?.upsample())
    }

    /// Degrades the next frame of the view.
    pub fn degrade(&mut self, frame: &Frame) -> Result<Frame> {
        let fields = self.next_fields()?;
        apply_turbulence(frame, &fields)
    }
}

/// One degraded sequence for view `view`.
pub fn simulate_view(clean: &FrameSequence, params: &TurbulenceParams, view: usize) -> Result<FrameSequence> {
    let (w, h) = clean.shape().ok_or(TurbError::Data(EventIoError::EmptySequence))?;
    let mut turb = ViewTurbulence::new(params, view, w, h)?;
    let frames = clean.frames().iter().map(|f| turb.degrade(f)).collect::<Result<Vec<_>>>()?;
    Ok(FrameSequence::new(frames, clean.timestamps().to_vec())?)
}

/// `n_views` independently degraded copies of `clean`, in view order.
/// Views are simulated in parallel; results do not depend on scheduling.
pub fn simulate_lightfield(clean: &FrameSequence, params: &TurbulenceParams, n_views: usize) -> Result<Vec<FrameSequence>> {
    if n_views < 1 {
        return Err(TurbError::NoViews);
    }
    params.validate()?;
    (0..n_views).into_par_iter().map(|v| simulate_view(clean, params, v)).collect()
}
