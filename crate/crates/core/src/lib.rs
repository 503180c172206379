//! Simulation, calibration and analysis toolkit for event-based light-field
//! imaging through atmospheric turbulence.
//!
//! The pipeline mirrors a synthetic data generator for multi-view event
//! cameras:
//!
//! * [`turbsim`] degrades clean frames with temporally correlated tilt, blur
//!   and scintillation fields, one independent realization per view.
//! * [`evsim`] converts each degraded view into an event stream with a
//!   log-intensity threshold model and refractory period.
//! * [`eventio`] holds the data model, the on-disk formats and the voxel-grid
//!   encoder used to feed multi-view event data to a reconstructor.
//! * [`lfgeom`] extracts sub-aperture views from a mosaic and aligns them
//!   with homographies.
//! * [`turbstats`] measures tilt, blur and scintillation statistics from
//!   dot-grid recordings and calibrates the contrast threshold.
//! * [`recon`] provides a classical per-view reconstruction, cross-view
//!   robust fusion and image quality metrics.

pub mod eventio;
pub mod evsim;
pub mod lfgeom;
pub mod recon;
pub mod rng;
pub mod turbsim;
pub mod turbstats;

pub use eventio::{Event, EventStream, Frame, FrameSequence, Polarity};
