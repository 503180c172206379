//! Event, frame and voxel-grid data model with their serialized forms.

mod csv;
mod evlf;
mod frame;
mod pgm;
mod voxel;

use std::cmp::Ordering;
use std::fmt;
use std::io;

use thiserror::Error;

pub use self::csv::{read_events_csv, write_events_csv};
pub use evlf::{read_events, write_events, EVLF_HEADER_LEN, EVLF_MAGIC, EVLF_RECORD_LEN, EVLF_VERSION};
pub use frame::{Frame, FrameSequence};
pub use pgm::{decode_pgm, encode_pgm, frame_files, parse_timestamps, read_frames, write_frames, BitDepth, TIMESTAMPS_FILE};
pub use voxel::{
    encode_voxel_grid, encode_windows, event_rate, read_voxels, stack_views, write_voxels, MultiViewVoxelGrid,
    TimeWindow, VoxelGrid, EVVX_MAGIC, EVVX_VERSION,
};

#[derive(Debug, Error)]
pub enum EventIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated input: expected {expected} bytes of {what}")]
    Truncated { what: &'static str, expected: usize },
    #[error("timestamp order violation at event {index}: {t} < {prev}")]
    TimestampOrder { index: usize, prev: u64, t: u64 },
    #[error("event {index} timestamp {t} exceeds stream duration {duration}")]
    TimestampAfterDuration { index: usize, t: u64, duration: u64 },
    #[error("event {index} at ({x}, {y}) outside {width}x{height}")]
    OutOfBounds { index: usize, x: u32, y: u32, width: u32, height: u32 },
    #[error("invalid polarity {0}")]
    InvalidPolarity(i64),
    #[error("nonzero padding byte in record {0}")]
    Padding(usize),
    #[error("{0} bytes of trailing data")]
    TrailingData(usize),
    #[error("dimension {0} exceeds the u16 range of the format")]
    DimensionTooLarge(u32),
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("pixel value {value} at index {index} is not a finite value in [0, 1]")]
    PixelRange { index: usize, value: f32 },
    #[error("{frames} frames but {timestamps} timestamps")]
    CountMismatch { frames: usize, timestamps: usize },
    #[error("frame {index} is {width}x{height}, expected {expected_width}x{expected_height}")]
    ShapeMismatch { index: usize, width: usize, height: usize, expected_width: usize, expected_height: usize },
    #[error("timestamps must be strictly increasing (index {0})")]
    NonIncreasingTimestamps(usize),
    #[error("empty frame sequence")]
    EmptySequence,
    #[error("invalid time window [{start}, {end})")]
    InvalidWindow { start: u64, end: u64 },
    #[error("bin count must be at least 1")]
    InvalidBins,
    #[error("voxel grids disagree: {0}")]
    GridMismatch(String),
    #[error("zero-duration stream")]
    ZeroDuration,
    #[error("csv error: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, EventIoError>;

/// Sign of a brightness change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(i8)]
pub enum Polarity {
    Off = -1,
    On = 1,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        self as i8
    }

    pub fn as_f32(self) -> f32 {
        self.sign() as f32
    }

    pub fn from_sign(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Polarity::On),
            -1 => Ok(Polarity::Off),
            other => Err(EventIoError::InvalidPolarity(other)),
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sign())
    }
}

/// One brightness-change record. `t` is in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub x: u32,
    pub y: u32,
    pub t: u64,
    pub p: Polarity,
}

impl Event {
    pub fn new(x: u32, y: u32, t: u64, p: Polarity) -> Self {
        Self { x, y, t, p }
    }

    /// Canonical stream order: timestamp, then row, column and polarity.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        (self.t, self.y, self.x, self.p).cmp(&(other.t, other.y, other.x, other.p))
    }
}

/// Time-ordered events of a single view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    width: u32,
    height: u32,
    duration: u64,
    events: Vec<Event>,
}

impl EventStream {
    /// Builds a stream, checking ordering, bounds and polarity invariants.
    pub fn new(width: u32, height: u32, duration: u64, events: Vec<Event>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(EventIoError::InvalidDimensions { width: width as usize, height: height as usize });
        }
        let mut prev = 0u64;
        for (index, e) in events.iter().enumerate() {
            if e.x >= width || e.y >= height {
                return Err(EventIoError::OutOfBounds { index, x: e.x, y: e.y, width, height });
            }
            if e.t < prev {
                return Err(EventIoError::TimestampOrder { index, prev, t: e.t });
            }
            if e.t > duration {
                return Err(EventIoError::TimestampAfterDuration { index, t: e.t, duration });
            }
            prev = e.t;
        }
        Ok(Self { width, height, duration, events })
    }

    /// Sorts `events` canonically before validating.
    pub fn from_unsorted(width: u32, height: u32, duration: u64, mut events: Vec<Event>) -> Result<Self> {
        events.sort_unstable_by(Event::canonical_cmp);
        Self::new(width, height, duration, events)
    }

    pub fn empty(width: u32, height: u32, duration: u64) -> Result<Self> {
        Self::new(width, height, duration, Vec::new())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn duration(&self) -> u64 {
        self.duration
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Events with `start <= t < end`.
    pub fn slice_time(&self, start: u64, end: u64) -> &[Event] {
        let lo = self.events.partition_point(|e| e.t < start);
        let hi = self.events.partition_point(|e| e.t < end);
        &self.events[lo..hi.max(lo)]
    }
}
