//! Voxel-grid encoding of event windows and multi-view channel stacking.
//!
//! Serialized grids use the EVVX container:
//!
//! ```text
//!  0  magic     b"EVVX"
//!  4  version   u16
//!  6  views     u16
//!  8  bins      u16
//! 10  height    u16
//! 12  width     u16
//! 14  reserved  u16 (zero)
//! 16  t_start   u64
//! 24  t_end     u64
//! 32  values    f32 x views*bins*height*width, channel-major, little-endian
//! ```

use std::io::{ErrorKind, Read, Write};

use rayon::prelude::*;

use super::{EventIoError, EventStream, Result};

pub const EVVX_MAGIC: [u8; 4] = *b"EVVX";
pub const EVVX_VERSION: u16 = 1;
const EVVX_HEADER_LEN: usize = 32;

/// Half-open interval `[start, end)` in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeWindow {
    pub start: u64,
    pub end: u64,
}

impl TimeWindow {
    pub fn new(start: u64, end: u64) -> Result<Self> {
        if end <= start {
            return Err(EventIoError::InvalidWindow { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, t: u64) -> bool {
        self.start <= t && t < self.end
    }

    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// `bins`x`height`x`width` tensor of splatted polarities for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    bins: usize,
    height: usize,
    width: usize,
    window: TimeWindow,
    values: Vec<f32>,
}

impl VoxelGrid {
    pub fn zeros(bins: usize, height: usize, width: usize, window: TimeWindow) -> Self {
        Self { bins, height, width, window, values: vec![0.0; bins * height * width] }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, bin: usize, y: usize, x: usize) -> f32 {
        self.values[(bin * self.height + y) * self.width + x]
    }

    /// One temporal bin as a row-major plane.
    pub fn bin(&self, bin: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.values[bin * plane..(bin + 1) * plane]
    }
}

/// Bilinear temporal splatting of the events in `window` into `bins` bins.
///
/// An event at time `t` has normalized coordinate
/// `t* = (bins - 1) * (t - start) / (end - start)` and adds
/// `p * max(0, 1 - |t* - b|)` to every bin `b` at its pixel. The two weights
/// of an event sum to exactly one.
pub fn encode_voxel_grid(stream: &EventStream, window: TimeWindow, bins: usize) -> Result<VoxelGrid> {
    if bins < 1 {
        return Err(EventIoError::InvalidBins);
    }
    let window = TimeWindow::new(window.start, window.end)?;
    let (w, h) = (stream.width() as usize, stream.height() as usize);
    let mut grid = VoxelGrid::zeros(bins, h, w, window);
    let plane = w * h;
    let scale = (bins - 1) as f64 / window.len() as f64;
    let last = (bins - 1) as f64;
    for e in stream.slice_time(window.start, window.end) {
        let tn = ((e.t - window.start) as f64 * scale).clamp(0.0, last);
        let b0 = tn.floor();
        let upper = (tn - b0) as f32;
        let lower = 1.0f32 - upper;
        let b0 = b0 as usize;
        let pix = e.y as usize * w + e.x as usize;
        let p = e.p.as_f32();
        grid.values[b0 * plane + pix] += p * lower;
        if upper > 0.0 {
            grid.values[(b0 + 1) * plane + pix] += p * upper;
        }
    }
    Ok(grid)
}

/// Encodes several windows of one stream in parallel.
pub fn encode_windows(stream: &EventStream, windows: &[TimeWindow], bins: usize) -> Result<Vec<VoxelGrid>> {
    windows.par_iter().map(|&w| encode_voxel_grid(stream, w, bins)).collect()
}

/// Events per pixel per second.
pub fn event_rate(stream: &EventStream) -> Result<f64> {
    if stream.duration() == 0 {
        return Err(EventIoError::ZeroDuration);
    }
    let pixels = stream.width() as f64 * stream.height() as f64;
    Ok(stream.len() as f64 / (pixels * stream.duration() as f64 * 1e-6))
}

/// `N` voxel grids stacked along the bin axis: channel `i * bins + b` holds
/// bin `b` of the `i`-th view.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewVoxelGrid {
    views: usize,
    bins: usize,
    height: usize,
    width: usize,
    window: TimeWindow,
    values: Vec<f32>,
}

impl MultiViewVoxelGrid {
    pub fn views(&self) -> usize {
        self.views
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn channels(&self) -> usize {
        self.views * self.bins
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.values[c * plane..(c + 1) * plane]
    }

    /// Splits back into per-view grids, in channel-block order.
    pub fn unstack(&self) -> Vec<VoxelGrid> {
        let block = self.bins * self.height * self.width;
        self.values
            .chunks_exact(block)
            .map(|chunk| VoxelGrid {
                bins: self.bins,
                height: self.height,
                width: self.width,
                window: self.window,
                values: chunk.to_vec(),
            })
            .collect()
    }
}

impl From<VoxelGrid> for MultiViewVoxelGrid {
    fn from(g: VoxelGrid) -> Self {
        Self { views: 1, bins: g.bins, height: g.height, width: g.width, window: g.window, values: g.values }
    }
}

/// Stacks `grids[order[0]], grids[order[1]], ...` along the channel axis.
/// `order` must be a permutation of `0..grids.len()`; for a 3x3 light field
/// the natural order is row-major over the sub-aperture grid.
pub fn stack_views(grids: &[VoxelGrid], order: &[usize]) -> Result<MultiViewVoxelGrid> {
    let first = grids.first().ok_or_else(|| EventIoError::GridMismatch("no grids".into()))?;
    if order.len() != grids.len() {
        return Err(EventIoError::GridMismatch(format!("order has {} entries for {} grids", order.len(), grids.len())));
    }
    let mut seen = vec![false; grids.len()];
    for &i in order {
        if i >= grids.len() || std::mem::replace(&mut seen[i], true) {
            return Err(EventIoError::GridMismatch(format!("order is not a permutation (index {i})")));
        }
    }
    for (i, g) in grids.iter().enumerate() {
        if (g.bins, g.height, g.width) != (first.bins, first.height, first.width) {
            return Err(EventIoError::GridMismatch(format!("grid {i} shape differs from grid 0")));
        }
        if g.window != first.window {
            return Err(EventIoError::GridMismatch(format!("grid {i} window differs from grid 0")));
        }
    }
    let mut values = Vec::with_capacity(first.values.len() * grids.len());
    for &i in order {
        values.extend_from_slice(&grids[i].values);
    }
    Ok(MultiViewVoxelGrid {
        views: grids.len(),
        bins: first.bins,
        height: first.height,
        width: first.width,
        window: first.window,
        values,
    })
}

fn u16_dim(v: usize) -> Result<u16> {
    u16::try_from(v).map_err(|_| EventIoError::DimensionTooLarge(v.min(u32::MAX as usize) as u32))
}

pub fn write_voxels<W: Write>(grid: &MultiViewVoxelGrid, mut sink: W) -> Result<usize> {
    let mut header = [0u8; EVVX_HEADER_LEN];
    header[0..4].copy_from_slice(&EVVX_MAGIC);
    header[4..6].copy_from_slice(&EVVX_VERSION.to_le_bytes());
    header[6..8].copy_from_slice(&u16_dim(grid.views)?.to_le_bytes());
    header[8..10].copy_from_slice(&u16_dim(grid.bins)?.to_le_bytes());
    header[10..12].copy_from_slice(&u16_dim(grid.height)?.to_le_bytes());
    header[12..14].copy_from_slice(&u16_dim(grid.width)?.to_le_bytes());
    header[16..24].copy_from_slice(&grid.window.start.to_le_bytes());
    header[24..32].copy_from_slice(&grid.window.end.to_le_bytes());
    sink.write_all(&header)?;
    let body: Vec<u8> = grid.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    sink.write_all(&body)?;
    sink.flush()?;
    Ok(EVVX_HEADER_LEN + body.len())
}

pub fn read_voxels<R: Read>(mut source: R) -> Result<MultiViewVoxelGrid> {
    let mut header = [0u8; EVVX_HEADER_LEN];
    source.read_exact(&mut header).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => EventIoError::Truncated { what: "voxel header", expected: EVVX_HEADER_LEN },
        _ => e.into(),
    })?;
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if magic != EVVX_MAGIC {
        return Err(EventIoError::BadMagic(magic));
    }
    let u16_at = |i: usize| u16::from_le_bytes([header[i], header[i + 1]]) as usize;
    let version = u16_at(4) as u16;
    if version != EVVX_VERSION {
        return Err(EventIoError::UnsupportedVersion(version));
    }
    let (views, bins, height, width) = (u16_at(6), u16_at(8), u16_at(10), u16_at(12));
    if u16_at(14) != 0 {
        return Err(EventIoError::Malformed { what: "EVVX header", detail: "reserved field is nonzero".into() });
    }
    if views == 0 || bins == 0 || height == 0 || width == 0 {
        return Err(EventIoError::Malformed {
            what: "EVVX header",
            detail: format!("zero dimension in {views}x{bins}x{height}x{width}"),
        });
    }
    let start = u64::from_le_bytes(header[16..24].try_into().unwrap());
    let end = u64::from_le_bytes(header[24..32].try_into().unwrap());
    let window = TimeWindow::new(start, end)?;

    let count = views * bins * height * width;
    let mut values = Vec::with_capacity(count.min(1 << 22));
    let mut chunk = vec![0u8; 4 * 4096];
    let mut remaining = count;
    while remaining > 0 {
        let n = remaining.min(4096);
        let buf = &mut chunk[..4 * n];
        source.read_exact(buf).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => EventIoError::Truncated { what: "voxel values", expected: count.saturating_mul(4) },
            _ => e.into(),
        })?;
        for b in buf.chunks_exact(4) {
            let v = f32::from_le_bytes(b.try_into().unwrap());
            if !v.is_finite() {
                return Err(EventIoError::Malformed { what: "voxel values", detail: "non-finite value".into() });
            }
            values.push(v);
        }
        remaining -= n;
    }
    let mut rest = Vec::new();
    let trailing = source.read_to_end(&mut rest)?;
    if trailing > 0 {
        return Err(EventIoError::TrailingData(trailing));
    }
    Ok(MultiViewVoxelGrid { views, bins, height, width, window, values })
}
