use std::io::Write;

use super::{ReconError, Result};
use crate::eventio::FrameSequence;

/// Sampling path through each frame.
#[derive(Debug, Clone, PartialEq)]
pub enum SlicePath {
    Row(usize),
    Column(usize),
    /// Arbitrary sub-pixel points, e.g. a radius or a circle.
    Points(Vec<(f64, f64)>),
}

impl SlicePath {
    fn points(&self, width: usize, height: usize) -> Result<Vec<(f64, f64)>> {
        let pts: Vec<(f64, f64)> = match self {
            SlicePath::Row(y) if *y < height => (0..width).map(|x| (x as f64, *y as f64)).collect(),
            SlicePath::Column(x) if *x < width => (0..height).map(|y| (*x as f64, y as f64)).collect(),
            SlicePath::Points(p) => p.clone(),
            _ => return Err(ReconError::SliceOutOfBounds(format!("{self:?} outside {width}x{height}"))),
        };
        if pts.is_empty() {
            return Err(ReconError::SliceOutOfBounds("empty path".into()));
        }
        let inside = |&(x, y): &(f64, f64)| x >= 0.0 && y >= 0.0 && x <= (width - 1) as f64 && y <= (height - 1) as f64;
        if let Some(p) = pts.iter().find(|p| !inside(p)) {
            return Err(ReconError::SliceOutOfBounds(format!("point {p:?} outside {width}x{height}")));
        }
        Ok(pts)
    }
}

/// Bilinear samples of `path` in every frame, one row per frame.
pub fn xt_slice(frames: &FrameSequence, path: &SlicePath) -> Result<Vec<Vec<f64>>> {
    let (w, h) = frames.shape().ok_or(ReconError::NoViews)?;
    let pts = path.points(w, h)?;
    Ok(frames.frames().iter().map(|f| pts.iter().map(|&(x, y)| f.sample_clamped(x, y)).collect()).collect())
}

/// Writes the slice as CSV: a `t,s0,s1,...` header then one line per frame.
pub fn export_xt_slice<W: Write>(frames: &FrameSequence, path: &SlicePath, sink: W) -> Result<()> {
    let rows = xt_slice(frames, path)?;
    let mut w = csv::Writer::from_writer(sink);
    let n = rows.first().map_or(0, Vec::len);
    w.write_record(std::iter::once("t".to_string()).chain((0..n).map(|i| format!("s{i}"))))?;
    for (t, row) in frames.timestamps().iter().zip(&rows) {
        w.write_record(std::iter::once(t.to_string()).chain(row.iter().map(|v| v.to_string())))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventio::Frame;

    #[test]
    fn constant_video_gives_constant_slice() {
        let seq = FrameSequence::at_rate(vec![Frame::filled(5, 4, 0.25).unwrap(); 3], 100.0).unwrap();
        let rows = xt_slice(&seq, &SlicePath::Row(2)).unwrap();
        assert!(rows.iter().flatten().all(|&v| v == 0.25));
        let mut buf = Vec::new();
        export_xt_slice(&seq, &SlicePath::Column(1), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,s0,s1,s2,s3");
        assert_eq!(text.lines().nth(1).unwrap(), "0,0.25,0.25,0.25,0.25");
    }

    #[test]
    fn translating_edge_draws_a_diagonal() {
        let frames = (0..6).map(|k| Frame::from_fn(8, 3, |x, _| if x >= k + 1 { 1.0 } else { 0.0 }).unwrap()).collect();
        let seq = FrameSequence::at_rate(frames, 100.0).unwrap();
        let rows = xt_slice(&seq, &SlicePath::Row(1)).unwrap();
        for (k, row) in rows.iter().enumerate() {
            let edge = row.iter().position(|&v| v == 1.0).unwrap();
            assert_eq!(edge, k + 1);
        }
    }

    #[test]
    fn bad_paths() {
        let seq = FrameSequence::at_rate(vec![Frame::filled(5, 4, 0.25).unwrap()], 100.0).unwrap();
        assert!(xt_slice(&seq, &SlicePath::Points(vec![])).is_err());
        assert!(xt_slice(&seq, &SlicePath::Row(4)).is_err());
        assert!(xt_slice(&seq, &SlicePath::Points(vec![(1.0, 1.0), (4.5, 0.0)])).is_err());
        let radial = SlicePath::Points((0..4).map(|r| (2.0 + 0.5 * r as f64, 1.5)).collect());
        assert_eq!(xt_slice(&seq, &radial).unwrap()[0].len(), 4);
    }
}
