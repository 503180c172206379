use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix3, Vector3};

use super::{GeomError, Result};
use crate::eventio::{Event, EventStream, Frame};

const DET_EPS: f64 = 1e-12;
const RANK_EPS: f64 = 1e-10;

/// Planar projective transform, scaled so the bottom-right entry is 1 when
/// it is nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(Matrix3<f64>);

fn normalized(m: Matrix3<f64>) -> Option<Matrix3<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let scale = if m[(2, 2)].abs() > DET_EPS { m[(2, 2)] } else { m.norm() };
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let m = m / scale;
    (m.iter().all(|v| v.is_finite()) && m.determinant().abs() > DET_EPS).then_some(m)
}

impl Homography {
    /// Accepts finite, invertible matrices whose inverse is also finite and
    /// invertible; the result is scaled so that `h33 = 1` where possible.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let m = normalized(m).ok_or(GeomError::Singular)?;
        m.try_inverse().and_then(normalized).ok_or(GeomError::Singular)?;
        Ok(Self(m))
    }

    pub fn from_row_slice(v: &[f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(v))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self(Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.try_inverse().and_then(normalized).expect("checked on construction"))
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &Homography) -> Result<Self> {
        Self::new(other.0 * self.0)
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let p = self.0 * Vector3::new(x, y, 1.0);
        if p.z.abs() < 1e-15 {
            return None;
        }
        Some((p.x / p.z, p.y / p.z))
    }

    pub fn max_abs_diff(&self, other: &Homography) -> f64 {
        (self.0 - other.0).amax()
    }
}

impl fmt::Display for Homography {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..3 {
            let row = self.0.row(r);
            writeln!(f, "{:e} {:e} {:e}", row[0], row[1], row[2])?;
        }
        Ok(())
    }
}

impl FromStr for Homography {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self> {
        let vals = s
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| GeomError::Malformed { what: "homography", detail: e.to_string() })?;
        let arr: [f64; 9] = vals.try_into().map_err(|v: Vec<f64>| GeomError::Malformed {
            what: "homography",
            detail: format!("expected 9 numbers, got {}", v.len()),
        })?;
        Self::from_row_slice(&arr)
    }
}

/// A point in a view (`src`) and its match in the center view (`dst`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub src: (f64, f64),
    pub dst: (f64, f64),
}

impl Correspondence {
    pub fn new(src: (f64, f64), dst: (f64, f64)) -> Self {
        Self { src, dst }
    }
}

pub fn read_correspondences<R: Read>(source: R) -> Result<Vec<Correspondence>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(source);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v = rec
            .iter()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| GeomError::Malformed { what: "correspondence", detail: format!("{rec:?}: {e}") })?;
        if v.len() != 4 || v.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::Malformed { what: "correspondence", detail: format!("{rec:?}") });
        }
        out.push(Correspondence::new((v[0], v[1]), (v[2], v[3])));
    }
    Ok(out)
}

pub fn write_correspondences<W: Write>(pairs: &[Correspondence], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["src_x", "src_y", "dst_x", "dst_y"])?;
    for c in pairs {
        w.write_record([c.src.0, c.src.1, c.dst.0, c.dst.1].iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomographyEstimate {
    pub homography: Homography,
    /// Root mean square of the forward and backward transfer distances.
    pub rms_transfer_error: f64,
}

/// Similarity moving the centroid to the origin with mean distance √2.
fn normalizer(points: &[(f64, f64)]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_dist = points.iter().map(|p| (p.0 - cx).hypot(p.1 - cy)).sum::<f64>() / n;
    if !(mean_dist > 0.0 && mean_dist.is_finite()) {
        return Err(GeomError::Degenerate("all points coincide".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn transform(m: &Matrix3<f64>, p: (f64, f64)) -> (f64, f64) {
    let v = m * Vector3::new(p.0, p.1, 1.0);
    (v.x / v.z, v.y / v.z)
}

fn has_collinear_triple(points: &[(f64, f64)]) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (points[i], points[j], points[k]);
                let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
                if cross.abs() < 1e-9 {
                    return true;
                }
            }
        }
    }
    false
}

/// Normalized direct linear transform. The result maps `src` points onto
/// `dst` points.
pub fn estimate_homography(pairs: &[Correspondence]) -> Result<HomographyEstimate> {
    if pairs.len() < 4 {
        return Err(GeomError::TooFewCorrespondences(pairs.len()));
    }
    let src: Vec<_> = pairs.iter().map(|c| c.src).collect();
    let dst: Vec<_> = pairs.iter().map(|c| c.dst).collect();
    if let Some(p) = src.iter().chain(&dst).find(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(GeomError::Degenerate(format!("non-finite point {p:?}")));
    }
    let ts = normalizer(&src)?;
    let td = normalizer(&dst)?;
    let ns: Vec<_> = src.iter().map(|&p| transform(&ts, p)).collect();
    let nd: Vec<_> = dst.iter().map(|&p| transform(&td, p)).collect();
    if pairs.len() == 4 && (has_collinear_triple(&ns) || has_collinear_triple(&nd)) {
        return Err(GeomError::Degenerate("three of four points are collinear".into()));
    }

    let rows = (2 * pairs.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (&(x, y), &(u, v))) in ns.iter().zip(&nd).enumerate() {
        let r = 2 * i;
        a.row_mut(r).copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
        a.row_mut(r + 1).copy_from_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u]);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let largest = svd.singular_values[order[8]];
    if largest <= 0.0 || svd.singular_values[order[1]] / largest < RANK_EPS {
        return Err(GeomError::Degenerate("correspondence system is rank deficient".into()));
    }
    let h = v_t.row(order[0]);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td.try_inverse().ok_or(GeomError::Singular)?;
    let homography = Homography::new(td_inv * hn * ts)?;

    let inv = homography.inverse();
    let mut sq = 0.0;
    for c in pairs {
        let fwd = homography.apply(c.src.0, c.src.1).ok_or(GeomError::Singular)?;
        let bwd = inv.apply(c.dst.0, c.dst.1).ok_or(GeomError::Singular)?;
        sq += (fwd.0 - c.dst.0).powi(2) + (fwd.1 - c.dst.1).powi(2);
        sq += (bwd.0 - c.src.0).powi(2) + (bwd.1 - c.src.1).powi(2);
    }
    let rms_transfer_error = (sq / (2 * pairs.len()) as f64).sqrt();
    Ok(HomographyEstimate { homography, rms_transfer_error })
}

/// Resamples `frame` into the coordinates `h` maps it to:
/// `out(p) = in(h⁻¹ p)`, bilinear with clamp-to-edge.
pub fn warp_frame(frame: &Frame, h: &Homography) -> Frame {
    if *h == Homography::identity() {
        return frame.clone();
    }
    let inv = h.inverse();
    let (w, ht) = frame.shape();
    Frame::from_fn(w, ht, |x, y| match inv.apply(x as f64, y as f64) {
        Some((sx, sy)) => frame.sample_clamped(sx, sy) as f32,
        None => 0.0,
    })
    .expect("same shape as input")
}

/// Moves every event to the nearest pixel of its mapped position; events
/// landing outside the sensor are dropped.
pub fn warp_events(stream: &EventStream, h: &Homography) -> EventStream {
    let (w, ht) = (stream.width() as f64, stream.height() as f64);
    let events = stream
        .events()
        .iter()
        .filter_map(|e| {
            let (x, y) = h.apply(e.x as f64, e.y as f64)?;
            let (x, y) = (x.round(), y.round());
            (x >= 0.0 && y >= 0.0 && x < w && y < ht).then_some(Event { x: x as u32, y: y as u32, ..*e })
        })
        .collect();
    EventStream::from_unsorted(stream.width(), stream.height(), stream.duration(), events)
        .expect("mapped events stay inside the sensor")
}
