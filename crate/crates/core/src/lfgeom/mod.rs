//! Light-field geometry: sub-aperture view extraction from a sensor mosaic
//! and homography alignment of views to the center view.
//!
//! Layout files are CSV with a `row,col,x,y,width,height` header and one line
//! per view. Correspondence files are CSV with a `src_x,src_y,dst_x,dst_y`
//! header, mapping points of a view (source) to the center view
//! (destination). Homographies are stored as nine whitespace-separated
//! numbers in row-major order.

mod homography;

use std::io::{Read, Write};

use thiserror::Error;

use crate::eventio::{Event, EventIoError, EventStream, Frame};

pub use homography::{
    estimate_homography, read_correspondences, warp_events, warp_frame, write_correspondences, Correspondence,
    Homography, HomographyEstimate,
};

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("layout does not fit a {width}x{height} mosaic")]
    LayoutOutOfBounds { width: usize, height: usize },
    #[error("need at least 4 correspondences, got {0}")]
    TooFewCorrespondences(usize),
    #[error("degenerate correspondence configuration: {0}")]
    Degenerate(String),
    #[error("homography is not invertible")]
    Singular,
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Data(#[from] EventIoError),
}

pub type Result<T> = std::result::Result<T, GeomError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl ViewRect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x..self.x + self.width).contains(&x) && (self.y..self.y + self.height).contains(&y)
    }

    fn overlaps(&self, o: &ViewRect) -> bool {
        self.x < o.x + o.width && o.x < self.x + self.width && self.y < o.y + o.height && o.y < self.y + self.height
    }
}

/// Arrangement of equal-size sub-aperture rectangles in a mosaic. Views are
/// indexed row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewLayout {
    rows: usize,
    cols: usize,
    rects: Vec<ViewRect>,
}

impl ViewLayout {
    pub fn new(rows: usize, cols: usize, rects: Vec<ViewRect>) -> Result<Self> {
        if rows == 0 || cols == 0 || rects.len() != rows * cols {
            return Err(GeomError::InvalidLayout(format!("{} rectangles for a {rows}x{cols} grid", rects.len())));
        }
        let (w, h) = (rects[0].width, rects[0].height);
        if w == 0 || h == 0 {
            return Err(GeomError::InvalidLayout("empty rectangle".into()));
        }
        if rects.iter().any(|r| (r.width, r.height) != (w, h)) {
            return Err(GeomError::InvalidLayout("rectangles differ in size".into()));
        }
        for (i, a) in rects.iter().enumerate() {
            if let Some(j) = rects[i + 1..].iter().position(|b| a.overlaps(b)) {
                return Err(GeomError::InvalidLayout(format!("views {i} and {} overlap", i + 1 + j)));
            }
        }
        Ok(Self { rows, cols, rects })
    }

    /// `rows`x`cols` tiling of a `width`x`height` mosaic with `gap` pixels
    /// between neighbouring views. Leftover pixels stay at the right and
    /// bottom edges.
    pub fn uniform(width: usize, height: usize, rows: usize, cols: usize, gap: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(GeomError::InvalidLayout("zero rows or columns".into()));
        }
        let vw = width.saturating_sub((cols - 1) * gap) / cols;
        let vh = height.saturating_sub((rows - 1) * gap) / rows;
        let rects = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| ViewRect { x: c * (vw + gap), y: r * (vh + gap), width: vw, height: vh }))
            .collect();
        Self::new(rows, cols, rects)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn rects(&self) -> &[ViewRect] {
        &self.rects
    }

    pub fn view_size(&self) -> (usize, usize) {
        (self.rects[0].width, self.rects[0].height)
    }

    /// Row-major index of the middle view.
    pub fn center(&self) -> usize {
        (self.rows / 2) * self.cols + self.cols / 2
    }

    pub fn check_fits(&self, width: usize, height: usize) -> Result<()> {
        if self.rects.iter().all(|r| r.x + r.width <= width && r.y + r.height <= height) {
            Ok(())
        } else {
            Err(GeomError::LayoutOutOfBounds { width, height })
        }
    }

    pub fn view_at(&self, x: usize, y: usize) -> Option<usize> {
        self.rects.iter().position(|r| r.contains(x, y))
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(source);
        let mut cells = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let v = rec
                .iter()
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| GeomError::Malformed { what: "layout", detail: format!("{rec:?}: {e}") })?;
            if v.len() != 6 {
                return Err(GeomError::Malformed { what: "layout", detail: format!("expected 6 fields, got {}", v.len()) });
            }
            cells.push(((v[0], v[1]), ViewRect { x: v[2], y: v[3], width: v[4], height: v[5] }));
        }
        if cells.is_empty() {
            return Err(GeomError::InvalidLayout("no views".into()));
        }
        let rows = cells.iter().map(|c| c.0 .0).max().unwrap() + 1;
        let cols = cells.iter().map(|c| c.0 .1).max().unwrap() + 1;
        cells.sort_by_key(|c| c.0);
        if cells.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(GeomError::InvalidLayout("duplicate grid cell".into()));
        }
        Self::new(rows, cols, cells.into_iter().map(|c| c.1).collect())
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["row", "col", "x", "y", "width", "height"])?;
        for (i, r) in self.rects.iter().enumerate() {
            let cells = [i / self.cols, i % self.cols, r.x, r.y, r.width, r.height];
            w.write_record(cells.iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Crops every view out of a mosaic frame.
pub fn extract_view_frames(mosaic: &Frame, layout: &ViewLayout) -> Result<Vec<Frame>> {
    layout.check_fits(mosaic.width(), mosaic.height())?;
    Ok(layout.rects.iter().map(|r| mosaic.crop(r.x, r.y, r.width, r.height)).collect())
}

/// Splits a mosaic event stream into per-view streams with view-local
/// coordinates. Events outside every rectangle are dropped.
pub fn extract_view_events(mosaic: &EventStream, layout: &ViewLayout) -> Result<Vec<EventStream>> {
    layout.check_fits(mosaic.width() as usize, mosaic.height() as usize)?;
    let mut per_view: Vec<Vec<Event>> = vec![Vec::new(); layout.len()];
    for e in mosaic.events() {
        if let Some(v) = layout.view_at(e.x as usize, e.y as usize) {
            let r = layout.rects[v];
            per_view[v].push(Event { x: e.x - r.x as u32, y: e.y - r.y as u32, ..*e });
        }
    }
    let (w, h) = layout.view_size();
    per_view
        .into_iter()
        .map(|events| Ok(EventStream::new(w as u32, h as u32, mosaic.duration(), events)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventio::Polarity;

    #[test]
    fn uniform_layout_geometry() {
        let l = ViewLayout::uniform(32, 20, 3, 3, 1).unwrap();
        assert_eq!(l.view_size(), (10, 6));
        assert_eq!(l.rects()[4], ViewRect { x: 11, y: 7, width: 10, height: 6 });
        assert_eq!(l.center(), 4);
        assert_eq!(l.view_at(10, 0), None);
        assert_eq!(l.view_at(12, 8), Some(4));
    }

    #[test]
    fn tiles_extract_to_constant_views() {
        let l = ViewLayout::uniform(30, 30, 3, 3, 0).unwrap();
        let mosaic = Frame::from_fn(30, 30, |x, y| ((y / 10) * 3 + x / 10) as f32 / 10.0).unwrap();
        let views = extract_view_frames(&mosaic, &l).unwrap();
        for (i, v) in views.iter().enumerate() {
            assert!(v.data().iter().all(|&p| p == i as f32 / 10.0));
        }
    }

    #[test]
    fn events_to_local_coordinates() {
        let l = ViewLayout::uniform(32, 32, 3, 3, 1).unwrap();
        let (vw, vh) = l.view_size();
        let r4 = l.rects()[4];
        let events = vec![
            Event::new(r4.x as u32 + 2, r4.y as u32 + 3, 5, Polarity::On),
            Event::new(vw as u32, 0, 6, Polarity::Off),
        ];
        let s = EventStream::new(32, 32, 10, events).unwrap();
        let views = extract_view_events(&s, &l).unwrap();
        assert_eq!(views[4].events(), &[Event::new(2, 3, 5, Polarity::On)]);
        assert_eq!(views.iter().map(EventStream::len).sum::<usize>(), 1);
        assert_eq!((views[0].width() as usize, views[0].height() as usize), (vw, vh));
    }

    #[test]
    fn exact_tiling_preserves_event_count() {
        let l = ViewLayout::uniform(12, 9, 3, 3, 0).unwrap();
        let events = (0..108).map(|i| Event::new(i % 12, i / 12, i as u64, Polarity::On)).collect();
        let s = EventStream::new(12, 9, 200, events).unwrap();
        let total: usize = extract_view_events(&s, &l).unwrap().iter().map(EventStream::len).sum();
        assert_eq!(total, 108);
    }

    #[test]
    fn layout_validation() {
        let r = |x, y| ViewRect { x, y, width: 4, height: 4 };
        assert!(ViewLayout::new(1, 2, vec![r(0, 0), r(2, 0)]).is_err());
        assert!(ViewLayout::new(1, 2, vec![r(0, 0), ViewRect { width: 3, ..r(4, 0) }]).is_err());
        assert!(ViewLayout::new(1, 3, vec![r(0, 0), r(4, 0)]).is_err());
        let l = ViewLayout::new(1, 2, vec![r(0, 0), r(4, 0)]).unwrap();
        assert!(matches!(extract_view_frames(&Frame::filled(7, 4, 0.0).unwrap(), &l), Err(GeomError::LayoutOutOfBounds { .. })));
    }

    #[test]
    fn layout_csv_round_trip() {
        let l = ViewLayout::uniform(64, 48, 3, 3, 2).unwrap();
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"row,col,x,y,width,height\n"));
        assert_eq!(ViewLayout::read_csv(&buf[..]).unwrap(), l);
        assert!(ViewLayout::read_csv(&b"row,col,x,y,width,height\n0,0,1,2\n"[..]).is_err());
        assert!(ViewLayout::read_csv(&b"row,col,x,y,width,height\n"[..]).is_err());
    }
}
