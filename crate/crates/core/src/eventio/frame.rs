use super::{EventIoError, Result};

/// Grayscale frame of linear intensities in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(EventIoError::InvalidDimensions { width, height });
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(EventIoError::PixelRange { index, value });
        }
        Ok(Self { width, height, data })
    }

    /// Clamps `data` into `[0, 1]`; NaN maps to 0.
    pub fn from_clamped(width: usize, height: usize, mut data: Vec<f32>) -> Result<Self> {
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self::new(width, height, data)
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Evaluates `f(x, y)` at every pixel and clamps the result.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_clamped(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Bilinear sample with clamp-to-edge addressing.
    #[inline]
    pub fn sample_clamped(&self, x: f64, y: f64) -> f64 {
        bilinear_clamped(&self.data, self.width, self.height, x, y)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Copies the `w`x`h` rectangle at (`x0`, `y0`). The caller guarantees bounds.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Frame {
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Frame { width: w, height: h, data }
    }
}

/// Bilinear sample of a row-major plane with clamp-to-edge addressing.
#[inline]
pub(crate) fn bilinear_clamped(data: &[f32], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let xm = (width - 1) as f64;
    let ym = (height - 1) as f64;
    let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, xm) };
    let y = if y.is_nan() { 0.0 } else { y.clamp(0.0, ym) };
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let at = |xx: usize, yy: usize| data[yy * width + xx] as f64;
    let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * fx;
    let bottom = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * fx;
    top + (bottom - top) * fy
}

/// Frames with strictly increasing microsecond timestamps and a common shape.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    timestamps: Vec<u64>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, timestamps: Vec<u64>) -> Result<Self> {
        if frames.len() != timestamps.len() {
            return Err(EventIoError::CountMismatch { frames: frames.len(), timestamps: timestamps.len() });
        }
        if let Some(first) = frames.first() {
            let (ew, eh) = first.shape();
            for (index, f) in frames.iter().enumerate() {
                if f.shape() != (ew, eh) {
                    return Err(EventIoError::ShapeMismatch {
                        index,
                        width: f.width(),
                        height: f.height(),
                        expected_width: ew,
                        expected_height: eh,
                    });
                }
            }
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(EventIoError::NonIncreasingTimestamps(i + 1));
        }
        Ok(Self { frames, timestamps })
    }

    /// Frames at a fixed rate starting from t = 0.
    pub fn at_rate(frames: Vec<Frame>, fps: f64) -> Result<Self> {
        let ts = (0..frames.len()).map(|k| (k as f64 * 1e6 / fps).round() as u64).collect();
        Self::new(frames, ts)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn timestamps(&self) -> &[u64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(width, height)` of the frames, `None` when empty.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.frames.first().map(Frame::shape)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Frame)> {
        self.timestamps.iter().copied().zip(self.frames.iter())
    }

    pub fn into_parts(self) -> (Vec<Frame>, Vec<u64>) {
        (self.frames, self.timestamps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_validation() {
        assert!(Frame::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Frame::new(0, 2, vec![]).is_err());
        assert!(matches!(Frame::new(1, 2, vec![0.5, 1.5]), Err(EventIoError::PixelRange { index: 1, .. })));
        assert!(Frame::new(1, 1, vec![f32::NAN]).is_err());
        let f = Frame::from_clamped(1, 3, vec![-1.0, f32::NAN, 2.0]).unwrap();
        assert_eq!(f.data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn bilinear_sampling() {
        let f = Frame::new(2, 2, vec![0.0, 1.0, 0.5, 0.5]).unwrap();
        assert_eq!(f.sample_clamped(0.5, 0.0), 0.5);
        assert_eq!(f.sample_clamped(-3.0, 0.0), 0.0);
        assert_eq!(f.sample_clamped(5.0, 0.0), 1.0);
        assert!((f.sample_clamped(0.5, 0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sequence_validation() {
        let f = Frame::filled(2, 2, 0.0).unwrap();
        let g = Frame::filled(3, 2, 0.0).unwrap();
        assert!(matches!(
            FrameSequence::new(vec![f.clone(); 3], vec![0, 1]),
            Err(EventIoError::CountMismatch { frames: 3, timestamps: 2 })
        ));
        assert!(matches!(
            FrameSequence::new(vec![f.clone(), g], vec![0, 1]),
            Err(EventIoError::ShapeMismatch { index: 1, .. })
        ));
        assert!(FrameSequence::new(vec![f.clone(), f.clone()], vec![1, 1]).is_err());
        let s = FrameSequence::at_rate(vec![f.clone(); 3], 120.0).unwrap();
        assert_eq!(s.timestamps(), &[0, 8333, 16667]);
    }
}
