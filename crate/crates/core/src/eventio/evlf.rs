//! EVLF: little-endian binary event container.
//!
//! ```text
//! header (28 bytes)
//!   0  magic     b"EVLF"
//!   4  version   u16
//!   6  width     u16
//!   8  height    u16
//!  10  reserved  u16 (zero)
//!  12  count     u64
//!  20  duration  u64 (microseconds)
//! record (14 bytes, repeated `count` times)
//!   0  x         u16
//!   2  y         u16
//!   4  t         u64 (microseconds)
//!  12  p         i8  (+1 / -1)
//!  13  pad       u8  (zero)
//! ```

use std::io::{ErrorKind, Read, Write};

use super::{Event, EventIoError, EventStream, Polarity, Result};

pub const EVLF_MAGIC: [u8; 4] = *b"EVLF";
pub const EVLF_VERSION: u16 = 1;
pub const EVLF_HEADER_LEN: usize = 28;
pub const EVLF_RECORD_LEN: usize = 14;

// Upper bound on the up-front allocation driven by an untrusted count.
const MAX_PREALLOC: usize = 1 << 20;

fn dim_u16(v: u32) -> Result<u16> {
    u16::try_from(v).map_err(|_| EventIoError::DimensionTooLarge(v))
}

/// Serializes `stream` and returns the number of bytes written.
pub fn write_events<W: Write>(stream: &EventStream, mut sink: W) -> Result<usize> {
    let width = dim_u16(stream.width())?;
    let height = dim_u16(stream.height())?;

    let mut header = [0u8; EVLF_HEADER_LEN];
    header[0..4].copy_from_slice(&EVLF_MAGIC);
    header[4..6].copy_from_slice(&EVLF_VERSION.to_le_bytes());
    header[6..8].copy_from_slice(&width.to_le_bytes());
    header[8..10].copy_from_slice(&height.to_le_bytes());
    header[12..20].copy_from_slice(&(stream.len() as u64).to_le_bytes());
    header[20..28].copy_from_slice(&stream.duration().to_le_bytes());
    sink.write_all(&header)?;

    let mut buf = Vec::with_capacity(EVLF_RECORD_LEN * stream.len().min(MAX_PREALLOC));
    for e in stream.events() {
        // Stream invariants bound x, y by width and height.
        buf.extend_from_slice(&(e.x as u16).to_le_bytes());
        buf.extend_from_slice(&(e.y as u16).to_le_bytes());
        buf.extend_from_slice(&e.t.to_le_bytes());
        buf.push(e.p.sign() as u8);
        buf.push(0);
        if buf.len() >= EVLF_RECORD_LEN * MAX_PREALLOC {
            sink.write_all(&buf)?;
            buf.clear();
        }
    }
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(EVLF_HEADER_LEN + EVLF_RECORD_LEN * stream.len())
}

fn read_exact_or<R: Read>(source: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
    source.read_exact(buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => EventIoError::Truncated { what, expected: buf.len() },
        _ => EventIoError::Io(e),
    })
}

/// Parses an EVLF byte source. The source must end right after the last record.
pub fn read_events<R: Read>(mut source: R) -> Result<EventStream> {
    let mut header = [0u8; EVLF_HEADER_LEN];
    read_exact_or(&mut source, &mut header[..4], "magic")?;
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if magic != EVLF_MAGIC {
        return Err(EventIoError::BadMagic(magic));
    }
    read_exact_or(&mut source, &mut header[4..], "header")?;
    let u16_at = |i: usize| u16::from_le_bytes([header[i], header[i + 1]]);
    let version = u16_at(4);
    if version != EVLF_VERSION {
        return Err(EventIoError::UnsupportedVersion(version));
    }
    let width = u16_at(6) as u32;
    let height = u16_at(8) as u32;
    if u16_at(10) != 0 {
        return Err(EventIoError::Malformed { what: "EVLF header", detail: "reserved field is nonzero".into() });
    }
    let count = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let duration = u64::from_le_bytes(header[20..28].try_into().unwrap());
    if width == 0 || height == 0 {
        return Err(EventIoError::InvalidDimensions { width: width as usize, height: height as usize });
    }

    let mut events = Vec::with_capacity(usize::try_from(count).unwrap_or(usize::MAX).min(MAX_PREALLOC));
    let mut rec = [0u8; EVLF_RECORD_LEN];
    let mut prev = 0u64;
    for index in 0..count {
        let index = index as usize;
        read_exact_or(&mut source, &mut rec, "event record")?;
        let x = u16::from_le_bytes([rec[0], rec[1]]) as u32;
        let y = u16::from_le_bytes([rec[2], rec[3]]) as u32;
        let t = u64::from_le_bytes(rec[4..12].try_into().unwrap());
        let p = Polarity::from_sign(rec[12] as i8 as i64)?;
        if rec[13] != 0 {
            return Err(EventIoError::Padding(index));
        }
        if t < prev {
            return Err(EventIoError::TimestampOrder { index, prev, t });
        }
        if t > duration {
            return Err(EventIoError::TimestampAfterDuration { index, t, duration });
        }
        if x >= width || y >= height {
            return Err(EventIoError::OutOfBounds { index, x, y, width, height });
        }
        prev = t;
        events.push(Event { x, y, t, p });
    }

    let mut rest = Vec::new();
    let trailing = source.read_to_end(&mut rest)?;
    if trailing > 0 {
        return Err(EventIoError::TrailingData(trailing));
    }
    EventStream::new(width, height, duration, events)
}
