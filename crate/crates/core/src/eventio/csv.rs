//! Plain-text event interchange: one `x,y,t,p` record per line.
//!
//! The writer emits an `x,y,t,p` header line; the reader accepts files with
//! or without it, skips `#` comments, and sorts records canonically.

use std::io::{Read, Write};

use super::{Event, EventIoError, EventStream, Polarity, Result};

const HEADER: [&str; 4] = ["x", "y", "t", "p"];

pub fn write_events_csv<W: Write>(stream: &EventStream, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(HEADER)?;
    for e in stream.events() {
        w.write_record(&[e.x.to_string(), e.y.to_string(), e.t.to_string(), e.p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads CSV events into a `width`x`height` stream. When `duration` is `None`
/// the last timestamp is used.
pub fn read_events_csv<R: Read>(source: R, width: u32, height: u32, duration: Option<u64>) -> Result<EventStream> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut events = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if line == 0 && rec.iter().eq(HEADER) {
            continue;
        }
        if rec.len() != 4 {
            return Err(EventIoError::Malformed {
                what: "csv event",
                detail: format!("record {} has {} fields, expected 4", line + 1, rec.len()),
            });
        }
        let field = |i: usize| -> Result<i64> {
            rec[i].parse::<i64>().map_err(|e| EventIoError::Malformed {
                what: "csv event",
                detail: format!("record {} field {:?}: {e}", line + 1, &rec[i]),
            })
        };
        let (x, y, t, p) = (field(0)?, field(1)?, field(2)?, field(3)?);
        if x < 0 || y < 0 || t < 0 || x > u32::MAX as i64 || y > u32::MAX as i64 {
            return Err(EventIoError::Malformed {
                what: "csv event",
                detail: format!("record {} has a negative or oversized field", line + 1),
            });
        }
        events.push(Event::new(x as u32, y as u32, t as u64, Polarity::from_sign(p)?));
    }
    let duration = duration.unwrap_or_else(|| events.iter().map(|e| e.t).max().unwrap_or(0));
    EventStream::from_unsorted(width, height, duration, events)
}
