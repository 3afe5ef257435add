//! Detection stream records.
//!
//! A stream is UTF-8 text with one JSON object per line:
//!
//! ```text
//! {"frame":0,"nutriments":[[10,10,4,6]],"ripples":[[100,100,20,20],[200,100,20,20]]}
//! ```
//!
//! Every box is `[cx, cy, w, h]` in pixels. The ground-truth sidecar uses the
//! same framing with `next` (one `[x, y]` or `null` per nutriment) and
//! `crossings`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, RipplePair};

/// Axis-aligned detection box, center + extent in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting negative extents and non-finite values.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = BoundingBox { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.cx, self.cy, self.w, self.h];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite box value in {fields:?}"
            )));
        }
        if self.w < 0.0 || self.h < 0.0 {
            return Err(Error::validation(format!(
                "negative box extent (w = {}, h = {})",
                self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    fn to_array(self) -> [f64; 4] {
        [self.cx, self.cy, self.w, self.h]
    }

    fn from_array(a: [f64; 4]) -> Self {
        BoundingBox {
            cx: a[0],
            cy: a[1],
            w: a[2],
            h: a[3],
        }
    }
}

/// Detections of one video frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame: u64,
    pub nutriments: Vec<BoundingBox>,
    pub ripples: Vec<BoundingBox>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    frame: u64,
    nutriments: Vec<[f64; 4]>,
    ripples: Vec<[f64; 4]>,
}

impl FrameRecord {
    pub fn centers(&self) -> Vec<Point> {
        self.nutriments.iter().map(BoundingBox::center).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.nutriments
            .iter()
            .chain(&self.ripples)
            .try_for_each(BoundingBox::validate)
    }

    /// Serializes to a single stream line (no trailing newline).
    pub fn to_line(&self) -> String {
        let raw = RawFrame {
            frame: self.frame,
            nutriments: self.nutriments.iter().map(|b| b.to_array()).collect(),
            ripples: self.ripples.iter().map(|b| b.to_array()).collect(),
        };
        serde_json::to_string(&raw).expect("frame record serializes")
    }
}

fn with_line(err: Error, line: usize) -> Error {
    match err {
        Error::Validation { message, .. } => Error::Validation {
            line: Some(line),
            message,
        },
        other => other,
    }
}

/// Parses one stream line. `line_no` is 1-based and only used for error reporting.
pub fn parse_frame_record(line: &str, line_no: usize) -> Result<FrameRecord> {
    let raw: RawFrame = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let record = FrameRecord {
        frame: raw.frame,
        nutriments: raw
            .nutriments
            .into_iter()
            .map(BoundingBox::from_array)
            .collect(),
        ripples: raw
            .ripples
            .into_iter()
            .map(BoundingBox::from_array)
            .collect(),
    };
    record.validate().map_err(|e| with_line(e, line_no))?;
    Ok(record)
}

/// Reads a whole stream, skipping blank lines and enforcing strictly increasing frame indices.
pub fn read_stream<R: BufRead>(reader: R) -> Result<Vec<FrameRecord>> {
    let mut records: Vec<FrameRecord> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_frame_record(&line, i + 1)?;
        if let Some(prev) = records.last() {
            if record.frame <= prev.frame {
                return Err(Error::Validation {
                    line: Some(i + 1),
                    message: format!(
                        "frame index {} does not increase past {}",
                        record.frame, prev.frame
                    ),
                });
            }
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_stream<W: Write>(mut writer: W, records: &[FrameRecord]) -> Result<()> {
    for r in records {
        writeln!(writer, "{}", r.to_line())?;
    }
    Ok(())
}

/// Ground-truth annotations for one frame.
///
/// `next[i]` is the true position of `nutriments[i]` in the following frame,
/// or `None` when that nutriment was not annotated.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub frame: u64,
    pub next: Vec<Option<Point>>,
    pub crossings: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruth {
    frame: u64,
    next: Vec<Option<[f64; 2]>>,
    crossings: u32,
}

impl TruthRecord {
    pub fn to_line(&self) -> String {
        let raw = RawTruth {
            frame: self.frame,
            next: self.next.iter().map(|p| p.map(|p| [p.x, p.y])).collect(),
            crossings: self.crossings,
        };
        serde_json::to_string(&raw).expect("truth record serializes")
    }
}

pub fn parse_truth_record(line: &str, line_no: usize) -> Result<TruthRecord> {
    let raw: RawTruth = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let next = raw
        .next
        .into_iter()
        .map(|p| p.map(|[x, y]| Point::new(x, y)))
        .collect::<Vec<_>>();
    if next
        .iter()
        .flatten()
        .any(|p| !p.x.is_finite() || !p.y.is_finite())
    {
        return Err(Error::Validation {
            line: Some(line_no),
            message: "non-finite ground-truth position".into(),
        });
    }
    Ok(TruthRecord {
        frame: raw.frame,
        next,
        crossings: raw.crossings,
    })
}

pub fn read_truth<R: BufRead>(reader: R) -> Result<Vec<TruthRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_truth_record(&line, i + 1)?);
    }
    Ok(out)
}

pub fn write_truth<W: Write>(mut writer: W, truth: &[TruthRecord]) -> Result<()> {
    for t in truth {
        writeln!(writer, "{}", t.to_line())?;
    }
    Ok(())
}

/// Outcome of ripple pair resolution for a frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Pair(RipplePair),
    Skip,
}

/// Orders exactly two ripple boxes as (R1, R2) by ascending center x, then center y.
pub fn order_ripples(a: BoundingBox, b: BoundingBox) -> (BoundingBox, BoundingBox) {
    let key = |r: &BoundingBox| (r.cx, r.cy, r.w, r.h);
    let (ka, kb) = (key(&a), key(&b));
    if ka.partial_cmp(&kb) == Some(std::cmp::Ordering::Greater) {
        (b, a)
    } else {
        (a, b)
    }
}

/// Picks the ripple pair for a frame.
///
/// Frames carrying exactly two ripples yield a fresh pair; any other count
/// inherits `last_valid`, or yields [`Resolved::Skip`] when nothing was seen yet.
pub fn resolve_ripple_pair(record: &FrameRecord, last_valid: Option<&RipplePair>) -> Resolved {
    match record.ripples.as_slice() {
        [a, b] => {
            let (r1, r2) = order_ripples(*a, *b);
            Resolved::Pair(RipplePair::new(r1, r2))
        }
        _ => match last_valid {
            Some(p) => Resolved::Pair(p.clone()),
            None => Resolved::Skip,
        },
    }
}

/// Stateful carry-forward wrapper around [`resolve_ripple_pair`].
#[derive(Debug, Clone, Default)]
pub struct PairTracker {
    last: Option<RipplePair>,
}

impl PairTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, record: &FrameRecord) -> Option<RipplePair> {
        match resolve_ripple_pair(record, self.last.as_ref()) {
            Resolved::Pair(p) => {
                self.last = Some(p.clone());
                Some(p)
            }
            Resolved::Skip => None,
        }
    }
}
