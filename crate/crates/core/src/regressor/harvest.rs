//! Training pairs from unlabelled detection streams.
//!
//! Detections carry no identity, so consecutive frames are associated by
//! greedy one-to-one nearest neighbour in normalized space, rejecting
//! matches farther apart than the gating radius.

use super::train::Dataset;
use crate::detection::{FrameRecord, PairTracker};
use crate::error::{Error, Result};
use crate::geometry::{to_normalized, NormalizedFrame, Point};

pub const DEFAULT_GATE: f64 = 0.05;

/// (κ at frame f, κ at frame f + 1) samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingPairs {
    pub pairs: Vec<(Point, Point)>,
}

impl TrainingPairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Splits into the x dataset (`x → x'`) and the y dataset (`(x, y) → y'`).
    pub fn datasets(&self) -> (Dataset, Dataset) {
        let mut dx = Dataset::default();
        let mut dy = Dataset::default();
        for (cur, next) in &self.pairs {
            dx.push(vec![cur.x], next.x);
            dy.push(vec![cur.x, cur.y], next.y);
        }
        (dx, dy)
    }
}

/// Greedy one-to-one association of `a` to `b` by increasing distance.
pub fn associate(a: &[Point], b: &[Point], gate: f64) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            let d = p.distance(*q);
            if d <= gate {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut out = Vec::new();
    for (_, i, j) in candidates {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            out.push((i, j));
        }
    }
    out.sort_unstable();
    out
}

/// Harvests pairs from every geometry-ready pair of consecutive frames
/// (frame indices differing by exactly one). Each frame is normalized
/// against its own ripple pair.
pub fn harvest_pairs(records: &[FrameRecord], gate: f64) -> Result<TrainingPairs> {
    if !(gate.is_finite() && gate > 0.0) {
        return Err(Error::Config(format!(
            "gating radius must be positive, got {gate}"
        )));
    }
    let mut tracker = PairTracker::new();
    let mut prev: Option<NormalizedFrame> = None;
    let mut out = TrainingPairs::default();
    for record in records {
        let current = match tracker.update(record) {
            Some(pair) if pair.is_usable() => Some(to_normalized(record, &pair)?),
            _ => None,
        };
        if let (Some(p), Some(c)) = (&prev, &current) {
            if c.frame == p.frame + 1 {
                for (i, j) in associate(&p.kappa, &c.kappa, gate) {
                    out.pairs.push((p.kappa[i], c.kappa[j]));
                }
            }
        }
        prev = current;
    }
    Ok(out)
}
