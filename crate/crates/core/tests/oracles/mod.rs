//! Brute-force reference computations shared by the integration tests.
//! Nothing here calls into the library's geometry, counting or windowing code.

#![allow(dead_code)]

use ripplefeed::detection::{BoundingBox, FrameRecord};
use ripplefeed::synth::SyntheticScenario;

/// Carried, ordered ripple pair per frame, as plain boxes.
pub fn carried_pairs(records: &[FrameRecord]) -> Vec<Option<(BoundingBox, BoundingBox)>> {
    let mut last = None;
    records
        .iter()
        .map(|r| {
            if r.ripples.len() == 2 {
                let (a, b) = (r.ripples[0], r.ripples[1]);
                let swap = (b.cx, b.cy) < (a.cx, a.cy);
                last = Some(if swap { (b, a) } else { (a, b) });
            }
            last
        })
        .collect()
}

/// Height of the passed line at `x`, or `None` when the line is undefined.
pub fn line_y(r1: &BoundingBox, r2: &BoundingBox, rho: f64, x: f64) -> Option<f64> {
    let (tlx, tly) = (r1.cx - r1.w / 2.0, r1.cy - r1.h / 2.0);
    let (brx, bry) = (r2.cx + r2.w / 2.0, r2.cy + r2.h / 2.0);
    let z = ((tlx - brx).powi(2) + (tly - bry).powi(2)).sqrt();
    let dx = r2.cx - r1.cx;
    if z <= 1e-6 || dx.abs() <= 1e-9 {
        return None;
    }
    let y1 = r1.cy + r1.h / 2.0 - z / rho;
    Some(y1 + (r2.cy - r1.cy) / dx * (x - tlx))
}

/// Crossings toward the ripple side, recounted from the scenario's tracks.
pub fn recount_crossings(s: &SyntheticScenario) -> Vec<u32> {
    let cfg = &s.config;
    let pairs = carried_pairs(&s.records);
    (0..s.records.len())
        .map(|f| {
            let Some((r1, r2)) = &pairs[f] else { return 0 };
            let mut n = 0;
            for t in s.tracks.iter().filter(|t| t.visible_at(f)) {
                let age = (f - t.spawn) as f64;
                let now = t.world_at(age);
                let next = t.world_at(age + 1.0);
                let (dx0, dy0) = (cfg.camera_drift.x * f as f64, cfg.camera_drift.y * f as f64);
                let (dx1, dy1) = (
                    cfg.camera_drift.x * (f + 1) as f64,
                    cfg.camera_drift.y * (f + 1) as f64,
                );
                let (x0, y0) = (now.x + dx0, now.y + dy0);
                let (x1, y1) = (next.x + dx1, next.y + dy1);
                let (Some(l0), Some(l1)) =
                    (line_y(r1, r2, cfg.rho, x0), line_y(r1, r2, cfg.rho, x1))
                else {
                    continue;
                };
                let above_now = y0 - l0 < -1e-9;
                let above_next = y1 - l1 < -1e-9;
                if above_now && !above_next {
                    n += 1;
                }
            }
            n
        })
        .collect()
}

/// Trailing-window sums, each summed from scratch.
pub fn trailing_sums(values: &[u32], window: usize) -> Vec<u64> {
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            values[lo..=i].iter().map(|&v| u64::from(v)).sum()
        })
        .collect()
}

/// Trailing-window means, each summed oldest to newest from scratch.
pub fn trailing_means(values: &[f64], window: usize) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let slice = &values[lo..=i];
            let mut sum = 0.0;
            for v in slice {
                sum += v;
            }
            sum / slice.len() as f64
        })
        .collect()
}
