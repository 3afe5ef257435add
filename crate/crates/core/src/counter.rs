//! Passed-line nutriment counting.
//!
//! The passed line sits `z / rho` above R1's bottom-left corner and runs
//! parallel to the R1→R2 center axis. A nutriment is counted in frame `f`
//! when its current detection is on the machine side of the line and its
//! predicted next position is on the ripple side (or on the line).

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::{Point, RipplePair};

pub const DEFAULT_RHO: f64 = 3.6;
pub const DEFAULT_WINDOW: usize = 20;

/// Points closer than this to the line (in pixels of y) are on it.
pub const ON_LINE_TOL: f64 = 1e-9;

const MIN_LINE_DX: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassedLine {
    pub alpha: f64,
    pub beta: f64,
    pub p1: Point,
    pub p2: Point,
    pub rho: f64,
}

pub fn passed_line(pair: &RipplePair, rho: f64) -> Result<PassedLine> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Config(format!(
            "rho must be positive and finite, got {rho}"
        )));
    }
    if !pair.is_usable() {
        return Err(Error::DegenerateGeometry { z: pair.z });
    }
    let (r1, r2) = (&pair.r1, &pair.r2);
    let p1 = Point::new(pair.tl1.x, pair.anchor.y - pair.z / rho);
    let p2 = Point::new(p1.x + (r2.cx - r1.cx), p1.y - (r1.cy - r2.cy));
    let dx = p2.x - p1.x;
    if dx.abs() <= MIN_LINE_DX {
        return Err(Error::DegenerateLine { dx });
    }
    let alpha = (p2.y - p1.y) / dx;
    let beta = p1.y - alpha * p1.x;
    Ok(PassedLine {
        alpha,
        beta,
        p1,
        p2,
        rho,
    })
}

/// Which side of a line a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Smaller image y than the line: the feeding-machine side.
    Above,
    On,
    /// Larger image y: the ripple side.
    Below,
}

impl Side {
    pub fn sign(self) -> i8 {
        match self {
            Side::Above => -1,
            Side::On => 0,
            Side::Below => 1,
        }
    }
}

impl PassedLine {
    pub fn y_at(&self, x: f64) -> f64 {
        self.alpha * x + self.beta
    }

    pub fn side_of(&self, p: Point) -> Side {
        let d = p.y - self.y_at(p.x);
        if d.abs() <= ON_LINE_TOL {
            Side::On
        } else if d > 0.0 {
            Side::Below
        } else {
            Side::Above
        }
    }
}

/// Direction of travel that counts as a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossingDirection {
    /// Machine side → ripple side: pellets entering the water.
    #[default]
    TowardRipple,
    TowardMachine,
}

impl CrossingDirection {
    fn crosses(self, from: Side, to: Side) -> bool {
        match self {
            CrossingDirection::TowardRipple => from == Side::Above && to != Side::Above,
            CrossingDirection::TowardMachine => from == Side::Below && to != Side::Below,
        }
    }
}

/// Counts detections whose prediction carries them across `line`.
///
/// `predicted[i]` must be the prediction for `current[i]`.
pub fn count_crossings(
    current: &[Point],
    predicted: &[Point],
    line: &PassedLine,
    direction: CrossingDirection,
) -> Result<u32> {
    if current.len() != predicted.len() {
        return Err(Error::shape(format!(
            "{} current points but {} predictions",
            current.len(),
            predicted.len()
        )));
    }
    let n = current
        .iter()
        .zip(predicted)
        .filter(|(c, p)| direction.crosses(line.side_of(**c), line.side_of(**p)))
        .count();
    Ok(n as u32)
}

/// Trailing-window sums; the first `window - 1` entries sum the available prefix.
pub fn windowed(series: &[u32], window: usize) -> Result<Vec<u64>> {
    let mut acc = WindowedSum::new(window)?;
    Ok(series.iter().map(|&v| acc.push(v)).collect())
}

/// Streaming form of [`windowed`].
#[derive(Debug, Clone)]
pub struct WindowedSum {
    window: usize,
    buf: VecDeque<u32>,
    sum: u64,
}

impl WindowedSum {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        Ok(WindowedSum {
            window,
            buf: VecDeque::with_capacity(window),
            sum: 0,
        })
    }

    pub fn push(&mut self, v: u32) -> u64 {
        if self.buf.len() == self.window {
            let old = self.buf.pop_front().expect("non-empty window");
            self.sum -= u64::from(old);
        }
        self.buf.push_back(v);
        self.sum += u64::from(v);
        self.sum
    }
}
