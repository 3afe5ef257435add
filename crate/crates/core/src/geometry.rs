//! Ripple-anchored normalization of nutriment positions and its inverse.
//!
//! A frame is normalized against its ripple pair (R1, R2):
//!
//! 1. rotate every nutriment center about R1's bottom-left corner so the
//!    R1→R2 center axis becomes horizontal,
//! 2. translate the origin to that corner and flip the y axis (y-up),
//! 3. divide by `z`, the distance from R1's top-left to R2's bottom-right corner.
//!
//! The result is invariant to camera translation and zoom, and to rotation
//! when the ripple boxes have zero extent.

use std::ops::{Add, Mul, Sub};

use crate::detection::{BoundingBox, FrameRecord};
use crate::error::{Error, Result};

/// Normalization is refused when the ripple span is at or below this many pixels.
pub const Z_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Corner points of a box in image coordinates (y grows downward).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corners {
    pub tl: Point,
    pub tr: Point,
    pub bl: Point,
    pub br: Point,
}

pub fn corners_of(b: &BoundingBox) -> Corners {
    let x0 = (2.0 * b.cx - b.w) / 2.0;
    let y0 = (2.0 * b.cy - b.h) / 2.0;
    let x1 = (2.0 * b.cx + b.w) / 2.0;
    let y1 = (2.0 * b.cy + b.h) / 2.0;
    Corners {
        tl: Point::new(x0, y0),
        tr: Point::new(x1, y0),
        bl: Point::new(x0, y1),
        br: Point::new(x1, y1),
    }
}

/// Angle of the R1→R2 center axis, `atan2(dy, dx)`; 0 for coincident centers.
pub fn ripple_angle(r1: &BoundingBox, r2: &BoundingBox) -> f64 {
    let dy = r2.cy - r1.cy;
    let dx = r2.cx - r1.cx;
    if dx == 0.0 && dy == 0.0 {
        0.0
    } else {
        dy.atan2(dx)
    }
}

/// Rotates `p` by `theta` about `pivot`.
pub fn rotate_point(p: Point, theta: f64, pivot: Point) -> Point {
    let (s, c) = theta.sin_cos();
    let dx = p.x - pivot.x;
    let dy = p.y - pivot.y;
    Point::new(dx * c - dy * s + pivot.x, dx * s + dy * c + pivot.y)
}

/// An ordered ripple pair with the derived quantities normalization needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RipplePair {
    pub r1: BoundingBox,
    pub r2: BoundingBox,
    pub theta: f64,
    pub z: f64,
    /// Bottom-left corner of R1; origin of the normalized frame.
    pub anchor: Point,
    /// Top-left corner of R1.
    pub tl1: Point,
    /// Bottom-right corner of R2.
    pub br2: Point,
}

impl RipplePair {
    /// Takes R1 and R2 as given; ordering is the caller's job
    /// (see [`crate::detection::order_ripples`]).
    pub fn new(r1: BoundingBox, r2: BoundingBox) -> Self {
        let c1 = corners_of(&r1);
        let c2 = corners_of(&r2);
        let z = (c1.tl.x - c2.br.x).hypot(c1.tl.y - c2.br.y);
        RipplePair {
            theta: ripple_angle(&r1, &r2),
            z,
            anchor: c1.bl,
            tl1: c1.tl,
            br2: c2.br,
            r1,
            r2,
        }
    }

    pub fn is_usable(&self) -> bool {
        self.z > Z_MIN
    }

    fn check(&self) -> Result<()> {
        if self.is_usable() {
            Ok(())
        } else {
            Err(Error::DegenerateGeometry { z: self.z })
        }
    }

    /// Pixel point → normalized κ.
    pub fn normalize(&self, p: Point) -> Result<Point> {
        self.check()?;
        Ok(self.normalize_unchecked(p))
    }

    /// Normalized κ → pixel point.
    pub fn denormalize(&self, kappa: Point) -> Result<Point> {
        self.check()?;
        Ok(self.denormalize_unchecked(kappa))
    }

    fn normalize_unchecked(&self, p: Point) -> Point {
        let pivot = self.anchor;
        let psi = rotate_point(p, -self.theta, pivot);
        let xi = Point::new(psi.x - pivot.x, pivot.y - psi.y);
        Point::new(xi.x / self.z, xi.y / self.z)
    }

    fn denormalize_unchecked(&self, kappa: Point) -> Point {
        let pivot = self.anchor;
        let xi = kappa * self.z;
        let psi = Point::new(xi.x + pivot.x, pivot.y - xi.y);
        rotate_point(psi, self.theta, pivot)
    }
}

/// Normalized nutriment positions of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFrame {
    pub frame: u64,
    pub kappa: Vec<Point>,
    pub pair: RipplePair,
}

pub fn to_normalized(frame: &FrameRecord, pair: &RipplePair) -> Result<NormalizedFrame> {
    pair.check()?;
    let kappa = frame
        .nutriments
        .iter()
        .map(|b| pair.normalize_unchecked(b.center()))
        .collect();
    Ok(NormalizedFrame {
        frame: frame.frame,
        kappa,
        pair: pair.clone(),
    })
}

pub fn to_pixel(kappa: &[Point], pair: &RipplePair) -> Result<Vec<Point>> {
    pair.check()?;
    Ok(kappa
        .iter()
        .map(|k| pair.denormalize_unchecked(*k))
        .collect())
}
