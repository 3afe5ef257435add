//! Automatic fish-feeding control downstream of an object detector.
//!
//! The crate takes per-frame nutriment and ripple detections and produces:
//!
//! * ripple-anchored normalized nutriment coordinates ([`geometry`]),
//! * next-frame predictions from two small regression networks ([`regressor`]),
//! * directed passed-line nutriment counts ([`counter`]),
//! * a ripple activity index from feature-map variances ([`texture`]),
//! * a hysteresis feed-machine decision per frame ([`control`], [`pipeline`]).
//!
//! [`synth`] generates ballistic scenes with exact ground truth, used as the
//! oracle throughout the test suite.

pub mod commands;
pub mod control;
pub mod counter;
pub mod detection;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod regressor;
pub mod stats;
pub mod synth;
pub mod texture;

pub use error::{Error, Result};
pub use geometry::Point;
