//! Ripple activity index.
//!
//! The crop between R1's top-left and R2's bottom-right corners goes
//! through a multi-stage feature extractor. For stage `i` with `phi_i`
//! maps, the per-map variances are reduced to their population standard
//! deviation `sigma_i`; the activity index `sigma_f` is the population
//! standard deviation of the `sigma_i` across stages.

pub mod extractor;
pub mod image;

use std::collections::VecDeque;

pub use extractor::{
    load_pyramid, parse_pyramid, pyramid_to_string, FeatureExtractor, FeatureMap, FeaturePyramid,
    PrecomputedExtractor, ReferenceExtractor, REFERENCE_BANK,
};
pub use image::{crop_region, decode_pnm, encode_pgm, load_image, save_pgm, GrayImage};

use crate::error::{Error, Result};
use crate::geometry::RipplePair;

/// Population variance of all entries.
///
/// Values are shifted by the first entry before accumulation, so a
/// constant map yields exactly zero.
pub fn map_variance(values: &[f64]) -> f64 {
    let Some(&shift) = values.first() else {
        return 0.0;
    };
    let n = values.len() as f64;
    let mean = values.iter().map(|v| v - shift).sum::<f64>() / n;
    values
        .iter()
        .map(|v| (v - shift - mean).powi(2))
        .sum::<f64>()
        / n
}

/// Population standard deviation, shifted like [`map_variance`].
fn population_std(values: &[f64]) -> f64 {
    map_variance(values).sqrt()
}

/// Spread of one stage's per-map variances.
pub fn stage_sigma(variances: &[f64]) -> Result<f64> {
    if variances.is_empty() {
        return Err(Error::EmptyInput("stage without feature maps"));
    }
    Ok(population_std(variances))
}

/// Spread of the per-stage sigmas.
pub fn global_sigma(stage_sigmas: &[f64]) -> Result<f64> {
    if stage_sigmas.is_empty() {
        return Err(Error::EmptyInput("no stages"));
    }
    Ok(population_std(stage_sigmas))
}

/// Activity index of one pyramid.
pub fn pyramid_sigma(p: &FeaturePyramid) -> Result<f64> {
    let stage_sigmas = p
        .stages
        .iter()
        .map(|maps| {
            let v: Vec<f64> = maps.iter().map(|m| map_variance(&m.data)).collect();
            stage_sigma(&v)
        })
        .collect::<Result<Vec<_>>>()?;
    global_sigma(&stage_sigmas)
}

/// Crops the ripple region of `frame` and computes its activity index.
pub fn frame_activity<E: FeatureExtractor + ?Sized>(
    extractor: &E,
    frame: &GrayImage,
    pair: &RipplePair,
) -> Result<f64> {
    let crop = crop_region(frame, pair);
    pyramid_sigma(&extractor.extract(&crop)?)
}

/// Trailing-window arithmetic means; the prefix averages what is available.
pub fn activity_series(sigmas: &[f64], window: usize) -> Result<Vec<f64>> {
    let mut acc = WindowedMean::new(window)?;
    Ok(sigmas.iter().map(|&s| acc.push(s)).collect())
}

/// Streaming form of [`activity_series`].
///
/// Each mean is summed afresh, oldest to newest, so results do not drift
/// over long streams.
#[derive(Debug, Clone)]
pub struct WindowedMean {
    window: usize,
    buf: VecDeque<f64>,
}

impl WindowedMean {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        Ok(WindowedMean {
            window,
            buf: VecDeque::with_capacity(window),
        })
    }

    pub fn push(&mut self, v: f64) -> f64 {
        if self.buf.len() == self.window {
            self.buf.pop_front();
        }
        self.buf.push_back(v);
        self.buf.iter().sum::<f64>() / self.buf.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_fixtures() {
        assert_eq!(map_variance(&[0.7; 12]), 0.0);
        assert_eq!(map_variance(&[0.0, 2.0]), 1.0);
        assert_eq!(map_variance(&[1.0, 2.0, 3.0, 4.0]), 1.25);
    }

    #[test]
    fn stage_fixtures() {
        assert_eq!(stage_sigma(&[1.0, 3.0]).unwrap(), 1.0);
        assert_eq!(stage_sigma(&[0.4; 5]).unwrap(), 0.0);
        assert_eq!(stage_sigma(&[2.5]).unwrap(), 0.0);
        assert!(matches!(stage_sigma(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn global_fixtures() {
        let g = global_sigma(&[0.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        assert!((g - 0.8).abs() < 1e-12);
        assert_eq!(global_sigma(&[0.3; 5]).unwrap(), 0.0);
        assert!(global_sigma(&[]).is_err());
    }

    #[test]
    fn series_fixtures() {
        assert_eq!(activity_series(&[1.0, 3.0], 2).unwrap(), vec![1.0, 2.0]);
        let s = [0.3, 0.1, 0.7];
        assert_eq!(activity_series(&s, 1).unwrap(), s.to_vec());
        assert!(activity_series(&[], 20).unwrap().is_empty());
        assert!(matches!(activity_series(&s, 0), Err(Error::Config(_))));
    }

    #[test]
    fn constant_image_is_inactive() {
        for v in [0.0, 0.2, 1.0 / 3.0, 0.9] {
            let img = GrayImage::from_fn(48, 30, |_, _| v).unwrap();
            let p = ReferenceExtractor::default().extract(&img).unwrap();
            assert_eq!(pyramid_sigma(&p).unwrap(), 0.0);
        }
    }

    #[test]
    fn intensity_shift_keeps_map_variances() {
        let base = |x: usize, y: usize| ((x * 5 + y * 3) % 11) as f64 / 20.0;
        let a = GrayImage::from_fn(32, 32, base).unwrap();
        let b = GrayImage::from_fn(32, 32, |x, y| base(x, y) + 0.3).unwrap();
        let e = ReferenceExtractor::default();
        let (pa, pb) = (e.extract(&a).unwrap(), e.extract(&b).unwrap());
        for (sa, sb) in pa.stages.iter().zip(&pb.stages) {
            for ((ma, mb), f) in sa.iter().zip(sb).zip(&REFERENCE_BANK) {
                if f.zero_sum {
                    let (va, vb) = (map_variance(&ma.data), map_variance(&mb.data));
                    assert!((va - vb).abs() < 1e-12, "{}: {va} vs {vb}", f.name);
                }
            }
        }
    }
}
