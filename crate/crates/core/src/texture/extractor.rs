//! Multi-stage feature extraction.
//!
//! [`ReferenceExtractor`] is a fixed (untrained) filter bank. Each stage runs
//! eight 3×3 filters over its input with edge replication, then feeds the
//! 2× mean-pooled averaging map to the next stage. Pretrained-network
//! features can be supplied instead through the pyramid file format read by
//! [`parse_pyramid`].

use std::fmt::Write as _;
use std::path::Path;

use super::image::GrayImage;
use crate::error::{Error, Result};

/// Real-valued feature map, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::shape(format!(
                "{} values for a {width}x{height} feature map",
                data.len()
            )));
        }
        Ok(FeatureMap {
            width,
            height,
            data,
        })
    }

    fn from_image(img: &GrayImage) -> Self {
        FeatureMap {
            width: img.width(),
            height: img.height(),
            data: img.pixels().to_vec(),
        }
    }

    #[inline]
    fn at_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    /// 2×2 mean pooling; odd trailing rows/columns are dropped.
    pub fn mean_pool2(&self) -> FeatureMap {
        let (w, h) = (self.width / 2, self.height / 2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let s = self.data[2 * y * self.width + 2 * x]
                    + self.data[2 * y * self.width + 2 * x + 1]
                    + self.data[(2 * y + 1) * self.width + 2 * x]
                    + self.data[(2 * y + 1) * self.width + 2 * x + 1];
                data.push(s / 4.0);
            }
        }
        FeatureMap {
            width: w,
            height: h,
            data,
        }
    }
}

/// Feature maps grouped by stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePyramid {
    pub stages: Vec<Vec<FeatureMap>>,
    /// Set when fewer stages were produced than requested because the input
    /// became smaller than 3×3; holds the requested count.
    pub truncated_from: Option<usize>,
}

impl FeaturePyramid {
    pub fn new(stages: Vec<Vec<FeatureMap>>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::EmptyInput("feature pyramid without stages"));
        }
        for (i, stage) in stages.iter().enumerate() {
            let Some(first) = stage.first() else {
                return Err(Error::EmptyInput("feature pyramid stage without maps"));
            };
            if stage
                .iter()
                .any(|m| m.width != first.width || m.height != first.height)
            {
                return Err(Error::shape(format!("stage {i} mixes feature map sizes")));
            }
        }
        Ok(FeaturePyramid {
            stages,
            truncated_from: None,
        })
    }

    pub fn omega(&self) -> usize {
        self.stages.len()
    }
}

pub trait FeatureExtractor {
    fn extract(&self, image: &GrayImage) -> Result<FeaturePyramid>;
}

/// A 3×3 filter. Zero-sum filters are evaluated on differences from the
/// center pixel so that flat regions produce exact zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Filter {
    pub name: &'static str,
    pub weights: [[f64; 3]; 3],
    pub zero_sum: bool,
}

const fn filter(name: &'static str, weights: [[f64; 3]; 3], zero_sum: bool) -> Filter {
    Filter {
        name,
        weights,
        zero_sum,
    }
}

const NINTH: f64 = 1.0 / 9.0;
const EIGHTH: f64 = 1.0 / 8.0;

/// Index of the averaging filter in [`REFERENCE_BANK`].
pub const AVERAGE: usize = 0;

pub const REFERENCE_BANK: [Filter; 8] = [
    filter("average", [[NINTH; 3]; 3], false),
    filter(
        "gradient_x",
        [[0.0, -0.25, 0.25], [0.0, -0.5, 0.5], [0.0, -0.25, 0.25]],
        true,
    ),
    filter(
        "gradient_y",
        [[0.0, 0.0, 0.0], [-0.25, -0.5, -0.25], [0.25, 0.5, 0.25]],
        true,
    ),
    filter(
        "gradient_diagonal",
        [[0.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
        true,
    ),
    filter(
        "gradient_antidiagonal",
        [[0.0, 0.0, 0.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]],
        true,
    ),
    filter(
        "laplacian",
        [[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]],
        true,
    ),
    filter(
        "ring_mean",
        [
            [EIGHTH, EIGHTH, EIGHTH],
            [EIGHTH, 0.0, EIGHTH],
            [EIGHTH, EIGHTH, EIGHTH],
        ],
        false,
    ),
    filter(
        "ring_contrast",
        [
            [EIGHTH, EIGHTH, EIGHTH],
            [EIGHTH, -1.0, EIGHTH],
            [EIGHTH, EIGHTH, EIGHTH],
        ],
        true,
    ),
];

/// Same-size 3×3 correlation with edge replication.
pub fn apply_filter(input: &FeatureMap, f: &Filter) -> FeatureMap {
    let (w, h) = (input.width as isize, input.height as isize);
    let mut data = Vec::with_capacity(input.data.len());
    for y in 0..h {
        for x in 0..w {
            let center = input.at_clamped(x, y);
            let mut acc = 0.0;
            for (dy, row) in f.weights.iter().enumerate() {
                for (dx, &k) in row.iter().enumerate() {
                    if k == 0.0 {
                        continue;
                    }
                    let v = input.at_clamped(x + dx as isize - 1, y + dy as isize - 1);
                    acc += k * if f.zero_sum { v - center } else { v };
                }
            }
            data.push(acc);
        }
    }
    FeatureMap {
        width: input.width,
        height: input.height,
        data,
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceExtractor {
    pub stages: usize,
}

impl Default for ReferenceExtractor {
    fn default() -> Self {
        ReferenceExtractor { stages: 5 }
    }
}

impl FeatureExtractor for ReferenceExtractor {
    fn extract(&self, image: &GrayImage) -> Result<FeaturePyramid> {
        if self.stages == 0 {
            return Err(Error::Config("extractor needs at least one stage".into()));
        }
        let mut input = FeatureMap::from_image(image);
        let mut stages = Vec::with_capacity(self.stages);
        for _ in 0..self.stages {
            if input.width < 3 || input.height < 3 {
                break;
            }
            let maps: Vec<FeatureMap> = REFERENCE_BANK
                .iter()
                .map(|f| apply_filter(&input, f))
                .collect();
            input = maps[AVERAGE].mean_pool2();
            stages.push(maps);
        }
        if stages.is_empty() {
            return Err(Error::validation(format!(
                "image {}x{} is smaller than 3x3",
                image.width(),
                image.height()
            )));
        }
        let truncated_from = (stages.len() < self.stages).then_some(self.stages);
        Ok(FeaturePyramid {
            stages,
            truncated_from,
        })
    }
}

/// Parses an external pyramid: `omega`, then per stage `phi height width`
/// followed by `phi * height * width` row-major values. Tokens are
/// whitespace-separated.
pub fn parse_pyramid(text: &str) -> Result<FeaturePyramid> {
    let mut tokens = text.split_whitespace();
    let mut next = |what: &str| {
        tokens.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("pyramid file ended while reading {what}"),
        })
    };
    fn num<T: std::str::FromStr>(t: &str) -> Result<T> {
        t.parse().map_err(|_| Error::Parse {
            line: 0,
            message: format!("bad number {t:?} in pyramid file"),
        })
    }
    let omega: usize = num(next("omega")?)?;
    let mut stages = Vec::with_capacity(omega);
    for _ in 0..omega {
        let phi: usize = num(next("phi")?)?;
        let height: usize = num(next("height")?)?;
        let width: usize = num(next("width")?)?;
        let mut maps = Vec::with_capacity(phi);
        for _ in 0..phi {
            let data = (0..width * height)
                .map(|_| num::<f64>(next("map values")?))
                .collect::<Result<Vec<_>>>()?;
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation("non-finite value in pyramid file"));
            }
            maps.push(FeatureMap::new(width, height, data)?);
        }
        stages.push(maps);
    }
    if next("end of file").is_ok() {
        return Err(Error::Parse {
            line: 0,
            message: "trailing data after pyramid".into(),
        });
    }
    FeaturePyramid::new(stages)
}

pub fn pyramid_to_string(p: &FeaturePyramid) -> String {
    let mut out = String::new();
    writeln!(out, "{}", p.omega()).unwrap();
    for stage in &p.stages {
        let (h, w) = (stage[0].height, stage[0].width);
        writeln!(out, "{} {h} {w}", stage.len()).unwrap();
        for map in stage {
            for row in map.data.chunks(w) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(out, "{}", line.join(" ")).unwrap();
            }
        }
    }
    out
}

pub fn load_pyramid(path: &Path) -> Result<FeaturePyramid> {
    parse_pyramid(&std::fs::read_to_string(path)?)
}

/// Serves pyramids read from files instead of computing them; the image is ignored.
#[derive(Debug, Clone)]
pub struct PrecomputedExtractor {
    pub pyramid: FeaturePyramid,
}

impl FeatureExtractor for PrecomputedExtractor {
    fn extract(&self, _image: &GrayImage) -> Result<FeaturePyramid> {
        Ok(self.pyramid.clone())
    }
}
