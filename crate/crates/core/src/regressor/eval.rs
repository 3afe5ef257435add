//! Prediction error statistics and model selection.

use std::collections::HashMap;

use super::predictor::Predictor;
use crate::detection::{FrameRecord, PairTracker, TruthRecord};
use crate::error::{Error, Result};
use crate::geometry::{to_normalized, to_pixel, NormalizedFrame, Point};
use crate::stats::Summary;

/// Per-annotation error measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalFormula {
    /// Euclidean distance between predicted and true next position.
    #[default]
    Euclidean,
    /// `| |t.x - t.y| - |p.x - p.y| |`, the selection objective read term by term.
    Literal,
}

impl std::str::FromStr for EvalFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(EvalFormula::Euclidean),
            "literal" => Ok(EvalFormula::Literal),
            other => Err(Error::Config(format!(
                "unknown eval formula {other:?} (expected literal or euclidean)"
            ))),
        }
    }
}

impl EvalFormula {
    pub fn error(self, predicted: Point, truth: Point) -> f64 {
        match self {
            EvalFormula::Euclidean => predicted.distance(truth),
            EvalFormula::Literal => {
                ((truth.x - truth.y).abs() - (predicted.x - predicted.y).abs()).abs()
            }
        }
    }
}

pub fn sample_errors(
    predicted: &[Point],
    truth: &[Point],
    formula: EvalFormula,
) -> Result<Vec<f64>> {
    if predicted.len() != truth.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} ground-truth points",
            predicted.len(),
            truth.len()
        )));
    }
    Ok(predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| formula.error(*p, *t))
        .collect())
}

/// Euclidean error statistics in pixels: mean, sample std, stderr, 95% CI.
pub fn eval_error(predicted: &[Point], truth: &[Point]) -> Result<Summary> {
    Summary::of(&sample_errors(predicted, truth, EvalFormula::Euclidean)?)
}

/// Annotated frames prepared for evaluation.
#[derive(Debug, Clone, Default)]
pub struct EvalSet {
    frames: Vec<(NormalizedFrame, Vec<Option<Point>>)>,
}

impl EvalSet {
    /// Pairs each geometry-ready frame with its annotations, matched by frame index.
    pub fn build(records: &[FrameRecord], truth: &[TruthRecord]) -> Result<Self> {
        let by_frame: HashMap<u64, &TruthRecord> = truth.iter().map(|t| (t.frame, t)).collect();
        let mut tracker = PairTracker::new();
        let mut frames = Vec::new();
        for record in records {
            let pair = tracker.update(record);
            let (Some(pair), Some(t)) = (pair, by_frame.get(&record.frame)) else {
                continue;
            };
            if !pair.is_usable() || t.next.iter().all(Option::is_none) {
                continue;
            }
            if t.next.len() != record.nutriments.len() {
                return Err(Error::shape(format!(
                    "frame {}: {} annotations for {} nutriments",
                    record.frame,
                    t.next.len(),
                    record.nutriments.len()
                )));
            }
            frames.push((to_normalized(record, &pair)?, t.next.clone()));
        }
        Ok(EvalSet { frames })
    }

    pub fn annotation_count(&self) -> usize {
        self.frames
            .iter()
            .map(|(_, t)| t.iter().flatten().count())
            .sum()
    }

    /// Pixel-space (prediction, truth) pairs for every annotation.
    pub fn predictions<P: Predictor + ?Sized>(
        &self,
        predictor: &P,
    ) -> Result<(Vec<Point>, Vec<Point>)> {
        let mut pred = Vec::new();
        let mut gt = Vec::new();
        for (nf, truth) in &self.frames {
            let kappa = predictor.predict_next(nf)?;
            let pixels = to_pixel(&kappa, &nf.pair)?;
            for (p, t) in pixels.into_iter().zip(truth) {
                if let Some(t) = t {
                    pred.push(p);
                    gt.push(*t);
                }
            }
        }
        Ok((pred, gt))
    }

    pub fn evaluate<P: Predictor + ?Sized>(
        &self,
        predictor: &P,
        formula: EvalFormula,
    ) -> Result<Summary> {
        let (pred, gt) = self.predictions(predictor)?;
        if pred.is_empty() {
            return Err(Error::EmptyInput("no annotated nutriments to evaluate"));
        }
        Summary::of(&sample_errors(&pred, &gt, formula)?)
    }
}

/// Index of the smallest mean error; ties go to the lowest index.
pub fn best_index(stats: &[Summary]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in stats.iter().enumerate() {
        if best.is_none_or(|(_, m)| s.mean < m) {
            best = Some((i, s.mean));
        }
    }
    best.map(|(i, _)| i)
        .ok_or(Error::EmptyInput("no models to select from"))
}

pub fn select_best(
    models: &[&dyn Predictor],
    set: &EvalSet,
    formula: EvalFormula,
) -> Result<usize> {
    if models.is_empty() {
        return Err(Error::EmptyInput("no models to select from"));
    }
    let stats = models
        .iter()
        .map(|m| set.evaluate(*m, formula))
        .collect::<Result<Vec<_>>>()?;
    best_index(&stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_and_pythagorean() {
        let pts = vec![Point::new(1.0, 2.0), Point::new(-3.0, 4.5)];
        let s = eval_error(&pts, &pts).unwrap();
        assert_eq!((s.mean, s.std), (0.0, 0.0));
        let s = eval_error(&[Point::new(3.0, 4.0)], &[Point::new(0.0, 0.0)]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert!(matches!(eval_error(&pts, &pts[..1]), Err(Error::Shape(_))));
    }

    #[test]
    fn literal_formula() {
        let e = EvalFormula::Literal.error(Point::new(5.0, 1.0), Point::new(2.0, 1.0));
        assert_eq!(e, 3.0);
        assert_eq!(
            "literal".parse::<EvalFormula>().unwrap(),
            EvalFormula::Literal
        );
        assert!("manhattan".parse::<EvalFormula>().is_err());
    }

    fn summary(mean: f64) -> Summary {
        Summary::of(&[mean]).unwrap()
    }

    #[test]
    fn best_index_rules() {
        assert_eq!(best_index(&[summary(2.0)]).unwrap(), 0);
        assert_eq!(
            best_index(&[summary(2.0), summary(1.0), summary(1.0)]).unwrap(),
            1
        );
        assert!(best_index(&[]).is_err());
    }

    proptest! {
        #[test]
        fn statistics_are_permutation_equivariant(
            pairs in proptest::collection::vec((-50f64..50.0, -50f64..50.0, -50f64..50.0, -50f64..50.0), 1..40),
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut v: Vec<(Point, Point)> = pairs.iter().map(|&(a, b, c, d)| (Point::new(a, b), Point::new(c, d))).collect();
            let stats = |v: &[(Point, Point)]| {
                let (p, t): (Vec<_>, Vec<_>) = v.iter().cloned().unzip();
                eval_error(&p, &t).unwrap()
            };
            let s0 = stats(&v);
            v.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let s1 = stats(&v);
            prop_assert!((s0.mean - s1.mean).abs() <= 1e-12 * s0.mean.max(1.0));
            prop_assert!((s0.std - s1.std).abs() <= 1e-9 * s0.std.max(1.0));
        }

        #[test]
        fn selection_ignores_common_scale(
            means in proptest::collection::vec(0.01f64..100.0, 1..8),
            scale in 1e-3f64..1e3,
        ) {
            let a: Vec<_> = means.iter().map(|&m| summary(m)).collect();
            let b: Vec<_> = means.iter().map(|&m| summary(m * scale)).collect();
            prop_assert_eq!(best_index(&a).unwrap(), best_index(&b).unwrap());
        }
    }
}
