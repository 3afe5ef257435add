use std::collections::HashMap;

use super::network::RegressionModel;
use crate::detection::TruthRecord;
use crate::error::{Error, Result};
use crate::geometry::{NormalizedFrame, Point};

/// Predicts each nutriment's normalized position in the next frame.
///
/// Implementations must return one point per entry of `nf.kappa`, in order.
pub trait Predictor {
    fn predict_next(&self, nf: &NormalizedFrame) -> Result<Vec<Point>>;
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn predict_next(&self, nf: &NormalizedFrame) -> Result<Vec<Point>> {
        (**self).predict_next(nf)
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn predict_next(&self, nf: &NormalizedFrame) -> Result<Vec<Point>> {
        (**self).predict_next(nf)
    }
}

/// `x' = mx(x)`, `y' = my(x, y)` for every nutriment.
pub fn predict_next(
    mx: &RegressionModel,
    my: &RegressionModel,
    nf: &NormalizedFrame,
) -> Result<Vec<Point>> {
    check_dims(mx, my)?;
    nf.kappa
        .iter()
        .map(|k| Ok(Point::new(mx.forward(&[k.x])?, my.forward(&[k.x, k.y])?)))
        .collect()
}

fn check_dims(mx: &RegressionModel, my: &RegressionModel) -> Result<()> {
    if mx.input_dim() != 1 || my.input_dim() != 2 {
        return Err(Error::shape(format!(
            "x model must take 1 input and y model 2, got {} and {}",
            mx.input_dim(),
            my.input_dim()
        )));
    }
    Ok(())
}

/// The x/y regression network pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPair {
    pub mx: RegressionModel,
    pub my: RegressionModel,
}

impl ModelPair {
    pub fn new(mx: RegressionModel, my: RegressionModel) -> Result<Self> {
        check_dims(&mx, &my)?;
        Ok(ModelPair { mx, my })
    }
}

impl Predictor for ModelPair {
    fn predict_next(&self, nf: &NormalizedFrame) -> Result<Vec<Point>> {
        predict_next(&self.mx, &self.my, nf)
    }
}

/// Next position = current position.
#[derive(Debug, Clone, Copy, Default)]
pub struct Persistence;

impl Predictor for Persistence {
    fn predict_next(&self, nf: &NormalizedFrame) -> Result<Vec<Point>> {
        Ok(nf.kappa.clone())
    }
}

/// Replays annotated next positions, normalized against the current frame's pair.
///
/// Unannotated nutriments, and frames without annotations, fall back to persistence.
#[derive(Debug, Clone, Default)]
pub struct TruthPredictor {
    next: HashMap<u64, Vec<Option<Point>>>,
}

impl TruthPredictor {
    pub fn new(truth: &[TruthRecord]) -> Self {
        TruthPredictor {
            next: truth.iter().map(|t| (t.frame, t.next.clone())).collect(),
        }
    }
}

impl Predictor for TruthPredictor {
    fn predict_next(&self, nf: &NormalizedFrame) -> Result<Vec<Point>> {
        let Some(next) = self.next.get(&nf.frame) else {
            return Ok(nf.kappa.clone());
        };
        if next.len() != nf.kappa.len() {
            return Err(Error::shape(format!(
                "frame {}: {} annotations for {} nutriments",
                nf.frame,
                next.len(),
                nf.kappa.len()
            )));
        }
        nf.kappa
            .iter()
            .zip(next)
            .map(|(k, t)| match t {
                Some(p) => nf.pair.normalize(*p),
                None => Ok(*k),
            })
            .collect()
    }
}
