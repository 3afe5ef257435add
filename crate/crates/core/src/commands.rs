//! Library side of the `train`, `eval` and `activity` commands.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::detection::FrameRecord;
use crate::error::{Error, Result};
use crate::regressor::{
    harvest_pairs, load_model, save_model, select_best, train, EvalFormula, EvalSet, ModelPair,
    ModelVariant, Predictor, RegressionModel, TrainConfig, Trained,
};
use crate::stats::Summary;
use crate::texture::{self, FeatureExtractor, GrayImage};

pub struct TrainOutcome {
    pub variant: ModelVariant,
    pub samples: usize,
    pub mx: Trained,
    pub my: Trained,
}

/// Harvests training pairs from `records` and fits both networks of `variant`.
///
/// `mx` is initialized from `config.seed`, `my` from `config.seed + 1`.
pub fn cmd_train(
    records: &[FrameRecord],
    variant: ModelVariant,
    config: &TrainConfig,
    gate: f64,
) -> Result<TrainOutcome> {
    config.validate()?;
    let pairs = harvest_pairs(records, gate)?;
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (dx, dy) = pairs.datasets();
    let mx = RegressionModel::new(variant.spec(1), config.seed)?;
    let my = RegressionModel::new(variant.spec(2), config.seed.wrapping_add(1))?;
    let my_config = TrainConfig {
        seed: config.seed.wrapping_add(1),
        ..config.clone()
    };
    Ok(TrainOutcome {
        variant,
        samples: pairs.len(),
        mx: train(mx, &dx, config)?,
        my: train(my, &dy, &my_config)?,
    })
}

pub fn model_paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{name}_mx.model")),
        dir.join(format!("{name}_my.model")),
    )
}

/// Writes `<name>_mx.model`, `<name>_my.model` and `<name>_loss.csv` into `dir`.
pub fn save_outcome(dir: &Path, outcome: &TrainOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let name = outcome.variant.name();
    let (px, py) = model_paths(dir, name);
    save_model(&outcome.mx.model, &px)?;
    save_model(&outcome.my.model, &py)?;
    let mut log = String::from("point,mx_loss,my_loss\n");
    let n = outcome.mx.loss_curve.len().max(outcome.my.loss_curve.len());
    for i in 0..n {
        let cell = |c: &[f64]| c.get(i).map(|v| v.to_string()).unwrap_or_default();
        log.push_str(&format!(
            "{i},{},{}\n",
            cell(&outcome.mx.loss_curve),
            cell(&outcome.my.loss_curve)
        ));
    }
    std::fs::write(dir.join(format!("{name}_loss.csv")), log)?;
    Ok(())
}

pub fn load_pair(mx: &Path, my: &Path) -> Result<ModelPair> {
    ModelPair::new(load_model(mx)?, load_model(my)?)
}

/// Every `<name>_mx.model` in `dir` that has a matching `<name>_my.model`, sorted by name.
pub fn discover_models(dir: &Path) -> Result<Vec<(String, ModelPair)>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(file) = path.file_name().and_then(|f| f.to_str()) else {
            continue;
        };
        if let Some(name) = file.strip_suffix("_mx.model") {
            if model_paths(dir, name).1.is_file() {
                names.push(name.to_string());
            }
        }
    }
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let (px, py) = model_paths(dir, &name);
            Ok((name, load_pair(&px, &py)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub name: String,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub formula: EvalFormula,
    pub rows: Vec<EvalRow>,
    pub best: usize,
}

/// Scores every named predictor on `set` and marks the lowest mean error.
pub fn cmd_eval(
    models: &[(String, &dyn Predictor)],
    set: &EvalSet,
    formula: EvalFormula,
) -> Result<EvalReport> {
    if models.is_empty() {
        return Err(Error::EmptyInput("no models to evaluate"));
    }
    let predictors: Vec<&dyn Predictor> = models.iter().map(|(_, p)| *p).collect();
    let best = select_best(&predictors, set, formula)?;
    let rows = models
        .iter()
        .map(|(name, p)| {
            Ok(EvalRow {
                name: name.clone(),
                summary: set.evaluate(*p, formula)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        formula,
        rows,
        best,
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Model\tN\tMean\tStd. Dev.\tStd. Err.\t95% CI lower\t95% CI upper\tBest"
        )?;
        for (i, row) in self.rows.iter().enumerate() {
            let s = &row.summary;
            writeln!(
                f,
                "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}",
                row.name,
                s.n,
                s.mean,
                s.std,
                s.stderr,
                s.ci_lower,
                s.ci_upper,
                if i == self.best { "*" } else { "" }
            )?;
        }
        Ok(())
    }
}

/// Activity index per frame for frames that have an image; `None` otherwise.
pub fn activity_for_frames<E, F>(
    records: &[FrameRecord],
    extractor: &E,
    mut image: F,
) -> Result<Vec<Option<f64>>>
where
    E: FeatureExtractor,
    F: FnMut(u64) -> Result<Option<GrayImage>>,
{
    let mut tracker = crate::detection::PairTracker::new();
    let mut out = Vec::with_capacity(records.len());
    for record in records {
        let pair = tracker.update(record).filter(|p| p.is_usable());
        let sigma = match (pair, image(record.frame)?) {
            (Some(pair), Some(img)) => Some(texture::frame_activity(extractor, &img, &pair)?),
            _ => None,
        };
        out.push(sigma);
    }
    Ok(out)
}
