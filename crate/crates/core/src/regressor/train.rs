use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{Gradients, RegressionModel, Workspace};
use crate::error::{Error, Result};

/// Step size over the course of training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrSchedule {
    Constant,
    /// Decays linearly from the base rate toward zero at the last iteration.
    Linear,
}

impl LrSchedule {
    pub fn rate(self, base: f64, iteration: usize, iterations: usize) -> f64 {
        match self {
            LrSchedule::Constant => base,
            LrSchedule::Linear => base * (1.0 - iteration as f64 / iterations as f64),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LrSchedule::Constant => "constant",
            LrSchedule::Linear => "linear",
        }
    }
}

impl std::str::FromStr for LrSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(LrSchedule::Constant),
            "linear" => Ok(LrSchedule::Linear),
            other => Err(Error::Config(format!(
                "unknown schedule {other:?} (expected constant or linear)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub batch_size: usize,
    pub seed: u64,
    /// Iterations per loss-curve point; 0 picks `iterations / 100`.
    pub log_every: usize,
}

impl TrainConfig {
    /// One million iterations at a constant learning rate of 1e-7.
    pub fn reference_preset() -> Self {
        TrainConfig {
            iterations: 1_000_000,
            learning_rate: 1e-7,
            schedule: LrSchedule::Constant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be finite and positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }

    fn log_interval(&self) -> usize {
        if self.log_every > 0 {
            self.log_every
        } else {
            (self.iterations / 100).max(1)
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 20_000,
            learning_rate: 1e-3,
            schedule: LrSchedule::Linear,
            batch_size: 32,
            seed: 0,
            log_every: 0,
        }
    }
}

impl std::fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "iterations={} learning_rate={:e} schedule={} batch_size={} seed={}",
            self.iterations,
            self.learning_rate,
            self.schedule.name(),
            self.batch_size,
            self.seed
        )
    }
}

/// Regression samples: `inputs[i]` maps to `targets[i]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn push(&mut self, input: Vec<f64>, target: f64) {
        self.inputs.push(input);
        self.targets.push(target);
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Result of a training run: the model and the full-dataset MSE at the end of each logging interval.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: RegressionModel,
    pub loss_curve: Vec<f64>,
}

/// Mini-batch gradient descent on mean squared error.
///
/// One iteration is one batch step. Samples are reshuffled every epoch from
/// `config.seed`; a batch never straddles an epoch boundary.
pub fn train(mut model: RegressionModel, data: &Dataset, config: &TrainConfig) -> Result<Trained> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("training dataset"));
    }
    if data.inputs.len() != data.targets.len() {
        return Err(Error::shape("inputs and targets differ in length"));
    }
    if let Some(bad) = data.inputs.iter().find(|x| x.len() != model.input_dim()) {
        return Err(Error::shape(format!(
            "sample of width {} for a model with {} inputs",
            bad.len(),
            model.input_dim()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = order.len();
    let batch = config.batch_size.min(order.len());
    let interval = config.log_interval();

    let mut ws = Workspace::default();
    let mut grads = Gradients::zeros_like(&model);
    let mut xs: Vec<&[f64]> = Vec::with_capacity(batch);
    let mut ts: Vec<f64> = Vec::with_capacity(batch);
    let mut curve = Vec::new();
    let mut interval_steps = 0usize;

    for iteration in 0..config.iterations {
        if cursor + batch > order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        xs.clear();
        ts.clear();
        for &i in &order[cursor..cursor + batch] {
            xs.push(&data.inputs[i]);
            ts.push(data.targets[i]);
        }
        cursor += batch;

        let loss = model.batch_step_gradients(&xs, &ts, &mut ws, &mut grads);
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration, loss });
        }
        model.apply(
            &grads,
            config
                .schedule
                .rate(config.learning_rate, iteration, config.iterations),
        );

        interval_steps += 1;
        if interval_steps == interval || iteration + 1 == config.iterations {
            curve.push(model.mse(&data.inputs, &data.targets));
            interval_steps = 0;
        }
    }

    if model.params().iter().any(|p| !p.is_finite()) {
        return Err(Error::Divergence {
            iteration: config.iterations,
            loss: f64::NAN,
        });
    }
    Ok(Trained {
        model,
        loss_curve: curve,
    })
}
