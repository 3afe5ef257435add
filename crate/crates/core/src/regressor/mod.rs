//! Next-frame regression of normalized nutriment positions.
//!
//! Two fully connected ReLU networks with linear outputs: `mx` maps the
//! current normalized x to the next x, `my` maps (x, y) to the next y.

pub mod eval;
pub mod harvest;
pub mod io;
pub mod network;
pub mod predictor;
pub mod train;

pub use eval::{best_index, eval_error, select_best, EvalFormula, EvalSet};
pub use harvest::{harvest_pairs, TrainingPairs, DEFAULT_GATE};
pub use io::{load_model, model_from_str, model_to_string, save_model};
pub use network::{Dense, Gradients, LayerSpec, ModelVariant, RegressionModel};
pub use predictor::{predict_next, ModelPair, Persistence, Predictor, TruthPredictor};
pub use train::{train, Dataset, LrSchedule, TrainConfig, Trained};
