use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Hidden-layer sizes plus input width of one regression network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
}

impl LayerSpec {
    pub const OUTPUT_DIM: usize = 1;

    pub fn new(input_dim: usize, hidden_sizes: Vec<usize>) -> Result<Self> {
        let spec = LayerSpec {
            input_dim,
            hidden_sizes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be at least 1".into()));
        }
        if self.hidden_sizes.is_empty() {
            return Err(Error::Config(
                "at least one hidden layer is required".into(),
            ));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::Config(format!(
                "hidden layer sizes must be positive: {:?}",
                self.hidden_sizes
            )));
        }
        Ok(())
    }

    /// Layer widths from input to output, e.g. `[1, 100, 80, ..., 20, 1]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_sizes.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden_sizes);
        w.push(Self::OUTPUT_DIM);
        w
    }
}

/// The six fully connected variants compared for next-frame regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelVariant {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 6] = [
        ModelVariant::R1,
        ModelVariant::R2,
        ModelVariant::R3,
        ModelVariant::R4,
        ModelVariant::R5,
        ModelVariant::R6,
    ];

    pub fn hidden_sizes(self) -> Vec<usize> {
        match self {
            ModelVariant::R1 => vec![100, 80, 60, 40, 40, 20],
            ModelVariant::R2 => vec![200, 160, 120, 80, 80, 40],
            ModelVariant::R3 => vec![100, 90, 80, 70, 60, 50, 40, 30, 20, 10],
            ModelVariant::R4 => vec![200, 180, 160, 140, 120, 100, 80, 60, 40, 20],
            ModelVariant::R5 => vec![100, 40],
            ModelVariant::R6 => vec![200, 80],
        }
    }

    pub fn spec(self, input_dim: usize) -> LayerSpec {
        LayerSpec {
            input_dim,
            hidden_sizes: self.hidden_sizes(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::R1 => "R1",
            ModelVariant::R2 => "R2",
            ModelVariant::R3 => "R3",
            ModelVariant::R4 => "R4",
            ModelVariant::R5 => "R5",
            ModelVariant::R6 => "R6",
        }
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown model variant {s:?} (expected R1..R6)")))
    }
}

/// Fully connected layer. `weights` is `in_dim × out_dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Dense {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    #[inline]
    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.biases);
        for (i, &x) in input.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.out_dim..(i + 1) * self.out_dim];
            for (o, w) in out.iter_mut().zip(row) {
                *o += x * w;
            }
        }
    }
}

/// A ReLU multilayer perceptron with a single linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub spec: LayerSpec,
    pub layers: Vec<Dense>,
}

/// Per-layer parameter gradients, shaped like [`RegressionModel::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(model: &RegressionModel) -> Self {
        Gradients {
            layers: model
                .layers
                .iter()
                .map(|l| Dense::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    fn clear(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
    }

    /// Flattened in the same order as [`RegressionModel::params`].
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }
}

/// Reusable activation buffers for forward/backward passes.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    /// `acts[0]` is the input, `acts[k + 1]` the (post-activation) output of layer k.
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl RegressionModel {
    /// Uniform ±sqrt(6 / fan_in) weights, zero biases.
    pub fn new(spec: LayerSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = spec.widths();
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / fan_in as f64).sqrt();
                let mut layer = Dense::zeros(fan_in, fan_out);
                for v in &mut layer.weights {
                    *v = rng.random_range(-limit..=limit);
                }
                layer
            })
            .collect();
        Ok(RegressionModel { spec, layers })
    }

    /// Builds a model from explicit layers, checking that shapes chain.
    pub fn from_layers(spec: LayerSpec, layers: Vec<Dense>) -> Result<Self> {
        spec.validate()?;
        let widths = spec.widths();
        if layers.len() != widths.len() - 1 {
            return Err(Error::shape(format!(
                "{} layers for a spec with {} weight matrices",
                layers.len(),
                widths.len() - 1
            )));
        }
        for (k, (l, w)) in layers.iter().zip(widths.windows(2)).enumerate() {
            if l.in_dim != w[0]
                || l.out_dim != w[1]
                || l.weights.len() != w[0] * w[1]
                || l.biases.len() != w[1]
            {
                return Err(Error::shape(format!(
                    "layer {k} is {}x{} but the spec needs {}x{}",
                    l.in_dim, l.out_dim, w[0], w[1]
                )));
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(Error::validation(format!(
                    "layer {k} has non-finite parameters"
                )));
            }
        }
        Ok(RegressionModel { spec, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights[index];
            }
            index -= l.weights.len();
            if index < l.biases.len() {
                return &mut l.biases[index];
            }
            index -= l.biases.len();
        }
        panic!("parameter index out of range");
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.spec.input_dim {
            return Err(Error::shape(format!(
                "model expects {} inputs, got {}",
                self.spec.input_dim,
                input.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        self.check_input(input)?;
        let mut ws = Workspace::default();
        Ok(self.forward_ws(input, &mut ws))
    }

    pub(crate) fn forward_ws(&self, input: &[f64], ws: &mut Workspace) -> f64 {
        let n = self.layers.len();
        ws.acts.resize_with(n + 1, Vec::new);
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(input);
        for (k, layer) in self.layers.iter().enumerate() {
            let (head, tail) = ws.acts.split_at_mut(k + 1);
            let out = &mut tail[0];
            layer.affine(&head[k], out);
            if k + 1 < n {
                for v in out.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
        ws.acts[n][0]
    }

    /// Hidden-layer pre-activations for `input`; used to stay clear of ReLU kinks.
    pub fn pre_activations(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(input)?;
        let mut out = Vec::new();
        let mut current = input.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.affine(&current, &mut z);
            if k + 1 < self.layers.len() {
                current = z.iter().map(|v| v.max(0.0)).collect();
                out.push(z);
            }
        }
        Ok(out)
    }

    /// Accumulates `scale * d(output)/d(params)` into `grads`, given the
    /// forward pass stored in `ws`.
    fn backward_ws(&self, scale: f64, ws: &mut Workspace, grads: &mut Gradients) {
        let n = self.layers.len();
        ws.delta.clear();
        ws.delta.push(scale);
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            let g = &mut grads.layers[k];
            let input = &ws.acts[k];
            for (gb, d) in g.biases.iter_mut().zip(&ws.delta) {
                *gb += d;
            }
            for (i, &x) in input.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let row = &mut g.weights[i * layer.out_dim..(i + 1) * layer.out_dim];
                for (gw, d) in row.iter_mut().zip(&ws.delta) {
                    *gw += x * d;
                }
            }
            if k == 0 {
                break;
            }
            // delta for layer k-1 outputs, masked by ReLU: acts[k] > 0 iff pre-activation > 0
            ws.delta_prev.clear();
            ws.delta_prev.resize(layer.in_dim, 0.0);
            for (i, row) in layer.weights.chunks_exact(layer.out_dim).enumerate() {
                if input[i] > 0.0 {
                    ws.delta_prev[i] = row.iter().zip(&ws.delta).map(|(w, d)| w * d).sum();
                }
            }
            std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
        }
    }

    /// Squared error `(forward(input) - target)^2` and its parameter gradients.
    pub fn loss_and_gradients(&self, input: &[f64], target: f64) -> Result<(f64, Gradients)> {
        self.check_input(input)?;
        let mut ws = Workspace::default();
        let mut grads = Gradients::zeros_like(self);
        let out = self.forward_ws(input, &mut ws);
        let err = out - target;
        self.backward_ws(2.0 * err, &mut ws, &mut grads);
        Ok((err * err, grads))
    }

    /// Mean squared error over a batch, accumulating its gradient into `grads` (cleared first).
    pub(crate) fn batch_step_gradients(
        &self,
        inputs: &[&[f64]],
        targets: &[f64],
        ws: &mut Workspace,
        grads: &mut Gradients,
    ) -> f64 {
        grads.clear();
        let scale = 1.0 / inputs.len() as f64;
        let mut loss = 0.0;
        for (x, &t) in inputs.iter().zip(targets) {
            let err = self.forward_ws(x, ws) - t;
            loss += err * err;
            self.backward_ws(2.0 * err * scale, ws, grads);
        }
        loss * scale
    }

    pub(crate) fn apply(&mut self, grads: &Gradients, lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, d) in l.weights.iter_mut().zip(&g.weights) {
                *w -= lr * d;
            }
            for (b, d) in l.biases.iter_mut().zip(&g.biases) {
                *b -= lr * d;
            }
        }
    }

    pub fn mse(&self, inputs: &[Vec<f64>], targets: &[f64]) -> f64 {
        let mut ws = Workspace::default();
        let total: f64 = inputs
            .iter()
            .zip(targets)
            .map(|(x, t)| (self.forward_ws(x, &mut ws) - t).powi(2))
            .sum();
        total / inputs.len().max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(w_hidden: f64, b_hidden: f64, w_out: f64, b_out: f64) -> RegressionModel {
        let spec = LayerSpec::new(1, vec![1]).unwrap();
        RegressionModel::from_layers(
            spec,
            vec![
                Dense {
                    in_dim: 1,
                    out_dim: 1,
                    weights: vec![w_hidden],
                    biases: vec![b_hidden],
                },
                Dense {
                    in_dim: 1,
                    out_dim: 1,
                    weights: vec![w_out],
                    biases: vec![b_out],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn hand_forward_passes() {
        let m = tiny(2.0, 1.0, 1.0, 0.0);
        assert_eq!(m.forward(&[3.0]).unwrap(), 7.0);
        assert_eq!(m.forward(&[-3.0]).unwrap(), 0.0);
    }

    #[test]
    fn zero_network_outputs_bias() {
        let mut m = RegressionModel::new(LayerSpec::new(2, vec![5]).unwrap(), 3).unwrap();
        for l in &mut m.layers {
            l.weights.fill(0.0);
        }
        m.layers[1].biases[0] = -1.25;
        for x in [[0.0, 0.0], [10.0, -3.0], [-7.5, 2.0]] {
            assert_eq!(m.forward(&x).unwrap(), -1.25);
        }
    }

    #[test]
    fn init_is_seeded_and_shaped() {
        let spec = ModelVariant::R1.spec(1);
        let a = RegressionModel::new(spec.clone(), 11).unwrap();
        let b = RegressionModel::new(spec.clone(), 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, RegressionModel::new(spec, 12).unwrap());
        let shapes: Vec<_> = a.layers.iter().map(|l| (l.in_dim, l.out_dim)).collect();
        assert_eq!(
            shapes,
            vec![
                (1, 100),
                (100, 80),
                (80, 60),
                (60, 40),
                (40, 40),
                (40, 20),
                (20, 1)
            ]
        );
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        for l in &a.layers {
            let limit = (6.0 / l.in_dim as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= limit));
        }
    }

    #[test]
    fn empty_hidden_rejected() {
        assert!(LayerSpec::new(1, vec![]).is_err());
        assert!(LayerSpec::new(1, vec![4, 0]).is_err());
        assert!(RegressionModel::new(
            LayerSpec {
                input_dim: 1,
                hidden_sizes: vec![]
            },
            0
        )
        .is_err());
    }

    #[test]
    fn input_width_checked() {
        let m = RegressionModel::new(LayerSpec::new(2, vec![3]).unwrap(), 0).unwrap();
        assert!(matches!(m.forward(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn variant_names_parse() {
        for v in ModelVariant::ALL {
            assert_eq!(v.name().parse::<ModelVariant>().unwrap(), v);
        }
        assert!("R7".parse::<ModelVariant>().is_err());
        assert_eq!(ModelVariant::R3.hidden_sizes().len(), 10);
    }

    #[test]
    fn param_indexing_matches_flat_order() {
        let mut m = RegressionModel::new(LayerSpec::new(2, vec![3, 2]).unwrap(), 5).unwrap();
        let flat = m.params();
        assert_eq!(flat.len(), m.param_count());
        for (i, v) in flat.iter().enumerate() {
            assert_eq!(*m.param_mut(i), *v);
        }
    }
}
