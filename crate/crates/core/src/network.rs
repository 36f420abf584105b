//! Fully connected feedforward network with logistic activations and
//! online error backpropagation.
//!
//! Weights for the connection between layer `k` and `k + 1` are stored
//! row-major with shape `(size(k + 1), size(k))`, i.e. one row per
//! destination neuron. Every non-input neuron also owns a bias weight fed
//! by a constant unit input.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier written to model files for the coefficient initializer.
///
/// `ChaCha8Rng::seed_from_u64(seed)`; each coefficient takes the top 53 bits
/// of one `next_u64()` as a uniform value in `[0, 1)` and shifts it to
/// `[-0.5, 0.5)`. Layers are visited in order, weights (row-major) before
/// biases.
pub const PRNG_ALGORITHM: &str = "chacha8-seed_from_u64/u53-uniform[-0.5,0.5)";

/// Hidden layer size suggested by the `2N + 1` rule of thumb.
pub fn heuristic_hidden_size(input_count: usize) -> usize {
    2 * input_count + 1
}

/// Logistic sigmoid.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Layer sizes of a multilayer perceptron.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetworkTopology {
    input_count: usize,
    hidden_layer_sizes: Vec<usize>,
    output_count: usize,
}

impl NetworkTopology {
    pub fn new(input_count: usize, hidden_layer_sizes: Vec<usize>, output_count: usize) -> Result<Self> {
        if input_count == 0 || output_count == 0 {
            return Err(Error::InvalidTopology(
                "input and output counts must be at least 1".into(),
            ));
        }
        if hidden_layer_sizes.is_empty() {
            return Err(Error::InvalidTopology("at least one hidden layer is required".into()));
        }
        if hidden_layer_sizes.contains(&0) {
            return Err(Error::InvalidTopology("hidden layer sizes must be at least 1".into()));
        }
        Ok(Self {
            input_count,
            hidden_layer_sizes,
            output_count,
        })
    }

    /// Five lagged inputs, two hidden layers of equal width, one output.
    pub fn two_hidden(input_count: usize, hidden: usize) -> Result<Self> {
        Self::new(input_count, vec![hidden, hidden], 1)
    }

    /// 5:11:11:1, hidden width from the `2N + 1` heuristic.
    pub fn baseline() -> Self {
        let hidden = heuristic_hidden_size(5);
        Self::two_hidden(5, hidden).expect("static topology is valid")
    }

    /// 5:21:21:1, the tuned configuration.
    pub fn tuned() -> Self {
        Self::two_hidden(5, 21).expect("static topology is valid")
    }

    pub fn input_count(&self) -> usize {
        self.input_count
    }

    pub fn hidden_layer_sizes(&self) -> &[usize] {
        &self.hidden_layer_sizes
    }

    pub fn output_count(&self) -> usize {
        self.output_count
    }

    /// All layer sizes from input to output.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_layer_sizes.len() + 2);
        sizes.push(self.input_count);
        sizes.extend_from_slice(&self.hidden_layer_sizes);
        sizes.push(self.output_count);
        sizes
    }

    /// Total number of trainable coefficients (weights and biases).
    pub fn coefficient_count(&self) -> usize {
        self.layer_sizes()
            .windows(2)
            .map(|pair| pair[1] * pair[0] + pair[1])
            .sum()
    }
}

impl Default for NetworkTopology {
    fn default() -> Self {
        Self::tuned()
    }
}

impl fmt::Display for NetworkTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.layer_sizes().iter().map(|s| s.to_string()).collect();
        f.write_str(&sizes.join(":"))
    }
}

impl FromStr for NetworkTopology {
    type Err = Error;

    /// Parses the colon notation, e.g. `5:21:21:1`.
    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .split(':')
            .map(|part| part.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidTopology(format!("{s:?}: {e}")))?;
        if sizes.len() < 3 {
            return Err(Error::InvalidTopology(format!(
                "{s:?}: need input, at least one hidden layer, and output"
            )));
        }
        let n = sizes.len();
        Self::new(sizes[0], sizes[1..n - 1].to_vec(), sizes[n - 1])
    }
}

impl Serialize for NetworkTopology {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NetworkTopology {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Weights and biases between two adjacent layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs × inputs`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if weights.len() != inputs * outputs {
            return Err(Error::DimensionMismatch {
                what: "layer weights",
                expected: inputs * outputs,
                found: weights.len(),
            });
        }
        if biases.len() != outputs {
            return Err(Error::DimensionMismatch {
                what: "layer biases",
                expected: outputs,
                found: biases.len(),
            });
        }
        if !weights.iter().chain(&biases).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("layer coefficients".into()));
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            biases,
        })
    }

    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    /// Weight from source neuron `from` to destination neuron `to`.
    pub fn weight(&self, to: usize, from: usize) -> f64 {
        self.weights[to * self.inputs + from]
    }

    fn activate(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.biases)
                .map(|(row, bias)| {
                    let sum: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
                    sigmoid(sum + bias)
                }),
        );
    }
}

/// Per-layer activations from one forward pass, input layer first.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    layers: Vec<Vec<f64>>,
}

impl Activations {
    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("activations are never empty")
    }
}

/// A buffer shaped like a network's coefficients. Used for gradients and
/// for the previous-update (momentum) state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl CoefficientSet {
    pub fn zeros_like(network: &MlpNetwork) -> Self {
        Self {
            weights: network.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: network.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    fn matches(&self, network: &MlpNetwork) -> bool {
        self.weights.len() == network.layers.len()
            && self.biases.len() == network.layers.len()
            && network
                .layers
                .iter()
                .enumerate()
                .all(|(k, l)| self.weights[k].len() == l.weights.len() && self.biases[k].len() == l.biases.len())
    }
}

/// A multilayer perceptron: topology plus the full coefficient state.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    topology: NetworkTopology,
    layers: Vec<Layer>,
}

impl MlpNetwork {
    /// Seeded initialization, see [`PRNG_ALGORITHM`].
    pub fn init(topology: &NetworkTopology, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        let layers = topology
            .layer_sizes()
            .windows(2)
            .map(|pair| {
                let (inputs, outputs) = (pair[0], pair[1]);
                let weights = (0..inputs * outputs).map(|_| draw()).collect();
                let biases = (0..outputs).map(|_| draw()).collect();
                Layer {
                    inputs,
                    outputs,
                    weights,
                    biases,
                }
            })
            .collect();
        Self {
            topology: topology.clone(),
            layers,
        }
    }

    /// A network with every coefficient set to zero.
    pub fn zeros(topology: &NetworkTopology) -> Self {
        let layers = topology
            .layer_sizes()
            .windows(2)
            .map(|pair| Layer::zeros(pair[0], pair[1]))
            .collect();
        Self {
            topology: topology.clone(),
            layers,
        }
    }

    /// Assembles a network from explicit layers, checking them against the topology.
    pub fn from_layers(topology: NetworkTopology, layers: Vec<Layer>) -> Result<Self> {
        let sizes = topology.layer_sizes();
        if layers.len() != sizes.len() - 1 {
            return Err(Error::DimensionMismatch {
                what: "layer count",
                expected: sizes.len() - 1,
                found: layers.len(),
            });
        }
        for (layer, pair) in layers.iter().zip(sizes.windows(2)) {
            if layer.inputs != pair[0] {
                return Err(Error::DimensionMismatch {
                    what: "layer inputs",
                    expected: pair[0],
                    found: layer.inputs,
                });
            }
            if layer.outputs != pair[1] {
                return Err(Error::DimensionMismatch {
                    what: "layer outputs",
                    expected: pair[1],
                    found: layer.outputs,
                });
            }
        }
        Ok(Self { topology, layers })
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.topology.input_count {
            return Err(Error::DimensionMismatch {
                what: "network input",
                expected: self.topology.input_count,
                found: input.len(),
            });
        }
        if !input.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(())
    }

    /// Forward pass retaining every layer's activations.
    pub fn forward(&self, input: &[f64]) -> Result<Activations> {
        self.check_input(input)?;
        let mut layers = Vec::with_capacity(self.layers.len() + 1);
        layers.push(input.to_vec());
        for layer in &self.layers {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.activate(layers.last().expect("non-empty"), &mut out);
            layers.push(out);
        }
        Ok(Activations { layers })
    }

    /// Output layer activations only.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut current = input.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.activate(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    fn check_target(&self, target: &[f64]) -> Result<()> {
        if target.len() != self.topology.output_count {
            return Err(Error::DimensionMismatch {
                what: "network target",
                expected: self.topology.output_count,
                found: target.len(),
            });
        }
        if !target.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("network target".into()));
        }
        Ok(())
    }

    /// Back-propagated error terms `δ = -∂E/∂net` per non-input layer, with
    /// `E = ½·Σ(target − output)²`. Returns them with the activations and
    /// the squared error `Σ(target − output)²`.
    fn deltas(&self, input: &[f64], target: &[f64]) -> Result<(Activations, Vec<Vec<f64>>, f64)> {
        self.check_target(target)?;
        let acts = self.forward(input)?;
        let n = self.layers.len();
        let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); n];

        let output = acts.output();
        let mut squared_error = 0.0;
        deltas[n - 1] = output
            .iter()
            .zip(target)
            .map(|(&o, &t)| {
                squared_error += (t - o) * (t - o);
                (t - o) * o * (1.0 - o)
            })
            .collect();

        for k in (0..n - 1).rev() {
            let downstream = &self.layers[k + 1];
            let act = &acts.layers[k + 1];
            let next = &deltas[k + 1];
            deltas[k] = (0..downstream.inputs)
                .map(|j| {
                    let back: f64 = next.iter().enumerate().map(|(i, d)| d * downstream.weight(i, j)).sum();
                    act[j] * (1.0 - act[j]) * back
                })
                .collect();
        }
        Ok((acts, deltas, squared_error))
    }

    /// Gradient of `E = ½·Σ(target − output)²` with respect to every coefficient.
    /// Returns `(Σ(target − output)², ∂E/∂coefficient)`.
    pub fn gradients(&self, input: &[f64], target: &[f64]) -> Result<(f64, CoefficientSet)> {
        let (acts, deltas, squared_error) = self.deltas(input, target)?;
        let mut grads = CoefficientSet::zeros_like(self);
        for (k, layer) in self.layers.iter().enumerate() {
            let upstream = &acts.layers[k];
            for (i, d) in deltas[k].iter().enumerate() {
                let row = &mut grads.weights[k][i * layer.inputs..(i + 1) * layer.inputs];
                for (g, a) in row.iter_mut().zip(upstream) {
                    *g = -d * a;
                }
                grads.biases[k][i] = -d;
            }
        }
        Ok((squared_error, grads))
    }

    /// One online gradient-descent update on a single pattern.
    ///
    /// Each coefficient moves by `Δw = η·δ·a_upstream + μ·Δw_prev`; `velocity`
    /// holds `Δw_prev` on entry and the applied `Δw` on exit. Returns the
    /// squared error measured before the update.
    pub fn backprop_step(
        &mut self,
        input: &[f64],
        target: &[f64],
        learning_rate: f64,
        momentum: f64,
        velocity: &mut CoefficientSet,
    ) -> Result<f64> {
        if !velocity.matches(self) {
            return Err(Error::DimensionMismatch {
                what: "velocity buffer",
                expected: self.topology.coefficient_count(),
                found: velocity.weights.iter().chain(&velocity.biases).map(Vec::len).sum(),
            });
        }
        let (acts, deltas, squared_error) = self.deltas(input, target)?;
        for (k, layer) in self.layers.iter_mut().enumerate() {
            let upstream = &acts.layers[k];
            let inputs = layer.inputs;
            for (i, &d) in deltas[k].iter().enumerate() {
                let span = i * inputs..(i + 1) * inputs;
                let rows = layer.weights[span.clone()]
                    .iter_mut()
                    .zip(&mut velocity.weights[k][span]);
                for ((w, v), a) in rows.zip(upstream) {
                    *v = learning_rate * d * a + momentum * *v;
                    *w += *v;
                }
                let v = &mut velocity.biases[k][i];
                *v = learning_rate * d + momentum * *v;
                layer.biases[i] += *v;
            }
        }
        Ok(squared_error)
    }
}
