//! Sigmoid feedforward network with per-neuron output gains.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Samples, Task};
use crate::{Error, Matrix, Result};

/// Logistic sigmoid `1 / (1 + e^-x)`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Derivative of the sigmoid expressed through its output `o = σ(x)`.
#[inline]
pub fn sigmoid_prime(o: f64) -> f64 {
    o * (1.0 - o)
}

/// Second derivative of the sigmoid expressed through its output `o = σ(x)`.
#[inline]
pub fn sigmoid_double_prime(o: f64) -> f64 {
    sigmoid_prime(o) * (1.0 - 2.0 * o)
}

/// Address of a neuron: `layer` counts from the output layer (0) backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NeuronId {
    pub layer: usize,
    pub index: usize,
}

impl NeuronId {
    pub const fn new(layer: usize, index: usize) -> Self {
        NeuronId { layer, index }
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.layer, self.index)
    }
}

impl FromStr for NeuronId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("neuron must look like LAYER:INDEX, got {s:?}"));
        let (layer, index) = s.trim().split_once(':').ok_or_else(bad)?;
        Ok(NeuronId {
            layer: layer.trim().parse().map_err(|_| bad())?,
            index: index.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// Weights, biases and output gains of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    fan_in: usize,
    size: usize,
    /// Row-major `fan_in x size`: `weights[j * size + i]` connects source `j` to neuron `i`.
    weights: Vec<f64>,
    biases: Vec<f64>,
    gains: Vec<f64>,
}

impl LayerParams {
    /// A layer with all gains set to 1.
    pub fn new(fan_in: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        let gains = vec![1.0; biases.len()];
        Self::with_gains(fan_in, weights, biases, gains)
    }

    pub fn with_gains(
        fan_in: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        gains: Vec<f64>,
    ) -> Result<Self> {
        let size = biases.len();
        if weights.len() != fan_in * size {
            return Err(Error::Invariant(format!(
                "weight matrix {fan_in}x{size} needs {} entries, got {}",
                fan_in * size,
                weights.len()
            )));
        }
        if gains.len() != size {
            return Err(Error::Invariant(format!(
                "layer has {size} neurons but {} gains",
                gains.len()
            )));
        }
        if weights.iter().chain(&biases).chain(&gains).any(|v| !v.is_finite()) {
            return Err(Error::Invariant("layer parameters must be finite".into()));
        }
        if gains.iter().any(|&g| g < 0.0) {
            return Err(Error::Invariant("gains must be non-negative".into()));
        }
        Ok(LayerParams {
            fan_in,
            size,
            weights,
            biases,
            gains,
        })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn fan_in(&self) -> usize {
        self.fan_in
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    #[inline]
    pub fn weight(&self, source: usize, target: usize) -> f64 {
        self.weights[source * self.size + target]
    }

    /// Weights leaving source `j` towards every neuron of this layer.
    #[inline]
    pub fn source_row(&self, source: usize) -> &[f64] {
        &self.weights[source * self.size..(source + 1) * self.size]
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    /// `x_i = b_i + Σ_j w_ji·input_j`, `o_i = gain_i·σ(x_i)`.
    ///
    /// Every forward computation in the crate goes through this kernel so that
    /// cached and full evaluations agree bit for bit.
    #[inline]
    pub(crate) fn forward_into(&self, input: &[f64], x: &mut [f64], o: &mut [f64]) {
        debug_assert_eq!(input.len(), self.fan_in);
        x.copy_from_slice(&self.biases);
        for (j, &inp) in input.iter().enumerate() {
            // pruned neurons and blank pixels contribute nothing
            if inp == 0.0 {
                continue;
            }
            for (xi, &w) in x.iter_mut().zip(self.source_row(j)) {
                *xi += inp * w;
            }
        }
        for ((oi, &xi), &g) in o.iter_mut().zip(x.iter()).zip(&self.gains) {
            *oi = g * sigmoid(xi);
        }
    }
}

/// Total error and accuracy over a set of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    /// `½ Σ_samples Σ_i (O_i - t_i)²`.
    pub squared_error: f64,
    /// Classification: argmax hit rate. Regression: `1 - mean squared error`.
    pub accuracy: f64,
}

pub(crate) struct EvalAccumulator {
    task: Task,
    squared_error: f64,
    sum_sq: f64,
    correct: usize,
    samples: usize,
    outputs: usize,
}

impl EvalAccumulator {
    pub(crate) fn new(task: Task, outputs: usize) -> Self {
        EvalAccumulator {
            task,
            squared_error: 0.0,
            sum_sq: 0.0,
            correct: 0,
            samples: 0,
            outputs,
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, output: &[f64], target: &[f64]) {
        let e: f64 = output.iter().zip(target).map(|(o, t)| (o - t) * (o - t)).sum();
        self.squared_error += 0.5 * e;
        self.sum_sq += e;
        if self.task == Task::Classification && argmax(output) == argmax(target) {
            self.correct += 1;
        }
        self.samples += 1;
    }

    pub(crate) fn finish(self) -> EvalResult {
        let n = self.samples.max(1) as f64;
        let accuracy = match self.task {
            Task::Classification => self.correct as f64 / n,
            Task::Regression => {
                (1.0 - self.sum_sq / (n * self.outputs.max(1) as f64)).clamp(0.0, 1.0)
            }
        };
        EvalResult {
            squared_error: self.squared_error,
            accuracy,
        }
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-layer pre-activations and (gain-scaled) outputs recorded by a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTape {
    sizes: Vec<usize>,
    inputs_x: Vec<Vec<f64>>,
    outputs_o: Vec<Vec<f64>>,
    sample_count: usize,
}

impl ForwardTape {
    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn layer_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn layer_size(&self, layer: usize) -> usize {
        self.sizes[layer]
    }

    /// Pre-activation sums `x_i` of `layer` for one sample.
    #[inline]
    pub fn x(&self, layer: usize, sample: usize) -> &[f64] {
        let n = self.sizes[layer];
        &self.inputs_x[layer][sample * n..(sample + 1) * n]
    }

    /// Outputs `gain_i·σ(x_i)` of `layer` for one sample.
    #[inline]
    pub fn o(&self, layer: usize, sample: usize) -> &[f64] {
        let n = self.sizes[layer];
        &self.outputs_o[layer][sample * n..(sample + 1) * n]
    }
}

/// Fully connected sigmoid network; `layers[0]` is the output layer.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<LayerParams>,
    input_dim: usize,
    rng_seed: u64,
    metadata: BTreeMap<String, String>,
    generation: u64,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
            && self.input_dim == other.input_dim
            && self.rng_seed == other.rng_seed
            && self.metadata == other.metadata
    }
}

impl Network {
    /// Randomly initialized network.
    ///
    /// `hidden` lists hidden-layer sizes from the input side, e.g. `[50, 50]`.
    /// Weights are drawn uniformly from `[-r, r]` with `r = sqrt(6 / (fan_in + fan_out))`;
    /// biases start at zero.
    pub fn new(input_dim: usize, hidden: &[usize], output_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidArgument(
                "input and output dimensions must be positive".into(),
            ));
        }
        if hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::InvalidArgument(
                "need at least one hidden layer, each with at least one neuron".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes: Vec<usize> = hidden.to_vec();
        sizes.push(output_dim);
        let mut fan_in = input_dim;
        let mut forward_order = Vec::with_capacity(sizes.len());
        for &size in &sizes {
            let r = (6.0 / (fan_in + size) as f64).sqrt();
            let weights = (0..fan_in * size).map(|_| rng.random_range(-r..=r)).collect();
            forward_order.push(LayerParams::new(fan_in, weights, vec![0.0; size])?);
            fan_in = size;
        }
        forward_order.reverse();
        Self::from_layers(input_dim, forward_order, seed)
    }

    /// Assemble a network from layers listed output layer first.
    pub fn from_layers(input_dim: usize, layers: Vec<LayerParams>, rng_seed: u64) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Invariant(
                "a network needs an output layer and at least one hidden layer".into(),
            ));
        }
        for m in 0..layers.len() {
            let expected = if m + 1 < layers.len() {
                layers[m + 1].size()
            } else {
                input_dim
            };
            if layers[m].fan_in() != expected {
                return Err(Error::Invariant(format!(
                    "layer {m} takes {} inputs but its source provides {expected}",
                    layers[m].fan_in()
                )));
            }
        }
        if layers[0].gains().iter().any(|&g| g != 1.0) {
            return Err(Error::Invariant("output neurons must have gain 1".into()));
        }
        Ok(Network {
            layers,
            input_dim,
            rng_seed,
            metadata: BTreeMap::new(),
            generation: 0,
        })
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layer(&self, m: usize) -> &LayerParams {
        &self.layers[m]
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [LayerParams] {
        self.generation += 1;
        &mut self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[0].size()
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Mutation counter; bumped whenever parameters or gains change.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.metadata
    }

    /// Hidden-layer sizes listed from the input side.
    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[1..].iter().rev().map(LayerParams::size).collect()
    }

    /// Short architecture tag, e.g. `1x100` or `2x50`.
    pub fn architecture(&self) -> String {
        let sizes = self.hidden_sizes();
        if sizes.iter().all(|&s| s == sizes[0]) {
            format!("{}x{}", sizes.len(), sizes[0])
        } else {
            sizes.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
        }
    }

    pub fn hidden_neuron_count(&self) -> usize {
        self.layers[1..].iter().map(LayerParams::size).sum()
    }

    /// Every hidden neuron, ordered by (layer, index).
    pub fn hidden_neurons(&self) -> impl Iterator<Item = NeuronId> + '_ {
        self.layers
            .iter()
            .enumerate()
            .skip(1)
            .flat_map(|(m, l)| (0..l.size()).map(move |i| NeuronId::new(m, i)))
    }

    /// Hidden neurons with non-zero gain, ordered by (layer, index).
    pub fn active_hidden_neurons(&self) -> Vec<NeuronId> {
        self.hidden_neurons()
            .filter(|id| self.layers[id.layer].gains[id.index] != 0.0)
            .collect()
    }

    pub fn active_hidden_count(&self) -> usize {
        self.active_hidden_neurons().len()
    }

    fn check_hidden(&self, id: NeuronId) -> Result<()> {
        if id.layer == 0 {
            return Err(Error::InvalidArgument(format!(
                "neuron {id} is in the output layer, which cannot be gated"
            )));
        }
        if id.layer >= self.layers.len() || id.index >= self.layers[id.layer].size() {
            return Err(Error::InvalidArgument(format!("neuron {id} does not exist")));
        }
        Ok(())
    }

    pub fn gain(&self, id: NeuronId) -> Result<f64> {
        if id.layer >= self.layers.len() || id.index >= self.layers[id.layer].size() {
            return Err(Error::InvalidArgument(format!("neuron {id} does not exist")));
        }
        Ok(self.layers[id.layer].gains[id.index])
    }

    /// Replace the output gain of a hidden neuron. `alpha = 0` prunes it.
    ///
    /// A pruned neuron stays pruned: raising its gain again is rejected.
    pub fn set_gain(&mut self, id: NeuronId, alpha: f64) -> Result<()> {
        self.check_hidden(id)?;
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gain must be finite and non-negative, got {alpha}"
            )));
        }
        let current = self.layers[id.layer].gains[id.index];
        if current == 0.0 && alpha != 0.0 {
            return Err(Error::Invariant(format!(
                "neuron {id} is pruned and cannot be reactivated"
            )));
        }
        self.layers[id.layer].gains[id.index] = alpha;
        self.generation += 1;
        Ok(())
    }

    pub fn prune(&mut self, id: NeuronId) -> Result<()> {
        self.set_gain(id, 0.0)
    }

    /// Copy with every gain-0 hidden neuron physically removed.
    pub fn compact(&self) -> Network {
        let keep: Vec<Vec<usize>> = self
            .layers
            .iter()
            .map(|l| (0..l.size()).filter(|&i| l.gains[i] != 0.0).collect())
            .collect();
        let top = self.layers.len() - 1;
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(m, l)| {
                let sources: Vec<usize> = if m == top {
                    (0..self.input_dim).collect()
                } else {
                    keep[m + 1].clone()
                };
                let mut weights = Vec::with_capacity(sources.len() * keep[m].len());
                for &j in &sources {
                    weights.extend(keep[m].iter().map(|&i| l.weight(j, i)));
                }
                LayerParams {
                    fan_in: sources.len(),
                    size: keep[m].len(),
                    weights,
                    biases: keep[m].iter().map(|&i| l.biases[i]).collect(),
                    gains: keep[m].iter().map(|&i| l.gains[i]).collect(),
                }
            })
            .collect();
        Network {
            layers,
            input_dim: self.input_dim,
            rng_seed: self.rng_seed,
            metadata: self.metadata.clone(),
            generation: 0,
        }
    }

    fn check_inputs(&self, inputs: &Matrix) -> Result<()> {
        if inputs.cols() != self.input_dim {
            return Err(Error::Shape(format!(
                "network expects {} input features, batch has {}",
                self.input_dim,
                inputs.cols()
            )));
        }
        Ok(())
    }

    pub(crate) fn scratch(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.layers
            .iter()
            .map(|l| (vec![0.0; l.size()], vec![0.0; l.size()]))
            .collect()
    }

    /// Runs layers `from`, `from - 1`, ..., `0` on `input`, which must be the
    /// output of layer `from + 1` (or the raw features when `from` is the top
    /// layer). The network output ends up in `scratch[0].1`.
    #[inline]
    pub(crate) fn run_from(&self, from: usize, input: &[f64], scratch: &mut [(Vec<f64>, Vec<f64>)]) {
        for m in (0..=from).rev() {
            let (done, rest) = scratch.split_at_mut(m + 1);
            let (x, o) = &mut done[m];
            let src: &[f64] = if m == from { input } else { &rest[0].1 };
            self.layers[m].forward_into(src, x, o);
        }
    }

    /// Output vector for a single input.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "network expects {} input features, got {}",
                self.input_dim,
                input.len()
            )));
        }
        let mut scratch = self.scratch();
        self.run_from(self.layers.len() - 1, input, &mut scratch);
        Ok(scratch.swap_remove(0).1)
    }

    /// Forward pass over a batch, recording every layer.
    pub fn forward(&self, inputs: &Matrix) -> Result<ForwardTape> {
        self.check_inputs(inputs)?;
        let n = inputs.rows();
        let sizes: Vec<usize> = self.layers.iter().map(LayerParams::size).collect();
        let mut xs: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s * n]).collect();
        let mut os: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s * n]).collect();
        let mut scratch = self.scratch();
        for (s, input) in inputs.iter_rows().enumerate() {
            self.run_from(self.layers.len() - 1, input, &mut scratch);
            for (m, (x, o)) in scratch.iter().enumerate() {
                let k = sizes[m];
                xs[m][s * k..(s + 1) * k].copy_from_slice(x);
                os[m][s * k..(s + 1) * k].copy_from_slice(o);
            }
        }
        Ok(ForwardTape {
            sizes,
            inputs_x: xs,
            outputs_o: os,
            sample_count: n,
        })
    }

    /// Total squared error and accuracy over `samples`.
    pub fn evaluate(&self, samples: &Samples) -> Result<EvalResult> {
        self.check_samples(samples)?;
        let mut acc = EvalAccumulator::new(samples.task, self.output_dim());
        let mut scratch = self.scratch();
        for (input, target) in samples.inputs.iter_rows().zip(samples.targets.iter_rows()) {
            self.run_from(self.layers.len() - 1, input, &mut scratch);
            acc.add(&scratch[0].1, target);
        }
        Ok(acc.finish())
    }

    pub(crate) fn check_samples(&self, samples: &Samples) -> Result<()> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("cannot evaluate on an empty split".into()));
        }
        self.check_inputs(&samples.inputs)?;
        if samples.targets.cols() != self.output_dim() {
            return Err(Error::Shape(format!(
                "network has {} outputs, targets have {}",
                self.output_dim(),
                samples.targets.cols()
            )));
        }
        Ok(())
    }
}

/// Evaluates the network with one hidden neuron's gain overridden, reusing a
/// recorded forward pass so only the layers downstream of that neuron are
/// recomputed.
///
/// Results are bit-identical to [`Network::evaluate`] on a copy of the network
/// carrying the overridden gain. The network itself is never modified.
pub struct GainProbe<'a> {
    net: &'a Network,
    samples: &'a Samples,
    tape: ForwardTape,
    baseline: EvalResult,
}

impl<'a> GainProbe<'a> {
    pub fn new(net: &'a Network, samples: &'a Samples) -> Result<Self> {
        net.check_samples(samples)?;
        let tape = net.forward(&samples.inputs)?;
        let mut acc = EvalAccumulator::new(samples.task, net.output_dim());
        for (s, target) in samples.targets.iter_rows().enumerate() {
            acc.add(tape.o(0, s), target);
        }
        Ok(GainProbe {
            net,
            samples,
            tape,
            baseline: acc.finish(),
        })
    }

    /// Evaluation of the untouched network.
    pub fn baseline(&self) -> EvalResult {
        self.baseline
    }

    pub fn tape(&self) -> &ForwardTape {
        &self.tape
    }

    /// Evaluation with neuron `id`'s gain replaced by `alpha`.
    pub fn evaluate(&self, id: NeuronId, alpha: f64) -> Result<EvalResult> {
        self.net.check_hidden(id)?;
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gain must be finite and non-negative, got {alpha}"
            )));
        }
        let m = id.layer;
        let mut acc = EvalAccumulator::new(self.samples.task, self.net.output_dim());
        let mut scratch = self.net.scratch();
        let mut layer_out = vec![0.0; self.tape.layer_size(m)];
        for (s, target) in self.samples.targets.iter_rows().enumerate() {
            layer_out.copy_from_slice(self.tape.o(m, s));
            layer_out[id.index] = alpha * sigmoid(self.tape.x(m, s)[id.index]);
            self.net.run_from(m - 1, &layer_out, &mut scratch);
            acc.add(&scratch[0].1, target);
        }
        Ok(acc.finish())
    }
}
