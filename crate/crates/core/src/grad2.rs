//! Second-order backpropagation without weight updates.
//!
//! For every hidden neuron this accumulates, over a set of samples, the first
//! derivative `∂E/∂O` and the diagonal second derivative `∂²E/∂O²` of the total
//! error with respect to the neuron's output, together with the per-sample
//! Taylor estimates of the error change caused by forcing that output to zero.
//!
//! Starting from the output layer, where `∂E/∂O = O - t` and `∂²E/∂O² = 1`,
//! each layer converts output derivatives into input derivatives
//!
//! ```text
//! ∂E/∂x   = ∂E/∂O · σ'
//! ∂²E/∂x² = ∂²E/∂O² · σ'² + ∂E/∂O · σ''
//! ```
//!
//! and hands them to the layer below through the weights
//!
//! ```text
//! ∂E/∂O_j   = Σ_i ∂E/∂x_i · w_ji
//! ∂²E/∂O_j² = Σ_i ∂²E/∂x_i² · w_ji²
//! ```
//!
//! Off-diagonal Hessian terms are dropped throughout, so for neurons below the
//! last hidden layer `∂²E/∂O²` is the diagonal approximation rather than the
//! exact curvature.

use std::fmt::Write as _;

use crate::data::Samples;
use crate::net::{sigmoid, sigmoid_double_prime, sigmoid_prime, ForwardTape, LayerParams, Network, NeuronId};
use crate::{Error, Matrix, Result};

/// Accumulated derivatives and Taylor estimates for every hidden neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronGradients {
    neurons: Vec<NeuronId>,
    /// `Σ_samples ∂E/∂O_k`.
    pub g1: Vec<f64>,
    /// `Σ_samples ∂²E/∂O_k²` (diagonal term).
    pub g2: Vec<f64>,
    /// `Σ_samples -O_k·∂E/∂O_k`.
    pub delta_e1: Vec<f64>,
    /// `Σ_samples (-O_k·∂E/∂O_k + ½·O_k²·∂²E/∂O_k²)`.
    pub delta_e2: Vec<f64>,
    pub sample_count: usize,
    generation: u64,
}

/// One neuron's entry of [`NeuronGradients`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronGradient {
    pub g1: f64,
    pub g2: f64,
    pub delta_e1: f64,
    pub delta_e2: f64,
}

impl NeuronGradients {
    fn zeros(net: &Network) -> Self {
        let neurons: Vec<NeuronId> = net.hidden_neurons().collect();
        let n = neurons.len();
        NeuronGradients {
            neurons,
            g1: vec![0.0; n],
            g2: vec![0.0; n],
            delta_e1: vec![0.0; n],
            delta_e2: vec![0.0; n],
            sample_count: 0,
            generation: net.generation(),
        }
    }

    /// Hidden neurons covered, ordered by (layer, index).
    pub fn neurons(&self) -> &[NeuronId] {
        &self.neurons
    }

    /// Network generation these gradients were computed at.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn get(&self, id: NeuronId) -> Option<NeuronGradient> {
        let k = self.neurons.binary_search(&id).ok()?;
        Some(NeuronGradient {
            g1: self.g1[k],
            g2: self.g2[k],
            delta_e1: self.delta_e1[k],
            delta_e2: self.delta_e2[k],
        })
    }

    /// Adds another shard's sums into this one.
    pub fn merge(&mut self, other: &NeuronGradients) -> Result<()> {
        if self.neurons != other.neurons || self.generation != other.generation {
            return Err(Error::Invariant(
                "can only merge gradients of the same network state".into(),
            ));
        }
        for (a, b) in [
            (&mut self.g1, &other.g1),
            (&mut self.g2, &other.g2),
            (&mut self.delta_e1, &other.delta_e1),
            (&mut self.delta_e2, &other.delta_e2),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.sample_count += other.sample_count;
        Ok(())
    }

    /// One row per neuron: layer, index, g1, g2, delta_e1, delta_e2.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("layer\tneuron\tg1\tg2\tdelta_e1\tdelta_e2\n");
        for (k, id) in self.neurons.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                id.layer, id.index, self.g1[k], self.g2[k], self.delta_e1[k], self.delta_e2[k]
            );
        }
        out
    }
}

/// Per-sample `∂E/∂O` and `∂²E/∂O²` of the output layer: `O - t` and `1`.
pub fn output_layer_seeds(tape: &ForwardTape, targets: &Matrix) -> Result<(Matrix, Matrix)> {
    let n_out = tape.layer_size(0);
    if tape.sample_count() != targets.rows() || targets.cols() != n_out {
        return Err(Error::Shape(format!(
            "tape holds {} samples x {n_out} outputs, targets are {}x{}",
            tape.sample_count(),
            targets.rows(),
            targets.cols()
        )));
    }
    let mut first = Vec::with_capacity(targets.rows() * n_out);
    for (s, t) in targets.iter_rows().enumerate() {
        first.extend(tape.o(0, s).iter().zip(t).map(|(o, t)| o - t));
    }
    let second = vec![1.0; first.len()];
    Ok((
        Matrix::new(targets.rows(), n_out, first)?,
        Matrix::new(targets.rows(), n_out, second)?,
    ))
}

/// Converts output derivatives of a neuron into derivatives with respect to its
/// pre-activation `x`. `o` is the neuron's sigmoid output `σ(x)`.
#[inline]
pub fn input_derivatives(de_do: f64, d2e_do2: f64, o: f64) -> (f64, f64) {
    let d1 = sigmoid_prime(o);
    (de_do * d1, d2e_do2 * d1 * d1 + de_do * sigmoid_double_prime(o))
}

/// Pushes input derivatives of `layer` down to the outputs of its source layer.
/// Neurons of `layer` with zero gain are skipped.
pub fn propagate_layer(de_dx: &[f64], d2e_dx2: &[f64], layer: &LayerParams) -> Result<(Vec<f64>, Vec<f64>)> {
    if de_dx.len() != layer.size() || d2e_dx2.len() != layer.size() {
        return Err(Error::Shape(format!(
            "layer has {} neurons, got {} and {} derivatives",
            layer.size(),
            de_dx.len(),
            d2e_dx2.len()
        )));
    }
    let mut de_do = vec![0.0; layer.fan_in()];
    let mut d2e_do2 = vec![0.0; layer.fan_in()];
    propagate_into(de_dx, d2e_dx2, layer, &mut de_do, &mut d2e_do2);
    Ok((de_do, d2e_do2))
}

#[inline]
fn propagate_into(de_dx: &[f64], d2e_dx2: &[f64], layer: &LayerParams, de_do: &mut [f64], d2e_do2: &mut [f64]) {
    let gains = layer.gains();
    for j in 0..layer.fan_in() {
        let row = layer.source_row(j);
        let (mut s1, mut s2) = (0.0, 0.0);
        for i in 0..row.len() {
            if gains[i] > 0.0 {
                let w = row[i];
                s1 += de_dx[i] * w;
                s2 += d2e_dx2[i] * w * w;
            }
        }
        de_do[j] = s1;
        d2e_do2[j] = s2;
    }
}

/// Forward pass plus the first- and second-order backward recursions over
/// `samples`, accumulated per hidden neuron. The network is not modified.
pub fn second_order_backprop(net: &Network, samples: &Samples) -> Result<NeuronGradients> {
    net.check_samples(samples)?;
    let tape = net.forward(&samples.inputs)?;
    let mut grads = NeuronGradients::zeros(net);

    // offsets of each hidden layer inside the flat per-neuron vectors
    let mut offset = vec![0; net.layer_count()];
    for m in 2..net.layer_count() {
        offset[m] = offset[m - 1] + net.layer(m - 1).size();
    }

    let sizes: Vec<usize> = net.layers().iter().map(LayerParams::size).collect();
    let mut d_o: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
    let mut d2_o: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
    let mut d_x: Vec<f64> = Vec::new();
    let mut d2_x: Vec<f64> = Vec::new();

    for (s, target) in samples.targets.iter_rows().enumerate() {
        for (i, (o, t)) in tape.o(0, s).iter().zip(target).enumerate() {
            d_o[0][i] = o - t;
            d2_o[0][i] = 1.0;
        }
        for m in 0..net.layer_count() - 1 {
            let layer = net.layer(m);
            let gains = layer.gains();
            let xs = tape.x(m, s);
            d_x.clear();
            d2_x.clear();
            for i in 0..layer.size() {
                let g = gains[i];
                if g == 0.0 {
                    d_x.push(0.0);
                    d2_x.push(0.0);
                    continue;
                }
                // derivatives w.r.t. the unscaled output σ(x) pick up the gain
                let (a, b) = input_derivatives(g * d_o[m][i], g * g * d2_o[m][i], sigmoid(xs[i]));
                d_x.push(a);
                d2_x.push(b);
            }
            let below = m + 1;
            propagate_into(&d_x, &d2_x, layer, &mut d_o[below], &mut d2_o[below]);

            let below_gains = net.layer(below).gains();
            let outs = tape.o(below, s);
            for k in 0..sizes[below] {
                if below_gains[k] == 0.0 {
                    d_o[below][k] = 0.0;
                    d2_o[below][k] = 0.0;
                    continue;
                }
                let (g1, g2, o) = (d_o[below][k], d2_o[below][k], outs[k]);
                let slot = offset[below] + k;
                grads.g1[slot] += g1;
                grads.g2[slot] += g2;
                let linear = -o * g1;
                grads.delta_e1[slot] += linear;
                grads.delta_e2[slot] += linear + 0.5 * o * o * g2;
            }
        }
        grads.sample_count += 1;
    }
    Ok(grads)
}
