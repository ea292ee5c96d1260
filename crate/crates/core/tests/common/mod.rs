//! Reference computations shared by the integration tests.
//!
//! Everything here is written against the public parameter accessors only and
//! deliberately shares no code with the library's forward or backward passes.

#![allow(dead_code)]

use neuroprune::data::{Samples, Task};
use neuroprune::{LayerParams, Matrix, Network, NeuronId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H1: f64 = 1e-5;
pub const H2: f64 = 1e-3;
/// Absolute magnitude below which first derivatives are compared absolutely.
pub const FLOOR1: f64 = 1e-7;
/// Absolute magnitude below which second derivatives are compared absolutely.
pub const FLOOR2: f64 = 1e-6;

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Output-layer values for one input. `hook(layer, neuron, o)` may replace any
/// neuron's output before it is consumed downstream.
pub fn naive_forward(net: &Network, input: &[f64], hook: &dyn Fn(usize, usize, f64) -> f64) -> Vec<f64> {
    let mut prev = input.to_vec();
    for m in (0..net.layer_count()).rev() {
        let l = net.layer(m);
        let mut out = Vec::with_capacity(l.size());
        for i in 0..l.size() {
            let mut x = l.biases()[i];
            for (j, p) in prev.iter().enumerate() {
                x += l.weights()[j * l.size() + i] * p;
            }
            out.push(hook(m, i, l.gains()[i] * logistic(x)));
        }
        prev = out;
    }
    prev
}

/// All neuron outputs for one input, indexed `[layer][neuron]`.
pub fn naive_activations(net: &Network, input: &[f64]) -> Vec<Vec<f64>> {
    let mut acts = vec![Vec::new(); net.layer_count()];
    let mut prev = input.to_vec();
    for m in (0..net.layer_count()).rev() {
        let l = net.layer(m);
        let out: Vec<f64> = (0..l.size())
            .map(|i| {
                let x = l.biases()[i] + prev.iter().enumerate().map(|(j, p)| l.weights()[j * l.size() + i] * p).sum::<f64>();
                l.gains()[i] * logistic(x)
            })
            .collect();
        acts[m] = out.clone();
        prev = out;
    }
    acts
}

pub fn naive_error(net: &Network, samples: &Samples) -> f64 {
    samples
        .inputs
        .iter_rows()
        .zip(samples.targets.iter_rows())
        .map(|(x, t)| {
            let o = naive_forward(net, x, &|_, _, o| o);
            0.5 * o.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        })
        .sum()
}

/// `E(a) - E(b)` for outputs `a`, `b` against target `t`, without cancellation.
fn error_difference(a: &[f64], b: &[f64], t: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(t)
        .map(|((a, b), t)| 0.5 * (a - b) * (a + b - 2.0 * t))
        .sum()
}

fn shifted(net: &Network, input: &[f64], id: NeuronId, h: f64) -> Vec<f64> {
    naive_forward(net, input, &|m, i, o| if m == id.layer && i == id.index { o + h } else { o })
}

/// Central difference of `E` under an additive shift of `O_k` in every sample.
pub fn fd_first(net: &Network, samples: &Samples, id: NeuronId) -> f64 {
    let mut d = 0.0;
    for (x, t) in samples.inputs.iter_rows().zip(samples.targets.iter_rows()) {
        d += error_difference(&shifted(net, x, id, H1), &shifted(net, x, id, -H1), t);
    }
    d / (2.0 * H1)
}

/// Central second difference of `E` under an additive shift of `O_k`.
pub fn fd_second(net: &Network, samples: &Samples, id: NeuronId) -> f64 {
    let mut d = 0.0;
    for (x, t) in samples.inputs.iter_rows().zip(samples.targets.iter_rows()) {
        let base = shifted(net, x, id, 0.0);
        d += error_difference(&shifted(net, x, id, H2), &base, t)
            + error_difference(&shifted(net, x, id, -H2), &base, t);
    }
    d / (H2 * H2)
}

/// Second difference of `E` summed over every path from `O_k` to an output,
/// where a shift travels only along the path's own edges.
///
/// This is the quantity a diagonal second-order backward pass accumulates: it
/// drops every cross term between two routes that meet again downstream. For a
/// neuron of the last hidden layer it coincides with [`fd_second`].
pub fn fd_second_path_isolated(net: &Network, samples: &Samples, id: NeuronId) -> f64 {
    let mut total = 0.0;
    for (x, t) in samples.inputs.iter_rows().zip(samples.targets.iter_rows()) {
        let mut acts = naive_activations(net, x);
        acts.push(x.to_vec());
        let mut path = vec![id.index];
        walk_paths(net, &acts, t, id.layer, &mut path, &mut total);
    }
    total
}

fn walk_paths(net: &Network, acts: &[Vec<f64>], t: &[f64], layer: usize, path: &mut Vec<usize>, total: &mut f64) {
    if layer == 0 {
        let f = |h: f64| path_output(net, acts, path, h);
        let r = *path.last().unwrap();
        let (a, b, c) = (f(H2), f(-H2), f(0.0));
        let d = 0.5 * (a - c) * (a + c - 2.0 * t[r]) + 0.5 * (b - c) * (b + c - 2.0 * t[r]);
        *total += d / (H2 * H2);
        return;
    }
    for next in 0..net.layer(layer - 1).size() {
        path.push(next);
        walk_paths(net, acts, t, layer - 1, path, total);
        path.pop();
    }
}

/// Value of the path's final output neuron when the first path neuron is
/// shifted by `h` and each change feeds only the next neuron on the path.
fn path_output(net: &Network, acts: &[Vec<f64>], path: &[usize], h: f64) -> f64 {
    let mut layer = path.len() - 1;
    let mut delta = h;
    let mut value = acts[layer][path[0]] + h;
    for w in path.windows(2) {
        let (src, dst) = (w[0], w[1]);
        let l = net.layer(layer - 1);
        let x = x_of(net, acts, layer - 1, dst);
        let new_o = l.gains()[dst] * logistic(x + l.weights()[src * l.size() + dst] * delta);
        delta = new_o - acts[layer - 1][dst];
        value = new_o;
        layer -= 1;
    }
    value
}

/// Pre-activation of a neuron recomputed from its inputs.
fn x_of(net: &Network, acts: &[Vec<f64>], layer: usize, i: usize) -> f64 {
    let l = net.layer(layer);
    let src = &acts[layer + 1];
    l.biases()[i] + src.iter().enumerate().map(|(j, p)| l.weights()[j * l.size() + i] * p).sum::<f64>()
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// A random regression network with up to three hidden layers of up to ten
/// neurons, non-trivial gains (some zero) and a random batch of up to 32 rows.
pub fn random_case(seed: u64) -> (Network, Samples) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input_dim = rng.random_range(1..=4);
    let output_dim = rng.random_range(1..=3);
    let depth = rng.random_range(1..=3);
    let mut sizes: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=10)).collect();
    sizes.push(output_dim);
    let mut layers = Vec::new();
    let mut fan_in = input_dim;
    for (pos, &size) in sizes.iter().enumerate() {
        let weights = (0..fan_in * size).map(|_| rng.random_range(-2.0..2.0)).collect();
        let biases = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gains = if pos + 1 == sizes.len() {
            vec![1.0; size]
        } else {
            (0..size)
                .map(|_| match rng.random_range(0..10) {
                    0 => 0.0,
                    1..=3 => rng.random_range(0.2..1.5),
                    _ => 1.0,
                })
                .collect()
        };
        layers.push(LayerParams::with_gains(fan_in, weights, biases, gains).unwrap());
        fan_in = size;
    }
    layers.reverse();
    let net = Network::from_layers(input_dim, layers, seed).unwrap();
    let n = rng.random_range(1..=32);
    let inputs: Vec<f64> = (0..n * input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let targets: Vec<f64> = (0..n * output_dim).map(|_| rng.random_range(0.0..1.0)).collect();
    let samples = Samples {
        inputs: Matrix::new(n, input_dim, inputs).unwrap(),
        targets: Matrix::new(n, output_dim, targets).unwrap(),
        task: Task::Regression,
    };
    (net, samples)
}
