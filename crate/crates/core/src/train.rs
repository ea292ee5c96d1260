//! Minibatch stochastic gradient descent on `E = ½ Σ (O - t)²`.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::data::{Dataset, Samples};
use crate::net::{sigmoid, sigmoid_prime, EvalResult, Network};
use crate::{Error, Result};

pub const PRESETS: [&str; 5] = ["mnist-1x100", "mnist-2x50", "cosine-2x10", "cosine-2x50", "shape-2x50"];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Hidden-layer sizes from the input side.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop once training-split accuracy reaches this value.
    pub target_accuracy: Option<f64>,
}

impl TrainConfig {
    /// Named reference configuration.
    pub fn preset(name: &str) -> Result<Self> {
        let (hidden, learning_rate, epochs, batch_size) = match name {
            "mnist-1x100" => (vec![100], 2.0, 100, 20),
            "mnist-2x50" => (vec![50, 50], 2.0, 100, 20),
            "cosine-2x10" => (vec![10, 10], 2.0, 4000, 4),
            "cosine-2x50" => (vec![50, 50], 1.0, 2000, 4),
            "shape-2x50" => (vec![50, 50], 4.0, 600, 10),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown preset {other:?} (known: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(TrainConfig {
            hidden,
            learning_rate,
            epochs,
            batch_size,
            seed: 0,
            target_accuracy: None,
        })
    }

    /// Reads the `train.` keys: `preset` supplies defaults that the other
    /// keys (`hidden`, `learning_rate`, `epochs`, `batch_size`, `seed`,
    /// `target_accuracy`) override.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let mut tc = match cfg.get("train.preset") {
            Some(p) => Self::preset(p)?,
            None => TrainConfig {
                hidden: Vec::new(),
                learning_rate: 0.5,
                epochs: 100,
                batch_size: 10,
                seed: 0,
                target_accuracy: None,
            },
        };
        if let Some(h) = cfg.get("train.hidden") {
            tc.hidden = parse_hidden(h)?;
        }
        if let Some(v) = cfg.get_parsed("train.learning_rate")? {
            tc.learning_rate = v;
        }
        if let Some(v) = cfg.get_parsed("train.epochs")? {
            tc.epochs = v;
        }
        if let Some(v) = cfg.get_parsed("train.batch_size")? {
            tc.batch_size = v;
        }
        if let Some(v) = cfg.get_parsed("train.seed")? {
            tc.seed = v;
        }
        if let Some(v) = cfg.get_parsed("train.target_accuracy")? {
            tc.target_accuracy = Some(v);
        }
        tc.validate()?;
        Ok(tc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidArgument(
                "hidden layer sizes must be a nonempty list of positive counts".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if let Some(t) = self.target_accuracy {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidArgument(format!("target accuracy {t} is not in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Parses `2x50` (two layers of 50), `100`, or `10-20` / `10,20` (input side first).
pub fn parse_hidden(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("bad hidden layer spec {s:?}"));
    let num = |p: &str| p.trim().parse::<usize>().map_err(|_| bad());
    let sizes = if let Some((count, size)) = s.split_once('x') {
        vec![num(size)?; num(count)?]
    } else {
        s.split(['-', ',']).map(num).collect::<Result<Vec<_>>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(bad());
    }
    Ok(sizes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub train_eval: EvalResult,
    pub test_eval: EvalResult,
    /// Training-split squared error after each epoch.
    pub loss_curve: Vec<f64>,
    pub wall_time: Duration,
}

impl TrainReport {
    /// Tabular form. Wall time is left out so reruns produce identical files.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# neuroprune training report\n");
        let _ = writeln!(out, "# epochs_run={}", self.epochs_run);
        let _ = writeln!(out, "# train_sq_error={}", self.train_eval.squared_error);
        let _ = writeln!(out, "# train_accuracy={}", self.train_eval.accuracy);
        let _ = writeln!(out, "# test_sq_error={}", self.test_eval.squared_error);
        let _ = writeln!(out, "# test_accuracy={}", self.test_eval.accuracy);
        out.push_str("epoch\ttrain_sq_error\n");
        for (i, e) in self.loss_curve.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}", i + 1, e);
        }
        out
    }
}

/// Gradients of the summed error with respect to every weight and bias,
/// laid out like the network's layers (output layer first).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl WeightGradients {
    fn zeros(net: &Network) -> Self {
        WeightGradients {
            weights: net.layers().iter().map(|l| vec![0.0; l.weights().len()]).collect(),
            biases: net.layers().iter().map(|l| vec![0.0; l.size()]).collect(),
        }
    }

    fn clear(&mut self) {
        self.weights.iter_mut().chain(self.biases.iter_mut()).for_each(|v| v.fill(0.0));
    }
}

/// Exact `∂E/∂w` and `∂E/∂b` of `E` summed over `samples`.
pub fn first_order_weight_gradients(net: &Network, samples: &Samples) -> Result<WeightGradients> {
    net.check_samples(samples)?;
    let mut grads = WeightGradients::zeros(net);
    let mut work = Backprop::new(net);
    for s in 0..samples.len() {
        work.accumulate(net, samples.inputs.row(s), samples.targets.row(s), &mut grads);
    }
    Ok(grads)
}

/// Per-sample scratch buffers for the backward pass.
struct Backprop {
    acts: Vec<(Vec<f64>, Vec<f64>)>,
    d_o: Vec<Vec<f64>>,
    d_x: Vec<f64>,
}

impl Backprop {
    fn new(net: &Network) -> Self {
        Backprop {
            acts: net.scratch(),
            d_o: net.layers().iter().map(|l| vec![0.0; l.size()]).collect(),
            d_x: Vec::new(),
        }
    }

    fn accumulate(&mut self, net: &Network, input: &[f64], target: &[f64], grads: &mut WeightGradients) {
        let top = net.layer_count() - 1;
        net.run_from(top, input, &mut self.acts);
        for ((d, o), t) in self.d_o[0].iter_mut().zip(&self.acts[0].1).zip(target) {
            *d = o - t;
        }
        for m in 0..=top {
            let layer = net.layer(m);
            let gains = layer.gains();
            self.d_x.clear();
            for (i, &g) in gains.iter().enumerate() {
                // o = g·σ(x), so ∂o/∂x = g·σ'(x)
                let dx = if g == 0.0 {
                    0.0
                } else {
                    self.d_o[m][i] * g * sigmoid_prime(sigmoid(self.acts[m].0[i]))
                };
                self.d_x.push(dx);
            }
            let src: &[f64] = if m == top { input } else { &self.acts[m + 1].1 };
            let size = layer.size();
            let gw = &mut grads.weights[m];
            for (j, &a) in src.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (w, &dx) in gw[j * size..(j + 1) * size].iter_mut().zip(&self.d_x) {
                    *w += a * dx;
                }
            }
            for (b, &dx) in grads.biases[m].iter_mut().zip(&self.d_x) {
                *b += dx;
            }
            if m < top {
                let (_, below) = self.d_o.split_at_mut(m + 1);
                for (j, d) in below[0].iter_mut().enumerate() {
                    *d = layer.source_row(j).iter().zip(&self.d_x).map(|(w, dx)| w * dx).sum();
                }
            }
        }
    }
}

fn check_finite(net: &Network, loss: f64, epoch: usize) -> Result<()> {
    let params_finite = net
        .layers()
        .iter()
        .all(|l| l.weights().iter().chain(l.biases()).all(|v| v.is_finite()));
    if params_finite && loss.is_finite() {
        return Ok(());
    }
    Err(Error::Numeric(format!(
        "training diverged in epoch {epoch}: loss is {loss}, parameters finite: {params_finite}"
    )))
}

/// Trains a fresh network initialized from `cfg.seed`.
///
/// Each epoch visits the training split in a seeded shuffled order and steps
/// along the mean gradient of every minibatch. Fails with [`Error::Numeric`]
/// if the loss stops being finite.
pub fn train(cfg: &TrainConfig, data: &Dataset) -> Result<(Network, TrainReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut net = Network::new(data.input_dim(), &cfg.hidden, data.output_dim(), cfg.seed)?;
    let train_set = data.train();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut grads = WeightGradients::zeros(&net);
    let mut work = Backprop::new(&net);
    let mut loss_curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            for &s in batch {
                work.accumulate(&net, train_set.inputs.row(s), train_set.targets.row(s), &mut grads);
            }
            let step = cfg.learning_rate / batch.len() as f64;
            for (m, layer) in net.layers_mut().iter_mut().enumerate() {
                for (w, g) in layer.weights_mut().iter_mut().zip(&grads.weights[m]) {
                    *w -= step * g;
                }
                for (b, g) in layer.biases_mut().iter_mut().zip(&grads.biases[m]) {
                    *b -= step * g;
                }
            }
        }
        let eval = net.evaluate(train_set)?;
        check_finite(&net, eval.squared_error, epoch + 1)?;
        loss_curve.push(eval.squared_error);
        if cfg.target_accuracy.is_some_and(|t| eval.accuracy >= t) {
            break;
        }
    }

    let meta = net.metadata_mut();
    meta.insert("dataset".into(), data.name().into());
    meta.insert("dataset_id".into(), data.id().into());
    meta.insert("train.learning_rate".into(), cfg.learning_rate.to_string());
    meta.insert("train.batch_size".into(), cfg.batch_size.to_string());
    meta.insert("train.epochs_run".into(), loss_curve.len().to_string());
    meta.insert("train.seed".into(), cfg.seed.to_string());

    let report = TrainReport {
        epochs_run: loss_curve.len(),
        train_eval: net.evaluate(train_set)?,
        test_eval: net.evaluate(data.test())?,
        loss_curve,
        wall_time: start.elapsed(),
    };
    Ok((net, report))
}
