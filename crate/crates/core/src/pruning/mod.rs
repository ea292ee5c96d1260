//! Neuron saliency criteria and the two removal algorithms.
//!
//! Every criterion produces a [`RankEntry`] per active hidden neuron holding
//! `ΔE`, the (measured or estimated) increase in total error if that neuron is
//! switched off. The best removal candidate is the one with the smallest `ΔE`.

mod algorithms;
mod stop;
mod trace;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::Samples;
use crate::grad2::{second_order_backprop, NeuronGradients};
use crate::net::{GainProbe, Network, NeuronId};
use crate::{Error, Result};

pub use algorithms::{
    iterative_reranking, iterative_reranking_with, single_overall_ranking,
    single_overall_ranking_with, Algorithm, PruneOptions,
};
pub use stop::StoppingRule;
pub use trace::{PruneStep, PruneTrace, TraceHeader};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriterionKind {
    BruteForce,
    Taylor1,
    Taylor2,
}

impl CriterionKind {
    pub fn short_name(self) -> &'static str {
        match self {
            CriterionKind::BruteForce => "brute",
            CriterionKind::Taylor1 => "t1",
            CriterionKind::Taylor2 => "t2",
        }
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" | "brute_force" | "brute-force" => Ok(CriterionKind::BruteForce),
            "t1" | "taylor1" => Ok(CriterionKind::Taylor1),
            "t2" | "taylor2" => Ok(CriterionKind::Taylor2),
            other => Err(Error::InvalidArgument(format!(
                "unknown criterion {other:?} (expected brute, t1 or t2)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ThresholdMode {
    #[default]
    None,
    Mean,
    Median,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::None => "none",
            ThresholdMode::Mean => "mean",
            ThresholdMode::Median => "median",
        })
    }
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ThresholdMode::None),
            "mean" => Ok(ThresholdMode::Mean),
            "median" => Ok(ThresholdMode::Median),
            other => Err(Error::InvalidArgument(format!(
                "unknown threshold mode {other:?} (expected none, mean or median)"
            ))),
        }
    }
}

/// A ranking criterion. Thresholding only affects the Taylor criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Criterion {
    pub kind: CriterionKind,
    pub threshold: ThresholdMode,
}

impl Criterion {
    pub const BRUTE_FORCE: Criterion = Criterion::new(CriterionKind::BruteForce);
    pub const TAYLOR1: Criterion = Criterion::new(CriterionKind::Taylor1);
    pub const TAYLOR2: Criterion = Criterion::new(CriterionKind::Taylor2);

    pub const fn new(kind: CriterionKind) -> Self {
        Criterion {
            kind,
            threshold: ThresholdMode::None,
        }
    }

    pub fn with_threshold(self, threshold: ThresholdMode) -> Self {
        Criterion { threshold, ..self }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.threshold) {
            (CriterionKind::BruteForce, _) | (_, ThresholdMode::None) => write!(f, "{}", self.kind),
            (kind, t) => write!(f, "{kind}+{t}"),
        }
    }
}

/// `ΔE` for one hidden neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankEntry {
    pub neuron: NeuronId,
    pub delta_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaylorOrder {
    First,
    Second,
}

/// Taylor estimates of `ΔE` for every active hidden neuron:
/// `-O·∂E/∂O` (first order) or `-O·∂E/∂O + ½·O²·∂²E/∂O²` (second order),
/// summed over the samples the gradients were collected on.
///
/// Fails with [`Error::StaleGradients`] if `net` changed after `grads` were computed.
pub fn delta_e_taylor(grads: &NeuronGradients, net: &Network, order: TaylorOrder) -> Result<Vec<RankEntry>> {
    if grads.generation() != net.generation() {
        return Err(Error::StaleGradients {
            computed: grads.generation(),
            current: net.generation(),
        });
    }
    net.active_hidden_neurons()
        .into_iter()
        .map(|id| {
            let g = grads
                .get(id)
                .ok_or_else(|| Error::Invariant(format!("no gradients for neuron {id}")))?;
            let delta_e = match order {
                TaylorOrder::First => g.delta_e1,
                TaylorOrder::Second => g.delta_e2,
            };
            if !delta_e.is_finite() {
                return Err(Error::Numeric(format!("non-finite ΔE estimate for neuron {id}")));
            }
            Ok(RankEntry { neuron: id, delta_e })
        })
        .collect()
}

/// Caps every `ΔE` above the mean (or median) of all entries at that value.
pub fn apply_threshold(entries: &[RankEntry], mode: ThresholdMode) -> Vec<RankEntry> {
    let mut out = entries.to_vec();
    if entries.is_empty() {
        return out;
    }
    let cap = match mode {
        ThresholdMode::None => return out,
        ThresholdMode::Mean => entries.iter().map(|e| e.delta_e).sum::<f64>() / entries.len() as f64,
        ThresholdMode::Median => {
            let mut v: Vec<f64> = entries.iter().map(|e| e.delta_e).collect();
            v.sort_by(f64::total_cmp);
            let n = v.len();
            if n % 2 == 1 {
                v[n / 2]
            } else {
                0.5 * (v[n / 2 - 1] + v[n / 2])
            }
        }
    };
    for e in &mut out {
        if e.delta_e > cap {
            e.delta_e = cap;
        }
    }
    out
}

/// Measured `ΔE = E(gain_k = 0) - E` for every active hidden neuron.
///
/// Candidates are evaluated in parallel from one shared forward pass; each
/// costs one pass over the layers downstream of the candidate. The network is
/// only read.
pub fn delta_e_brute_force(net: &Network, samples: &Samples) -> Result<Vec<RankEntry>> {
    let probe = GainProbe::new(net, samples)?;
    let base = probe.baseline().squared_error;
    net.active_hidden_neurons()
        .into_par_iter()
        .map(|id| {
            let e = probe.evaluate(id, 0.0)?.squared_error;
            Ok(RankEntry {
                neuron: id,
                delta_e: e - base,
            })
        })
        .collect()
}

/// Ascending `ΔE`; ties go to the lower (layer, index).
pub fn rank(entries: &[RankEntry]) -> Vec<RankEntry> {
    let mut out = entries.to_vec();
    out.sort_by(|a, b| a.delta_e.total_cmp(&b.delta_e).then(a.neuron.cmp(&b.neuron)));
    out
}

/// Source of `ΔE` scores for the pruning algorithms.
pub trait Ranker {
    /// Label written to trace headers.
    fn label(&self) -> String;

    /// One entry per active hidden neuron of `net`.
    fn score(&mut self, net: &Network, samples: &Samples) -> Result<Vec<RankEntry>>;
}

impl Ranker for Criterion {
    fn label(&self) -> String {
        self.to_string()
    }

    fn score(&mut self, net: &Network, samples: &Samples) -> Result<Vec<RankEntry>> {
        let order = match self.kind {
            CriterionKind::BruteForce => return delta_e_brute_force(net, samples),
            CriterionKind::Taylor1 => TaylorOrder::First,
            CriterionKind::Taylor2 => TaylorOrder::Second,
        };
        let grads = second_order_backprop(net, samples)?;
        let entries = delta_e_taylor(&grads, net, order)?;
        Ok(apply_threshold(&entries, self.threshold))
    }
}

/// Replays a fixed removal order, ignoring the data.
#[derive(Debug, Clone)]
pub struct FixedOrder(pub Vec<NeuronId>);

impl Ranker for FixedOrder {
    fn label(&self) -> String {
        "fixed".into()
    }

    fn score(&mut self, net: &Network, _samples: &Samples) -> Result<Vec<RankEntry>> {
        let active = net.active_hidden_neurons();
        let mut out: Vec<RankEntry> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, id)| active.contains(id))
            .map(|(pos, &id)| RankEntry {
                neuron: id,
                delta_e: pos as f64,
            })
            .collect();
        if out.len() != active.len() {
            return Err(Error::InvalidArgument(
                "fixed order must list every active hidden neuron".into(),
            ));
        }
        out.sort_by(|a, b| a.delta_e.total_cmp(&b.delta_e));
        Ok(out)
    }
}
