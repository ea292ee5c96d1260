use std::fmt;
use std::str::FromStr;

use super::stop::StoppingRule;
use super::trace::{PruneStep, PruneTrace, TraceHeader};
use super::{rank, Criterion, RankEntry, Ranker};
use crate::data::{Dataset, SplitKind};
use crate::net::Network;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Rank once, then remove in that fixed order.
    Single,
    /// Re-rank the remaining neurons before every removal.
    Iterative,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Single => "single",
            Algorithm::Iterative => "iterative",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Algorithm::Single),
            "iterative" => Ok(Algorithm::Iterative),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm {other:?} (expected single or iterative)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneOptions {
    pub stop: StoppingRule,
    /// Split the criterion is computed on. The test split is only ever recorded.
    pub ranking_split: SplitKind,
}

impl PruneOptions {
    pub fn new(stop: StoppingRule) -> Self {
        PruneOptions {
            stop,
            ranking_split: SplitKind::Train,
        }
    }
}

pub fn single_overall_ranking(
    net: &mut Network,
    data: &Dataset,
    mut criterion: Criterion,
    opts: &PruneOptions,
) -> Result<PruneTrace> {
    single_overall_ranking_with(net, data, &mut criterion, opts)
}

pub fn iterative_reranking(
    net: &mut Network,
    data: &Dataset,
    mut criterion: Criterion,
    opts: &PruneOptions,
) -> Result<PruneTrace> {
    iterative_reranking_with(net, data, &mut criterion, opts)
}

/// Scores every active hidden neuron once and removes them in ascending `ΔE`
/// order until the stopping rule fires. `net` is left pruned.
pub fn single_overall_ranking_with(
    net: &mut Network,
    data: &Dataset,
    ranker: &mut impl Ranker,
    opts: &PruneOptions,
) -> Result<PruneTrace> {
    let mut order: Option<std::vec::IntoIter<RankEntry>> = None;
    drive(net, data, ranker, opts, Algorithm::Single, |net, samples, ranker| {
        if order.is_none() {
            order = Some(rank(&ranker.score(net, samples)?).into_iter());
        }
        Ok(order.as_mut().and_then(Iterator::next))
    })
}

/// Re-scores the remaining neurons before every removal and removes the best
/// candidate. `net` is left pruned.
pub fn iterative_reranking_with(
    net: &mut Network,
    data: &Dataset,
    ranker: &mut impl Ranker,
    opts: &PruneOptions,
) -> Result<PruneTrace> {
    drive(net, data, ranker, opts, Algorithm::Iterative, |net, samples, ranker| {
        Ok(rank(&ranker.score(net, samples)?).into_iter().next())
    })
}

fn drive<R: Ranker>(
    net: &mut Network,
    data: &Dataset,
    ranker: &mut R,
    opts: &PruneOptions,
    algorithm: Algorithm,
    mut next: impl FnMut(&Network, &crate::data::Samples, &mut R) -> Result<Option<RankEntry>>,
) -> Result<PruneTrace> {
    if data.input_dim() != net.input_dim() || data.output_dim() != net.output_dim() {
        return Err(Error::Shape(format!(
            "dataset is {}→{} but the network is {}→{}",
            data.input_dim(),
            data.output_dim(),
            net.input_dim(),
            net.output_dim()
        )));
    }
    let ranking = data.split(opts.ranking_split);
    let test = data.test();
    let mut trace = PruneTrace::new(TraceHeader {
        criterion: ranker.label(),
        algorithm: algorithm.to_string(),
        dataset: data.name().to_string(),
        dataset_id: data.id().to_string(),
        architecture: net.architecture(),
        model_seed: net.rng_seed(),
        data_seed: data.seed(),
        ranking_split: opts.ranking_split,
        hidden_total: net.active_hidden_count(),
        layer_sizes: (1..net.layer_count()).map(|m| (m, net.layer(m).size())).collect(),
        start_test: net.evaluate(test)?,
        start_train_error: net.evaluate(ranking)?.squared_error,
    });
    while net.active_hidden_count() > 0 && !opts.stop.reached(&trace) {
        let Some(pick) = next(net, ranking, ranker)? else {
            break;
        };
        net.prune(pick.neuron)?;
        trace.steps.push(PruneStep {
            step: trace.steps.len() + 1,
            removed: pick.neuron,
            delta_e_claimed: pick.delta_e,
            eval_after: net.evaluate(test)?,
            train_error_after: net.evaluate(ranking)?.squared_error,
            remaining: net.active_hidden_count(),
        });
    }
    Ok(trace)
}
