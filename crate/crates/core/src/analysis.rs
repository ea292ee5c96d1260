//! Gain sweeps, degradation curves and layer-preference statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::Samples;
use crate::net::{GainProbe, Network, NeuronId};
use crate::pruning::PruneTrace;
use crate::{Error, Result};

/// Added to errors before taking `log10`, so a zero error stays finite.
pub const LOG_EPSILON: f64 = 1e-12;

/// Default spacing between trace-driven sweeps.
pub const SWEEP_EVERY: usize = 10;

/// `α = i / 1000` for `i = 0..=10000`.
pub fn fine_grid() -> Vec<f64> {
    (0..=10_000).map(|i| i as f64 / 1000.0).collect()
}

/// `α = i / 100` for `i = 0..=1000`.
pub fn coarse_grid() -> Vec<f64> {
    (0..=1_000).map(|i| i as f64 / 100.0).collect()
}

/// Error of the network as one neuron's gain moves along a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub neuron: NeuronId,
    pub alphas: Vec<f64>,
    pub errors: Vec<f64>,
    /// Error of the untouched network.
    pub baseline: f64,
}

impl SweepCurve {
    /// Error at grid point `alpha`, if the grid contains it exactly.
    pub fn error_at(&self, alpha: f64) -> Option<f64> {
        self.alphas.iter().position(|&a| a == alpha).map(|i| self.errors[i])
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# neuroprune gain sweep\n");
        let _ = writeln!(out, "# neuron={}", self.neuron);
        let _ = writeln!(out, "# baseline_sq_error={}", self.baseline);
        let _ = writeln!(out, "# log_epsilon={LOG_EPSILON:e}");
        out.push_str("alpha\tsq_error\tlog10_sq_error\n");
        for (a, e) in self.alphas.iter().zip(&self.errors) {
            let _ = writeln!(out, "{a}\t{e}\t{}", (e + LOG_EPSILON).log10());
        }
        out
    }
}

/// Sweeps the gain of `neuron` over `grid` on `samples`.
///
/// Grid points are evaluated in parallel from one recorded forward pass; the
/// network is only read.
pub fn gain_sweep(net: &Network, samples: &Samples, neuron: NeuronId, grid: &[f64]) -> Result<SweepCurve> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::InvalidArgument("sweep grid must be strictly increasing".into()));
    }
    if net.gain(neuron)? == 0.0 {
        return Err(Error::InvalidArgument(format!("neuron {neuron} is pruned")));
    }
    let probe = GainProbe::new(net, samples)?;
    let errors = grid
        .par_iter()
        .map(|&a| probe.evaluate(neuron, a).map(|e| e.squared_error))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepCurve {
        neuron,
        alphas: grid.to_vec(),
        errors,
        baseline: probe.baseline().squared_error,
    })
}

/// A sweep of the neuron removed at a given step of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSweep {
    /// 1-based step whose removal is being swept.
    pub step: usize,
    /// Taken on the network as it was just before that removal.
    pub curve: SweepCurve,
}

/// Replays `trace` on a copy of `net` and sweeps the neuron chosen at steps
/// `1, 1 + every, 1 + 2·every, ...`, each on the network state in which it
/// was chosen.
pub fn sweeps_from_trace(
    net: &Network,
    samples: &Samples,
    trace: &PruneTrace,
    every: usize,
    grid: &[f64],
) -> Result<Vec<StepSweep>> {
    if every == 0 {
        return Err(Error::InvalidArgument("sweep interval must be at least 1".into()));
    }
    let mut replay = net.clone();
    let mut out = Vec::new();
    for (i, step) in trace.steps.iter().enumerate() {
        if i % every == 0 {
            out.push(StepSweep {
                step: step.step,
                curve: gain_sweep(&replay, samples, step.removed, grid)?,
            });
        }
        replay.prune(step.removed)?;
    }
    Ok(out)
}

/// Removals per hidden layer within the first `⌈prefix_fraction · steps⌉`
/// steps. Every hidden layer of the traced network has a bin.
pub fn layer_preference(trace: &PruneTrace, prefix_fraction: f64) -> Result<BTreeMap<usize, usize>> {
    if !(prefix_fraction > 0.0 && prefix_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "prefix fraction must be in (0, 1], got {prefix_fraction}"
        )));
    }
    let n = ((prefix_fraction * trace.steps.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut hist: BTreeMap<usize, usize> = trace.header.layer_sizes.iter().map(|&(m, _)| (m, 0)).collect();
    for s in &trace.steps[..n] {
        *hist.entry(s.removed.layer).or_default() += 1;
    }
    Ok(hist)
}

/// One trace reduced to curves over the number of removed neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradationCurve {
    /// `{criterion}_{algorithm}`.
    pub label: String,
    /// Test squared error after `k` removals, `k = 0..=steps`.
    pub sq_error: Vec<f64>,
    /// Test accuracy after `k` removals.
    pub accuracy: Vec<f64>,
    /// Trapezoid area under `sq_error` over the removal count.
    pub auc: f64,
    /// Longest run of removals from the start with accuracy at least
    /// `start - tolerance` throughout.
    pub max_removals_within_tolerance: usize,
    pub layer_histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub dataset_id: String,
    pub architecture: String,
    pub tolerance: f64,
    pub prefix_fraction: f64,
    pub curves: Vec<DegradationCurve>,
}

/// Trapezoid rule with unit spacing.
pub fn trapezoid(ys: &[f64]) -> f64 {
    ys.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum()
}

/// Largest `k` such that the accuracy after each of the first `k` removals
/// stays at or above `start - tolerance`.
pub fn max_removals_within_tolerance(accuracy: &[f64], tolerance: f64) -> usize {
    let Some(&start) = accuracy.first() else {
        return 0;
    };
    accuracy[1..]
        .iter()
        .take_while(|&&a| a >= start - tolerance)
        .count()
}

/// Aligns traces of one starting network and dataset on the removal count.
pub fn degradation_report(traces: &[PruneTrace], tolerance: f64, prefix_fraction: f64) -> Result<ComparisonReport> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidArgument("degradation report needs at least one trace".into()))?;
    for t in &traces[1..] {
        if t.header.dataset_id != first.header.dataset_id {
            return Err(Error::InvalidArgument(format!(
                "traces come from different datasets ({} and {})",
                first.header.dataset_id, t.header.dataset_id
            )));
        }
        if t.header.architecture != first.header.architecture || t.header.start_test != first.header.start_test {
            return Err(Error::InvalidArgument(
                "traces do not start from the same network".into(),
            ));
        }
    }
    let curves = traces
        .iter()
        .map(|t| {
            let mut sq_error = vec![t.header.start_test.squared_error];
            let mut accuracy = vec![t.header.start_test.accuracy];
            for s in &t.steps {
                sq_error.push(s.eval_after.squared_error);
                accuracy.push(s.eval_after.accuracy);
            }
            Ok(DegradationCurve {
                label: format!("{}_{}", t.header.criterion, t.header.algorithm),
                auc: trapezoid(&sq_error),
                max_removals_within_tolerance: max_removals_within_tolerance(&accuracy, tolerance),
                layer_histogram: layer_preference(t, prefix_fraction)?,
                sq_error,
                accuracy,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        dataset_id: first.header.dataset_id.clone(),
        architecture: first.header.architecture.clone(),
        tolerance,
        prefix_fraction,
        curves,
    })
}

impl ComparisonReport {
    /// Wide table on the shared removal-count grid; `NA` past a curve's end.
    pub fn curves_tsv(&self) -> String {
        let mut out = String::from("# neuroprune degradation curves\n");
        let _ = writeln!(out, "# dataset_id={}", self.dataset_id);
        let _ = writeln!(out, "# architecture={}", self.architecture);
        out.push_str("removed");
        for c in &self.curves {
            let _ = write!(out, "\t{0}_sq_error\t{0}_accuracy", c.label);
        }
        out.push('\n');
        let rows = self.curves.iter().map(|c| c.sq_error.len()).max().unwrap_or(0);
        for k in 0..rows {
            let _ = write!(out, "{k}");
            for c in &self.curves {
                match (c.sq_error.get(k), c.accuracy.get(k)) {
                    (Some(e), Some(a)) => {
                        let _ = write!(out, "\t{e}\t{a}");
                    }
                    _ => out.push_str("\tNA\tNA"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// One row per curve: area, removals within tolerance, and the early
    /// removals per hidden layer.
    pub fn summary_tsv(&self) -> String {
        let mut out = String::from("# neuroprune degradation summary\n");
        let _ = writeln!(out, "# dataset_id={}", self.dataset_id);
        let _ = writeln!(out, "# architecture={}", self.architecture);
        let _ = writeln!(out, "# accuracy_tolerance={}", self.tolerance);
        let _ = writeln!(out, "# layer_prefix_fraction={}", self.prefix_fraction);
        let layers: Vec<usize> = self
            .curves
            .iter()
            .flat_map(|c| c.layer_histogram.keys().copied())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        out.push_str("curve\tsteps\tauc_sq_error\tmax_removals_within_tolerance");
        for m in &layers {
            let _ = write!(out, "\tlayer{m}_removals");
        }
        out.push('\n');
        for c in &self.curves {
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}",
                c.label,
                c.sq_error.len() - 1,
                c.auc,
                c.max_removals_within_tolerance
            );
            for m in &layers {
                let _ = write!(out, "\t{}", c.layer_histogram.get(m).copied().unwrap_or(0));
            }
            out.push('\n');
        }
        out
    }
}

/// `{dataset}_{arch}_{criterion}_{algorithm}_{seed}.{kind}.tsv`.
pub fn artifact_file_name(trace: &PruneTrace, kind: &str) -> String {
    format!("{}.{kind}.tsv", trace.file_stem())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_cosine, SplitKind};
    use crate::model_io::serialize;
    use crate::net::EvalResult;
    use crate::pruning::{
        delta_e_brute_force, iterative_reranking, Criterion, PruneOptions, PruneStep, StoppingRule, TraceHeader,
    };

    fn trace(steps: &[(usize, f64)]) -> PruneTrace {
        let mut t = PruneTrace::new(TraceHeader {
            criterion: "brute".into(),
            algorithm: "iterative".into(),
            dataset: "d".into(),
            dataset_id: "id".into(),
            architecture: "2x3".into(),
            model_seed: 0,
            data_seed: 0,
            ranking_split: SplitKind::Train,
            hidden_total: 6,
            layer_sizes: vec![(1, 3), (2, 3)],
            start_test: EvalResult {
                squared_error: 1.0,
                accuracy: 0.9,
            },
            start_train_error: 1.0,
        });
        for (i, &(layer, acc)) in steps.iter().enumerate() {
            t.steps.push(PruneStep {
                step: i + 1,
                removed: NeuronId::new(layer, i),
                delta_e_claimed: 0.0,
                eval_after: EvalResult {
                    squared_error: 1.0 + i as f64,
                    accuracy: acc,
                },
                train_error_after: 0.0,
                remaining: 5 - i,
            });
        }
        t
    }

    #[test]
    fn grids() {
        let f = fine_grid();
        assert_eq!(f.len(), 10_001);
        assert_eq!(f[1000], 1.0);
        assert_eq!(f[10_000], 10.0);
        let c = coarse_grid();
        assert_eq!((c.len(), c[100]), (1001, 1.0));
    }

    #[test]
    fn sweep_agrees_with_oracle_and_restores() {
        let net = Network::new(1, &[4, 3], 1, 2).unwrap();
        let ds = gen_cosine(30, 1).unwrap();
        let before = serialize(&net);
        let brute = delta_e_brute_force(&net, ds.test()).unwrap();
        for e in brute {
            let c = gain_sweep(&net, ds.test(), e.neuron, &coarse_grid()).unwrap();
            assert_eq!(c.error_at(1.0), Some(c.baseline));
            assert_eq!(c.baseline, net.evaluate(ds.test()).unwrap().squared_error);
            assert_eq!((c.error_at(0.0).unwrap() - c.baseline).to_bits(), e.delta_e.to_bits());
        }
        assert_eq!(serialize(&net), before);
        assert!(gain_sweep(&net, ds.test(), NeuronId::new(1, 0), &[0.5, 0.5]).is_err());
        assert!(gain_sweep(&net, ds.test(), NeuronId::new(0, 0), &[0.5]).is_err());
    }

    #[test]
    fn trace_driven_sweeps_pick_every_tenth_removal() {
        let mut net = Network::new(1, &[8, 7], 1, 3).unwrap();
        let start = net.clone();
        let ds = gen_cosine(30, 2).unwrap();
        let opts = PruneOptions::new(StoppingRule::Count(15));
        let t = iterative_reranking(&mut net, &ds, Criterion::BRUTE_FORCE, &opts).unwrap();
        let sweeps = sweeps_from_trace(&start, ds.test(), &t, 10, &[0.0, 1.0]).unwrap();
        assert_eq!(sweeps.iter().map(|s| s.step).collect::<Vec<_>>(), vec![1, 11]);
        assert_eq!(sweeps[1].curve.neuron, t.steps[10].removed);
    }

    #[test]
    fn empty_trace_gives_baseline_only_curves() {
        let r = degradation_report(&[trace(&[])], 0.02, 1.0).unwrap();
        assert_eq!(r.curves[0].sq_error, vec![1.0]);
        assert_eq!(r.curves[0].auc, 0.0);
        assert_eq!(r.curves[0].max_removals_within_tolerance, 0);
    }

    #[test]
    fn report_metrics() {
        let t = trace(&[(1, 0.9), (1, 0.89), (2, 0.5), (1, 0.9)]);
        let r = degradation_report(&[t.clone(), t.clone()], 0.02, 1.0).unwrap();
        assert_eq!(r.curves[0], r.curves[1]);
        let c = &r.curves[0];
        assert_eq!(c.auc, 1.0 + 1.5 + 2.5 + 3.5);
        assert_eq!(c.max_removals_within_tolerance, 2);
        assert_eq!(c.layer_histogram, BTreeMap::from([(1, 3), (2, 1)]));
        assert_eq!(r.curves_tsv(), degradation_report(&[t.clone(), t], 0.02, 1.0).unwrap().curves_tsv());
        assert!(r.summary_tsv().contains("brute_iterative\t4\t8.5\t2\t3\t1\n"));
    }

    #[test]
    fn mixed_datasets_are_rejected() {
        let a = trace(&[]);
        let mut b = trace(&[]);
        b.header.dataset_id = "other".into();
        assert!(degradation_report(&[a, b], 0.02, 1.0).is_err());
        assert!(degradation_report(&[], 0.02, 1.0).is_err());
    }

    #[test]
    fn layer_preference_prefix() {
        let t = trace(&[(1, 0.9), (2, 0.9), (2, 0.9), (2, 0.9)]);
        assert_eq!(layer_preference(&t, 1.0).unwrap().values().sum::<usize>(), 4);
        assert_eq!(layer_preference(&t, 0.25).unwrap(), BTreeMap::from([(1, 1), (2, 0)]));
        assert_eq!(layer_preference(&t, 0.5).unwrap(), BTreeMap::from([(1, 1), (2, 1)]));
        assert!(layer_preference(&t, 0.0).is_err());
    }

    #[test]
    fn unequal_lengths_are_padded() {
        let mut short = trace(&[(1, 0.9)]);
        short.header.criterion = "t1".into();
        let long = trace(&[(1, 0.9), (2, 0.8)]);
        let r = degradation_report(&[short, long], 0.02, 1.0).unwrap();
        assert!(r.curves_tsv().ends_with("2\tNA\tNA\t2\t0.8\n"));
    }
}
