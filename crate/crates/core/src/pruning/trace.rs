use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::data::SplitKind;
use crate::net::{EvalResult, NeuronId};
use crate::{Error, Result};

pub const TRACE_COLUMNS: &str =
    "step\tlayer\tneuron\tdelta_e_claimed\ttrain_sq_error\ttest_sq_error\ttest_accuracy\tremaining_neurons";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceHeader {
    pub criterion: String,
    pub algorithm: String,
    pub dataset: String,
    pub dataset_id: String,
    pub architecture: String,
    pub model_seed: u64,
    pub data_seed: u64,
    /// Split used to rank candidates; `train_sq_error` in the steps is measured on it.
    pub ranking_split: SplitKind,
    pub hidden_total: usize,
    /// `(layer, neuron count)` for every hidden layer.
    pub layer_sizes: Vec<(usize, usize)>,
    pub start_test: EvalResult,
    pub start_train_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneStep {
    /// 1-based.
    pub step: usize,
    pub removed: NeuronId,
    pub delta_e_claimed: f64,
    /// Evaluation on the test split after this removal.
    pub eval_after: EvalResult,
    /// Error on the ranking split after this removal.
    pub train_error_after: f64,
    /// Active hidden neurons left.
    pub remaining: usize,
}

/// Ordered record of removals, the source of every degradation curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneTrace {
    pub header: TraceHeader,
    pub steps: Vec<PruneStep>,
}

impl PruneTrace {
    pub fn new(header: TraceHeader) -> Self {
        PruneTrace {
            header,
            steps: Vec::new(),
        }
    }

    pub fn removal_order(&self) -> Vec<NeuronId> {
        self.steps.iter().map(|s| s.removed).collect()
    }

    /// `{dataset}_{arch}_{criterion}_{algorithm}_{seed}`, the stem shared by
    /// all files derived from this run.
    pub fn file_stem(&self) -> String {
        format!(
            "{}_{}_{}_{}_{}",
            self.header.dataset,
            self.header.architecture,
            self.header.criterion,
            self.header.algorithm,
            self.header.model_seed
        )
    }

    pub fn to_tsv(&self) -> String {
        let h = &self.header;
        let mut out = String::from("# neuroprune prune trace\n");
        let sizes = h
            .layer_sizes
            .iter()
            .map(|(m, n)| format!("{m}:{n}"))
            .collect::<Vec<_>>()
            .join(",");
        for (k, v) in [
            ("criterion", h.criterion.clone()),
            ("algorithm", h.algorithm.clone()),
            ("dataset", h.dataset.clone()),
            ("dataset_id", h.dataset_id.clone()),
            ("architecture", h.architecture.clone()),
            ("model_seed", h.model_seed.to_string()),
            ("data_seed", h.data_seed.to_string()),
            ("ranking_split", h.ranking_split.to_string()),
            ("hidden_neurons", h.hidden_total.to_string()),
            ("layer_sizes", sizes),
            ("start_test_sq_error", h.start_test.squared_error.to_string()),
            ("start_test_accuracy", h.start_test.accuracy.to_string()),
            ("start_train_sq_error", h.start_train_error.to_string()),
        ] {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(TRACE_COLUMNS);
        out.push('\n');
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                s.step,
                s.removed.layer,
                s.removed.index,
                s.delta_e_claimed,
                s.train_error_after,
                s.eval_after.squared_error,
                s.eval_after.accuracy,
                s.remaining
            );
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut lines = text.lines();
        loop {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("trace has no column header".into()))?;
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
            } else if line == TRACE_COLUMNS {
                break;
            } else {
                return Err(Error::Parse(format!("unexpected trace column header {line:?}")));
            }
        }
        let get = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("trace header is missing {k}")))
        };
        fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad {what} {s:?} in trace")))
        }
        let layer_sizes = get("layer_sizes")?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|pair| {
                let (m, n) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("bad layer size {pair:?}")))?;
                Ok((num(m, "layer")?, num(n, "layer size")?))
            })
            .collect::<Result<Vec<_>>>()?;
        let header = TraceHeader {
            criterion: get("criterion")?,
            algorithm: get("algorithm")?,
            dataset: get("dataset")?,
            dataset_id: get("dataset_id")?,
            architecture: get("architecture")?,
            model_seed: num(&get("model_seed")?, "model_seed")?,
            data_seed: num(&get("data_seed")?, "data_seed")?,
            ranking_split: get("ranking_split")?.parse()?,
            hidden_total: num(&get("hidden_neurons")?, "hidden_neurons")?,
            layer_sizes,
            start_test: EvalResult {
                squared_error: num(&get("start_test_sq_error")?, "start_test_sq_error")?,
                accuracy: num(&get("start_test_accuracy")?, "start_test_accuracy")?,
            },
            start_train_error: num(&get("start_train_sq_error")?, "start_train_sq_error")?,
        };
        let mut steps = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 8 {
                return Err(Error::Parse(format!("trace row has {} fields: {line:?}", f.len())));
            }
            steps.push(PruneStep {
                step: num(f[0], "step")?,
                removed: NeuronId::new(num(f[1], "layer")?, num(f[2], "neuron")?),
                delta_e_claimed: num(f[3], "delta_e_claimed")?,
                train_error_after: num(f[4], "train_sq_error")?,
                eval_after: EvalResult {
                    squared_error: num(f[5], "test_sq_error")?,
                    accuracy: num(f[6], "test_accuracy")?,
                },
                remaining: num(f[7], "remaining_neurons")?,
            });
        }
        let trace = PruneTrace { header, steps };
        trace.check()?;
        Ok(trace)
    }

    /// Remaining counts drop by one per step and no neuron is removed twice.
    pub fn check(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        let mut expected = self.header.hidden_total;
        for s in &self.steps {
            if !seen.insert(s.removed) {
                return Err(Error::Invariant(format!("neuron {} removed twice", s.removed)));
            }
            if s.remaining + 1 != expected {
                return Err(Error::Invariant(format!(
                    "step {} leaves {} neurons, expected {}",
                    s.step,
                    s.remaining,
                    expected.saturating_sub(1)
                )));
            }
            expected = s.remaining;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PruneTrace {
        let mut t = PruneTrace::new(TraceHeader {
            criterion: "t2".into(),
            algorithm: "iterative".into(),
            dataset: "cosine".into(),
            dataset_id: "abcd".into(),
            architecture: "2x10".into(),
            model_seed: 3,
            data_seed: 4,
            ranking_split: SplitKind::Train,
            hidden_total: 20,
            layer_sizes: vec![(1, 10), (2, 10)],
            start_test: EvalResult {
                squared_error: 0.012_345_678_9,
                accuracy: 0.999_999_3,
            },
            start_train_error: 0.1 + 0.2,
        });
        for (i, (layer, index)) in [(1, 4), (2, 9)].into_iter().enumerate() {
            t.steps.push(PruneStep {
                step: i + 1,
                removed: NeuronId::new(layer, index),
                delta_e_claimed: 1e-17 * (i as f64 + 1.0),
                eval_after: EvalResult {
                    squared_error: 1.0 / 3.0,
                    accuracy: 0.75,
                },
                train_error_after: 2.0f64.sqrt(),
                remaining: 19 - i,
            });
        }
        t
    }

    #[test]
    fn tsv_round_trip_is_exact() {
        let t = sample();
        let text = t.to_tsv();
        assert!(text.contains(&format!("\n{TRACE_COLUMNS}\n")));
        let back = PruneTrace::from_tsv(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_tsv(), text);
        assert_eq!(t.file_stem(), "cosine_2x10_t2_iterative_3");
    }

    #[test]
    fn duplicate_removal_is_rejected() {
        let mut t = sample();
        t.steps[1].removed = t.steps[0].removed;
        assert!(PruneTrace::from_tsv(&t.to_tsv()).is_err());
    }

    #[test]
    fn missing_header_field_is_a_parse_error() {
        let text = sample().to_tsv().replace("# dataset_id=abcd\n", "");
        assert!(matches!(PruneTrace::from_tsv(&text), Err(Error::Parse(_))));
    }
}
