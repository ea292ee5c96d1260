//! Datasets: MNIST from IDX files plus synthetic cosine and point-in-shape tasks.

mod idx;
mod synth;

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::{Error, Matrix, Result};

pub use idx::{
    encode_idx_images, encode_idx_labels, load_mnist_idx, parse_idx_images, parse_idx_labels,
    read_idx_bytes, IdxImages, MnistOptions, IMAGE_MAGIC, LABEL_MAGIC,
};
pub use synth::{cosine_target, gen_cosine, gen_shape, Shape, ShapeEncoding, ShapeKind};

/// Fraction of samples assigned to the training split unless stated otherwise.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Classification,
    Regression,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" => Ok(Task::Classification),
            "regression" => Ok(Task::Regression),
            other => Err(Error::Parse(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    Train,
    Test,
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitKind::Train => "train",
            SplitKind::Test => "test",
        })
    }
}

impl FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" | "training" => Ok(SplitKind::Train),
            "test" | "validation" => Ok(SplitKind::Test),
            other => Err(Error::InvalidArgument(format!(
                "split must be train or test, got {other:?}"
            ))),
        }
    }
}

/// Input/target rows of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub inputs: Matrix,
    pub targets: Matrix,
    pub task: Task,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The given rows of this split, in order.
    pub fn slice(&self, indices: &[usize]) -> Samples {
        Samples {
            inputs: self.inputs.select_rows(indices),
            targets: self.targets.select_rows(indices),
            task: self.task,
        }
    }
}

/// A labelled dataset with a fixed train/test partition.
#[derive(Debug, Clone)]
pub struct Dataset {
    name: String,
    inputs: Matrix,
    targets: Matrix,
    task: Task,
    train_idx: Vec<usize>,
    test_idx: Vec<usize>,
    seed: u64,
    id: String,
    train: Samples,
    test: Samples,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        inputs: Matrix,
        targets: Matrix,
        task: Task,
        train_idx: Vec<usize>,
        test_idx: Vec<usize>,
        seed: u64,
    ) -> Result<Self> {
        let name = name.into();
        let n = inputs.rows();
        if targets.rows() != n {
            return Err(Error::Shape(format!(
                "{n} input rows but {} target rows",
                targets.rows()
            )));
        }
        if inputs.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Invariant("inputs must lie in [0, 1]".into()));
        }
        match task {
            Task::Classification => {
                for (r, row) in targets.iter_rows().enumerate() {
                    let ones = row.iter().filter(|&&v| v == 1.0).count();
                    let zeros = row.iter().filter(|&&v| v == 0.0).count();
                    if ones != 1 || ones + zeros != row.len() {
                        return Err(Error::Invariant(format!("target row {r} is not one-hot")));
                    }
                }
            }
            Task::Regression => {
                if targets.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::Invariant("regression targets must lie in [0, 1]".into()));
                }
            }
        }
        let mut seen = vec![false; n];
        for &i in train_idx.iter().chain(&test_idx) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Invariant(
                    "train and test splits must be disjoint and in range".into(),
                ));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Invariant("splits must cover every sample".into()));
        }

        let train = Samples {
            inputs: inputs.select_rows(&train_idx),
            targets: targets.select_rows(&train_idx),
            task,
        };
        let test = Samples {
            inputs: inputs.select_rows(&test_idx),
            targets: targets.select_rows(&test_idx),
            task,
        };
        let id = content_id(&name, task, &inputs, &targets, &train_idx, &test_idx);
        Ok(Dataset {
            name,
            inputs,
            targets,
            task,
            train_idx,
            test_idx,
            seed,
            id,
            train,
            test,
        })
    }

    /// Build a dataset whose rows are already in random order, assigning the
    /// first `train_fraction` of them to training.
    pub(crate) fn with_leading_train(
        name: &str,
        inputs: Matrix,
        targets: Matrix,
        task: Task,
        train_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must be in (0, 1), got {train_fraction}"
            )));
        }
        let n = inputs.rows();
        if n < 2 {
            return Err(Error::InvalidArgument(
                "need at least two samples to form a train/test split".into(),
            ));
        }
        let n_train = (((n as f64) * train_fraction).round() as usize).clamp(1, n - 1);
        Dataset::new(
            name,
            inputs,
            targets,
            task,
            (0..n_train).collect(),
            (n_train..n).collect(),
            seed,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Content hash covering samples, targets and the split.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.targets.cols()
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn targets(&self) -> &Matrix {
        &self.targets
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train_idx
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test_idx
    }

    pub fn train(&self) -> &Samples {
        &self.train
    }

    pub fn test(&self) -> &Samples {
        &self.test
    }

    pub fn split(&self, which: SplitKind) -> &Samples {
        match which {
            SplitKind::Train => &self.train,
            SplitKind::Test => &self.test,
        }
    }

    /// Tab-separated export: `#` header lines, a column header, one row per sample.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# neuroprune dataset");
        let _ = writeln!(out, "# name={}", self.name);
        let _ = writeln!(out, "# task={}", self.task);
        let _ = writeln!(out, "# inputs={}", self.input_dim());
        let _ = writeln!(out, "# outputs={}", self.output_dim());
        let _ = writeln!(out, "# seed={}", self.seed);
        let _ = writeln!(out, "# id={}", self.id);
        out.push_str("split\trow");
        for c in 0..self.input_dim() {
            let _ = write!(out, "\tx{c}");
        }
        for c in 0..self.output_dim() {
            let _ = write!(out, "\ty{c}");
        }
        out.push('\n');
        // split order is part of the dataset: rows are listed in split order
        let rows = self.train_idx.iter().map(|&r| ("train", r));
        for (split, r) in rows.chain(self.test_idx.iter().map(|&r| ("test", r))) {
            let _ = write!(out, "{split}\t{r}");
            for v in self.inputs.row(r).iter().chain(self.targets.row(r)) {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut header = std::collections::BTreeMap::new();
        let mut lines = text.lines();
        let columns = loop {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("dataset file has no column header".into()))?;
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    header.insert(k.trim().to_string(), v.trim().to_string());
                }
            } else {
                break line;
            }
        };
        let get = |k: &str| {
            header
                .get(k)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("dataset header is missing {k}")))
        };
        let parse_usize = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad {k} in dataset header")))
        };
        let n_in = parse_usize("inputs")?;
        let n_out = parse_usize("outputs")?;
        let task: Task = get("task")?.parse()?;
        let seed: u64 = get("seed")?
            .parse()
            .map_err(|_| Error::Parse("bad seed in dataset header".into()))?;
        if columns.split('\t').count() != 2 + n_in + n_out {
            return Err(Error::Parse("column header does not match declared dims".into()));
        }
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (line_no, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let mut fields = line.split('\t');
            let split: SplitKind = fields.next().unwrap_or("").parse()?;
            let r: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad row index on line {line_no}")))?;
            let values: Vec<f64> = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number {f:?} for row {r}")))
                })
                .collect::<Result<_>>()?;
            if values.len() != n_in + n_out {
                return Err(Error::Parse(format!("row {r} has {} values", values.len())));
            }
            rows.push((r, values));
            match split {
                SplitKind::Train => train.push(r),
                SplitKind::Test => test.push(r),
            }
        }
        let n = rows.len();
        let (mut xs, mut ys) = (vec![0.0; n * n_in], vec![0.0; n * n_out]);
        let mut filled = vec![false; n];
        for (r, values) in rows {
            if r >= n || std::mem::replace(&mut filled[r], true) {
                return Err(Error::Parse(format!("row index {r} is out of range or repeated")));
            }
            xs[r * n_in..(r + 1) * n_in].copy_from_slice(&values[..n_in]);
            ys[r * n_out..(r + 1) * n_out].copy_from_slice(&values[n_in..]);
        }
        let ds = Dataset::new(
            get("name")?,
            Matrix::new(n, n_in, xs)?,
            Matrix::new(n, n_out, ys)?,
            task,
            train,
            test,
            seed,
        )?;
        if let Some(id) = header.get("id") {
            if id != ds.id() {
                return Err(Error::Invariant(format!(
                    "dataset content hashes to {} but header says {id}",
                    ds.id()
                )));
            }
        }
        Ok(ds)
    }
}

/// Seeded permutation of `0..n`.
pub(crate) fn seeded_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx
}

fn content_id(
    name: &str,
    task: Task,
    inputs: &Matrix,
    targets: &Matrix,
    train: &[usize],
    test: &[usize],
) -> String {
    let mut h = Sha256::new();
    h.update(name.as_bytes());
    h.update([0u8]);
    h.update(task.to_string().as_bytes());
    for dim in [inputs.rows(), inputs.cols(), targets.cols(), train.len(), test.len()] {
        h.update((dim as u64).to_le_bytes());
    }
    for v in inputs.as_slice().iter().chain(targets.as_slice()) {
        h.update(v.to_bits().to_le_bytes());
    }
    for &i in train.iter().chain(test) {
        h.update((i as u64).to_le_bytes());
    }
    let digest = h.finalize();
    hex::encode(&digest[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let inputs = Matrix::from_rows(&[vec![0.0, 0.5], vec![1.0, 0.25], vec![0.125, 0.75]]).unwrap();
        let targets = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        Dataset::new("tiny", inputs, targets, Task::Classification, vec![2, 0], vec![1], 7).unwrap()
    }

    #[test]
    fn splits_are_materialized_in_index_order() {
        let ds = tiny();
        assert_eq!(ds.train().inputs.row(0), &[0.125, 0.75]);
        assert_eq!(ds.test().len(), 1);
        assert_eq!(ds.split(SplitKind::Test).targets.row(0), &[0.0, 1.0]);
    }

    #[test]
    fn invariants_are_enforced() {
        let inputs = Matrix::from_rows(&[vec![0.0], vec![1.5]]).unwrap();
        let targets = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert!(Dataset::new("x", inputs, targets.clone(), Task::Regression, vec![0], vec![1], 0).is_err());

        let inputs = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(Dataset::new("x", inputs.clone(), targets.clone(), Task::Regression, vec![0, 1], vec![1], 0).is_err());
        assert!(Dataset::new("x", inputs.clone(), targets.clone(), Task::Regression, vec![0], vec![], 0).is_err());

        let not_one_hot = Matrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        assert!(Dataset::new("x", inputs, not_one_hot, Task::Classification, vec![0], vec![1], 0).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let ds = tiny();
        let back = Dataset::from_tsv(&ds.to_tsv()).unwrap();
        assert_eq!(back.id(), ds.id());
        assert_eq!(back.inputs(), ds.inputs());
        assert_eq!(back.train_indices(), ds.train_indices());
    }

    #[test]
    fn tsv_with_tampered_values_is_rejected() {
        let text = tiny().to_tsv().replace("0.125", "0.126");
        assert!(matches!(Dataset::from_tsv(&text), Err(Error::Invariant(_))));
    }

    #[test]
    fn id_depends_on_split() {
        let a = tiny();
        let b = Dataset::new(
            "tiny",
            a.inputs().clone(),
            a.targets().clone(),
            Task::Classification,
            vec![0, 2],
            vec![1],
            7,
        )
        .unwrap();
        assert_ne!(a.id(), b.id());
    }
}
