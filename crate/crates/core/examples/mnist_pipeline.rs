//! Train the 1x100 MNIST classifier and prune it with the second-order
//! criterion until accuracy falls 2 points below the start.
//!
//! Expects `mnist-5k-images-idx3-ubyte.gz` and `mnist-5k-labels-idx1-ubyte.gz`
//! (or the full `train-*` files) in `$NEUROPRUNE_DATA_DIR`, default `data/mnist`.

use std::path::{Path, PathBuf};

use neuroprune::data::{load_mnist_idx, MnistOptions};
use neuroprune::pruning::{iterative_reranking, Criterion, PruneOptions, StoppingRule};
use neuroprune::train::{train, TrainConfig};

fn find(dir: &Path, stems: &[&str]) -> PathBuf {
    stems
        .iter()
        .flat_map(|s| [dir.join(s), dir.join(format!("{s}.gz"))])
        .find(|p| p.is_file())
        .unwrap_or_else(|| panic!("no {} in {}", stems[0], dir.display()))
}

fn main() -> neuroprune::Result<()> {
    let dir = PathBuf::from(std::env::var("NEUROPRUNE_DATA_DIR").unwrap_or_else(|_| "data/mnist".into()));
    let images = find(&dir, &["mnist-5k-images-idx3-ubyte", "train-images-idx3-ubyte"]);
    let labels = find(&dir, &["mnist-5k-labels-idx1-ubyte", "train-labels-idx1-ubyte"]);
    let ds = load_mnist_idx(&images, &labels, &MnistOptions::default())?;
    println!("{} images, {} inputs, dataset {}", ds.len(), ds.input_dim(), &ds.id()[..12]);

    let (mut net, report) = train(&TrainConfig::preset("mnist-1x100")?, &ds)?;
    let start = report.test_eval.accuracy;
    println!("train accuracy {:.4}, test accuracy {start:.4}", report.train_eval.accuracy);

    let opts = PruneOptions::new(StoppingRule::AccuracyFloor(start - 0.02));
    let trace = iterative_reranking(&mut net, &ds, Criterion::TAYLOR2, &opts)?;
    let kept = trace.steps.len().saturating_sub(1);
    println!("{kept} neurons removed before accuracy dropped more than 0.02");
    let small = net.compact();
    println!("compacted architecture: {}", small.architecture());
    Ok(())
}
