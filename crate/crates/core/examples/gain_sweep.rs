//! Sweep the output gain of the first neuron chosen for removal and print
//! the error surface around the pruned (0) and original (1) settings.

use neuroprune::analysis::{coarse_grid, gain_sweep};
use neuroprune::data::gen_cosine;
use neuroprune::pruning::{delta_e_brute_force, rank};
use neuroprune::train::{train, TrainConfig};

fn main() -> neuroprune::Result<()> {
    let ds = gen_cosine(500, 2)?;
    let cfg = TrainConfig {
        epochs: 800,
        ..TrainConfig::preset("cosine-2x10")?
    };
    let (net, _) = train(&cfg, &ds)?;

    let best = rank(&delta_e_brute_force(&net, ds.train())?)[0];
    let curve = gain_sweep(&net, ds.test(), best.neuron, &coarse_grid())?;
    println!("neuron {}: baseline test E {:.6}", curve.neuron, curve.baseline);
    for alpha in [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 5.0, 10.0] {
        let e = curve.error_at(alpha).expect("alpha lies on the coarse grid");
        println!("  alpha {alpha:>5.2}  E {e:.6}");
    }
    Ok(())
}
