//! Contrast ranking once against re-ranking after every removal on the
//! diamond classification task.

use neuroprune::data::{gen_shape, ShapeEncoding, ShapeKind};
use neuroprune::pruning::{iterative_reranking, single_overall_ranking, Criterion, PruneOptions, StoppingRule};
use neuroprune::train::{train, TrainConfig};

fn main() -> neuroprune::Result<()> {
    let ds = gen_shape(ShapeKind::Diamond, 2000, 0, ShapeEncoding::TwoClass)?;
    let (net, report) = train(&TrainConfig::preset("shape-2x50")?, &ds)?;
    println!("start accuracy {:.4}", report.test_eval.accuracy);

    let opts = PruneOptions::new(StoppingRule::Fraction(0.8));
    let (mut a, mut b) = (net.clone(), net);
    let single = single_overall_ranking(&mut a, &ds, Criterion::TAYLOR2, &opts)?;
    let iterative = iterative_reranking(&mut b, &ds, Criterion::TAYLOR2, &opts)?;

    println!("removed  single  iterative");
    for (s, i) in single.steps.iter().zip(&iterative.steps).step_by(10) {
        println!("{:>7}  {:.4}  {:.4}", s.step, s.eval_after.accuracy, i.eval_after.accuracy);
    }
    Ok(())
}
