//! Prune one cosine network under all three criteria with iterative
//! re-ranking and print the comparison summary.

use neuroprune::analysis::degradation_report;
use neuroprune::data::gen_cosine;
use neuroprune::pruning::{iterative_reranking, Criterion, PruneOptions, StoppingRule};
use neuroprune::train::{train, TrainConfig};

fn main() -> neuroprune::Result<()> {
    let ds = gen_cosine(1000, 0)?;
    let cfg = TrainConfig {
        epochs: 1500,
        ..TrainConfig::preset("cosine-2x10")?
    };
    let (net, report) = train(&cfg, &ds)?;
    println!("trained: test E {:.5}", report.test_eval.squared_error);

    let opts = PruneOptions::new(StoppingRule::Fraction(1.0));
    let mut traces = Vec::new();
    for criterion in [Criterion::BRUTE_FORCE, Criterion::TAYLOR2, Criterion::TAYLOR1] {
        let mut copy = net.clone();
        traces.push(iterative_reranking(&mut copy, &ds, criterion, &opts)?);
    }

    let cmp = degradation_report(&traces, 0.02, 0.25)?;
    for c in &cmp.curves {
        let half = c.sq_error[c.sq_error.len() / 2];
        println!("{:<16} AUC {:>10.3}  E at 50% removed {:>9.4}", c.label, c.auc, half);
    }
    print!("\n{}", cmp.summary_tsv());
    Ok(())
}
