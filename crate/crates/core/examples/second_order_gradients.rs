//! Compare the Taylor estimates of every neuron's removal cost with the
//! brute-force value on a small trained network.

use neuroprune::data::gen_cosine;
use neuroprune::grad2::second_order_backprop;
use neuroprune::pruning::delta_e_brute_force;
use neuroprune::train::{train, TrainConfig};

fn main() -> neuroprune::Result<()> {
    let ds = gen_cosine(400, 1)?;
    let cfg = TrainConfig {
        hidden: vec![6, 6],
        epochs: 500,
        ..TrainConfig::preset("cosine-2x10")?
    };
    let (net, _) = train(&cfg, &ds)?;

    let grads = second_order_backprop(&net, ds.train())?;
    let brute = delta_e_brute_force(&net, ds.train())?;

    println!("neuron   dE/dO        d2E/dO2      taylor1      taylor2      brute");
    for e in &brute {
        let g = grads.get(e.neuron).expect("every hidden neuron has gradients");
        println!(
            "{:<7} {:>11.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            e.neuron.to_string(),
            g.g1,
            g.g2,
            g.delta_e1,
            g.delta_e2,
            e.delta_e
        );
    }
    Ok(())
}
