//! Train the 2x10 cosine regressor and save it.
//!
//! ```text
//! cargo run --release --example train_cosine -- [epochs] [out.json]
//! ```

use neuroprune::data::gen_cosine;
use neuroprune::model_io;
use neuroprune::train::{train, TrainConfig};

fn main() -> neuroprune::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(Ok(1000), |s| s.parse()).expect("epochs must be an integer");
    let out = args.next().unwrap_or_else(|| "cosine-2x10.json".into());

    let ds = gen_cosine(1000, 0)?;
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::preset("cosine-2x10")?
    };
    let (net, report) = train(&cfg, &ds)?;

    let n = report.loss_curve.len();
    for epoch in [0, n / 4, n / 2, 3 * n / 4, n - 1] {
        println!("epoch {:>5}  train E {:.6}", epoch + 1, report.loss_curve[epoch]);
    }
    println!(
        "test: E {:.6}, accuracy {:.6} ({:.1?})",
        report.test_eval.squared_error, report.test_eval.accuracy, report.wall_time
    );
    model_io::save(&net, out.as_ref())?;
    println!("saved {out}");
    Ok(())
}
