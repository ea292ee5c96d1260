//! Run the whole train, prune, sweep and report pipeline from a config and
//! list the artifacts. Equivalent to `neuroprune run --config <file>`.

use neuroprune::cli::cmd_run;
use neuroprune::config::Config;

const CONFIG: &str = "
train.preset = cosine-2x10
train.epochs = 600
data.samples = 400
prune.criteria = brute,t1,t2
prune.algorithms = single,iterative
sweep.enabled = true
sweep.grid = coarse
sweep.every = 5
";

fn main() -> neuroprune::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "pipeline-out".into());
    std::fs::create_dir_all(&out).map_err(|source| neuroprune::Error::Io {
        path: out.clone().into(),
        source,
    })?;
    let manifest = cmd_run(&Config::parse(CONFIG)?, out.as_ref())?;
    for f in &manifest.files {
        println!("{out}/{f}");
    }
    for (stage, secs) in &manifest.wall_times {
        println!("{stage:<7} done after {secs:.2}s");
    }
    Ok(())
}
