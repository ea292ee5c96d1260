use std::fs;
use std::path::Path;

use neuroprune::cli::{run, EXIT_IO, EXIT_USAGE};
use neuroprune::pruning::PruneTrace;

fn neuroprune(args: &[&str]) -> i32 {
    run(std::iter::once("neuroprune").chain(args.iter().copied()))
}

fn train_small(dir: &Path, data: &str) -> String {
    let out = dir.to_str().unwrap();
    let code = neuroprune(&[
        "train", "--out-dir", out, "--data", data, "--samples", "60", "--hidden", "3-3", "--epochs", "20",
        "--learning-rate", "1", "--batch-size", "4", "--seed", "5",
    ]);
    assert_eq!(code, 0);
    dir.join("model.json").display().to_string()
}

fn only_file_with_suffix(dir: &Path, suffix: &str) -> std::path::PathBuf {
    let mut hits: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_str().unwrap().ends_with(suffix))
        .collect();
    assert_eq!(hits.len(), 1, "{hits:?}");
    hits.pop().unwrap()
}

#[test]
fn train_prune_sweep_report_round() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let model = train_small(dir.path(), "cosine");
    assert!(dir.path().join("train_report.tsv").is_file());

    let code = neuroprune(&[
        "prune", "--out-dir", out, "--data", "cosine", "--samples", "60", "--model", &model, "--criterion", "t2",
        "--algorithm", "single", "--stop", "count=3", "--save-pruned",
    ]);
    assert_eq!(code, 0);
    let trace_path = only_file_with_suffix(dir.path(), ".trace.tsv");
    let trace = PruneTrace::from_tsv(&fs::read_to_string(&trace_path).unwrap()).unwrap();
    assert_eq!(trace.steps.len(), 3);
    assert_eq!(trace.header.criterion, "t2");
    only_file_with_suffix(dir.path(), ".pruned.json");

    let code = neuroprune(&[
        "sweep", "--out-dir", out, "--data", "cosine", "--samples", "60", "--model", &model, "--neurons", "1:0,2:2",
        "--coarse",
    ]);
    assert_eq!(code, 0);
    let sweep = fs::read_to_string(dir.path().join("cosine_2x3_5.sweep-l2n2.tsv")).unwrap();
    assert_eq!(sweep.lines().filter(|l| !l.starts_with('#')).count(), 1 + 1001);

    let code = neuroprune(&["report", "--out-dir", out, trace_path.to_str().unwrap()]);
    assert_eq!(code, 0);
    only_file_with_suffix(dir.path(), ".summary.tsv");
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("# file=model.json"));
    assert!(manifest.contains("prune.criteria = t2"));
}

#[test]
fn zero_count_gives_an_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let model = train_small(dir.path(), "cosine");
    let code = neuroprune(&[
        "prune", "--out-dir", out, "--data", "cosine", "--samples", "60", "--model", &model, "--stop", "count=0",
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(only_file_with_suffix(dir.path(), ".trace.tsv")).unwrap();
    assert!(PruneTrace::from_tsv(&text).unwrap().steps.is_empty());
}

#[test]
fn training_is_reproducible_to_the_byte() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = fs::read(train_small(a.path(), "diamond")).unwrap();
    let mb = fs::read(train_small(b.path(), "diamond")).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(
        fs::read(a.path().join("train_report.tsv")).unwrap(),
        fs::read(b.path().join("train_report.tsv")).unwrap()
    );
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let model = train_small(dir.path(), "cosine");
    let prune = |extra: &[&str]| {
        let mut args = vec!["prune", "--out-dir", out, "--model", &model];
        args.extend_from_slice(extra);
        neuroprune(&args)
    };
    assert_eq!(prune(&["--data", "cosine", "--criterion", "magnitude"]), EXIT_USAGE);
    assert_eq!(prune(&["--data", "cosine", "--stop", "forever"]), EXIT_USAGE);
    assert_eq!(prune(&["--data", "diamond", "--samples", "40"]), EXIT_USAGE);
    assert_eq!(neuroprune(&["prune", "--out-dir", out]), EXIT_USAGE);
    assert_eq!(neuroprune(&["--threads", "0", "report", "--out-dir", out, "x.tsv"]), EXIT_USAGE);
}

#[test]
fn missing_labels_exit_with_3_and_leave_no_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let images = dir.path().join("images.idx");
    let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 28, 0, 0, 0, 28];
    bytes.extend(vec![0u8; 784]);
    fs::write(&images, bytes).unwrap();
    let code = neuroprune(&[
        "train", "--out-dir", out, "--data", "mnist", "--mnist-images", images.to_str().unwrap(), "--mnist-labels",
        dir.path().join("nope.idx").to_str().unwrap(), "--preset", "mnist-1x100",
    ]);
    assert_eq!(code, EXIT_IO);
    assert!(!dir.path().join("model.json").exists());
}

#[test]
fn corrupt_model_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let model = dir.path().join("model.json");
    fs::write(&model, "{\"format_version\": 1, \"layers\": [").unwrap();
    let code = neuroprune(&["prune", "--out-dir", out, "--data", "cosine", "--model", model.to_str().unwrap()]);
    assert_eq!(code, EXIT_IO);
}

#[test]
fn report_rejects_traces_of_different_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let model = train_small(dir.path(), "cosine");
    let mut traces = Vec::new();
    for seed in ["1", "2"] {
        let sub = dir.path().join(seed);
        fs::create_dir(&sub).unwrap();
        let code = neuroprune(&[
            "prune", "--out-dir", sub.to_str().unwrap(), "--data", "cosine", "--samples", "60", "--data-seed", seed,
            "--model", &model, "--stop", "count=2",
        ]);
        assert_eq!(code, 0);
        traces.push(only_file_with_suffix(&sub, ".trace.tsv").display().to_string());
    }
    assert_eq!(neuroprune(&["report", "--out-dir", out, &traces[0], &traces[1]]), EXIT_USAGE);
}
