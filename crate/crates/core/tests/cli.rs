mod common;

use std::path::Path;
use std::process::{Command, Output};

fn rotguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotguard"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(rotguard(&["--help"]).status.code(), Some(0));
    assert_eq!(rotguard(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(rotguard(&["attack", "--target", "3"]).status.code(), Some(2));
}

#[test]
fn missing_checkpoint_reports_error() {
    let o = rotguard(&["eval", "--checkpoint", "/nonexistent/x.ckpt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
}

#[test]
fn bad_config_key_reports_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "seed = 1\nwobble = 2\n").unwrap();
    let o = rotguard(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wobble"));
}

fn train_small(ckpt: &Path) {
    let data = common::data_dir();
    let o = rotguard(&[
        "train",
        "--data-dir",
        data.to_str().unwrap(),
        "--epochs",
        "1",
        "--limit",
        "3000",
        "--learning-rate",
        "0.1",
        "--out",
        ckpt.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("epoch  1"));
}

#[test]
fn train_eval_attack_defend_experiment() {
    if !common::have_data() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let data = common::data_dir();
    let data = data.to_str().unwrap();
    let ckpt = dir.path().join("m.ckpt");
    let ckpt_s = ckpt.to_str().unwrap();
    train_small(&ckpt);

    let o = rotguard(&["eval", "--data-dir", data, "--checkpoint", ckpt_s, "--limit", "200"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("C1") && text.contains("test_accuracy = "), "{text}");

    let out = dir.path().join("atk");
    let o = rotguard(&[
        "attack",
        "--data-dir",
        data,
        "--checkpoint",
        ckpt_s,
        "--index",
        "0",
        "--target",
        "3",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let linf: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("linf = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(linf <= 0.2 + 1e-12);
    for f in ["adversarial.csv", "adversarial.pgm", "original.pgm", "trace.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert_eq!(
        std::fs::read_to_string(out.join("trace.csv")).unwrap().lines().count(),
        21
    );

    let sweep = dir.path().join("sweep.csv");
    for image in ["adversarial.csv", "adversarial.pgm"] {
        let o = rotguard(&[
            "defend",
            "--checkpoint",
            ckpt_s,
            "--image",
            out.join(image).to_str().unwrap(),
            "--label",
            "7",
            "--angle-step",
            "5",
            "--out",
            sweep.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("best_angle = "));
        assert_eq!(std::fs::read_to_string(&sweep).unwrap().lines().count(), 1 + 19);
    }

    let results = dir.path().join("results");
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "data_dir = {data}\ncheckpoint = {ckpt_s}\noutput_dir = {}\nsample_count = 2\nsource_class = 0\ntarget_class = 6\nangle_step = 15\n",
            results.display()
        ),
    )
    .unwrap();
    let o = rotguard(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("recovery_rate = "));
    let records = std::fs::read_to_string(results.join("records.csv")).unwrap();
    let rows = rotguard::report::parse_records_csv(&records).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rotguard::report::check_changing_rate(&rows).is_ok());
    for r in &rows {
        assert!(results.join(format!("sweep_{}.csv", r.image_index)).is_file());
    }
    assert!(results.join("summary.txt").is_file());
}
