//! Command-line behavior: exit codes, outputs and reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tdsnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdsnn"))
        .args(args)
        .output()
        .expect("spawn tdsnn")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn exit_codes() {
    assert_eq!(code(&tdsnn(&["--help"])), 0);
    assert_eq!(code(&tdsnn(&["no-such-command"])), 1);
    assert_eq!(code(&tdsnn(&["simulate-neuron", "--weight-code", "16"])), 1);
    assert_eq!(code(&tdsnn(&["simulate-neuron", "--duration", "-1"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[network]\nn_neurons = 0\n").unwrap();
    let out = tdsnn(&["network", "run", "--config", path(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("network.n_neurons"));

    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&tdsnn(&["network", "run", "--config", path(&missing)])), 2);

    let anchors = dir.path().join("anchors.toml");
    let out = dir.path().join("fit.toml");
    let calibrate = || code(&tdsnn(&["calibrate", "--targets", path(&anchors), "--out", path(&out)]));
    // The excited neuron fires faster, so its synapse cannot be slower.
    fs::write(&anchors, "synapse_none_hz = 90.0\nsynapse_excited_hz = 10.0\n").unwrap();
    assert_eq!(calibrate(), 2);
    fs::write(&anchors, "free_run_hz = 230.0\n").unwrap();
    assert_eq!(calibrate(), 0);
    let fit = tdsnn::io::parse_config(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(fit.neuron.r_base, fit.neuron.v_th * 230.0);
}

#[test]
fn neuron_trace_has_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = tdsnn(&["simulate-neuron", "--duration", "0.1", "--trace", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let spikes = fs::read_to_string(dir.path().join("spikes.csv")).unwrap();
    let rows = spikes.lines().count() - 1;
    assert!((19..=21).contains(&rows), "{rows}");
    for name in ["membrane.csv", "synapse.csv", "output.csv", "summary.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["seed"].is_u64());
    assert!(summary["metrics"]
        .as_object()
        .unwrap()
        .values()
        .all(|v| v.as_f64().is_some_and(f64::is_finite)));
}

#[test]
fn seed_changes_network_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (seed, d) in [("1", &a), ("2", &b)] {
        let out = tdsnn(&["network", "run", "--seed", seed, "--duration", "0.2", "--out", path(d)]);
        assert!(out.status.success());
    }
    assert_ne!(
        fs::read(a.join("spikes.csv")).unwrap(),
        fs::read(b.join("spikes.csv")).unwrap()
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = (0..2)
        .map(|i| {
            let d = dir.path().join(i.to_string());
            let out = tdsnn(&["simulate-synapse", "--duration", "0.3", "--trace", path(&d)]);
            assert!(out.status.success());
            fs::read(d.join("synapse.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].len() > 100);
}

#[test]
fn calibrate_writes_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let fit = dir.path().join("fit.toml");
    let out = tdsnn(&["calibrate", "--out", path(&fit)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&fit).unwrap();
    assert!(text.starts_with("# "));
    let config = tdsnn::io::parse_config(&text).unwrap();
    assert_eq!(config.neuron.r_base, config.neuron.v_th * 200.0);
    // The fitted file drives a run directly.
    let run = tdsnn(&["simulate-neuron", "--config", path(&fit), "--duration", "0.1"]);
    assert!(run.status.success());
}
