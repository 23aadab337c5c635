use boardcal::io::ExtrinsicReport;
use boardcal::io::{read_report, write_report};
use boardcal::sim::ScenarioConfig;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn boardcal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boardcal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = boardcal(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON summary on stdout")
}

/// Exit code and the JSON error payload from stderr.
fn fails(args: &[&str]) -> (i32, Value) {
    let out = boardcal(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let payload = serde_json::from_slice(&out.stderr).expect("JSON error payload on stderr");
    (out.status.code().unwrap(), payload)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, preset: &str, extra: &[&str]) {
    let mut args = vec!["simulate", "--preset", preset, "--out", s(dir)];
    args.extend_from_slice(extra);
    ok(&args);
}

/// Full-length default dataset, simulated once for the tests that need it.
fn default_dataset() -> &'static Path {
    static DIR: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    &DIR.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("default");
        simulate(&dir, "default", &[]);
        (tmp, dir)
    })
    .1
}

fn noise_free_dataset() -> &'static Path {
    static DIR: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    &DIR.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("nf");
        simulate(&dir, "noise-free", &[]);
        (tmp, dir)
    })
    .1
}

fn files_under(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = walk(dir)
        .into_iter()
        .map(|p| {
            (
                p.strip_prefix(dir).unwrap().to_path_buf(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn simulate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate(&a, "default", &["--frames", "3", "--seed", "7"]);
    simulate(&b, "default", &["--frames", "3", "--seed", "7"]);
    assert_eq!(files_under(&a), files_under(&b));
}

#[test]
fn simulate_reads_a_scenario_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("scenario.toml");
    std::fs::write(&cfg, "name = \"tiny\"\nframes = 2\n").unwrap();
    let out = tmp.path().join("tiny");
    let summary = ok(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(summary["dataset"], "tiny");
    assert_eq!(summary["frames"], 2);
}

#[test]
fn default_dataset_has_every_frame_pair_on_disk() {
    let dir = default_dataset();
    for k in 0..200 {
        for ext in ["lcpc", "json", "labels"] {
            let p = dir.join(format!("frames/{k:06}.{ext}"));
            assert!(p.is_file(), "{}", p.display());
        }
    }
    assert!(!dir.join("frames/000200.json").exists());
}

#[test]
fn calibrate_default_dataset_recovers_rotation() {
    let dir = default_dataset();
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("report.json");
    let summary = ok(&[
        "--threads",
        "2",
        "calibrate",
        "--dataset",
        s(dir),
        "--out",
        s(&report),
    ]);
    assert_eq!(summary["results"][0]["method"], "direct");
    let doc = read_report(&report).unwrap();
    let r = &doc.results[0];
    assert!(r.converged);
    let t = &doc.truth[0];
    let worst = t.euler_error_deg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst < 0.1, "{:?}", t.euler_error_deg);
    for stage in [
        "lidar_detection_ms",
        "camera_detection_ms",
        "grid_search_ms",
        "optimization_ms",
    ] {
        assert!(std::fs::read_to_string(&report).unwrap().contains(stage));
    }
}

#[test]
fn large_initial_error_without_grid_search_fails() {
    let dir = default_dataset();
    let tmp = tempfile::tempdir().unwrap();
    let truth = ScenarioConfig::default().rig.mount_euler_deg;
    let cfg = tmp.path().join("pipeline.toml");
    std::fs::write(
        &cfg,
        format!(
            "grid_search = false\n[initial_extrinsic]\nmount_euler_deg = [{}, {}, {}]\n",
            truth[0] + 8.0,
            truth[1] - 8.0,
            truth[2] + 8.0
        ),
    )
    .unwrap();
    let report = tmp.path().join("report.json");
    let out = boardcal(&[
        "calibrate",
        "--dataset",
        s(dir),
        "--config",
        s(&cfg),
        "--out",
        s(&report),
    ]);
    if out.status.success() {
        let doc = read_report(&report).unwrap();
        let worst = doc.truth[0]
            .euler_error_deg
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(
            worst > 1.0,
            "unexpectedly accurate: {:?}",
            doc.truth[0].euler_error_deg
        );
    } else {
        assert_eq!(
            out.status.code(),
            Some(5),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn empty_scene_is_reported_as_no_detections() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("scenario.toml");
    std::fs::write(&cfg, "frames = 2\nboards = []\n").unwrap();
    let dir = tmp.path().join("empty");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&dir)]);
    let (code, payload) = fails(&["calibrate", "--dataset", s(&dir)]);
    assert_eq!(code, 3);
    assert_eq!(payload["error"], "no_detections");
    assert_eq!(payload["exit_code"], 3);
}

#[test]
fn invalid_config_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("pipeline.toml");
    std::fs::write(&cfg, "match_threshold = 1.5\n").unwrap();
    let (code, payload) = fails(&[
        "calibrate",
        "--dataset",
        s(noise_free_dataset()),
        "--config",
        s(&cfg),
    ]);
    assert_eq!(code, 2);
    assert_eq!(payload["error"], "config");
    assert!(payload["message"]
        .as_str()
        .unwrap()
        .contains("match_threshold"));
}

#[test]
fn malformed_toml_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("pipeline.toml");
    std::fs::write(&cfg, "grid_search = true\nmatch_threshold = = 0.9\n").unwrap();
    let (code, payload) = fails(&[
        "calibrate",
        "--dataset",
        s(noise_free_dataset()),
        "--config",
        s(&cfg),
    ]);
    assert_eq!(code, 2);
    assert!(
        payload["message"].as_str().unwrap().contains("line 2"),
        "{payload}"
    );
}

#[test]
fn eval_of_a_perfect_report_has_zero_error() {
    let dir = noise_free_dataset();
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("report.json");
    ok(&["calibrate", "--dataset", s(dir), "--out", s(&report)]);
    let mut doc = read_report(&report).unwrap();
    let truth = boardcal::io::load_dataset(dir).unwrap().truth.unwrap();
    doc.results[0].extrinsic = ExtrinsicReport::new(&truth.extrinsic);
    write_report(&doc, &report).unwrap();
    let out = tmp.path().join("eval");
    ok(&[
        "eval",
        "--dataset",
        s(dir),
        "--report",
        s(&report),
        "--out",
        s(&out),
    ]);
    let errors = std::fs::read_to_string(out.join("errors.csv")).unwrap();
    let mut lines = errors.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    for col in [
        "roll_error_deg",
        "pitch_error_deg",
        "yaw_error_deg",
        "translation_error_m",
        "projection_error_px",
    ] {
        let k = header.iter().position(|h| *h == col).unwrap();
        assert!(
            row[k].parse::<f64>().unwrap().abs() < 1e-9,
            "{col} = {}",
            row[k]
        );
    }
    let pr = std::fs::read_to_string(out.join("pr_curve.csv")).unwrap();
    assert_eq!(pr.lines().count(), 1 + 30);
}

#[test]
fn eval_of_repeats_gives_three_std_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec!["eval".into()];
    for seed in 1..=5 {
        let dir = tmp.path().join(format!("run{seed}"));
        let seed = seed.to_string();
        simulate(&dir, "default", &["--frames", "12", "--seed", &seed]);
        let report = dir.join("report.json");
        ok(&["calibrate", "--dataset", s(&dir), "--method", "both"]);
        args.extend([
            "--dataset".into(),
            s(&dir).into(),
            "--report".into(),
            s(&report).into(),
        ]);
    }
    let out = tmp.path().join("eval");
    args.extend(["--out".into(), s(&out).into()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&refs);
    let std = std::fs::read_to_string(out.join("std.csv")).unwrap();
    let lines: Vec<&str> = std.lines().collect();
    assert_eq!(
        lines[0],
        "sampling_distance_m,axis,runs,direct_std_deg,indirect_std_deg"
    );
    assert_eq!(lines.len(), 4);
    for (line, axis) in lines[1..].iter().zip(["roll", "pitch", "yaw"]) {
        assert!(line.starts_with(&format!("0.0,{axis},5,")), "{line}");
    }
}

#[test]
fn eval_without_truth_is_a_clean_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    simulate(&dir, "noise-free", &["--frames", "4"]);
    let report = dir.join("report.json");
    ok(&["calibrate", "--dataset", s(&dir)]);
    let manifest = dir.join("manifest.json");
    let mut m: Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
    m.as_object_mut().unwrap().remove("truth");
    std::fs::write(&manifest, serde_json::to_vec_pretty(&m).unwrap()).unwrap();
    let out = tmp.path().join("eval");
    let (code, payload) = fails(&[
        "eval",
        "--dataset",
        s(&dir),
        "--report",
        s(&report),
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 1);
    assert_eq!(payload["error"], "missing_truth");
}

#[test]
fn grid_trial_with_no_trials_is_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("trials.csv");
    let summary = ok(&[
        "grid-trial",
        "--dataset",
        s(noise_free_dataset()),
        "--trials",
        "0",
        "--out",
        s(&out),
    ]);
    assert_eq!(summary["with_grid_search"]["total"], 0);
    assert_eq!(summary["without_grid_search"]["total"], 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn grid_trial_writes_both_arms() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("trials.csv");
    let summary = ok(&[
        "grid-trial",
        "--dataset",
        s(noise_free_dataset()),
        "--trials",
        "2",
        "--out",
        s(&out),
    ]);
    assert_eq!(summary["with_grid_search"]["total"], 2);
    assert_eq!(summary["without_grid_search"]["total"], 2);
    assert_eq!(
        std::fs::read_to_string(&out).unwrap().lines().count(),
        1 + 4
    );
}

#[test]
fn alpha_sweep_single_alpha_noise_free() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("alpha.csv");
    ok(&[
        "alpha-sweep",
        "--dataset",
        s(noise_free_dataset()),
        "--alphas",
        "0",
        "--out",
        s(&out),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "alpha_m,targets,residual_px,projection_error_px");
    let err: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!(err < 0.5, "{err}");
}

#[test]
fn negative_alpha_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("alpha.csv");
    let (code, _) = fails(&[
        "alpha-sweep",
        "--dataset",
        s(noise_free_dataset()),
        "--alphas=-0.1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 2);
}
