use crate::{
    AlphaSweepArgs, CalibrateArgs, EvalArgs, Failure, GridTrialArgs, PipelineArgs, SimulateArgs,
};
use boardcal::eval::{self, ClusterOutcomes, Convergence, StdRow};
use boardcal::io::{
    load_dataset, load_toml, read_report, write_csv, write_dataset, write_report, LoadedDataset,
};
use boardcal::optimize::Method;
use boardcal::pipeline::{self, prepare, PipelineConfig};
use boardcal::sim::{generate_dataset, GroundTruth, ScenarioConfig};
use serde::Serialize;
use serde_json::json;
use std::io::Write;
use std::path::Path;

type Result<T> = std::result::Result<T, Failure>;

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = match (&a.config, &a.preset) {
        (Some(path), _) => load_toml::<ScenarioConfig>(path)?,
        (None, Some(name)) => ScenarioConfig::preset(name)?,
        (None, None) => ScenarioConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.frames {
        cfg.frames = n;
    }
    let data = generate_dataset(&cfg)?;
    std::fs::create_dir_all(&a.out)
        .map_err(|e| Failure::new(1, "io", format!("{}: {e}", a.out.display())))?;
    let manifest = write_dataset(&a.out, &data)?;
    print_json(&json!({
        "dataset": manifest.name,
        "frames": manifest.frames.len(),
        "out": a.out,
    }));
    Ok(())
}

fn pipeline_config(a: &PipelineArgs) -> Result<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(path) => load_toml::<PipelineConfig>(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(m) = a.method {
        cfg.method = m;
    }
    if let Some(s) = a.seed {
        cfg.ransac.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn truth_of<'a>(data: &'a LoadedDataset, path: &Path) -> Result<&'a GroundTruth> {
    data.truth.as_ref().ok_or_else(|| {
        Failure::new(
            1,
            "missing_truth",
            format!("{}: dataset has no truth file", path.display()),
        )
    })
}

pub fn calibrate(a: CalibrateArgs) -> Result<()> {
    let cfg = pipeline_config(&a.pipeline)?;
    let data = load_dataset(&a.pipeline.dataset)?;
    let out = pipeline::run(&data, &cfg)?;
    let path = a
        .out
        .unwrap_or_else(|| a.pipeline.dataset.join("report.json"));
    write_report(&out.report, &path)?;
    let results: Vec<_> = out
        .report
        .results
        .iter()
        .map(|r| {
            json!({
                "method": r.method,
                "converged": r.converged,
                "mount_euler_deg": r.extrinsic.mount_euler_deg,
                "translation_m": r.extrinsic.translation_m,
                "mean_residual_px": r.mean_residual_px,
            })
        })
        .collect();
    print_json(&json!({ "report": path, "results": results, "truth": out.report.truth }));
    Ok(())
}

#[derive(Debug, Serialize)]
struct ErrorRow {
    dataset: String,
    report: String,
    sampling_distance_m: f64,
    method: Method,
    roll_error_deg: f64,
    pitch_error_deg: f64,
    yaw_error_deg: f64,
    translation_error_m: f64,
    projection_error_px: f64,
}

/// Sampling distance with the direct and indirect Euler errors of its reports.
type SamplingGroup = (f64, Vec<[f64; 3]>, Vec<[f64; 3]>);

pub fn eval(a: EvalArgs) -> Result<()> {
    if a.datasets.len() != a.reports.len() {
        return Err(Failure::config(format!(
            "{} datasets but {} reports; pass one --dataset per --report",
            a.datasets.len(),
            a.reports.len()
        )));
    }
    let cfg = pipeline_config(&PipelineArgs {
        dataset: a.datasets[0].clone(),
        config: a.config.clone(),
        method: None,
        seed: None,
    })?;
    let mut errors = Vec::new();
    let mut outcomes = ClusterOutcomes::default();
    let mut groups: Vec<SamplingGroup> = Vec::new();
    for (dpath, rpath) in a.datasets.iter().zip(&a.reports) {
        let data = load_dataset(dpath)?;
        let truth = truth_of(&data, dpath)?;
        let report = read_report(rpath)?;
        let group = match groups
            .iter()
            .position(|g| g.0 == report.sampling_distance_m)
        {
            Some(k) => k,
            None => {
                groups.push((report.sampling_distance_m, Vec::new(), Vec::new()));
                groups.len() - 1
            }
        };
        for r in &report.results {
            let c = eval::compare(
                r.method,
                &r.extrinsic.transform(),
                truth,
                &data.manifest.sensor.camera,
            );
            match r.method {
                Method::Direct => groups[group].1.push(c.euler_error_deg),
                Method::Indirect => groups[group].2.push(c.euler_error_deg),
            }
            errors.push(ErrorRow {
                dataset: data.manifest.name.clone(),
                report: rpath.display().to_string(),
                sampling_distance_m: report.sampling_distance_m,
                method: r.method,
                roll_error_deg: c.euler_error_deg[0],
                pitch_error_deg: c.euler_error_deg[1],
                yaw_error_deg: c.euler_error_deg[2],
                translation_error_m: c.translation_error_m,
                projection_error_px: c.projection_error_px,
            });
        }
        let prepared = prepare(&data.frames, &data.manifest.sensor, &cfg)?;
        let o = eval::cluster_outcomes(&prepared, truth, cfg.segment.min_cluster_points);
        outcomes.clusters.extend(o.clusters);
        outcomes.visible_boards += o.visible_boards;
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    let std: Vec<StdRow> = groups
        .iter()
        .flat_map(|(d, direct, indirect)| eval::std_rows(*d, direct, indirect))
        .collect();
    let pr = eval::pr_curve(&outcomes, &eval::pr_thresholds());
    std::fs::create_dir_all(&a.out)
        .map_err(|e| Failure::new(1, "io", format!("{}: {e}", a.out.display())))?;
    write_csv(&a.out.join("errors.csv"), &errors)?;
    write_csv(&a.out.join("pr_curve.csv"), &pr)?;
    write_csv(&a.out.join("std.csv"), &std)?;
    let at = eval::pr_point(&outcomes, cfg.match_threshold);
    print_json(&json!({
        "reports": errors.len(),
        "detection_pr": at,
        "out": a.out,
    }));
    Ok(())
}

pub fn grid_trial(a: GridTrialArgs) -> Result<()> {
    let cfg = pipeline_config(&a.pipeline)?;
    if !(a.perturb_deg >= 0.0 && a.perturb_deg.is_finite()) {
        return Err(Failure::config(
            "--perturb-deg must be a finite non-negative angle",
        ));
    }
    let data = load_dataset(&a.pipeline.dataset)?;
    let truth = truth_of(&data, &a.pipeline.dataset)?;
    let prepared = prepare(&data.frames, &data.manifest.sensor, &cfg)?;
    let seed = a.pipeline.seed.unwrap_or(cfg.ransac.seed);
    let t = eval::grid_trial(
        &prepared,
        truth,
        &cfg,
        a.trials,
        a.perturb_deg,
        seed,
        &Convergence::default(),
    );
    write_csv(&a.out, &t.rows)?;
    print_json(&json!({
        "trials": a.trials,
        "with_grid_search": { "converged": t.with_grid.0, "total": t.with_grid.1 },
        "without_grid_search": { "converged": t.without_grid.0, "total": t.without_grid.1 },
        "out": a.out,
    }));
    Ok(())
}

pub fn alpha_sweep(a: AlphaSweepArgs) -> Result<()> {
    let cfg = pipeline_config(&a.pipeline)?;
    if let Some(bad) = a.alphas.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Failure::config(format!(
            "alpha {bad} must be finite and non-negative"
        )));
    }
    let data = load_dataset(&a.pipeline.dataset)?;
    let prepared = prepare(&data.frames, &data.manifest.sensor, &cfg)?;
    let rows = eval::alpha_sweep(&prepared, data.truth.as_ref(), &cfg, &a.alphas)?;
    write_csv(&a.out, &rows)?;
    print_json(&json!({ "rows": rows.len(), "out": a.out }));
    Ok(())
}

/// Writes the summary to stdout; a closed pipe (`| head`) is not an error.
fn print_json(v: &serde_json::Value) {
    let text = serde_json::to_string_pretty(v).expect("serializable summary");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}
