use super::{read_json, write_json, IoError};
use crate::geom::RigidTransform;
use crate::optimize::Method;
use crate::sim::mount_euler_deg;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const REPORT_SCHEMA_VERSION: u64 = 1;

/// An extrinsic in three equivalent spellings. The Euler angles are the
/// rotation relative to the nominal LiDAR-to-camera axis swap, measured in
/// the LiDAR frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrinsicReport {
    pub matrix: [[f64; 4]; 4],
    pub mount_euler_deg: [f64; 3],
    pub translation_m: [f64; 3],
}

impl ExtrinsicReport {
    pub fn new(t: &RigidTransform) -> Self {
        Self {
            matrix: t.to_matrix4(),
            mount_euler_deg: mount_euler_deg(t),
            translation_m: t.translation.into(),
        }
    }

    pub fn transform(&self) -> RigidTransform {
        RigidTransform::from_matrix4(&self.matrix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub lidar_detection_ms: f64,
    pub camera_detection_ms: f64,
    pub grid_search_ms: f64,
    pub optimization_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSearchReport {
    pub candidates: usize,
    pub range_deg: f64,
    pub step_deg: f64,
    pub best_score: u64,
    /// Perturbation of the winning candidate (roll, pitch, yaw).
    pub best_perturbation_deg: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetResidual {
    pub frame: usize,
    pub target_id: u32,
    pub residual_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub extrinsic: ExtrinsicReport,
    pub converged: bool,
    pub iterations: usize,
    /// Absent for solvers without a starting cost.
    pub initial_cost: Option<f64>,
    pub final_cost: f64,
    /// Absent when no target has a finite residual.
    pub mean_residual_px: Option<f64>,
    pub residuals: Vec<TargetResidual>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionStats {
    pub frames_total: usize,
    pub frames_used: usize,
    pub camera_targets: usize,
    pub lidar_clusters: usize,
    pub accepted_clusters: usize,
    pub associated_targets: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrStats {
    pub threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Errors against the simulator's truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthComparison {
    pub method: Method,
    pub euler_error_deg: [f64; 3],
    pub translation_error_m: f64,
    pub projection_error_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u64,
    pub dataset: String,
    /// Frame down-sampling distance the run used.
    pub sampling_distance_m: f64,
    /// Box cost band half-width the run used.
    pub alpha_m: f64,
    pub initial_extrinsic: ExtrinsicReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_search: Option<GridSearchReport>,
    pub results: Vec<MethodReport>,
    pub timings_ms: StageTimings,
    pub detection: DetectionStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_pr: Option<PrStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub truth: Vec<TruthComparison>,
}

impl ReportDocument {
    pub fn result(&self, method: Method) -> Option<&MethodReport> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// Report bytes with the timings zeroed: the part that must be identical
/// across runs.
pub fn report_payload(report: &ReportDocument) -> Vec<u8> {
    let mut r = report.clone();
    r.timings_ms = StageTimings::default();
    serde_json::to_vec_pretty(&r).expect("serializable report")
}

/// Writes JSON. The parent directory must already exist.
pub fn write_report(report: &ReportDocument, path: &Path) -> Result<(), IoError> {
    write_json(path, report)
}

pub fn read_report(path: &Path) -> Result<ReportDocument, IoError> {
    let raw: serde_json::Value = read_json(path)?;
    let version = raw
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| IoError::Schema {
            path: path.to_path_buf(),
            field: "schema_version".into(),
            message: "missing or not an integer".into(),
        })?;
    if version != REPORT_SCHEMA_VERSION {
        return Err(IoError::UnsupportedVersion {
            path: path.to_path_buf(),
            found: version,
            supported: REPORT_SCHEMA_VERSION,
        });
    }
    serde_json::from_value(raw).map_err(|e| IoError::Schema {
        path: path.to_path_buf(),
        field: "$".into(),
        message: e.to_string(),
    })
}

/// One CSV row per record, header from the record's field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> IoError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => IoError::io(path, e),
        other => IoError::Schema {
            path: path.to_path_buf(),
            field: "$".into(),
            message: format!("{other:?}"),
        },
    }
}
