use super::IoError;
use crate::camera::CameraDetection;
use crate::geom::Vec2;
use serde_json::{json, Value};
use std::path::Path;

pub const DETECTIONS_FORMAT_VERSION: u64 = 1;

/// Per-frame detection file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFile {
    pub image_width_px: u32,
    pub image_height_px: u32,
    pub timestamp_s: f64,
    pub detections: Vec<CameraDetection>,
}

pub fn detections_to_json(file: &DetectionFile) -> Value {
    let targets: Vec<Value> = file
        .detections
        .iter()
        .map(|d| {
            json!({
                "target_id": d.target_id,
                "corners_px": d.corners.iter().map(|c| [c.x, c.y]).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "format_version": DETECTIONS_FORMAT_VERSION,
        "corner_order": "top_left,top_right,bottom_right,bottom_left",
        "image_width_px": file.image_width_px,
        "image_height_px": file.image_height_px,
        "timestamp_s": file.timestamp_s,
        "targets": targets,
    })
}

fn schema(path: &Path, field: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Schema {
        path: path.to_path_buf(),
        field: field.into(),
        message: message.into(),
    }
}

/// Validates field by field so that errors name the offending field.
pub fn detections_from_json(v: &Value, path: &Path) -> Result<DetectionFile, IoError> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema(path, "$", "expected an object"))?;
    let uint = |name: &str| -> Result<u64, IoError> {
        obj.get(name)
            .ok_or_else(|| schema(path, name, "missing"))?
            .as_u64()
            .ok_or_else(|| schema(path, name, "expected a non-negative integer"))
    };
    let version = uint("format_version")?;
    if version != DETECTIONS_FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion {
            path: path.to_path_buf(),
            found: version,
            supported: DETECTIONS_FORMAT_VERSION,
        });
    }
    let width = uint("image_width_px")? as u32;
    let height = uint("image_height_px")? as u32;
    let timestamp_s = match obj.get("timestamp_s") {
        None => 0.0,
        Some(t) => t
            .as_f64()
            .filter(|t| t.is_finite())
            .ok_or_else(|| schema(path, "timestamp_s", "expected a finite number"))?,
    };
    let targets = obj
        .get("targets")
        .ok_or_else(|| schema(path, "targets", "missing"))?
        .as_array()
        .ok_or_else(|| schema(path, "targets", "expected an array"))?;
    let mut detections = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let field = |name: &str| format!("targets[{i}].{name}");
        let id = t
            .get("target_id")
            .ok_or_else(|| schema(path, field("target_id"), "missing"))?
            .as_u64()
            .filter(|&id| id <= u32::MAX as u64)
            .ok_or_else(|| schema(path, field("target_id"), "expected a non-negative integer"))?;
        let corners = t
            .get("corners_px")
            .ok_or_else(|| schema(path, field("corners_px"), "missing"))?
            .as_array()
            .filter(|a| a.len() == 4)
            .ok_or_else(|| schema(path, field("corners_px"), "expected four [x, y] pairs"))?;
        let mut out = [Vec2::zeros(); 4];
        for (j, c) in corners.iter().enumerate() {
            let name = field(&format!("corners_px[{j}]"));
            let xy = c
                .as_array()
                .filter(|a| a.len() == 2)
                .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)))
                .ok_or_else(|| schema(path, name.clone(), "expected [x, y] numbers"))?;
            if !(0.0..width as f64).contains(&xy.0) || !(0.0..height as f64).contains(&xy.1) {
                return Err(schema(
                    path,
                    name,
                    format!("({}, {}) lies outside the image", xy.0, xy.1),
                ));
            }
            out[j] = Vec2::new(xy.0, xy.1);
        }
        detections.push(CameraDetection::new(id as u32, out));
    }
    Ok(DetectionFile {
        image_width_px: width,
        image_height_px: height,
        timestamp_s,
        detections,
    })
}

pub fn save_detections(path: &Path, file: &DetectionFile) -> Result<(), IoError> {
    super::write_json(path, &detections_to_json(file))
}

pub fn load_detections(path: &Path) -> Result<DetectionFile, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.to_path_buf(),
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    detections_from_json(&v, path)
}
