use super::{
    decode_labels, encode_labels, load_cloud, load_detections, read_json, save_cloud,
    save_detections, save_toml, write_json, DetectionFile, IoError,
};
use crate::camera::{BoardModel, FramePair};
use crate::cloud::RangeImageSpec;
use crate::exec;
use crate::geom::{PinholeCamera, RigidTransform};
use crate::sim::{
    mount_euler_deg, BoardTruth, Dataset, FrameTruth, GroundTruth, ScanPattern, ScenarioConfig,
    VehiclePose,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const DATASET_FORMAT_VERSION: u64 = 1;

const MANIFEST: &str = "manifest.json";
const TRUTH: &str = "truth.json";
const SCENARIO: &str = "scenario.toml";

/// Everything the pipeline needs to know about the sensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorProfile {
    pub camera: PinholeCamera,
    pub range_image: RangeImageSpec,
    pub board: BoardModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_pattern: Option<ScanPattern>,
}

impl SensorProfile {
    /// The sensors a scenario simulates.
    pub fn of_scenario(cfg: &ScenarioConfig) -> Self {
        Self {
            camera: cfg.rig.camera,
            range_image: cfg.lidar.range_image_spec(),
            board: cfg.board,
            scan_pattern: Some(cfg.lidar),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub index: usize,
    pub timestamp_s: f64,
    /// Paths are relative to the dataset directory.
    pub cloud: String,
    pub detections: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u64,
    pub name: String,
    pub sensor: SensorProfile,
    pub frames: Vec<FrameEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFrame {
    pub vehicle: VehiclePose,
    pub boards: Vec<BoardTruth>,
}

/// Ground truth as stored; per-point labels live in the per-frame label files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub format_version: u64,
    /// LiDAR frame into camera frame.
    pub extrinsic: RigidTransform,
    pub mount_euler_deg: [f64; 3],
    pub translation_m: [f64; 3],
    pub frames: Vec<TruthFrame>,
}

/// A dataset read back from disk. Truth and scenario are present only for
/// simulated data.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
    pub frames: Vec<FramePair>,
    pub truth: Option<GroundTruth>,
    pub scenario: Option<ScenarioConfig>,
}

fn frame_stem(k: usize) -> String {
    format!("frames/{k:06}")
}

/// Writes a simulated dataset. The directory is created if needed; the
/// output is a pure function of the dataset, so equal datasets give
/// byte-identical directories.
pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<DatasetManifest, IoError> {
    std::fs::create_dir_all(dir.join("frames")).map_err(|e| IoError::io(dir, e))?;
    let cam = data.scenario.rig.camera;
    let mut entries = Vec::with_capacity(data.frames.len());
    for (pair, truth) in data.frames.iter().zip(&data.truth.frames) {
        let stem = frame_stem(pair.index);
        let entry = FrameEntry {
            index: pair.index,
            timestamp_s: pair.timestamp_s,
            cloud: format!("{stem}.lcpc"),
            detections: format!("{stem}.json"),
            labels: Some(format!("{stem}.labels")),
        };
        save_cloud(&dir.join(&entry.cloud), &pair.cloud)?;
        save_detections(
            &dir.join(&entry.detections),
            &DetectionFile {
                image_width_px: cam.width,
                image_height_px: cam.height,
                timestamp_s: pair.timestamp_s,
                detections: pair.detections.clone(),
            },
        )?;
        let labels_path = dir.join(entry.labels.as_ref().expect("labels"));
        std::fs::write(&labels_path, encode_labels(&truth.labels))
            .map_err(|e| IoError::io(&labels_path, e))?;
        entries.push(entry);
    }
    let truth = TruthFile {
        format_version: DATASET_FORMAT_VERSION,
        extrinsic: data.truth.extrinsic,
        mount_euler_deg: mount_euler_deg(&data.truth.extrinsic),
        translation_m: data.truth.extrinsic.translation.into(),
        frames: data
            .truth
            .frames
            .iter()
            .map(|f| TruthFrame {
                vehicle: f.vehicle,
                boards: f.boards.clone(),
            })
            .collect(),
    };
    write_json(&dir.join(TRUTH), &truth)?;
    save_toml(&dir.join(SCENARIO), &data.scenario)?;
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        name: data.scenario.name.clone(),
        sensor: SensorProfile::of_scenario(&data.scenario),
        frames: entries,
        truth: Some(TRUTH.into()),
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

fn check_version(path: &Path, found: u64) -> Result<(), IoError> {
    if found != DATASET_FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion {
            path: path.to_path_buf(),
            found,
            supported: DATASET_FORMAT_VERSION,
        });
    }
    Ok(())
}

fn existing(root: &Path, rel: &str) -> Result<PathBuf, IoError> {
    let p = root.join(rel);
    if p.is_file() {
        Ok(p)
    } else {
        Err(IoError::MissingFile { path: p })
    }
}

/// Reads a dataset directory. Every file named by the manifest must exist.
pub fn load_dataset(dir: &Path) -> Result<LoadedDataset, IoError> {
    let manifest_path = dir.join(MANIFEST);
    let raw: serde_json::Value = read_json(&manifest_path)?;
    let version = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| IoError::Schema {
            path: manifest_path.clone(),
            field: "format_version".into(),
            message: "missing or not an integer".into(),
        })?;
    check_version(&manifest_path, version)?;
    let manifest: DatasetManifest = serde_json::from_value(raw).map_err(|e| IoError::Schema {
        path: manifest_path.clone(),
        field: "$".into(),
        message: e.to_string(),
    })?;

    // Resolve every path up front so a missing file is reported before any
    // heavy loading starts.
    let mut paths = Vec::with_capacity(manifest.frames.len());
    for f in &manifest.frames {
        let labels = f.labels.as_deref().map(|l| existing(dir, l)).transpose()?;
        paths.push((
            existing(dir, &f.cloud)?,
            existing(dir, &f.detections)?,
            labels,
        ));
    }
    let truth_path = manifest
        .truth
        .as_deref()
        .map(|t| existing(dir, t))
        .transpose()?;

    let loaded = exec::map(&paths, |(cloud, det, labels)| -> Result<_, IoError> {
        let c = load_cloud(cloud)?;
        let d = load_detections(det)?;
        let l = match labels {
            Some(p) => {
                let bytes = std::fs::read(p).map_err(|e| IoError::io(p, e))?;
                let l = decode_labels(&bytes, p)?;
                if l.len() != c.len() {
                    return Err(IoError::Schema {
                        path: p.clone(),
                        field: "labels".into(),
                        message: format!("{} labels for {} points", l.len(), c.len()),
                    });
                }
                Some(l)
            }
            None => None,
        };
        Ok((c, d, l))
    });
    let mut frames = Vec::with_capacity(loaded.len());
    let mut labels = Vec::with_capacity(loaded.len());
    for (entry, item) in manifest.frames.iter().zip(loaded) {
        let (cloud, det, l) = item?;
        frames.push(FramePair {
            index: entry.index,
            timestamp_s: entry.timestamp_s,
            cloud,
            detections: det.detections,
        });
        labels.push(l.unwrap_or_default());
    }

    let truth = match truth_path {
        Some(p) => {
            let t: TruthFile = read_json(&p)?;
            check_version(&p, t.format_version)?;
            if t.frames.len() != frames.len() {
                return Err(IoError::Schema {
                    path: p,
                    field: "frames".into(),
                    message: format!(
                        "{} truth frames for {} data frames",
                        t.frames.len(),
                        frames.len()
                    ),
                });
            }
            Some(GroundTruth {
                extrinsic: t.extrinsic,
                frames: t
                    .frames
                    .into_iter()
                    .zip(labels)
                    .map(|(f, labels)| FrameTruth {
                        vehicle: f.vehicle,
                        labels,
                        boards: f.boards,
                    })
                    .collect(),
            })
        }
        None => None,
    };
    let scenario_path = dir.join(SCENARIO);
    let scenario = if scenario_path.is_file() {
        Some(super::load_toml(&scenario_path)?)
    } else {
        None
    };
    Ok(LoadedDataset {
        root: dir.to_path_buf(),
        manifest,
        frames,
        truth,
        scenario,
    })
}
