//! On-disk formats: point clouds, detections, datasets, configs and reports.
//!
//! Every format carries a version and loading a newer one is refused.

mod cloud_file;
mod dataset;
mod detections;
mod report;

pub use cloud_file::{
    decode_cloud, decode_cloud_text, decode_labels, encode_cloud, encode_cloud_text, encode_labels,
    load_cloud, save_cloud, CLOUD_FORMAT_VERSION,
};
pub use dataset::{
    load_dataset, write_dataset, DatasetManifest, FrameEntry, LoadedDataset, SensorProfile,
    TruthFile, DATASET_FORMAT_VERSION,
};
pub use detections::{
    detections_from_json, detections_to_json, load_detections, save_detections, DetectionFile,
    DETECTIONS_FORMAT_VERSION,
};
pub use report::{
    read_report, report_payload, write_csv, write_report, DetectionStats, ExtrinsicReport,
    GridSearchReport, MethodReport, PrStats, ReportDocument, StageTimings, TargetResidual,
    TruthComparison, REPORT_SCHEMA_VERSION,
};

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: parse error at {location}: {message}", path.display())]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },
    #[error("{}: field `{field}`: {message}", path.display())]
    Schema {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("{}: format version {found} is not supported (this build reads version {supported})", path.display())]
    UnsupportedVersion {
        path: PathBuf,
        found: u64,
        supported: u64,
    },
    #[error("{}: referenced file does not exist", path.display())]
    MissingFile { path: PathBuf },
}

impl IoError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn path(&self) -> &Path {
        match self {
            IoError::Io { path, .. }
            | IoError::Parse { path, .. }
            | IoError::Schema { path, .. }
            | IoError::UnsupportedVersion { path, .. }
            | IoError::MissingFile { path } => path,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.to_path_buf(),
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })
}

pub fn save_toml<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = toml::to_string_pretty(value).map_err(|e| IoError::Schema {
        path: path.to_path_buf(),
        field: "$".into(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = read_text(path)?;
    parse_toml(&text, path)
}

pub fn parse_toml<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, IoError> {
    toml::from_str(text).map_err(|e| {
        let location = match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}")
            }
            None => "unknown".into(),
        };
        IoError::Parse {
            path: path.to_path_buf(),
            location,
            message: e.message().to_string(),
        }
    })
}

fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            IoError::MissingFile {
                path: path.to_path_buf(),
            }
        } else {
            IoError::io(path, e)
        }
    })
}
