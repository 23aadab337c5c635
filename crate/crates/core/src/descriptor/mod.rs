//! Board detection by global shape descriptors.
//!
//! Each cluster is moved into its principal-axis frame, summarized by a
//! multi-plane projection histogram matrix, and compressed to the leading
//! left/right singular vectors of that matrix. Clusters are accepted as
//! boards when their correlation with a reference descriptor clears a
//! threshold.

mod m2dp;
mod pca;
mod reference;
mod rsvd;
mod similarity;

pub use m2dp::{compute_m2dp, DescriptorConfig, RadiusMode};
pub use pca::pca_align;
pub use reference::{board_grid, build_references, sensor_grid, ReferenceSpec};
pub use rsvd::{rsvd_rank1, Rank1, RsvdParams};
pub use similarity::{pcc, Pcc, Similarity};

use crate::cloud::{Cluster, PointCloud};
use crate::exec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default acceptance threshold on the matching score.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.94;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DescriptorError {
    #[error("cluster is degenerate (needs at least 3 points spanning a plane)")]
    DegenerateCluster,
    #[error("feature matrix is zero")]
    ZeroMatrix,
    #[error("vector has zero variance")]
    ConstantVector,
    #[error("vectors differ in length or are shorter than 2 ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid descriptor config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub values: Vec<f64>,
}

impl Descriptor {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub cluster_id: usize,
    pub score: f64,
    pub accepted: bool,
}

/// Descriptor of raw cluster points (alignment included).
pub fn describe(
    points: &[crate::geom::Vec3],
    cfg: &DescriptorConfig,
) -> Result<Descriptor, DescriptorError> {
    let aligned = pca_align(points)?;
    compute_m2dp(&aligned, cfg)
}

/// Best non-negative correlation of `d` against the references.
pub fn match_score(d: &Descriptor, references: &[Descriptor], sim: &dyn Similarity) -> f64 {
    references
        .iter()
        .filter_map(|r| sim.score(&d.values, &r.values).ok())
        .fold(0.0f64, f64::max)
}

/// Scores pre-computed descriptors; `None` entries (degenerate clusters)
/// score zero.
pub fn match_descriptors(
    descriptors: &[Option<Descriptor>],
    references: &[Descriptor],
    threshold: f64,
) -> Vec<MatchResult> {
    descriptors
        .iter()
        .enumerate()
        .map(|(cluster_id, d)| {
            let score = d.as_ref().map_or(0.0, |d| match_score(d, references, &Pcc));
            MatchResult {
                cluster_id,
                score,
                accepted: score >= threshold,
            }
        })
        .collect()
}

/// Describes every cluster and scores it against the references.
pub fn match_clusters(
    cloud: &PointCloud,
    clusters: &[Cluster],
    references: &[Descriptor],
    threshold: f64,
    cfg: &DescriptorConfig,
) -> Vec<MatchResult> {
    let descriptors = exec::map(clusters, |c| {
        describe(&cloud.select(&c.point_indices), cfg).ok()
    });
    match_descriptors(&descriptors, references, threshold)
}
