//! Board pose from camera corner detections, and robust 3D–2D pose fitting.

mod p3p;
mod pnp;
mod ransac;
mod refine;

pub use p3p::p3p;
pub use pnp::{solve_planar_pnp, PnpSettings, PnpSolution};
pub use ransac::{ransac_pnp, RansacConfig, RansacResult};
pub use refine::{refine_pose, reprojection_rms};

use crate::cloud::PointCloud;
use crate::geom::{RigidTransform, Vec2, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("degenerate correspondence configuration")]
    DegenerateConfiguration,
    #[error("pose refinement diverged (reprojection RMS {rms_px:.3} px)")]
    DivergedRefinement { rms_px: f64 },
    #[error("too few inliers: {found} < {required}")]
    TooFewInliers { found: usize, required: usize },
}

/// Square calibration board carrying a centered square tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoardModel {
    pub side_length_m: f64,
    pub tag_length_m: f64,
}

impl Default for BoardModel {
    fn default() -> Self {
        Self {
            side_length_m: 0.6,
            tag_length_m: 0.48,
        }
    }
}

impl BoardModel {
    pub fn half_side(&self) -> f64 {
        self.side_length_m / 2.0
    }

    /// Tag corners in the board frame: top-left, top-right, bottom-right,
    /// bottom-left as seen from the front (x right, y down).
    pub fn corner_points(&self) -> [Vec3; 4] {
        let h = self.tag_length_m / 2.0;
        [
            Vec3::new(-h, -h, 0.0),
            Vec3::new(h, -h, 0.0),
            Vec3::new(h, h, 0.0),
            Vec3::new(-h, h, 0.0),
        ]
    }

    /// Center followed by the four tag corners.
    pub fn vertices(&self) -> [Vec3; 5] {
        let c = self.corner_points();
        [Vec3::zeros(), c[0], c[1], c[2], c[3]]
    }

    /// Outer board corners in the same order as [`BoardModel::corner_points`].
    pub fn outline(&self) -> [Vec3; 4] {
        let h = self.half_side();
        [
            Vec3::new(-h, -h, 0.0),
            Vec3::new(h, -h, 0.0),
            Vec3::new(h, h, 0.0),
            Vec3::new(-h, h, 0.0),
        ]
    }
}

/// One detected tag: four ordered corners in pixels, and the board pose once
/// PnP has run.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraDetection {
    pub target_id: u32,
    pub corners: [Vec2; 4],
    pub pose: Option<RigidTransform>,
    pub reprojection_rms_px: Option<f64>,
}

impl CameraDetection {
    pub fn new(target_id: u32, corners: [Vec2; 4]) -> Self {
        Self {
            target_id,
            corners,
            pose: None,
            reprojection_rms_px: None,
        }
    }
}

/// A synchronized LiDAR scan with its camera detections.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    pub index: usize,
    pub timestamp_s: f64,
    pub cloud: PointCloud,
    pub detections: Vec<CameraDetection>,
}

/// Runs planar PnP on every detection in place; detections whose pose fails
/// are dropped. Returns the number dropped.
pub fn estimate_board_poses(
    detections: &mut Vec<CameraDetection>,
    board: &BoardModel,
    cam: &crate::geom::PinholeCamera,
    settings: &PnpSettings,
) -> usize {
    let before = detections.len();
    detections.retain_mut(
        |d| match solve_planar_pnp(&d.corners, board, cam, settings) {
            Ok(sol) => {
                d.pose = Some(sol.pose);
                d.reprojection_rms_px = Some(sol.rms_px);
                true
            }
            Err(e) => {
                log::debug!("dropping target {}: {e}", d.target_id);
                false
            }
        },
    );
    before - detections.len()
}
