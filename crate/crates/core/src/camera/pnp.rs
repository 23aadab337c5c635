use super::refine::{refine_pose, reprojection_rms};
use super::{BoardModel, CameraError};
use crate::geom::{nearest_rotation, Mat3, PinholeCamera, RigidTransform, Vec2, Vec3};
use nalgebra::{SMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PnpSettings {
    /// Reprojection RMS above which the solve counts as diverged.
    pub max_rms_px: f64,
    pub max_iterations: usize,
}

impl Default for PnpSettings {
    fn default() -> Self {
        Self {
            max_rms_px: 10.0,
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpSolution {
    /// Board frame into camera frame.
    pub pose: RigidTransform,
    pub rms_px: f64,
}

/// Pose of the board tag from its four ordered image corners.
///
/// A homography gives the initial pose. The mirrored solution (normal
/// reflected about the viewing ray) is refined as well, since the two are
/// nearly indistinguishable for small or distant tags. The lower RMS wins;
/// an exact tie goes to the board facing the camera.
pub fn solve_planar_pnp(
    corners: &[Vec2; 4],
    board: &BoardModel,
    cam: &PinholeCamera,
    settings: &PnpSettings,
) -> Result<PnpSolution, CameraError> {
    if corners.iter().any(|c| !c.x.is_finite() || !c.y.is_finite()) || quad_is_degenerate(corners) {
        return Err(CameraError::DegenerateConfiguration);
    }
    let model = board.corner_points();
    let normalized: Vec<Vec2> = corners.iter().map(|c| cam.normalized(c)).collect();
    let h = homography(&model, &normalized).ok_or(CameraError::DegenerateConfiguration)?;
    let first = decompose(&h).ok_or(CameraError::DegenerateConfiguration)?;

    let refine = |start: &RigidTransform| {
        let pose = refine_pose(start, &model, corners, cam, settings.max_iterations);
        let rms = reprojection_rms(&pose, &model, corners, cam);
        PnpSolution { pose, rms_px: rms }
    };
    let a = refine(&first);
    let b = refine(&mirrored(&a.pose));
    let tol = 1e-9 + 1e-6 * a.rms_px.max(b.rms_px);
    let best = if (a.rms_px - b.rms_px).abs() <= tol {
        if facing_camera(&a.pose) || !facing_camera(&b.pose) {
            a
        } else {
            b
        }
    } else if a.rms_px < b.rms_px {
        a
    } else {
        b
    };
    if !best.rms_px.is_finite() || best.rms_px > settings.max_rms_px {
        return Err(CameraError::DivergedRefinement {
            rms_px: best.rms_px,
        });
    }
    Ok(best)
}

/// Collinear or coincident corners. Measured as the smallest triangle area
/// relative to the squared diagonal, so it is scale-free.
fn quad_is_degenerate(c: &[Vec2; 4]) -> bool {
    let diag = (c[0] - c[2])
        .norm_squared()
        .max((c[1] - c[3]).norm_squared());
    if diag <= 1e-12 {
        return true;
    }
    let area = |a: &Vec2, b: &Vec2, d: &Vec2| ((b - a).perp(&(d - a))).abs() / 2.0;
    let min_area = [
        area(&c[0], &c[1], &c[2]),
        area(&c[1], &c[2], &c[3]),
        area(&c[2], &c[3], &c[0]),
        area(&c[3], &c[0], &c[1]),
    ]
    .into_iter()
    .fold(f64::MAX, f64::min);
    min_area / diag < 1e-4
}

/// DLT homography from the z = 0 plane into normalized image coordinates.
fn homography(model: &[Vec3; 4], image: &[Vec2]) -> Option<Mat3> {
    let mut ata = SMatrix::<f64, 9, 9>::zeros();
    for (m, x) in model.iter().zip(image) {
        let rows = [
            [m.x, m.y, 1.0, 0.0, 0.0, 0.0, -x.x * m.x, -x.x * m.y, -x.x],
            [0.0, 0.0, 0.0, m.x, m.y, 1.0, -x.y * m.x, -x.y * m.y, -x.y],
        ];
        for r in rows {
            let v = SMatrix::<f64, 9, 1>::from_row_slice(&r);
            ata += v * v.transpose();
        }
    }
    let eig = SymmetricEigen::new(ata);
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let h = eig.eigenvectors.column(k);
    let m = Mat3::from_row_slice(h.as_slice());
    m.iter().all(|v| v.is_finite()).then_some(m)
}

fn decompose(h: &Mat3) -> Option<RigidTransform> {
    let h1 = h.column(0).into_owned();
    let h2 = h.column(1).into_owned();
    let h3 = h.column(2).into_owned();
    let scale = 2.0 / (h1.norm() + h2.norm());
    if !scale.is_finite() {
        return None;
    }
    // The board center must land in front of the camera.
    let scale = if h3.z < 0.0 { -scale } else { scale };
    let r1 = h1 * scale;
    let r2 = h2 * scale;
    let r3 = r1.cross(&r2);
    let rot = nearest_rotation(&Mat3::from_columns(&[r1, r2, r3]));
    Some(RigidTransform::new(rot, h3 * scale))
}

/// Same board center, normal reflected about the line of sight.
fn mirrored(pose: &RigidTransform) -> RigidTransform {
    let n = pose.rotation.column(2).into_owned();
    let ray = pose.translation.normalize();
    let n2 = ray * (2.0 * n.dot(&ray)) - n;
    let axis = n.cross(&n2);
    let s = axis.norm();
    let c = n.dot(&n2).clamp(-1.0, 1.0);
    if s < 1e-12 {
        return *pose;
    }
    let turn = RigidTransform::from_axis_angle(&(axis / s), s.atan2(c));
    RigidTransform::new(turn.rotation * pose.rotation, pose.translation)
}

/// Board z points into the board, so the printed face looks at the camera
/// when z points away from it.
fn facing_camera(pose: &RigidTransform) -> bool {
    pose.rotation.column(2).dot(&pose.translation) > 0.0
}
