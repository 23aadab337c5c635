//! Band-cost board fitting and the two extrinsic solvers: indirect (fit each
//! board, extract its vertices, robust PnP) and direct (all raw board points
//! against all camera board poses at once).

mod cost;
mod simplex;

pub use cost::{board_cost, box_cost, box_cost_min_form, smoothed_box_cost, BoxCostParams};
pub use simplex::{nelder_mead, OptimizerSettings, Params, SimplexResult};

use crate::camera::{ransac_pnp, BoardModel, CameraError, RansacConfig};
use crate::exec;
use crate::geom::{rot_z, PinholeCamera, RigidTransform, Vec2, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean per-point cost above which a board fit counts as diverged.
pub const DIVERGENCE_MEAN_COST_M: f64 = 0.05;

/// Mean per-point cost above which a direct solve counts as diverged. Direct
/// residuals also carry the camera pose error of every board, which at
/// 0.5 px corner noise reaches decimeters in depth beyond 20 m, so the board
/// fit threshold would reject correct solutions. A wrong basin sits well
/// above this.
pub const DIRECT_DIVERGENCE_MEAN_COST_M: f64 = 0.15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("optimization diverged (mean per-point cost {mean_cost_m:.4} m)")]
    Diverged { mean_cost_m: f64 },
    #[error("no targets to optimize over")]
    NoTargets,
    #[error("too few targets: {found} < {required}")]
    TooFewInliers { found: usize, required: usize },
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Indirect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub method: Method,
    /// LiDAR frame into camera frame.
    pub extrinsic: RigidTransform,
    /// One entry per target, in input order.
    pub residuals_px: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Cost at the starting extrinsic, for solvers that have one.
    pub initial_cost: Option<f64>,
    pub final_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoardFit {
    pub lidar_to_board: RigidTransform,
    pub mean_cost_m: f64,
    pub iterations: usize,
}

/// Board pose (LiDAR to board) minimizing the band cost of one cluster,
/// starting from `init`.
///
/// The band cost is flat wherever every point sits inside the square, so
/// any in-plane placement inside that plateau is a minimum. After the
/// simplex settles, the in-plane rotation and offset are moved to the
/// max-margin placement between the returns (inside) and the `fringe`
/// rays that passed the board (outside, unit directions in the LiDAR
/// frame). With an empty fringe only the returns constrain the placement.
/// Out-of-plane terms are untouched by that step.
pub fn fit_board_pose(
    points: &[Vec3],
    fringe: &[Vec3],
    init: &RigidTransform,
    params: &BoxCostParams,
    settings: &OptimizerSettings,
) -> Result<BoardFit, OptimizeError> {
    params.validate().map_err(OptimizeError::InvalidSettings)?;
    settings
        .validate()
        .map_err(OptimizeError::InvalidSettings)?;
    if points.is_empty() {
        return Err(OptimizeError::Diverged {
            mean_cost_m: f64::INFINITY,
        });
    }
    let pose_of = |x: &Params| RigidTransform::from_local(x).compose(init);
    let run = nelder_mead(
        |x| board_cost(&pose_of(x), points, params),
        &Params::zeros(),
        settings,
    );
    let fitted = center_in_plane(&pose_of(&run.x), points, fringe, params.half_side);
    let mean = board_cost(&fitted, points, params) / points.len() as f64;
    if !(mean <= DIVERGENCE_MEAN_COST_M) {
        return Err(OptimizeError::Diverged { mean_cost_m: mean });
    }
    Ok(BoardFit {
        lidar_to_board: fitted,
        mean_cost_m: mean,
        iterations: run.iterations,
    })
}

/// Where the rays cross the board plane, in board-plane coordinates.
fn plane_crossings(pose: &RigidTransform, rays: &[Vec3]) -> Vec<(f64, f64)> {
    let origin = pose.translation;
    rays.iter()
        .filter_map(|u| {
            let d = pose.rotation * u;
            let t = -origin.z / d.z;
            (t.is_finite() && t > 0.0).then(|| (origin.x + t * d.x, origin.y + t * d.y))
        })
        .collect()
}

/// Feasible interval for the square's center along one axis, given the
/// extent of the inside points and the outside points on either side.
/// Returns (half-width, midpoint); the half-width is negative when the
/// constraints conflict.
fn axis_interval(lo_in: f64, hi_in: f64, below: f64, above: f64, half: f64) -> (f64, f64) {
    let lo = (hi_in - half).max(below + half);
    let hi = (lo_in + half).min(above - half);
    ((hi - lo) / 2.0, (lo + hi) / 2.0)
}

/// In-plane rotation and offset that maximize the smallest clearance
/// between the square's edges and both the inside points and the outside
/// crossings.
fn center_in_plane(
    pose: &RigidTransform,
    points: &[Vec3],
    fringe: &[Vec3],
    half: f64,
) -> RigidTransform {
    let inside: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let q = pose.apply(p);
            (q.x, q.y)
        })
        .collect();
    let outside = plane_crossings(pose, fringe);
    let margin = |theta: f64| {
        let (s, c) = theta.sin_cos();
        let rot = |&(x, y): &(f64, f64)| (c * x - s * y, s * x + c * y);
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for (x, y) in inside.iter().map(rot) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let (mx, my) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        let (hx, hy) = ((x1 - x0) / 2.0, (y1 - y0) / 2.0);
        let (mut left, mut right, mut down, mut up) = (f64::MIN, f64::MAX, f64::MIN, f64::MAX);
        for (x, y) in outside.iter().map(rot) {
            let ex = (x - mx).abs() - hx;
            let ey = (y - my).abs() - hy;
            match (ex >= ey, x > mx, y > my) {
                (true, true, _) => right = right.min(x),
                (true, false, _) => left = left.max(x),
                (false, _, true) => up = up.min(y),
                (false, _, false) => down = down.max(y),
            }
        }
        let (mx_, cx) = axis_interval(x0, x1, left, right, half);
        let (my_, cy) = axis_interval(y0, y1, down, up, half);
        (mx_.min(my_), cx, cy)
    };
    // Coarse scan then golden refinement around the best sample.
    let mut best = (0.0, margin(0.0));
    for k in -60..=60 {
        let t = k as f64 * 0.005;
        let m = margin(t);
        if m.0 > best.1 .0 + 1e-12 {
            best = (t, m);
        }
    }
    let (mut a, mut b) = (best.0 - 0.005, best.0 + 0.005);
    for _ in 0..40 {
        let m1 = a + (b - a) * 0.382;
        let m2 = a + (b - a) * 0.618;
        if margin(m1).0 >= margin(m2).0 {
            b = m2;
        } else {
            a = m1;
        }
    }
    let t = 0.5 * (a + b);
    let m = margin(t);
    let theta = if m.0 >= best.1 .0 { t } else { best.0 };
    let (_, cx, cy) = margin(theta);
    let adjust = RigidTransform::new(rot_z(theta), Vec3::new(-cx, -cy, 0.0));
    adjust.compose(pose)
}

/// A board seen by both sensors, after board pose fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct IndirectTarget {
    pub frame: usize,
    pub lidar_to_board: RigidTransform,
    /// Detected tag corners in pixels, same order as the board model.
    pub corners: [Vec2; 4],
}

/// Extrinsic from LiDAR-frame board vertices paired with their detected
/// image corners, via RANSAC PnP.
pub fn indirect_calibrate(
    targets: &[IndirectTarget],
    board: &BoardModel,
    cam: &PinholeCamera,
    ransac: &RansacConfig,
) -> Result<CalibrationResult, OptimizeError> {
    const MIN_TARGETS: usize = 4;
    if targets.len() < MIN_TARGETS {
        return Err(OptimizeError::TooFewInliers {
            found: targets.len(),
            required: MIN_TARGETS,
        });
    }
    let model = board.corner_points();
    let mut points = Vec::with_capacity(4 * targets.len());
    let mut pixels = Vec::with_capacity(4 * targets.len());
    for t in targets {
        let board_to_lidar = t.lidar_to_board.inverse();
        for (m, px) in model.iter().zip(&t.corners) {
            points.push(board_to_lidar.apply(m));
            pixels.push(*px);
        }
    }
    let r = ransac_pnp(&points, &pixels, cam, ransac)?;
    let residuals_px: Vec<f64> = points
        .chunks(4)
        .zip(pixels.chunks(4))
        .map(|(p, q)| crate::camera::reprojection_rms(&r.pose, p, q, cam))
        .collect();
    Ok(CalibrationResult {
        method: Method::Indirect,
        extrinsic: r.pose,
        residuals_px,
        converged: true,
        iterations: 0,
        initial_cost: None,
        final_cost: r.rms_px,
    })
}

/// Raw board points paired with the camera-estimated pose of that board.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectTarget {
    pub frame: usize,
    /// LiDAR-frame points of the associated cluster.
    pub points: Vec<Vec3>,
    pub board_to_camera: RigidTransform,
}

/// Total band cost of every target's points, mapped LiDAR → camera →
/// board. Per-target sums are reduced in input order.
pub fn direct_cost(
    extrinsic: &RigidTransform,
    targets: &[DirectTarget],
    params: &BoxCostParams,
) -> f64 {
    let per_target = exec::map(targets, |t| {
        let lidar_to_board = t.board_to_camera.inverse().compose(extrinsic);
        board_cost(&lidar_to_board, &t.points, params)
    });
    per_target.iter().sum()
}

/// Extrinsic minimizing [`direct_cost`], starting from `coarse`. Fails with
/// `Diverged` when the minimum's mean per-point cost exceeds
/// [`DIRECT_DIVERGENCE_MEAN_COST_M`].
pub fn direct_calibrate(
    targets: &[DirectTarget],
    coarse: &RigidTransform,
    params: &BoxCostParams,
    settings: &OptimizerSettings,
    cam: &PinholeCamera,
) -> Result<CalibrationResult, OptimizeError> {
    let r = direct_minimize(targets, coarse, params, settings, cam)?;
    let n_points: usize = targets.iter().map(|t| t.points.len()).sum();
    let mean = r.final_cost / n_points as f64;
    if !(mean <= DIRECT_DIVERGENCE_MEAN_COST_M) {
        return Err(OptimizeError::Diverged { mean_cost_m: mean });
    }
    Ok(r)
}

/// [`direct_calibrate`] without the divergence check.
pub fn direct_minimize(
    targets: &[DirectTarget],
    coarse: &RigidTransform,
    params: &BoxCostParams,
    settings: &OptimizerSettings,
    cam: &PinholeCamera,
) -> Result<CalibrationResult, OptimizeError> {
    params.validate().map_err(OptimizeError::InvalidSettings)?;
    settings
        .validate()
        .map_err(OptimizeError::InvalidSettings)?;
    let n_points: usize = targets.iter().map(|t| t.points.len()).sum();
    if targets.is_empty() || n_points == 0 {
        return Err(OptimizeError::NoTargets);
    }
    let camera_to_board: Vec<RigidTransform> = targets
        .iter()
        .map(|t| t.board_to_camera.inverse())
        .collect();
    let cost = |e: &RigidTransform| -> f64 {
        let per = exec::map_range(targets.len(), |k| {
            board_cost(&camera_to_board[k].compose(e), &targets[k].points, params)
        });
        per.iter().sum()
    };
    let extrinsic_of = |x: &Params| RigidTransform::from_local(x).compose(coarse);
    let initial_cost = cost(coarse);
    let run = nelder_mead(|x| cost(&extrinsic_of(x)), &Params::zeros(), settings);
    let extrinsic = extrinsic_of(&run.x).normalized();
    let final_cost = cost(&extrinsic);
    Ok(CalibrationResult {
        method: Method::Direct,
        extrinsic,
        residuals_px: point_residuals(&extrinsic, targets, params.half_side, cam),
        converged: run.converged && final_cost <= initial_cost,
        iterations: run.iterations,
        initial_cost: Some(initial_cost),
        final_cost,
    })
}

/// Per target: RMS pixel distance between each LiDAR point projected with
/// `extrinsic` and the projection of its nearest point on the camera-estimated
/// board square.
pub fn point_residuals(
    extrinsic: &RigidTransform,
    targets: &[DirectTarget],
    half_side: f64,
    cam: &PinholeCamera,
) -> Vec<f64> {
    targets
        .iter()
        .map(|t| {
            let to_board = t.board_to_camera.inverse();
            let mut sum = 0.0;
            let mut n = 0usize;
            for p in &t.points {
                let pc = extrinsic.apply(p);
                let pb = to_board.apply(&pc);
                let q = Vec3::new(
                    pb.x.clamp(-half_side, half_side),
                    pb.y.clamp(-half_side, half_side),
                    0.0,
                );
                let qc = t.board_to_camera.apply(&q);
                if let (Ok(a), Ok(b)) = (cam.project(&pc), cam.project(&qc)) {
                    sum += (a - b).norm_squared();
                    n += 1;
                }
            }
            if n == 0 {
                f64::NAN
            } else {
                (sum / n as f64).sqrt()
            }
        })
        .collect()
}
