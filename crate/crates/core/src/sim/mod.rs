//! Ground-truthed synthetic scenes: floating calibration boards, ground,
//! boxes and poles, scanned by a mechanical or MEMS LiDAR pattern and seen
//! by a pinhole camera, along a back-and-forth vehicle trajectory.

mod lidar;
mod scene;

pub use lidar::ScanPattern;
pub use scene::{BoardPlacement, BoxObstacle, Hit, Pole, Scene, LABEL_CLUTTER, LABEL_GROUND};

use crate::camera::{BoardModel, CameraDetection, FramePair};
use crate::cloud::PointCloud;
use crate::exec;
use crate::geom::{EulerAngles, Mat3, PinholeCamera, RigidTransform, Vec2, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

/// Rotation taking LiDAR axes (x fwd, y left, z up) to camera axes
/// (x right, y down, z fwd).
pub fn lidar_to_camera_axes() -> Mat3 {
    Mat3::from_rows(&[
        -Vec3::y().transpose(),
        -Vec3::z().transpose(),
        Vec3::x().transpose(),
    ])
}

/// LiDAR-to-camera transform for a mount whose misalignment is given as
/// Euler angles about the LiDAR axes.
pub fn mount_extrinsic(euler_deg: [f64; 3], translation_m: [f64; 3]) -> RigidTransform {
    let e = EulerAngles::from_degrees(euler_deg[0], euler_deg[1], euler_deg[2]);
    RigidTransform::new(
        lidar_to_camera_axes() * e.to_matrix(),
        Vec3::from(translation_m),
    )
}

/// Inverse of [`mount_extrinsic`] for the rotation part.
pub fn mount_euler_deg(extrinsic: &RigidTransform) -> [f64; 3] {
    EulerAngles::from_matrix(&(lidar_to_camera_axes().transpose() * extrinsic.rotation))
        .to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigConfig {
    /// Misalignment of the camera relative to the nominal axis swap, as
    /// roll/pitch/yaw about the LiDAR axes.
    pub mount_euler_deg: [f64; 3],
    /// LiDAR origin in the camera frame.
    pub translation_m: [f64; 3],
    pub camera: PinholeCamera,
    pub lidar_height_m: f64,
}

impl RigConfig {
    pub fn extrinsic(&self) -> RigidTransform {
        mount_extrinsic(self.mount_euler_deg, self.translation_m)
    }
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            mount_euler_deg: [1.2, -0.8, 2.0],
            translation_m: [0.12, -0.25, -0.08],
            camera: PinholeCamera {
                fx: 1900.0,
                fy: 1900.0,
                cx: 1920.0,
                cy: 960.0,
                width: 3840,
                height: 1920,
            },
            lidar_height_m: 1.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseConfig {
    pub range_sigma_m: f64,
    pub pixel_sigma_px: f64,
    pub dropout_prob: f64,
}

/// Vehicle pose in the ground plane; the LiDAR sits above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehiclePose {
    pub x_m: f64,
    pub y_m: f64,
    pub yaw_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    /// Drives back and forth between two x positions `passes` times, weaving
    /// laterally and in heading.
    Sweep {
        x_min_m: f64,
        x_max_m: f64,
        passes: f64,
        lateral_amplitude_m: f64,
        yaw_amplitude_deg: f64,
        /// Phase offset of the weave, so repeated trajectories differ.
        #[serde(default)]
        phase: f64,
    },
    Explicit {
        poses: Vec<VehiclePose>,
    },
}

impl Trajectory {
    pub fn poses(&self, frames: usize) -> Vec<VehiclePose> {
        match self {
            Trajectory::Explicit { poses } => poses.iter().cycle().take(frames).copied().collect(),
            Trajectory::Sweep {
                x_min_m,
                x_max_m,
                passes,
                lateral_amplitude_m,
                yaw_amplitude_deg,
                phase,
            } => (0..frames)
                .map(|k| {
                    let s = if frames > 1 {
                        k as f64 / (frames - 1) as f64
                    } else {
                        0.0
                    };
                    // Triangle wave in [0, 1]: starts far, comes close, goes back.
                    let u = (s * passes).rem_euclid(2.0);
                    let tri = if u <= 1.0 { u } else { 2.0 - u };
                    let w = 2.0 * std::f64::consts::PI * (3.0 * s + phase);
                    VehiclePose {
                        x_m: x_min_m + (x_max_m - x_min_m) * tri,
                        y_m: lateral_amplitude_m * w.sin(),
                        yaw_deg: yaw_amplitude_deg * (1.7 * w).cos(),
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClutterConfig {
    pub ground: bool,
    pub boxes: usize,
    pub poles: usize,
    /// Clutter is scattered over x in this range and |y| in this band.
    pub x_range_m: [f64; 2],
    pub lateral_band_m: [f64; 2],
}

impl Default for ClutterConfig {
    fn default() -> Self {
        Self {
            ground: true,
            boxes: 6,
            poles: 6,
            x_range_m: [8.0, 45.0],
            lateral_band_m: [4.0, 14.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub frames: usize,
    pub frame_interval_s: f64,
    pub board: BoardModel,
    pub boards: Vec<BoardPlacement>,
    pub rig: RigConfig,
    pub lidar: ScanPattern,
    pub max_range_m: f64,
    pub trajectory: Trajectory,
    pub noise: NoiseConfig,
    pub clutter: ClutterConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            seed: 1,
            frames: 200,
            frame_interval_s: 0.1,
            board: BoardModel::default(),
            boards: vec![
                BoardPlacement {
                    position_m: [30.0, 1.6, 1.6],
                    yaw_deg: 18.0,
                    tilt_deg: 12.0,
                    spin_deg: 3.0,
                },
                BoardPlacement {
                    position_m: [30.0, -1.7, 2.3],
                    yaw_deg: -22.0,
                    tilt_deg: -10.0,
                    spin_deg: -4.0,
                },
            ],
            rig: RigConfig::default(),
            lidar: ScanPattern::mechanical_128(),
            max_range_m: 120.0,
            trajectory: Trajectory::Sweep {
                x_min_m: 0.0,
                x_max_m: 24.0,
                passes: 2.0,
                lateral_amplitude_m: 1.0,
                yaw_amplitude_deg: 4.0,
                phase: 0.0,
            },
            noise: NoiseConfig {
                range_sigma_m: 0.02,
                pixel_sigma_px: 0.5,
                dropout_prob: 0.02,
            },
            clutter: ClutterConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub const PRESETS: [&'static str; 6] = [
        "default",
        "noise-free",
        "close",
        "far",
        "pr-mechanical",
        "pr-mems",
    ];

    pub fn preset(name: &str) -> Result<Self, SimError> {
        let base = Self::default();
        let cfg = match name {
            "default" => base,
            "noise-free" => Self {
                name: name.into(),
                frames: 20,
                noise: NoiseConfig::default(),
                ..base
            },
            // Short range with a narrow vertical field of view: boards sit
            // high and low so that they are often cut by the FOV edge.
            "close" => Self {
                name: name.into(),
                boards: vec![
                    BoardPlacement {
                        position_m: [10.0, 0.9, 3.2],
                        yaw_deg: 15.0,
                        tilt_deg: 10.0,
                        spin_deg: 2.0,
                    },
                    BoardPlacement {
                        position_m: [10.0, -1.0, 0.55],
                        yaw_deg: -18.0,
                        tilt_deg: -12.0,
                        spin_deg: -3.0,
                    },
                ],
                lidar: ScanPattern::Mems {
                    h_fov_deg: 120.0,
                    v_fov_deg: 25.0,
                    cols: 600,
                    rows: 125,
                    warp_deg: 0.05,
                },
                trajectory: Trajectory::Sweep {
                    x_min_m: 1.5,
                    x_max_m: 5.0,
                    passes: 2.0,
                    lateral_amplitude_m: 0.6,
                    yaw_amplitude_deg: 4.0,
                    phase: 0.0,
                },
                ..base
            },
            // Long range only: few returns per board.
            "far" => Self {
                name: name.into(),
                trajectory: Trajectory::Sweep {
                    x_min_m: -2.0,
                    x_max_m: 5.0,
                    passes: 2.0,
                    lateral_amplitude_m: 1.0,
                    yaw_amplitude_deg: 4.0,
                    phase: 0.0,
                },
                ..base
            },
            "pr-mechanical" => Self {
                name: name.into(),
                frames: 40,
                clutter: ClutterConfig {
                    boxes: 10,
                    poles: 10,
                    ..Default::default()
                },
                trajectory: Trajectory::Sweep {
                    x_min_m: 10.0,
                    x_max_m: 24.0,
                    passes: 1.0,
                    lateral_amplitude_m: 1.0,
                    yaw_amplitude_deg: 4.0,
                    phase: 0.0,
                },
                ..base
            },
            "pr-mems" => Self {
                name: name.into(),
                frames: 40,
                lidar: ScanPattern::mems_120x25(),
                clutter: ClutterConfig {
                    boxes: 10,
                    poles: 10,
                    ..Default::default()
                },
                trajectory: Trajectory::Sweep {
                    x_min_m: 10.0,
                    x_max_m: 24.0,
                    passes: 1.0,
                    lateral_amplitude_m: 1.0,
                    yaw_amplitude_deg: 4.0,
                    phase: 0.0,
                },
                ..base
            },
            other => return Err(SimError::UnknownPreset(other.into())),
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.into()));
        self.rig
            .camera
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        if !(self.board.side_length_m > 0.0) || !(self.board.tag_length_m > 0.0) {
            return bad("board dimensions must be positive");
        }
        if self.board.tag_length_m > self.board.side_length_m {
            return bad("tag cannot be larger than the board");
        }
        if !(self.max_range_m > 0.0) || !(self.rig.lidar_height_m > 0.0) {
            return bad("max range and LiDAR height must be positive");
        }
        let n = &self.noise;
        if !(n.range_sigma_m >= 0.0)
            || !(n.pixel_sigma_px >= 0.0)
            || !(0.0..1.0).contains(&n.dropout_prob)
        {
            return bad("noise sigmas must be non-negative and dropout in [0, 1)");
        }
        match self.lidar {
            ScanPattern::Mechanical {
                rings, az_step_deg, ..
            } if rings == 0 || !(az_step_deg > 0.0) => {
                return bad("mechanical pattern needs rings and a positive step")
            }
            ScanPattern::Mems { cols, rows, .. } if cols == 0 || rows == 0 => {
                return bad("MEMS grid must be non-empty")
            }
            _ => {}
        }
        Ok(())
    }

    pub fn vehicle_poses(&self) -> Vec<VehiclePose> {
        self.trajectory.poses(self.frames)
    }

    /// World into LiDAR frame for a vehicle pose.
    pub fn world_to_lidar(&self, v: &VehiclePose) -> RigidTransform {
        RigidTransform::new(
            crate::geom::rot_z(v.yaw_deg.to_radians()),
            Vec3::new(v.x_m, v.y_m, self.rig.lidar_height_m),
        )
        .inverse()
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Clutter objects, fixed in the world for the whole trajectory.
    pub fn clutter_objects(&self) -> (Vec<BoxObstacle>, Vec<Pole>) {
        let mut rng = self.rng(0);
        let c = &self.clutter;
        let place = |rng: &mut ChaCha8Rng| {
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            [
                rng.random_range(c.x_range_m[0]..c.x_range_m[1]),
                side * rng.random_range(c.lateral_band_m[0]..c.lateral_band_m[1]),
            ]
        };
        let boxes = (0..c.boxes)
            .map(|_| BoxObstacle {
                center_m: place(&mut rng),
                size_m: [
                    rng.random_range(3.8..4.8),
                    rng.random_range(1.7..2.0),
                    rng.random_range(1.4..1.9),
                ],
                yaw_deg: rng.random_range(-180.0..180.0),
            })
            .collect();
        let poles = (0..c.poles)
            .map(|_| Pole {
                center_m: place(&mut rng),
                radius_m: rng.random_range(0.06..0.2),
                height_m: rng.random_range(2.5..6.0),
            })
            .collect();
        (boxes, poles)
    }

    pub fn scene(&self) -> Scene {
        let (boxes, poles) = self.clutter_objects();
        Scene::new(
            &self.boards,
            &self.board,
            &boxes,
            &poles,
            self.clutter.ground,
        )
    }
}

/// Truth for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub vehicle: VehiclePose,
    /// One label per point: board index, or ground / clutter.
    pub labels: Vec<i32>,
    pub boards: Vec<BoardTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardTruth {
    pub board_id: u32,
    /// Board frame into LiDAR frame.
    pub board_to_lidar: RigidTransform,
    /// Center then tag corners, LiDAR frame.
    pub vertices_lidar: Vec<[f64; 3]>,
    /// Noise-free projections of the tag corners; empty if not in view.
    pub corners_px: Vec<[f64; 2]>,
    /// Number of LiDAR returns labeled with this board.
    pub lidar_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub extrinsic: RigidTransform,
    pub frames: Vec<FrameTruth>,
}

/// A generated dataset held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub scenario: ScenarioConfig,
    pub frames: Vec<FramePair>,
    pub truth: GroundTruth,
}

/// One LiDAR sweep from the given vehicle pose.
pub fn scan_lidar(
    cfg: &ScenarioConfig,
    scene: &Scene,
    rays: &[(Vec3, u16)],
    vehicle: &VehiclePose,
    rng: &mut ChaCha8Rng,
) -> (PointCloud, Vec<i32>) {
    let lidar_to_world = cfg.world_to_lidar(vehicle).inverse();
    let origin = lidar_to_world.translation;
    let sigma = cfg.noise.range_sigma_m;
    let normal = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let mut points = Vec::new();
    let mut rings = Vec::new();
    let mut labels = Vec::new();
    for (dir, ring) in rays {
        let wd = lidar_to_world.apply_vector(dir);
        let hit = scene.cast(&origin, &wd, cfg.max_range_m);
        // Draws happen for every ray so that the stream does not depend on
        // what was hit.
        let drop = rng.random::<f64>() < cfg.noise.dropout_prob;
        let dr = if sigma > 0.0 { normal.sample(rng) } else { 0.0 };
        let Some(hit) = hit else { continue };
        if drop {
            continue;
        }
        let range = (hit.distance + dr).max(0.0);
        let p = dir * range;
        points.push(Vec3::new(
            p.x as f32 as f64,
            p.y as f32 as f64,
            p.z as f32 as f64,
        ));
        rings.push(*ring);
        labels.push(hit.label);
    }
    (
        PointCloud {
            points,
            rings: Some(rings),
        },
        labels,
    )
}

/// Camera detections of every board that is in front of the camera, facing
/// it, and fully inside the image.
pub fn render_detections(
    cfg: &ScenarioConfig,
    vehicle: &VehiclePose,
    rng: &mut ChaCha8Rng,
) -> Vec<CameraDetection> {
    let world_to_camera = cfg.rig.extrinsic().compose(&cfg.world_to_lidar(vehicle));
    let cam = &cfg.rig.camera;
    let sigma = cfg.noise.pixel_sigma_px;
    let normal = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let mut out = Vec::new();
    for (k, placement) in cfg.boards.iter().enumerate() {
        let board_to_camera = world_to_camera.compose(&placement.board_to_world());
        let noise: [Vec2; 4] = std::array::from_fn(|_| {
            if sigma > 0.0 {
                Vec2::new(normal.sample(rng), normal.sample(rng))
            } else {
                Vec2::zeros()
            }
        });
        let Some(clean) = project_corners(&board_to_camera, &cfg.board, cam) else {
            continue;
        };
        let corners: [Vec2; 4] = std::array::from_fn(|j| clean[j] + noise[j]);
        if corners.iter().all(|c| cam.contains(c)) {
            out.push(CameraDetection::new(k as u32, corners));
        }
    }
    out
}

fn project_corners(
    board_to_camera: &RigidTransform,
    board: &BoardModel,
    cam: &PinholeCamera,
) -> Option<[Vec2; 4]> {
    let facing = board_to_camera
        .rotation
        .column(2)
        .dot(&board_to_camera.translation)
        > 0.0;
    if !facing {
        return None;
    }
    let c = board.corner_points();
    let mut out = [Vec2::zeros(); 4];
    for j in 0..4 {
        let p = board_to_camera.apply(&c[j]);
        if p.z < 0.1 {
            return None;
        }
        out[j] = cam.project(&p).ok()?;
        if !cam.contains(&out[j]) {
            return None;
        }
    }
    Some(out)
}

/// Generates every frame. Each frame draws from its own RNG stream, so the
/// output does not depend on scheduling.
pub fn generate_dataset(cfg: &ScenarioConfig) -> Result<Dataset, SimError> {
    cfg.validate()?;
    let scene = cfg.scene();
    let rays = cfg.lidar.rays();
    let poses = cfg.vehicle_poses();
    let extrinsic = cfg.rig.extrinsic();
    let results = exec::map_range(poses.len(), |k| {
        let vehicle = poses[k];
        let mut rng = cfg.rng(k as u64 + 1);
        let detections = render_detections(cfg, &vehicle, &mut rng);
        let (cloud, labels) = scan_lidar(cfg, &scene, &rays, &vehicle, &mut rng);
        let world_to_lidar = cfg.world_to_lidar(&vehicle);
        let boards = cfg
            .boards
            .iter()
            .enumerate()
            .map(|(id, placement)| {
                let b2l = world_to_lidar.compose(&placement.board_to_world());
                let vertices_lidar = cfg
                    .board
                    .vertices()
                    .iter()
                    .map(|v| b2l.apply(v).into())
                    .collect();
                let corners_px =
                    project_corners(&extrinsic.compose(&b2l), &cfg.board, &cfg.rig.camera)
                        .map(|c| c.iter().map(|p| [p.x, p.y]).collect())
                        .unwrap_or_default();
                BoardTruth {
                    board_id: id as u32,
                    board_to_lidar: b2l,
                    vertices_lidar,
                    corners_px,
                    lidar_points: labels.iter().filter(|&&l| l == id as i32).count(),
                }
            })
            .collect();
        let pair = FramePair {
            index: k,
            timestamp_s: k as f64 * cfg.frame_interval_s,
            cloud,
            detections,
        };
        (
            pair,
            FrameTruth {
                vehicle,
                labels,
                boards,
            },
        )
    });
    let (frames, truth_frames) = results.into_iter().unzip();
    Ok(Dataset {
        scenario: cfg.clone(),
        frames,
        truth: GroundTruth {
            extrinsic,
            frames: truth_frames,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_board(x: f64, y: f64) -> ScenarioConfig {
        ScenarioConfig {
            frames: 1,
            boards: vec![BoardPlacement {
                position_m: [x, y, 1.9],
                yaw_deg: 0.0,
                tilt_deg: 0.0,
                spin_deg: 0.0,
            }],
            trajectory: Trajectory::Explicit {
                poses: vec![VehiclePose {
                    x_m: 0.0,
                    y_m: 0.0,
                    yaw_deg: 0.0,
                }],
            },
            noise: NoiseConfig::default(),
            clutter: ClutterConfig {
                ground: false,
                boxes: 0,
                poles: 0,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn mount_round_trip() {
        let e = mount_extrinsic([1.0, -2.0, 3.0], [0.1, 0.2, 0.3]);
        let back = mount_euler_deg(&e);
        for (a, b) in back.iter().zip([1.0, -2.0, 3.0]) {
            assert!((a - b).abs() < 1e-9);
        }
        // Nominal mount: LiDAR forward is camera forward.
        let nominal = mount_extrinsic([0.0; 3], [0.0; 3]);
        assert!((nominal.apply(&Vec3::x()) - Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn board_hit_count_matches_solid_angle() {
        let cfg = single_board(10.0, 0.0);
        let ds = generate_dataset(&cfg).unwrap();
        let hits = ds.truth.frames[0].boards[0].lidar_points as f64;
        let (h, v) = cfg.lidar.angular_resolution_deg();
        // Angular extent of a 0.6 m square at 10 m, divided by the beam cell.
        let ext = 2.0 * (0.3f64 / 10.0).atan().to_degrees();
        let predicted = ext * ext / (h * v);
        assert!(
            (hits - predicted).abs() <= 0.1 * predicted,
            "{hits} vs {predicted}"
        );
    }

    #[test]
    fn fov_clipping_keeps_only_the_visible_half() {
        // Board centered on the 60° azimuth edge of the mechanical pattern.
        let az = 60f64.to_radians();
        let cfg = single_board(10.0 * az.cos(), 10.0 * az.sin());
        let ds = generate_dataset(&cfg).unwrap();
        let f = &ds.frames[0];
        let labels = &ds.truth.frames[0].labels;
        let mut n = 0;
        for (p, l) in f.cloud.points.iter().zip(labels) {
            if *l == 0 {
                assert!(p.y.atan2(p.x).to_degrees() <= 60.0 + 1e-6);
                n += 1;
            }
        }
        let full = generate_dataset(&single_board(10.0, 0.0))
            .unwrap()
            .truth
            .frames[0]
            .boards[0]
            .lidar_points;
        assert!(n > 0 && (n as f64) < 0.7 * full as f64, "{n} of {full}");
    }

    #[test]
    fn deterministic_for_a_seed() {
        let mut cfg = ScenarioConfig::preset("default").unwrap();
        cfg.frames = 3;
        let a = generate_dataset(&cfg).unwrap();
        let b = generate_dataset(&cfg).unwrap();
        assert_eq!(a, b);
        cfg.seed += 1;
        let c = generate_dataset(&cfg).unwrap();
        assert_ne!(a.frames[0].cloud, c.frames[0].cloud);
    }

    #[test]
    fn board_on_axis_gives_symmetric_corners() {
        let mut cfg = single_board(10.0, 0.0);
        cfg.rig.mount_euler_deg = [0.0; 3];
        cfg.rig.translation_m = [0.0; 3];
        let mut rng = cfg.rng(1);
        let det = render_detections(&cfg, &cfg.vehicle_poses()[0], &mut rng);
        assert_eq!(det.len(), 1);
        let c = det[0].corners;
        let center = Vec2::new(1920.0, 960.0);
        assert!(((c[0] + c[2]) / 2.0 - center).norm() < 1e-9);
        assert!(((c[1] + c[3]) / 2.0 - center).norm() < 1e-9);
    }

    #[test]
    fn board_behind_camera_is_not_detected() {
        let cfg = single_board(-10.0, 0.0);
        let mut rng = cfg.rng(1);
        assert!(render_detections(&cfg, &cfg.vehicle_poses()[0], &mut rng).is_empty());
    }

    #[test]
    fn zero_boards_is_a_valid_scene() {
        let mut cfg = ScenarioConfig::preset("default").unwrap();
        cfg.frames = 2;
        cfg.boards.clear();
        let ds = generate_dataset(&cfg).unwrap();
        assert_eq!(ds.frames.len(), 2);
        assert!(ds.frames.iter().all(|f| f.detections.is_empty()));
        assert!(ds
            .truth
            .frames
            .iter()
            .all(|f| f.labels.iter().all(|&l| l < 0)));
    }

    #[test]
    fn presets_validate() {
        for name in ScenarioConfig::PRESETS {
            ScenarioConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(ScenarioConfig::preset("nope").is_err());
    }
}
