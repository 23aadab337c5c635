use crate::camera::BoardModel;
use crate::geom::{rot_x, rot_y, rot_z, Mat3, RigidTransform, Vec3};
use serde::{Deserialize, Serialize};

/// Point label for ground returns.
pub const LABEL_GROUND: i32 = -1;
/// Point label for clutter returns. Boards use their non-negative index.
pub const LABEL_CLUTTER: i32 = -2;

/// Board placement in the world (z up). With all angles zero the board
/// stands upright facing −x, i.e. toward a vehicle driving along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoardPlacement {
    pub position_m: [f64; 3],
    /// Turn about the world vertical.
    #[serde(default)]
    pub yaw_deg: f64,
    /// Lean about the board's horizontal edge.
    #[serde(default)]
    pub tilt_deg: f64,
    /// Spin about the board normal.
    #[serde(default)]
    pub spin_deg: f64,
}

impl BoardPlacement {
    pub fn board_to_world(&self) -> RigidTransform {
        // Board x right, y down, z into the board, seen from a viewer on −x.
        let facing = Mat3::from_columns(&[-Vec3::y(), -Vec3::z(), Vec3::x()]);
        let r = rot_z(self.yaw_deg.to_radians())
            * rot_y(self.tilt_deg.to_radians())
            * rot_x(self.spin_deg.to_radians())
            * facing;
        RigidTransform::new(r, Vec3::from(self.position_m))
    }
}

/// Oriented box standing on the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxObstacle {
    pub center_m: [f64; 2],
    pub size_m: [f64; 3],
    pub yaw_deg: f64,
}

/// Vertical cylinder standing on the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub center_m: [f64; 2],
    pub radius_m: f64,
    pub height_m: f64,
}

/// Ray-castable world, precomputed from a scenario.
#[derive(Debug, Clone)]
pub struct Scene {
    pub ground: bool,
    boards: Vec<(RigidTransform, RigidTransform, f64)>,
    boxes: Vec<(RigidTransform, Vec3, Vec3, f64)>,
    poles: Vec<Pole>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub distance: f64,
    pub label: i32,
}

impl Scene {
    pub fn new(
        boards: &[BoardPlacement],
        board: &BoardModel,
        boxes: &[BoxObstacle],
        poles: &[Pole],
        ground: bool,
    ) -> Self {
        let boards = boards
            .iter()
            .map(|b| {
                let to_world = b.board_to_world();
                (to_world.inverse(), to_world, board.half_side())
            })
            .collect();
        let boxes = boxes
            .iter()
            .map(|b| {
                let half = Vec3::new(b.size_m[0] / 2.0, b.size_m[1] / 2.0, b.size_m[2] / 2.0);
                let center = Vec3::new(b.center_m[0], b.center_m[1], half.z);
                let to_world = RigidTransform::new(rot_z(b.yaw_deg.to_radians()), center);
                (to_world.inverse(), half, center, half.norm())
            })
            .collect();
        Self {
            ground,
            boards,
            boxes,
            poles: poles.to_vec(),
        }
    }

    pub fn board_count(&self) -> usize {
        self.boards.len()
    }

    /// Nearest intersection of the ray `origin + t·dir` (unit `dir`) within
    /// `max_range`.
    pub fn cast(&self, origin: &Vec3, dir: &Vec3, max_range: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let mut consider = |t: f64, label: i32| {
            if t > 1e-6 && t <= max_range && best.is_none_or(|b| t < b.distance) {
                best = Some(Hit { distance: t, label });
            }
        };
        if self.ground && dir.z < -1e-12 && origin.z > 0.0 {
            consider(-origin.z / dir.z, LABEL_GROUND);
        }
        for (k, (to_board, to_world, half)) in self.boards.iter().enumerate() {
            let center = to_world.translation;
            if sphere_miss(origin, dir, &center, half * std::f64::consts::SQRT_2) {
                continue;
            }
            let o = to_board.apply(origin);
            let d = to_board.apply_vector(dir);
            if d.z.abs() < 1e-12 {
                continue;
            }
            let t = -o.z / d.z;
            let p = o + d * t;
            if p.x.abs() <= *half && p.y.abs() <= *half {
                consider(t, k as i32);
            }
        }
        for (to_box, half, center, radius) in &self.boxes {
            if sphere_miss(origin, dir, center, *radius) {
                continue;
            }
            let o = to_box.apply(origin);
            let d = to_box.apply_vector(dir);
            if let Some(t) = slab(&o, &d, half) {
                consider(t, LABEL_CLUTTER);
            }
        }
        for pole in &self.poles {
            if let Some(t) = cylinder(origin, dir, pole) {
                consider(t, LABEL_CLUTTER);
            }
        }
        best
    }
}

fn sphere_miss(o: &Vec3, d: &Vec3, c: &Vec3, r: f64) -> bool {
    let oc = c - o;
    let t = oc.dot(d);
    if t < -r {
        return true;
    }
    (oc - d * t).norm_squared() > r * r
}

fn slab(o: &Vec3, d: &Vec3, half: &Vec3) -> Option<f64> {
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..3 {
        if d[k].abs() < 1e-12 {
            if o[k].abs() > half[k] {
                return None;
            }
            continue;
        }
        let a = (-half[k] - o[k]) / d[k];
        let b = (half[k] - o[k]) / d[k];
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t0 <= t1 && t1 > 0.0).then_some(if t0 > 0.0 { t0 } else { t1 })
}

fn cylinder(o: &Vec3, d: &Vec3, pole: &Pole) -> Option<f64> {
    let (px, py) = (o.x - pole.center_m[0], o.y - pole.center_m[1]);
    let a = d.x * d.x + d.y * d.y;
    if a < 1e-12 {
        return None;
    }
    let b = 2.0 * (px * d.x + py * d.y);
    let c = px * px + py * py - pole.radius_m * pole.radius_m;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / (2.0 * a);
    let z = o.z + d.z * t;
    (t > 0.0 && (0.0..=pole.height_m).contains(&z)).then_some(t)
}
