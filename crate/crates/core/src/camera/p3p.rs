use crate::geom::{nearest_rotation, Mat3, RigidTransform, Vec3};

const SCAN_SAMPLES: usize = 2000;
const BISECTIONS: usize = 80;

/// Camera poses (world into camera) consistent with three world points seen
/// along three unit bearings. Returns up to four solutions.
///
/// With depths s1, s2 = u·s1, s3 = v·s1 the law of cosines gives three
/// equations. Two of them fix u as a function of v, leaving one scalar
/// equation in v that is bracketed on a dense grid over v = tan θ and
/// polished by bisection.
pub fn p3p(world: &[Vec3; 3], bearings: &[Vec3; 3]) -> Vec<RigidTransform> {
    let j: [Vec3; 3] = std::array::from_fn(|k| bearings[k].normalize());
    let a2 = (world[1] - world[2]).norm_squared();
    let b2 = (world[0] - world[2]).norm_squared();
    let c2 = (world[0] - world[1]).norm_squared();
    if a2 < 1e-18 || b2 < 1e-18 || c2 < 1e-18 {
        return Vec::new();
    }
    let cos_a = j[1].dot(&j[2]);
    let cos_b = j[0].dot(&j[2]);
    let cos_g = j[0].dot(&j[1]);

    let residual = |theta: f64, branch: f64| -> Option<(f64, f64)> {
        let v = theta.tan();
        let qb = 1.0 + v * v - 2.0 * v * cos_b;
        let k = c2 / b2 * qb;
        let disc = cos_g * cos_g - 1.0 + k;
        if disc < 0.0 {
            return None;
        }
        let u = cos_g + branch * disc.sqrt();
        if u <= 0.0 {
            return None;
        }
        let f = (u * u + v * v - 2.0 * u * v * cos_a) - a2 / b2 * qb;
        Some((f / (1.0 + v * v), u))
    };

    let mut out = Vec::new();
    let lo = 1e-6;
    let hi = std::f64::consts::FRAC_PI_2 - 1e-6;
    for branch in [1.0, -1.0] {
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=SCAN_SAMPLES {
            let theta = lo + (hi - lo) * k as f64 / SCAN_SAMPLES as f64;
            let cur = residual(theta, branch).map(|(f, _)| (theta, f));
            if let (Some((t0, f0)), Some((t1, f1))) = (prev, cur) {
                if f0 == 0.0 || f0.signum() != f1.signum() {
                    let root = bisect(|t| residual(t, branch).map(|r| r.0), t0, t1, f0);
                    if let Some((_, u)) = residual(root, branch) {
                        if let Some(pose) = assemble(world, &j, u, root.tan(), b2, cos_b) {
                            out.push(pose);
                        }
                    }
                }
            }
            prev = cur;
        }
    }
    out
}

fn bisect(f: impl Fn(f64) -> Option<f64>, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..BISECTIONS {
        let m = 0.5 * (a + b);
        let Some(fm) = f(m) else { break };
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn assemble(
    world: &[Vec3; 3],
    j: &[Vec3; 3],
    u: f64,
    v: f64,
    b2: f64,
    cos_b: f64,
) -> Option<RigidTransform> {
    let qb = 1.0 + v * v - 2.0 * v * cos_b;
    if qb <= 0.0 {
        return None;
    }
    let s1 = (b2 / qb).sqrt();
    let cam = [j[0] * s1, j[1] * (u * s1), j[2] * (v * s1)];
    let pose = absolute_orientation(world, &cam)?;
    // Reject spurious sign changes (e.g. across a pole of the residual).
    let scale = world.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let err = world
        .iter()
        .zip(&cam)
        .map(|(w, c)| (pose.apply(w) - c).norm())
        .fold(0.0, f64::max);
    (err < 1e-4 * scale).then_some(pose)
}

/// Least-squares rigid alignment `cam ≈ R·world + t` (Kabsch).
fn absolute_orientation(world: &[Vec3], cam: &[Vec3]) -> Option<RigidTransform> {
    let n = world.len() as f64;
    let cw = world.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let cc = cam.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let mut h = Mat3::zeros();
    for (w, c) in world.iter().zip(cam) {
        h += (c - cc) * (w - cw).transpose();
    }
    let rot = nearest_rotation(&h);
    rot.iter()
        .all(|v| v.is_finite())
        .then(|| RigidTransform::new(rot, cc - rot * cw))
}
