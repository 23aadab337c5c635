use crate::geom::{PinholeCamera, RigidTransform, Vec2, Vec3};
use nalgebra::{Matrix6, Vector6};

/// Root-mean-square pixel distance between projected `points` and
/// `pixels`. Points behind the camera count as a large error.
pub fn reprojection_rms(
    pose: &RigidTransform,
    points: &[Vec3],
    pixels: &[Vec2],
    cam: &PinholeCamera,
) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let sum: f64 = points
        .iter()
        .zip(pixels)
        .map(|(p, px)| match cam.project(&pose.apply(p)) {
            Ok(q) => (q - px).norm_squared(),
            Err(_) => 1e12,
        })
        .sum();
    (sum / points.len() as f64).sqrt()
}

/// Levenberg–Marquardt on the 6-DOF reprojection error, with left
/// perturbations `T ← exp(δ) ∘ T` and analytic Jacobians.
pub fn refine_pose(
    initial: &RigidTransform,
    points: &[Vec3],
    pixels: &[Vec2],
    cam: &PinholeCamera,
    max_iterations: usize,
) -> RigidTransform {
    let mut pose = *initial;
    let mut cost = sq_error(&pose, points, pixels, cam);
    let mut lambda = 1e-3;
    for _ in 0..max_iterations {
        let mut jtj = Matrix6::<f64>::zeros();
        let mut jtr = Vector6::<f64>::zeros();
        for (p, px) in points.iter().zip(pixels) {
            let pc = pose.apply(p);
            if pc.z <= 1e-6 {
                continue;
            }
            let iz = 1.0 / pc.z;
            let u = cam.fx * pc.x * iz + cam.cx;
            let v = cam.fy * pc.y * iz + cam.cy;
            let r = [u - px.x, v - px.y];
            // d(u, v)/d(pc)
            let du = Vec3::new(cam.fx * iz, 0.0, -cam.fx * pc.x * iz * iz);
            let dv = Vec3::new(0.0, cam.fy * iz, -cam.fy * pc.y * iz * iz);
            for (k, g) in [du, dv].iter().enumerate() {
                // d(pc)/d(v) = I, d(pc)/d(ω) = -[pc]x  ⇒  gᵀ(-[pc]x) = (pc × g)ᵀ
                let w = pc.cross(g);
                let row = Vector6::new(g.x, g.y, g.z, w.x, w.y, w.z);
                jtj += row * row.transpose();
                jtr += row * r[k];
            }
        }
        let mut improved = false;
        for _ in 0..10 {
            let mut a = jtj;
            for i in 0..6 {
                a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&(-jtr))) else {
                lambda *= 10.0;
                continue;
            };
            let candidate = RigidTransform::from_local(&delta)
                .compose(&pose)
                .normalized();
            let c = sq_error(&candidate, points, pixels, cam);
            if c < cost {
                let step = delta.amax();
                pose = candidate;
                let rel = (cost - c) / cost.max(1e-300);
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if step < 1e-12 || rel < 1e-14 {
                    return pose;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    pose
}

fn sq_error(pose: &RigidTransform, points: &[Vec3], pixels: &[Vec2], cam: &PinholeCamera) -> f64 {
    let rms = reprojection_rms(pose, points, pixels, cam);
    rms * rms * points.len() as f64
}
