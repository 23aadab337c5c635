use super::{describe, Descriptor, DescriptorConfig, DescriptorError};
use crate::geom::Vec3;
use serde::{Deserialize, Serialize};

/// Which synthetic board clusters to turn into reference descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceSpec {
    pub side_m: f64,
    /// Regular n×n grids, points per side.
    pub densities: Vec<usize>,
    /// Ranges at which a head-on board is sampled by a beam grid.
    pub ranges_m: Vec<f64>,
    /// (horizontal, vertical) beam spacing in degrees for the range samples.
    pub angular_res_deg: Vec<(f64, f64)>,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            side_m: 0.6,
            densities: vec![10, 20, 40],
            ranges_m: vec![6.0, 10.0, 15.0, 20.0, 25.0],
            angular_res_deg: vec![(0.2, 0.2)],
        }
    }
}

/// Planar n×n grid spanning a square of side `side`, centered at the origin
/// in the z = 0 plane.
pub fn board_grid(side: f64, n: usize) -> Vec<Vec3> {
    let n = n.max(2);
    let step = side / (n - 1) as f64;
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pts.push(Vec3::new(
                -side / 2.0 + i as f64 * step,
                -side / 2.0 + j as f64 * step,
                0.0,
            ));
        }
    }
    pts
}

/// Returns of a beam grid hitting a head-on square board at `range`.
pub fn sensor_grid(side: f64, range: f64, h_res_deg: f64, v_res_deg: f64) -> Vec<Vec3> {
    let half = side / 2.0;
    let max_az = (half / range).atan().to_degrees();
    let max_el = (half / range).atan().to_degrees();
    let na = (max_az / h_res_deg).floor() as i64;
    let ne = (max_el / v_res_deg).floor() as i64;
    let mut pts = Vec::new();
    for i in -na..=na {
        let az = (i as f64 * h_res_deg).to_radians();
        for j in -ne..=ne {
            let el = (j as f64 * v_res_deg).to_radians();
            let dir = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
            let p = dir * (range / dir.x);
            if p.y.abs() <= half && p.z.abs() <= half {
                pts.push(p);
            }
        }
    }
    pts
}

/// Reference descriptors from synthetic boards: one per grid density, plus
/// one per (range, beam spacing) pair with at least three returns.
pub fn build_references(
    spec: &ReferenceSpec,
    cfg: &DescriptorConfig,
) -> Result<Vec<Descriptor>, DescriptorError> {
    let mut refs = Vec::new();
    for &n in &spec.densities {
        refs.push(describe(&board_grid(spec.side_m, n), cfg)?);
    }
    for &range in &spec.ranges_m {
        for &(h, v) in &spec.angular_res_deg {
            let pts = sensor_grid(spec.side_m, range, h, v);
            if pts.len() >= 9 {
                refs.push(describe(&pts, cfg)?);
            }
        }
    }
    Ok(refs)
}
