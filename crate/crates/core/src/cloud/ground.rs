use super::{PointCloud, RangeImage};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundConfig {
    /// Maximum inclination between ground cells, degrees.
    pub angle_thresh_deg: f64,
    /// Minimum horizontal separation used when measuring inclination, meters.
    pub baseline_m: f64,
    /// Tolerated horizontal step back (noise) before a cell counts as an
    /// occluder standing in front of already-labeled ground, meters.
    pub back_tolerance_m: f64,
    /// Number of lowest occupied cells per column searched for a seed.
    pub seed_window: usize,
}

impl Default for GroundConfig {
    fn default() -> Self {
        Self {
            angle_thresh_deg: 8.0,
            baseline_m: 0.3,
            back_tolerance_m: 0.1,
            seed_window: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundMask {
    pub point_is_ground: Vec<bool>,
    pub cell_is_ground: Vec<bool>,
}

impl GroundMask {
    pub fn ground_count(&self) -> usize {
        self.point_is_ground.iter().filter(|&&g| g).count()
    }
}

struct ColumnCell {
    idx: usize,
    horiz: f64,
    z: f64,
    below_horizon: bool,
}

/// Column-wise inclination test. Each column is walked from the lowest
/// occupied row upwards; a cell joins the ground when its inclination to an
/// earlier ground cell stays below the threshold and it does not sit in front
/// of ground that was already seen farther away.
pub fn remove_ground(img: &RangeImage, cloud: &PointCloud, cfg: &GroundConfig) -> GroundMask {
    let tan_thresh = cfg.angle_thresh_deg.to_radians().tan();
    let mut cell_is_ground = vec![false; img.cells.len()];
    let mut column: Vec<ColumnCell> = Vec::with_capacity(img.rows);
    let mut ground: Vec<usize> = Vec::with_capacity(img.rows);

    for col in 0..img.cols {
        column.clear();
        for row in (0..img.rows).rev() {
            let idx = img.index(row, col);
            let cell = &img.cells[idx];
            if cell.is_occupied() {
                let p = cell.mean_point;
                column.push(ColumnCell {
                    idx,
                    horiz: p.x.hypot(p.y),
                    z: p.z,
                    below_horizon: p.z < 0.0,
                });
            }
        }
        ground.clear();
        let flat = |a: &ColumnCell, b: &ColumnCell| {
            let dh = b.horiz - a.horiz;
            dh >= -cfg.back_tolerance_m && (b.z - a.z).abs() <= dh.max(cfg.baseline_m) * tan_thresh
        };
        for k in 0..column.len() {
            let c = &column[k];
            if ground.is_empty() {
                if k >= cfg.seed_window {
                    break;
                }
                let next_ok = column.get(k + 1).is_none_or(|n| flat(c, n));
                if c.below_horizon && next_ok {
                    ground.push(k);
                }
                continue;
            }
            let last = &column[*ground.last().unwrap()];
            if c.horiz < last.horiz - cfg.back_tolerance_m {
                continue;
            }
            let reference = ground
                .iter()
                .rev()
                .map(|&g| &column[g])
                .find(|g| c.horiz - g.horiz >= cfg.baseline_m)
                .unwrap_or(&column[ground[0]]);
            if flat(reference, c) {
                ground.push(k);
            }
        }
        for &g in &ground {
            cell_is_ground[column[g].idx] = true;
        }
    }

    let mut point_is_ground = vec![false; cloud.len()];
    for (cell, &g) in img.cells.iter().zip(&cell_is_ground) {
        if g {
            for &i in cell.point_indices.iter().chain(&cell.rejected) {
                point_is_ground[i as usize] = true;
            }
        }
    }
    GroundMask {
        point_is_ground,
        cell_is_ground,
    }
}
