use super::{Cluster, GroundMask, PointCloud, RangeImage};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    /// Neighboring cells join when the angle β between their range
    /// measurements exceeds this value, degrees.
    pub beta_thresh_deg: f64,
    pub min_cluster_points: usize,
    /// Empty cells that may be skipped when looking for a neighbor.
    pub max_gap: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            beta_thresh_deg: 10.0,
            min_cluster_points: 30,
            max_gap: 1,
        }
    }
}

/// Angle at the farther return in the triangle (sensor, far point, near
/// point). Large for surfaces facing the sensor, small across depth jumps.
pub(crate) fn beta_angle(r_a: f64, r_b: f64, psi: f64) -> f64 {
    let (d1, d2) = if r_a >= r_b { (r_a, r_b) } else { (r_b, r_a) };
    (d2 * psi.sin()).atan2(d1 - d2 * psi.cos())
}

/// Four-neighbor breadth-first labeling of non-ground cells. Clusters are
/// returned ordered by their smallest point index.
pub fn segment(
    img: &RangeImage,
    cloud: &PointCloud,
    ground: &GroundMask,
    cfg: &SegmentConfig,
) -> Vec<Cluster> {
    let beta_thresh = cfg.beta_thresh_deg.to_radians();
    let h_res = img.spec.h_res_deg.to_radians();
    let v_res = img.spec.v_res_deg.to_radians();
    let wraps = img.spec.wraps();
    let usable = |idx: usize| img.cells[idx].is_occupied() && !ground.cell_is_ground[idx];

    let mut label = vec![u32::MAX; img.cells.len()];
    let mut groups: Vec<Vec<u32>> = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..img.cells.len() {
        if label[start] != u32::MAX || !usable(start) {
            continue;
        }
        let id = groups.len() as u32;
        label[start] = id;
        queue.push_back(start);
        let mut members = Vec::new();
        while let Some(idx) = queue.pop_front() {
            members.extend_from_slice(&img.cells[idx].point_indices);
            let (row, col) = (idx / img.cols, idx % img.cols);
            let r0 = img.cells[idx].mean_range;
            for (dr, dc) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                for step in 1..=(cfg.max_gap as i64 + 1) {
                    let nr = row as i64 + dr * step;
                    let mut nc = col as i64 + dc * step;
                    if nr < 0 || nr >= img.rows as i64 {
                        break;
                    }
                    if nc < 0 || nc >= img.cols as i64 {
                        if !wraps {
                            break;
                        }
                        nc = nc.rem_euclid(img.cols as i64);
                    }
                    let nidx = img.index(nr as usize, nc as usize);
                    let cell = &img.cells[nidx];
                    if !cell.is_occupied() {
                        continue;
                    }
                    if ground.cell_is_ground[nidx] || label[nidx] != u32::MAX {
                        break;
                    }
                    let psi = step as f64 * if dr != 0 { v_res } else { h_res };
                    if beta_angle(r0, cell.mean_range, psi) > beta_thresh {
                        label[nidx] = id;
                        queue.push_back(nidx);
                    }
                    break;
                }
            }
        }
        groups.push(members);
    }

    let mut clusters: Vec<Cluster> = groups
        .into_iter()
        .filter(|g| g.len() >= cfg.min_cluster_points)
        .map(|g| Cluster::from_indices(cloud, g))
        .collect();
    clusters.sort_by_key(|c| c.point_indices[0]);
    clusters
}
