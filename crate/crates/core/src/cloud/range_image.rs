use super::{CloudError, PointCloud};
use crate::geom::Vec3;
use serde::{Deserialize, Serialize};

/// Angular layout of a cylindrical range image. Row 0 is the highest
/// elevation, column 0 the largest azimuth (leftmost when looking along +x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RangeImageSpec {
    pub h_res_deg: f64,
    pub v_res_deg: f64,
    pub az_min_deg: f64,
    pub az_max_deg: f64,
    pub el_min_deg: f64,
    pub el_max_deg: f64,
    /// Points farther than `median + outlier_k * MAD` inside a cell are left
    /// out of the cell's mean range.
    pub outlier_k: f64,
    pub min_range_m: f64,
}

impl Default for RangeImageSpec {
    fn default() -> Self {
        Self {
            h_res_deg: 0.2,
            v_res_deg: 0.4,
            az_min_deg: -180.0,
            az_max_deg: 180.0,
            el_min_deg: -25.0,
            el_max_deg: 15.0,
            outlier_k: 3.0,
            min_range_m: 0.3,
        }
    }
}

impl RangeImageSpec {
    pub fn validate(&self) -> Result<(), CloudError> {
        let ok = self.h_res_deg > 0.0
            && self.v_res_deg > 0.0
            && self.az_max_deg > self.az_min_deg
            && self.el_max_deg > self.el_min_deg
            && self.az_max_deg - self.az_min_deg <= 360.0 + 1e-9
            && self.el_min_deg >= -90.0
            && self.el_max_deg <= 90.0
            && self.outlier_k > 0.0;
        if ok {
            Ok(())
        } else {
            Err(CloudError::InvalidSpec(format!("{self:?}")))
        }
    }

    pub fn rows(&self) -> usize {
        (((self.el_max_deg - self.el_min_deg) / self.v_res_deg) - 1e-9).ceil() as usize
    }

    pub fn cols(&self) -> usize {
        (((self.az_max_deg - self.az_min_deg) / self.h_res_deg) - 1e-9).ceil() as usize
    }

    /// Whether the azimuth axis closes on itself.
    pub fn wraps(&self) -> bool {
        self.az_max_deg - self.az_min_deg >= 360.0 - 1e-9
    }

    /// Continuous (row, col) image coordinates of the direction of `p`.
    /// Integer parts index the cell. Not clamped.
    pub fn image_coords(&self, p: &Vec3) -> (f64, f64) {
        let az = p.y.atan2(p.x).to_degrees();
        let el = p.z.atan2(p.x.hypot(p.y)).to_degrees();
        (
            (self.el_max_deg - el) / self.v_res_deg,
            (self.az_max_deg - az) / self.h_res_deg,
        )
    }

    /// Unit direction through the center of cell (row, col).
    pub fn cell_direction(&self, row: usize, col: usize) -> Vec3 {
        self.direction_at(row as f64 + 0.5, col as f64 + 0.5)
    }

    /// Unit direction at continuous image coordinates; inverse of
    /// [`Self::image_coords`].
    pub fn direction_at(&self, row: f64, col: f64) -> Vec3 {
        let el = (self.el_max_deg - row * self.v_res_deg).to_radians();
        let az = (self.az_max_deg - col * self.h_res_deg).to_radians();
        Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
    }

    pub fn cell_of(&self, p: &Vec3) -> Option<(usize, usize)> {
        let (r, c) = self.image_coords(p);
        if r < 0.0 || c < 0.0 {
            return None;
        }
        let (r, c) = (r.floor() as usize, c.floor() as usize);
        (r < self.rows() && c < self.cols()).then_some((r, c))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RangeCell {
    /// Robust mean range of the cell's inlier points; 0 when unoccupied.
    pub mean_range: f64,
    /// Inlier points contributing to `mean_range`.
    pub point_indices: Vec<u32>,
    /// Points rejected as far-frustum outliers.
    pub rejected: Vec<u32>,
    /// Mean position of the inlier points.
    pub mean_point: Vec3,
}

impl RangeCell {
    pub fn is_occupied(&self) -> bool {
        !self.point_indices.is_empty()
    }

    pub fn total_points(&self) -> usize {
        self.point_indices.len() + self.rejected.len()
    }
}

/// Inclusive rectangle of range-image cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoiRect {
    pub row_min: usize,
    pub row_max: usize,
    pub col_min: usize,
    pub col_max: usize,
}

impl RoiRect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row_min && row <= self.row_max && col >= self.col_min && col <= self.col_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage {
    pub spec: RangeImageSpec,
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<RangeCell>,
}

impl RangeImage {
    pub fn cell(&self, row: usize, col: usize) -> &RangeCell {
        &self.cells[row * self.cols + col]
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn occupied_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.is_occupied()).count()
    }
}

/// Projects every point onto the cylindrical grid and computes robust
/// per-cell mean ranges. Points outside the angular window are dropped.
pub fn build_range_image(
    cloud: &PointCloud,
    spec: &RangeImageSpec,
) -> Result<RangeImage, CloudError> {
    if cloud.is_empty() {
        return Err(CloudError::EmptyCloud);
    }
    spec.validate()?;
    let rows = spec.rows();
    let cols = spec.cols();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); rows * cols];
    for (i, p) in cloud.points.iter().enumerate() {
        if !p.iter().all(|v| v.is_finite()) || p.norm() < spec.min_range_m {
            continue;
        }
        if let Some((r, c)) = spec.cell_of(p) {
            members[r * cols + c].push(i as u32);
        }
    }
    let cells = members
        .into_iter()
        .map(|idx| summarize_cell(cloud, idx, spec.outlier_k))
        .collect();
    Ok(RangeImage {
        spec: *spec,
        rows,
        cols,
        cells,
    })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn summarize_cell(cloud: &PointCloud, idx: Vec<u32>, outlier_k: f64) -> RangeCell {
    match idx.len() {
        0 => RangeCell::default(),
        1 => {
            let p = cloud.points[idx[0] as usize];
            RangeCell {
                mean_range: p.norm(),
                point_indices: idx,
                rejected: Vec::new(),
                mean_point: p,
            }
        }
        _ => {
            let ranges: Vec<f64> = idx
                .iter()
                .map(|&i| cloud.points[i as usize].norm())
                .collect();
            let mut sorted = ranges.clone();
            sorted.sort_by(f64::total_cmp);
            let med = median(&sorted);
            let mut dev: Vec<f64> = sorted.iter().map(|r| (r - med).abs()).collect();
            dev.sort_by(f64::total_cmp);
            let mad = median(&dev);
            let limit = med + outlier_k * mad + 1e-9;
            let mut point_indices = Vec::with_capacity(idx.len());
            let mut rejected = Vec::new();
            let (mut sum_r, mut sum_p) = (0.0, Vec3::zeros());
            for (&i, &r) in idx.iter().zip(&ranges) {
                if r <= limit {
                    point_indices.push(i);
                    sum_r += r;
                    sum_p += cloud.points[i as usize];
                } else {
                    rejected.push(i);
                }
            }
            let n = point_indices.len() as f64;
            RangeCell {
                mean_range: sum_r / n,
                point_indices,
                rejected,
                mean_point: sum_p / n,
            }
        }
    }
}
