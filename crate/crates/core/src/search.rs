//! Coarse rotation grid search: every candidate extrinsic is scored by how
//! many detected board points fall inside the range-image boxes around the
//! board centers it predicts.

use crate::cloud::{RangeImageSpec, RoiRect};
use crate::exec;
use crate::geom::{EulerAngles, RigidTransform, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("no frame has both LiDAR board detections and camera board poses")]
    NoDetections,
    #[error("every candidate scored zero")]
    AllZeroScores,
    #[error("board box lies outside the range image")]
    OutOfFov,
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Half-width of the perturbation grid per Euler axis.
    pub range_deg: f64,
    pub step_deg: f64,
    pub board_side_m: f64,
    /// Only count points closer than one board side to the predicted
    /// center range.
    #[serde(default)]
    pub range_gate: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            range_deg: 9.0,
            step_deg: 1.5,
            board_side_m: 0.6,
            range_gate: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if !(self.range_deg >= 0.0) || !(self.board_side_m > 0.0) {
            return Err(SearchError::InvalidConfig(
                "range and board side must be non-negative".into(),
            ));
        }
        if self.range_deg > 0.0 && !(self.step_deg > 0.0 && self.step_deg <= self.range_deg) {
            return Err(SearchError::InvalidConfig(
                "step must lie in (0, range]".into(),
            ));
        }
        Ok(())
    }

    pub fn steps_per_axis(&self) -> usize {
        if self.range_deg == 0.0 {
            1
        } else {
            (2.0 * self.range_deg / self.step_deg).round() as usize + 1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    /// LiDAR-to-camera candidates.
    pub candidates: Vec<RigidTransform>,
    /// Perturbation applied to the initial rotation, per candidate.
    pub perturbations: Vec<EulerAngles>,
    pub scores: Vec<u64>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Cartesian grid of roll/pitch/yaw perturbations applied on the LiDAR side
/// of `initial`; translation is left untouched. Roll varies slowest.
pub fn generate_candidates(
    initial: &RigidTransform,
    cfg: &SearchConfig,
) -> Result<CandidateSet, SearchError> {
    cfg.validate()?;
    let n = cfg.steps_per_axis();
    let value = |k: usize| {
        if n == 1 {
            0.0
        } else {
            (-cfg.range_deg + k as f64 * cfg.step_deg).to_radians()
        }
    };
    let mut candidates = Vec::with_capacity(n * n * n);
    let mut perturbations = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let e = EulerAngles::new(value(i), value(j), value(k));
                candidates.push(RigidTransform::new(
                    initial.rotation * e.to_matrix(),
                    initial.translation,
                ));
                perturbations.push(e);
            }
        }
    }
    let scores = vec![0; candidates.len()];
    Ok(CandidateSet {
        candidates,
        perturbations,
        scores,
    })
}

/// Bounding rectangle, in range-image cells, of the eight vertices of the
/// LiDAR-axis-aligned cube of side `side` centered on `center`.
pub fn calculate_roi(
    center: &Vec3,
    side: f64,
    spec: &RangeImageSpec,
) -> Result<RoiRect, SearchError> {
    let h = side / 2.0;
    let (rows, cols) = (spec.rows() as f64, spec.cols() as f64);
    let (_, c0) = spec.image_coords(center);
    let (mut r_lo, mut r_hi, mut c_lo, mut c_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    let mut any_inside = false;
    for k in 0..8 {
        let v = center
            + Vec3::new(
                if k & 1 == 0 { -h } else { h },
                if k & 2 == 0 { -h } else { h },
                if k & 4 == 0 { -h } else { h },
            );
        let (r, mut c) = spec.image_coords(&v);
        if spec.wraps() {
            // Keep the box contiguous around the center column.
            while c - c0 > cols / 2.0 {
                c -= cols;
            }
            while c0 - c > cols / 2.0 {
                c += cols;
            }
        }
        any_inside |= (0.0..rows).contains(&r) && (0.0..cols).contains(&c);
        r_lo = r_lo.min(r);
        r_hi = r_hi.max(r);
        c_lo = c_lo.min(c);
        c_hi = c_hi.max(c);
    }
    if !any_inside {
        return Err(SearchError::OutOfFov);
    }
    let clamp = |x: f64, n: f64| x.floor().clamp(0.0, n - 1.0) as usize;
    Ok(RoiRect {
        row_min: clamp(r_lo, rows),
        row_max: clamp(r_hi, rows),
        col_min: clamp(c_lo, cols),
        col_max: clamp(c_hi, cols),
    })
}

/// Input to the search for one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchFrame {
    /// Points of the descriptor-accepted clusters, LiDAR frame.
    pub board_points: Vec<Vec3>,
    /// Camera-estimated board poses (board to camera).
    pub board_poses: Vec<RigidTransform>,
}

/// Per-frame point counts over the occupied window of the range image, with
/// a summed-area table for O(1) rectangle queries.
struct CountImage {
    row0: usize,
    col0: usize,
    rows: usize,
    cols: usize,
    sat: Vec<u32>,
    /// (row, col, range) per point, used by the range-gated path.
    cells: Vec<(usize, usize, f64)>,
}

impl CountImage {
    fn new(points: &[Vec3], spec: &RangeImageSpec) -> Option<Self> {
        let cells: Vec<(usize, usize, f64)> = points
            .iter()
            .filter_map(|p| spec.cell_of(p).map(|(r, c)| (r, c, p.norm())))
            .collect();
        if cells.is_empty() {
            return None;
        }
        let row0 = cells.iter().map(|c| c.0).min()?;
        let col0 = cells.iter().map(|c| c.1).min()?;
        let rows = cells.iter().map(|c| c.0).max()? - row0 + 1;
        let cols = cells.iter().map(|c| c.1).max()? - col0 + 1;
        let w = cols + 1;
        let mut sat = vec![0u32; (rows + 1) * w];
        for &(r, c, _) in &cells {
            sat[(r - row0 + 1) * w + (c - col0 + 1)] += 1;
        }
        for r in 1..=rows {
            for c in 1..=cols {
                sat[r * w + c] +=
                    sat[(r - 1) * w + c] + sat[r * w + c - 1] - sat[(r - 1) * w + c - 1];
            }
        }
        Some(Self {
            row0,
            col0,
            rows,
            cols,
            sat,
            cells,
        })
    }

    fn count(&self, roi: &RoiRect) -> u64 {
        let r0 = roi.row_min.max(self.row0);
        let r1 = roi.row_max.min(self.row0 + self.rows - 1);
        let c0 = roi.col_min.max(self.col0);
        let c1 = roi.col_max.min(self.col0 + self.cols - 1);
        if r0 > r1 || c0 > c1 {
            return 0;
        }
        let (r0, r1, c0, c1) = (
            r0 - self.row0,
            r1 - self.row0 + 1,
            c0 - self.col0,
            c1 - self.col0 + 1,
        );
        let w = self.cols + 1;
        let s = |r: usize, c: usize| self.sat[r * w + c] as i64;
        (s(r1, c1) - s(r0, c1) - s(r1, c0) + s(r0, c0)) as u64
    }

    fn count_gated(&self, roi: &RoiRect, center_range: f64, gate: f64) -> u64 {
        self.cells
            .iter()
            .filter(|&&(r, c, d)| roi.contains(r, c) && (d - center_range).abs() <= gate)
            .count() as u64
    }
}

/// Score of one candidate over all prepared frames.
fn score_candidate(
    cand: &RigidTransform,
    frames: &[(CountImage, &[RigidTransform])],
    spec: &RangeImageSpec,
    cfg: &SearchConfig,
) -> u64 {
    let to_lidar = cand.inverse();
    let mut total = 0;
    for (img, poses) in frames {
        for pose in poses.iter() {
            let center = to_lidar.apply(&pose.translation);
            let Ok(roi) = calculate_roi(&center, cfg.board_side_m, spec) else {
                continue;
            };
            total += if cfg.range_gate {
                img.count_gated(&roi, center.norm(), cfg.board_side_m)
            } else {
                img.count(&roi)
            };
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub extrinsic: RigidTransform,
    pub best_index: usize,
    pub best_score: u64,
}

/// Scores every candidate (in parallel when enabled) and returns the best.
/// Ties go to the smallest perturbation angle, then the lowest index.
pub fn coarse_grid_search(
    frames: &[SearchFrame],
    candidates: &mut CandidateSet,
    spec: &RangeImageSpec,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    cfg.validate()?;
    let prepared: Vec<(CountImage, &[RigidTransform])> = frames
        .iter()
        .filter(|f| !f.board_poses.is_empty())
        .filter_map(|f| {
            CountImage::new(&f.board_points, spec).map(|img| (img, f.board_poses.as_slice()))
        })
        .collect();
    if prepared.is_empty() || candidates.is_empty() {
        return Err(SearchError::NoDetections);
    }
    candidates.scores = exec::map(&candidates.candidates, |c| {
        score_candidate(c, &prepared, spec, cfg)
    });
    let best = select_best(&candidates.scores, &candidates.perturbations);
    if candidates.scores[best] == 0 {
        return Err(SearchError::AllZeroScores);
    }
    Ok(SearchOutcome {
        extrinsic: candidates.candidates[best],
        best_index: best,
        best_score: candidates.scores[best],
    })
}

/// Deterministic argmax with the tie-break above.
pub fn select_best(scores: &[u64], perturbations: &[EulerAngles]) -> usize {
    let magnitude = |k: usize| crate::geom::rotation_angle(&perturbations[k].to_matrix());
    let mut best = 0;
    for k in 1..scores.len() {
        let better = scores[k] > scores[best]
            || (scores[k] == scores[best] && magnitude(k) < magnitude(best) - 1e-12);
        if better {
            best = k;
        }
    }
    best
}
