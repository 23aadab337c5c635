//! Accuracy and detection metrics against simulator truth, and the
//! experiments built on them: detection precision/recall, STD across
//! repeated trajectories, the initial-error convergence trial and the
//! band-tolerance sweep.

use crate::geom::{EulerAngles, PinholeCamera, RigidTransform, Vec3};
use crate::io::{PrStats, TruthComparison};
use crate::optimize::{indirect_calibrate, IndirectTarget, Method};
use crate::pipeline::{associate, fit_targets, solve, PipelineConfig, PipelineError, Prepared};
use crate::sim::GroundTruth;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-axis (roll, pitch, yaw) error in degrees of the relative rotation
/// `truthᵀ · estimate`. Both extrinsics share the nominal axis swap, so this
/// is the rotation error expressed in the LiDAR frame.
pub fn euler_error_deg(estimate: &RigidTransform, truth: &RigidTransform) -> [f64; 3] {
    EulerAngles::from_matrix(&(truth.rotation.transpose() * estimate.rotation)).to_degrees()
}

pub fn translation_error_m(estimate: &RigidTransform, truth: &RigidTransform) -> f64 {
    (estimate.translation - truth.translation).norm()
}

/// Thresholds for calling a calibration converged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub max_axis_error_deg: f64,
    pub max_translation_error_m: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            max_axis_error_deg: 0.5,
            max_translation_error_m: 0.1,
        }
    }
}

impl Convergence {
    pub fn accepts(&self, estimate: &RigidTransform, truth: &RigidTransform) -> bool {
        euler_error_deg(estimate, truth)
            .iter()
            .all(|e| e.abs() < self.max_axis_error_deg)
            && translation_error_m(estimate, truth) < self.max_translation_error_m
    }
}

/// Mean pixel distance between the true LiDAR-frame tag corners projected
/// with `estimate` and with the true extrinsic, over every frame and board
/// the camera sees. NaN when nothing is visible.
pub fn projection_error_px(
    estimate: &RigidTransform,
    truth: &GroundTruth,
    cam: &PinholeCamera,
) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for f in &truth.frames {
        for b in f.boards.iter().filter(|b| !b.corners_px.is_empty()) {
            for v in &b.vertices_lidar[1..] {
                let p = Vec3::from(*v);
                if let (Ok(a), Ok(t)) = (
                    cam.project(&estimate.apply(&p)),
                    cam.project(&truth.extrinsic.apply(&p)),
                ) {
                    sum += (a - t).norm();
                    n += 1;
                }
            }
        }
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn compare(
    method: Method,
    estimate: &RigidTransform,
    truth: &GroundTruth,
    cam: &PinholeCamera,
) -> TruthComparison {
    TruthComparison {
        method,
        euler_error_deg: euler_error_deg(estimate, &truth.extrinsic),
        translation_error_m: translation_error_m(estimate, &truth.extrinsic),
        projection_error_px: projection_error_px(estimate, truth, cam),
    }
}

/// Truth view of one segmented cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterOutcome {
    pub slot: usize,
    pub score: f64,
    /// The board that labels more than half of the cluster's points.
    pub board: Option<u32>,
}

/// Descriptor outcomes with truth labels, plus the number of visible boards.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterOutcomes {
    pub clusters: Vec<ClusterOutcome>,
    /// (frame, board) pairs with at least `min_points` labeled returns.
    pub visible_boards: usize,
}

/// Labels each cluster by majority vote over its points' truth labels.
/// A board counts as visible in a frame when it has at least `min_points`
/// returns, the smallest cluster the segmentation can produce.
pub fn cluster_outcomes(
    prepared: &Prepared,
    truth: &GroundTruth,
    min_points: usize,
) -> ClusterOutcomes {
    let mut clusters = Vec::new();
    let mut visible = 0;
    for f in &prepared.frames {
        let t = &truth.frames[f.slot];
        visible += t
            .boards
            .iter()
            .filter(|b| b.lidar_points >= min_points)
            .count();
        for (c, m) in f.clusters.iter().zip(&f.matches) {
            let mut counts = std::collections::BTreeMap::<i32, usize>::new();
            for &i in &c.point_indices {
                if let Some(&l) = t.labels.get(i as usize) {
                    *counts.entry(l).or_default() += 1;
                }
            }
            let board = counts
                .iter()
                .find(|(&l, &n)| l >= 0 && 2 * n > c.len())
                .map(|(&l, _)| l as u32);
            clusters.push(ClusterOutcome {
                slot: f.slot,
                score: m.score,
                board,
            });
        }
    }
    ClusterOutcomes {
        clusters,
        visible_boards: visible,
    }
}

/// Precision and recall when clusters scoring at least `threshold` are
/// accepted. A visible board is recalled when some accepted cluster in its
/// frame is made of it.
pub fn pr_point(outcomes: &ClusterOutcomes, threshold: f64) -> PrStats {
    let accepted: Vec<&ClusterOutcome> = outcomes
        .clusters
        .iter()
        .filter(|c| c.score >= threshold)
        .collect();
    let tp_clusters = accepted.iter().filter(|c| c.board.is_some()).count();
    let fp = accepted.len() - tp_clusters;
    let mut found: Vec<(usize, u32)> = accepted
        .iter()
        .filter_map(|c| Some((c.slot, c.board?)))
        .collect();
    found.sort_unstable();
    found.dedup();
    let tp = found.len().min(outcomes.visible_boards);
    let fn_ = outcomes.visible_boards - tp;
    PrStats {
        threshold,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision: if accepted.is_empty() {
            1.0
        } else {
            tp_clusters as f64 / accepted.len() as f64
        },
        recall: if outcomes.visible_boards == 0 {
            1.0
        } else {
            tp as f64 / outcomes.visible_boards as f64
        },
    }
}

/// Thresholds 0.70, 0.71, ..., 0.99.
pub fn pr_thresholds() -> Vec<f64> {
    (70..=99).map(|k| k as f64 / 100.0).collect()
}

pub fn pr_curve(outcomes: &ClusterOutcomes, thresholds: &[f64]) -> Vec<PrStats> {
    thresholds.iter().map(|&t| pr_point(outcomes, t)).collect()
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Per-axis STD of a set of (roll, pitch, yaw) estimates.
pub fn euler_std(angles: &[[f64; 3]]) -> [f64; 3] {
    let axis = |k: usize| std_dev(&angles.iter().map(|a| a[k]).collect::<Vec<_>>());
    [axis(0), axis(1), axis(2)]
}

/// One row of an STD table: how much one Euler axis varies across repeated
/// runs, per method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdRow {
    pub sampling_distance_m: f64,
    pub axis: &'static str,
    pub runs: usize,
    pub direct_std_deg: f64,
    pub indirect_std_deg: f64,
}

pub const AXES: [&str; 3] = ["roll", "pitch", "yaw"];

/// Three rows (roll, pitch, yaw) from per-run Euler estimates of each method.
pub fn std_rows(
    sampling_distance_m: f64,
    direct: &[[f64; 3]],
    indirect: &[[f64; 3]],
) -> Vec<StdRow> {
    let d = euler_std(direct);
    let i = euler_std(indirect);
    (0..3)
        .map(|k| StdRow {
            sampling_distance_m,
            axis: AXES[k],
            runs: direct.len().max(indirect.len()),
            direct_std_deg: if direct.is_empty() { f64::NAN } else { d[k] },
            indirect_std_deg: if indirect.is_empty() { f64::NAN } else { i[k] },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub grid_search: bool,
    pub initial_roll_deg: f64,
    pub initial_pitch_deg: f64,
    pub initial_yaw_deg: f64,
    pub converged: bool,
    pub final_rotation_error_deg: f64,
    pub final_translation_error_m: f64,
    /// Failure kind when the pipeline stopped with an error.
    pub error: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTrial {
    pub rows: Vec<TrialRow>,
    pub with_grid: (usize, usize),
    pub without_grid: (usize, usize),
}

/// Convergence from randomly perturbed initial rotations, once with and once
/// without the grid search. Each trial draws one perturbation, uniform in
/// ±`perturb_deg` per axis and applied on the LiDAR side of the true
/// extrinsic, and runs both arms from it.
pub fn grid_trial(
    prepared: &Prepared,
    truth: &GroundTruth,
    cfg: &PipelineConfig,
    trials: usize,
    perturb_deg: f64,
    seed: u64,
    criterion: &Convergence,
) -> GridTrial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inits: Vec<[f64; 3]> = (0..trials)
        .map(|_| {
            let mut e = [0.0; 3];
            for v in &mut e {
                *v = if perturb_deg > 0.0 {
                    rng.random_range(-perturb_deg..=perturb_deg)
                } else {
                    0.0
                };
            }
            e
        })
        .collect();
    let mut rows = Vec::with_capacity(2 * trials);
    for grid in [true, false] {
        let mut c = cfg.clone();
        c.grid_search = grid;
        for (k, e) in inits.iter().enumerate() {
            let init = RigidTransform {
                rotation: truth.extrinsic.rotation
                    * EulerAngles::from_degrees(e[0], e[1], e[2]).to_matrix(),
                translation: truth.extrinsic.translation,
            };
            let (converged, rot, trans, error) = match solve(prepared, &init, &c) {
                Ok(s) => {
                    let est = &s.results[0].extrinsic;
                    (
                        criterion.accepts(est, &truth.extrinsic),
                        est.rotation_angle_to(&truth.extrinsic).to_degrees(),
                        translation_error_m(est, &truth.extrinsic),
                        None,
                    )
                }
                Err(err) => (false, f64::NAN, f64::NAN, Some(err.kind())),
            };
            rows.push(TrialRow {
                trial: k,
                grid_search: grid,
                initial_roll_deg: e[0],
                initial_pitch_deg: e[1],
                initial_yaw_deg: e[2],
                converged,
                final_rotation_error_deg: rot,
                final_translation_error_m: trans,
                error,
            });
        }
    }
    let tally = |grid: bool| {
        let arm: Vec<&TrialRow> = rows.iter().filter(|r| r.grid_search == grid).collect();
        (arm.iter().filter(|r| r.converged).count(), arm.len())
    };
    GridTrial {
        with_grid: tally(true),
        without_grid: tally(false),
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha_m: f64,
    /// Targets whose board fit was accepted.
    pub targets: usize,
    /// Mean reprojection residual of the fitted vertices against the
    /// detected corners.
    pub residual_px: f64,
    /// Mean projection error against truth; NaN without truth.
    pub projection_error_px: f64,
}

/// Indirect calibration for each band tolerance, from one coarse extrinsic
/// and one set of associations (both from a grid-searched solve at the
/// configured tolerance).
pub fn alpha_sweep(
    prepared: &Prepared,
    truth: Option<&GroundTruth>,
    cfg: &PipelineConfig,
    alphas: &[f64],
) -> Result<Vec<AlphaRow>, PipelineError> {
    let mut base = cfg.clone();
    base.method = crate::pipeline::MethodChoice::Direct;
    let coarse = solve(prepared, &cfg.initial_extrinsic.transform(), &base)?.coarse;
    let associations = associate(prepared, &coarse, cfg.association_gate_m);
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut params = cfg.box_cost;
        params.half_side = prepared.board.half_side();
        params.alpha = alpha;
        params
            .validate()
            .map_err(|m| PipelineError::Config(format!("alpha {alpha}: {m}")))?;
        let targets: Vec<IndirectTarget> =
            fit_targets(prepared, &associations, &coarse, &params, &cfg.optimizer)
                .into_iter()
                .flatten()
                .collect();
        let r = indirect_calibrate(&targets, &prepared.board, &prepared.camera, &cfg.ransac)?;
        let finite: Vec<f64> = r
            .residuals_px
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .collect();
        rows.push(AlphaRow {
            alpha_m: alpha,
            targets: targets.len(),
            residual_px: finite.iter().sum::<f64>() / finite.len().max(1) as f64,
            projection_error_px: truth.map_or(f64::NAN, |t| {
                projection_error_px(&r.extrinsic, t, &prepared.camera)
            }),
        });
    }
    Ok(rows)
}
