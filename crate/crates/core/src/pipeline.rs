//! End-to-end calibration.
//!
//! Stages, in order: board poses from the camera corners, optional frame
//! down-sampling, LiDAR board detection (range image, ground removal,
//! segmentation, descriptor matching), coarse grid search, association of
//! camera targets with LiDAR clusters, and the extrinsic optimization.
//!
//! The detection stages do not depend on the initial extrinsic, so they are
//! split off into [`prepare`]; experiments that vary the initial guess call
//! [`solve`] repeatedly on one prepared set.

use crate::camera::{
    estimate_board_poses, BoardModel, CameraDetection, FramePair, PnpSettings, RansacConfig,
};
use crate::cloud::{
    build_range_image, fringe_rays, remove_ground, segment, Cluster, GroundConfig, RangeImageSpec,
    SegmentConfig,
};
use crate::descriptor::{
    build_references, match_clusters, DescriptorConfig, MatchResult, RadiusMode, ReferenceSpec,
    DEFAULT_MATCH_THRESHOLD,
};
use crate::exec;
use crate::geom::{PinholeCamera, RigidTransform, Vec2, Vec3};
use crate::io::{
    DetectionStats, ExtrinsicReport, GridSearchReport, IoError, LoadedDataset, MethodReport,
    ReportDocument, SensorProfile, StageTimings, TargetResidual, REPORT_SCHEMA_VERSION,
};
use crate::optimize::{
    direct_calibrate, fit_board_pose, indirect_calibrate, BoxCostParams, CalibrationResult,
    DirectTarget, IndirectTarget, Method, OptimizeError, OptimizerSettings,
};
use crate::search::{
    coarse_grid_search, generate_candidates, SearchConfig, SearchError, SearchFrame,
};
use crate::sim::{mount_extrinsic, GroundTruth};
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("no detections: {0}")]
    NoDetections(String),
    #[error("grid search: every candidate scored zero")]
    AllZeroScores,
    #[error("calibration diverged: {0}")]
    Diverged(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl PipelineError {
    /// Stable machine-readable name.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Io(_) => "io",
            PipelineError::NoDetections(_) => "no_detections",
            PipelineError::AllZeroScores => "all_zero_scores",
            PipelineError::Diverged(_) => "diverged",
            PipelineError::Calibration(_) => "calibration",
        }
    }
}

impl From<OptimizeError> for PipelineError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Diverged { .. } => PipelineError::Diverged(e.to_string()),
            OptimizeError::NoTargets => PipelineError::NoDetections(e.to_string()),
            OptimizeError::InvalidSettings(m) => PipelineError::Config(m),
            other => PipelineError::Calibration(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Direct,
    Indirect,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> &'static [Method] {
        match self {
            MethodChoice::Direct => &[Method::Direct],
            MethodChoice::Indirect => &[Method::Indirect],
            MethodChoice::Both => &[Method::Direct, Method::Indirect],
        }
    }
}

impl std::str::FromStr for MethodChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(MethodChoice::Direct),
            "indirect" => Ok(MethodChoice::Indirect),
            "both" => Ok(MethodChoice::Both),
            _ => Err(format!(
                "unknown method `{s}` (expected direct, indirect or both)"
            )),
        }
    }
}

/// Coarse extrinsic as it would come from the mounting drawings: rotation
/// relative to the nominal axis swap, plus the lever arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtrinsicGuess {
    pub mount_euler_deg: [f64; 3],
    pub translation_m: [f64; 3],
}

impl Default for ExtrinsicGuess {
    fn default() -> Self {
        Self {
            mount_euler_deg: [0.0; 3],
            translation_m: [0.1, -0.22, -0.1],
        }
    }
}

impl ExtrinsicGuess {
    pub fn transform(&self) -> RigidTransform {
        mount_extrinsic(self.mount_euler_deg, self.translation_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub initial_extrinsic: ExtrinsicGuess,
    /// Overrides the dataset's board model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub board: Option<BoardModel>,
    /// Overrides the dataset's range image layout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range_image: Option<RangeImageSpec>,
    pub ground: GroundConfig,
    pub segment: SegmentConfig,
    pub descriptor: DescriptorConfig,
    /// Reference clusters; derived from the board and sensor when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub references: Option<ReferenceSpec>,
    pub match_threshold: f64,
    pub grid_search: bool,
    pub search: SearchConfig,
    /// Feed every segmented cluster to the grid search instead of the
    /// descriptor-accepted ones only.
    pub search_all_segmented: bool,
    /// Largest distance between a predicted board center and a cluster
    /// centroid for the two to be paired.
    pub association_gate_m: f64,
    pub box_cost: BoxCostParams,
    pub optimizer: OptimizerSettings,
    pub pnp: PnpSettings,
    pub ransac: RansacConfig,
    pub method: MethodChoice,
    /// A frame is kept only after the camera has moved this far since the
    /// last kept frame. Zero keeps every frame.
    pub sampling_distance_m: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            initial_extrinsic: ExtrinsicGuess::default(),
            board: None,
            range_image: None,
            ground: GroundConfig::default(),
            segment: SegmentConfig::default(),
            // A fixed outer radius of one board side makes the descriptor
            // scale aware: large planar faces spill into the outer ring
            // instead of being shrunk to board size.
            descriptor: DescriptorConfig {
                max_radius_mode: RadiusMode::Fixed { radius_m: 0.6 },
                ..DescriptorConfig::default()
            },
            references: None,
            match_threshold: DEFAULT_MATCH_THRESHOLD,
            grid_search: true,
            search: SearchConfig::default(),
            search_all_segmented: false,
            association_gate_m: 1.0,
            box_cost: BoxCostParams::default(),
            optimizer: OptimizerSettings::default(),
            pnp: PnpSettings::default(),
            ransac: RansacConfig::default(),
            method: MethodChoice::Direct,
            sampling_distance_m: 0.0,
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<(), PipelineError> {
    if ok {
        Ok(())
    } else {
        Err(PipelineError::Config(msg.into()))
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let g = &self.initial_extrinsic;
        check(
            g.mount_euler_deg.iter().all(|a| a.abs() <= 45.0),
            "initial_extrinsic.mount_euler_deg must lie within ±45°",
        )?;
        check(
            g.translation_m.iter().all(|t| t.abs() <= 10.0),
            "initial_extrinsic.translation_m must lie within ±10 m",
        )?;
        if let Some(b) = &self.board {
            check(
                b.side_length_m > 0.0 && b.tag_length_m > 0.0 && b.tag_length_m <= b.side_length_m,
                "board: need 0 < tag_length_m ≤ side_length_m",
            )?;
        }
        if let Some(r) = &self.range_image {
            r.validate()
                .map_err(|e| PipelineError::Config(format!("range_image: {e}")))?;
        }
        check(
            self.ground.angle_thresh_deg > 0.0 && self.ground.angle_thresh_deg < 90.0,
            "ground.angle_thresh_deg must lie in (0, 90)",
        )?;
        check(
            self.segment.beta_thresh_deg > 0.0 && self.segment.beta_thresh_deg < 90.0,
            "segment.beta_thresh_deg must lie in (0, 90)",
        )?;
        check(
            self.segment.min_cluster_points >= 3,
            "segment.min_cluster_points must be at least 3",
        )?;
        self.descriptor
            .validate()
            .map_err(|e| PipelineError::Config(format!("descriptor: {e}")))?;
        check(
            (0.0..=1.0).contains(&self.match_threshold),
            "match_threshold must lie in [0, 1]",
        )?;
        self.search
            .validate()
            .map_err(|e| PipelineError::Config(format!("search: {e}")))?;
        check(
            self.search.range_deg <= 45.0,
            "search.range_deg must not exceed 45",
        )?;
        check(
            self.association_gate_m > 0.0,
            "association_gate_m must be positive",
        )?;
        self.box_cost
            .validate()
            .map_err(|e| PipelineError::Config(format!("box_cost: {e}")))?;
        self.optimizer
            .validate()
            .map_err(|e| PipelineError::Config(format!("optimizer: {e}")))?;
        check(
            self.ransac.inlier_threshold_px > 0.0
                && self.ransac.max_iterations > 0
                && self.ransac.confidence > 0.0
                && self.ransac.confidence < 1.0,
            "ransac: need a positive threshold and iteration count, confidence in (0, 1)",
        )?;
        check(self.pnp.max_rms_px > 0.0, "pnp.max_rms_px must be positive")?;
        check(
            self.sampling_distance_m >= 0.0,
            "sampling_distance_m must be non-negative",
        )?;
        Ok(())
    }
}

/// Detection results for one kept frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetections {
    /// Position of the frame in the dataset.
    pub slot: usize,
    /// Camera targets whose pose was recovered.
    pub detections: Vec<CameraDetection>,
    pub clusters: Vec<Cluster>,
    pub matches: Vec<MatchResult>,
    /// Points of each cluster; empty for clusters the search and the
    /// optimizer will never look at.
    pub cluster_points: Vec<Vec<Vec3>>,
    /// Scan rays bordering each cluster that missed it, as unit directions.
    /// Empty wherever `cluster_points` is.
    pub cluster_fringe: Vec<Vec<Vec3>>,
}

impl FrameDetections {
    pub fn accepted(&self) -> impl Iterator<Item = usize> + '_ {
        self.matches
            .iter()
            .filter(|m| m.accepted)
            .map(|m| m.cluster_id)
    }
}

/// Output of the detection stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub frames: Vec<FrameDetections>,
    pub frames_total: usize,
    pub camera: PinholeCamera,
    pub board: BoardModel,
    pub range_image: RangeImageSpec,
    pub camera_ms: f64,
    pub lidar_ms: f64,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Frames to keep so that consecutive kept frames are at least `distance`
/// apart. Travel is measured by how far the camera-frame board positions
/// moved between frames, over the targets both frames saw.
pub fn downsample_by_distance(posed: &[Vec<CameraDetection>], distance: f64) -> Vec<usize> {
    if distance <= 0.0 {
        return (0..posed.len()).collect();
    }
    let mut kept = Vec::new();
    let mut last: Option<usize> = None;
    for (k, dets) in posed.iter().enumerate() {
        if dets.is_empty() {
            continue;
        }
        let keep = match last {
            None => true,
            Some(l) => {
                let moved: Vec<f64> = dets
                    .iter()
                    .filter_map(|d| {
                        let prev = posed[l].iter().find(|p| p.target_id == d.target_id)?;
                        Some((d.pose?.translation - prev.pose?.translation).norm())
                    })
                    .collect();
                moved.is_empty() || moved.iter().sum::<f64>() / moved.len() as f64 >= distance
            }
        };
        if keep {
            kept.push(k);
            last = Some(k);
        }
    }
    kept
}

/// A scan ray stopped this much short of a cluster may have been blocked
/// from hitting it, so it says nothing about the cluster's outline.
const FRINGE_OCCLUDER_GAP_M: f64 = 0.3;

/// Camera and LiDAR detection for every frame.
pub fn prepare(
    frames: &[FramePair],
    sensor: &SensorProfile,
    cfg: &PipelineConfig,
) -> Result<Prepared, PipelineError> {
    cfg.validate()?;
    let board = cfg.board.unwrap_or(sensor.board);
    let camera = sensor.camera;
    camera
        .validate()
        .map_err(|e| PipelineError::Config(format!("camera: {e}")))?;
    let spec = cfg.range_image.unwrap_or(sensor.range_image);
    spec.validate()
        .map_err(|e| PipelineError::Config(format!("range_image: {e}")))?;

    let t = Instant::now();
    let posed: Vec<Vec<CameraDetection>> = exec::map(frames, |f| {
        let mut d = f.detections.clone();
        estimate_board_poses(&mut d, &board, &camera, &cfg.pnp);
        d
    });
    let camera_ms = ms_since(t);

    let t = Instant::now();
    let kept = downsample_by_distance(&posed, cfg.sampling_distance_m);
    let references = cfg.references.clone().unwrap_or_else(|| ReferenceSpec {
        side_m: board.side_length_m,
        angular_res_deg: vec![(spec.h_res_deg, spec.v_res_deg)],
        ..ReferenceSpec::default()
    });
    let references = build_references(&references, &cfg.descriptor)
        .map_err(|e| PipelineError::Config(format!("references: {e}")))?;
    let detected = exec::map(&kept, |&slot| -> Result<FrameDetections, PipelineError> {
        let cloud = &frames[slot].cloud;
        let img =
            build_range_image(cloud, &spec).map_err(|e| PipelineError::Config(e.to_string()))?;
        let ground = remove_ground(&img, cloud, &cfg.ground);
        let clusters = segment(&img, cloud, &ground, &cfg.segment);
        let matches = match_clusters(
            cloud,
            &clusters,
            &references,
            cfg.match_threshold,
            &cfg.descriptor,
        );
        let kept_cluster = |m: &MatchResult| m.accepted || cfg.search_all_segmented;
        let cluster_points = clusters
            .iter()
            .zip(&matches)
            .map(|(c, m)| {
                if kept_cluster(m) {
                    cloud.select(&c.point_indices)
                } else {
                    Vec::new()
                }
            })
            .collect();
        let cluster_fringe = clusters
            .iter()
            .zip(&matches)
            .map(|(c, m)| {
                if kept_cluster(m) {
                    fringe_rays(&img, cloud, &ground, c, FRINGE_OCCLUDER_GAP_M)
                } else {
                    Vec::new()
                }
            })
            .collect();
        Ok(FrameDetections {
            slot,
            detections: posed[slot].clone(),
            clusters,
            matches,
            cluster_points,
            cluster_fringe,
        })
    });
    let frames_out = detected.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Prepared {
        frames: frames_out,
        frames_total: frames.len(),
        camera,
        board,
        range_image: spec,
        camera_ms,
        lidar_ms: ms_since(t),
    })
}

/// A camera target paired with a LiDAR cluster of the same frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    pub slot: usize,
    pub target_id: u32,
    /// Index into the owning frame's clusters.
    pub cluster: usize,
    pub board_to_camera: RigidTransform,
    pub corners: [Vec2; 4],
    pub distance_m: f64,
}

/// Pairs each posed target with the nearest accepted cluster whose centroid
/// lies within the gate of the board center predicted through `extrinsic`.
/// Each cluster is used at most once; closest pairs are taken first.
pub fn associate(prepared: &Prepared, extrinsic: &RigidTransform, gate_m: f64) -> Vec<Association> {
    let camera_to_lidar = extrinsic.inverse();
    let mut out = Vec::new();
    for f in &prepared.frames {
        let mut pairs = Vec::new();
        for (di, d) in f.detections.iter().enumerate() {
            let Some(pose) = d.pose else { continue };
            let predicted = camera_to_lidar.apply(&pose.translation);
            for ci in f.accepted() {
                let dist = (f.clusters[ci].centroid() - predicted).norm();
                if dist <= gate_m {
                    pairs.push((dist, di, ci));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut det_used = vec![false; f.detections.len()];
        let mut cl_used = vec![false; f.clusters.len()];
        let mut frame_pairs = Vec::new();
        for (dist, di, ci) in pairs {
            if det_used[di] || cl_used[ci] {
                continue;
            }
            det_used[di] = true;
            cl_used[ci] = true;
            let d = &f.detections[di];
            frame_pairs.push(Association {
                slot: f.slot,
                target_id: d.target_id,
                cluster: ci,
                board_to_camera: d.pose.expect("posed"),
                corners: d.corners,
                distance_m: dist,
            });
        }
        frame_pairs.sort_by_key(|a| a.target_id);
        out.extend(frame_pairs);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchSummary {
    pub candidates: usize,
    pub best_score: u64,
    pub best_perturbation_deg: [f64; 3],
}

/// Output of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub initial: RigidTransform,
    /// Extrinsic after the grid search (the initial one when disabled).
    pub coarse: RigidTransform,
    pub grid: Option<GridSearchSummary>,
    pub associations: Vec<Association>,
    pub results: Vec<CalibrationResult>,
    /// For each result, the associations it used, in residual order.
    pub result_targets: Vec<Vec<usize>>,
    pub grid_ms: f64,
    pub optimization_ms: f64,
}

fn frame_of<'a>(prepared: &'a Prepared, a: &Association) -> &'a FrameDetections {
    prepared
        .frames
        .iter()
        .find(|f| f.slot == a.slot)
        .expect("association refers to a prepared frame")
}

fn points_of<'a>(prepared: &'a Prepared, a: &Association) -> &'a [Vec3] {
    &frame_of(prepared, a).cluster_points[a.cluster]
}

/// Grid search, association and optimization from `initial`.
pub fn solve(
    prepared: &Prepared,
    initial: &RigidTransform,
    cfg: &PipelineConfig,
) -> Result<Solution, PipelineError> {
    let camera_targets: usize = prepared.frames.iter().map(|f| f.detections.len()).sum();
    let accepted: usize = prepared.frames.iter().map(|f| f.accepted().count()).sum();
    if camera_targets == 0 {
        return Err(PipelineError::NoDetections(
            "no camera target yielded a pose".into(),
        ));
    }
    if accepted == 0 {
        return Err(PipelineError::NoDetections(
            "no LiDAR cluster was accepted as a board".into(),
        ));
    }

    let t = Instant::now();
    let (coarse, grid) = if cfg.grid_search {
        let mut search_cfg = cfg.search;
        search_cfg.board_side_m = prepared.board.side_length_m;
        let frames: Vec<SearchFrame> = prepared
            .frames
            .iter()
            .map(|f| {
                let ids: Vec<usize> = if cfg.search_all_segmented {
                    (0..f.clusters.len()).collect()
                } else {
                    f.accepted().collect()
                };
                SearchFrame {
                    board_points: ids
                        .iter()
                        .flat_map(|&c| f.cluster_points[c].iter().copied())
                        .collect(),
                    board_poses: f.detections.iter().filter_map(|d| d.pose).collect(),
                }
            })
            .collect();
        let mut candidates = generate_candidates(initial, &search_cfg)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let outcome =
            coarse_grid_search(&frames, &mut candidates, &prepared.range_image, &search_cfg)
                .map_err(|e| match e {
                    SearchError::NoDetections => PipelineError::NoDetections(
                        "no frame has both a camera target and a LiDAR board".into(),
                    ),
                    SearchError::AllZeroScores | SearchError::OutOfFov => {
                        PipelineError::AllZeroScores
                    }
                    SearchError::InvalidConfig(m) => PipelineError::Config(m),
                })?;
        let summary = GridSearchSummary {
            candidates: candidates.len(),
            best_score: outcome.best_score,
            best_perturbation_deg: candidates.perturbations[outcome.best_index].to_degrees(),
        };
        (outcome.extrinsic, Some(summary))
    } else {
        (*initial, None)
    };
    let grid_ms = ms_since(t);

    let t = Instant::now();
    let associations = associate(prepared, &coarse, cfg.association_gate_m);
    if associations.is_empty() {
        return Err(PipelineError::Diverged(format!(
            "no LiDAR board lies within {} m of any board center predicted by the coarse extrinsic",
            cfg.association_gate_m
        )));
    }
    let mut results = Vec::new();
    let mut result_targets = Vec::new();
    let mut first_err = None;
    for &method in cfg.method.methods() {
        let r = match method {
            Method::Direct => run_direct(prepared, &associations, &coarse, cfg),
            Method::Indirect => run_indirect(prepared, &associations, &coarse, cfg),
        };
        match r {
            Ok((r, used)) => {
                results.push(r);
                result_targets.push(used);
            }
            Err(e) => {
                log::warn!("{method:?} calibration failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    if results.is_empty() {
        return Err(first_err.expect("at least one method ran"));
    }
    Ok(Solution {
        initial: *initial,
        coarse,
        grid,
        associations,
        results,
        result_targets,
        grid_ms,
        optimization_ms: ms_since(t),
    })
}

fn run_direct(
    prepared: &Prepared,
    associations: &[Association],
    coarse: &RigidTransform,
    cfg: &PipelineConfig,
) -> Result<(CalibrationResult, Vec<usize>), PipelineError> {
    let targets: Vec<DirectTarget> = associations
        .iter()
        .map(|a| DirectTarget {
            frame: a.slot,
            points: points_of(prepared, a).to_vec(),
            board_to_camera: a.board_to_camera,
        })
        .collect();
    let mut params = cfg.box_cost;
    params.half_side = prepared.board.half_side();
    let r = direct_calibrate(&targets, coarse, &params, &cfg.optimizer, &prepared.camera)?;
    Ok((r, (0..associations.len()).collect()))
}

/// Board poses fitted per target, starting from the camera pose carried
/// through the coarse extrinsic. Targets whose fit diverges are left out;
/// the returned vector is parallel to `associations`.
pub fn fit_targets(
    prepared: &Prepared,
    associations: &[Association],
    coarse: &RigidTransform,
    params: &BoxCostParams,
    settings: &OptimizerSettings,
) -> Vec<Option<IndirectTarget>> {
    exec::map(associations, |a| {
        let init = a.board_to_camera.inverse().compose(coarse);
        let f = frame_of(prepared, a);
        match fit_board_pose(
            &f.cluster_points[a.cluster],
            &f.cluster_fringe[a.cluster],
            &init,
            params,
            settings,
        ) {
            Ok(fit) => Some(IndirectTarget {
                frame: a.slot,
                lidar_to_board: fit.lidar_to_board,
                corners: a.corners,
            }),
            Err(e) => {
                log::debug!(
                    "frame {} target {}: board fit rejected: {e}",
                    a.slot,
                    a.target_id
                );
                None
            }
        }
    })
}

fn run_indirect(
    prepared: &Prepared,
    associations: &[Association],
    coarse: &RigidTransform,
    cfg: &PipelineConfig,
) -> Result<(CalibrationResult, Vec<usize>), PipelineError> {
    let mut params = cfg.box_cost;
    params.half_side = prepared.board.half_side();
    let fitted = fit_targets(prepared, associations, coarse, &params, &cfg.optimizer);
    let used: Vec<usize> = (0..fitted.len()).filter(|&k| fitted[k].is_some()).collect();
    let targets: Vec<IndirectTarget> = fitted.into_iter().flatten().collect();
    let r = indirect_calibrate(&targets, &prepared.board, &prepared.camera, &cfg.ransac)?;
    Ok((r, used))
}

/// Everything one calibration run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub prepared: Prepared,
    pub solution: Solution,
    pub report: ReportDocument,
}

/// Runs every stage on a loaded dataset and assembles the report. Truth, if
/// present, adds error and detection statistics to the report.
pub fn run(dataset: &LoadedDataset, cfg: &PipelineConfig) -> Result<RunOutput, PipelineError> {
    let prepared = prepare(&dataset.frames, &dataset.manifest.sensor, cfg)?;
    let solution = solve(&prepared, &cfg.initial_extrinsic.transform(), cfg)?;
    let report = build_report(
        &dataset.manifest.name,
        &dataset.frames,
        &prepared,
        &solution,
        cfg,
        dataset.truth.as_ref(),
    );
    Ok(RunOutput {
        prepared,
        solution,
        report,
    })
}

pub fn build_report(
    name: &str,
    frames: &[FramePair],
    prepared: &Prepared,
    solution: &Solution,
    cfg: &PipelineConfig,
    truth: Option<&GroundTruth>,
) -> ReportDocument {
    let results = solution
        .results
        .iter()
        .zip(&solution.result_targets)
        .map(|(r, used)| {
            let residuals: Vec<TargetResidual> = used
                .iter()
                .zip(&r.residuals_px)
                .map(|(&k, &res)| {
                    let a = &solution.associations[k];
                    TargetResidual {
                        frame: frames[a.slot].index,
                        target_id: a.target_id,
                        residual_px: res,
                    }
                })
                .collect();
            let finite: Vec<f64> = r
                .residuals_px
                .iter()
                .copied()
                .filter(|v| v.is_finite())
                .collect();
            MethodReport {
                method: r.method,
                extrinsic: ExtrinsicReport::new(&r.extrinsic),
                converged: r.converged,
                iterations: r.iterations,
                initial_cost: r.initial_cost,
                final_cost: r.final_cost,
                mean_residual_px: (!finite.is_empty())
                    .then(|| finite.iter().sum::<f64>() / finite.len() as f64),
                residuals,
            }
        })
        .collect();
    let detection = DetectionStats {
        frames_total: prepared.frames_total,
        frames_used: prepared.frames.len(),
        camera_targets: prepared.frames.iter().map(|f| f.detections.len()).sum(),
        lidar_clusters: prepared.frames.iter().map(|f| f.clusters.len()).sum(),
        accepted_clusters: prepared.frames.iter().map(|f| f.accepted().count()).sum(),
        associated_targets: solution.associations.len(),
    };
    let (detection_pr, truth_rows) = match truth {
        Some(t) => (
            Some(crate::eval::pr_point(
                &crate::eval::cluster_outcomes(prepared, t, cfg.segment.min_cluster_points),
                cfg.match_threshold,
            )),
            solution
                .results
                .iter()
                .map(|r| crate::eval::compare(r.method, &r.extrinsic, t, &prepared.camera))
                .collect(),
        ),
        None => (None, Vec::new()),
    };
    ReportDocument {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset: name.to_string(),
        sampling_distance_m: cfg.sampling_distance_m,
        alpha_m: cfg.box_cost.alpha,
        initial_extrinsic: ExtrinsicReport::new(&solution.initial),
        grid_search: solution.grid.as_ref().map(|g| GridSearchReport {
            candidates: g.candidates,
            range_deg: cfg.search.range_deg,
            step_deg: cfg.search.step_deg,
            best_score: g.best_score,
            best_perturbation_deg: g.best_perturbation_deg,
        }),
        results,
        timings_ms: StageTimings {
            lidar_detection_ms: prepared.lidar_ms,
            camera_detection_ms: prepared.camera_ms,
            grid_search_ms: solution.grid_ms,
            optimization_ms: solution.optimization_ms,
        },
        detection,
        detection_pr,
        truth: truth_rows,
    }
}
