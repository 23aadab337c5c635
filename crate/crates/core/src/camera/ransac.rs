use super::p3p::p3p;
use super::refine::refine_pose;
use super::CameraError;
use crate::geom::{PinholeCamera, RigidTransform, Vec2, Vec3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const MIN_SAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub inlier_threshold_px: f64,
    pub max_iterations: usize,
    /// Early exit once this probability of having drawn an all-inlier
    /// sample is reached.
    pub confidence: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            inlier_threshold_px: 3.0,
            max_iterations: 200,
            confidence: 0.999,
            seed: 0x5eed_0002,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    /// World frame into camera frame.
    pub pose: RigidTransform,
    pub inliers: Vec<bool>,
    pub rms_px: f64,
}

impl RansacResult {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

/// Robust PnP: minimal P3P hypotheses disambiguated by a fourth point, scored
/// by inlier count, then refined on the consensus set.
pub fn ransac_pnp(
    points: &[Vec3],
    pixels: &[Vec2],
    cam: &PinholeCamera,
    cfg: &RansacConfig,
) -> Result<RansacResult, CameraError> {
    let n = points.len().min(pixels.len());
    if n < MIN_SAMPLE {
        return Err(CameraError::TooFewInliers {
            found: n,
            required: MIN_SAMPLE,
        });
    }
    let bearings: Vec<Vec3> = pixels.iter().map(|p| cam.bearing(p)).collect();
    let err = |pose: &RigidTransform, k: usize| match cam.project(&pose.apply(&points[k])) {
        Ok(q) => (q - pixels[k]).norm(),
        Err(_) => f64::INFINITY,
    };
    let score = |pose: &RigidTransform| {
        let mut count = 0;
        let mut sum = 0.0;
        for k in 0..n {
            let e = err(pose, k);
            if e < cfg.inlier_threshold_px {
                count += 1;
                sum += e;
            }
        }
        (count, sum)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(RigidTransform, usize, f64)> = None;
    let mut needed = cfg.max_iterations;
    let mut it = 0;
    while it < needed.min(cfg.max_iterations) {
        it += 1;
        let idx = sample(&mut rng, n, MIN_SAMPLE).into_vec();
        let world = [points[idx[0]], points[idx[1]], points[idx[2]]];
        let rays = [bearings[idx[0]], bearings[idx[1]], bearings[idx[2]]];
        let Some(hyp) = p3p(&world, &rays)
            .into_iter()
            .map(|pose| (err(&pose, idx[3]), pose))
            .filter(|(e, _)| e.is_finite())
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, pose)| pose)
        else {
            continue;
        };
        let (count, sum) = score(&hyp);
        let better = match best {
            None => count > 0,
            Some((_, c, s)) => count > c || (count == c && sum < s),
        };
        if better {
            best = Some((hyp, count, sum));
            let w = count as f64 / n as f64;
            let p_good = w.powi(MIN_SAMPLE as i32);
            if p_good >= 1.0 - 1e-12 {
                needed = it;
            } else if p_good > 0.0 {
                let k = (1.0 - cfg.confidence).ln() / (1.0 - p_good).ln();
                needed = (k.ceil() as usize).max(1);
            }
        }
    }

    let Some((mut pose, count, _)) = best else {
        return Err(CameraError::TooFewInliers {
            found: 0,
            required: MIN_SAMPLE,
        });
    };
    if count < MIN_SAMPLE {
        return Err(CameraError::TooFewInliers {
            found: count,
            required: MIN_SAMPLE,
        });
    }
    let mut inliers: Vec<bool> = (0..n)
        .map(|k| err(&pose, k) < cfg.inlier_threshold_px)
        .collect();
    for _ in 0..3 {
        let (p, q): (Vec<Vec3>, Vec<Vec2>) = (0..n)
            .filter(|&k| inliers[k])
            .map(|k| (points[k], pixels[k]))
            .unzip();
        if p.len() < MIN_SAMPLE {
            break;
        }
        pose = refine_pose(&pose, &p, &q, cam, 50);
        let next: Vec<bool> = (0..n)
            .map(|k| err(&pose, k) < cfg.inlier_threshold_px)
            .collect();
        if next == inliers {
            break;
        }
        inliers = next;
    }
    let used: Vec<usize> = (0..n).filter(|&k| inliers[k]).collect();
    if used.len() < MIN_SAMPLE {
        return Err(CameraError::TooFewInliers {
            found: used.len(),
            required: MIN_SAMPLE,
        });
    }
    let rms = (used.iter().map(|&k| err(&pose, k).powi(2)).sum::<f64>() / used.len() as f64).sqrt();
    Ok(RansacResult {
        pose,
        inliers,
        rms_px: rms,
    })
}
