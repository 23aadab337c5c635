use crate::geom::{RigidTransform, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoxCostParams {
    /// Half the board side, bounding the in-plane coordinates.
    pub half_side: f64,
    /// Tolerance band on the out-of-plane coordinate.
    pub alpha: f64,
    /// Width of the quadratic blend at the band edges. Zero keeps the exact
    /// piecewise-linear cost.
    #[serde(default)]
    pub smoothing: f64,
}

impl Default for BoxCostParams {
    fn default() -> Self {
        Self {
            half_side: 0.3,
            alpha: 0.0,
            smoothing: 0.0,
        }
    }
}

impl BoxCostParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.half_side > 0.0) {
            return Err("half_side must be positive".into());
        }
        if !(self.alpha >= 0.0) || !(self.smoothing >= 0.0) {
            return Err("alpha and smoothing must be non-negative".into());
        }
        Ok(())
    }
}

/// Zero inside the band |λ| ≤ α, distance to the band outside it.
#[inline]
pub fn box_cost(lambda: f64, alpha: f64) -> f64 {
    let excess = lambda.abs() - alpha;
    if excess > 0.0 {
        excess
    } else {
        0.0
    }
}

/// The band cost written as the minimum distance to either band edge.
pub fn box_cost_min_form(lambda: f64, alpha: f64) -> f64 {
    if lambda.abs() <= alpha {
        0.0
    } else {
        (lambda - alpha).abs().min((lambda + alpha).abs())
    }
}

/// Huber-style easing of [`box_cost`]: quadratic for an excess below
/// `delta`, linear (offset by delta/2) beyond.
#[inline]
pub fn smoothed_box_cost(lambda: f64, alpha: f64, delta: f64) -> f64 {
    let e = box_cost(lambda, alpha);
    if delta <= 0.0 {
        e
    } else if e < delta {
        e * e / (2.0 * delta)
    } else {
        e - delta / 2.0
    }
}

#[inline]
pub(crate) fn point_cost(p: &Vec3, params: &BoxCostParams) -> f64 {
    let d = params.smoothing;
    smoothed_box_cost(p.x, params.half_side, d)
        + smoothed_box_cost(p.y, params.half_side, d)
        + smoothed_box_cost(p.z, params.alpha, d)
}

/// Sum of per-axis band costs of `points` (LiDAR frame) after mapping them
/// into the board frame with `lidar_to_board`.
pub fn board_cost(lidar_to_board: &RigidTransform, points: &[Vec3], params: &BoxCostParams) -> f64 {
    points
        .iter()
        .map(|p| point_cost(&lidar_to_board.apply(p), params))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn band_examples() {
        assert_eq!(box_cost(0.2, 0.3), 0.0);
        assert!((box_cost(0.5, 0.3) - 0.2).abs() < 1e-15);
        assert!((box_cost(-0.5, 0.3) - 0.2).abs() < 1e-15);
        assert!((box_cost_min_form(0.5, 0.3) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn reduced_form_matches_min_form_on_a_million_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1_000_000 {
            let lambda = rng.random_range(-2.0..2.0);
            let alpha = rng.random_range(0.0..1.0);
            assert!((box_cost(lambda, alpha) - box_cost_min_form(lambda, alpha)).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_point_outside_face() {
        let params = BoxCostParams::default();
        let c = board_cost(
            &RigidTransform::identity(),
            &[Vec3::new(0.4, 0.0, 0.0)],
            &params,
        );
        assert!((c - 0.1).abs() < 1e-12);
    }

    #[test]
    fn smoothing_is_continuous_and_below_exact() {
        let d = 0.01;
        for k in 0..200 {
            let l = -0.5 + k as f64 * 0.005;
            let s = smoothed_box_cost(l, 0.1, d);
            assert!(s <= box_cost(l, 0.1) + 1e-15);
            assert!(box_cost(l, 0.1) - s <= d / 2.0 + 1e-15);
        }
    }

    proptest! {
        #[test]
        fn band_properties(l in -3.0f64..3.0, a in 0.0f64..1.0, dl in -1.0f64..1.0) {
            let c = box_cost(l, a);
            prop_assert_eq!(c, box_cost(-l, a));
            prop_assert!(c >= 0.0);
            prop_assert_eq!(c == 0.0, l.abs() <= a);
            prop_assert!((box_cost(l + dl, a) - c).abs() <= dl.abs() + 1e-12);
        }
    }
}
