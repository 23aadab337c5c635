use super::rsvd::{rsvd_rank1, RsvdParams};
use super::{Descriptor, DescriptorError};
use crate::geom::Vec3;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RadiusMode {
    /// Outer ring radius follows the farthest point of each cluster.
    Adaptive,
    Fixed {
        radius_m: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescriptorConfig {
    /// Concentric rings per projection plane.
    pub l_bins: usize,
    /// Angular sectors per ring.
    pub t_bins: usize,
    /// Azimuth samples of the plane normal.
    pub p_az: usize,
    /// Elevation samples of the plane normal.
    pub q_el: usize,
    pub max_radius_mode: RadiusMode,
    pub rsvd: RsvdParams,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            l_bins: 8,
            t_bins: 16,
            p_az: 4,
            q_el: 16,
            max_radius_mode: RadiusMode::Adaptive,
            rsvd: RsvdParams::default(),
        }
    }
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<(), DescriptorError> {
        if self.l_bins < 2 || self.t_bins < 2 || self.p_az < 2 || self.q_el < 2 {
            return Err(DescriptorError::InvalidConfig(
                "all bin counts must be at least 2".into(),
            ));
        }
        if let RadiusMode::Fixed { radius_m } = self.max_radius_mode {
            if !(radius_m > 0.0) {
                return Err(DescriptorError::InvalidConfig(
                    "fixed radius must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.l_bins * self.t_bins + self.p_az * self.q_el
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unit normals of the projection planes, row order of the feature matrix.
    pub fn plane_normals(&self) -> Vec<Vec3> {
        let mut normals = Vec::with_capacity(self.p_az * self.q_el);
        for i in 0..self.p_az {
            let theta = PI * (i as f64 + 0.5) / self.p_az as f64;
            for j in 0..self.q_el {
                let phi = FRAC_PI_2 * (j as f64 + 0.5) / self.q_el as f64;
                normals.push(Vec3::new(
                    theta.cos() * phi.cos(),
                    theta.sin() * phi.cos(),
                    phi.sin(),
                ));
            }
        }
        normals
    }
}

/// Projection-histogram feature matrix: one row per plane, one column per
/// (ring, sector) bin, rows normalized to sum 1.
pub fn feature_matrix(
    aligned: &[Vec3],
    cfg: &DescriptorConfig,
) -> Result<DMatrix<f64>, DescriptorError> {
    cfg.validate()?;
    if aligned.is_empty() {
        return Err(DescriptorError::DegenerateCluster);
    }
    let r_max = match cfg.max_radius_mode {
        RadiusMode::Adaptive => aligned.iter().map(|p| p.norm()).fold(0.0, f64::max),
        RadiusMode::Fixed { radius_m } => radius_m,
    };
    let normals = cfg.plane_normals();
    let cols = cfg.l_bins * cfg.t_bins;
    let weight = 1.0 / aligned.len() as f64;
    let mut a = DMatrix::<f64>::zeros(normals.len(), cols);
    for (row, m) in normals.iter().enumerate() {
        let mut x_p = Vec3::x() - m * m.x;
        if x_p.norm() < 1e-9 {
            x_p = Vec3::y() - m * m.y;
        }
        let x_p = x_p.normalize();
        let y_p = m.cross(&x_p);
        for p in aligned {
            let (u, v) = (p.dot(&x_p), p.dot(&y_p));
            let r = u.hypot(v);
            let ring = if r_max > 0.0 {
                ((cfg.l_bins as f64 * (r / r_max).powi(2)) as usize).min(cfg.l_bins - 1)
            } else {
                0
            };
            // Sector edges are offset by half a sector so that points on the
            // aligned axes fall mid-bin.
            let turns = (v.atan2(u) + PI) / (2.0 * PI) + 0.5 / cfg.t_bins as f64;
            let sector = ((turns.fract() * cfg.t_bins as f64) as usize).min(cfg.t_bins - 1);
            a[(row, ring * cfg.t_bins + sector)] += weight;
        }
    }
    Ok(a)
}

/// Concatenation of the leading left (per plane) and right (per bin)
/// singular vectors of the feature matrix.
pub fn compute_m2dp(
    aligned: &[Vec3],
    cfg: &DescriptorConfig,
) -> Result<Descriptor, DescriptorError> {
    let a = feature_matrix(aligned, cfg)?;
    let r = rsvd_rank1(&a, &cfg.rsvd)?;
    let mut values = Vec::with_capacity(cfg.len());
    values.extend(r.u.iter());
    values.extend(r.v.iter());
    Ok(Descriptor { values })
}
