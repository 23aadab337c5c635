//! LiDAR scan handling: range-image projection, ground removal and
//! connected-component segmentation into clusters.

mod fringe;
mod ground;
mod range_image;
mod segment;

pub use fringe::fringe_rays;
pub use ground::{remove_ground, GroundConfig, GroundMask};
pub use range_image::{build_range_image, RangeCell, RangeImage, RangeImageSpec, RoiRect};
pub use segment::{segment, SegmentConfig};

use crate::geom::{Mat3, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CloudError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point {index} has non-finite coordinates")]
    NonFinite { index: usize },
    #[error("invalid range image spec: {0}")]
    InvalidSpec(String),
}

/// Raw LiDAR returns in the sensor frame (meters). Ring indices are optional
/// per-point metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub rings: Option<Vec<u16>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            rings: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<(), CloudError> {
        if let Some(index) = self
            .points
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(CloudError::NonFinite { index });
        }
        Ok(())
    }

    pub fn select(&self, indices: &[u32]) -> Vec<Vec3> {
        indices.iter().map(|&i| self.points[i as usize]).collect()
    }
}

/// A segmented group of non-ground points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub point_indices: Vec<u32>,
    pub centroid: [f64; 3],
    /// Half-sizes along the principal axes, largest first.
    pub extent: [f64; 3],
}

impl Cluster {
    pub fn from_indices(cloud: &PointCloud, mut point_indices: Vec<u32>) -> Self {
        point_indices.sort_unstable();
        let pts = cloud.select(&point_indices);
        let (centroid, _, axes) = principal_axes(&pts);
        let mut extent = [0.0f64; 3];
        for p in &pts {
            let d = p - centroid;
            for (k, e) in extent.iter_mut().enumerate() {
                *e = e.max(d.dot(&axes.column(k)).abs());
            }
        }
        Cluster {
            point_indices,
            centroid: centroid.into(),
            extent,
        }
    }

    pub fn centroid(&self) -> Vec3 {
        Vec3::from(self.centroid)
    }

    pub fn len(&self) -> usize {
        self.point_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_indices.is_empty()
    }
}

/// Centroid, eigenvalues (descending) and matching unit eigenvectors (as
/// columns) of the point covariance.
pub fn principal_axes(points: &[Vec3]) -> (Vec3, Vec3, Mat3) {
    if points.is_empty() {
        return (Vec3::zeros(), Vec3::zeros(), Mat3::identity());
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = Vec3::new(
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    );
    let axes = Mat3::from_columns(&[
        eig.eigenvectors.column(order[0]).into_owned(),
        eig.eigenvectors.column(order[1]).into_owned(),
        eig.eigenvectors.column(order[2]).into_owned(),
    ]);
    (centroid, values, axes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_axes_of_a_line() {
        let pts: Vec<Vec3> = (0..10)
            .map(|i| Vec3::new(i as f64, 2.0 * i as f64, 0.0))
            .collect();
        let (c, vals, axes) = principal_axes(&pts);
        assert!((c - Vec3::new(4.5, 9.0, 0.0)).norm() < 1e-12);
        assert!(vals[1].abs() < 1e-9 && vals[0] > 1.0);
        let dir = Vec3::new(1.0, 2.0, 0.0).normalize();
        assert!((axes.column(0).dot(&dir).abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cluster_centroid_is_member_mean() {
        let cloud = PointCloud::new(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(100.0, 0.0, 0.0),
            Vec3::new(1.0, 3.0, 0.0),
        ]);
        let c = Cluster::from_indices(&cloud, vec![3, 0, 1]);
        assert_eq!(c.point_indices, vec![0, 1, 3]);
        assert!((c.centroid() - Vec3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn non_finite_points_are_reported() {
        let cloud = PointCloud::new(vec![Vec3::zeros(), Vec3::new(f64::NAN, 0.0, 0.0)]);
        assert_eq!(cloud.validate(), Err(CloudError::NonFinite { index: 1 }));
    }
}
