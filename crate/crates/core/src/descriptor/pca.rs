use super::DescriptorError;
use crate::cloud::principal_axes;
use crate::geom::{Mat3, Vec3};

/// Relative gap between the two leading eigenvalues below which the in-plane
/// orientation is taken from the fourth circular moment instead of the
/// (ill-defined) principal axes. Square boards sit in this regime.
const ISOTROPY_GAP: f64 = 0.15;

/// Skewness magnitudes below this fraction of Σ|proj|³ count as ties.
const SKEW_TIE: f64 = 1e-9;

/// Moves points into their eigen frame: centered on the centroid, axes along
/// principal directions (largest spread first), each in-plane axis oriented
/// so the third moment of the projections is non-negative.
pub fn pca_align(points: &[Vec3]) -> Result<Vec<Vec3>, DescriptorError> {
    if points.len() < 3 {
        return Err(DescriptorError::DegenerateCluster);
    }
    let (centroid, values, axes) = principal_axes(points);
    if !(values[0] > 0.0) || values[1] <= 1e-12 * values[0] {
        return Err(DescriptorError::DegenerateCluster);
    }
    let centered: Vec<Vec3> = points.iter().map(|p| p - centroid).collect();

    let mut x_axis = axes.column(0).into_owned();
    let mut y_axis = axes.column(1).into_owned();
    if (values[0] - values[1]) / values[0] < ISOTROPY_GAP {
        let (mut s, mut c) = (0.0, 0.0);
        for d in &centered {
            let (u, v) = (d.dot(&x_axis), d.dot(&y_axis));
            let r2 = u * u + v * v;
            let theta = v.atan2(u);
            s += r2 * r2 * (4.0 * theta).sin();
            c += r2 * r2 * (4.0 * theta).cos();
        }
        if s.hypot(c) > 1e-12 {
            // Corners dominate the r⁴-weighted fourth harmonic, so the
            // negated phase points along an edge of a square-like footprint.
            let phi = (-s).atan2(-c) / 4.0;
            let (sp, cp) = phi.sin_cos();
            let nx = x_axis * cp + y_axis * sp;
            let ny = -x_axis * sp + y_axis * cp;
            x_axis = nx;
            y_axis = ny;
        }
    }
    orient(&centered, &mut x_axis);
    orient(&centered, &mut y_axis);
    let z_axis = x_axis.cross(&y_axis);
    let frame = Mat3::from_rows(&[x_axis.transpose(), y_axis.transpose(), z_axis.transpose()]);
    Ok(centered.iter().map(|d| frame * d).collect())
}

fn orient(centered: &[Vec3], axis: &mut Vec3) {
    let (mut skew, mut scale) = (0.0, 0.0);
    for d in centered {
        let p = d.dot(axis);
        skew += p * p * p;
        scale += (p * p * p).abs();
    }
    let flip = if skew.abs() <= SKEW_TIE * scale {
        axis.x < 0.0 || (axis.x == 0.0 && axis.y < 0.0)
    } else {
        skew < 0.0
    };
    if flip {
        *axis = -*axis;
    }
}
