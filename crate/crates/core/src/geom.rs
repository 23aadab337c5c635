//! SE(3) transforms, Euler angles and the pinhole camera model.
//!
//! Frame conventions used throughout the crate:
//! - LiDAR: x forward, y left, z up.
//! - Camera: x right, y down, z forward.
//! - Board: origin at the board center, x right and y down when the printed
//!   face is viewed from the front, z pointing into the board.
//!
//! A [`RigidTransform`] named `a_to_b` maps coordinates expressed in frame `a`
//! into frame `b`: `p_b = R * p_a + t`.

use nalgebra::{Matrix3, Rotation3, Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("invalid camera intrinsics: {0}")]
    InvalidCamera(String),
}

/// Rigid body transform with an orthonormal rotation and a translation in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Builds a transform, projecting `rotation` onto SO(3).
    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation: nearest_rotation(&rotation),
            translation,
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Mat3) -> Self {
        Self::new(rotation, Vec3::zeros())
    }

    /// Rotation about `axis` by `angle` radians, no translation.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let r = Rotation3::from_scaled_axis(axis.normalize() * angle);
        Self {
            rotation: *r.matrix(),
            translation: Vec3::zeros(),
        }
    }

    /// Exponential-style local coordinates: `[tx, ty, tz, rx, ry, rz]` with the
    /// rotation part as a scaled axis in radians.
    pub fn from_local(v: &Vector6<f64>) -> Self {
        let r = Rotation3::from_scaled_axis(Vec3::new(v[3], v[4], v[5]));
        Self {
            rotation: *r.matrix(),
            translation: Vec3::new(v[0], v[1], v[2]),
        }
    }

    /// Inverse of [`RigidTransform::from_local`].
    pub fn to_local(&self) -> Vector6<f64> {
        let axis = Rotation3::from_matrix_unchecked(self.rotation).scaled_axis();
        Vector6::new(
            self.translation.x,
            self.translation.y,
            self.translation.z,
            axis.x,
            axis.y,
            axis.z,
        )
    }

    /// Returns `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Re-projects the rotation onto SO(3) to remove accumulated drift.
    pub fn normalized(&self) -> RigidTransform {
        RigidTransform {
            rotation: nearest_rotation(&self.rotation),
            translation: self.translation,
        }
    }

    /// Rotation angle in radians of the rotation part.
    pub fn rotation_angle(&self) -> f64 {
        rotation_angle(&self.rotation)
    }

    /// Angle in radians of the relative rotation between two transforms.
    pub fn rotation_angle_to(&self, other: &RigidTransform) -> f64 {
        rotation_angle(&(self.rotation.transpose() * other.rotation))
    }

    pub fn to_matrix4(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn from_matrix4(m: &[[f64; 4]; 4]) -> RigidTransform {
        let rotation = Mat3::new(
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        );
        let translation = Vec3::new(m[0][3], m[1][3], m[2][3]);
        // Rotations that are already orthonormal to rounding are kept as
        // they are, so serialized transforms read back bit-identical.
        let exact = RigidTransform {
            rotation,
            translation,
        };
        if exact.orthonormality_error() < 1e-14 && rotation.determinant() > 0.0 {
            exact
        } else {
            RigidTransform::new(rotation, translation)
        }
    }

    /// Largest absolute deviation of `RᵀR` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Mat3::identity()).amax()
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

impl Serialize for RigidTransform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_matrix4().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = <[[f64; 4]; 4]>::deserialize(d)?;
        Ok(RigidTransform::from_matrix4(&m))
    }
}

/// Nearest rotation in the Frobenius sense (polar decomposition via SVD).
pub fn nearest_rotation(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        r = u2 * vt;
    }
    r
}

pub fn rotation_angle(r: &Mat3) -> f64 {
    let c = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    c.acos()
}

pub fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Intrinsic Z-Y-X Euler angles (yaw, then pitch, then roll), stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn from_degrees(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::new(roll.to_radians(), pitch.to_radians(), yaw.to_radians())
    }

    pub fn to_degrees(self) -> [f64; 3] {
        [
            self.roll.to_degrees(),
            self.pitch.to_degrees(),
            self.yaw.to_degrees(),
        ]
    }

    pub fn to_matrix(self) -> Mat3 {
        rot_z(self.yaw) * rot_y(self.pitch) * rot_x(self.roll)
    }

    pub fn from_matrix(r: &Mat3) -> Self {
        let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
        let roll = r[(2, 1)].atan2(r[(2, 2)]);
        let yaw = r[(1, 0)].atan2(r[(0, 0)]);
        Self { roll, pitch, yaw }
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.roll, self.pitch, self.yaw]
    }
}

/// Rotation-only transform from Euler angles.
pub fn euler_to_rotation(e: EulerAngles) -> RigidTransform {
    RigidTransform {
        rotation: e.to_matrix(),
        translation: Vec3::zeros(),
    }
}

pub fn rotation_to_euler(t: &RigidTransform) -> EulerAngles {
    EulerAngles::from_matrix(&t.rotation)
}

/// Undistorted pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl PinholeCamera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeomError> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeomError::InvalidCamera(
                "focal lengths must be positive".into(),
            ));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(GeomError::InvalidCamera("cx outside image".into()));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(GeomError::InvalidCamera("cy outside image".into()));
        }
        Ok(())
    }

    pub fn project(&self, p: &Vec3) -> Result<Vec2, GeomError> {
        if p.z <= 1e-6 {
            return Err(GeomError::BehindCamera { z: p.z });
        }
        Ok(Vec2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    /// Unit bearing vector through pixel `px`.
    pub fn bearing(&self, px: &Vec2) -> Vec3 {
        self.normalized(px).push(1.0).normalize()
    }

    /// Normalized image coordinates `((u - cx) / fx, (v - cy) / fy)`.
    pub fn normalized(&self, px: &Vec2) -> Vec2 {
        Vec2::new((px.x - self.cx) / self.fx, (px.y - self.cy) / self.fy)
    }

    pub fn contains(&self, px: &Vec2) -> bool {
        px.x >= 0.0 && px.y >= 0.0 && px.x < self.width as f64 && px.y < self.height as f64
    }
}

/// Free function form of [`PinholeCamera::project`].
pub fn project(cam: &PinholeCamera, p: &Vec3) -> Result<Vec2, GeomError> {
    cam.project(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).amax() < tol
    }

    #[test]
    fn compose_with_identity() {
        let t = RigidTransform::new(rot_z(0.3) * rot_x(0.1), Vec3::new(1.0, 2.0, 3.0));
        let c = RigidTransform::identity().compose(&t);
        assert!((c.rotation - t.rotation).amax() < 1e-15);
        assert!(close(&c.translation, &t.translation, 1e-15));
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let t = RigidTransform::new(rot_y(-0.7) * rot_z(1.1), Vec3::new(-4.0, 0.5, 9.0));
        let c = t.compose(&t.inverse());
        assert!((c.rotation - Mat3::identity()).amax() < 1e-9);
        assert!(c.translation.amax() < 1e-9);
    }

    #[test]
    fn two_quarter_turns_about_z() {
        let q = RigidTransform::from_rotation(rot_z(FRAC_PI_2));
        let p = q.compose(&q).apply(&Vec3::new(1.0, 0.0, 0.0));
        assert!(close(&p, &Vec3::new(-1.0, 0.0, 0.0), 1e-12));
    }

    #[test]
    fn apply_examples() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(RigidTransform::identity().apply(&p), p);
        let t = RigidTransform::from_translation(Vec3::new(0.0, 0.0, 5.0));
        assert_eq!(t.apply(&Vec3::new(1.0, 1.0, 1.0)), Vec3::new(1.0, 1.0, 6.0));
        // Rz(90°) * (1,0,0) = (0,1,0), then + (1,0,0)
        let t = RigidTransform::new(rot_z(FRAC_PI_2), Vec3::new(1.0, 0.0, 0.0));
        assert!(close(
            &t.apply(&Vec3::new(1.0, 0.0, 0.0)),
            &Vec3::new(1.0, 1.0, 0.0),
            1e-12
        ));
    }

    #[test]
    fn euler_examples() {
        let r = euler_to_rotation(EulerAngles::default());
        assert!((r.rotation - Mat3::identity()).amax() < 1e-15);

        let r = euler_to_rotation(EulerAngles::from_degrees(0.0, 0.0, 90.0));
        assert!(close(&r.apply(&Vec3::x()), &Vec3::y(), 1e-12));

        // Independent oracle: explicit per-axis matrices written out by hand.
        let (roll, pitch, yaw) = (10f64.to_radians(), 20f64.to_radians(), 30f64.to_radians());
        let rx = Mat3::from_row_slice(&[
            1.0,
            0.0,
            0.0, //
            0.0,
            roll.cos(),
            -roll.sin(), //
            0.0,
            roll.sin(),
            roll.cos(),
        ]);
        let ry = Mat3::from_row_slice(&[
            pitch.cos(),
            0.0,
            pitch.sin(), //
            0.0,
            1.0,
            0.0, //
            -pitch.sin(),
            0.0,
            pitch.cos(),
        ]);
        let rz = Mat3::from_row_slice(&[
            yaw.cos(),
            -yaw.sin(),
            0.0, //
            yaw.sin(),
            yaw.cos(),
            0.0, //
            0.0,
            0.0,
            1.0,
        ]);
        let oracle = rz * ry * rx;
        let r = euler_to_rotation(EulerAngles::new(roll, pitch, yaw));
        assert!((r.rotation - oracle).amax() < 1e-12);
        // Frozen entries of the oracle product.
        assert!((oracle[(0, 0)] - 0.813_797_681_349_373_7).abs() < 1e-12);
        assert!((oracle[(2, 0)] + 0.342_020_143_325_668_7).abs() < 1e-12);
    }

    #[test]
    fn project_examples() {
        let cam = PinholeCamera::new(1000.0, 1000.0, 960.0, 540.0, 1920, 1080).unwrap();
        assert_eq!(
            cam.project(&Vec3::new(0.0, 0.0, 5.0)).unwrap(),
            Vec2::new(960.0, 540.0)
        );
        assert_eq!(
            cam.project(&Vec3::new(1.0, 0.0, 1.0)).unwrap(),
            Vec2::new(1960.0, 540.0)
        );
        assert!(matches!(
            cam.project(&Vec3::new(0.0, 0.0, -1.0)),
            Err(GeomError::BehindCamera { .. })
        ));
    }

    #[test]
    fn invalid_camera_rejected() {
        assert!(PinholeCamera::new(-1.0, 1.0, 1.0, 1.0, 10, 10).is_err());
        assert!(PinholeCamera::new(1.0, 1.0, 10.0, 1.0, 10, 10).is_err());
    }

    #[test]
    fn normalization_removes_drift() {
        let mut t = RigidTransform::from_rotation(rot_x(0.01));
        for _ in 0..10_000 {
            t = t.compose(&RigidTransform::from_rotation(rot_y(1e-3) * rot_x(0.7)));
            t.rotation[(0, 1)] += 1e-12;
        }
        assert!(t.normalized().orthonormality_error() < 1e-12);
        assert!((t.normalized().rotation.determinant() - 1.0).abs() < 1e-12);
    }

    fn arb_transform() -> impl Strategy<Value = RigidTransform> {
        (
            -3.0..3.0f64,
            -1.5..1.5f64,
            -3.0..3.0f64,
            prop::array::uniform3(-50.0..50.0f64),
        )
            .prop_map(|(r, p, y, t)| {
                RigidTransform::new(EulerAngles::new(r, p, y).to_matrix(), Vec3::from(t))
            })
    }

    proptest! {
        #[test]
        fn composition_matches_sequential_application(
            a in arb_transform(), b in arb_transform(), p in prop::array::uniform3(-20.0..20.0f64)
        ) {
            let p = Vec3::from(p);
            let lhs = a.compose(&b).apply(&p);
            let rhs = a.apply(&b.apply(&p));
            prop_assert!((lhs - rhs).amax() < 1e-9);
        }

        #[test]
        fn transforms_are_isometries(
            t in arb_transform(),
            p in prop::array::uniform3(-20.0..20.0f64),
            q in prop::array::uniform3(-20.0..20.0f64),
        ) {
            let (p, q) = (Vec3::from(p), Vec3::from(q));
            let d0 = (p - q).norm();
            let d1 = (t.apply(&p) - t.apply(&q)).norm();
            prop_assert!((d0 - d1).abs() < 1e-9);
            prop_assert!(t.orthonormality_error() < 1e-9);
        }

        #[test]
        fn associativity(a in arb_transform(), b in arb_transform(), c in arb_transform()) {
            let l = a.compose(&b).compose(&c);
            let r = a.compose(&b.compose(&c));
            prop_assert!((l.rotation - r.rotation).amax() < 1e-9);
            prop_assert!((l.translation - r.translation).amax() < 1e-9);
        }

        #[test]
        fn euler_round_trip(
            roll in -3.1..3.1f64,
            pitch in -(80f64.to_radians())..80f64.to_radians(),
            yaw in -3.1..3.1f64,
        ) {
            let e = EulerAngles::new(roll, pitch, yaw);
            let back = rotation_to_euler(&euler_to_rotation(e));
            prop_assert!((back.roll - roll).abs() < 1e-9);
            prop_assert!((back.pitch - pitch).abs() < 1e-9);
            prop_assert!((back.yaw - yaw).abs() < 1e-9);
        }

        #[test]
        fn local_coordinates_round_trip(t in arb_transform()) {
            let back = RigidTransform::from_local(&t.to_local());
            prop_assert!((back.rotation - t.rotation).amax() < 1e-9);
        }
    }
}
