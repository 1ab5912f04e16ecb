use nalgebra::{Matrix4, Rotation3, Unit};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GeometryError;
use crate::{Mat3, Vec3};

/// Orthonormality / determinant tolerance for a valid rotation block.
pub const ROTATION_TOLERANCE: f64 = 1e-9;
/// Drift above which `compose` re-orthonormalizes its product.
const REORTHONORMALIZE_DRIFT: f64 = 1e-12;

/// A proper rigid motion `x ↦ R·x + t`.
///
/// `{A→B}` in the frame graph is stored as the pose of `B` expressed in `A`,
/// so it maps `B` coordinates into `A` coordinates.
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

    /// Validated constructor.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        let t = Self {
            rotation,
            translation,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Mat3) -> Self {
        Self {
            rotation,
            translation: Vec3::zeros(),
        }
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vec3, angle: f64, translation: Vec3) -> Self {
        let rotation = Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle);
        Self {
            rotation: *rotation.matrix(),
            translation,
        }
    }

    /// Largest entry of `RᵀR − I`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Mat3::identity()).amax()
    }

    pub fn determinant_error(&self) -> f64 {
        (self.rotation.determinant() - 1.0).abs()
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = self.rotation.iter().all(|v| v.is_finite())
            && self.translation.iter().all(|v| v.is_finite());
        if !finite {
            return Err(GeometryError::InvalidTransform("non-finite entry".into()));
        }
        let ortho = self.orthonormality_error();
        if ortho > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidTransform(format!(
                "rotation not orthonormal (max |RᵀR−I| = {ortho:e})"
            )));
        }
        let det = self.determinant_error();
        if det > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidTransform(format!(
                "rotation determinant off by {det:e}"
            )));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let mut rotation = self.rotation * other.rotation;
        let drift = (rotation.transpose() * rotation - Mat3::identity()).amax();
        if drift > REORTHONORMALIZE_DRIFT {
            rotation = orthonormalize(&rotation);
        }
        RigidTransform {
            rotation,
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

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Column `i` of the rotation block (the frame's i-th axis in the parent).
    pub fn axis(&self, i: usize) -> Vec3 {
        self.rotation.column(i).into_owned()
    }

    /// Angle of the rotation block in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        rotation_angle(&self.rotation)
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let m = self.to_homogeneous();
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[4 * r + c] = m[(r, c)];
            }
        }
        out
    }

    /// Parses a row-major 4×4 homogeneous matrix; the bottom row must be
    /// `0 0 0 1` and the rotation block must be valid.
    pub fn from_row_major(a: &[f64; 16]) -> Result<Self, GeometryError> {
        let bottom = [a[12], a[13], a[14], a[15]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(GeometryError::InvalidTransform(format!(
                "bottom row must be [0, 0, 0, 1], got {bottom:?}"
            )));
        }
        let rotation = Mat3::new(a[0], a[1], a[2], a[4], a[5], a[6], a[8], a[9], a[10]);
        let translation = Vec3::new(a[3], a[7], a[11]);
        Self::new(rotation, translation)
    }
}

/// Nearest rotation matrix (polar factor via SVD).
pub fn orthonormalize(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Mat3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

/// Angle-axis angle of a rotation matrix in `[0, π]`.
///
/// Uses `atan2(|vee(R − Rᵀ)|/2, (tr R − 1)/2)`, which equals
/// `acos((tr R − 1)/2)` but stays accurate for tiny angles.
pub fn rotation_angle(r: &Mat3) -> f64 {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let skew = Vec3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    let sin = (skew.norm() / 2.0).min(1.0);
    sin.atan2(cos)
}

/// Rotation by `angle` radians about +z.
pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotation by `angle` radians about +x.
pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

impl Serialize for RigidTransform {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let a = <[f64; 16]>::deserialize(d)?;
        RigidTransform::from_row_major(&a).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn deviation_from_identity(t: &RigidTransform) -> (f64, f64) {
        (
            (t.rotation - Mat3::identity()).amax(),
            t.translation.norm(),
        )
    }

    #[test]
    fn compose_identity_left() {
        let t = RigidTransform::from_axis_angle(&Vec3::new(1.0, 2.0, 3.0), 0.7, Vec3::new(4.0, 5.0, 6.0));
        assert_eq!(RigidTransform::identity().compose(&t), t);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let t = RigidTransform::from_axis_angle(&Vec3::new(-1.0, 0.5, 2.0), 2.1, Vec3::new(10.0, -3.0, 0.25));
        let (r, tr) = deviation_from_identity(&t.compose(&t.inverse()));
        assert!(r <= 1e-12 && tr <= 1e-12, "{r} {tr}");
    }

    #[test]
    fn axis_aligned_composition() {
        let a = RigidTransform {
            rotation: rot_z(FRAC_PI_2),
            translation: Vec3::new(1.0, 0.0, 0.0),
        };
        let b = RigidTransform::from_rotation(rot_z(FRAC_PI_2));
        let c = a.compose(&b);
        assert_abs_diff_eq!(c.rotation, rot_z(std::f64::consts::PI), epsilon = 1e-15);
        assert_abs_diff_eq!(c.translation, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn invert_cases() {
        assert_eq!(RigidTransform::identity().inverse(), RigidTransform::identity());
        let t = RigidTransform::from_translation(Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(t.inverse().translation, Vec3::new(-1.0, -2.0, -3.0));
        assert_eq!(t.inverse().rotation, Mat3::identity());
    }

    #[test]
    fn row_major_layout() {
        let t = RigidTransform {
            rotation: rot_z(FRAC_PI_2),
            translation: Vec3::new(1.0, 2.0, 3.0),
        };
        let a = t.to_row_major();
        assert_eq!(a[3], 1.0);
        assert_eq!(a[7], 2.0);
        assert_eq!(a[11], 3.0);
        assert_eq!(&a[12..], &[0.0, 0.0, 0.0, 1.0]);
        // R[0][1] = -sin(90°)
        assert_eq!(a[1], -1.0);
        assert_eq!(RigidTransform::from_row_major(&a).unwrap(), t);
    }

    #[test]
    fn rejects_reflection_and_bad_bottom_row() {
        let mut a = RigidTransform::identity().to_row_major();
        a[0] = -1.0;
        assert!(RigidTransform::from_row_major(&a).is_err());
        let mut b = RigidTransform::identity().to_row_major();
        b[15] = 2.0;
        assert!(RigidTransform::from_row_major(&b).is_err());
    }

    #[test]
    fn compose_repairs_drift() {
        let mut skewed = rot_z(0.3);
        skewed[(0, 0)] += 1e-10;
        let a = RigidTransform::from_rotation(skewed);
        let c = a.compose(&RigidTransform::identity());
        assert!(c.orthonormality_error() < 1e-14);
    }

    #[test]
    fn rotation_angle_small_and_large() {
        assert_eq!(rotation_angle(&Mat3::identity()), 0.0);
        let small = 1e-9;
        assert_abs_diff_eq!(rotation_angle(&rot_x(small)), small, epsilon = 1e-20);
        assert_abs_diff_eq!(rotation_angle(&rot_x(3.0)), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rotation_angle(&rot_x(std::f64::consts::PI)), std::f64::consts::PI, epsilon = 1e-15);
    }
}
