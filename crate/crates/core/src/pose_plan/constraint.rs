use super::{PlanError, PlanOptions, PoseConstraintInput, TailPoint};
use crate::{Mat3, RigidTransform, TriangleMesh, Vec3};

/// Minimum in-plane tail length (mm) below which the tail is treated as
/// parallel to the normal.
const TAIL_EPSILON: f64 = 1e-9;
/// Relative cross-product size below which plane points count as collinear.
const COLLINEAR_EPSILON: f64 = 1e-12;

/// A pose extracted from surface points, before a strategy tags it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePose {
    pub pose: RigidTransform,
    /// The mesh triangle supplying the plane (two-point constraints only).
    pub triangle_id: Option<usize>,
}

/// Builds the rotation `(x, y, n)` from a unit normal and a raw tail vector.
///
/// The tail is projected onto the plane orthogonal to `n` and renormalized,
/// then `x = y × n`, which makes the frame right-handed.
pub fn frame_from_normal_and_tail(normal: &Vec3, tail: &Vec3, center: Vec3) -> Result<RigidTransform, PlanError> {
    let in_plane = tail - normal * tail.dot(normal);
    let len = in_plane.norm();
    if !(len >= TAIL_EPSILON) {
        return Err(PlanError::DegenerateTail);
    }
    let y = in_plane / len;
    let x = y.cross(normal);
    Ok(RigidTransform {
        rotation: Mat3::from_columns(&[x, y, *normal]),
        translation: center,
    })
}

fn constraint_normal(p: &Vec3, p1: &Vec3, p2: &Vec3) -> Result<Vec3, PlanError> {
    let a = p1 - p;
    let b = p2 - p;
    let cross = a.cross(&b);
    let len = cross.norm();
    if !(len > COLLINEAR_EPSILON * a.norm() * b.norm()) || len == 0.0 {
        return Err(PlanError::DegenerateConstraint);
    }
    Ok(cross / len)
}

/// Extracts a pose from a constraint.
///
/// Four/three-point constraints use their own plane points and ignore the
/// mesh. Two-point constraints take the plane from the triangle closest to
/// the center and move the center onto that triangle.
pub fn pose_from_constraint(
    input: &PoseConstraintInput,
    mesh: Option<&TriangleMesh>,
    opts: &PlanOptions,
) -> Result<SurfacePose, PlanError> {
    match *input {
        PoseConstraintInput::FourPoint {
            p, p1, p2, tail, ..
        }
        | PoseConstraintInput::ThreePoint { p, p1, p2, tail, .. } => {
            let n = constraint_normal(&p, &p1, &p2)?;
            let pt = match tail {
                TailPoint::P1 => p1,
                TailPoint::P2 => p2,
            };
            let pose = frame_from_normal_and_tail(&n, &(pt - p), input.center())?;
            Ok(SurfacePose {
                pose,
                triangle_id: None,
            })
        }
        PoseConstraintInput::TwoPoint { center, tail_point } => {
            let mesh = mesh.ok_or(PlanError::MissingMesh("surface"))?;
            let hit = mesh.closest_point(&center)?;
            if hit.ray_parameter > opts.surface_bound_mm {
                return Err(PlanError::TargetOffSurface {
                    distance: hit.ray_parameter,
                    bound: opts.surface_bound_mm,
                });
            }
            let [v0, v1, v2] = mesh.triangle(hit.triangle_id)?;
            let n = constraint_normal(&v0, &v1, &v2)?;
            let pose = frame_from_normal_and_tail(&n, &(tail_point - center), hit.point)?;
            Ok(SurfacePose {
                pose,
                triangle_id: Some(hit.triangle_id),
            })
        }
    }
}
