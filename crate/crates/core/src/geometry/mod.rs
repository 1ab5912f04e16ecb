//! Rigid-transform algebra and triangle-mesh spatial queries.

mod bvh;
mod mesh;
pub mod shapes;
pub mod stl;
mod transform;

use thiserror::Error;

pub use mesh::{
    closest_point_on_triangle, plane_normal, ray_triangle, triangle_area, SurfaceHit, TriangleMesh,
    MIN_TRIANGLE_AREA, RAY_MIN_PARAMETER,
};
pub use transform::{orthonormalize, rot_x, rot_z, rotation_angle, RigidTransform, ROTATION_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid rigid transform: {0}")]
    InvalidTransform(String),
    #[error("triangle {triangle} references vertex {index} but only {vertex_count} vertices exist")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("triangle {triangle} is degenerate (area {area:e} mm²)")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("vertex {0} has a non-finite coordinate")]
    NonFiniteVertex(usize),
    #[error("no triangle with id {0}")]
    NoSuchTriangle(usize),
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("STL parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(String),
}

/// `compose(a, b)`: apply `b`, then `a`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}
