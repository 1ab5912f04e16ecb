use serde::{Deserialize, Serialize};

use super::bvh::Bvh;
use super::GeometryError;
use crate::serde_util;
use crate::{RigidTransform, Vec3};

/// Triangles with area at or below this are rejected at load time (mm²).
pub const MIN_TRIANGLE_AREA: f64 = 1e-9;
/// Ray hits closer than this to the origin are ignored (mm).
pub const RAY_MIN_PARAMETER: f64 = 1e-9;
/// Slack on barycentric coordinates so rays through shared edges and
/// vertices are not lost to rounding.
const BARYCENTRIC_SLACK: f64 = 1e-12;

/// A point on a mesh surface.
///
/// For ray queries `ray_parameter` is the distance along the (unit) ray; for
/// closest-point queries it is the Euclidean distance from the query point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceHit {
    #[serde(with = "serde_util::vec3")]
    pub point: Vec3,
    pub triangle_id: usize,
    pub ray_parameter: f64,
}

/// Indexed triangle surface with a bounding-volume hierarchy.
///
/// Winding defines the outward normal: `normalize((v1 − v0) × (v2 − v0))`.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    bvh: Bvh,
}

impl TriangleMesh {
    /// Validates indices and rejects degenerate triangles, then builds the
    /// acceleration index.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFiniteVertex(i));
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i >= vertices.len() {
                    return Err(GeometryError::IndexOutOfRange {
                        triangle: t,
                        index: i,
                        vertex_count: vertices.len(),
                    });
                }
            }
            let area = triangle_area(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]);
            if !(area > MIN_TRIANGLE_AREA) {
                return Err(GeometryError::DegenerateTriangle { triangle: t, area });
            }
        }
        let bvh = Bvh::build(&vertices, &triangles);
        Ok(Self {
            vertices,
            triangles,
            bvh,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Corner positions of a triangle in stored winding order.
    pub fn triangle(&self, id: usize) -> Result<[Vec3; 3], GeometryError> {
        let tri = self
            .triangles
            .get(id)
            .ok_or(GeometryError::NoSuchTriangle(id))?;
        Ok([
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ])
    }

    /// Outward unit normal from the stored winding.
    pub fn triangle_normal(&self, id: usize) -> Result<Vec3, GeometryError> {
        let [a, b, c] = self.triangle(id)?;
        plane_normal(&a, &b, &c).ok_or(GeometryError::DegenerateTriangle {
            triangle: id,
            area: triangle_area(&a, &b, &c),
        })
    }

    pub fn surface_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| triangle_area(&self.vertices[t[0]], &self.vertices[t[1]], &self.vertices[t[2]]))
            .sum()
    }

    /// Globally nearest surface point. Exact distance ties go to the lowest
    /// triangle id.
    pub fn closest_point(&self, query: &Vec3) -> Result<SurfaceHit, GeometryError> {
        if self.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        let (id, point, d2) = self
            .bvh
            .closest(query, |id| {
                let [a, b, c] = self.corners(id);
                let p = closest_point_on_triangle(query, &a, &b, &c);
                (p, (p - query).norm_squared())
            })
            .expect("non-empty mesh always yields a closest triangle");
        Ok(SurfaceHit {
            point,
            triangle_id: id,
            ray_parameter: d2.sqrt(),
        })
    }

    /// Linear scan over every triangle. Same tie rule as [`closest_point`].
    ///
    /// [`closest_point`]: TriangleMesh::closest_point
    pub fn closest_point_exhaustive(&self, query: &Vec3) -> Result<SurfaceHit, GeometryError> {
        let mut best: Option<(usize, Vec3, f64)> = None;
        for id in 0..self.triangles.len() {
            let [a, b, c] = self.corners(id);
            let p = closest_point_on_triangle(query, &a, &b, &c);
            let d2 = (p - query).norm_squared();
            if best.is_none_or(|(_, _, bd)| d2 < bd) {
                best = Some((id, p, d2));
            }
        }
        let (id, point, d2) = best.ok_or(GeometryError::EmptyMesh)?;
        Ok(SurfaceHit {
            point,
            triangle_id: id,
            ray_parameter: d2.sqrt(),
        })
    }

    /// Nearest intersection with parameter above [`RAY_MIN_PARAMETER`].
    /// `direction` is expected to be unit length.
    pub fn ray_intersect(&self, origin: &Vec3, direction: &Vec3) -> Option<SurfaceHit> {
        self.bvh
            .first_hit(origin, direction, |id| {
                let [a, b, c] = self.corners(id);
                ray_triangle(origin, direction, &a, &b, &c).filter(|t| *t > RAY_MIN_PARAMETER)
            })
            .map(|(id, t)| SurfaceHit {
                point: origin + direction * t,
                triangle_id: id,
                ray_parameter: t,
            })
    }

    /// Linear scan counterpart of [`ray_intersect`](TriangleMesh::ray_intersect).
    pub fn ray_intersect_exhaustive(&self, origin: &Vec3, direction: &Vec3) -> Option<SurfaceHit> {
        let mut best: Option<(usize, f64)> = None;
        for id in 0..self.triangles.len() {
            let [a, b, c] = self.corners(id);
            if let Some(t) = ray_triangle(origin, direction, &a, &b, &c) {
                if t > RAY_MIN_PARAMETER && best.is_none_or(|(_, bt)| t < bt) {
                    best = Some((id, t));
                }
            }
        }
        best.map(|(id, t)| SurfaceHit {
            point: origin + direction * t,
            triangle_id: id,
            ray_parameter: t,
        })
    }

    /// Inside test by crossing parity along a fixed skew direction. Only
    /// meaningful for closed meshes.
    pub fn contains_point(&self, p: &Vec3) -> bool {
        let dir = Vec3::new(0.577_215_664_9, 0.316_227_766, 0.752_080_485_3).normalize();
        let mut crossings = 0usize;
        self.bvh.for_each_ray_candidate(p, &dir, |id| {
            let [a, b, c] = self.corners(id);
            if ray_triangle(p, &dir, &a, &b, &c).is_some_and(|t| t > RAY_MIN_PARAMETER) {
                crossings += 1;
            }
        });
        crossings % 2 == 1
    }

    /// Copy of the mesh with every vertex mapped through `t`.
    pub fn transformed(&self, t: &RigidTransform) -> Self {
        let vertices: Vec<Vec3> = self.vertices.iter().map(|v| t.apply_point(v)).collect();
        let bvh = Bvh::build(&vertices, &self.triangles);
        Self {
            vertices,
            triangles: self.triangles.clone(),
            bvh,
        }
    }

    fn corners(&self, id: usize) -> [Vec3; 3] {
        let t = self.triangles[id];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// `normalize((p1 − p) × (p2 − p))`, or `None` for collinear input.
pub fn plane_normal(p: &Vec3, p1: &Vec3, p2: &Vec3) -> Option<Vec3> {
    let n = (p1 - p).cross(&(p2 - p));
    let len = n.norm();
    if len > 0.0 && len.is_finite() {
        Some(n / len)
    } else {
        None
    }
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Möller–Trumbore, two-sided. Returns the ray parameter of the plane hit
/// when it falls inside the triangle.
pub fn ray_triangle(origin: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() <= 1e-15 * e1.norm() * e2.norm() {
        return None;
    }
    let f = 1.0 / det;
    let s = origin - a;
    let u = f * s.dot(&h);
    if !(-BARYCENTRIC_SLACK..=1.0 + BARYCENTRIC_SLACK).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = f * dir.dot(&q);
    if v < -BARYCENTRIC_SLACK || u + v > 1.0 + BARYCENTRIC_SLACK {
        return None;
    }
    Some(f * e2.dot(&q))
}
