//! Procedural meshes for phantoms and test fixtures.

use std::collections::HashMap;

use rand::Rng;

use super::{GeometryError, TriangleMesh};
use crate::Vec3;

/// Icosphere with vertices at both poles `center ± radius·ẑ`.
///
/// Each subdivision level splits every face into four and pushes the new
/// vertices onto the sphere; `20·4^subdivisions` triangles.
pub fn icosphere(center: Vec3, radius: f64, subdivisions: u32) -> Result<TriangleMesh, GeometryError> {
    let (dirs, tris) = unit_icosphere(subdivisions);
    let vertices = dirs.iter().map(|d| center + d * radius).collect();
    TriangleMesh::new(vertices, tris)
}

/// Axis-aligned ellipsoid built from an icosphere; a convenient head proxy.
pub fn ellipsoid(center: Vec3, semi_axes: Vec3, subdivisions: u32) -> Result<TriangleMesh, GeometryError> {
    let (dirs, tris) = unit_icosphere(subdivisions);
    let vertices = dirs
        .iter()
        .map(|d| center + d.component_mul(&semi_axes))
        .collect();
    TriangleMesh::new(vertices, tris)
}

/// Flat rectangular patch in the plane `z = height`, normals along +z,
/// spanning `[-half_x, half_x] × [-half_y, half_y]` with `nx × ny` cells.
pub fn flat_patch(half_x: f64, half_y: f64, nx: usize, ny: usize, height: f64) -> Result<TriangleMesh, GeometryError> {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = -half_x + 2.0 * half_x * i as f64 / nx as f64;
            let y = -half_y + 2.0 * half_y * j as f64 / ny as f64;
            vertices.push(Vec3::new(x, y, height));
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Open hemispherical dome (`z ≥ 0` side of a sphere about the origin) whose
/// top is a flat horizontal cap: the first ring sits at polar angle
/// `cap_angle` and is fanned to an apex vertex at its own height, so every
/// cap triangle has normal exactly `+ẑ`.
pub fn capped_dome(radius: f64, cap_angle: f64, rings: usize, segments: usize) -> Result<TriangleMesh, GeometryError> {
    let cap_height = radius * cap_angle.cos();
    let mut vertices = vec![Vec3::new(0.0, 0.0, cap_height)];
    let half_pi = std::f64::consts::FRAC_PI_2;
    for r in 0..rings {
        let theta = cap_angle + (half_pi - cap_angle) * r as f64 / (rings - 1).max(1) as f64;
        let (st, ct) = theta.sin_cos();
        for s in 0..segments {
            let phi = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            let z = if r == 0 { cap_height } else { radius * ct };
            vertices.push(Vec3::new(radius * st * phi.cos(), radius * st * phi.sin(), z));
        }
    }
    let ring = |r: usize, s: usize| 1 + r * segments + (s % segments);
    let mut triangles = Vec::new();
    for s in 0..segments {
        triangles.push([0, ring(0, s), ring(0, s + 1)]);
    }
    for r in 0..rings.saturating_sub(1) {
        for s in 0..segments {
            triangles.push([ring(r, s), ring(r + 1, s), ring(r + 1, s + 1)]);
            triangles.push([ring(r, s), ring(r + 1, s + 1), ring(r, s + 1)]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Closed sphere-like mesh with flat horizontal caps at exactly `z = ±top`.
///
/// The sphere radius is `top / cos(cap_angle)`; `rings ≥ 2` latitude rings run
/// from polar angle `cap_angle` to `π − cap_angle`. The top fan triangles come
/// first and have normal exactly `+ẑ`, so a cortex-pole fixture lands on a
/// point `(0, 0, top)` that is both on the mesh and on the ideal sphere.
pub fn flat_capped_sphere(top: f64, cap_angle: f64, rings: usize, segments: usize) -> Result<TriangleMesh, GeometryError> {
    let rings = rings.max(2);
    let radius = top / cap_angle.cos();
    let pi = std::f64::consts::PI;
    let mut vertices = vec![Vec3::new(0.0, 0.0, top)];
    for r in 0..rings {
        let theta = cap_angle + (pi - 2.0 * cap_angle) * r as f64 / (rings - 1) as f64;
        let (st, ct) = theta.sin_cos();
        let z = if r == 0 {
            top
        } else if r == rings - 1 {
            -top
        } else {
            radius * ct
        };
        for s in 0..segments {
            let phi = 2.0 * pi * s as f64 / segments as f64;
            vertices.push(Vec3::new(radius * st * phi.cos(), radius * st * phi.sin(), z));
        }
    }
    let bottom = vertices.len();
    vertices.push(Vec3::new(0.0, 0.0, -top));
    let ring = |r: usize, s: usize| 1 + r * segments + (s % segments);
    let mut triangles = Vec::new();
    for s in 0..segments {
        triangles.push([0, ring(0, s), ring(0, s + 1)]);
    }
    for r in 0..rings - 1 {
        for s in 0..segments {
            triangles.push([ring(r, s), ring(r + 1, s), ring(r + 1, s + 1)]);
            triangles.push([ring(r, s), ring(r + 1, s + 1), ring(r, s + 1)]);
        }
    }
    for s in 0..segments {
        triangles.push([bottom, ring(rings - 1, s + 1), ring(rings - 1, s)]);
    }
    TriangleMesh::new(vertices, triangles)
}

/// Area-weighted uniform samples on the surface.
pub fn sample_surface<R: Rng + ?Sized>(mesh: &TriangleMesh, count: usize, rng: &mut R) -> Vec<Vec3> {
    let mut cumulative = Vec::with_capacity(mesh.triangle_count());
    let mut total = 0.0;
    for id in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.triangle(id).expect("id in range");
        total += super::mesh::triangle_area(&a, &b, &c);
        cumulative.push(total);
    }
    (0..count)
        .map(|_| {
            let pick = rng.random::<f64>() * total;
            let id = cumulative.partition_point(|&c| c < pick).min(cumulative.len() - 1);
            let [a, b, c] = mesh.triangle(id).expect("id in range");
            let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            a + (b - a) * u + (c - a) * v
        })
        .collect()
}

fn unit_icosphere(subdivisions: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let h = 1.0 / 5f64.sqrt();
    let rho = 2.0 * h;
    let mut dirs = vec![Vec3::new(0.0, 0.0, 1.0)];
    for k in 0..5 {
        let a = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
        dirs.push(Vec3::new(rho * a.cos(), rho * a.sin(), h));
    }
    for k in 0..5 {
        let a = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / 5.0;
        dirs.push(Vec3::new(rho * a.cos(), rho * a.sin(), -h));
    }
    dirs.push(Vec3::new(0.0, 0.0, -1.0));
    let up = |k: usize| 1 + k % 5;
    let lo = |k: usize| 6 + k % 5;
    let mut tris = Vec::new();
    for k in 0..5 {
        tris.push([0, up(k), up(k + 1)]);
        tris.push([up(k), lo(k), up(k + 1)]);
        tris.push([up(k + 1), lo(k), lo(k + 1)]);
        tris.push([11, lo(k + 1), lo(k)]);
    }
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, dirs: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                dirs.push(((dirs[a] + dirs[b]) * 0.5).normalize());
                dirs.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = midpoint(a, b, &mut dirs);
            let bc = midpoint(b, c, &mut dirs);
            let ca = midpoint(c, a, &mut dirs);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    // enforce outward winding
    for t in &mut tris {
        let n = (dirs[t[1]] - dirs[t[0]]).cross(&(dirs[t[2]] - dirs[t[0]]));
        let centroid = dirs[t[0]] + dirs[t[1]] + dirs[t[2]];
        if n.dot(&centroid) < 0.0 {
            t.swap(1, 2);
        }
    }
    (dirs, tris)
}
