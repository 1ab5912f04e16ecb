//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

use tmsnav_core::{TriangleMesh, Vec3};

/// Closest point on triangle `abc`: plane projection if it lands inside,
/// otherwise the best of the three clamped edge projections.
pub fn closest_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let n = (b - a).cross(&(c - a));
    let q = p - n * ((p - a).dot(&n) / n.norm_squared());
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|(u, v)| (*v - *u).cross(&(q - *u)).dot(&n) >= 0.0);
    if inside {
        return q;
    }
    [(a, b), (b, c), (c, a)]
        .iter()
        .map(|(u, v)| {
            let e = *v - *u;
            let t = ((p - *u).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
            *u + e * t
        })
        .min_by(|x, y| (x - p).norm().total_cmp(&(y - p).norm()))
        .unwrap()
}

/// `(distance, point)` of every triangle, for brute-force comparisons.
pub fn triangle_distances(mesh: &TriangleMesh, p: &Vec3) -> Vec<(f64, Vec3)> {
    (0..mesh.triangle_count())
        .map(|id| {
            let [a, b, c] = mesh.triangle(id).unwrap();
            let q = closest_on_triangle(p, &a, &b, &c);
            ((q - p).norm(), q)
        })
        .collect()
}

pub fn brute_closest(mesh: &TriangleMesh, p: &Vec3) -> (f64, Vec3) {
    triangle_distances(mesh, p)
        .into_iter()
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap()
}

/// Unit normal of a triangle from its vertex winding.
pub fn winding_normal(mesh: &TriangleMesh, id: usize) -> Vec3 {
    let [a, b, c] = mesh.triangle(id).unwrap();
    (b - a).cross(&(c - a)).normalize()
}

/// Circular loop on-axis field per ampere (T/A), lengths in mm.
pub fn loop_on_axis(radius_mm: f64, z_mm: f64, turns: f64) -> f64 {
    let (r, z) = (radius_mm * 1e-3, z_mm * 1e-3);
    4e-7 * PI * turns * r * r / (2.0 * (r * r + z * z).powf(1.5))
}

/// Complete elliptic integrals `(K(m), E(m))` by the arithmetic-geometric mean.
pub fn elliptic_ke(m: f64) -> (f64, f64) {
    let (mut a, mut b) = (1.0, (1.0 - m).sqrt());
    let mut c = m.sqrt();
    let mut sum = 0.5 * c * c;
    let mut pow = 0.5;
    for _ in 0..60 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        a = an;
        b = bn;
        pow *= 2.0;
        sum += pow * c * c;
        if c.abs() < 1e-16 {
            break;
        }
    }
    let k = PI / (2.0 * a);
    (k, k * (1.0 - sum))
}

/// Mutual inductance of two coaxial circular loops (H), lengths in mm.
pub fn coaxial_mutual_inductance(a_mm: f64, b_mm: f64, d_mm: f64) -> f64 {
    let (a, b, d) = (a_mm * 1e-3, b_mm * 1e-3, d_mm * 1e-3);
    let m = 4.0 * a * b / ((a + b).powi(2) + d * d);
    let k = m.sqrt();
    let (ke, ee) = elliptic_ke(m);
    4e-7 * PI * (a * b).sqrt() * ((2.0 / k - k) * ke - (2.0 / k) * ee)
}
