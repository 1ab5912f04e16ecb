//! Hotspot-hunting grids.
//!
//! Lattice nodes are reached by marching over the surface from the seed:
//! first along the seed's x-axis to build the center row, then along each
//! column's local y-axis. Every step of `spacing` is taken in the current
//! node's tangent plane and snapped back to the skin by a closest-point
//! query, so neighbouring nodes stay roughly `spacing` apart along the
//! surface even on curved heads. On a flat surface this reduces to the plain
//! tangent-plane lattice. A node that ends up more than `2 × spacing` from
//! its unprojected lattice point in the seed tangent plane is reported as
//! escaped.

use serde::{Deserialize, Serialize};

use super::constraint::frame_from_normal_and_tail;
use super::{PlanError, PlanPose, PoseConstraintInput};
use crate::{TriangleMesh, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotspotGrid {
    pub rows: usize,
    pub cols: usize,
    pub spacing_mm: f64,
    /// Row-major; row index runs along the seed y-axis, column along x.
    pub poses: Vec<PlanPose>,
}

impl HotspotGrid {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&PlanPose> {
        (row < self.rows && col < self.cols).then(|| &self.poses[row * self.cols + col])
    }
}

/// Signed lattice offsets centered on zero, e.g. `[-s, 0, s]` or `[-s/2, s/2]`.
fn offsets(count: usize, spacing: f64) -> Vec<f64> {
    let mid = (count as f64 - 1.0) / 2.0;
    (0..count).map(|i| (i as f64 - mid) * spacing).collect()
}

struct Walk<'a> {
    skin: &'a TriangleMesh,
    seed: &'a PlanPose,
    spacing: f64,
    row_offs: Vec<f64>,
    col_offs: Vec<f64>,
}

impl Walk<'_> {
    /// Unprojected node in the seed's tangent plane.
    fn lattice_point(&self, (row, col): (usize, usize)) -> Vec3 {
        let p = &self.seed.pose;
        p.translation + p.axis(0) * self.col_offs[col] + p.axis(1) * self.row_offs[row]
    }

    /// One surface step of `dist` along local axis `axis` (0 = x, 1 = y).
    fn step(&self, from: &PlanPose, axis: usize, dist: f64, node: (usize, usize)) -> Result<PlanPose, PlanError> {
        let target = from.pose.translation + from.pose.axis(axis) * dist;
        let hit = self.skin.closest_point(&target)?;
        let offset = (hit.point - self.lattice_point(node)).norm();
        let bound = 2.0 * self.spacing;
        if hit.ray_parameter > bound || offset > bound {
            return Err(PlanError::GridEscapedSurface {
                row: node.0,
                col: node.1,
                distance: hit.ray_parameter.max(offset),
                bound,
            });
        }
        let n = self.skin.triangle_normal(hit.triangle_id)?;
        let tail = from.pose.axis(1);
        let pose = frame_from_normal_and_tail(&n, &tail, hit.point)?;
        Ok(PlanPose {
            strategy: from.strategy,
            pose,
            source: PoseConstraintInput::TwoPoint {
                center: target,
                tail_point: target + tail,
            },
            cortex_target: from.cortex_target,
            anchor_triangle: Some(hit.triangle_id),
            skin_collision: false,
        })
    }

    /// Nodes at each offset along `axis`, marching outward from `origin` in
    /// both directions. Zero offsets reuse `origin` unchanged.
    fn line(
        &self,
        origin: &PlanPose,
        axis: usize,
        offs: &[f64],
        node_of: impl Fn(usize) -> (usize, usize),
    ) -> Result<Vec<PlanPose>, PlanError> {
        let mut out: Vec<Option<PlanPose>> = vec![None; offs.len()];
        let center = offs.partition_point(|&o| o < 0.0);
        for (i, slot) in out.iter_mut().enumerate() {
            if offs[i] == 0.0 {
                *slot = Some(origin.clone());
            }
        }
        // forward
        let (mut cur, mut pos) = (origin.clone(), 0.0);
        for i in center..offs.len() {
            if offs[i] == 0.0 {
                continue;
            }
            cur = self.step(&cur, axis, offs[i] - pos, node_of(i))?;
            pos = offs[i];
            out[i] = Some(cur.clone());
        }
        // backward
        let (mut cur, mut pos) = (origin.clone(), 0.0);
        for i in (0..center).rev() {
            cur = self.step(&cur, axis, offs[i] - pos, node_of(i))?;
            pos = offs[i];
            out[i] = Some(cur.clone());
        }
        Ok(out.into_iter().map(|p| p.expect("every offset visited")).collect())
    }
}

/// `rows × cols` candidate poses around `seed` with nominal pitch `spacing`.
///
/// The seed sits at the lattice center (exactly on a node for odd counts and
/// returned verbatim there). Each other node is re-oriented by its skin
/// triangle with the tail carried over by projection.
pub fn hotspot_grid(
    skin: &TriangleMesh,
    seed: &PlanPose,
    rows: usize,
    cols: usize,
    spacing: f64,
) -> Result<HotspotGrid, PlanError> {
    if rows == 0 || cols == 0 {
        return Err(PlanError::InvalidGrid(format!("grid must be at least 1×1, got {rows}×{cols}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(PlanError::InvalidGrid(format!("spacing must be positive, got {spacing}")));
    }
    let walk = Walk {
        skin,
        seed,
        spacing,
        row_offs: offsets(rows, spacing),
        col_offs: offsets(cols, spacing),
    };
    let center_row = (rows - 1) / 2;
    let center_row_nodes = walk.line(seed, 0, &walk.col_offs, |c| (center_row, c))?;
    let mut columns = Vec::with_capacity(cols);
    for (c, top) in center_row_nodes.iter().enumerate() {
        columns.push(walk.line(top, 1, &walk.row_offs, |r| (r, c))?);
    }
    let mut poses = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for column in &columns {
            poses.push(column[r].clone());
        }
    }
    Ok(HotspotGrid {
        rows,
        cols,
        spacing_mm: spacing,
        poses,
    })
}

/// Index and pose of the largest response; the lowest index wins ties.
pub fn select_hotspot<'g>(grid: &'g HotspotGrid, responses: &[f64]) -> Result<(usize, &'g PlanPose), PlanError> {
    if responses.len() != grid.len() {
        return Err(PlanError::ResponseMismatch {
            expected: grid.len(),
            got: responses.len(),
        });
    }
    if let Some(i) = responses.iter().position(|r| !r.is_finite()) {
        return Err(PlanError::NonFiniteResponse(i));
    }
    let mut best = 0;
    for (i, &r) in responses.iter().enumerate().skip(1) {
        if r > responses[best] {
            best = i;
        }
    }
    Ok((best, &grid.poses[best]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;
    use crate::pose_plan::{free_skin_pose, PlanOptions};

    fn flat_seed() -> (TriangleMesh, PlanPose) {
        let skin = shapes::flat_patch(60.0, 60.0, 12, 12, 0.0).unwrap();
        let input = PoseConstraintInput::TwoPoint {
            center: Vec3::new(0.0, 0.0, 1.0),
            tail_point: Vec3::new(0.0, 10.0, 1.0),
        };
        let seed = free_skin_pose(&skin, &input, &PlanOptions::default()).unwrap();
        (skin, seed)
    }

    #[test]
    fn single_node_is_seed() {
        let (skin, seed) = flat_seed();
        let g = hotspot_grid(&skin, &seed, 1, 1, 10.0).unwrap();
        assert_eq!(g.poses, vec![seed]);
    }

    #[test]
    fn flat_three_by_three_pitch() {
        let (skin, seed) = flat_seed();
        let g = hotspot_grid(&skin, &seed, 3, 3, 10.0).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.get(1, 1).unwrap(), &seed);
        for p in &g.poses {
            assert_eq!(p.pose.rotation, seed.pose.rotation);
            assert!(p.center().z.abs() < 1e-12);
        }
        for r in 0..3 {
            for c in 0..2 {
                let d = (g.get(r, c + 1).unwrap().center() - g.get(r, c).unwrap().center()).norm();
                assert!((d - 10.0).abs() < 1e-9);
            }
        }
        // column steps follow the seed x-axis, row steps its y-axis
        let dx = g.get(1, 2).unwrap().center() - seed.center();
        assert!((dx - seed.pose.axis(0) * 10.0).norm() < 1e-9);
        let dy = g.get(2, 1).unwrap().center() - seed.center();
        assert!((dy - seed.pose.axis(1) * 10.0).norm() < 1e-9);
    }

    #[test]
    fn even_grid_straddles_seed() {
        let (skin, seed) = flat_seed();
        let g = hotspot_grid(&skin, &seed, 2, 2, 10.0).unwrap();
        let mean = g.poses.iter().map(|p| p.center()).sum::<Vec3>() / 4.0;
        assert!((mean - seed.center()).norm() < 1e-9);
    }

    #[test]
    fn escaping_the_patch_is_an_error() {
        let (skin, seed) = flat_seed();
        let err = hotspot_grid(&skin, &seed, 1, 31, 10.0).unwrap_err();
        assert!(matches!(err, PlanError::GridEscapedSurface { .. }), "{err:?}");
    }

    #[test]
    fn bad_arguments() {
        let (skin, seed) = flat_seed();
        assert!(matches!(hotspot_grid(&skin, &seed, 0, 3, 10.0), Err(PlanError::InvalidGrid(_))));
        assert!(matches!(hotspot_grid(&skin, &seed, 3, 3, 0.0), Err(PlanError::InvalidGrid(_))));
    }

    #[test]
    fn selection_rules() {
        let (skin, seed) = flat_seed();
        let g = hotspot_grid(&skin, &seed, 3, 3, 10.0).unwrap();
        assert_eq!(select_hotspot(&g, &[1.0; 9]).unwrap().0, 0);
        let mut r = [0.5; 9];
        r[7] = 2.0;
        let (i, pose) = select_hotspot(&g, &r).unwrap();
        assert_eq!(i, 7);
        assert_eq!(pose, &g.poses[7]);
        assert!(matches!(select_hotspot(&g, &[1.0; 4]), Err(PlanError::ResponseMismatch { .. })));
        r[2] = f64::NAN;
        assert!(matches!(select_hotspot(&g, &r), Err(PlanError::NonFiniteResponse(2))));
    }
}
