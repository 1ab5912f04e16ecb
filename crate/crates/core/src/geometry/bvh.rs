//! Binary AABB hierarchy over triangle indices.
//!
//! Built top-down by splitting at the centroid median along the longest axis
//! of the centroid bounds. Traversal keeps the same tie rule as the
//! exhaustive scans (lowest triangle id wins an exact tie), so both paths
//! return identical results.

use crate::Vec3;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn merge(&mut self, o: &Aabb) {
        self.min = self.min.inf(&o.min);
        self.max = self.max.sup(&o.max);
    }

    fn pad(&mut self) {
        let slack = 1e-9 * (1.0 + (self.max - self.min).amax());
        self.min -= Vec3::repeat(slack);
        self.max += Vec3::repeat(slack);
    }

    fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let v = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            d2 += v * v;
        }
        d2
    }

    /// Entry parameter of the ray into the box, if it enters at `t ≥ 0`.
    fn ray_entry(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            if dir[i] == 0.0 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let mut a = (self.min[i] - origin[i]) * inv;
            let mut b = (self.max[i] - origin[i]) * inv;
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    kind: NodeKind,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub(crate) fn build(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Self {
        if triangles.is_empty() {
            return Self::default();
        }
        let boxes: Vec<Aabb> = triangles
            .iter()
            .map(|t| {
                let mut b = Aabb::empty();
                for &i in t {
                    b.grow(&vertices[i]);
                }
                b.pad();
                b
            })
            .collect();
        let centroids: Vec<Vec3> = boxes.iter().map(|b| (b.min + b.max) * 0.5).collect();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1),
            order: (0..triangles.len()).collect(),
        };
        bvh.build_node(&boxes, &centroids, 0, triangles.len());
        bvh
    }

    fn build_node(&mut self, boxes: &[Aabb], centroids: &[Vec3], start: usize, end: usize) -> usize {
        let mut bounds = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for &i in &self.order[start..end] {
            bounds.merge(&boxes[i]);
            cbounds.grow(&centroids[i]);
        }
        let index = self.nodes.len();
        self.nodes.push(Node {
            bounds,
            kind: NodeKind::Leaf { start, end },
        });
        if end - start <= LEAF_SIZE {
            return index;
        }
        let extent = cbounds.max - cbounds.min;
        let axis = extent.imax();
        if extent[axis] <= 0.0 {
            return index;
        }
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis]
                .total_cmp(&centroids[b][axis])
                .then(a.cmp(&b))
        });
        let left = self.build_node(boxes, centroids, start, mid);
        let right = self.build_node(boxes, centroids, mid, end);
        self.nodes[index].kind = NodeKind::Inner { left, right };
        index
    }

    /// Best `(id, point, distance²)` under the per-triangle evaluator.
    pub(crate) fn closest<F>(&self, query: &Vec3, mut eval: F) -> Option<(usize, Vec3, f64)>
    where
        F: FnMut(usize) -> (Vec3, f64),
    {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, Vec3, f64)> = None;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let bound = best.map_or(f64::INFINITY, |b| b.2);
            if node.bounds.distance_squared(query) > bound {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for &id in &self.order[start..end] {
                        let (p, d2) = eval(id);
                        let better = match best {
                            None => true,
                            Some((bid, _, bd)) => d2 < bd || (d2 == bd && id < bid),
                        };
                        if better {
                            best = Some((id, p, d2));
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let dl = self.nodes[left].bounds.distance_squared(query);
                    let dr = self.nodes[right].bounds.distance_squared(query);
                    // push the farther child first so the nearer is explored first
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }

    /// Nearest `(id, t)` under the per-triangle ray evaluator.
    pub(crate) fn first_hit<F>(&self, origin: &Vec3, dir: &Vec3, mut eval: F) -> Option<(usize, f64)>
    where
        F: FnMut(usize) -> Option<f64>,
    {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let Some(entry) = node.bounds.ray_entry(origin, dir) else {
                continue;
            };
            if best.is_some_and(|(_, bt)| entry > bt) {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for &id in &self.order[start..end] {
                        if let Some(t) = eval(id) {
                            let better = match best {
                                None => true,
                                Some((bid, bt)) => t < bt || (t == bt && id < bid),
                            };
                            if better {
                                best = Some((id, t));
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        best
    }

    /// Calls `visit` for every triangle whose box the ray enters.
    pub(crate) fn for_each_ray_candidate<F: FnMut(usize)>(&self, origin: &Vec3, dir: &Vec3, mut visit: F) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds.ray_entry(origin, dir).is_none() {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => self.order[start..end].iter().for_each(|&id| visit(id)),
                NodeKind::Inner { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
    }
}
