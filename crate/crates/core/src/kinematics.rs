//! The robot/tracker/head frame graph and pose error metrics.
//!
//! Frames: robot base `R`, end-effector `E`, coil `C`, coil marker `Cr`,
//! optical tracker `O`, head image `H`, head marker `Hr` and the planned coil
//! pose `b`. Edges are stored in their arrow direction only:
//!
//! ```text
//! R → E → Cr → C        (E→Cr and Cr→C are calibrations)
//!         ↑
//!         O → Hr → H → b
//! ```
//!
//! `{A→B}` is the pose of `B` expressed in `A`, so `{A→C} = {A→B}·{B→C}`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Quaternion, UnitQuaternion};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rotation_angle, GeometryError};
use crate::pose_plan::PlanPose;
use crate::serde_util;
use crate::{Mat3, RigidTransform, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Frame {
    R,
    E,
    C,
    Cr,
    O,
    H,
    Hr,
    #[serde(rename = "b")]
    B,
}

impl Frame {
    pub const ALL: [Frame; 8] = [Frame::R, Frame::E, Frame::C, Frame::Cr, Frame::O, Frame::H, Frame::Hr, Frame::B];

    pub fn as_str(&self) -> &'static str {
        match self {
            Frame::R => "R",
            Frame::E => "E",
            Frame::C => "C",
            Frame::Cr => "Cr",
            Frame::O => "O",
            Frame::H => "H",
            Frame::Hr => "Hr",
            Frame::B => "b",
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Frame {
    type Err = KinematicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Frame::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| KinematicsError::UnknownFrame(s.to_string()))
    }
}

/// The seven directed edges of the chain.
pub const EDGES: [(Frame, Frame); 7] = [
    (Frame::R, Frame::E),
    (Frame::O, Frame::Cr),
    (Frame::O, Frame::Hr),
    (Frame::E, Frame::Cr),
    (Frame::Cr, Frame::C),
    (Frame::Hr, Frame::H),
    (Frame::H, Frame::B),
];

/// Rotation by π about the pose x-axis: turns the plan's outward z into the
/// coil's into-the-head z while keeping x.
pub fn approach_flip() -> RigidTransform {
    RigidTransform::from_rotation(Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Sensor,
    Tracker,
    Calibration,
    Registration,
    Plan,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("MissingEdge: {{{0}→{1}}} is not in the graph")]
    MissingEdge(Frame, Frame),
    #[error("InvalidEdge: {{{0}→{1}}} is not an edge of the chain")]
    InvalidEdge(Frame, Frame),
    #[error("DuplicateEdge: {{{0}→{1}}} is already stored")]
    DuplicateEdge(Frame, Frame),
    #[error("UnknownFrame: `{0}`")]
    UnknownFrame(String),
    #[error("StaleSnapshot: sensor/tracker timestamps span {skew_ms:.3} ms (bound {bound_ms:.3} ms)")]
    StaleSnapshot { skew_ms: f64, bound_ms: f64 },
    #[error("Geometry: {0}")]
    Geometry(#[from] GeometryError),
}

impl KinematicsError {
    pub fn name(&self) -> &'static str {
        match self {
            KinematicsError::MissingEdge(..) => "MissingEdge",
            KinematicsError::InvalidEdge(..) => "InvalidEdge",
            KinematicsError::DuplicateEdge(..) => "DuplicateEdge",
            KinematicsError::UnknownFrame(_) => "UnknownFrame",
            KinematicsError::StaleSnapshot { .. } => "StaleSnapshot",
            KinematicsError::Geometry(_) => "Geometry",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: Frame,
    pub to: Frame,
    #[serde(rename = "matrix")]
    pub transform: RigidTransform,
    pub provenance: Provenance,
    /// Acquisition time for sensor and tracker readings (ms).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct FrameGraph {
    edges: BTreeMap<(Frame, Frame), Edge>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    edges: Vec<Edge>,
}

impl From<FrameGraph> for GraphFile {
    fn from(g: FrameGraph) -> Self {
        GraphFile {
            edges: g.edges.into_values().collect(),
        }
    }
}

impl TryFrom<GraphFile> for FrameGraph {
    type Error = KinematicsError;

    fn try_from(f: GraphFile) -> Result<Self, Self::Error> {
        let mut g = FrameGraph::new();
        for e in f.edges {
            g.insert_edge(e)?;
        }
        Ok(g)
    }
}

impl FrameGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: Frame, to: Frame, transform: RigidTransform, provenance: Provenance) -> Result<(), KinematicsError> {
        self.insert_edge(Edge {
            from,
            to,
            transform,
            provenance,
            timestamp_ms: None,
        })
    }

    pub fn insert_timed(
        &mut self,
        from: Frame,
        to: Frame,
        transform: RigidTransform,
        provenance: Provenance,
        timestamp_ms: f64,
    ) -> Result<(), KinematicsError> {
        self.insert_edge(Edge {
            from,
            to,
            transform,
            provenance,
            timestamp_ms: Some(timestamp_ms),
        })
    }

    /// Only the chain's arrows are accepted, each at most once.
    pub fn insert_edge(&mut self, edge: Edge) -> Result<(), KinematicsError> {
        let key = (edge.from, edge.to);
        if !EDGES.contains(&key) {
            return Err(KinematicsError::InvalidEdge(edge.from, edge.to));
        }
        if self.edges.contains_key(&key) {
            return Err(KinematicsError::DuplicateEdge(edge.from, edge.to));
        }
        edge.transform.validate()?;
        self.edges.insert(key, edge);
        Ok(())
    }

    /// Replaces a stored edge (e.g. a fresh tracker reading).
    pub fn update(&mut self, from: Frame, to: Frame, transform: RigidTransform) -> Result<(), KinematicsError> {
        transform.validate()?;
        let e = self.edges.get_mut(&(from, to)).ok_or(KinematicsError::MissingEdge(from, to))?;
        e.transform = transform;
        Ok(())
    }

    pub fn edge(&self, from: Frame, to: Frame) -> Result<&Edge, KinematicsError> {
        self.edges.get(&(from, to)).ok_or(KinematicsError::MissingEdge(from, to))
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// `{from→to}` along the unique tree path, inverting edges walked
    /// against their arrows.
    pub fn chain(&self, from: Frame, to: Frame) -> Result<RigidTransform, KinematicsError> {
        let mut acc = RigidTransform::identity();
        for (a, b) in tree_path(from, to) {
            let step = if let Some(e) = self.edges.get(&(a, b)) {
                e.transform
            } else if EDGES.contains(&(a, b)) {
                return Err(KinematicsError::MissingEdge(a, b));
            } else {
                self.edge(b, a)?.transform.inverse()
            };
            acc = acc.compose(&step);
        }
        Ok(acc)
    }

    /// Spread of the sensor and tracker timestamps (ms); 0 with fewer than two.
    pub fn snapshot_skew(&self) -> f64 {
        let ts: Vec<f64> = self
            .edges
            .values()
            .filter(|e| matches!(e.provenance, Provenance::Sensor | Provenance::Tracker))
            .filter_map(|e| e.timestamp_ms)
            .collect();
        let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if ts.len() < 2 {
            0.0
        } else {
            hi - lo
        }
    }
}

fn neighbours(f: Frame) -> impl Iterator<Item = Frame> {
    EDGES
        .iter()
        .filter_map(move |&(a, b)| if a == f { Some(b) } else if b == f { Some(a) } else { None })
}

/// Hops of the unique simple path between two frames of the tree.
fn tree_path(from: Frame, to: Frame) -> Vec<(Frame, Frame)> {
    let mut parent: BTreeMap<Frame, Frame> = BTreeMap::new();
    let mut queue = std::collections::VecDeque::from([from]);
    let mut seen = vec![from];
    while let Some(f) = queue.pop_front() {
        if f == to {
            break;
        }
        for n in neighbours(f) {
            if !seen.contains(&n) {
                seen.push(n);
                parent.insert(n, f);
                queue.push_back(n);
            }
        }
    }
    let mut hops = Vec::new();
    let mut cur = to;
    while cur != from {
        let p = parent[&cur];
        hops.push((p, cur));
        cur = p;
    }
    hops.reverse();
    hops
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    /// Largest allowed spread of sensor/tracker timestamps (ms).
    pub max_skew_ms: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { max_skew_ms: 50.0 }
    }
}

/// Desired coil pose in the tracker frame, `{O→C*}`.
pub fn desired_coil_in_tracker(graph: &FrameGraph, plan: &RigidTransform) -> Result<RigidTransform, KinematicsError> {
    let o_h = graph.chain(Frame::O, Frame::H)?;
    Ok(o_h.compose(plan).compose(&approach_flip()))
}

/// `{R→O}` from the current robot and tracker readings.
pub fn robot_to_tracker(graph: &FrameGraph) -> Result<RigidTransform, KinematicsError> {
    graph.chain(Frame::R, Frame::O)
}

/// The end-effector pose `{R→E*}` that brings the coil onto the plan.
///
/// The `{H→b}` edge of the graph, if any, is ignored in favour of `plan`.
pub fn solve_commanded_end_effector(
    graph: &FrameGraph,
    plan: &PlanPose,
    config: &ChainConfig,
) -> Result<RigidTransform, KinematicsError> {
    let skew = graph.snapshot_skew();
    if skew > config.max_skew_ms {
        return Err(KinematicsError::StaleSnapshot {
            skew_ms: skew,
            bound_ms: config.max_skew_ms,
        });
    }
    let r_o = robot_to_tracker(graph)?;
    let o_c = desired_coil_in_tracker(graph, &plan.pose)?;
    let e_c = graph.chain(Frame::E, Frame::C)?;
    Ok(r_o.compose(&o_c).compose(&e_c.inverse()))
}

/// Coil pose in the head image `{H→C}` after the robot reaches `commanded`,
/// with the tracker reading `{O→Cr}` updated to match.
pub fn coil_in_head_after_move(graph: &FrameGraph, commanded: &RigidTransform) -> Result<RigidTransform, KinematicsError> {
    let r_o = robot_to_tracker(graph)?;
    let mut moved = graph.clone();
    moved.update(Frame::R, Frame::E, *commanded)?;
    let o_cr = r_o.inverse().compose(commanded).compose(&graph.edge(Frame::E, Frame::Cr)?.transform);
    moved.update(Frame::O, Frame::Cr, o_cr)?;
    moved.chain(Frame::H, Frame::C)
}

/// Alignment error of a measured pose against the planned one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub translation_error_mm: f64,
    pub rotation_error_rad: f64,
    /// `t_measured − t_planned` in the planned pose's axes (mm).
    #[serde(with = "serde_util::vec3")]
    pub translation_components_mm: Vec3,
}

pub fn pose_error(planned: &RigidTransform, measured: &RigidTransform) -> PoseError {
    let d = measured.translation - planned.translation;
    PoseError {
        translation_error_mm: d.norm(),
        rotation_error_rad: rotation_angle(&(planned.rotation.transpose() * measured.rotation)),
        translation_components_mm: planned.rotation.transpose() * d,
    }
}

/// Uniformly random rotation with translation components uniform in
/// `[-max_translation, max_translation]`.
pub fn random_transform<R: Rng + ?Sized>(rng: &mut R, max_translation: f64) -> RigidTransform {
    let q = loop {
        let q = Quaternion::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        if q.norm() > 1e-6 {
            break q;
        }
    };
    let rotation = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
    let translation = Vec3::from_fn(|_, _| rng.random_range(-max_translation..=max_translation));
    RigidTransform {
        rotation,
        translation,
    }
}

/// Graph with all seven edges drawn at random (translations up to 500 mm;
/// calibration edges up to 150 mm).
pub fn random_frame_graph<R: Rng + ?Sized>(rng: &mut R) -> FrameGraph {
    let mut g = FrameGraph::new();
    for (a, b) in EDGES {
        let (prov, reach) = match (a, b) {
            (Frame::R, Frame::E) => (Provenance::Sensor, 500.0),
            (Frame::O, _) => (Provenance::Tracker, 500.0),
            (Frame::E, Frame::Cr) | (Frame::Cr, Frame::C) => (Provenance::Calibration, 150.0),
            (Frame::Hr, Frame::H) => (Provenance::Registration, 150.0),
            _ => (Provenance::Plan, 150.0),
        };
        g.insert(a, b, random_transform(rng, reach), prov).expect("chain edge");
    }
    g
}
