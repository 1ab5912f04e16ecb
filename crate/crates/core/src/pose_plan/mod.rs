//! Coil pose planning on curved surfaces.
//!
//! A pose is extracted from surface points ([`pose_from_constraint`]): the
//! plane normal of `p, p1, p2` gives the z-axis, the tail point fixes the
//! y-axis, and `x = y × n`. Strategies ([`PlanStrategy`]) decide which surface
//! the points live on and where the final coil center goes; they are looked
//! up by name in a [`StrategyRegistry`].

mod constraint;
mod hotspot;
mod strategy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::serde_util::{self, rot9};
use crate::{Mat3, RigidTransform, Vec3};

pub use constraint::{frame_from_normal_and_tail, pose_from_constraint, SurfacePose};
pub use hotspot::{hotspot_grid, select_hotspot, HotspotGrid};
pub use strategy::{
    closest_skin_pose, free_skin_pose, restricted_cortex_pose, ClosestSkin, FreeSkin, PlanStrategy,
    PlanningScene, RestrictedCortex, StrategyRegistry,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("DegenerateConstraint: plane points are collinear")]
    DegenerateConstraint,
    #[error("DegenerateTail: tail direction is parallel to the surface normal")]
    DegenerateTail,
    #[error("TargetOffSurface: center is {distance:.3} mm from the mesh (bound {bound:.3} mm)")]
    TargetOffSurface { distance: f64, bound: f64 },
    #[error("MissingMesh: the {0} mesh is required for this request")]
    MissingMesh(&'static str),
    #[error("NoSkinIntersection: the cortex normal ray does not reach the skin")]
    NoSkinIntersection,
    #[error("GridEscapedSurface: lattice node ({row}, {col}) projected {distance:.3} mm away (bound {bound:.3} mm)")]
    GridEscapedSurface {
        row: usize,
        col: usize,
        distance: f64,
        bound: f64,
    },
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
    #[error("ResponseMismatch: {got} responses for a grid of {expected} poses")]
    ResponseMismatch { expected: usize, got: usize },
    #[error("ResponseMismatch: response {0} is not finite")]
    NonFiniteResponse(usize),
    #[error("UnknownStrategy: `{0}`")]
    UnknownStrategy(String),
    #[error("Geometry: {0}")]
    Geometry(#[from] GeometryError),
}

impl PlanError {
    /// Stable error name used in CLI messages.
    pub fn name(&self) -> &'static str {
        match self {
            PlanError::DegenerateConstraint => "DegenerateConstraint",
            PlanError::DegenerateTail => "DegenerateTail",
            PlanError::TargetOffSurface { .. } => "TargetOffSurface",
            PlanError::MissingMesh(_) => "MissingMesh",
            PlanError::NoSkinIntersection => "NoSkinIntersection",
            PlanError::GridEscapedSurface { .. } => "GridEscapedSurface",
            PlanError::InvalidGrid(_) => "InvalidGrid",
            PlanError::ResponseMismatch { .. } | PlanError::NonFiniteResponse(_) => "ResponseMismatch",
            PlanError::UnknownStrategy(_) => "UnknownStrategy",
            PlanError::Geometry(_) => "Geometry",
        }
    }
}

/// Which of the constraint's plane points serves as the tail point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailPoint {
    P1,
    P2,
}

/// Which plane point doubles as the center in the three-point variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanePoint {
    P,
    P1,
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    FourPoint,
    ThreePoint,
    TwoPoint,
}

/// Surface points that pin down a pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "constraint_kind", rename_all = "snake_case")]
pub enum PoseConstraintInput {
    /// Center plus three plane points; the tail is `p1` or `p2`.
    FourPoint {
        #[serde(with = "serde_util::vec3")]
        center: Vec3,
        #[serde(with = "serde_util::vec3")]
        p: Vec3,
        #[serde(with = "serde_util::vec3")]
        p1: Vec3,
        #[serde(with = "serde_util::vec3")]
        p2: Vec3,
        tail: TailPoint,
    },
    /// Three plane points, one of which is also the center.
    ThreePoint {
        #[serde(with = "serde_util::vec3")]
        p: Vec3,
        #[serde(with = "serde_util::vec3")]
        p1: Vec3,
        #[serde(with = "serde_util::vec3")]
        p2: Vec3,
        center_from: PlanePoint,
        tail: TailPoint,
    },
    /// Center and tail point; the plane comes from the closest mesh triangle.
    TwoPoint {
        #[serde(with = "serde_util::vec3")]
        center: Vec3,
        #[serde(with = "serde_util::vec3")]
        tail_point: Vec3,
    },
}

impl PoseConstraintInput {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            PoseConstraintInput::FourPoint { .. } => ConstraintKind::FourPoint,
            PoseConstraintInput::ThreePoint { .. } => ConstraintKind::ThreePoint,
            PoseConstraintInput::TwoPoint { .. } => ConstraintKind::TwoPoint,
        }
    }

    /// The point that becomes the pose center before any surface projection.
    pub fn center(&self) -> Vec3 {
        match *self {
            PoseConstraintInput::FourPoint { center, .. } => center,
            PoseConstraintInput::ThreePoint {
                p, p1, p2, center_from, ..
            } => match center_from {
                PlanePoint::P => p,
                PlanePoint::P1 => p1,
                PlanePoint::P2 => p2,
            },
            PoseConstraintInput::TwoPoint { center, .. } => center,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    FreeSkin,
    RestrictedCortex,
    ClosestSkin,
}

impl StrategyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::FreeSkin => "free_skin",
            StrategyKind::RestrictedCortex => "restricted_cortex",
            StrategyKind::ClosestSkin => "closest_skin",
        }
    }
}

/// Planning knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanOptions {
    /// Two-point centers farther than this from the mesh are rejected (mm).
    pub surface_bound_mm: f64,
    /// Half extents of the rectangular coil footprint along the pose x and y
    /// axes, used for the restricted-cortex skin collision flag (mm).
    pub footprint_half_extents_mm: [f64; 2],
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            surface_bound_mm: 50.0,
            footprint_half_extents_mm: [70.0, 35.0],
        }
    }
}

/// A planned coil pose `{H→b}` in head-image coordinates.
///
/// Rotation columns are `(x, y, n)`: `n` is the outward surface normal and
/// `y` points toward the coil tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlanPoseFile", into = "PlanPoseFile")]
pub struct PlanPose {
    pub strategy: StrategyKind,
    pub pose: RigidTransform,
    pub source: PoseConstraintInput,
    pub cortex_target: Option<Vec3>,
    /// Triangle the orientation was taken from, when it came from a mesh.
    pub anchor_triangle: Option<usize>,
    /// Set when a footprint corner of a restricted-cortex pose is inside the skin.
    pub skin_collision: bool,
}

impl PlanPose {
    pub fn center(&self) -> Vec3 {
        self.pose.translation
    }

    pub fn normal(&self) -> Vec3 {
        self.pose.axis(2)
    }

    pub fn tail(&self) -> Vec3 {
        self.pose.axis(1)
    }
}

#[derive(Serialize, Deserialize)]
struct PlanPoseFile {
    strategy: StrategyKind,
    #[serde(with = "rot9")]
    rotation: Mat3,
    #[serde(with = "serde_util::vec3")]
    translation: Vec3,
    source: PoseConstraintInput,
    #[serde(with = "serde_util::opt_vec3", default)]
    cortex_target: Option<Vec3>,
    #[serde(default)]
    anchor_triangle: Option<usize>,
    #[serde(default)]
    skin_collision: bool,
}

impl From<PlanPose> for PlanPoseFile {
    fn from(p: PlanPose) -> Self {
        Self {
            strategy: p.strategy,
            rotation: p.pose.rotation,
            translation: p.pose.translation,
            source: p.source,
            cortex_target: p.cortex_target,
            anchor_triangle: p.anchor_triangle,
            skin_collision: p.skin_collision,
        }
    }
}

impl TryFrom<PlanPoseFile> for PlanPose {
    type Error = GeometryError;

    fn try_from(f: PlanPoseFile) -> Result<Self, Self::Error> {
        Ok(Self {
            strategy: f.strategy,
            pose: RigidTransform::new(f.rotation, f.translation)?,
            source: f.source,
            cortex_target: f.cortex_target,
            anchor_triangle: f.anchor_triangle,
            skin_collision: f.skin_collision,
        })
    }
}
