//! Planning, registration and validation toolkit for robotic TMS
//! neuronavigation.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: rigid transforms, triangle meshes, spatial queries, STL I/O.
//! - [`pose_plan`]: coil pose extraction from surface points, the planning
//!   strategies (selected by name through a [`pose_plan::StrategyRegistry`])
//!   and hotspot grids.
//! - [`registration`]: pair-point landmark registration, ICP refinement and
//!   the residual acceptance gate.
//! - [`kinematics`]: the tracked/calibrated frame graph and the commanded
//!   end-effector solve.
//! - [`fieldsim`]: figure-8 coil Biot–Savart field, sensor flux and induced
//!   voltage.
//! - [`session_sim`]: seeded alignment and coil-holding session simulation.
//!
//! All lengths are millimetres unless a name says otherwise.

pub mod fieldsim;
pub mod geometry;
pub mod kinematics;
pub mod pose_plan;
pub mod registration;
pub mod serde_util;
pub mod session_sim;
pub mod stats;

pub use geometry::{RigidTransform, SurfaceHit, TriangleMesh};

/// 3-vector in millimetres.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 rotation block.
pub type Mat3 = nalgebra::Matrix3<f64>;
