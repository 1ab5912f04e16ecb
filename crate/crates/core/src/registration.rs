//! Image-to-head registration: closed-form landmark alignment, point-to-surface
//! ICP refinement and the residual acceptance gate.
//!
//! Every transform produced here is `{Hr→H}`: it maps probe points measured in
//! the head-marker frame onto the head image.

use nalgebra::{DMatrix, DVector, Rotation3, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::serde_util;
use crate::{Mat3, RigidTransform, TriangleMesh, Vec3};

/// Singular-value floor for a usable point configuration (mm).
pub const DEGENERACY_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistrationError {
    #[error("DegenerateLandmarks: {0}")]
    DegenerateLandmarks(String),
    #[error("TooFewPairs: {got} pairs, at least {min} required")]
    TooFewPairs { got: usize, min: usize },
    #[error("LengthMismatch: {names} names, {image} image points, {probe} probe points")]
    LengthMismatch { names: usize, image: usize, probe: usize },
    #[error("TooFewPoints: ICP cloud has {got} points, at least {min} required")]
    TooFewPoints { got: usize, min: usize },
    #[error("DegenerateCorrespondences: closest-point matches do not span a plane")]
    DegenerateCorrespondences,
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("LandmarkMismatch: {0}")]
    LandmarkMismatch(String),
    #[error("Geometry: {0}")]
    Geometry(#[from] GeometryError),
}

impl RegistrationError {
    pub fn name(&self) -> &'static str {
        match self {
            RegistrationError::DegenerateLandmarks(_) => "DegenerateLandmarks",
            RegistrationError::TooFewPairs { .. } => "TooFewPairs",
            RegistrationError::LengthMismatch { .. } => "LengthMismatch",
            RegistrationError::TooFewPoints { .. } => "TooFewPoints",
            RegistrationError::DegenerateCorrespondences => "DegenerateCorrespondences",
            RegistrationError::InvalidConfig(_) => "InvalidConfig",
            RegistrationError::LandmarkMismatch(_) => "LandmarkMismatch",
            RegistrationError::Geometry(_) => "Geometry",
        }
    }
}

/// Anatomical landmarks picked in the image and touched with the probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub names: Vec<String>,
    #[serde(with = "serde_util::vec3_list")]
    pub image_points: Vec<Vec3>,
    #[serde(with = "serde_util::vec3_list")]
    pub probe_points: Vec<Vec3>,
}

impl LandmarkSet {
    pub fn new(names: Vec<String>, image_points: Vec<Vec3>, probe_points: Vec<Vec3>) -> Result<Self, RegistrationError> {
        let set = Self {
            names,
            image_points,
            probe_points,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Lengths agree, at least three pairs, and neither point set is collinear.
    pub fn validate(&self) -> Result<(), RegistrationError> {
        let (n, i, p) = (self.names.len(), self.image_points.len(), self.probe_points.len());
        if n != i || n != p {
            return Err(RegistrationError::LengthMismatch {
                names: n,
                image: i,
                probe: p,
            });
        }
        if n < 3 {
            return Err(RegistrationError::TooFewPairs { got: n, min: 3 });
        }
        for (label, pts) in [("image", &self.image_points), ("probe", &self.probe_points)] {
            if pts.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
                return Err(RegistrationError::DegenerateLandmarks(format!("{label} points contain non-finite values")));
            }
            let sv = spread_singular_value(pts);
            if !(sv > DEGENERACY_EPSILON) {
                return Err(RegistrationError::DegenerateLandmarks(format!(
                    "{label} points are collinear (second singular value {sv:e})"
                )));
            }
        }
        Ok(())
    }
}

/// Second-largest singular value of the centered point matrix. It vanishes
/// exactly when the points are collinear or coincident; the smallest one is
/// zero for any planar set, including every three-landmark set.
fn spread_singular_value(points: &[Vec3]) -> f64 {
    let c = centroid(points);
    let mut scatter = Mat3::zeros();
    for p in points {
        let d = p - c;
        scatter += d * d.transpose();
    }
    let mut ev: Vec<f64> = scatter.symmetric_eigenvalues().iter().map(|e| e.max(0.0).sqrt()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev[1]
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().sum::<Vec3>() / points.len() as f64
}

/// Least-squares rigid transform taking `source[i]` onto `target[i]`.
///
/// Centroids are removed, the 3×3 cross-covariance is decomposed by SVD and
/// a reflection is corrected by flipping the weakest singular direction.
/// Returns `None` when the source or target spread is degenerate.
pub fn solve_rigid(source: &[Vec3], target: &[Vec3]) -> Option<RigidTransform> {
    debug_assert_eq!(source.len(), target.len());
    if source.len() < 3 {
        return None;
    }
    let cs = centroid(source);
    let ct = centroid(target);
    let mut h = Mat3::zeros();
    for (s, t) in source.iter().zip(target) {
        h += (s - cs) * (t - ct).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let sv = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    // a vanishing middle singular value means collinear correspondences
    if !(sv[order[1]] > 1e-12 * sv[order[0]]) {
        return None;
    }
    let v = v_t.transpose();
    let mut fix = Mat3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        fix[(order[2], order[2])] = -1.0;
    }
    let rotation = v * fix * u.transpose();
    let translation = ct - rotation * cs;
    Some(RigidTransform {
        rotation,
        translation,
    })
}

/// Residual acceptance thresholds (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrationThresholds {
    pub pairpoint_mm: f64,
    pub icp_mm: f64,
}

impl Default for RegistrationThresholds {
    fn default() -> Self {
        Self {
            pairpoint_mm: 6.0,
            icp_mm: 2.0,
        }
    }
}

impl RegistrationThresholds {
    pub fn accepts(&self, pairpoint: Option<f64>, icp: Option<f64>) -> bool {
        pairpoint.is_none_or(|r| r <= self.pairpoint_mm) && icp.is_none_or(|r| r <= self.icp_mm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    /// `{Hr→H}`.
    pub transform: RigidTransform,
    pub pairpoint_residual_mean: Option<f64>,
    pub icp_residual_mean: Option<f64>,
    pub accepted: bool,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default)]
    pub landmark_names: Vec<String>,
    /// Mean residual before the first ICP step and after each accepted one.
    #[serde(default)]
    pub residual_history: Vec<f64>,
}

impl RegistrationResult {
    /// Recomputes `accepted` for other thresholds.
    pub fn regate(&mut self, thresholds: &RegistrationThresholds) {
        self.accepted = thresholds.accepts(self.pairpoint_residual_mean, self.icp_residual_mean);
    }
}

/// Closed-form landmark registration.
pub fn pairpoint_register(
    landmarks: &LandmarkSet,
    thresholds: &RegistrationThresholds,
) -> Result<RegistrationResult, RegistrationError> {
    landmarks.validate()?;
    let transform = solve_rigid(&landmarks.probe_points, &landmarks.image_points)
        .ok_or_else(|| RegistrationError::DegenerateLandmarks("cross-covariance is rank deficient".into()))?;
    let residual = mean_pair_distance(&transform, &landmarks.probe_points, &landmarks.image_points);
    Ok(RegistrationResult {
        transform,
        pairpoint_residual_mean: Some(residual),
        icp_residual_mean: None,
        accepted: thresholds.accepts(Some(residual), None),
        iterations: 1,
        converged: true,
        landmark_names: landmarks.names.clone(),
        residual_history: Vec::new(),
    })
}

fn mean_pair_distance(t: &RigidTransform, source: &[Vec3], target: &[Vec3]) -> f64 {
    source.iter().zip(target).map(|(s, q)| (t.apply_point(s) - q).norm()).sum::<f64>() / source.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Stop once an iteration improves the mean residual by at most this
    /// fraction of the previous residual.
    #[serde(alias = "convergence_delta_mm")]
    pub convergence_delta: f64,
    /// Fraction of worst correspondences ignored by the solve and the residual.
    pub trim_fraction: f64,
    pub thresholds: RegistrationThresholds,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            convergence_delta: 1e-4,
            trim_fraction: 0.0,
            thresholds: RegistrationThresholds::default(),
        }
    }
}

pub const MIN_ICP_POINTS: usize = 10;

struct Matching {
    targets: Vec<Vec3>,
    /// Indices of the kept (untrimmed) correspondences, ascending.
    kept: Vec<usize>,
    residual: f64,
}

fn match_cloud(skin: &TriangleMesh, cloud: &[Vec3], t: &RigidTransform, keep: usize) -> Result<Matching, RegistrationError> {
    let hits: Vec<(Vec3, f64)> = cloud
        .par_iter()
        .map(|p| {
            let q = t.apply_point(p);
            skin.closest_point(&q).map(|h| (h.point, h.ray_parameter))
        })
        .collect::<Result<_, _>>()?;
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.sort_by(|&a, &b| hits[a].1.total_cmp(&hits[b].1).then(a.cmp(&b)));
    let mut kept = order[..keep].to_vec();
    kept.sort_unstable();
    let residual = kept.iter().map(|&i| hits[i].1).sum::<f64>() / keep as f64;
    Ok(Matching {
        targets: hits.into_iter().map(|h| h.0).collect(),
        kept,
        residual,
    })
}

/// Point-to-surface ICP of a probed cloud (frame Hr) against the skin mesh
/// (frame H), starting from `init`.
///
/// Each iteration matches every cloud point to its closest skin point and
/// re-solves the rigid fit. Plain point-to-point ICP slides very slowly along
/// smooth surfaces, so the pose sequence is Anderson-accelerated (depth
/// [`ANDERSON_DEPTH`]): the extrapolated pose is used only when its residual
/// beats the plain update, otherwise the plain update is taken and the
/// acceleration history restarts.
///
/// A step that would raise the mean residual is discarded and ends the loop,
/// so `residual_history` is non-increasing. Running out of iterations is not
/// an error; `converged` reports it.
pub fn icp_refine(
    skin: &TriangleMesh,
    cloud: &[Vec3],
    init: &RigidTransform,
    config: &IcpConfig,
) -> Result<RegistrationResult, RegistrationError> {
    if cloud.len() < MIN_ICP_POINTS {
        return Err(RegistrationError::TooFewPoints {
            got: cloud.len(),
            min: MIN_ICP_POINTS,
        });
    }
    if !(0.0..1.0).contains(&config.trim_fraction) {
        return Err(RegistrationError::InvalidConfig(format!(
            "trim_fraction must lie in [0, 1), got {}",
            config.trim_fraction
        )));
    }
    if !(config.convergence_delta >= 0.0) {
        return Err(RegistrationError::InvalidConfig("convergence_delta must be non-negative".into()));
    }
    init.validate()?;
    let keep = ((cloud.len() as f64) * (1.0 - config.trim_fraction)).ceil() as usize;
    let keep = keep.clamp(3, cloud.len());

    let mut transform = *init;
    let mut current = match_cloud(skin, cloud, &transform, keep)?;
    let mut history = vec![current.residual];
    let mut iterations = 0;
    let mut converged = false;
    let mut anderson = Anderson::default();
    while iterations < config.max_iterations {
        iterations += 1;
        let src: Vec<Vec3> = current.kept.iter().map(|&i| cloud[i]).collect();
        let dst: Vec<Vec3> = current.kept.iter().map(|&i| current.targets[i]).collect();
        let mut candidate = solve_rigid(&src, &dst).ok_or(RegistrationError::DegenerateCorrespondences)?;
        let mut next = match_cloud(skin, cloud, &candidate, keep)?;
        if next.residual > current.residual {
            converged = true;
            break;
        }
        match anderson.propose(pose_vec(&transform), pose_vec(&candidate)) {
            Some(q) => {
                let trial = pose_from_vec(&q);
                let m = match_cloud(skin, cloud, &trial, keep)?;
                if m.residual < next.residual {
                    candidate = trial;
                    next = m;
                } else {
                    anderson.restart(pose_vec(&transform), pose_vec(&candidate));
                }
            }
            None => {}
        }
        let improvement = current.residual - next.residual;
        let previous = current.residual;
        transform = candidate;
        current = next;
        history.push(current.residual);
        if improvement <= config.convergence_delta * previous || current.residual <= EXACT_FIT_MM {
            converged = true;
            break;
        }
    }
    Ok(RegistrationResult {
        transform,
        pairpoint_residual_mean: None,
        icp_residual_mean: Some(current.residual),
        accepted: config.thresholds.accepts(None, Some(current.residual)),
        iterations,
        converged,
        landmark_names: Vec::new(),
        residual_history: history,
    })
}

/// Mean residual treated as an exact fit (mm).
pub const EXACT_FIT_MM: f64 = 1e-9;
/// Number of past iterates the Anderson extrapolation mixes.
pub const ANDERSON_DEPTH: usize = 5;
/// Lever arm (mm) turning rotation-vector components into lengths so both
/// halves of the pose vector weigh alike in the least-squares mix.
const POSE_LEVER_MM: f64 = 100.0;

fn pose_vec(t: &RigidTransform) -> Vector6<f64> {
    let r = Rotation3::from_matrix_unchecked(t.rotation).scaled_axis() * POSE_LEVER_MM;
    Vector6::new(r.x, r.y, r.z, t.translation.x, t.translation.y, t.translation.z)
}

fn pose_from_vec(q: &Vector6<f64>) -> RigidTransform {
    RigidTransform {
        rotation: Rotation3::new(Vec3::new(q[0], q[1], q[2]) / POSE_LEVER_MM).into_inner(),
        translation: Vec3::new(q[3], q[4], q[5]),
    }
}

/// Anderson mixing for the fixed-point map `x ↦ g(x)`.
#[derive(Default)]
struct Anderson {
    /// `(g(x), g(x) − x)` of the most recent iterates, oldest first.
    past: Vec<(Vector6<f64>, Vector6<f64>)>,
}

impl Anderson {
    fn restart(&mut self, x: Vector6<f64>, g: Vector6<f64>) {
        self.past.clear();
        self.past.push((g, g - x));
    }

    /// Records `(x, g(x))` and returns the mixed iterate once there is history.
    fn propose(&mut self, x: Vector6<f64>, g: Vector6<f64>) -> Option<Vector6<f64>> {
        let f = g - x;
        self.past.push((g, f));
        if self.past.len() > ANDERSON_DEPTH + 1 {
            self.past.remove(0);
        }
        let cols = self.past.len() - 1;
        if cols == 0 {
            return None;
        }
        let df = DMatrix::from_fn(6, cols, |r, c| self.past[c + 1].1[r] - self.past[c].1[r]);
        let dg = DMatrix::from_fn(6, cols, |r, c| self.past[c + 1].0[r] - self.past[c].0[r]);
        let rhs = DVector::from_column_slice(f.as_slice());
        let gamma = df.svd(true, true).solve(&rhs, 1e-12).ok()?;
        let mixed = DVector::from_column_slice(g.as_slice()) - dg * gamma;
        let out = Vector6::from_column_slice(mixed.as_slice());
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

/// Landmark registration followed by ICP; the gate sees both residuals.
pub fn register_with_icp(
    landmarks: &LandmarkSet,
    skin: &TriangleMesh,
    cloud: &[Vec3],
    config: &IcpConfig,
) -> Result<RegistrationResult, RegistrationError> {
    let pp = pairpoint_register(landmarks, &config.thresholds)?;
    let mut icp = icp_refine(skin, cloud, &pp.transform, config)?;
    icp.pairpoint_residual_mean = pp.pairpoint_residual_mean;
    icp.landmark_names = pp.landmark_names;
    icp.regate(&config.thresholds);
    Ok(icp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiducialRow {
    pub name: String,
    pub distance_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiducialReport {
    /// Sorted by landmark name.
    pub rows: Vec<FiducialRow>,
    pub mean_mm: f64,
    pub max_mm: f64,
}

/// Per-landmark distances `‖T·probe − image‖` under the result's transform.
pub fn fiducial_residual_report(
    result: &RegistrationResult,
    landmarks: &LandmarkSet,
) -> Result<FiducialReport, RegistrationError> {
    landmarks.validate()?;
    if result.landmark_names != landmarks.names {
        return Err(RegistrationError::LandmarkMismatch(format!(
            "result was computed for {:?}, got {:?}",
            result.landmark_names, landmarks.names
        )));
    }
    let distances: Vec<f64> = landmarks
        .probe_points
        .iter()
        .zip(&landmarks.image_points)
        .map(|(p, q)| (result.transform.apply_point(p) - q).norm())
        .collect();
    // same summation order as the solver's residual
    let mean_mm = distances.iter().sum::<f64>() / distances.len() as f64;
    let max_mm = distances.iter().copied().fold(0.0, f64::max);
    let mut rows: Vec<FiducialRow> = landmarks
        .names
        .iter()
        .zip(distances)
        .map(|(name, distance_mm)| FiducialRow {
            name: name.clone(),
            distance_mm,
        })
        .collect();
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(FiducialReport { rows, mean_mm, max_mm })
}

/// Probed surface points, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    #[serde(with = "serde_util::vec3_list")]
    pub points: Vec<Vec3>,
}
