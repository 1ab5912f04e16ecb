//! Project file: where the inputs live and how every stage is tuned.
//!
//! Relative paths are resolved against the directory holding the project
//! file. Referenced files are loaded and validated eagerly, so a broken
//! project fails before any command does work.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tmsnav_core::fieldsim::{CoilModel, PulseTrain, SensorKind, SweepSpec};
use tmsnav_core::geometry::stl;
use tmsnav_core::kinematics::ChainConfig;
use tmsnav_core::pose_plan::PlanOptions;
use tmsnav_core::registration::{IcpConfig, LandmarkSet, RegistrationThresholds};
use tmsnav_core::{RigidTransform, TriangleMesh};

use crate::CliError;

/// Fixed hand-eye results for the coil mount.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Calibration {
    /// `{E→Cr}`: coil tracker body in the end-effector frame.
    pub end_effector_to_coil_reference: RigidTransform,
    /// `{Cr→C}`: coil center in the coil tracker body frame.
    pub coil_reference_to_coil: RigidTransform,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            end_effector_to_coil_reference: RigidTransform::identity(),
            coil_reference_to_coil: RigidTransform::identity(),
        }
    }
}

/// Sensor placement for field and session runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorSettings {
    pub kind: SensorKind,
    pub loop_radius_mm: f64,
    pub turns_per_axis: u32,
    /// Depth below the coil center along the coil's inward axis (mm).
    pub standoff_mm: f64,
}

impl Default for SensorSettings {
    fn default() -> Self {
        Self {
            kind: SensorKind::Sensor3D,
            loop_radius_mm: 7.5,
            turns_per_axis: 10,
            standoff_mm: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub skin_mesh: Option<PathBuf>,
    pub cortex_mesh: Option<PathBuf>,
    pub landmarks: Option<PathBuf>,
    pub calibration: Calibration,
    pub thresholds: RegistrationThresholds,
    /// ICP tuning; its own `thresholds` are replaced by the ones above.
    pub icp: IcpConfig,
    pub plan: PlanOptions,
    pub chain: ChainConfig,
    /// The coil pose is set by each command.
    pub coil: CoilModel,
    pub sensor: SensorSettings,
    pub train: PulseTrain,
    pub sweep: SweepSpec,
    pub output_dir: PathBuf,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            skin_mesh: None,
            cortex_mesh: None,
            landmarks: None,
            calibration: Calibration::default(),
            thresholds: RegistrationThresholds::default(),
            icp: IcpConfig::default(),
            plan: PlanOptions::default(),
            chain: ChainConfig::default(),
            coil: CoilModel::default(),
            sensor: SensorSettings::default(),
            train: PulseTrain::default(),
            sweep: SweepSpec::default(),
            output_dir: PathBuf::from("."),
        }
    }
}

/// A loaded project with every referenced file parsed.
#[derive(Debug, Clone)]
pub struct Project {
    pub config: ProjectConfig,
    pub base_dir: PathBuf,
    pub skin: Option<TriangleMesh>,
    pub cortex: Option<TriangleMesh>,
    pub landmarks: Option<LandmarkSet>,
}

impl Project {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: ProjectConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_config(config, base_dir)
    }

    pub fn from_config(mut config: ProjectConfig, base_dir: PathBuf) -> Result<Self, CliError> {
        let t = config.thresholds;
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(t.pairpoint_mm) || !positive(t.icp_mm) {
            return Err(CliError::Config(format!("thresholds must be positive, got {t:?}")));
        }
        config.icp.thresholds = t;
        let resolve = |p: &Path| base_dir.join(p);
        let mesh = |p: &Option<PathBuf>| -> Result<Option<TriangleMesh>, CliError> {
            p.as_deref()
                .map(|p| {
                    let full = resolve(p);
                    stl::load_ascii_stl(&full).map_err(|e| CliError::Config(format!("mesh {}: {e}", full.display())))
                })
                .transpose()
        };
        let skin = mesh(&config.skin_mesh)?;
        let cortex = mesh(&config.cortex_mesh)?;
        let landmarks = config
            .landmarks
            .as_deref()
            .map(|p| {
                let full = resolve(p);
                let set: LandmarkSet = read_json(&full)?;
                set.validate().map_err(|e| CliError::Config(format!("{}: {e}", full.display())))?;
                Ok::<_, CliError>(set)
            })
            .transpose()?;
        Ok(Self {
            config,
            base_dir,
            skin,
            cortex,
            landmarks,
        })
    }

    pub fn skin(&self) -> Result<&TriangleMesh, CliError> {
        self.skin.as_ref().ok_or_else(|| CliError::Config("project has no skin_mesh".into()))
    }

    pub fn landmarks(&self) -> Result<&LandmarkSet, CliError> {
        self.landmarks.as_ref().ok_or_else(|| CliError::Config("project has no landmarks file".into()))
    }

    pub fn coil(&self, pose: RigidTransform) -> CoilModel {
        CoilModel {
            pose,
            ..self.config.coil.clone()
        }
    }
}

/// Reads a JSON input file; missing or malformed input is a usage error.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
