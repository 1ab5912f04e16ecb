//! Artifact files. Every structured artifact is pretty JSON with a trailing
//! newline; tables are CSV.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tmsnav_core::fieldsim::SweepRow;
use tmsnav_core::kinematics::PoseError;
use tmsnav_core::pose_plan::{HotspotGrid, PlanPose};
use tmsnav_core::registration::{FiducialReport, RegistrationResult};
use tmsnav_core::stats::MetricStats;
use tmsnav_core::RigidTransform;

use crate::CliError;

pub const REGISTRATION_JSON: &str = "registration.json";
pub const FIDUCIALS_JSON: &str = "fiducials.json";
pub const PLAN_JSON: &str = "plan.json";
pub const CHAIN_JSON: &str = "chain.json";
pub const HOTSPOT_JSON: &str = "hotspot.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SESSION_JSON: &str = "session.json";
pub const SESSION_SAMPLES_CSV: &str = "session_samples.csv";
pub const SESSION_SUMMARY_CSV: &str = "session_summary.csv";
pub const SESSION_SVG: &str = "session_voltage.svg";
pub const REPORT_JSON: &str = "report.json";

/// Output of `chain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// `{R→E*}`.
    pub commanded_end_effector: RigidTransform,
    /// `{O→C*}`.
    pub desired_coil_in_tracker: RigidTransform,
    /// `{H→C}` reached after moving to the commanded pose.
    pub coil_in_head: RigidTransform,
    /// Against the planned pose turned to face into the head.
    pub error: PoseError,
}

/// Output of `hotspot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotspotReport {
    pub grid: HotspotGrid,
    /// Primary-axis peak-to-peak EMF per node (V), row-major.
    pub responses: Option<Vec<f64>>,
    pub selected: Option<usize>,
}

/// Output of `report`: whatever artifacts the output directory holds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectReport {
    pub registration: Option<RegistrationResult>,
    pub fiducials: Option<FiducialReport>,
    pub plan: Option<PlanPose>,
    pub chain_error: Option<PoseError>,
    pub hotspot_selected: Option<usize>,
    pub sweep: Option<Vec<SweepRow>>,
    pub session_summary: Option<Vec<MetricStats>>,
}

pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir, written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", p.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.text(name, &to_json(value)?)
    }

    /// Names written so far, in order.
    pub fn written(&self) -> String {
        self.written.join(",")
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(format!("serialization: {e}")))
}

pub fn csv_error(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(format!("csv: {e}"))
}
