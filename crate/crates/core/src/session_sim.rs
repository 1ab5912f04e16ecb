//! Simulated alignment repetitions and coil-holding sessions.
//!
//! An actuation model perturbs the planned pose: `measured = plan ∘ Δ`, with
//! `Δ` an isotropic Gaussian translation and a rotation about a uniformly
//! random axis by a Gaussian angle. Holding sessions add a slow lateral
//! random walk in the plan's tangent plane and read the sensor once per
//! train.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fieldsim::{induced_voltage, CoilModel, FieldError, PulseTrain, SensorModel};
use crate::kinematics::{approach_flip, pose_error, PoseError};
use crate::pose_plan::PlanPose;
use crate::stats::{MetricStats, RunningStats};
use crate::{RigidTransform, Vec3};

/// Spacing of simulated alignment repetitions (s).
pub const ALIGNMENT_INTERVAL_S: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("EmptyRecord: nothing to summarize")]
    EmptyRecord,
    #[error("InvalidModel: {0}")]
    InvalidModel(String),
    #[error("Field: {0}")]
    Field(#[from] FieldError),
}

impl SessionError {
    pub fn name(&self) -> &'static str {
        match self {
            SessionError::EmptyRecord => "EmptyRecord",
            SessionError::InvalidModel(_) => "InvalidModel",
            SessionError::Field(e) => e.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuationLabel {
    Robotic,
    Manual,
}

/// Noise model of whoever moves and holds the coil.
///
/// The rotation sigmas of the two presets follow the reported alignment
/// errors of the robot (2.5e-3 rad) and of freehand placement (0.14 rad).
/// The translation sigmas and the drift rate are calibrated stand-ins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuationModel {
    pub label: ActuationLabel,
    pub translation_sigma_mm: f64,
    pub rotation_sigma_rad: f64,
    /// Lateral random-walk rate; each tangent-plane component moves with
    /// standard deviation `drift · sqrt(Δt / 60 s)` per step.
    pub drift_mm_per_min: f64,
    pub rng_seed: u64,
}

impl ActuationModel {
    pub fn robotic(seed: u64) -> Self {
        Self {
            label: ActuationLabel::Robotic,
            translation_sigma_mm: 0.5,
            rotation_sigma_rad: 2.5e-3,
            drift_mm_per_min: 0.0,
            rng_seed: seed,
        }
    }

    pub fn manual(seed: u64) -> Self {
        Self {
            label: ActuationLabel::Manual,
            translation_sigma_mm: 1.0,
            rotation_sigma_rad: 0.14,
            drift_mm_per_min: 0.5,
            rng_seed: seed,
        }
    }

    pub fn noiseless(label: ActuationLabel, seed: u64) -> Self {
        Self {
            label,
            translation_sigma_mm: 0.0,
            rotation_sigma_rad: 0.0,
            drift_mm_per_min: 0.0,
            rng_seed: seed,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.translation_sigma_mm == 0.0 && self.rotation_sigma_rad == 0.0 && self.drift_mm_per_min == 0.0
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let vals = [self.translation_sigma_mm, self.rotation_sigma_rad, self.drift_mm_per_min];
        if vals.iter().all(|v| *v >= 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(SessionError::InvalidModel(format!("sigmas and drift must be finite and ≥ 0: {self:?}")))
        }
    }
}

struct Actuator {
    model: ActuationModel,
    rng: ChaCha8Rng,
    drift: Vec3,
}

impl Actuator {
    fn new(model: ActuationModel) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(model.rng_seed),
            drift: Vec3::zeros(),
        }
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Advances the lateral drift by `dt_s` seconds.
    fn step_drift(&mut self, dt_s: f64) {
        let s = self.model.drift_mm_per_min * (dt_s / 60.0).sqrt();
        let (dx, dy) = (self.normal(), self.normal());
        self.drift += Vec3::new(dx * s, dy * s, 0.0);
    }

    /// Plan-frame perturbation; always consumes the same number of draws.
    fn perturbation(&mut self) -> RigidTransform {
        let t = Vec3::new(self.normal(), self.normal(), self.normal()) * self.model.translation_sigma_mm;
        let axis = loop {
            let a = Vec3::new(self.normal(), self.normal(), self.normal());
            if a.norm() > 1e-9 {
                break a;
            }
        };
        let angle = self.normal() * self.model.rotation_sigma_rad;
        RigidTransform::from_axis_angle(&axis, angle, t + self.drift)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSample {
    pub timestamp_s: f64,
    /// Actuated pose in the plan's convention (outward z).
    pub measured: RigidTransform,
    pub error: PoseError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionKind {
    Alignment,
    Holding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub kind: SessionKind,
    pub model: ActuationModel,
    pub planned: PlanPose,
    pub samples: Vec<SessionSample>,
    /// Per-train, per-axis peak-to-peak sensor EMF (V); holding sessions only.
    pub voltages: Option<Vec<Vec<f64>>>,
    pub summary: Vec<MetricStats>,
}

/// `repetitions` independent placements of the coil on the plan.
pub fn run_alignment_trials(plan: &PlanPose, model: &ActuationModel, repetitions: usize) -> Result<SessionRecord, SessionError> {
    model.validate()?;
    if repetitions == 0 {
        return Err(SessionError::InvalidModel("repetitions must be ≥ 1".into()));
    }
    let mut act = Actuator::new(*model);
    let samples = (0..repetitions)
        .map(|k| sample(plan, act.perturbation(), k as f64 * ALIGNMENT_INTERVAL_S))
        .collect();
    finish(SessionKind::Alignment, model, plan, samples, None)
}

fn sample(plan: &PlanPose, delta: RigidTransform, timestamp_s: f64) -> SessionSample {
    let measured = plan.pose.compose(&delta);
    SessionSample {
        timestamp_s,
        measured,
        error: pose_error(&plan.pose, &measured),
    }
}

/// Holds the coil on the plan for `train.trains` trains, drawing one
/// actuated pose per train and reading the sensor (fixed in the head frame).
/// The coil pose is the measured plan pose turned to face into the head.
pub fn run_holding_session(
    plan: &PlanPose,
    model: &ActuationModel,
    coil: &CoilModel,
    sensor: &SensorModel,
    train: &PulseTrain,
) -> Result<SessionRecord, SessionError> {
    model.validate()?;
    train.validate()?;
    let mut act = Actuator::new(*model);
    let mut samples = Vec::with_capacity(train.trains as usize);
    let mut voltages = Vec::with_capacity(train.trains as usize);
    let mut last_t = 0.0;
    for k in 0..train.trains {
        let t = train.train_start_s(k);
        if k > 0 {
            act.step_drift(t - last_t);
        }
        last_t = t;
        let s = sample(plan, act.perturbation(), t);
        let placed = CoilModel {
            pose: s.measured.compose(&approach_flip()),
            ..coil.clone()
        };
        voltages.push(induced_voltage(&placed, sensor, train)?.vpp);
        samples.push(s);
    }
    finish(SessionKind::Holding, model, plan, samples, Some(voltages))
}

fn finish(
    kind: SessionKind,
    model: &ActuationModel,
    plan: &PlanPose,
    samples: Vec<SessionSample>,
    voltages: Option<Vec<Vec<f64>>>,
) -> Result<SessionRecord, SessionError> {
    let mut rec = SessionRecord {
        kind,
        model: *model,
        planned: plan.clone(),
        samples,
        voltages,
        summary: Vec::new(),
    };
    rec.summary = summarize(&rec)?;
    Ok(rec)
}

pub const AXIS_METRICS: [&str; 3] = ["primary_vpp", "secondary1_vpp", "secondary2_vpp"];

/// Mean, sample standard deviation, min and max of every metric.
pub fn summarize(record: &SessionRecord) -> Result<Vec<MetricStats>, SessionError> {
    if record.samples.is_empty() {
        return Err(SessionError::EmptyRecord);
    }
    let mut out = vec![
        record.samples.iter().map(|s| s.error.translation_error_mm).collect::<RunningStats>().finish("translation_error_mm"),
        record.samples.iter().map(|s| s.error.rotation_error_rad).collect::<RunningStats>().finish("rotation_error_rad"),
    ];
    if let Some(v) = &record.voltages {
        let axes = v.first().map_or(0, Vec::len);
        for (a, name) in AXIS_METRICS.iter().enumerate().take(axes) {
            out.push(v.iter().map(|row| row[a]).collect::<RunningStats>().finish(name));
        }
    }
    Ok(out)
}

impl SessionRecord {
    pub fn metric(&self, name: &str) -> Option<&MetricStats> {
        self.summary.iter().find(|m| m.metric == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub timestamp_s: f64,
    pub translation_error_mm: f64,
    pub rotation_error_rad: f64,
    pub dx_mm: f64,
    pub dy_mm: f64,
    pub dz_mm: f64,
    pub primary_vpp: Option<f64>,
    pub secondary1_vpp: Option<f64>,
    pub secondary2_vpp: Option<f64>,
}

/// One row per sample; voltage columns stay empty where not measured.
pub fn samples_to_csv(record: &SessionRecord) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, s) in record.samples.iter().enumerate() {
        let v = record.voltages.as_ref().map(|v| &v[i]);
        let d = s.error.translation_components_mm;
        w.serialize(SampleRow {
            timestamp_s: s.timestamp_s,
            translation_error_mm: s.error.translation_error_mm,
            rotation_error_rad: s.error.rotation_error_rad,
            dx_mm: d.x,
            dy_mm: d.y,
            dz_mm: d.z,
            primary_vpp: v.and_then(|v| v.first().copied()),
            secondary1_vpp: v.and_then(|v| v.get(1).copied()),
            secondary2_vpp: v.and_then(|v| v.get(2).copied()),
        })?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn samples_from_csv(text: &str) -> Result<Vec<SampleRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

pub fn summary_to_csv(summary: &[MetricStats]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for m in summary {
        w.serialize(m)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn summary_from_csv(text: &str) -> Result<Vec<MetricStats>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

/// Per-train primary voltage as a bare SVG polyline chart.
pub fn voltage_svg(record: &SessionRecord) -> Option<String> {
    let v: Vec<f64> = record.voltages.as_ref()?.iter().map(|r| r[0]).collect();
    let (w, h, pad) = (640.0, 320.0, 40.0);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let n = v.len().max(2) - 1;
    let pts: Vec<String> = v
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let px = pad + (w - 2.0 * pad) * i as f64 / n as f64;
            let py = h - pad - (h - 2.0 * pad) * (y - lo) / span;
            format!("{px:.2},{py:.2}")
        })
        .collect();
    Some(format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{pad}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{label:?} primary Vpp per train ({lo:.4} to {hi:.4} V)</text>\n",
            "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"{pts}\"/>\n",
            "</svg>\n"
        ),
        w = w,
        h = h,
        pad = pad,
        label = record.model.label,
        lo = lo,
        hi = hi,
        pts = pts.join(" "),
    ))
}
