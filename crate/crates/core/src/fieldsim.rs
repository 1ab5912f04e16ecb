//! Quasi-static coil field, sensor flux and induced EMF.
//!
//! Lengths are in millimetres, fields in tesla, flux in webers. Each coil
//! wing is a regular polygon of `segments_per_loop` chords; the Biot–Savart
//! sum uses the chord midpoint. Sensor flux is a polar Gauss–Legendre ×
//! uniform-angle quadrature over each sensor disc.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::serde_util;
use crate::{RigidTransform, Vec3};

/// μ₀/4π in T·m/A.
pub const MU0_OVER_4PI: f64 = 1e-7;
/// Evaluation points closer than this to a wire chord are rejected (mm).
pub const WIRE_CLEARANCE_MM: f64 = 0.1;
pub const MIN_SEGMENTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("SingularEvaluation: point is {distance_mm:.4} mm from a coil wire")]
    SingularEvaluation { distance_mm: f64 },
    #[error("InvalidModel: {0}")]
    InvalidModel(String),
    #[error("InvalidSweep: {0}")]
    InvalidSweep(String),
    #[error("Geometry: {0}")]
    Geometry(#[from] GeometryError),
}

impl FieldError {
    pub fn name(&self) -> &'static str {
        match self {
            FieldError::SingularEvaluation { .. } => "SingularEvaluation",
            FieldError::InvalidModel(_) => "InvalidModel",
            FieldError::InvalidSweep(_) => "InvalidSweep",
            FieldError::Geometry(_) => "Geometry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WingLayout {
    /// Two opposed wings centered at `±wing_center_offset` along coil x.
    FigureEight,
    /// One counter-clockwise loop centered on the coil origin.
    SingleLoop,
}

/// Coil geometry and drive. The coil frame has z pointing into the head and
/// y toward the tail; wings lie in its z = 0 plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoilModel {
    pub layout: WingLayout,
    pub loop_radius_mm: f64,
    pub loop_turns: u32,
    pub wing_center_offset_mm: f64,
    pub segments_per_loop: usize,
    pub peak_current_a: f64,
    pub pose: RigidTransform,
}

impl Default for CoilModel {
    fn default() -> Self {
        Self {
            layout: WingLayout::FigureEight,
            loop_radius_mm: 35.0,
            loop_turns: 9,
            wing_center_offset_mm: 35.0,
            segments_per_loop: 128,
            peak_current_a: 5000.0,
            pose: RigidTransform::identity(),
        }
    }
}

/// One chord of a wire polygon in world coordinates.
#[derive(Debug, Clone, Copy)]
struct Chord {
    start: Vec3,
    end: Vec3,
    mid: Vec3,
    dl: Vec3,
}

impl CoilModel {
    pub fn single_loop(loop_radius_mm: f64, segments_per_loop: usize) -> Self {
        Self {
            layout: WingLayout::SingleLoop,
            loop_radius_mm,
            segments_per_loop,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if self.segments_per_loop < MIN_SEGMENTS {
            return Err(FieldError::InvalidModel(format!(
                "segments_per_loop must be at least {MIN_SEGMENTS}, got {}",
                self.segments_per_loop
            )));
        }
        if !(self.loop_radius_mm > 0.0 && self.loop_radius_mm.is_finite()) {
            return Err(FieldError::InvalidModel("loop_radius_mm must be positive".into()));
        }
        if !self.peak_current_a.is_finite() || !self.wing_center_offset_mm.is_finite() {
            return Err(FieldError::InvalidModel("non-finite coil parameter".into()));
        }
        self.pose.validate()?;
        Ok(())
    }

    /// Wing centers (coil frame) and winding sense (+1 counter-clockwise
    /// about coil z).
    fn wings(&self) -> Vec<(Vec3, f64)> {
        match self.layout {
            WingLayout::SingleLoop => vec![(Vec3::zeros(), 1.0)],
            WingLayout::FigureEight => vec![
                (Vec3::new(self.wing_center_offset_mm, 0.0, 0.0), 1.0),
                (Vec3::new(-self.wing_center_offset_mm, 0.0, 0.0), -1.0),
            ],
        }
    }

    fn wing_chords(&self, center: Vec3, sense: f64) -> Vec<Chord> {
        let n = self.segments_per_loop;
        let r = self.loop_radius_mm;
        // the −x wing is the mirror image of the +x wing, so its vertices sit
        // at mirrored angles
        let vertex = |k: usize| {
            let a = 2.0 * PI * k as f64 / n as f64;
            let local = if sense > 0.0 {
                Vec3::new(r * a.cos(), r * a.sin(), 0.0)
            } else {
                Vec3::new(-r * a.cos(), r * a.sin(), 0.0)
            };
            self.pose.apply_point(&(center + local))
        };
        (0..n)
            .map(|k| {
                let (start, end) = (vertex(k), vertex(k + 1));
                Chord {
                    start,
                    end,
                    mid: (start + end) * 0.5,
                    dl: end - start,
                }
            })
            .collect()
    }

    fn wing_field_per_ampere(&self, chords: &[Chord], point: &Vec3) -> Result<Vec3, FieldError> {
        let mut sum = Vec3::zeros();
        for c in chords {
            let d = segment_distance(point, &c.start, &c.end);
            if d < WIRE_CLEARANCE_MM {
                return Err(FieldError::SingularEvaluation { distance_mm: d });
            }
            let r = point - c.mid;
            let r2 = r.norm_squared();
            sum += c.dl.cross(&r) / (r2 * r2.sqrt());
        }
        // μ₀/4π · (mm / mm²) → T/A
        Ok(sum * (MU0_OVER_4PI * 1e3 * f64::from(self.loop_turns)))
    }

    /// Per-wing field at `point` for 1 A of coil current (T/A).
    pub fn wing_fields_per_ampere(&self, point: &Vec3) -> Result<Vec<Vec3>, FieldError> {
        self.wings()
            .into_iter()
            .map(|(c, s)| self.wing_field_per_ampere(&self.wing_chords(c, s), point))
            .collect()
    }

    /// Field at `point` for 1 A of coil current (T/A).
    pub fn field_per_ampere(&self, point: &Vec3) -> Result<Vec3, FieldError> {
        Ok(self.wing_fields_per_ampere(point)?.into_iter().sum())
    }

    fn compiled(&self) -> CompiledCoil<'_> {
        CompiledCoil {
            wings: self.wings().into_iter().map(|(c, s)| self.wing_chords(c, s)).collect(),
            coil: self,
        }
    }
}

/// Chords precomputed once for many evaluations.
struct CompiledCoil<'a> {
    wings: Vec<Vec<Chord>>,
    coil: &'a CoilModel,
}

impl CompiledCoil<'_> {
    fn field_per_ampere(&self, point: &Vec3) -> Result<Vec3, FieldError> {
        let mut b = Vec3::zeros();
        for w in &self.wings {
            b += self.coil.wing_field_per_ampere(w, point)?;
        }
        Ok(b)
    }
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Magnetic field of `coil` at `point` at peak current (T).
pub fn b_field(coil: &CoilModel, point: &Vec3) -> Result<Vec3, FieldError> {
    coil.validate()?;
    Ok(coil.field_per_ampere(point)? * coil.peak_current_a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensorKind {
    #[serde(rename = "2d")]
    Sensor2D,
    #[serde(rename = "3d")]
    Sensor3D,
}

/// Inductive pick-up coil(s). Axis 0 (primary) is the local z-axis; a 3D
/// sensor adds local x (axis 1) and local y (axis 2) loops on the same center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    pub kind: SensorKind,
    pub loop_radius_mm: f64,
    pub turns_per_axis: u32,
    pub pose: RigidTransform,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            kind: SensorKind::Sensor3D,
            loop_radius_mm: 7.5,
            turns_per_axis: 10,
            pose: RigidTransform::identity(),
        }
    }
}

impl SensorModel {
    pub fn axis_count(&self) -> usize {
        match self.kind {
            SensorKind::Sensor2D => 1,
            SensorKind::Sensor3D => 3,
        }
    }

    /// World-frame unit normal of a sensor loop.
    pub fn axis_normal(&self, axis: usize) -> Vec3 {
        self.pose.axis([2, 0, 1][axis])
    }

    /// In-plane unit vectors `(u, v)` spanning the loop disc of `axis`.
    fn disc_basis(&self, axis: usize) -> (Vec3, Vec3) {
        let [a, b] = [[0, 1], [1, 2], [2, 0]][axis];
        (self.pose.axis(a), self.pose.axis(b))
    }

    fn check_axis(&self, axis: usize) -> Result<(), FieldError> {
        if axis >= self.axis_count() {
            return Err(FieldError::InvalidModel(format!(
                "axis {axis} does not exist on a {:?} sensor",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if !(self.loop_radius_mm > 0.0 && self.loop_radius_mm.is_finite()) {
            return Err(FieldError::InvalidModel("sensor loop_radius_mm must be positive".into()));
        }
        self.pose.validate()?;
        Ok(())
    }
}

/// Node counts of the disc quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscQuadrature {
    pub radial: usize,
    pub angular: usize,
}

impl Default for DiscQuadrature {
    fn default() -> Self {
        Self { radial: 8, angular: 16 }
    }
}

impl DiscQuadrature {
    /// `(radius fraction, weight)` pairs with weights summing to the area of
    /// the unit disc.
    fn nodes(&self) -> Result<Vec<(f64, f64, f64)>, FieldError> {
        let radial = NonZeroUsize::new(self.radial).ok_or_else(|| FieldError::InvalidModel("radial nodes must be ≥ 1".into()))?;
        if self.angular == 0 {
            return Err(FieldError::InvalidModel("angular nodes must be ≥ 1".into()));
        }
        let gl = GaussLegendre::new(radial);
        let dtheta = 2.0 * PI / self.angular as f64;
        let mut out = Vec::with_capacity(self.radial * self.angular);
        for &(x, w) in gl.as_node_weight_pairs() {
            // map [-1, 1] → [0, 1]; polar Jacobian ρ
            let rho = 0.5 * (x + 1.0);
            let wr = 0.5 * w * rho;
            for j in 0..self.angular {
                let theta = dtheta * (j as f64 + 0.5);
                out.push((rho * theta.cos(), rho * theta.sin(), wr * dtheta));
            }
        }
        Ok(out)
    }
}

fn flux_per_ampere(
    coil: &CompiledCoil<'_>,
    sensor: &SensorModel,
    axis: usize,
    nodes: &[(f64, f64, f64)],
) -> Result<f64, FieldError> {
    let n = sensor.axis_normal(axis);
    let (u, v) = sensor.disc_basis(axis);
    let a = sensor.loop_radius_mm;
    let c = sensor.pose.translation;
    let mut sum = 0.0;
    for &(x, y, w) in nodes {
        let p = c + u * (a * x) + v * (a * y);
        sum += w * coil.field_per_ampere(&p)?.dot(&n);
    }
    // weights are for the unit disc; area a² mm² → 1e-6 a² m²
    Ok(sum * a * a * 1e-6 * f64::from(sensor.turns_per_axis))
}

/// Flux linkage per ampere of coil current through one sensor axis (Wb/A).
pub fn flux_coefficient(coil: &CoilModel, sensor: &SensorModel, axis: usize) -> Result<f64, FieldError> {
    flux_coefficient_with(coil, sensor, axis, &DiscQuadrature::default())
}

pub fn flux_coefficient_with(
    coil: &CoilModel,
    sensor: &SensorModel,
    axis: usize,
    quadrature: &DiscQuadrature,
) -> Result<f64, FieldError> {
    coil.validate()?;
    sensor.validate()?;
    sensor.check_axis(axis)?;
    flux_per_ampere(&coil.compiled(), sensor, axis, &quadrature.nodes()?)
}

/// Stimulation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PulseTrain {
    pub pulses_per_train: u32,
    pub train_rate_hz: f64,
    /// Fraction of maximum output scaling the coil's peak current.
    pub intensity_fraction: f64,
    pub trains: u32,
    pub inter_train_wait_s: f64,
    /// Carrier frequency of the single-cycle biphasic pulse.
    pub pulse_frequency_hz: f64,
}

impl Default for PulseTrain {
    fn default() -> Self {
        Self {
            pulses_per_train: 25,
            train_rate_hz: 5.0,
            intensity_fraction: 0.30,
            trains: 20,
            inter_train_wait_s: 10.0,
            pulse_frequency_hz: 4000.0,
        }
    }
}

impl PulseTrain {
    pub fn train_duration_s(&self) -> f64 {
        f64::from(self.pulses_per_train) / self.train_rate_hz
    }

    /// Start of train `k` (s).
    pub fn train_start_s(&self, k: u32) -> f64 {
        f64::from(k) * (self.train_duration_s() + self.inter_train_wait_s)
    }

    /// Onset of every pulse of every train (s), in order.
    pub fn pulse_onsets_s(&self) -> Vec<f64> {
        (0..self.trains)
            .flat_map(|k| (0..self.pulses_per_train).map(move |p| (k, p)))
            .map(|(k, p)| self.train_start_s(k) + f64::from(p) / self.train_rate_hz)
            .collect()
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let ok = self.pulses_per_train > 0
            && self.trains > 0
            && self.train_rate_hz > 0.0
            && self.pulse_frequency_hz > 0.0
            && self.inter_train_wait_s >= 0.0
            && self.intensity_fraction >= 0.0
            && self.intensity_fraction.is_finite();
        if ok {
            Ok(())
        } else {
            Err(FieldError::InvalidModel(format!("invalid pulse train {self:?}")))
        }
    }
}

/// Samples per carrier period in the emitted waveform.
pub const SAMPLES_PER_PERIOD: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageReading {
    pub flux_coefficients_wb_per_a: Vec<f64>,
    /// Peak-to-peak EMF per sensor axis (V).
    pub vpp: Vec<f64>,
    /// One pulse, `t ∈ [0, 1/f]` (s).
    pub time_s: Vec<f64>,
    /// EMF per axis at `time_s` (V).
    pub emf_v: Vec<Vec<f64>>,
}

/// `I(t) = I₀ sin(ωt)` over one carrier cycle, `EMF = −k dI/dt`, where
/// `I₀ = intensity_fraction · peak_current`.
pub fn induced_voltage(coil: &CoilModel, sensor: &SensorModel, train: &PulseTrain) -> Result<VoltageReading, FieldError> {
    induced_voltage_with(coil, sensor, train, &DiscQuadrature::default())
}

pub fn induced_voltage_with(
    coil: &CoilModel,
    sensor: &SensorModel,
    train: &PulseTrain,
    quadrature: &DiscQuadrature,
) -> Result<VoltageReading, FieldError> {
    coil.validate()?;
    sensor.validate()?;
    train.validate()?;
    let compiled = coil.compiled();
    let nodes = quadrature.nodes()?;
    let ks = (0..sensor.axis_count())
        .map(|a| flux_per_ampere(&compiled, sensor, a, &nodes))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(voltage_from_coefficients(&ks, coil.peak_current_a, train))
}

/// Waveform and peak-to-peak values for known flux coefficients.
pub fn voltage_from_coefficients(ks: &[f64], peak_current_a: f64, train: &PulseTrain) -> VoltageReading {
    let i0 = train.intensity_fraction * peak_current_a;
    let omega = 2.0 * PI * train.pulse_frequency_hz;
    let dt = 1.0 / (SAMPLES_PER_PERIOD as f64 * train.pulse_frequency_hz);
    let time_s: Vec<f64> = (0..=SAMPLES_PER_PERIOD).map(|i| i as f64 * dt).collect();
    let emf_v = ks
        .iter()
        .map(|&k| time_s.iter().map(|&t| -k * i0 * omega * (omega * t).cos()).collect())
        .collect();
    VoltageReading {
        flux_coefficients_wb_per_a: ks.to_vec(),
        vpp: ks.iter().map(|&k| vpp_from_coefficient(k, peak_current_a, train)).collect(),
        time_s,
        emf_v,
    }
}

/// `2·|k|·I₀·2πf`.
pub fn vpp_from_coefficient(k: f64, peak_current_a: f64, train: &PulseTrain) -> f64 {
    2.0 * k.abs() * train.intensity_fraction * peak_current_a * 2.0 * PI * train.pulse_frequency_hz
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub offset_mm: f64,
    pub primary_vpp: f64,
    pub secondary1_vpp: Option<f64>,
    pub secondary2_vpp: Option<f64>,
}

/// Moves the sensor by `offset · direction` (world frame) and records the
/// per-axis peak-to-peak EMF at each offset.
pub fn displacement_sweep(
    coil: &CoilModel,
    sensor: &SensorModel,
    direction: &Vec3,
    offsets_mm: &[f64],
    train: &PulseTrain,
) -> Result<Vec<SweepRow>, FieldError> {
    coil.validate()?;
    sensor.validate()?;
    train.validate()?;
    let len = direction.norm();
    if !(len > 0.0 && len.is_finite()) {
        return Err(FieldError::InvalidSweep("direction must be a non-zero vector".into()));
    }
    let dir = direction / len;
    if offsets_mm.first().is_some_and(|&o| o != 0.0) {
        return Err(FieldError::InvalidSweep("offsets must start at 0".into()));
    }
    if offsets_mm.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FieldError::InvalidSweep("offsets must be strictly ascending".into()));
    }
    let compiled = coil.compiled();
    let nodes = DiscQuadrature::default().nodes()?;
    offsets_mm
        .par_iter()
        .map(|&off| {
            let mut s = sensor.clone();
            s.pose.translation += dir * off;
            let v: Vec<f64> = (0..s.axis_count())
                .map(|a| flux_per_ampere(&compiled, &s, a, &nodes).map(|k| vpp_from_coefficient(k, coil.peak_current_a, train)))
                .collect::<Result<_, _>>()?;
            Ok(SweepRow {
                offset_mm: off,
                primary_vpp: v[0],
                secondary1_vpp: v.get(1).copied(),
                secondary2_vpp: v.get(2).copied(),
            })
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["offset_mm", "primary_vpp", "secondary1_vpp", "secondary2_vpp"])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

/// Sensor placed `standoff_mm` below the coil origin along coil z, with axes
/// parallel to the coil's.
pub fn sensor_under_coil(coil: &CoilModel, kind: SensorKind, standoff_mm: f64) -> SensorModel {
    let local = RigidTransform::from_translation(Vec3::new(0.0, 0.0, standoff_mm));
    SensorModel {
        kind,
        pose: coil.pose.compose(&local),
        ..SensorModel::default()
    }
}

/// Sweep configuration as stored in project files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    #[serde(with = "serde_util::vec3")]
    pub direction: Vec3,
    pub offsets_mm: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            direction: Vec3::x(),
            offsets_mm: (0..=10).map(f64::from).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_axis(r: f64, z: f64) -> f64 {
        4.0 * PI * MU0_OVER_4PI * r * r / (2.0 * (r * r + z * z).powf(1.5)) * 1e3
    }

    #[test]
    fn single_loop_on_axis() {
        let coil = CoilModel {
            loop_turns: 1,
            ..CoilModel::single_loop(35.0, 1024)
        };
        for z in [5.0, 20.0, 60.0] {
            let b = coil.field_per_ampere(&Vec3::new(0.0, 0.0, z)).unwrap();
            let exact = on_axis(35.0, z);
            assert!(((b.z - exact) / exact).abs() < 1e-3, "z={z}: {} vs {exact}", b.z);
            assert!(b.x.abs() <= 1e-12 * b.z.abs() && b.y.abs() <= 1e-12 * b.z.abs());
        }
    }

    #[test]
    fn wire_proximity_is_singular() {
        let coil = CoilModel::single_loop(35.0, 128);
        let err = coil.field_per_ampere(&Vec3::new(35.0, 0.0, 0.05)).unwrap_err();
        assert!(matches!(err, FieldError::SingularEvaluation { .. }));
        assert!(matches!(
            b_field(&CoilModel::single_loop(35.0, 32), &Vec3::z()),
            Err(FieldError::InvalidModel(_))
        ));
    }

    #[test]
    fn figure_eight_junction_has_no_vertical_field() {
        // by mirror symmetry across x = 0 the z component vanishes on that plane
        let coil = CoilModel::default();
        let b = coil.field_per_ampere(&Vec3::new(0.0, 3.0, 20.0)).unwrap();
        assert!(b.z.abs() < 1e-12 * b.norm(), "{b:?}");
    }

    #[test]
    fn turns_scale_flux_exactly() {
        let coil = CoilModel::single_loop(35.0, 128);
        let mut s = sensor_under_coil(&coil, SensorKind::Sensor3D, 20.0);
        let k = flux_coefficient(&coil, &s, 0).unwrap();
        s.turns_per_axis *= 2;
        assert_eq!(flux_coefficient(&coil, &s, 0).unwrap(), 2.0 * k);
        assert!(k > 0.0);
    }

    #[test]
    fn quadrature_weights_cover_the_disc() {
        let total: f64 = DiscQuadrature::default().nodes().unwrap().iter().map(|n| n.2).sum();
        assert!((total - PI).abs() < 1e-13);
    }

    #[test]
    fn zero_intensity_is_silent() {
        let coil = CoilModel::single_loop(35.0, 128);
        let s = sensor_under_coil(&coil, SensorKind::Sensor3D, 20.0);
        let train = PulseTrain {
            intensity_fraction: 0.0,
            ..Default::default()
        };
        let v = induced_voltage(&coil, &s, &train).unwrap();
        assert!(v.vpp.iter().all(|&x| x == 0.0));
        assert!(v.emf_v.iter().flatten().all(|&x| x == 0.0));
        assert_eq!(v.time_s.len(), SAMPLES_PER_PERIOD + 1);
    }

    #[test]
    fn sensor_2d_has_one_axis() {
        let coil = CoilModel::single_loop(35.0, 128);
        let s = sensor_under_coil(&coil, SensorKind::Sensor2D, 20.0);
        assert!(matches!(flux_coefficient(&coil, &s, 1), Err(FieldError::InvalidModel(_))));
        let v = induced_voltage(&coil, &s, &PulseTrain::default()).unwrap();
        assert_eq!(v.vpp.len(), 1);
    }

    #[test]
    fn train_timing() {
        let t = PulseTrain::default();
        assert_eq!(t.train_duration_s(), 5.0);
        assert_eq!(t.train_start_s(3), 45.0);
        let on = t.pulse_onsets_s();
        assert_eq!(on.len(), 500);
        assert_eq!(on[25], 15.0);
    }

    #[test]
    fn sweep_validation_and_csv() {
        let coil = CoilModel::single_loop(35.0, 128);
        let s = sensor_under_coil(&coil, SensorKind::Sensor3D, 20.0);
        let t = PulseTrain::default();
        assert!(matches!(
            displacement_sweep(&coil, &s, &Vec3::x(), &[1.0, 2.0], &t),
            Err(FieldError::InvalidSweep(_))
        ));
        assert!(matches!(
            displacement_sweep(&coil, &s, &Vec3::zeros(), &[0.0], &t),
            Err(FieldError::InvalidSweep(_))
        ));
        let rows = displacement_sweep(&coil, &s, &Vec3::x(), &[0.0, 2.0, 4.0], &t).unwrap();
        let text = sweep_to_csv(&rows).unwrap();
        assert!(text.starts_with("offset_mm,primary_vpp,secondary1_vpp,secondary2_vpp\n"));
        assert_eq!(sweep_from_csv(&text).unwrap(), rows);
        assert_eq!(sweep_to_csv(&sweep_from_csv(&text).unwrap()).unwrap(), text);
        let s2 = sensor_under_coil(&coil, SensorKind::Sensor2D, 20.0);
        let rows2 = displacement_sweep(&coil, &s2, &Vec3::x(), &[0.0], &t).unwrap();
        let text2 = sweep_to_csv(&rows2).unwrap();
        assert!(text2.lines().nth(1).unwrap().ends_with(",,"));
        assert_eq!(sweep_from_csv(&text2).unwrap(), rows2);
    }
}
