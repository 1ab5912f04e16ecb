use std::f64::consts::PI;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use tmsnav_core::fieldsim::{sensor_under_coil, CoilModel, PulseTrain, SensorKind};
use tmsnav_core::geometry::shapes;
use tmsnav_core::kinematics::approach_flip;
use tmsnav_core::pose_plan::{free_skin_pose, PlanOptions, PlanPose, PoseConstraintInput};
use tmsnav_core::session_sim::{
    run_alignment_trials, run_holding_session, samples_from_csv, samples_to_csv, summarize, summary_from_csv,
    summary_to_csv, voltage_svg, ActuationLabel, ActuationModel, SessionError, ALIGNMENT_INTERVAL_S,
};
use tmsnav_core::stats::RunningStats;
use tmsnav_core::Vec3;

fn plan() -> PlanPose {
    let skin = shapes::icosphere(Vec3::zeros(), 85.0, 4).unwrap();
    let input = PoseConstraintInput::TwoPoint {
        center: Vec3::new(10.0, 12.0, 84.0),
        tail_point: Vec3::new(10.0, 40.0, 84.0),
    };
    free_skin_pose(&skin, &input, &PlanOptions::default()).unwrap()
}

/// Coil and a sensor fixed 20 mm under the planned coil position.
fn rig(plan: &PlanPose) -> (CoilModel, tmsnav_core::fieldsim::SensorModel) {
    let coil = CoilModel {
        pose: plan.pose.compose(&approach_flip()),
        ..CoilModel::single_loop(35.0, 128)
    };
    let sensor = sensor_under_coil(&coil, SensorKind::Sensor3D, 20.0);
    (coil, sensor)
}

#[test]
fn alignment_error_means_match_the_noise_model() {
    let p = plan();
    let model = ActuationModel {
        translation_sigma_mm: 1.3,
        rotation_sigma_rad: 0.05,
        ..ActuationModel::manual(8)
    };
    let rec = run_alignment_trials(&p, &model, 100_000).unwrap();
    // |N(0, σ)| is half-normal, ‖N(0, σ²I₃)‖ is Maxwell
    let rot = 0.05 * (2.0 / PI).sqrt();
    let trans = 2.0 * 1.3 * (2.0 / PI).sqrt();
    let r = rec.metric("rotation_error_rad").unwrap();
    let t = rec.metric("translation_error_mm").unwrap();
    assert!((r.mean / rot - 1.0).abs() < 0.015, "{} vs {rot}", r.mean);
    assert!((t.mean / trans - 1.0).abs() < 0.015, "{} vs {trans}", t.mean);
    assert!((t.std / (1.3 * (3.0 - 8.0 / PI).sqrt()) - 1.0).abs() < 0.02);

    // a second sampler with a different generator agrees statistically
    let mut rng = StdRng::seed_from_u64(77);
    let mut n = || rng.sample::<f64, _>(StandardNormal);
    let ind: RunningStats = (0..100_000)
        .map(|_| Vec3::new(n(), n(), n()).norm() * 1.3)
        .collect();
    assert!((ind.mean() / t.mean - 1.0).abs() < 0.015);
}

#[test]
fn alignment_timestamps_are_evenly_spaced() {
    let rec = run_alignment_trials(&plan(), &ActuationModel::robotic(1), 5).unwrap();
    let ts: Vec<f64> = rec.samples.iter().map(|s| s.timestamp_s).collect();
    assert_eq!(ts, (0..5).map(|k| f64::from(k) * ALIGNMENT_INTERVAL_S).collect::<Vec<_>>());
    assert!(rec.voltages.is_none());
}

#[test]
fn same_seed_same_session() {
    let p = plan();
    let (coil, sensor) = rig(&p);
    let train = PulseTrain::default();
    let a = run_holding_session(&p, &ActuationModel::manual(3), &coil, &sensor, &train).unwrap();
    let b = run_holding_session(&p, &ActuationModel::manual(3), &coil, &sensor, &train).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = run_holding_session(&p, &ActuationModel::manual(4), &coil, &sensor, &train).unwrap();
    assert_ne!(a.samples, c.samples);
}

#[test]
fn larger_sigmas_give_larger_errors_for_every_seed() {
    let p = plan();
    for seed in 0..20 {
        let robotic = run_alignment_trials(&p, &ActuationModel::robotic(seed), 200).unwrap();
        let manual = run_alignment_trials(&p, &ActuationModel::manual(seed), 200).unwrap();
        for m in ["translation_error_mm", "rotation_error_rad"] {
            let (r, h) = (robotic.metric(m).unwrap(), manual.metric(m).unwrap());
            assert!(r.mean < h.mean && r.std < h.std, "seed {seed} {m}");
        }
    }
}

#[test]
fn std_vanishes_exactly_when_noiseless() {
    let p = plan();
    let (coil, sensor) = rig(&p);
    let train = PulseTrain { trains: 6, ..PulseTrain::default() };
    for label in [ActuationLabel::Robotic, ActuationLabel::Manual] {
        let rec = run_holding_session(&p, &ActuationModel::noiseless(label, 11), &coil, &sensor, &train).unwrap();
        assert!(rec.summary.iter().all(|m| m.std == 0.0), "{:?}", rec.summary);
        assert!(rec.samples.iter().all(|s| s.error.translation_error_mm == 0.0 && s.error.rotation_error_rad == 0.0));
    }
    let noisy = run_holding_session(&p, &ActuationModel::robotic(11), &coil, &sensor, &train).unwrap();
    assert!(noisy.summary.iter().all(|m| m.std > 0.0), "{:?}", noisy.summary);
}

#[test]
fn lateral_drift_alone_lowers_the_primary_voltage() {
    let p = plan();
    let (coil, sensor) = rig(&p);
    let train = PulseTrain::default();
    let still = run_holding_session(&p, &ActuationModel::noiseless(ActuationLabel::Manual, 2), &coil, &sensor, &train).unwrap();
    let drift = ActuationModel {
        translation_sigma_mm: 0.0,
        rotation_sigma_rad: 0.0,
        ..ActuationModel::manual(2)
    };
    let rec = run_holding_session(&p, &drift, &coil, &sensor, &train).unwrap();
    let v0 = still.metric("primary_vpp").unwrap().mean;
    let v = rec.voltages.as_ref().unwrap();
    assert_eq!(v[0][0], v0);
    assert!(v[1..].iter().all(|row| row[0] < v0));
    assert!(rec.metric("primary_vpp").unwrap().mean < v0);
    // drift stays in the tangent plane
    assert!(rec.samples.iter().all(|s| s.error.translation_components_mm.z.abs() < 1e-12));
}

#[test]
fn invalid_models_are_rejected() {
    let p = plan();
    let bad = ActuationModel {
        rotation_sigma_rad: -1.0,
        ..ActuationModel::robotic(0)
    };
    assert!(matches!(run_alignment_trials(&p, &bad, 5), Err(SessionError::InvalidModel(_))));
    assert!(run_alignment_trials(&p, &ActuationModel::robotic(0), 0).is_err());
}

#[test]
fn csv_and_json_outputs_round_trip() {
    let p = plan();
    let (coil, sensor) = rig(&p);
    let rec = run_holding_session(&p, &ActuationModel::manual(9), &coil, &sensor, &PulseTrain::default()).unwrap();
    let samples = samples_to_csv(&rec).unwrap();
    let rows = samples_from_csv(&samples).unwrap();
    assert_eq!(rows.len(), 20);
    assert_eq!(rows[3].primary_vpp, Some(rec.voltages.as_ref().unwrap()[3][0]));
    assert_eq!(rows[3].rotation_error_rad, rec.samples[3].error.rotation_error_rad);
    let summary = summary_to_csv(&rec.summary).unwrap();
    let back = summary_from_csv(&summary).unwrap();
    assert_eq!(back, rec.summary);
    assert_eq!(summary_to_csv(&back).unwrap(), summary);
    let json = serde_json::to_string_pretty(&rec).unwrap();
    let again: tmsnav_core::session_sim::SessionRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(again, rec);
    assert_eq!(summarize(&again).unwrap(), rec.summary);
    let svg = voltage_svg(&rec).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

fn two_pass(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

proptest! {
    #[test]
    fn streaming_stats_match_two_pass(xs in prop::collection::vec(-1e3..1e3f64, 2..200), shift in -1e6..1e6f64) {
        let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let s: RunningStats = shifted.iter().copied().collect();
        let (m, sd) = two_pass(&shifted);
        prop_assert!((s.mean() - m).abs() <= 1e-9 * m.abs().max(1.0));
        prop_assert!((s.std() - sd).abs() <= 1e-6 * sd.max(1.0));
        let f = s.finish("x");
        prop_assert_eq!(f.min, shifted.iter().copied().fold(f64::INFINITY, f64::min));
        prop_assert_eq!(f.max, shifted.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
}
