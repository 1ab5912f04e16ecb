//! Scratch projects for driving the `tmsnav` binary.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tmsnav_core::geometry::{shapes, stl};
use tmsnav_core::kinematics::{random_frame_graph, Frame};
use tmsnav_core::registration::{LandmarkSet, PointCloud};
use tmsnav_core::{RigidTransform, TriangleMesh, Vec3};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the binary in `cwd`.
pub fn tmsnav(cwd: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_tmsnav"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

pub fn write_json<T: serde::Serialize>(dir: &Path, name: &str, v: &T) -> PathBuf {
    write(dir, name, &serde_json::to_string_pretty(v).unwrap())
}

pub fn write_mesh(dir: &Path, name: &str, mesh: &TriangleMesh) -> PathBuf {
    write(dir, name, &stl::write_ascii_stl(mesh, name))
}

/// Registration `{Hr→H}` used by the self-consistent fixtures.
pub fn truth() -> RigidTransform {
    RigidTransform::from_axis_angle(&Vec3::new(0.2, -0.4, 1.0), 0.3, Vec3::new(4.0, -7.0, 12.0))
}

/// Six axis landmarks; the probe copies sit `inflation` mm farther out, so
/// the best fit is the identity with mean residual exactly `inflation`.
pub fn axis_landmarks(inflation: f64) -> LandmarkSet {
    let dirs = [Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z(), -Vec3::z()];
    LandmarkSet::new(
        ["nasion", "inion", "left", "right", "vertex", "chin"].iter().map(|s| s.to_string()).collect(),
        dirs.iter().map(|d| d * 100.0).collect(),
        dirs.iter().map(|d| d * (100.0 + inflation)).collect(),
    )
    .unwrap()
}

/// Landmarks on the ellipsoid skin whose probe copies are exact under `truth`.
pub fn exact_landmarks() -> LandmarkSet {
    let image = vec![
        Vec3::new(0.0, 90.0, 0.0),
        Vec3::new(0.0, -90.0, 0.0),
        Vec3::new(75.0, 0.0, 0.0),
        Vec3::new(-75.0, 0.0, 0.0),
        Vec3::new(0.0, 0.0, 100.0),
    ];
    let inv = truth().inverse();
    let probe = image.iter().map(|p| inv.apply_point(p)).collect();
    LandmarkSet::new((0..5).map(|i| format!("l{i}")).collect(), image, probe).unwrap()
}

pub fn skin() -> TriangleMesh {
    shapes::ellipsoid(Vec3::zeros(), Vec3::new(75.0, 90.0, 100.0), 4).unwrap()
}

/// Probe cloud in the tracker frame lying exactly on the skin under `truth`.
pub fn exact_cloud() -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let inv = truth().inverse();
    PointCloud {
        points: shapes::sample_surface(&skin(), 150, &mut rng).iter().map(|p| inv.apply_point(p)).collect(),
    }
}

/// Project on an ellipsoid head with a landmark file and defaults elsewhere.
pub fn registration_project(dir: &Path, landmarks: &LandmarkSet) -> PathBuf {
    write_mesh(dir, "skin.stl", &skin());
    write_json(dir, "landmarks.json", landmarks);
    write_json(
        dir,
        "project.json",
        &json!({ "skin_mesh": "skin.stl", "landmarks": "landmarks.json", "output_dir": "out" }),
    )
}

/// Concentric heads: flat-topped skin at z = 85 over a 70 mm cortex, and a
/// single-loop coil for field and session runs.
pub fn concentric_project(dir: &Path) -> PathBuf {
    write_mesh(dir, "skin.stl", &shapes::flat_capped_sphere(85.0, 0.15, 24, 48).unwrap());
    write_mesh(dir, "cortex.stl", &shapes::icosphere(Vec3::zeros(), 70.0, 3).unwrap());
    write_json(
        dir,
        "pole.json",
        // cortex tangent plane at the pole; tail toward +y
        &json!({
            "constraint_kind": "four_point",
            "center": [0.0, 0.0, 70.0],
            "p": [0.0, 0.0, 70.0],
            "p1": [1.0, 0.0, 70.0],
            "p2": [0.0, 1.0, 70.0],
            "tail": "p2"
        }),
    );
    write_json(dir, "project.json", &concentric_config())
}

pub fn concentric_config() -> Value {
    json!({
        "skin_mesh": "skin.stl",
        "cortex_mesh": "cortex.stl",
        "coil": { "layout": "single_loop", "segments_per_loop": 128 },
        "sensor": { "kind": "3d", "standoff_mm": 20.0 },
        "sweep": { "direction": [1.0, 0.0, 0.0], "offsets_mm": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0] },
        "train": { "trains": 8 },
        "output_dir": "out"
    })
}

/// Live chain edges for `chain`, without the calibration edges.
pub fn live_graph(seed: u64) -> Value {
    let g = random_frame_graph(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut v = serde_json::to_value(&g).unwrap();
    let edges = v["edges"].as_array_mut().unwrap();
    edges.retain(|e| {
        let pair = (e["from"].as_str().unwrap(), e["to"].as_str().unwrap());
        pair != (Frame::E.as_str(), Frame::Cr.as_str()) && pair != (Frame::Cr.as_str(), Frame::C.as_str())
    });
    v
}

/// CSV column by header name.
pub fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

/// Every file in `dir`, sorted, with its bytes.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

/// Runs the whole pipeline on the concentric project into `out`; returns
/// the summary lines.
pub fn full_pipeline(dir: &Path, out: &str, seed: &str) -> Vec<String> {
    write_json(dir, "graph.json", &live_graph(3));
    let steps: Vec<Vec<&str>> = vec![
        vec!["plan", "--strategy", "closest_skin", "--constraint", "pole.json"],
        vec!["chain", "--plan", "PLAN", "--graph", "graph.json"],
        vec!["hotspot", "--plan", "PLAN", "--rows", "3", "--cols", "3", "--spacing", "8", "--simulate"],
        vec!["fieldsim"],
        vec!["session", "--plan", "PLAN", "--model", "manual"],
        vec!["report"],
    ];
    let plan = format!("{out}/plan.json");
    steps
        .into_iter()
        .map(|s| {
            let mut args = vec!["--config", "project.json", "--out", out, "--seed", seed];
            args.extend(s.into_iter().map(|a| if a == "PLAN" { plan.as_str() } else { a }));
            let r = tmsnav(dir, &args);
            assert_eq!(r.code, 0, "{args:?}: {}", r.stderr);
            r.stdout
        })
        .collect()
}
