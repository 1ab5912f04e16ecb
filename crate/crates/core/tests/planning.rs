mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmsnav_core::fieldsim::{induced_voltage, CoilModel, PulseTrain, SensorKind, SensorModel};
use tmsnav_core::geometry::shapes;
use tmsnav_core::kinematics::approach_flip;
use tmsnav_core::pose_plan::{
    closest_skin_pose, free_skin_pose, hotspot_grid, restricted_cortex_pose, select_hotspot, PlanError,
    PlanOptions, PlanningScene, PoseConstraintInput, StrategyRegistry,
};
use tmsnav_core::{RigidTransform, TriangleMesh, Vec3};

fn two_point(center: Vec3, tail_dir: Vec3) -> PoseConstraintInput {
    PoseConstraintInput::TwoPoint {
        center,
        tail_point: center + tail_dir,
    }
}

fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Tail direction guaranteed not to be parallel to `n`.
fn tail_for(n: &Vec3) -> Vec3 {
    if n.z.abs() < 0.9 {
        Vec3::z()
    } else {
        Vec3::y()
    }
}

#[test]
fn two_point_matches_brute_force_closest_triangle() {
    let skin = shapes::icosphere(Vec3::zeros(), 80.0, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let opts = PlanOptions::default();
    for _ in 0..300 {
        let dir = random_unit(&mut rng);
        let q = dir * rng.random_range(70.0..95.0);
        let plan = free_skin_pose(&skin, &two_point(q, tail_for(&dir)), &opts).unwrap();
        let dists = common::triangle_distances(&skin, &q);
        let (best, point) = dists.iter().copied().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
        assert!((plan.center() - point).norm() < 1e-9);
        // the normal must belong to one of the (possibly tied) nearest triangles
        let ok = dists
            .iter()
            .enumerate()
            .filter(|(_, (d, _))| (d - best).abs() < 1e-9)
            .any(|(id, _)| (common::winding_normal(&skin, id) - plan.normal()).norm() < 1e-9);
        assert!(ok, "normal {:?} is not a nearest-triangle normal", plan.normal());
        let anchor = plan.anchor_triangle.unwrap();
        assert!((common::winding_normal(&skin, anchor) - plan.normal()).norm() < 1e-12);
    }
}

#[test]
fn restricted_cortex_exits_offset_sphere_at_the_quadratic_root() {
    let skin = shapes::icosphere(Vec3::zeros(), 85.0, 5).unwrap();
    let cortex = shapes::icosphere(Vec3::new(10.0, 0.0, 0.0), 70.0, 5).unwrap();
    let input = two_point(Vec3::new(10.0, 0.0, 70.0), Vec3::y());
    let plan = restricted_cortex_pose(&cortex, &skin, &input, &PlanOptions::default()).unwrap();
    let target = plan.cortex_target.unwrap();
    let n = plan.normal();
    // ray-sphere exit from the actual target along the actual normal
    let b = target.dot(&n);
    let t = -b + (b * b - (target.norm_squared() - 85.0 * 85.0)).sqrt();
    let exact = target + n * t;
    assert!((plan.center() - exact).norm() < 0.05, "{:?} vs {exact:?}", plan.center());
    // and, up to the cortex facet tilt (≈ edge / radius), the vertical root
    let ideal = Vec3::new(10.0, 0.0, (85.0f64 * 85.0 - 100.0).sqrt());
    assert!((n - Vec3::z()).norm() < 0.05);
    assert!((plan.center() - ideal).norm() < 1.0);
}

#[test]
fn closest_skin_on_offset_spheres_projects_radially() {
    let skin = shapes::icosphere(Vec3::zeros(), 85.0, 5).unwrap();
    let cortex = shapes::icosphere(Vec3::new(10.0, 0.0, 0.0), 70.0, 5).unwrap();
    let input = two_point(Vec3::new(10.0, 0.0, 70.0), Vec3::y());
    let plan = closest_skin_pose(&cortex, &skin, &input, &PlanOptions::default()).unwrap();
    let target = plan.cortex_target.unwrap();
    let (_, exact) = common::brute_closest(&skin, &target);
    assert!((plan.center() - exact).norm() < 1e-9);
    // flat facets pull the foot point off the radial line by depth × facet tilt
    let radial = target.normalize() * 85.0;
    assert!((plan.center() - radial).norm() < 0.5, "{:?} vs {radial:?}", plan.center());
    assert!((plan.normal() - radial.normalize()).norm() < 0.05);
}

#[test]
fn five_by_five_grid_on_sphere_stays_on_skin_with_even_pitch() {
    let skin = shapes::icosphere(Vec3::zeros(), 85.0, 5).unwrap();
    let seed = free_skin_pose(
        &skin,
        &two_point(Vec3::new(5.0, -3.0, 86.0), Vec3::y()),
        &PlanOptions::default(),
    )
    .unwrap();
    let g = hotspot_grid(&skin, &seed, 5, 5, 10.0).unwrap();
    assert_eq!(g.get(2, 2).unwrap(), &seed);
    for p in &g.poses {
        let (d, _) = common::brute_closest(&skin, &p.center());
        assert!(d < 1e-6, "node {:?} is {d} mm off the skin", p.center());
        assert!(p.pose.orthonormality_error() < 1e-9);
    }
    for r in 0..5 {
        for c in 0..5 {
            let here = g.get(r, c).unwrap().center();
            for (nr, nc) in [(r + 1, c), (r, c + 1)] {
                if let Some(n) = g.get(nr, nc) {
                    let d = (n.center() - here).norm();
                    assert!((d - 10.0).abs() < 0.5, "({r},{c})→({nr},{nc}) pitch {d}");
                }
            }
        }
    }
}

#[test]
fn random_targets_take_the_anchor_triangle_normal() {
    let skin = shapes::ellipsoid(Vec3::zeros(), Vec3::new(72.0, 88.0, 95.0), 4).unwrap();
    let cortex = shapes::ellipsoid(Vec3::new(0.0, 0.0, 5.0), Vec3::new(60.0, 75.0, 80.0), 4).unwrap();
    let reg = StrategyRegistry::with_builtins();
    let scene = PlanningScene::new(&skin, Some(&cortex));
    let opts = PlanOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..1000 {
        let dir = random_unit(&mut rng);
        let q = Vec3::new(dir.x * 72.0, dir.y * 88.0, dir.z * 95.0);
        let name = ["free_skin", "restricted_cortex", "closest_skin"][i % 3];
        let plan = match reg.get(name).unwrap().plan(&scene, &two_point(q, tail_for(&dir)), &opts) {
            Ok(p) => p,
            Err(PlanError::DegenerateTail) => continue,
            Err(e) => panic!("{name}: {e}"),
        };
        let mesh = if name == "restricted_cortex" { &cortex } else { &skin };
        let anchor = plan.anchor_triangle.unwrap();
        assert!((common::winding_normal(mesh, anchor) - plan.normal()).norm() < 1e-9, "{name}");
        assert!(plan.pose.orthonormality_error() < 1e-9);
        assert!(plan.pose.determinant_error() < 1e-9);
    }
}

fn scaled(mesh: &TriangleMesh, s: f64) -> TriangleMesh {
    TriangleMesh::new(mesh.vertices().iter().map(|v| v * s).collect(), mesh.triangles().to_vec()).unwrap()
}

#[test]
fn planning_is_scale_invariant() {
    let skin = shapes::icosphere(Vec3::zeros(), 85.0, 3).unwrap();
    let cortex = shapes::icosphere(Vec3::new(4.0, 2.0, 0.0), 70.0, 3).unwrap();
    let input = two_point(Vec3::new(12.0, 20.0, 66.0), Vec3::new(0.3, 1.0, 0.0));
    let opts = PlanOptions {
        surface_bound_mm: 1e6,
        ..PlanOptions::default()
    };
    let reg = StrategyRegistry::with_builtins();
    for s in [2.0, 0.5, 3.7] {
        let (sk, cx) = (scaled(&skin, s), scaled(&cortex, s));
        let PoseConstraintInput::TwoPoint { center, tail_point } = input else { unreachable!() };
        let sin = PoseConstraintInput::TwoPoint {
            center: center * s,
            tail_point: tail_point * s,
        };
        for strategy in reg.iter() {
            let a = strategy.plan(&PlanningScene::new(&skin, Some(&cortex)), &input, &opts).unwrap();
            let b = strategy.plan(&PlanningScene::new(&sk, Some(&cx)), &sin, &opts).unwrap();
            if s == 2.0 || s == 0.5 {
                // power-of-two scaling is exact in floating point
                assert_eq!(a.pose.rotation, b.pose.rotation, "{} at {s}", strategy.name());
                assert_eq!(a.center() * s, b.center(), "{} at {s}", strategy.name());
            } else {
                assert!((a.pose.rotation - b.pose.rotation).abs().max() < 1e-12, "{} at {s}", strategy.name());
                assert!((a.center() * s - b.center()).norm() < 1e-12 * s * 100.0, "{} at {s}", strategy.name());
            }
            assert_eq!(a.anchor_triangle, b.anchor_triangle);
        }
    }
}

#[test]
fn planning_is_deterministic() {
    let skin = shapes::icosphere(Vec3::zeros(), 85.0, 4).unwrap();
    let cortex = shapes::icosphere(Vec3::zeros(), 70.0, 4).unwrap();
    let reg = StrategyRegistry::with_builtins();
    let input = two_point(Vec3::new(-20.0, 31.0, 58.0), Vec3::new(1.0, 0.0, 0.0));
    for strategy in reg.iter() {
        let scene = PlanningScene::new(&skin, Some(&cortex));
        let a = strategy.plan(&scene, &input, &PlanOptions::default()).unwrap();
        let b = strategy.plan(&scene, &input, &PlanOptions::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

#[test]
fn hotspot_selection_finds_the_node_above_the_sensor() {
    let skin = shapes::flat_patch(80.0, 80.0, 16, 16, 0.0).unwrap();
    let seed = free_skin_pose(&skin, &two_point(Vec3::new(0.0, 0.0, 1.0), Vec3::y()), &PlanOptions::default()).unwrap();
    let g = hotspot_grid(&skin, &seed, 5, 5, 8.0).unwrap();
    let target = g.get(3, 1).unwrap().center();
    // the sensor sits 20 mm under the skin, looking up into the coil
    let sensor = SensorModel {
        kind: SensorKind::Sensor2D,
        pose: RigidTransform::from_translation(target - Vec3::z() * 20.0),
        ..SensorModel::default()
    };
    let train = PulseTrain::default();
    let responses: Vec<f64> = g
        .poses
        .iter()
        .map(|p| {
            let coil = CoilModel {
                pose: p.pose.compose(&approach_flip()),
                ..CoilModel::single_loop(35.0, 128)
            };
            induced_voltage(&coil, &sensor, &train).unwrap().vpp[0]
        })
        .collect();
    let (i, best) = select_hotspot(&g, &responses).unwrap();
    assert_eq!(i, 3 * 5 + 1);
    assert_eq!(best.center(), target);
}
