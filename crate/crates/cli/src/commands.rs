use std::path::Path;

use tmsnav_core::fieldsim::{
    displacement_sweep, induced_voltage, sensor_under_coil, sweep_from_csv, sweep_to_csv, SensorModel,
};
use tmsnav_core::kinematics::{
    approach_flip, coil_in_head_after_move, desired_coil_in_tracker, pose_error, solve_commanded_end_effector, Frame,
    FrameGraph, KinematicsError, Provenance,
};
use tmsnav_core::pose_plan::{
    hotspot_grid, select_hotspot, PlanPose, PlanningScene, PoseConstraintInput, StrategyRegistry,
};
use tmsnav_core::registration::{
    fiducial_residual_report, pairpoint_register, register_with_icp, PointCloud, RegistrationResult,
};
use tmsnav_core::session_sim::{
    run_alignment_trials, run_holding_session, samples_to_csv, summary_from_csv, summary_to_csv, voltage_svg,
    ActuationLabel, ActuationModel, SessionRecord,
};
use tmsnav_core::{RigidTransform, Vec3};

use crate::config::{read_json, Project, ProjectConfig};
use crate::output::*;
use crate::{ChainArgs, Cli, CliError, Command, HotspotArgs, ModelArg, PlanArgs, RegisterArgs, SessionArgs, SessionKindArg};

/// Runs one command and returns its summary line.
pub fn dispatch(cli: &Cli) -> Result<String, CliError> {
    let project = match &cli.config {
        Some(path) => Project::load(path)?,
        None => Project::from_config(ProjectConfig::default(), Default::default())?,
    };
    let dir = match &cli.out {
        Some(d) => d.clone(),
        None => project.base_dir.join(&project.config.output_dir),
    };
    let mut out = OutputDir::create(dir)?;
    match &cli.command {
        Command::Register(a) => register(&project, a, &mut out),
        Command::Plan(a) => plan(&project, a, &mut out),
        Command::Chain(a) => chain(&project, a, &mut out),
        Command::Hotspot(a) => hotspot(&project, a, &mut out),
        Command::Fieldsim => fieldsim(&project, &mut out),
        Command::Session(a) => session(&project, a, cli.seed, &mut out),
        Command::Report => report(&mut out),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

fn vec3(v: &Vec3) -> String {
    format!("({:.6},{:.6},{:.6})", v.x, v.y, v.z)
}

fn register(p: &Project, a: &RegisterArgs, out: &mut OutputDir) -> Result<String, CliError> {
    let landmarks = p.landmarks()?;
    let result = match &a.cloud {
        Some(path) => {
            let cloud: PointCloud = read_json(path)?;
            register_with_icp(landmarks, p.skin()?, &cloud.points, &p.config.icp)?
        }
        None => pairpoint_register(landmarks, &p.config.thresholds)?,
    };
    let fiducials = fiducial_residual_report(&result, landmarks)?;
    out.json(REGISTRATION_JSON, &result)?;
    out.json(FIDUCIALS_JSON, &fiducials)?;
    let line = format!(
        "register: pairpoint_mm={} icp_mm={} accepted={} wrote {}",
        opt(result.pairpoint_residual_mean),
        opt(result.icp_residual_mean),
        result.accepted,
        out.written()
    );
    if result.accepted {
        Ok(line)
    } else {
        let t = p.config.thresholds;
        Err(CliError::Rejected(format!(
            "{line} (limits pairpoint {} mm, icp {} mm)",
            t.pairpoint_mm, t.icp_mm
        )))
    }
}

fn plan(p: &Project, a: &PlanArgs, out: &mut OutputDir) -> Result<String, CliError> {
    let input: PoseConstraintInput = read_json(&a.constraint)?;
    let registry = StrategyRegistry::with_builtins();
    let strategy = registry.get(&a.strategy).map_err(|e| CliError::Usage(e.to_string()))?;
    let scene = PlanningScene::new(p.skin()?, p.cortex.as_ref());
    let pose = strategy.plan(&scene, &input, &p.config.plan)?;
    out.json(PLAN_JSON, &pose)?;
    Ok(format!(
        "plan: {} center={} normal={} wrote {}",
        strategy.name(),
        vec3(&pose.center()),
        vec3(&pose.normal()),
        out.written()
    ))
}

fn calibration_edge(g: &mut FrameGraph, from: Frame, to: Frame, t: RigidTransform) -> Result<(), CliError> {
    g.insert(from, to, t, Provenance::Calibration).map_err(|e| match e {
        KinematicsError::DuplicateEdge(..) => {
            CliError::Config(format!("{e}; calibration edges come from the project file"))
        }
        e => e.into(),
    })
}

fn chain(p: &Project, a: &ChainArgs, out: &mut OutputDir) -> Result<String, CliError> {
    let plan: PlanPose = read_json(&a.plan)?;
    let mut graph: FrameGraph = read_json(&a.graph)?;
    let cal = p.config.calibration;
    calibration_edge(&mut graph, Frame::E, Frame::Cr, cal.end_effector_to_coil_reference)?;
    calibration_edge(&mut graph, Frame::Cr, Frame::C, cal.coil_reference_to_coil)?;
    if let Some(path) = &a.registration {
        let reg: RegistrationResult = read_json(path)?;
        if !reg.accepted {
            return Err(CliError::Rejected(format!("{} was not accepted", path.display())));
        }
        graph.insert(Frame::Hr, Frame::H, reg.transform, Provenance::Registration)?;
    }
    let commanded = solve_commanded_end_effector(&graph, &plan, &p.config.chain)?;
    let reached = coil_in_head_after_move(&graph, &commanded)?;
    let report = ChainReport {
        commanded_end_effector: commanded,
        desired_coil_in_tracker: desired_coil_in_tracker(&graph, &plan.pose)?,
        coil_in_head: reached,
        error: pose_error(&plan.pose.compose(&approach_flip()), &reached),
    };
    out.json(CHAIN_JSON, &report)?;
    Ok(format!(
        "chain: translation_error_mm={:.3e} rotation_error_rad={:.3e} wrote {}",
        report.error.translation_error_mm,
        report.error.rotation_error_rad,
        out.written()
    ))
}

/// Sensor fixed in the head at the configured depth under `plan`.
fn head_sensor(p: &Project, plan: &PlanPose) -> SensorModel {
    let s = p.config.sensor;
    let coil = p.coil(plan.pose.compose(&approach_flip()));
    SensorModel {
        loop_radius_mm: s.loop_radius_mm,
        turns_per_axis: s.turns_per_axis,
        ..sensor_under_coil(&coil, s.kind, s.standoff_mm)
    }
}

fn hotspot(p: &Project, a: &HotspotArgs, out: &mut OutputDir) -> Result<String, CliError> {
    let seed: PlanPose = read_json(&a.plan)?;
    let grid = hotspot_grid(p.skin()?, &seed, a.rows, a.cols, a.spacing)?;
    let (responses, selected) = if a.simulate {
        let sensor = head_sensor(p, &seed);
        let r = grid
            .poses
            .iter()
            .map(|node| {
                let coil = p.coil(node.pose.compose(&approach_flip()));
                Ok(induced_voltage(&coil, &sensor, &p.config.train)?.vpp[0])
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        let best = select_hotspot(&grid, &r)?.0;
        (Some(r), Some(best))
    } else {
        (None, None)
    };
    let report = HotspotReport {
        grid,
        responses,
        selected,
    };
    out.json(HOTSPOT_JSON, &report)?;
    Ok(format!(
        "hotspot: {}x{} nodes selected={} wrote {}",
        a.rows,
        a.cols,
        selected.map_or_else(|| "-".to_string(), |i| i.to_string()),
        out.written()
    ))
}

fn fieldsim(p: &Project, out: &mut OutputDir) -> Result<String, CliError> {
    let s = p.config.sensor;
    let coil = p.coil(RigidTransform::identity());
    let sensor = SensorModel {
        loop_radius_mm: s.loop_radius_mm,
        turns_per_axis: s.turns_per_axis,
        ..sensor_under_coil(&coil, s.kind, s.standoff_mm)
    };
    let sweep = &p.config.sweep;
    let rows = displacement_sweep(&coil, &sensor, &sweep.direction, &sweep.offsets_mm, &p.config.train)?;
    out.text(SWEEP_CSV, &sweep_to_csv(&rows).map_err(csv_error)?)?;
    let (first, last) = (rows.first(), rows.last());
    Ok(format!(
        "fieldsim: {} offsets primary_vpp {}..{} wrote {}",
        rows.len(),
        opt(first.map(|r| r.primary_vpp)),
        opt(last.map(|r| r.primary_vpp)),
        out.written()
    ))
}

fn session(p: &Project, a: &SessionArgs, seed: u64, out: &mut OutputDir) -> Result<String, CliError> {
    let plan: PlanPose = read_json(&a.plan)?;
    let model = match a.model {
        ModelArg::Robotic => ActuationModel::robotic(seed),
        ModelArg::Manual => ActuationModel::manual(seed),
        ModelArg::Noiseless => ActuationModel::noiseless(ActuationLabel::Robotic, seed),
    };
    let record = match a.kind {
        SessionKindArg::Holding => {
            let sensor = head_sensor(p, &plan);
            run_holding_session(&plan, &model, &p.config.coil, &sensor, &p.config.train)?
        }
        SessionKindArg::Alignment => run_alignment_trials(&plan, &model, a.repetitions)?,
    };
    out.json(SESSION_JSON, &record)?;
    out.text(SESSION_SAMPLES_CSV, &samples_to_csv(&record).map_err(csv_error)?)?;
    out.text(SESSION_SUMMARY_CSV, &summary_to_csv(&record.summary).map_err(csv_error)?)?;
    if let Some(svg) = voltage_svg(&record) {
        out.text(SESSION_SVG, &svg)?;
    }
    let headline = record
        .metric("primary_vpp")
        .or_else(|| record.metric("rotation_error_rad"))
        .expect("every record has a rotation metric");
    Ok(format!(
        "session: {:?} seed={seed} {} mean={:.6} std={:.6} wrote {}",
        record.kind,
        headline.metric,
        headline.mean,
        headline.std,
        out.written()
    )
    .to_lowercase())
}

fn read_if<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<Option<T>, CliError> {
    let p = dir.join(name);
    if p.exists() {
        read_json(&p).map(Some)
    } else {
        Ok(None)
    }
}

fn read_text_if(dir: &Path, name: &str) -> Result<Option<String>, CliError> {
    let p = dir.join(name);
    if !p.exists() {
        return Ok(None);
    }
    std::fs::read_to_string(&p)
        .map(Some)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))
}

fn report(out: &mut OutputDir) -> Result<String, CliError> {
    let dir = out.dir().to_path_buf();
    let csv_input = |name: &str, e: String| CliError::Config(format!("{}: {e}", dir.join(name).display()));
    let session: Option<SessionRecord> = read_if(&dir, SESSION_JSON)?;
    let session_summary = match read_text_if(&dir, SESSION_SUMMARY_CSV)? {
        Some(t) => Some(summary_from_csv(&t).map_err(|e| csv_input(SESSION_SUMMARY_CSV, e.to_string()))?),
        None => session.map(|s| s.summary),
    };
    let sweep = read_text_if(&dir, SWEEP_CSV)?
        .map(|t| sweep_from_csv(&t).map_err(|e| csv_input(SWEEP_CSV, e.to_string())))
        .transpose()?;
    let r = ProjectReport {
        registration: read_if(&dir, REGISTRATION_JSON)?,
        fiducials: read_if(&dir, FIDUCIALS_JSON)?,
        plan: read_if(&dir, PLAN_JSON)?,
        chain_error: read_if::<ChainReport>(&dir, CHAIN_JSON)?.map(|c| c.error),
        hotspot_selected: read_if::<HotspotReport>(&dir, HOTSPOT_JSON)?.and_then(|h| h.selected),
        sweep,
        session_summary,
    };
    out.json(REPORT_JSON, &r)?;
    let present = [
        ("registration", r.registration.is_some()),
        ("fiducials", r.fiducials.is_some()),
        ("plan", r.plan.is_some()),
        ("chain", r.chain_error.is_some()),
        ("hotspot", r.hotspot_selected.is_some()),
        ("sweep", r.sweep.is_some()),
        ("session", r.session_summary.is_some()),
    ]
    .iter()
    .filter(|(_, p)| *p)
    .map(|(n, _)| *n)
    .collect::<Vec<_>>()
    .join(",");
    Ok(format!("report: sections={} wrote {}", if present.is_empty() { "-" } else { &present }, out.written()))
}
