use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, Context};
use handtwin_control::device::send_command;
use handtwin_control::{serve_ws, ControlConfig, ControlCore, ControlError, Device, LoopbackDevice, SerialDevice};
use handtwin_core::evaluation::{
    emit_evaluation_report, run_kapandji, validate_grasp_library, EvaluationReport, GraspLibrary, KapandjiFile,
    KapandjiOptions,
};
use handtwin_core::kinematics::{
    forward_kinematics, inverse_kinematics, max_fingertip_force, ForceLimit, IkOptions, IkSolution,
};
use handtwin_core::linkage::{synthesize_linkage, SigmoidParams, TrajectoryTable};
use handtwin_core::model::{load_hand_model, resolve_full_state, FingerName, HandModel, JointState, ACTUATED_COUNT};
use handtwin_core::retarget::{read_landmark_stream, RetargetConfig, Retargeter};
use handtwin_core::Execution;
use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::{Cli, Command};

/// A failed command and the exit status it maps to.
pub enum Failure {
    /// Bad input: unreadable or invalid files, arguments out of range.
    Invalid(anyhow::Error),
    /// The inputs were fine but the work did not succeed.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Invalid(e) | Failure::Runtime(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Invalid(e)
    }
}

impl From<handtwin_core::Error> for Failure {
    fn from(e: handtwin_core::Error) -> Self {
        Failure::Invalid(e.into())
    }
}

impl From<ControlError> for Failure {
    fn from(e: ControlError) -> Self {
        match e {
            ControlError::Io(_) => Failure::Runtime(e.into()),
            other => Failure::Invalid(other.into()),
        }
    }
}

type CmdResult = Result<(), Failure>;

pub fn run(cli: Cli) -> CmdResult {
    let model = load_model(&cli.model)?;
    let mut ctx = Ctx { model, output: cli.output, rng: ChaCha8Rng::seed_from_u64(cli.seed) };
    match cli.command {
        Command::FitLinkage(a) => fit_linkage(&ctx, a),
        Command::Fk(a) => fk(&mut ctx, a),
        Command::Ik(a) => ik(&mut ctx, a),
        Command::Force(a) => force(&mut ctx, a),
        Command::Kapandji(a) => kapandji(&ctx, a),
        Command::Grasp(a) => grasp(&ctx, a),
        Command::ValidatePoses(a) => validate_poses(&ctx, a),
        Command::Shadow(a) => shadow(&ctx, a),
        Command::Serve(a) => serve(ctx, a),
    }
}

struct Ctx {
    model: HandModel,
    output: Option<std::path::PathBuf>,
    rng: ChaCha8Rng,
}

impl Ctx {
    fn write_json<T: Serialize>(&self, value: &T) -> CmdResult {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.into()))?;
        text.push('\n');
        self.write_text(&text)
    }

    fn write_text(&self, text: &str) -> CmdResult {
        if let Some(path) = &self.output {
            std::fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))
                .map_err(Failure::Runtime)?;
        }
        Ok(())
    }

    fn pose(&mut self, spec: &str) -> Result<JointState, Failure> {
        let q: Vec<f64> = match spec {
            "rest" => self.model.zero_pose().to_vec(),
            "random" => (0..ACTUATED_COUNT)
                .map(|c| {
                    let [lo, hi] = self.model.channel_joint(c).limits;
                    self.rng.random_range(lo..=hi)
                })
                .collect(),
            s if s.contains(',') => s
                .split(',')
                .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad angle `{v}`")))
                .collect::<anyhow::Result<_>>()?,
            path => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading pose file {path}"))?;
                serde_json::from_str(&text).with_context(|| format!("pose file {path} must hold 16 angles"))?
            }
        };
        self.model.validate_actuated(&q)?;
        Ok(resolve_full_state(&self.model, &q)?)
    }
}

fn load_model(spec: &str) -> Result<HandModel, Failure> {
    if spec == "default" {
        return Ok(HandModel::default_model());
    }
    Ok(load_hand_model(spec)?)
}

fn load_library(path: Option<&Path>) -> Result<GraspLibrary, Failure> {
    Ok(match path {
        Some(p) => GraspLibrary::load(p)?,
        None => GraspLibrary::default_library(),
    })
}

fn load_retarget_config(path: Option<&Path>, model: &HandModel) -> Result<RetargetConfig, Failure> {
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => RetargetConfig::default(),
    };
    cfg.validate(Some(model))?;
    Ok(cfg)
}

fn vec3(v: &[f64], what: &str) -> Result<Vector3<f64>, Failure> {
    match v {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(Failure::Invalid(anyhow!("{what} needs three finite numbers"))),
    }
}

fn fmt_point(p: &[f64; 3]) -> String {
    format!("({:.6}, {:.6}, {:.6}) m", p[0], p[1], p[2])
}

fn fit_linkage(ctx: &Ctx, a: crate::FitLinkageArgs) -> CmdResult {
    let table = match (&a.target, &a.sigmoid) {
        (Some(path), _) => TrajectoryTable::from_csv_path(path)?,
        (None, Some(s)) => {
            let &[sa, sb, sc, sd] = s.as_slice() else {
                return Err(Failure::Invalid(anyhow!("--sigmoid needs four numbers a,b,c,d")));
            };
            if a.samples < 2 || !(a.pip_max > 0.0) {
                return Err(Failure::Invalid(anyhow!("need at least 2 samples over a positive PIP range")));
            }
            let params = SigmoidParams { a: sa, b: sb, c: sc, d: sd };
            let pip = (0..a.samples).map(|i| a.pip_max * i as f64 / (a.samples - 1) as f64);
            TrajectoryTable::from_sigmoid(params, pip)?
        }
        (None, None) => unreachable!("clap requires one target"),
    };
    let fit = synthesize_linkage(&table, a.l_sum)?;
    println!("samples: {}", table.len());
    println!("k = {:.9}", fit.k);
    println!("l1 = {:.6} m, l2 = {:.6} m", fit.l1, fit.l2);
    println!("RMS = {:.3e} rad", fit.rms);
    ctx.write_json(&fit)
}

fn fk(ctx: &mut Ctx, a: crate::PoseArgs) -> CmdResult {
    let state = ctx.pose(&a.pose)?;
    let tips = forward_kinematics(&ctx.model, &state).tips().tips;
    for f in FingerName::ALL {
        println!("{:<6} tip {}", f.as_str(), fmt_point(&tips[f.index()]));
    }
    let by_name: serde_json::Map<String, serde_json::Value> =
        FingerName::ALL.iter().map(|f| (f.as_str().to_string(), json!(tips[f.index()]))).collect();
    ctx.write_json(&json!({
        "actuated": state.actuated(),
        "full": state.full(),
        "tips": by_name,
    }))
}

fn ik(ctx: &mut Ctx, a: crate::IkArgs) -> CmdResult {
    let target = Point3::from(vec3(&a.target, "--target")?);
    let opts = IkOptions { damping: a.damping, max_iters: a.max_iters, tol: a.tol };
    let mut seeds = vec![ctx.pose(&a.from)?];
    for _ in 0..a.restarts {
        seeds.push(ctx.pose("random")?);
    }
    let mut best: Option<(usize, IkSolution)> = None;
    for (i, seed) in seeds.iter().enumerate() {
        let sol = inverse_kinematics(&ctx.model, a.finger, target, seed, &opts)?;
        if best.as_ref().map_or(true, |(_, b)| sol.residual < b.residual) {
            best = Some((i, sol));
        }
        if best.as_ref().is_some_and(|(_, b)| b.converged) {
            break;
        }
    }
    let (start, sol) = best.expect("at least one seed");
    println!(
        "{} {} after {} iterations (start {}), residual {:.3e} m",
        a.finger.as_str(),
        if sol.converged { "converged" } else { "did not converge" },
        sol.iterations,
        start,
        sol.residual
    );
    for c in ctx.model.finger_channels(a.finger) {
        println!("  {:<16} {:+.6} rad", ctx.model.channel_joint(c).id, sol.state.actuated()[c]);
    }
    ctx.write_json(&json!({
        "finger": a.finger,
        "target": [target.x, target.y, target.z],
        "converged": sol.converged,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "start": start,
        "actuated": sol.state.actuated(),
        "full": sol.state.full(),
    }))?;
    if a.strict && !sol.converged {
        return Err(Failure::Runtime(anyhow!(
            "IK did not converge: residual {:.3e} m > tolerance {:.3e} m",
            sol.residual,
            a.tol
        )));
    }
    Ok(())
}

fn force(ctx: &mut Ctx, a: crate::ForceArgs) -> CmdResult {
    let state = ctx.pose(&a.pose.pose)?;
    let frames = forward_kinematics(&ctx.model, &state);
    let dir = match &a.direction {
        Some(d) => vec3(d, "--direction")?,
        None => {
            let distal = frames.finger(a.finger).segments.last().expect("fingers have segments");
            distal.rotation * -Vector3::z()
        }
    };
    if dir.norm() == 0.0 {
        return Err(Failure::Invalid(anyhow!("--direction must be non-zero")));
    }
    let dir = dir.normalize();
    let limit = max_fingertip_force(&ctx.model, &state, a.finger, &dir)?;
    let channels = ctx.model.finger_channels(a.finger);
    let (force, joint) = match limit {
        ForceLimit::Bounded { force, limiting_joint } => {
            let id = ctx.model.channel_joint(channels[limiting_joint]).id.clone();
            println!("{} fingertip force limit: {force:.4} N (limited by {id})", a.finger.as_str());
            (Some(force), Some(id))
        }
        ForceLimit::Unbounded => {
            println!("{} fingertip force: unbounded along this direction", a.finger.as_str());
            (None, None)
        }
    };
    println!("direction ({:.4}, {:.4}, {:.4})", dir.x, dir.y, dir.z);
    ctx.write_json(&json!({
        "finger": a.finger,
        "direction": [dir.x, dir.y, dir.z],
        "force_n": force,
        "limiting_joint": joint,
        "actuated": state.actuated(),
    }))
}

fn kapandji(ctx: &Ctx, a: crate::KapandjiArgs) -> CmdResult {
    let file = match &a.targets {
        Some(p) => KapandjiFile::load(p)?,
        None => KapandjiFile::default_targets(),
    };
    let opts = KapandjiOptions { tol: a.tol, ..KapandjiOptions::default() };
    let report = run_kapandji(&ctx.model, &file.targets, &opts, Execution::default())?;
    println!("Kapandji score: {}/{} (tolerance {} m)", report.score, report.total, report.tolerance);
    for p in &report.positions {
        println!(
            "  {:>2} {:<34} {:<11} residual {:.4} m",
            p.index,
            p.label,
            if p.reachable { "reached" } else { "not reached" },
            p.residual
        );
    }
    if !report.unreachable.is_empty() {
        let list: Vec<String> = report.unreachable.iter().map(|i| i.to_string()).collect();
        println!("unreachable positions: {}", list.join(", "));
    }
    ctx.write_text(&emit_evaluation_report(&[EvaluationReport::Kapandji(report)])?)
}

fn grasp(ctx: &Ctx, a: crate::GraspArgs) -> CmdResult {
    let lib = load_library(a.library.library.as_deref())?;
    let pose = lib.pose(a.id).ok_or_else(|| Failure::Invalid(anyhow!("the library has no grasp with id {}", a.id)))?;
    let report = validate_grasp_library(&ctx.model, std::slice::from_ref(pose), Execution::Sequential)?;
    let verdict = &report.poses[0];
    println!("grasp {} ({}): {}", verdict.id, verdict.name, if verdict.valid { "valid" } else { "INVALID" });
    for (c, v) in pose.actuated.iter().enumerate() {
        println!("  {:<16} {:+.4} rad", ctx.model.channel_joint(c).id, v);
    }
    for f in FingerName::ALL {
        println!("  {:<6} tip {}", f.as_str(), fmt_point(&verdict.tips[f.index()]));
    }
    ctx.write_json(verdict)?;
    if !verdict.valid {
        return Err(Failure::Invalid(anyhow!("{} joint limit violation(s)", verdict.violations.len())));
    }
    Ok(())
}

fn validate_poses(ctx: &Ctx, a: crate::LibraryArgs) -> CmdResult {
    let lib = load_library(a.library.as_deref())?;
    let report = validate_grasp_library(&ctx.model, &lib.poses, Execution::default())?;
    println!("{}/{} poses within joint limits", report.valid_count, report.total);
    for v in report.poses.iter().filter(|v| !v.valid) {
        for x in &v.violations {
            println!(
                "  grasp {} ({}): {} = {:.4} rad outside [{:.4}, {:.4}] rad",
                v.id, v.name, x.joint, x.value, x.limits[0], x.limits[1]
            );
        }
    }
    let invalid = report.total - report.valid_count;
    ctx.write_text(&emit_evaluation_report(&[EvaluationReport::Grasp(report)])?)?;
    if invalid > 0 {
        return Err(Failure::Invalid(anyhow!("{invalid} pose(s) violate joint limits")));
    }
    Ok(())
}

#[derive(Serialize)]
struct ShadowFrame {
    timestamp: f64,
    actuated: [f64; ACTUATED_COUNT],
}

fn shadow(ctx: &Ctx, a: crate::ShadowArgs) -> CmdResult {
    let cfg = load_retarget_config(a.config.as_deref(), &ctx.model)?;
    let frames = if a.landmarks.as_os_str() == "-" {
        read_landmark_stream(std::io::stdin().lock())?
    } else {
        let file = File::open(&a.landmarks).with_context(|| format!("opening {}", a.landmarks.display()))?;
        read_landmark_stream(BufReader::new(file))?
    };
    let mut device = match &a.device {
        Some(p) => Some(SerialDevice::open(p)?),
        None => None,
    };
    let mut rt = Retargeter::new(&ctx.model, cfg, ctx.model.zero_pose())?;
    let mut out = Vec::with_capacity(frames.len());
    let mut incomplete = 0;
    for f in &frames {
        if !handtwin_core::retarget::landmarks_to_human_angles(f).is_complete() {
            incomplete += 1;
        }
        if let Some(q) = rt.push(&ctx.model, f) {
            if let Some(dev) = device.as_mut() {
                send_command(dev as &mut dyn Device, &ctx.model, &q)?;
            }
            out.push(ShadowFrame { timestamp: f.timestamp, actuated: q });
        }
    }
    println!(
        "{} landmark frames, {} commands, {} dropped as stale, {} with missing angles",
        frames.len(),
        out.len(),
        rt.dropped(),
        incomplete
    );
    ctx.write_json(&json!({
        "frames": out,
        "dropped": rt.dropped(),
        "incomplete": incomplete,
    }))
}

fn serve(ctx: Ctx, a: crate::ServeArgs) -> CmdResult {
    let cfg = ControlConfig { period: a.period, max_velocity: a.max_velocity, broadcast_hz: a.broadcast_hz };
    cfg.validate()?;
    let retarget = load_retarget_config(a.config.as_deref(), &ctx.model)?;
    let library = load_library(a.library.library.as_deref())?;
    let device: Box<dyn Device> =
        if a.device == "loopback" { Box::new(LoopbackDevice::new()) } else { Box::new(SerialDevice::open(&a.device)?) };
    let core = ControlCore::new(ctx.model, library, cfg, retarget, device)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Runtime(e.into()))?;
    runtime.block_on(async {
        let server = serve_ws(a.addr, core).await.map_err(|e| Failure::Runtime(e.into()))?;
        println!("listening on ws://{} (device: {}); Ctrl-C stops", server.local_addr(), a.device);
        tokio::signal::ctrl_c().await.map_err(|e| Failure::Runtime(e.into()))?;
        server.shutdown().await;
        Ok(())
    })
}
