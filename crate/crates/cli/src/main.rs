use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use handtwin_core::model::FingerName;

mod commands;

/// Kinematics, evaluation and teleoperation tools for a 16-DoF tendon-driven
/// hand. Lengths are in meters, angles in radians, forces in newtons.
#[derive(Debug, Parser)]
#[command(name = "handtwin", version)]
struct Cli {
    /// Hand model JSON file, or `default` for the built-in model.
    #[arg(long, global = true, env = "HANDTWIN_MODEL", default_value = "default")]
    model: String,

    /// Write machine-readable results (JSON) to this file.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Seed for every random choice a command makes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the coupling linkage to a DIP-versus-PIP curve.
    FitLinkage(FitLinkageArgs),
    /// Forward kinematics: fingertip positions for a pose.
    Fk(PoseArgs),
    /// Move one fingertip to a target point.
    Ik(IkArgs),
    /// Largest static fingertip force along a direction.
    Force(ForceArgs),
    /// Thumb opposition test over the 11 reference positions.
    Kapandji(KapandjiArgs),
    /// Resolve one pose of the grasp library.
    Grasp(GraspArgs),
    /// Check every pose of a grasp library against the joint limits.
    ValidatePoses(LibraryArgs),
    /// Retarget a recorded landmark stream to joint commands.
    Shadow(ShadowArgs),
    /// Run the websocket control service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct FitLinkageArgs {
    /// CSV with `pip_rad,dip_rad` columns.
    #[arg(long, conflicts_with = "sigmoid", required_unless_present = "sigmoid")]
    target: Option<PathBuf>,
    /// Logistic target `a,b,c,d` for `dip = a / (1 + exp(-b (pip - c))) + d`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    sigmoid: Option<Vec<f64>>,
    /// Samples drawn from the logistic target over `[0, pip-max]`.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// Upper end of the sampled PIP range (rad).
    #[arg(long, default_value_t = 1.75)]
    pip_max: f64,
    /// Crossed-link sum `l1 + l2` (m).
    #[arg(long, default_value_t = 0.05)]
    l_sum: f64,
}

#[derive(Debug, Args)]
struct PoseArgs {
    /// `rest`, `random`, 16 comma-separated angles, or a JSON file holding
    /// an array of 16 angles.
    #[arg(long, default_value = "rest")]
    pose: String,
}

#[derive(Debug, Args)]
struct IkArgs {
    #[arg(long, default_value = "index", value_parser = parse_finger)]
    finger: FingerName,
    /// Target point `x,y,z` in the palm frame (m).
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    target: Vec<f64>,
    /// Starting pose, in the same forms as `--pose`.
    #[arg(long = "from", default_value = "rest")]
    from: String,
    /// Extra random starting poses tried after the first (uses `--seed`).
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Position tolerance (m).
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Initial damping (m).
    #[arg(long, default_value_t = 0.05)]
    damping: f64,
    /// Exit with status 2 if the solve does not converge.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct ForceArgs {
    #[arg(long, default_value = "index", value_parser = parse_finger)]
    finger: FingerName,
    #[command(flatten)]
    pose: PoseArgs,
    /// Force direction `x,y,z` in the palm frame. Defaults to the palmar
    /// normal of the distal segment.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    direction: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct KapandjiArgs {
    /// Target file; defaults to the built-in positions.
    #[arg(long)]
    targets: Option<PathBuf>,
    /// Reachability tolerance (m).
    #[arg(long, default_value_t = handtwin_core::evaluation::DEFAULT_TOLERANCE)]
    tol: f64,
}

#[derive(Debug, Args)]
struct LibraryArgs {
    /// Grasp library file; defaults to the built-in library.
    #[arg(long)]
    library: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GraspArgs {
    /// Taxonomy id, 1 to 33.
    #[arg(long)]
    id: u32,
    #[command(flatten)]
    library: LibraryArgs,
}

#[derive(Debug, Args)]
struct ShadowArgs {
    /// Newline-delimited landmark records, or `-` for standard input.
    #[arg(long)]
    landmarks: PathBuf,
    /// Retargeting settings (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write every command as a serial frame to this path.
    #[arg(long)]
    device: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8765")]
    addr: SocketAddr,
    /// `loopback` or a serial device path.
    #[arg(long, default_value = "loopback")]
    device: String,
    /// Control period (s).
    #[arg(long, default_value_t = 0.02)]
    period: f64,
    /// Per-joint velocity limit (rad/s).
    #[arg(long, default_value_t = 8.0)]
    max_velocity: f64,
    /// State broadcast rate (Hz).
    #[arg(long, default_value_t = 30.0)]
    broadcast_hz: f64,
    /// Retargeting settings (JSON) for shadow mode.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    library: LibraryArgs,
}

fn parse_finger(s: &str) -> Result<FingerName, String> {
    FingerName::ALL
        .into_iter()
        .find(|f| f.as_str() == s)
        .ok_or_else(|| format!("unknown finger `{s}` (thumb, index, middle, ring, little)"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
