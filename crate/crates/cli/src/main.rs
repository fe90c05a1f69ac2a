mod commands;
mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use settings::Settings;

#[derive(Parser)]
#[command(name = "fctlab", version, about = "Renormalization fixed points, period-doubling cascades and Cantor attractors")]
struct Cli {
    /// key=value file supplying defaults for any flag (flags take precedence)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for report files [default: .]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for parallel scans [default: available cores]
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Add a `timestamp` field to JSON reports (breaks byte-identical reruns)
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the renormalization fixed-point equation for φ₀
    Fixpoint(FixpointArgs),
    /// Detect the period-doubling cascade of a one-parameter family
    Cascade(CascadeArgs),
    /// Build the nested atoms of the attractor at the accumulation parameter
    Attractor(AttractorArgs),
    /// Check n-dimensional doubling renormalizability of the standard map
    Ndcheck(NdcheckArgs),
    /// Evaluate the manifold chart b, its gradient and the shift identity
    Manifold(ManifoldArgs),
    /// Sample a bifurcation diagram as (t, x) pairs
    Bifdiag(BifdiagArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum FamilyName {
    Logistic,
    Henon,
}

impl std::str::FromStr for FamilyName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Clone)]
pub struct FamilyArgs {
    /// Builtin family [default: logistic]
    #[arg(long, value_enum)]
    family: Option<FamilyName>,
    /// Hénon contraction b [default: 0.3]
    #[arg(long)]
    henon_b: Option<f64>,
}

#[derive(Args)]
pub struct FixpointArgs {
    /// Truncation degree K [default: 40]
    #[arg(long)]
    degree: Option<usize>,
    /// Residual tolerance [default: 1e-8]
    #[arg(long)]
    tol: Option<f64>,
    /// Newton iteration cap [default: 50]
    #[arg(long)]
    max_iters: Option<usize>,
    /// Initial guess as a .coeffs.json file [default: 1 − 1.4x²]
    #[arg(long, value_name = "FILE")]
    initial: Option<PathBuf>,
    /// Also linearize the operator at the fixed point
    #[arg(long)]
    linearize: bool,
}

#[derive(Args)]
pub struct CascadeArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Highest doubling index N [default: 10 logistic, 7 Hénon]
    #[arg(long)]
    nmax: Option<usize>,
}

#[derive(Args)]
pub struct AttractorArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Generations of atoms, at most 12 [default: 8 logistic, 6 Hénon]
    #[arg(long)]
    generations: Option<usize>,
    /// Orbit points [default: 64·2^generations]
    #[arg(long)]
    points: Option<usize>,
    /// Cascade depth used to locate the accumulation parameter [default: 10 logistic, 8 Hénon]
    #[arg(long)]
    nmax: Option<usize>,
    /// Parameter to use instead of the computed accumulation
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
}

#[derive(Args)]
pub struct NdcheckArgs {
    /// Dimension n ≥ 2 of the standard map [default: 2]
    #[arg(long)]
    dim: Option<usize>,
    /// Successive renormalizations to certify [default: 4]
    #[arg(long)]
    levels: Option<usize>,
    /// Sample points per check, at least 1000 [default: 2000]
    #[arg(long)]
    samples: Option<usize>,
    /// Total degree of the polynomial refit [default: 8]
    #[arg(long)]
    degree: Option<u32>,
    /// Check this disk (JSON {center, linear}) instead of searching
    #[arg(long, value_name = "FILE")]
    disk: Option<PathBuf>,
}

#[derive(Args)]
pub struct ManifoldArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Cascade depth, at least 6 [default: 8 logistic, 6 Hénon]
    #[arg(long)]
    depth: Option<usize>,
    /// Central-difference step [default: 1e-3]
    #[arg(long)]
    h: Option<f64>,
    /// Comma-separated shifts for the shift identity [default: -0.05,0.05]
    #[arg(long, allow_hyphen_values = true)]
    shifts: Option<String>,
}

#[derive(Args)]
pub struct BifdiagArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Lower parameter [default: window start]
    #[arg(long, allow_hyphen_values = true)]
    tmin: Option<f64>,
    /// Upper parameter [default: window end]
    #[arg(long, allow_hyphen_values = true)]
    tmax: Option<f64>,
    /// Parameter values [default: 400]
    #[arg(long)]
    steps: Option<usize>,
    /// Iterations discarded per parameter [default: 1000]
    #[arg(long)]
    transient: Option<usize>,
    /// Points recorded per parameter [default: 64]
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(fct_core::Error),
    Io(String),
}

impl From<fct_core::Error> for Failure {
    fn from(e: fct_core::Error) -> Self {
        Failure::Compute(e)
    }
}

/// Where reports go and how JSON is stamped.
pub struct Output {
    dir: PathBuf,
    timestamp: bool,
    written: Vec<PathBuf>,
}

impl Output {
    /// Writes `name.partial` and renames it into place once complete.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Failure::Io(format!("{}: {e}", self.dir.display())))?;
        let path = self.dir.join(name);
        let partial = self.dir.join(format!("{name}.partial"));
        std::fs::write(&partial, contents).map_err(|e| Failure::Io(format!("{}: {e}", partial.display())))?;
        std::fs::rename(&partial, &path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, mut value: Value) -> Result<Value, Failure> {
        if self.timestamp {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            if let Value::Object(m) = &mut value {
                m.insert("timestamp".into(), json!(secs));
            }
        }
        let mut text = serde_json::to_string_pretty(&value).expect("reports serialize");
        text.push('\n');
        self.write(name, &text)?;
        Ok(value)
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn error_json(e: &fct_core::Error) -> Value {
    let mut obj = json!({ "kind": e.kind(), "message": e.to_string() });
    if let fct_core::Error::Cascade { failed_at, completed, .. } = e {
        obj["failed_at"] = json!(failed_at);
        obj["completed"] = json!(completed);
    }
    json!({ "error": obj })
}

fn run(cli: Cli) -> Result<Value, Failure> {
    let text = cli.config.as_deref().map(read_file).transpose()?;
    let settings = Settings::from_file(text.as_deref())?;
    let jobs = settings.value(cli.jobs, "jobs")?;
    if let Some(n) = jobs {
        settings::in_range("jobs", n, 1, 4096)?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(format!("thread pool: {e}")))?;
    }
    let mut out = Output {
        dir: settings.get(cli.out, "out", PathBuf::from("."))?,
        timestamp: settings.flag(cli.timestamp, "timestamp")?,
        written: Vec::new(),
    };
    match cli.command {
        Command::Fixpoint(a) => commands::fixpoint(a, &settings, &mut out),
        Command::Cascade(a) => commands::cascade(a, &settings, &mut out),
        Command::Attractor(a) => commands::attractor(a, &settings, &mut out),
        Command::Ndcheck(a) => commands::ndcheck(a, &settings, &mut out),
        Command::Manifold(a) => commands::manifold(a, &settings, &mut out),
        Command::Bifdiag(a) => commands::bifdiag(a, &settings, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("{}", json!({ "error": { "kind": "io", "message": msg } }));
            ExitCode::from(1)
        }
    }
}
