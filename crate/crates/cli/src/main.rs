use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand, ValueEnum};

use percoscan::detectors::DetectorResult;
use percoscan::harness::{
    self, figure_config, run_experiment, write_outputs, Alternative, ExperimentConfig, Figure, Panel, Scale,
};
use percoscan::io::{encode_field, load_field, save_field};
use percoscan::planting::{plant, sample_null};
use percoscan::rng::{condition_id, fnv1a, stream};
use percoscan::theory::{
    estimate_pc, estimate_theta_percolation, estimate_zeta, gamma_function, theta_star_path, theta_star_subcritical,
    GammaQuery, MonteCarlo, ZetaConfig,
};
use percoscan::{Boundary, DetectorSpec, Error, Execution, FamilyKind, FamilySpec, GridSpec, ShapeSpec};

/// Percolation-based cluster detection on lattices.
///
/// Every flag can also be given in a `--config` file as `key = value`
/// (flag name without the leading dashes). Flags on the command line win.
#[derive(Parser, Debug)]
#[command(name = "percoscan", version, args_override_self = true)]
struct Cli {
    /// Worker threads; 1 runs sequentially. Results do not depend on it.
    #[arg(long, global = true, env = "PERCOSCAN_THREADS")]
    threads: Option<usize>,

    /// Flat `key = value` file supplying defaults for flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a null or planted field and write it in the binary field format.
    Simulate(SimulateArgs),
    /// Evaluate one detector on a field file.
    Detect(DetectArgs),
    /// Monte Carlo risk of detectors against planted alternatives.
    Risk(RiskArgs),
    /// Estimate a percolation or detection constant.
    EstimateConstant(ConstantArgs),
    /// Run a built-in figure experiment.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    #[arg(long, default_value = "normal")]
    family: FamilyKind,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta0: f64,
}

impl FamilyArgs {
    fn spec(&self) -> percoscan::Result<FamilySpec> {
        FamilySpec::new(self.family, self.theta0)
    }
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value = "free")]
    boundary: Boundary,
}

impl GridArgs {
    fn spec(&self) -> percoscan::Result<GridSpec> {
        GridSpec::new(self.d, self.m, self.boundary)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    family: FamilyArgs,
    /// Tilt inside the planted shape.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta: f64,
    /// Planted shape, e.g. `hypercube:10`, `hypercube:10@center`, `straight:50:1`, `saw:20`.
    #[arg(long)]
    shape: Option<ShapeSpec>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "field.pcsf")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[arg(long)]
    field: PathBuf,
    /// Boundary mode the field is interpreted with.
    #[arg(long, default_value = "free")]
    boundary: Boundary,
    /// Detector spec, e.g. `loc:t=0.5`, `scan:side=10`, `uls:t=0,kmin=5`.
    #[arg(long)]
    detector: DetectorSpec,
    #[command(flatten)]
    family: FamilyArgs,
    /// Seed recorded in the CSV row.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the CSV row to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RiskArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    family: FamilyArgs,
    /// Detector specs, separated by `;`.
    #[arg(long, value_delimiter = ';', required = true)]
    detector: Vec<DetectorSpec>,
    /// Planted shapes, separated by `;`.
    #[arg(long, value_delimiter = ';', required = true)]
    shape: Vec<ShapeSpec>,
    /// Tilts, separated by `,`.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    theta: Vec<f64>,
    /// Value reported in the param1 column.
    #[arg(long, allow_negative_numbers = true)]
    param1: Option<f64>,
    #[arg(long, default_value_t = 100)]
    null_reps: usize,
    #[arg(long, default_value_t = 100)]
    alt_reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "risk")]
    name: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write per-replicate statistics.
    #[arg(long)]
    emit_samples: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Constant {
    /// Exponential decay rate of the origin cluster size.
    Zeta,
    /// Critical probability from finite-size crossing.
    Pc,
    /// Probability that the origin lies in the giant cluster.
    ThetaPercolation,
    /// Growth constant of the ULS detection boundary.
    Gamma,
    /// Subcritical LOC threshold tilt.
    ThetaStar,
    /// Scan threshold tilt for paths.
    ThetaStarPath,
}

#[derive(Args, Debug)]
struct ConstantArgs {
    #[arg(long)]
    constant: Constant,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Open probability.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    k_max: usize,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Side lengths for the crossing estimate.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    m_list: Vec<usize>,
    /// Side length of the torus for the giant-cluster estimate.
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[command(flatten)]
    family: FamilyArgs,
    /// Threshold `t`.
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    /// Tilt of the conditioned alternative law.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Decay rate for `gamma`; estimated at `p₀(t)` when absent.
    #[arg(long)]
    zeta: Option<f64>,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    #[arg(long)]
    figure: Figure,
    #[arg(long, default_value = "desk")]
    scale: Scale,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 2012)]
    seed: u64,
    /// Override both replicate counts.
    #[arg(long)]
    reps: Option<usize>,
}

/// Exit statuses.
const USAGE: u8 = 2;
const INPUT: u8 = 3;
const RUNTIME: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidGrid(_)
            | Error::IndexOutOfRange { .. }
            | Error::CoordinateOutOfRange { .. }
            | Error::Domain(_)
            | Error::InvalidParameter(_)
            | Error::EmptyConditioning { .. }
            | Error::ShapeOutOfBounds(_) => USAGE,
            Error::Format(_) | Error::Parse(_) | Error::Io(_) => INPUT,
            Error::RestartBudgetExhausted { .. } | Error::InsufficientTail(_) | Error::RootFinding(_) => RUNTIME,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: USAGE, message: message.into() }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let args = match with_config_defaults(args) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Splices `--key value` pairs from the `--config` file in right after the
/// subcommand name, so that flags given later on the command line override
/// them.
fn with_config_defaults(mut args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    let mut sub = None;
    let mut i = 1;
    while i < strs.len() {
        let a = &strs[i];
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = strs.get(i + 1).cloned();
            i += 1;
        } else if a == "--threads" {
            i += 1;
        } else if sub.is_none() && !a.starts_with('-') {
            sub = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(sub)) = (path, sub) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure { code: INPUT, message: format!("{path}: {e}") })?;
    let pairs = harness::parse_key_values(&text).map_err(|e| Failure { code: INPUT, message: format!("{path}: {e}") })?;
    let root = Cli::command();
    let command = root.find_subcommand(&strs[sub]).ok_or_else(|| usage(format!("unknown subcommand `{}`", strs[sub])))?;
    let mut injected = Vec::new();
    for (key, value) in pairs {
        let arg = command
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| usage(format!("{path}: unknown key `{key}` for `{}`", strs[sub])))?;
        if key == "config" {
            return Err(usage(format!("{path}: nested config files are not supported")));
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" | "yes" | "1" => injected.push(OsString::from(format!("--{key}"))),
                "false" | "no" | "0" => {}
                _ => return Err(usage(format!("{path}: `{key}` expects true or false"))),
            }
        } else {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }
    let tail = args.split_off(sub + 1);
    args.extend(injected);
    args.extend(tail);
    Ok(args)
}

fn run(cli: Cli) -> Outcome {
    if cli.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    let exec = Execution::with_threads(cli.threads);
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Detect(a) => detect(a),
        Command::Risk(a) => risk(a, exec),
        Command::EstimateConstant(a) => estimate_constant(a, exec),
        Command::Reproduce(a) => reproduce(a, exec),
    }
}

fn simulate(a: SimulateArgs) -> Outcome {
    let grid = a.grid.spec()?;
    let family = a.family.spec()?;
    let label = format!("simulate|{}|{}", a.shape.as_ref().map(ToString::to_string).unwrap_or_default(), a.theta);
    let mut rng = stream(a.seed, condition_id(&label), 0);
    let field = match &a.shape {
        None if a.theta != 0.0 => return Err(usage("--theta needs --shape")),
        None => sample_null(&grid, &family, &mut rng)?,
        Some(shape) => {
            let nodes = shape.resolve(&grid, &mut rng)?;
            plant(&grid, &family, a.theta, &nodes, &mut rng)?
        }
    };
    save_field(&a.out, &field)?;
    println!("# seed {}", a.seed);
    println!(
        "# config d={} m={} boundary={} family={} theta={} shape={}",
        grid.dim(),
        grid.side(),
        grid.boundary(),
        family,
        a.theta,
        a.shape.map(|s| s.to_string()).unwrap_or_else(|| "none".into())
    );
    println!("nodes {}", field.len());
    println!("checksum {:016x}", fnv1a(&encode_field(&field)));
    println!("wrote {}", a.out.display());
    Ok(())
}

fn detect(a: DetectArgs) -> Outcome {
    let field = load_field(&a.field, a.boundary)
        .map_err(|e| Failure { code: INPUT, message: format!("{}: {e}", a.field.display()) })?;
    let family = a.family.spec()?;
    let result: DetectorResult = a.detector.evaluate(&field, &family)?;
    println!("{} {}", result.detector, result.statistic);
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let row = result.csv_row(Some(a.seed));
    println!("{}", DetectorResult::CSV_HEADER);
    println!("{row}");
    if let Some(out) = a.out {
        let text = format!(
            "# seed {}\n# config field={} detector={} family={}\n{}\n{row}\n",
            a.seed,
            a.field.display(),
            a.detector,
            family,
            DetectorResult::CSV_HEADER
        );
        std::fs::write(&out, text).map_err(Error::from)?;
    }
    Ok(())
}

fn report_outputs(config: &ExperimentConfig, out: &Path, exec: Execution) -> Outcome {
    let output = run_experiment(config, exec)?;
    let paths = write_outputs(out, config, &output)?;
    let failed = output.rows.iter().filter(|r| !r.errors.is_empty()).count();
    println!("# seed {}", config.seed);
    println!("experiment {} rows {} with-errors {}", config.name, output.rows.len(), failed);
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn risk(a: RiskArgs, exec: Execution) -> Outcome {
    let grid = a.grid.spec()?;
    let family = a.family.spec()?;
    let alternatives = a
        .shape
        .iter()
        .flat_map(|s| a.theta.iter().map(move |&theta| Alternative { shape: s.clone(), param2: theta, theta }))
        .collect();
    let config = ExperimentConfig {
        name: a.name,
        grid,
        panels: vec![Panel { param1: a.param1, family, detectors: a.detector, alternatives }],
        null_reps: a.null_reps,
        alt_reps: a.alt_reps,
        seed: a.seed,
        emit_samples: a.emit_samples,
    };
    report_outputs(&config, &a.out, exec)
}

fn reproduce(a: ReproduceArgs, exec: Execution) -> Outcome {
    let mut config = figure_config(a.figure, a.scale, a.seed)?;
    if let Some(r) = a.reps {
        config.null_reps = r;
        config.alt_reps = r;
    }
    report_outputs(&config, &a.out, exec)
}

struct ConstantRow {
    params: String,
    estimate: f64,
    stderr: Option<f64>,
    reps: Option<usize>,
}

fn need<T>(x: Option<T>, flag: &str) -> Result<T, Failure> {
    x.ok_or_else(|| usage(format!("--{flag} is required for this constant")))
}

fn estimate_constant(a: ConstantArgs, exec: Execution) -> Outcome {
    let mc = MonteCarlo::new(a.reps, a.seed).with_execution(exec);
    let name = a.constant.to_possible_value().expect("no skipped variants").get_name().to_string();
    let row = match a.constant {
        Constant::Zeta => {
            let p = need(a.p, "p")?;
            let z = estimate_zeta(a.d, p, a.k_max, &mc)?;
            ConstantRow {
                params: format!("p={p};k={}..{}", z.k_range.0, z.k_range.1),
                estimate: z.zeta,
                stderr: Some(z.stderr),
                reps: Some(z.samples),
            }
        }
        Constant::Pc => {
            let e = estimate_pc(a.d, &a.m_list, &mc)?;
            let sizes: Vec<String> = a.m_list.iter().map(ToString::to_string).collect();
            ConstantRow {
                params: format!("m={}", sizes.join(" ")),
                estimate: e.estimate,
                stderr: Some(e.stderr),
                reps: Some(e.reps),
            }
        }
        Constant::ThetaPercolation => {
            let p = need(a.p, "p")?;
            let e = estimate_theta_percolation(a.d, p, a.m, &mc)?;
            ConstantRow { params: format!("p={p};m={}", a.m), estimate: e.estimate, stderr: Some(e.stderr), reps: Some(e.reps) }
        }
        Constant::Gamma => {
            let family = a.family.spec()?;
            let t = need(a.t, "t")?;
            let zeta = match a.zeta {
                Some(z) => z,
                None => estimate_zeta(a.d, family.survival(0.0, t)?, a.k_max, &mc)?.zeta,
            };
            let q = GammaQuery {
                law: family.conditioned(a.theta, t)?,
                nu: family.conditioned(0.0, t)?.mean(),
                zeta,
                beta: a.beta,
            };
            let g = gamma_function(&q)?;
            ConstantRow {
                params: format!("family={family};t={t};theta={};beta={};zeta={zeta}", a.theta, a.beta),
                estimate: g.gamma,
                stderr: None,
                reps: None,
            }
        }
        Constant::ThetaStar => {
            let family = a.family.spec()?;
            let t = need(a.t, "t")?;
            let cfg = ZetaConfig { k_max: a.k_max, mc };
            let th = theta_star_subcritical(&family, t, a.alpha, a.d, &cfg)?;
            ConstantRow {
                params: format!("family={family};t={t};alpha={};lower={};upper={}", a.alpha, th.lower, th.upper),
                estimate: th.estimate,
                stderr: None,
                reps: (a.d > 1).then_some(a.reps),
            }
        }
        Constant::ThetaStarPath => {
            let family = a.family.spec()?;
            let th = theta_star_path(&family, a.d)?;
            ConstantRow {
                params: format!("family={family};tilted_mean={}", th.tilted_mean),
                estimate: th.natural_tilt,
                stderr: None,
                reps: None,
            }
        }
    };
    let mut s = String::new();
    let _ = writeln!(s, "# seed {}", a.seed);
    let _ = writeln!(s, "constant,d,p_or_params,estimate,stderr,reps");
    let _ = writeln!(
        s,
        "{name},{},{},{},{},{}",
        a.d,
        row.params.replace(',', ";"),
        row.estimate,
        row.stderr.map(|x| x.to_string()).unwrap_or_default(),
        row.reps.map(|x| x.to_string()).unwrap_or_default()
    );
    print!("{s}");
    Ok(())
}
