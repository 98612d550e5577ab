//! Monte Carlo experiments: replicate simulation, detector evaluation, risk
//! estimation and CSV output.

mod figures;
mod risk;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detectors::{DetectorSpec, Statistic};
use crate::distributions::FamilySpec;
use crate::error::{Error, Result};
use crate::lattice::GridSpec;
use crate::par::Execution;
use crate::planting::{plant, sample_null, ShapeSpec};
use crate::rng::{condition_id, stream};

pub use figures::{figure_config, Figure, Scale};
pub use risk::{estimate_risk, estimate_risk_brute_force, RiskEstimate};

/// One planted alternative of a panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub shape: ShapeSpec,
    /// Reported x-coordinate (`q` or `θ`).
    pub param2: f64,
    /// Tilt used for planting.
    pub theta: f64,
}

/// A null law, its detectors and the alternatives compared against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    /// Reported curve parameter (`p` or `t`).
    pub param1: Option<f64>,
    pub family: FamilySpec,
    pub detectors: Vec<DetectorSpec>,
    pub alternatives: Vec<Alternative>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub grid: GridSpec,
    pub panels: Vec<Panel>,
    pub null_reps: usize,
    pub alt_reps: usize,
    pub seed: u64,
    /// Also write every per-replicate statistic.
    pub emit_samples: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.null_reps < 2 || self.alt_reps < 2 {
            return Err(Error::InvalidParameter("replicate counts must be at least 2".into()));
        }
        if self.name.is_empty() || self.name.contains([',', '/', '\n']) {
            return Err(Error::InvalidParameter(format!("bad experiment name `{}`", self.name)));
        }
        for panel in &self.panels {
            panel.family.validate(0.0)?;
            for det in &panel.detectors {
                det.validate()?;
            }
            for alt in &panel.alternatives {
                panel.family.validate(alt.theta)?;
            }
        }
        Ok(())
    }
}

/// What a replicate is drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Null,
    Planted { shape: ShapeSpec, theta: f64 },
}

impl Condition {
    fn key(&self) -> String {
        match self {
            Condition::Null => "null".to_string(),
            Condition::Planted { shape, theta } => format!("{shape}|{:016x}", theta.to_bits()),
        }
    }
}

/// A detector value, or the reason it is missing.
pub type Outcome = std::result::Result<Statistic, String>;

/// A batch of replicates of one condition.
#[derive(Debug, Clone, Copy)]
pub struct ReplicateRequest<'a> {
    pub grid: &'a GridSpec,
    pub family: &'a FamilySpec,
    pub detectors: &'a [DetectorSpec],
    /// Distinguishes otherwise identical conditions of different experiments.
    pub label: &'a str,
    pub seed: u64,
    pub reps: usize,
}

/// Simulates `reps` fields of `condition` and evaluates every detector on
/// each. Returns `[detector][replicate]`.
///
/// Replicate `i` draws from the stream `(seed, id(label, condition), i)`, so
/// results do not depend on `execution`.
pub fn run_replicates(req: &ReplicateRequest<'_>, condition: &Condition, execution: Execution) -> Vec<Vec<Outcome>> {
    let cond = condition_id(&format!("{}|{}", req.label, condition.key()));
    let rows: Vec<Vec<Outcome>> = execution.map(req.reps, |i| {
        let mut rng = stream(req.seed, cond, i as u64);
        let field = match condition {
            Condition::Null => sample_null(req.grid, req.family, &mut rng),
            Condition::Planted { shape, theta } => shape
                .resolve(req.grid, &mut rng)
                .and_then(|nodes| plant(req.grid, req.family, *theta, &nodes, &mut rng)),
        };
        match field {
            Ok(field) => req
                .detectors
                .iter()
                .map(|d| d.evaluate(&field, req.family).map(|r| r.statistic).map_err(|e| e.to_string()))
                .collect(),
            Err(e) => vec![Err(e.to_string()); req.detectors.len()],
        }
    });
    (0..req.detectors.len())
        .map(|d| rows.iter().map(|row| row[d].clone()).collect())
        .collect()
}

/// One line of a risk curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskRow {
    pub experiment: String,
    pub detector: String,
    pub shape: String,
    pub param1: Option<f64>,
    pub param2: f64,
    pub replicates: usize,
    pub risk: Option<f64>,
    pub cut: Option<Statistic>,
    /// Missing-replicate summary; empty when none.
    pub errors: String,
}

pub const RISK_HEADER: &str = "experiment,detector,shape,param1,param2,replicates,risk,cut,errors";
pub const SAMPLE_HEADER: &str = "experiment,detector,condition,param1,param2,replicate,value,empty_flag";

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn sanitize(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

impl RiskRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.detector,
            self.shape,
            opt(self.param1),
            self.param2,
            self.replicates,
            opt(self.risk),
            opt(self.cut),
            sanitize(&self.errors)
        )
    }
}

/// A per-replicate statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub experiment: String,
    pub detector: String,
    pub condition: String,
    pub param1: Option<f64>,
    pub param2: Option<f64>,
    pub replicate: usize,
    pub value: Statistic,
}

impl SampleRow {
    pub fn csv(&self) -> String {
        let value = match self.value {
            Statistic::Empty => String::new(),
            Statistic::Value(v) => v.to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.experiment,
            self.detector,
            self.condition,
            opt(self.param1),
            opt(self.param2),
            self.replicate,
            value,
            u8::from(self.value.is_empty())
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<RiskRow>,
    pub samples: Vec<SampleRow>,
}

fn split_outcomes(outcomes: &[Outcome]) -> (Vec<Statistic>, String) {
    let mut ok = Vec::with_capacity(outcomes.len());
    let mut first = None;
    let mut missing = 0;
    for o in outcomes {
        match o {
            Ok(s) => ok.push(*s),
            Err(e) => {
                missing += 1;
                first.get_or_insert_with(|| e.clone());
            }
        }
    }
    let errors = match first {
        None => String::new(),
        Some(e) => format!("{missing} missing: {e}"),
    };
    (ok, errors)
}

/// Runs every panel: the null once per panel, then each alternative, and
/// one risk estimate per (detector, alternative).
pub fn run_experiment(config: &ExperimentConfig, execution: Execution) -> Result<ExperimentOutput> {
    config.validate()?;
    let mut out = ExperimentOutput::default();
    for (index, panel) in config.panels.iter().enumerate() {
        let label = format!("{}|{index}|{}", config.name, panel.family);
        let req = ReplicateRequest {
            grid: &config.grid,
            family: &panel.family,
            detectors: &panel.detectors,
            label: &label,
            seed: config.seed,
            reps: config.null_reps,
        };
        let null = run_replicates(&req, &Condition::Null, execution);
        if config.emit_samples {
            push_samples(&mut out.samples, config, panel, "null", None, &null);
        }
        let alt_req = ReplicateRequest { reps: config.alt_reps, ..req };
        for alt in &panel.alternatives {
            let condition = Condition::Planted { shape: alt.shape.clone(), theta: alt.theta };
            let samples = run_replicates(&alt_req, &condition, execution);
            if config.emit_samples {
                push_samples(&mut out.samples, config, panel, &alt.shape.to_string(), Some(alt.param2), &samples);
            }
            for (d, det) in panel.detectors.iter().enumerate() {
                let (null_ok, null_err) = split_outcomes(&null[d]);
                let (alt_ok, alt_err) = split_outcomes(&samples[d]);
                let errors = [("null", null_err), ("alt", alt_err)]
                    .into_iter()
                    .filter(|(_, e)| !e.is_empty())
                    .map(|(w, e)| format!("{w} {e}"))
                    .collect::<Vec<_>>()
                    .join("; ");
                let estimate = (!null_ok.is_empty() && !alt_ok.is_empty()).then(|| estimate_risk(&null_ok, &alt_ok));
                out.rows.push(RiskRow {
                    experiment: config.name.clone(),
                    detector: det.id().to_string(),
                    shape: alt.shape.to_string(),
                    param1: panel.param1,
                    param2: alt.param2,
                    replicates: config.alt_reps,
                    risk: estimate.map(|e| e.risk),
                    cut: estimate.map(|e| e.cut),
                    errors,
                });
            }
        }
    }
    Ok(out)
}

fn push_samples(
    into: &mut Vec<SampleRow>,
    config: &ExperimentConfig,
    panel: &Panel,
    condition: &str,
    param2: Option<f64>,
    samples: &[Vec<Outcome>],
) {
    for (det, column) in panel.detectors.iter().zip(samples) {
        for (i, o) in column.iter().enumerate() {
            if let Ok(value) = o {
                into.push(SampleRow {
                    experiment: config.name.clone(),
                    detector: det.id().to_string(),
                    condition: condition.to_string(),
                    param1: panel.param1,
                    param2,
                    replicate: i,
                    value: *value,
                });
            }
        }
    }
}

/// Comment lines recording the resolved configuration. The `# generated`
/// line carries a timestamp and is the only line that varies between runs.
pub fn csv_preamble(config: &ExperimentConfig) -> String {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut s = String::new();
    let _ = writeln!(s, "# experiment {}", config.name);
    let _ = writeln!(s, "# seed {}", config.seed);
    let _ = writeln!(s, "# config {}", serde_json::to_string(config).expect("config serializes"));
    let _ = writeln!(s, "# generated unix={stamp}");
    s
}

/// Renders the risk rows of one detector as a CSV document.
pub fn risk_csv(config: &ExperimentConfig, rows: &[RiskRow]) -> String {
    let mut s = csv_preamble(config);
    s.push_str(RISK_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

pub fn samples_csv(config: &ExperimentConfig, rows: &[SampleRow]) -> String {
    let mut s = csv_preamble(config);
    s.push_str(SAMPLE_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

/// Drops comment lines starting with `# generated`, for byte comparisons.
pub fn strip_timestamp(csv: &str) -> String {
    csv.lines()
        .filter(|l| !l.starts_with("# generated"))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Writes `<name>_<detector>.csv` per detector (and `<name>_samples.csv`)
/// into `dir`; returns the paths in a stable order.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, output: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut ids: Vec<&str> = output.rows.iter().map(|r| r.detector.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut paths = Vec::new();
    for id in ids {
        let rows: Vec<RiskRow> = output.rows.iter().filter(|r| r.detector == id).cloned().collect();
        let path = dir.join(format!("{}_{}.csv", config.name, id));
        fs::write(&path, risk_csv(config, &rows))?;
        paths.push(path);
    }
    if config.emit_samples {
        let path = dir.join(format!("{}_samples.csv", config.name));
        fs::write(&path, samples_csv(config, &output.samples))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped;
/// keys are lower-cased with `_` normalized to `-`.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
        let key = k.trim().to_ascii_lowercase().replace('_', "-");
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", n + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}
