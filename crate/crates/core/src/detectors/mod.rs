//! Test statistics: largest open cluster (LOC), simple and GLR hypercube
//! scans, and upper-level-set (ULS) scans at one or all thresholds.

mod scan;
mod uls;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::distributions::FamilySpec;
use crate::error::{Error, Result};
use crate::percolation::{largest_open_cluster, threshold, Field};

pub use scan::{candidate_scan, glr_scan, simple_scan, HypercubeClass, PrefixSums, ScanResult};
pub use uls::{sweep_thresholds, uls_all_thresholds, uls_at_threshold, uls_relative, UlsConfig, UlsMode, UlsOutcome};

/// A detector output. `Empty` means no eligible cluster was found and sorts
/// below every real value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Statistic {
    Empty,
    Value(f64),
}

impl Statistic {
    pub fn value(self) -> Option<f64> {
        match self {
            Statistic::Empty => None,
            Statistic::Value(v) => Some(v),
        }
    }

    pub fn is_empty(self) -> bool {
        matches!(self, Statistic::Empty)
    }

    pub fn max(self, other: Statistic) -> Statistic {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Eq for Statistic {}

impl Ord for Statistic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Statistic::Empty, Statistic::Empty) => Ordering::Equal,
            (Statistic::Empty, _) => Ordering::Less,
            (_, Statistic::Empty) => Ordering::Greater,
            (Statistic::Value(a), Statistic::Value(b)) => a.total_cmp(b),
        }
    }
}

impl PartialOrd for Statistic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Empty => f.write_str("EMPTY"),
            Statistic::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "EMPTY" => Ok(Statistic::Empty),
            other => other
                .parse::<f64>()
                .map(Statistic::Value)
                .map_err(|_| Error::Parse(format!("bad statistic `{other}`"))),
        }
    }
}

/// Which detector to run, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DetectorSpec {
    Loc { t: f64 },
    Scan { side: usize, plug_in: bool },
    Glr { side: usize },
    Uls { t: f64, k_min: usize, plug_in: bool },
    UlsAll { k_min: usize, plug_in: bool },
    UlsRelative { fraction: f64, t: Option<f64>, plug_in: bool },
}

impl DetectorSpec {
    pub fn id(&self) -> &'static str {
        match self {
            DetectorSpec::Loc { .. } => "loc",
            DetectorSpec::Scan { .. } => "scan",
            DetectorSpec::Glr { .. } => "glr",
            DetectorSpec::Uls { .. } => "uls",
            DetectorSpec::UlsAll { .. } => "uls-all",
            DetectorSpec::UlsRelative { .. } => "uls-rel",
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match *self {
            DetectorSpec::Loc { t } | DetectorSpec::Uls { t, .. } => Some(t),
            DetectorSpec::UlsRelative { t, .. } => t,
            _ => None,
        }
    }

    pub fn k_min(&self) -> Option<usize> {
        match *self {
            DetectorSpec::Uls { k_min, .. } | DetectorSpec::UlsAll { k_min, .. } => Some(k_min),
            _ => None,
        }
    }

    /// Checks parameters that do not depend on the field.
    pub fn validate(&self) -> Result<()> {
        match *self {
            DetectorSpec::Scan { side: 0, .. } | DetectorSpec::Glr { side: 0 } => {
                Err(Error::InvalidParameter("scan side must be at least 1".into()))
            }
            DetectorSpec::Uls { k_min: 0, .. } | DetectorSpec::UlsAll { k_min: 0, .. } => {
                Err(Error::InvalidParameter("k_min must be at least 1".into()))
            }
            DetectorSpec::UlsRelative { fraction, .. } if !(fraction > 0.0 && fraction <= 1.0) => {
                Err(Error::InvalidParameter(format!("fraction {fraction} outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, field: &Field, family: &FamilySpec) -> Result<DetectorResult> {
        self.validate()?;
        let start = Instant::now();
        let mut warnings = Vec::new();
        let mut chosen_t = self.threshold();
        let statistic = match *self {
            DetectorSpec::Loc { t } => loc_statistic(field, t),
            DetectorSpec::Scan { side, plug_in } => {
                let class = HypercubeClass::new(field.grid(), side)?;
                let mu0 = if plug_in { None } else { Some(family.null_mean()) };
                Statistic::Value(simple_scan(field, &class, mu0).value)
            }
            DetectorSpec::Glr { side } => {
                let class = HypercubeClass::new(field.grid(), side)?;
                let r = glr_scan(field, &class, family)?;
                if r.clamped {
                    warnings.push("window mean clamped to the support boundary".to_string());
                }
                Statistic::Value(r.value)
            }
            DetectorSpec::Uls { .. } | DetectorSpec::UlsAll { .. } | DetectorSpec::UlsRelative { .. } => {
                let config = UlsConfig::from_spec(self).expect("ULS spec");
                let out = config.run(field, family)?;
                if out.skipped_thresholds > 0 {
                    warnings.push(format!("{} thresholds skipped (σ₀|t = 0)", out.skipped_thresholds));
                }
                if chosen_t.is_none() {
                    chosen_t = out.threshold;
                }
                out.statistic
            }
        };
        Ok(DetectorResult {
            detector: self.id().to_string(),
            statistic,
            t: chosen_t,
            k_min: self.k_min(),
            elapsed: start.elapsed(),
            warnings,
        })
    }
}

fn parse_kv(body: &str) -> Vec<(String, Option<String>)> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| match item.split_once('=') {
            Some((k, v)) => (k.trim().to_ascii_lowercase(), Some(v.trim().to_string())),
            None => (item.trim().to_ascii_lowercase(), None),
        })
        .collect()
}

impl FromStr for DetectorSpec {
    type Err = Error;

    /// `loc:t=0.5`, `scan:side=10[,plugin]`, `glr:side=10`,
    /// `uls:t=0,kmin=5[,plugin]`, `uls-all:kmin=3[,plugin]`,
    /// `uls-rel:fraction=0.1[,t=0][,plugin]`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let kv = parse_kv(body);
        let get = |key: &str| kv.iter().find(|(k, _)| k == key).and_then(|(_, v)| v.clone());
        let flag = |key: &str| kv.iter().any(|(k, v)| k == key && v.as_deref().is_none_or(|v| v == "true" || v == "1"));
        let num = |key: &str| -> Result<Option<f64>> {
            get(key)
                .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("`{key}` is not a number: {v}"))))
                .transpose()
        };
        let int = |key: &str| -> Result<Option<usize>> {
            get(key)
                .map(|v| v.parse::<usize>().map_err(|_| Error::Parse(format!("`{key}` is not an integer: {v}"))))
                .transpose()
        };
        let need = |key: &str, v: Option<f64>| v.ok_or_else(|| Error::Parse(format!("detector `{name}` needs `{key}=`")));
        let need_int = |key: &str, v: Option<usize>| v.ok_or_else(|| Error::Parse(format!("detector `{name}` needs `{key}=`")));
        let plug_in = flag("plugin");
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "loc" => DetectorSpec::Loc { t: need("t", num("t")?)? },
            "scan" => DetectorSpec::Scan { side: need_int("side", int("side")?)?, plug_in },
            "glr" => DetectorSpec::Glr { side: need_int("side", int("side")?)? },
            "uls" => DetectorSpec::Uls {
                t: need("t", num("t")?)?,
                k_min: int("kmin")?.unwrap_or(1),
                plug_in,
            },
            "uls-all" | "uls_all" => DetectorSpec::UlsAll { k_min: int("kmin")?.unwrap_or(1), plug_in },
            "uls-rel" | "uls_rel" | "uls-relative" => DetectorSpec::UlsRelative {
                fraction: need("fraction", num("fraction")?)?,
                t: num("t")?,
                plug_in,
            },
            other => return Err(Error::Parse(format!("unknown detector `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for DetectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let plug = |p: bool| if p { ",plugin" } else { "" };
        match self {
            DetectorSpec::Loc { t } => write!(f, "loc:t={t}"),
            DetectorSpec::Scan { side, plug_in } => write!(f, "scan:side={side}{}", plug(*plug_in)),
            DetectorSpec::Glr { side } => write!(f, "glr:side={side}"),
            DetectorSpec::Uls { t, k_min, plug_in } => write!(f, "uls:t={t},kmin={k_min}{}", plug(*plug_in)),
            DetectorSpec::UlsAll { k_min, plug_in } => write!(f, "uls-all:kmin={k_min}{}", plug(*plug_in)),
            DetectorSpec::UlsRelative { fraction, t, plug_in } => {
                write!(f, "uls-rel:fraction={fraction}")?;
                if let Some(t) = t {
                    write!(f, ",t={t}")?;
                }
                f.write_str(plug(*plug_in))
            }
        }
    }
}

/// A statistic with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorResult {
    pub detector: String,
    pub statistic: Statistic,
    /// Threshold used (or selected, for threshold sweeps).
    pub t: Option<f64>,
    pub k_min: Option<usize>,
    pub elapsed: Duration,
    pub warnings: Vec<String>,
}

impl DetectorResult {
    pub const CSV_HEADER: &'static str = "detector,t,k_min,value,empty_flag,seed";

    /// `detector,t,k_min,value,empty_flag,seed`; absent fields are left blank.
    pub fn csv_row(&self, seed: Option<u64>) -> String {
        let opt = |x: Option<String>| x.unwrap_or_default();
        let value = match self.statistic {
            Statistic::Empty => String::new(),
            Statistic::Value(v) => v.to_string(),
        };
        format!(
            "{},{},{},{},{},{}",
            self.detector,
            opt(self.t.map(|t| t.to_string())),
            opt(self.k_min.map(|k| k.to_string())),
            value,
            u8::from(self.statistic.is_empty()),
            opt(seed.map(|s| s.to_string()))
        )
    }
}

/// `S_m(t)` as a real-valued statistic.
pub fn loc_statistic(field: &Field, t: f64) -> Statistic {
    Statistic::Value(largest_open_cluster(&threshold(field, t)) as f64)
}
