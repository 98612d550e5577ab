//! Built-in experiment configurations for the risk-curve figures.

use std::fmt;
use std::str::FromStr;

use crate::detectors::DetectorSpec;
use crate::distributions::{logit, normal_isf, FamilySpec};
use crate::error::{Error, Result};
use crate::lattice::GridSpec;
use crate::planting::ShapeSpec;

use super::{Alternative, ExperimentConfig, Panel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Scan test, normal model, `θ = j/ℓ`.
    Fig2,
    /// LOC test, Bernoulli site model, `(p, q)` grid.
    Fig3,
    /// Largest-cluster samples at `ℓ = 100` for three values of `p`.
    Fig4,
    /// LOC test in the normal model, `t = Φ̄⁻¹(p)`.
    Fig5,
    /// ULS scan restricted to clusters of at least a tenth of the largest.
    Fig6,
}

/// `Desk` shrinks the grid to `m = 100`, cube sides by 5 and replicate
/// counts by 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Paper,
    Desk,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fig2" => Figure::Fig2,
            "fig3" => Figure::Fig3,
            "fig4" => Figure::Fig4,
            "fig5" => Figure::Fig5,
            "fig6" => Figure::Fig6,
            _ => return Err(Error::Parse(format!("unknown figure `{s}` (fig2..fig6)"))),
        })
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Figure::Fig2 => 2,
            Figure::Fig3 => 3,
            Figure::Fig4 => 4,
            Figure::Fig5 => 5,
            Figure::Fig6 => 6,
        };
        write!(f, "fig{n}")
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            _ => Err(Error::Parse(format!("unknown scale `{s}` (paper, desk)"))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Paper => "paper",
            Scale::Desk => "desk",
        })
    }
}

const PAPER_SIDES: [usize; 3] = [10, 50, 100];
const PERCOLATION_GRID: [f64; 5] = [0.40, 0.50, 0.55, 0.60, 0.70];
const ULS_Q: [f64; 6] = [0.55, 0.60, 0.65, 0.70, 0.80, 0.90];

/// `{0.05, 0.10, …, 0.95}`.
fn twentieths() -> Vec<f64> {
    (1..20).map(|i| i as f64 / 20.0).collect()
}

struct Sizing {
    m: usize,
    side_divisor: usize,
    rep_divisor: usize,
}

impl Sizing {
    fn new(scale: Scale) -> Self {
        match scale {
            Scale::Paper => Self { m: 500, side_divisor: 1, rep_divisor: 1 },
            Scale::Desk => Self { m: 100, side_divisor: 5, rep_divisor: 10 },
        }
    }

    fn side(&self, paper: usize) -> usize {
        (paper / self.side_divisor).max(1)
    }

    fn reps(&self, paper: usize) -> usize {
        (paper / self.rep_divisor).max(2)
    }
}

fn cube(side: usize) -> ShapeSpec {
    ShapeSpec::hypercube(side)
}

/// The built-in configuration behind `figure` at `scale`, with master seed
/// `seed`.
pub fn figure_config(figure: Figure, scale: Scale, seed: u64) -> Result<ExperimentConfig> {
    let z = Sizing::new(scale);
    let grid = GridSpec::free(2, z.m)?;
    let sides: Vec<usize> = PAPER_SIDES.iter().map(|&s| z.side(s)).collect();
    let (panels, reps, emit_samples) = match figure {
        Figure::Fig2 => {
            let panels = sides
                .iter()
                .map(|&side| Panel {
                    param1: None,
                    family: FamilySpec::normal(),
                    detectors: vec![DetectorSpec::Scan { side, plug_in: false }],
                    alternatives: [1, 3, 5, 7, 9]
                        .iter()
                        .map(|&j| {
                            let theta = j as f64 / side as f64;
                            Alternative { shape: cube(side), param2: theta, theta }
                        })
                        .collect(),
                })
                .collect();
            (panels, z.reps(100), false)
        }
        Figure::Fig3 => (bernoulli_panels(&twentieths(), &sides)?, z.reps(1000), false),
        Figure::Fig4 => (bernoulli_panels(&[0.40, 0.55, 0.70], &[z.side(100)])?, z.reps(1000), true),
        Figure::Fig5 => {
            let mut panels = Vec::new();
            for &p in &PERCOLATION_GRID {
                let t = normal_isf(p);
                let alternatives = twentieths()
                    .into_iter()
                    .filter(|&q| q > p + 1e-9)
                    .flat_map(|q| {
                        let theta = t - normal_isf(q);
                        sides.iter().map(move |&s| Alternative { shape: cube(s), param2: theta, theta })
                    })
                    .collect();
                panels.push(Panel {
                    param1: Some(t),
                    family: FamilySpec::normal(),
                    detectors: vec![DetectorSpec::Loc { t }],
                    alternatives,
                });
            }
            (panels, z.reps(1000), false)
        }
        Figure::Fig6 => {
            let mut panels = Vec::new();
            for &p in &PERCOLATION_GRID {
                let t = normal_isf(p);
                let alternatives = ULS_Q
                    .iter()
                    .flat_map(|&q| {
                        let theta = -normal_isf(q);
                        sides.iter().map(move |&s| Alternative { shape: cube(s), param2: theta, theta })
                    })
                    .collect();
                panels.push(Panel {
                    param1: Some(t),
                    family: FamilySpec::normal(),
                    detectors: vec![DetectorSpec::UlsRelative { fraction: 0.1, t: Some(t), plug_in: false }],
                    alternatives,
                });
            }
            (panels, z.reps(200), false)
        }
    };
    Ok(ExperimentConfig {
        name: format!("{figure}-{scale}"),
        grid,
        panels,
        null_reps: reps,
        alt_reps: reps,
        seed,
        emit_samples,
    })
}

/// Site percolation with probability `p` outside and `q > p` inside the
/// cube: `θ₀ = logit p`, `θ = logit q − logit p`, LOC at `t = 1/2`.
fn bernoulli_panels(ps: &[f64], sides: &[usize]) -> Result<Vec<Panel>> {
    ps.iter()
        .map(|&p| {
            let family = FamilySpec::bernoulli_with_p(p)?;
            let alternatives = twentieths()
                .into_iter()
                .filter(|&q| q > p + 1e-9)
                .flat_map(|q| {
                    let theta = logit(q) - logit(p);
                    sides.iter().map(move |&s| Alternative { shape: cube(s), param2: q, theta })
                })
                .collect();
            Ok(Panel { param1: Some(p), family, detectors: vec![DetectorSpec::Loc { t: 0.5 }], alternatives })
        })
        .collect()
}
