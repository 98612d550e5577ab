//! Numerical constants from the detection-boundary theorems: cluster-size
//! decay rates, percolation probabilities, the critical point, the
//! thresholds θ* and the γ function.

mod crossing;
mod gamma;
mod origin;
mod thresholds;

pub use crossing::{crossing_probability, crossing_thresholds, estimate_pc, PcEstimate};
pub use gamma::{gamma_function, GammaQuery, GammaSolution};
pub use origin::{estimate_theta_percolation, estimate_zeta, origin_cluster_tail, PercolationEstimate, ZetaEstimate};
pub use thresholds::{theta_star_path, theta_star_path_loc, theta_star_subcritical, PathThreshold, ThetaStar, ZetaConfig};

use crate::error::{Error, Result};
use crate::par::Execution;

pub use origin::MAX_CLUSTER_CAP;

/// Replicate count, seed and execution policy for a Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub reps: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl MonteCarlo {
    pub fn new(reps: usize, seed: u64) -> Self {
        Self { reps, seed, execution: Execution::Auto }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

/// Groups used for delete-one-group jackknife standard errors.
pub(crate) const JACKKNIFE_GROUPS: usize = 20;

/// Site percolation thresholds of `Z^d` used as the sub/supercritical
/// boundary (`d = 1` has `p_c = 1`).
pub fn critical_probability(d: usize) -> Result<f64> {
    Ok(match d {
        1 => 1.0,
        2 => 0.592_746,
        3 => 0.311_6,
        4 => 0.196_9,
        5 => 0.140_8,
        6 => 0.109_0,
        _ => return Err(Error::InvalidParameter(format!("no critical probability tabulated for d = {d}"))),
    })
}

/// Correlation-length exponent, used for finite-size extrapolation.
pub(crate) fn correlation_exponent(d: usize) -> f64 {
    match d {
        2 => 4.0 / 3.0,
        3 => 0.8765,
        4 => 0.68,
        5 => 0.57,
        _ => 0.5,
    }
}

/// Delete-one-group jackknife standard error.
pub(crate) fn jackknife_se(leave_one_out: &[f64]) -> f64 {
    let g = leave_one_out.len() as f64;
    if g < 2.0 {
        return f64::NAN;
    }
    let mean = leave_one_out.iter().sum::<f64>() / g;
    let ss: f64 = leave_one_out.iter().map(|x| (x - mean).powi(2)).sum();
    ((g - 1.0) / g * ss).sqrt()
}
