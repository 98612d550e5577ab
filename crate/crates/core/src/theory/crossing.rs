use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::GridSpec;
use crate::numeric::bisect_predicate;
use crate::rng::{condition_id, stream};
use crate::unionfind::DisjointSets;

use super::{correlation_exponent, jackknife_se, MonteCarlo, JACKKNIFE_GROUPS};

/// The smallest `p` at which each replicate's `m^d` box has an open path
/// between the faces `x_1 = 1` and `x_1 = m`.
///
/// Every node gets a uniform `U_v` and is open at level `p` iff `U_v < p`;
/// nodes are added in increasing `U` until the two faces join, so one pass
/// yields the crossing threshold of the replicate.
pub fn crossing_thresholds(d: usize, m: usize, mc: &MonteCarlo) -> Result<Vec<f64>> {
    let grid = GridSpec::free(d, m)?;
    let cond = condition_id(&format!("crossing:d={d}:m={m}"));
    Ok(mc.execution.map(mc.reps, |r| {
        let mut rng = stream(mc.seed, cond, r as u64);
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_unstable_by(|&a, &b| u[a].total_cmp(&u[b]));
        let n = grid.len();
        let (left, right) = (n, n + 1);
        let mut sets = DisjointSets::new(n + 2);
        let mut open = vec![false; n];
        for v in order {
            open[v] = true;
            let x = grid.axis_offset(v, 0);
            if x == 0 {
                sets.union(v, left);
            }
            if x + 1 == m {
                sets.union(v, right);
            }
            grid.for_each_neighbor(v, |w| {
                if open[w] {
                    sets.union(v, w);
                }
            });
            if sets.same(left, right) {
                return u[v];
            }
        }
        1.0
    }))
}

fn crossing_fraction(sorted: &[f64], p: f64) -> f64 {
    sorted.partition_point(|&x| x < p) as f64 / sorted.len() as f64
}

/// Monte Carlo probability of an open crossing at level `p`.
pub fn crossing_probability(d: usize, m: usize, p: f64, mc: &MonteCarlo) -> Result<f64> {
    let mut t = crossing_thresholds(d, m, mc)?;
    t.sort_unstable_by(f64::total_cmp);
    Ok(crossing_fraction(&t, p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// `(m, p_½(m))`: the level at which the crossing probability reaches ½.
    pub per_size: Vec<(usize, f64)>,
    pub reps: usize,
}

fn half_level(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    bisect_predicate(|p| crossing_fraction(&s, p) >= 0.5, 0.0, 1.0, 1e-10)
}

/// Intercept of the least-squares line through `(x, y)`.
fn intercept(points: &[(f64, f64)]) -> f64 {
    if points.len() == 1 {
        return points[0].1;
    }
    let n = points.len() as f64;
    let xbar = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ybar = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    ybar - sxy / sxx * xbar
}

/// Site percolation threshold of `Z^d` from box crossings.
///
/// For each side in `m_list` the level `p_½(m)` where the crossing
/// probability reaches ½ is found by bisection; the levels are then
/// extrapolated linearly in `m^{−1/ν}` to `m = ∞`.
pub fn estimate_pc(d: usize, m_list: &[usize], mc: &MonteCarlo) -> Result<PcEstimate> {
    if d < 2 {
        return Err(Error::InvalidParameter("p_c estimation needs d ≥ 2".into()));
    }
    let mut sizes = m_list.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() || sizes[0] < 2 || mc.reps < JACKKNIFE_GROUPS {
        return Err(Error::InvalidParameter(format!(
            "need sides ≥ 2 and at least {JACKKNIFE_GROUPS} replicates"
        )));
    }
    let inv_nu = 1.0 / correlation_exponent(d);
    let samples: Vec<Vec<f64>> = sizes.iter().map(|&m| crossing_thresholds(d, m, mc)).collect::<Result<_>>()?;
    let fit = |keep: &dyn Fn(usize) -> bool| -> (f64, Vec<(usize, f64)>) {
        let per: Vec<(usize, f64)> = sizes
            .iter()
            .zip(&samples)
            .map(|(&m, s)| {
                let kept: Vec<f64> = s.iter().enumerate().filter(|(r, _)| keep(*r)).map(|(_, &x)| x).collect();
                (m, half_level(&kept))
            })
            .collect();
        let pts: Vec<(f64, f64)> = per.iter().map(|&(m, y)| ((m as f64).powf(-inv_nu), y)).collect();
        (intercept(&pts), per)
    };
    let (estimate, per_size) = fit(&|_| true);
    let loo: Vec<f64> = (0..JACKKNIFE_GROUPS).map(|g| fit(&|r| r % JACKKNIFE_GROUPS != g).0).collect();
    Ok(PcEstimate { estimate, stderr: jackknife_se(&loo), per_size, reps: mc.reps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deep_phases_cross_or_not() {
        let mc = MonteCarlo::new(200, 5);
        assert!(crossing_probability(2, 64, 0.9, &mc).unwrap() >= 0.99);
        assert!(crossing_probability(2, 64, 0.2, &mc).unwrap() <= 0.01);
    }

    #[test]
    fn one_by_one_box_crosses_when_its_site_opens() {
        let mc = MonteCarlo::new(50, 1);
        let t = crossing_thresholds(2, 1, &mc).unwrap();
        assert!(t.iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn intercept_of_exact_line() {
        assert!((intercept(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]) - 1.0).abs() < 1e-12);
    }
}
