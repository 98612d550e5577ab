use rand::{Rng, RngCore};
use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::lattice::GridSpec;
use crate::percolation::{largest_open_cluster, OpenConfiguration};
use crate::rng::{condition_id, stream};

use super::{critical_probability, jackknife_se, MonteCarlo, JACKKNIFE_GROUPS};

const BITS: u32 = 21;
const OFFSET: u128 = 1 << (BITS - 1);
/// Largest supported cluster cap; keeps packed coordinates in range.
pub const MAX_CLUSTER_CAP: usize = 1 << (BITS - 2);

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The uniform attached to a site of the infinite lattice. A site is open at
/// level `p` iff its uniform is below `p`, so one replicate couples all `p`.
fn site_uniform(base: u64, site: u128) -> f64 {
    let h = splitmix(splitmix(base ^ site as u64) ^ (site >> 64) as u64);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Size of the open cluster of the origin in `Z^d`, revealed lazily from the
/// origin and capped at `cap`.
fn origin_cluster_size(d: usize, p: f64, cap: usize, base: u64) -> usize {
    let origin: u128 = (0..d).map(|a| OFFSET << (BITS * a as u32)).sum();
    if site_uniform(base, origin) >= p {
        return 0;
    }
    let mut seen = FxHashSet::default();
    seen.insert(origin);
    let mut stack = vec![origin];
    let mut size = 1;
    if size >= cap {
        return cap;
    }
    while let Some(v) = stack.pop() {
        for a in 0..d {
            let step = 1u128 << (BITS * a as u32);
            for w in [v + step, v - step] {
                if seen.insert(w) && site_uniform(base, w) < p {
                    size += 1;
                    if size >= cap {
                        return cap;
                    }
                    stack.push(w);
                }
            }
        }
    }
    size
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("p = {p} outside (0, 1]")));
    }
    Ok(())
}

/// Per-jackknife-group histograms of the capped origin cluster size:
/// `hist[g][s]` counts replicates `r ≡ g (mod groups)` with size `s`.
fn group_histograms(d: usize, p: f64, cap: usize, mc: &MonteCarlo) -> Vec<Vec<u64>> {
    let cond = condition_id(&format!("origin-cluster:d={d}"));
    let sizes = mc
        .execution
        .map(mc.reps, |r| origin_cluster_size(d, p, cap, stream(mc.seed, cond, r as u64).next_u64()));
    let mut hist = vec![vec![0u64; cap + 1]; JACKKNIFE_GROUPS];
    for (r, s) in sizes.into_iter().enumerate() {
        hist[r % JACKKNIFE_GROUPS][s] += 1;
    }
    hist
}

/// `n_k = #{replicates with S ≥ k}` for `k = 0..=cap`.
fn survivors(hist: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; hist.len()];
    let mut acc = 0;
    for k in (0..hist.len()).rev() {
        acc += hist[k];
        out[k] = acc;
    }
    out
}

/// Monte Carlo tail `P̂(S ≥ k)` for `k = 0..=k_max` of the origin cluster in
/// `Z^d` at open probability `p`.
pub fn origin_cluster_tail(d: usize, p: f64, k_max: usize, mc: &MonteCarlo) -> Result<Vec<f64>> {
    check_p(p)?;
    if d == 0 || d > 6 || k_max == 0 || k_max > MAX_CLUSTER_CAP {
        return Err(Error::InvalidParameter(format!("need 1 ≤ d ≤ 6 and 1 ≤ k_max ≤ {MAX_CLUSTER_CAP}")));
    }
    let hist = group_histograms(d, p, k_max, mc);
    let mut total = vec![0u64; k_max + 1];
    for h in &hist {
        for (t, c) in total.iter_mut().zip(h) {
            *t += c;
        }
    }
    let n = mc.reps as f64;
    Ok(survivors(&total).into_iter().map(|c| c as f64 / n).collect())
}

/// Estimated subcritical decay rate of the cluster-size tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEstimate {
    pub d: usize,
    pub p: f64,
    pub zeta: f64,
    pub stderr: f64,
    /// Inclusive `k` range of the regression.
    pub k_range: (usize, usize),
    pub samples: usize,
}

/// Minimum survivors at the top of the fitted decade.
pub const MIN_SURVIVORS: u64 = 100;

/// Weighted least-squares slope of `−log P̂(S ≥ k)` against `k`, weights
/// from the delta-method variance `(1 − P)/(nP)`.
fn tail_slope(counts: &[u64], n: f64, k_lo: usize, k_hi: usize) -> f64 {
    let pts: Vec<(f64, f64, f64)> = (k_lo..=k_hi)
        .filter(|&k| counts[k] > 0)
        .map(|k| {
            let prob = counts[k] as f64 / n;
            let w = counts[k] as f64 / (1.0 - prob).max(1.0 / n);
            (k as f64, -prob.ln(), w)
        })
        .collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let kbar = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ybar = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - kbar) * (p.1 - ybar)).sum();
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - kbar).powi(2)).sum();
    sxy / sxx
}

/// `ζ_p = −lim (1/k) log P(S ≥ k)` for site percolation on `Z^d`.
///
/// `d = 1` returns `log(1/p)` without simulation. Otherwise clusters of the
/// origin are grown up to `k_max` sites and the slope of `−log P̂(S ≥ k)` is
/// fitted over the decade `[k_hi/10, k_hi]`, where `k_hi` is the largest
/// `k` with at least [`MIN_SURVIVORS`] survivors. The standard error is a
/// delete-one-group jackknife over 20 replicate groups.
pub fn estimate_zeta(d: usize, p: f64, k_max: usize, mc: &MonteCarlo) -> Result<ZetaEstimate> {
    check_p(p)?;
    if d == 1 {
        if p >= 1.0 {
            return Err(Error::Domain("p = 1 is critical in d = 1".into()));
        }
        return Ok(ZetaEstimate { d, p, zeta: (1.0 / p).ln(), stderr: 0.0, k_range: (0, 0), samples: 0 });
    }
    let pc = critical_probability(d)?;
    if p >= pc {
        return Err(Error::Domain(format!("p = {p} is not below p_c ≈ {pc} for d = {d}")));
    }
    if !(4..=MAX_CLUSTER_CAP).contains(&k_max) {
        return Err(Error::InvalidParameter(format!("k_max must lie in 4..={MAX_CLUSTER_CAP}")));
    }
    let hist = group_histograms(d, p, k_max, mc);
    let mut total = vec![0u64; k_max + 1];
    for h in &hist {
        for (t, c) in total.iter_mut().zip(h) {
            *t += c;
        }
    }
    let counts = survivors(&total);
    let k_hi = (1..=k_max).rev().find(|&k| counts[k] >= MIN_SURVIVORS).unwrap_or(0);
    let k_lo = (k_hi / 10).max(1);
    if k_hi < k_lo + 3 {
        return Err(Error::InsufficientTail(format!(
            "d = {d}, p = {p}: fewer than {MIN_SURVIVORS} of {} replicates reach size 4 (largest survivor count {k_hi}); raise reps",
            mc.reps
        )));
    }
    let n = mc.reps as f64;
    let zeta = tail_slope(&counts, n, k_lo, k_hi);
    let loo: Vec<f64> = hist
        .iter()
        .map(|h| {
            let mut rest = total.clone();
            for (r, c) in rest.iter_mut().zip(h) {
                *r -= c;
            }
            let m = rest.iter().sum::<u64>() as f64;
            tail_slope(&survivors(&rest), m, k_lo, k_hi)
        })
        .collect();
    Ok(ZetaEstimate { d, p, zeta, stderr: jackknife_se(&loo), k_range: (k_lo, k_hi), samples: mc.reps })
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PercolationEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub reps: usize,
}

/// `Θ_p` estimated as the mean of `S_m / m^d` on the `m^d` torus.
pub fn estimate_theta_percolation(d: usize, p: f64, m: usize, mc: &MonteCarlo) -> Result<PercolationEstimate> {
    check_p(p)?;
    let pc = critical_probability(d)?;
    if p <= pc {
        return Err(Error::Domain(format!("p = {p} is not above p_c ≈ {pc} for d = {d}")));
    }
    if mc.reps == 0 {
        return Err(Error::InvalidParameter("need at least one replicate".into()));
    }
    let grid = GridSpec::toroidal(d, m)?;
    let cond = condition_id(&format!("theta:d={d}:m={m}"));
    let n = grid.len() as f64;
    let fractions = mc.execution.map(mc.reps, |r| {
        let mut rng = stream(mc.seed, cond, r as u64);
        let open = (0..grid.len()).map(|_| rng.random::<f64>() < p).collect();
        let config = OpenConfiguration::new(grid.clone(), open).expect("sizes match");
        largest_open_cluster(&config) as f64 / n
    });
    let k = fractions.len() as f64;
    let mean = fractions.iter().sum::<f64>() / k;
    let var = if k > 1.0 { fractions.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    Ok(PercolationEstimate { estimate: mean, stderr: (var / k).sqrt(), reps: mc.reps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_closed_form() {
        let mc = MonteCarlo::new(10, 0);
        for p in [0.3, 0.5, 0.7] {
            assert_eq!(estimate_zeta(1, p, 100, &mc).unwrap().zeta, (1.0 / p).ln());
        }
    }

    #[test]
    fn rejects_supercritical_and_thin_tails() {
        let mc = MonteCarlo::new(50, 0);
        assert!(matches!(estimate_zeta(2, 0.6, 100, &mc), Err(Error::Domain(_))));
        assert!(matches!(estimate_zeta(2, 0.05, 100, &mc), Err(Error::InsufficientTail(_))));
    }

    #[test]
    fn tail_is_monotone_in_p_per_replicate() {
        // the hashed site uniforms couple every p within one replicate
        for r in 0..200u64 {
            let base = splitmix(r);
            let mut last = 0;
            for p in [0.2, 0.3, 0.4, 0.5] {
                let s = origin_cluster_size(2, p, 5000, base);
                assert!(s >= last);
                last = s;
            }
        }
    }

    #[test]
    fn one_dimensional_tail_is_geometric() {
        // P(S ≥ k) = p^k (k(1 − p) + p) in d = 1
        let mc = MonteCarlo::new(40_000, 3);
        let tail = origin_cluster_tail(1, 0.5, 10, &mc).unwrap();
        for k in 1..6 {
            let exact = 0.5f64.powi(k as i32) * (k as f64 * 0.5 + 0.5);
            let se = (exact * (1.0 - exact) / 40_000.0).sqrt();
            assert!((tail[k] - exact).abs() < 4.0 * se, "k={k} {} vs {exact}", tail[k]);
        }
    }

    #[test]
    fn theta_at_one_is_one() {
        let mc = MonteCarlo::new(3, 0);
        let est = estimate_theta_percolation(2, 1.0, 20, &mc).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert!(estimate_theta_percolation(2, 0.5, 20, &mc).is_err());
    }
}
