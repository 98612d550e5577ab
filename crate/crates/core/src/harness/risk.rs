use crate::detectors::Statistic;

/// Minimum of type I plus type II error over rejection cuts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub risk: f64,
    /// The test rejects when the statistic is `≥ cut`; `+∞` never rejects.
    pub cut: Statistic,
}

/// `min_c [#{null ≥ c}/n₀ + #{alt < c}/n₁]` over every pooled value `c` and
/// `c = +∞`, by one sweep over the sorted pooled sample.
///
/// Cutting at a pooled value `c` rejects ties; not rejecting them equals
/// cutting at the next larger pooled value, so both tie placements are
/// covered. Empty statistics sort below every real value.
///
/// # Panics
/// If either sample is empty.
pub fn estimate_risk(null: &[Statistic], alt: &[Statistic]) -> RiskEstimate {
    assert!(!null.is_empty() && !alt.is_empty(), "risk needs both samples");
    let (n0, n1) = (null.len() as f64, alt.len() as f64);
    let mut pooled: Vec<(Statistic, bool)> =
        null.iter().map(|&s| (s, false)).chain(alt.iter().map(|&s| (s, true))).collect();
    pooled.sort_unstable_by_key(|a| a.0);

    // cut at +∞: no rejections
    let mut best = RiskEstimate { risk: 1.0, cut: Statistic::Value(f64::INFINITY) };
    let (mut null_below, mut alt_below) = (0usize, 0usize);
    let mut i = 0;
    while i < pooled.len() {
        let c = pooled[i].0;
        let risk = (null.len() - null_below) as f64 / n0 + alt_below as f64 / n1;
        if risk < best.risk {
            best = RiskEstimate { risk, cut: c };
        }
        while i < pooled.len() && pooled[i].0 == c {
            if pooled[i].1 {
                alt_below += 1;
            } else {
                null_below += 1;
            }
            i += 1;
        }
    }
    best.risk = best.risk.clamp(0.0, 1.0);
    best
}

/// The double loop over all candidate cuts, for testing the sweep.
pub fn estimate_risk_brute_force(null: &[Statistic], alt: &[Statistic]) -> f64 {
    let mut cuts: Vec<Statistic> = null.iter().chain(alt).copied().collect();
    cuts.push(Statistic::Value(f64::INFINITY));
    cuts.iter()
        .map(|&c| {
            let fp = null.iter().filter(|&&x| x >= c).count() as f64 / null.len() as f64;
            let fnr = alt.iter().filter(|&&x| x < c).count() as f64 / alt.len() as f64;
            fp + fnr
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(xs: &[f64]) -> Vec<Statistic> {
        xs.iter().map(|&x| Statistic::Value(x)).collect()
    }

    #[test]
    fn identical_samples_have_full_risk() {
        let s = vals(&[0.1, 0.5, 0.9, 1.3]);
        assert!(estimate_risk(&s, &s).risk >= 1.0 - 2.0 / 4.0);
    }

    #[test]
    fn perfect_separation() {
        let r = estimate_risk(&vals(&[0.0; 5]), &vals(&[1.0; 5]));
        assert_eq!(r.risk, 0.0);
        assert_eq!(r.cut, Statistic::Value(1.0));
    }

    #[test]
    fn four_point_example() {
        let r = estimate_risk(&vals(&[0.0, 1.0]), &vals(&[0.5, 2.0]));
        assert_eq!(r.risk, 0.5);
    }

    #[test]
    fn sentinels_sort_lowest() {
        let null = vec![Statistic::Empty, Statistic::Empty, Statistic::Value(-3.0)];
        let alt = vals(&[-1.0, 0.0]);
        let r = estimate_risk(&null, &alt);
        assert_eq!(r.risk, 0.0);
        assert_eq!(estimate_risk_brute_force(&null, &alt), 0.0);
    }
}
