use crate::distributions::Conditioned;
use crate::error::{Error, Result};
use crate::numeric::golden_min;

/// Inputs of the γ equation: the conditioned alternative law `F_{θ|t}`, the
/// null conditional mean `ν = μ₀|t`, the decay rate `ζ` and `β`.
#[derive(Debug, Clone, Copy)]
pub struct GammaQuery {
    pub law: Conditioned,
    pub nu: f64,
    pub zeta: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSolution {
    pub gamma: f64,
    /// `|L_β(γ) − 1|` at the returned root.
    pub residual: f64,
    /// `β(μ − ν)²`, where `L_β ≤ βζ < 1`.
    pub lower_bracket: f64,
    /// Minimizing `s` of the inner problem at the root.
    pub s_star: f64,
}

/// Upper end of `s` when `ζ = 0`, relative to `β`.
const OPEN_SPAN: f64 = 1e6;
const GRID: usize = 200;

impl GammaQuery {
    fn s_range(&self) -> (f64, f64) {
        let hi = if self.zeta > 0.0 { 1.0 / self.zeta } else { self.beta * OPEN_SPAN };
        (self.beta, hi)
    }

    fn objective(&self, gamma: f64, s: f64) -> f64 {
        s * self.law.rate(self.nu + (gamma / s).sqrt()) + s * self.zeta
    }

    /// `L_β(γ) = inf_{β<s<1/ζ} [s Λ*(ν + √(γ/s)) + sζ]` and its minimizer.
    pub fn inner(&self, gamma: f64) -> (f64, f64) {
        let (lo, hi) = self.s_range();
        let ratio = (hi / lo).ln();
        let grid: Vec<f64> = (0..=GRID).map(|i| lo * (ratio * i as f64 / GRID as f64).exp()).collect();
        let values: Vec<f64> = grid.iter().map(|&s| self.objective(gamma, s)).collect();
        let best = (0..=GRID).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("non-empty grid");
        let a = grid[best.saturating_sub(1)];
        let b = grid[(best + 1).min(GRID)];
        let (s, v) = golden_min(|s| self.objective(gamma, s), a, b, 1e-13);
        if v < values[best] {
            (v, s)
        } else {
            (values[best], grid[best])
        }
    }

    fn validate(&self) -> Result<()> {
        let mu = self.law.mean();
        if !(self.beta > 0.0) || !(self.zeta >= 0.0) || !self.nu.is_finite() {
            return Err(Error::Domain("γ needs β > 0, ζ ≥ 0 and a finite ν".into()));
        }
        if self.zeta > 0.0 && self.beta * self.zeta >= 1.0 {
            return Err(Error::Domain(format!("β = {} is not below 1/ζ = {}", self.beta, 1.0 / self.zeta)));
        }
        if self.zeta == 0.0 && (self.nu - mu).abs() > 1e-9 * (1.0 + mu.abs()) {
            return Err(Error::Domain(format!("ζ = 0 requires ν = μ (got ν = {}, μ = {mu})", self.nu)));
        }
        if self.nu > mu + 1e-12 * (1.0 + mu.abs()) {
            return Err(Error::Domain(format!("ν = {} exceeds the alternative mean {mu}", self.nu)));
        }
        Ok(())
    }
}

/// The unique `γ` with `L_β(γ) = 1`, by bisection on the increasing `L_β`.
pub fn gamma_function(q: &GammaQuery) -> Result<GammaSolution> {
    q.validate()?;
    let l = |g: f64| q.inner(g).0;
    let lower_bracket = q.beta * (q.law.mean() - q.nu).max(0.0).powi(2);
    let mut lo = lower_bracket;
    if l(lo) >= 1.0 {
        return Err(Error::RootFinding(format!("L_β at the lower bracket {lo} is not below 1")));
    }
    let mut hi = (2.0 * lo).max(1.0);
    let mut found = false;
    for _ in 0..200 {
        if l(hi) >= 1.0 {
            found = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !found {
        return Err(Error::RootFinding("L_β stays below 1".into()));
    }
    let mut gamma = 0.5 * (lo + hi);
    for _ in 0..300 {
        gamma = 0.5 * (lo + hi);
        let v = l(gamma);
        if (v - 1.0).abs() < 1e-8 || hi - lo <= 1e-15 * hi {
            break;
        }
        if v < 1.0 {
            lo = gamma;
        } else {
            hi = gamma;
        }
    }
    let (v, s_star) = q.inner(gamma);
    Ok(GammaSolution { gamma, residual: (v - 1.0).abs(), lower_bracket, s_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::FamilySpec;

    fn normal_query(mu: f64, nu: f64, zeta: f64, beta: f64) -> GammaQuery {
        let law = FamilySpec::normal().conditioned(mu, f64::NEG_INFINITY).unwrap();
        GammaQuery { law, nu, zeta, beta }
    }

    #[test]
    fn normal_closed_form() {
        // L_β(γ) = γζ/(D² + 2ζ) when the minimizer is interior
        for zeta in [0.5, 0.1, 0.01] {
            let sol = gamma_function(&normal_query(1.0, 0.0, zeta, 0.2)).unwrap();
            let exact = 1.0 / zeta + 2.0;
            assert!((sol.gamma - exact).abs() < 1e-6 * exact, "{} vs {exact}", sol.gamma);
            assert!(sol.residual < 1e-6);
        }
    }

    #[test]
    fn zero_zeta_at_equal_means() {
        let sol = gamma_function(&normal_query(0.7, 0.7, 0.0, 0.3)).unwrap();
        assert!((sol.gamma - 2.0).abs() < 1e-6);
    }

    #[test]
    fn exceeds_lower_bracket() {
        let q = normal_query(1.5, 0.2, 0.4, 0.5);
        let sol = gamma_function(&q).unwrap();
        assert!(q.inner(sol.lower_bracket).0 <= q.beta * q.zeta + 1e-12);
        assert!(sol.gamma > sol.lower_bracket);
    }

    #[test]
    fn precondition_errors() {
        assert!(gamma_function(&normal_query(1.0, 0.0, 2.0, 0.6)).is_err());
        assert!(gamma_function(&normal_query(1.0, 0.0, 0.0, 0.3)).is_err());
        assert!(gamma_function(&normal_query(1.0, 2.0, 0.1, 0.3)).is_err());
    }
}
