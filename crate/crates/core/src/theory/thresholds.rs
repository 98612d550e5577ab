use crate::distributions::FamilySpec;
use crate::error::{Error, Result};
use crate::numeric::bisect;

use super::{critical_probability, estimate_zeta, MonteCarlo};

/// Settings for the ζ estimates behind the `d ≥ 2` thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaConfig {
    pub k_max: usize,
    pub mc: MonteCarlo,
}

/// A detection threshold with an interval; closed forms have a zero-width one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaStar {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ThetaStar {
    fn exact(x: f64) -> Self {
        Self { estimate: x, lower: x, upper: x }
    }
}

/// Smallest tilt whose exceedance probability `P_θ(X > t)` reaches `level`.
fn tilt_for_level(family: &FamilySpec, t: f64, level: f64) -> Result<f64> {
    let p0 = family.survival(0.0, t)?;
    if level <= p0 {
        return Ok(0.0);
    }
    if level >= 1.0 {
        return Err(Error::Domain(format!("exceedance level {level} is not attainable")));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut reached = false;
    for _ in 0..400 {
        match family.survival(hi, t) {
            Ok(s) if s >= level => {
                reached = true;
                break;
            }
            Ok(_) => {
                lo = hi;
                hi *= 2.0;
            }
            Err(_) => hi = 0.5 * (lo + hi),
        }
    }
    if !reached {
        return Err(Error::RootFinding(format!("no tilt reaches P(X > {t}) = {level}")));
    }
    bisect(|th| family.survival(th, t).unwrap_or(1.0) - level, lo, hi, 1e-12, 0.0)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("α = {alpha} outside (0, 1)")));
    }
    Ok(())
}

fn subcritical_level(family: &FamilySpec, t: f64, d: usize) -> Result<f64> {
    let p0 = family.survival(0.0, t)?;
    let pc = critical_probability(d)?;
    if !(p0 > 0.0 && p0 < pc) {
        return Err(Error::Domain(format!("p₀(t) = {p0} is not subcritical (p_c ≈ {pc}, d = {d})")));
    }
    Ok(p0)
}

/// Solves `ζ_{p_θ(t)} = c` for `θ` using Monte Carlo ζ estimates with a fixed
/// seed, so the left side is a deterministic decreasing function of `θ`.
fn solve_zeta_level(family: &FamilySpec, t: f64, d: usize, c: f64, cfg: &ZetaConfig) -> Result<f64> {
    let pc = critical_probability(d)?;
    let cap = tilt_for_level(family, t, 0.98 * pc)?;
    let zeta_at = |theta: f64| -> Result<f64> {
        let p = family.survival(theta, t)?;
        Ok(estimate_zeta(d, p, cfg.k_max, &cfg.mc)?.zeta)
    };
    if zeta_at(0.0)? <= c {
        return Ok(0.0);
    }
    if zeta_at(cap)? > c {
        return Err(Error::RootFinding(format!(
            "ζ stays above {c} up to p_θ(t) = 0.98 p_c; θ* is beyond the reliable subcritical range"
        )));
    }
    let mut failure = None;
    let root = bisect(
        |theta| match zeta_at(theta) {
            Ok(z) => z - c,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        cap,
        1e-4,
        0.0,
    );
    match failure {
        Some(e) => Err(e),
        None => root,
    }
}

/// `θ*(t)` solving `ζ_{p_θ(t)} = α ζ_{p₀(t)}` for a subcritical threshold.
///
/// In `d = 1` this is `p_θ(t) = p₀(t)^α`, solved exactly. For `d ≥ 2` the
/// interval solves the same equation with the right side moved by two
/// combined standard errors.
pub fn theta_star_subcritical(family: &FamilySpec, t: f64, alpha: f64, d: usize, cfg: &ZetaConfig) -> Result<ThetaStar> {
    check_alpha(alpha)?;
    let p0 = subcritical_level(family, t, d)?;
    if d == 1 {
        return Ok(ThetaStar::exact(tilt_for_level(family, t, p0.powf(alpha))?));
    }
    ratio_interval(family, t, d, alpha, cfg)
}

fn ratio_interval(family: &FamilySpec, t: f64, d: usize, ratio: f64, cfg: &ZetaConfig) -> Result<ThetaStar> {
    let p0 = family.survival(0.0, t)?;
    let z0 = estimate_zeta(d, p0, cfg.k_max, &cfg.mc)?;
    let target = ratio * z0.zeta;
    let estimate = solve_zeta_level(family, t, d, target, cfg)?;
    let p_star = family.survival(estimate, t)?;
    let se_star = estimate_zeta(d, p_star, cfg.k_max, &cfg.mc).map(|z| z.stderr).unwrap_or(0.0);
    let se = ((ratio * z0.stderr).powi(2) + se_star.powi(2)).sqrt();
    let lower = solve_zeta_level(family, t, d, target + 2.0 * se, cfg)?;
    let upper = solve_zeta_level(family, t, d, (target - 2.0 * se).max(0.0), cfg).unwrap_or(f64::INFINITY);
    Ok(ThetaStar { estimate, lower: lower.min(estimate), upper: upper.max(estimate) })
}

/// The two LOC thresholds for path detection, `θ*⁻ ≤ θ*⁺`:
/// `d ζ_{p_θ(t)} = α ζ_{p₀(t)}` and `d log(1/p_θ(t)) = α ζ_{p₀(t)}`.
pub fn theta_star_path_loc(
    family: &FamilySpec,
    t: f64,
    alpha: f64,
    d: usize,
    cfg: &ZetaConfig,
) -> Result<(ThetaStar, ThetaStar)> {
    check_alpha(alpha)?;
    let p0 = subcritical_level(family, t, d)?;
    if d == 1 {
        let x = ThetaStar::exact(tilt_for_level(family, t, p0.powf(alpha))?);
        return Ok((x, x));
    }
    let minus = ratio_interval(family, t, d, alpha / d as f64, cfg)?;
    let z0 = estimate_zeta(d, p0, cfg.k_max, &cfg.mc)?;
    let level = |z: f64| (-alpha * z / d as f64).exp();
    let plus = ThetaStar {
        estimate: tilt_for_level(family, t, level(z0.zeta))?,
        lower: tilt_for_level(family, t, level(z0.zeta + 2.0 * z0.stderr))?,
        upper: tilt_for_level(family, t, level((z0.zeta - 2.0 * z0.stderr).max(0.0)))?,
    };
    Ok((minus, plus))
}

/// Scan-test threshold for paths: `Λ*(Λ′(θ)) = log(2d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathThreshold {
    /// Root in the natural (exponential) tilt of `F₀`.
    pub natural_tilt: f64,
    /// `Λ′(θ*)`, the mean of the tilted law.
    pub tilted_mean: f64,
    /// `Λ*(Λ′(θ*)) − log(2d)`.
    pub residual: f64,
}

pub fn theta_star_path(family: &FamilySpec, d: usize) -> Result<PathThreshold> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    let goal = (2.0 * d as f64).ln();
    let h = |th: f64| -> Option<f64> {
        let mean = family.log_mgf_derivative(th).ok()?;
        let v = family.rate_function(mean);
        v.is_finite().then_some(v - goal)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut bracketed = false;
    for _ in 0..400 {
        match h(hi) {
            Some(v) if v >= 0.0 => {
                bracketed = true;
                break;
            }
            Some(_) => {
                lo = hi;
                hi *= 2.0;
            }
            None => hi = 0.5 * (lo + hi),
        }
        if hi > 1e12 {
            break;
        }
    }
    if !bracketed {
        return Err(Error::RootFinding(format!(
            "log(2d) = {goal} is above the range of Λ*∘Λ′ for {family}"
        )));
    }
    let root = bisect(|th| h(th).unwrap_or(f64::INFINITY), lo, hi, 1e-11, 0.0)?;
    let tilted_mean = family.log_mgf_derivative(root)?;
    Ok(PathThreshold { natural_tilt: root, tilted_mean, residual: family.rate_function(tilted_mean) - goal })
}
