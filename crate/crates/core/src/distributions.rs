//! One-parameter exponential families: sampling, survival probabilities,
//! truncated moments, log-MGF and rate function.
//!
//! A family is a [`FamilySpec`] (kind plus base parameter `θ₀`); individual
//! distributions within it are addressed by a tilt `θ ≥ 0`, with `θ = 0`
//! giving the null distribution `F₀`:
//!
//! | kind            | `F_θ`                          |
//! |-----------------|--------------------------------|
//! | bernoulli       | `Ber(logit⁻¹(θ₀ + θ))`         |
//! | poisson         | `Poi(θ₀ + θ)`                  |
//! | exponential     | `Exp(θ₀ − θ)` (rate)           |
//! | normal          | `N(θ₀ + θ, 1)`                 |
//! | beta_uniform    | `Beta(θ₀ + θ + 1, 1)`, `θ₀ = 0` |
//!
//! Open sets use the strict inequality `X > t` throughout.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, DiscreteCDF, Normal, Poisson as PoissonDist};

use crate::error::{Error, Result};
use crate::numeric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Bernoulli,
    Poisson,
    Exponential,
    NormalLocation,
    BetaUniform,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Bernoulli => "bernoulli",
            FamilyKind::Poisson => "poisson",
            FamilyKind::Exponential => "exponential",
            FamilyKind::NormalLocation => "normal",
            FamilyKind::BetaUniform => "beta_uniform",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "bernoulli" | "ber" => FamilyKind::Bernoulli,
            "poisson" | "poi" => FamilyKind::Poisson,
            "exponential" | "exp" => FamilyKind::Exponential,
            "normal" | "normal_location" | "gaussian" => FamilyKind::NormalLocation,
            "beta" | "beta_uniform" | "uniform" => FamilyKind::BetaUniform,
            other => return Err(Error::Parse(format!("unknown family `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub theta0: f64,
}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// `P(Z > x)` for a standard normal `Z`.
pub fn normal_sf(x: f64) -> f64 {
    standard_normal().sf(x)
}

/// `ln P(Z > x)`, accurate far into the upper tail.
pub fn ln_normal_sf(x: f64) -> f64 {
    if x < 30.0 {
        normal_sf(x).ln()
    } else {
        let x2 = x * x;
        -0.5 * x2 - (x * (2.0 * PI).sqrt()).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

#[cfg(test)]
fn normal_pdf(x: f64) -> f64 {
    use statrs::distribution::Continuous;
    standard_normal().pdf(x)
}

/// `Φ̄⁻¹(p)`: the `t` with `P(Z > t) = p`.
pub fn normal_isf(p: f64) -> f64 {
    -standard_normal().inverse_cdf(p)
}

/// Mills ratio `φ(a) / Φ̄(a)`.
fn inverse_mills(a: f64) -> f64 {
    (-0.5 * a * a - 0.5 * (2.0 * PI).ln() - ln_normal_sf(a)).exp()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Draws from one fixed member of a family.
#[derive(Debug, Clone, Copy)]
pub enum Sampler {
    Bernoulli(f64),
    Poisson(Poisson<f64>),
    Exponential(Exp<f64>),
    Normal(f64),
    Beta(f64),
}

impl Sampler {
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Bernoulli(p) => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Sampler::Poisson(d) => d.sample(rng),
            Sampler::Exponential(d) => d.sample(rng),
            Sampler::Normal(mu) => {
                let z: f64 = StandardNormal.sample(rng);
                mu + z
            }
            // inverse CDF of Beta(a, 1) on U ∈ (0, 1]
            Sampler::Beta(a) => {
                let u = 1.0 - rng.random::<f64>();
                if *a == 1.0 {
                    u
                } else {
                    u.powf(1.0 / a)
                }
            }
        }
    }
}

impl FamilySpec {
    pub fn new(kind: FamilyKind, theta0: f64) -> Result<Self> {
        let spec = Self { kind, theta0 };
        spec.validate(0.0)?;
        Ok(spec)
    }

    pub fn normal() -> Self {
        Self { kind: FamilyKind::NormalLocation, theta0: 0.0 }
    }

    pub fn uniform() -> Self {
        Self { kind: FamilyKind::BetaUniform, theta0: 0.0 }
    }

    /// Bernoulli family whose null has open probability `p`.
    pub fn bernoulli_with_p(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("bernoulli p = {p} outside (0, 1)")));
        }
        Self::new(FamilyKind::Bernoulli, logit(p))
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, FamilyKind::Bernoulli | FamilyKind::Poisson)
    }

    /// A threshold strictly between `v` and the next attained value below it,
    /// so that `X > just_below(v)` ⟺ `X ≥ v` for attained values.
    pub fn just_below(&self, v: f64) -> f64 {
        if self.is_discrete() {
            v - 0.5
        } else {
            v
        }
    }

    /// Checks that tilt `theta` addresses a valid member.
    pub fn validate(&self, theta: f64) -> Result<()> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(Error::Domain(format!("tilt θ = {theta} must be finite and ≥ 0")));
        }
        if !self.theta0.is_finite() {
            return Err(Error::Domain(format!("θ₀ = {} must be finite", self.theta0)));
        }
        let eta = self.theta0 + theta;
        match self.kind {
            FamilyKind::Poisson if eta <= 0.0 => {
                Err(Error::Domain(format!("poisson mean θ₀ + θ = {eta} must be positive")))
            }
            FamilyKind::Exponential if self.theta0 - theta <= 0.0 => Err(Error::Domain(format!(
                "exponential rate θ₀ − θ = {} must be positive",
                self.theta0 - theta
            ))),
            FamilyKind::BetaUniform if self.theta0 != 0.0 => {
                Err(Error::Domain("beta_uniform requires θ₀ = 0 (F₀ = Unif(0,1))".into()))
            }
            _ => Ok(()),
        }
    }

    /// The scalar parameter of `F_θ` in the family's own terms: `p`, `λ`,
    /// rate, mean or first beta shape.
    fn param(&self, theta: f64) -> f64 {
        match self.kind {
            FamilyKind::Bernoulli => logistic(self.theta0 + theta),
            FamilyKind::Poisson | FamilyKind::NormalLocation => self.theta0 + theta,
            FamilyKind::Exponential => self.theta0 - theta,
            FamilyKind::BetaUniform => self.theta0 + theta + 1.0,
        }
    }

    pub fn sampler(&self, theta: f64) -> Result<Sampler> {
        self.validate(theta)?;
        let q = self.param(theta);
        Ok(match self.kind {
            FamilyKind::Bernoulli => Sampler::Bernoulli(q),
            FamilyKind::Poisson => {
                Sampler::Poisson(Poisson::new(q).map_err(|e| Error::Domain(format!("poisson: {e}")))?)
            }
            FamilyKind::Exponential => {
                Sampler::Exponential(Exp::new(q).map_err(|e| Error::Domain(format!("exponential: {e}")))?)
            }
            FamilyKind::NormalLocation => Sampler::Normal(q),
            FamilyKind::BetaUniform => Sampler::Beta(q),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<f64> {
        Ok(self.sampler(theta)?.draw(rng))
    }

    /// `p_θ(t) = P_θ(X > t)`.
    pub fn survival(&self, theta: f64, t: f64) -> Result<f64> {
        self.validate(theta)?;
        Ok(self.survival_unchecked(theta, t))
    }

    fn survival_unchecked(&self, theta: f64, t: f64) -> f64 {
        let q = self.param(theta);
        match self.kind {
            FamilyKind::Bernoulli => {
                if t < 0.0 {
                    1.0
                } else if t < 1.0 {
                    q
                } else {
                    0.0
                }
            }
            FamilyKind::Poisson => poisson_tail_ge(q, min_count_above(t)),
            FamilyKind::Exponential => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-q * t).exp()
                }
            }
            FamilyKind::NormalLocation => normal_sf(t - q),
            FamilyKind::BetaUniform => {
                if t <= 0.0 {
                    1.0
                } else if t >= 1.0 {
                    0.0
                } else {
                    1.0 - t.powf(q)
                }
            }
        }
    }

    /// Smallest `t` with `survival(θ, t) ≤ p`.
    pub fn inverse_survival(&self, theta: f64, p: f64) -> Result<f64> {
        self.validate(theta)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
        }
        let q = self.param(theta);
        Ok(match self.kind {
            FamilyKind::Bernoulli => {
                if p >= q {
                    0.0
                } else {
                    1.0
                }
            }
            FamilyKind::Poisson => {
                let mut k = 0u64;
                while poisson_tail_ge(q, k + 1) > p {
                    k += 1;
                }
                k as f64
            }
            FamilyKind::Exponential => -p.ln() / q,
            FamilyKind::NormalLocation => q + normal_isf(p),
            FamilyKind::BetaUniform => (1.0 - p).powf(1.0 / q),
        })
    }

    /// Mean and variance of `F_θ`.
    pub fn moments(&self, theta: f64) -> Result<(f64, f64)> {
        self.validate(theta)?;
        let q = self.param(theta);
        Ok(match self.kind {
            FamilyKind::Bernoulli => (q, q * (1.0 - q)),
            FamilyKind::Poisson => (q, q),
            FamilyKind::Exponential => (1.0 / q, 1.0 / (q * q)),
            FamilyKind::NormalLocation => (q, 1.0),
            FamilyKind::BetaUniform => (q / (q + 1.0), q / ((q + 1.0).powi(2) * (q + 2.0))),
        })
    }

    /// Mean of `F₀`.
    pub fn null_mean(&self) -> f64 {
        self.moments(0.0).map(|m| m.0).unwrap_or(f64::NAN)
    }

    /// Mean and variance of `X | X > t` under `F_θ`.
    pub fn truncated_moments(&self, theta: f64, t: f64) -> Result<(f64, f64)> {
        self.validate(theta)?;
        if self.survival_unchecked(theta, t) <= 0.0 {
            return Err(Error::EmptyConditioning { t });
        }
        let q = self.param(theta);
        let out = match self.kind {
            FamilyKind::Bernoulli => {
                if t < 0.0 {
                    (q, q * (1.0 - q))
                } else {
                    (1.0, 0.0)
                }
            }
            FamilyKind::Poisson => {
                let k = min_count_above(t);
                let tail = poisson_tail_ge(q, k);
                let first = q * poisson_tail_ge(q, k.saturating_sub(1)) / tail;
                let factorial2 = q * q * poisson_tail_ge(q, k.saturating_sub(2)) / tail;
                (first, (factorial2 + first - first * first).max(0.0))
            }
            FamilyKind::Exponential => (t.max(0.0) + 1.0 / q, 1.0 / (q * q)),
            FamilyKind::NormalLocation if t == f64::NEG_INFINITY => (q, 1.0),
            FamilyKind::NormalLocation => {
                let a = t - q;
                let lam = inverse_mills(a);
                (q + lam, (1.0 + a * lam - lam * lam).max(0.0))
            }
            FamilyKind::BetaUniform => {
                if t <= 0.0 {
                    (q / (q + 1.0), q / ((q + 1.0).powi(2) * (q + 2.0)))
                } else {
                    let tail = 1.0 - t.powf(q);
                    let m1 = q / (q + 1.0) * (1.0 - t.powf(q + 1.0)) / tail;
                    let m2 = q / (q + 2.0) * (1.0 - t.powf(q + 2.0)) / tail;
                    (m1, (m2 - m1 * m1).max(0.0))
                }
            }
        };
        Ok(out)
    }

    /// The conditional law `F_{θ|t}` of `X | X > t` (`t = −∞` for `F_θ` itself).
    pub fn conditioned(&self, theta: f64, t: f64) -> Result<Conditioned> {
        let (mean, variance) = self.truncated_moments(theta, t)?;
        Ok(Conditioned { family: *self, param: self.param(theta), t, mean, variance })
    }

    fn null(&self) -> Conditioned {
        self.conditioned(0.0, f64::NEG_INFINITY)
            .expect("validated family has a proper null distribution")
    }

    /// `Λ(θ) = log E₀ e^{θX}`; `+∞` outside the MGF domain.
    pub fn log_mgf(&self, theta: f64) -> Result<f64> {
        self.validate(0.0)?;
        let v = self.null().log_mgf(theta);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("θ = {theta} outside the MGF domain of {}", self.kind)))
        }
    }

    /// `Λ′(θ)`, the mean of the exponentially tilted null distribution.
    pub fn log_mgf_derivative(&self, theta: f64) -> Result<f64> {
        self.validate(0.0)?;
        let f0 = self.null();
        let q = f0.param;
        Ok(match self.kind {
            FamilyKind::NormalLocation => q + theta,
            FamilyKind::Bernoulli => logistic(logit(q) + theta),
            FamilyKind::Poisson => q * theta.exp(),
            FamilyKind::Exponential => {
                if theta >= q {
                    return Err(Error::Domain(format!("θ = {theta} ≥ rate {q}")));
                }
                1.0 / (q - theta)
            }
            FamilyKind::BetaUniform => {
                if theta.abs() < 1e-4 {
                    0.5 + theta / 12.0 - theta.powi(3) / 720.0
                } else {
                    1.0 / (1.0 - (-theta).exp()) - 1.0 / theta
                }
            }
        })
    }

    /// Rate function of `F₀`: `Λ*(x) = sup_{θ ≥ 0} [θx − Λ(θ)]`, zero for `x ≤ μ₀`.
    pub fn rate_function(&self, x: f64) -> f64 {
        self.null().rate(x)
    }

    /// Legendre transform of `Λ` over all real `θ` (both tails).
    pub fn rate_function_two_sided(&self, x: f64) -> f64 {
        self.null().rate_two_sided(x)
    }

    /// Closure of the support of `F₀`.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            FamilyKind::Bernoulli | FamilyKind::BetaUniform => (0.0, 1.0),
            FamilyKind::Poisson | FamilyKind::Exponential => (0.0, f64::INFINITY),
            FamilyKind::NormalLocation => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(θ₀={})", self.kind, self.theta0)
    }
}

/// Smallest integer count `k ≥ 0` with `k > t`.
fn min_count_above(t: f64) -> u64 {
    if t < 0.0 {
        0
    } else {
        t.floor() as u64 + 1
    }
}

/// `P(Poi(λ) ≥ k)`.
fn poisson_tail_ge(lambda: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    PoissonDist::new(lambda).map(|d| d.sf(k - 1)).unwrap_or(f64::NAN)
}

/// A family member conditioned on `X > t`, viewed through its log-MGF.
#[derive(Debug, Clone, Copy)]
pub struct Conditioned {
    family: FamilySpec,
    param: f64,
    t: f64,
    mean: f64,
    variance: f64,
}

impl Conditioned {
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn threshold(&self) -> f64 {
        self.t
    }

    pub fn is_point_mass(&self) -> bool {
        self.variance <= 0.0
    }

    /// Upper end of the support.
    pub fn support_max(&self) -> f64 {
        match self.family.kind {
            FamilyKind::Bernoulli | FamilyKind::BetaUniform => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// Upper end of the MGF domain.
    fn mgf_domain(&self) -> f64 {
        match self.family.kind {
            FamilyKind::Exponential => self.param,
            _ => f64::INFINITY,
        }
    }

    /// `log E[e^{sX} | X > t]`.
    pub fn log_mgf(&self, s: f64) -> f64 {
        let q = self.param;
        let t = self.t;
        match self.family.kind {
            FamilyKind::NormalLocation => {
                if t == f64::NEG_INFINITY {
                    s * q + 0.5 * s * s
                } else {
                    s * q + 0.5 * s * s + ln_normal_sf(t - q - s) - ln_normal_sf(t - q)
                }
            }
            FamilyKind::Exponential => {
                if s >= q {
                    f64::INFINITY
                } else {
                    s * t.max(0.0) - (1.0 - s / q).ln()
                }
            }
            FamilyKind::Poisson => {
                let k = min_count_above(t);
                let tilted = q * s.exp();
                q * (s.exp() - 1.0) + poisson_tail_ge(tilted, k).ln() - poisson_tail_ge(q, k).ln()
            }
            FamilyKind::Bernoulli => {
                if t < 0.0 {
                    // log(1 − p + p e^s), stable for large |s|
                    if s > 0.0 {
                        s + ((1.0 - q) * (-s).exp() + q).ln()
                    } else {
                        (1.0 - q + q * s.exp()).ln()
                    }
                } else {
                    s
                }
            }
            FamilyKind::BetaUniform => {
                let lo = t.max(0.0);
                if lo == 0.0 && q == 1.0 {
                    if s.abs() < 1e-8 {
                        return 0.5 * s;
                    }
                    // log((e^s − 1)/s)
                    return if s > 0.0 {
                        s + (-(-s).exp_m1() / s).ln()
                    } else {
                        (s.exp_m1() / s).ln()
                    };
                }
                // ∫_lo^1 a x^{a−1} e^{s(x−1)} dx, rescaled by e^{s}
                let integral = numeric::integrate(
                    |x| if x <= 0.0 { 0.0 } else { q * x.powf(q - 1.0) * (s * (x - 1.0)).exp() },
                    lo,
                    1.0,
                    1e-12,
                );
                s + integral.ln() - (1.0 - lo.powf(q)).ln()
            }
        }
    }

    /// One-sided rate function: 0 at or below the mean, `sup_{s≥0}[sx − Λ(s)]` above.
    pub fn rate(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= self.mean {
            return 0.0;
        }
        self.rate_upper(x)
    }

    /// Legendre transform over all real `s`.
    pub fn rate_two_sided(&self, x: f64) -> f64 {
        if x >= self.mean {
            return self.rate(x);
        }
        let untruncated = self.t == f64::NEG_INFINITY || self.family.survival_unchecked_lower(self);
        let q = self.param;
        if untruncated {
            match self.family.kind {
                FamilyKind::NormalLocation => return 0.5 * (x - q).powi(2),
                FamilyKind::Bernoulli => return bernoulli_kl(x, q),
                FamilyKind::Poisson => {
                    return if x < 0.0 { f64::INFINITY } else { xlogy(x, x / q) - x + q };
                }
                FamilyKind::Exponential => {
                    return if x <= 0.0 { f64::INFINITY } else { q * x - 1.0 - (q * x).ln() };
                }
                FamilyKind::BetaUniform => {}
            }
        }
        let lower = match self.family.kind {
            FamilyKind::NormalLocation => f64::NEG_INFINITY,
            _ => self.t.max(0.0),
        };
        if x <= lower && x < self.mean {
            return f64::INFINITY;
        }
        let scale = (self.mean - x) / self.variance.max(1e-300);
        let (_, v) = numeric::concave_max(|u| -u * x - self.log_mgf(-u), f64::INFINITY, scale.max(1e-8));
        v.max(0.0)
    }

    fn rate_upper(&self, x: f64) -> f64 {
        let q = self.param;
        let max = self.support_max();
        if x > max {
            return f64::INFINITY;
        }
        let untruncated = self.t == f64::NEG_INFINITY || self.family.survival_unchecked_lower(self);
        match self.family.kind {
            FamilyKind::NormalLocation if untruncated => return 0.5 * (x - q).powi(2),
            FamilyKind::Bernoulli => {
                return if untruncated { bernoulli_kl(x, q) } else { 0.0 };
            }
            FamilyKind::Poisson if untruncated => return xlogy(x, x / q) - x + q,
            FamilyKind::Exponential => {
                let y = x - self.t.max(0.0);
                return q * y - 1.0 - (q * y).ln();
            }
            _ => {}
        }
        if x == max {
            return f64::INFINITY;
        }
        let scale = (x - self.mean) / self.variance.max(1e-300);
        let (_, v) = numeric::concave_max(|s| s * x - self.log_mgf(s), self.mgf_domain(), scale.max(1e-8));
        v.max(0.0)
    }
}

impl FamilySpec {
    /// True when the conditioning event `X > t` has probability one.
    fn survival_unchecked_lower(&self, c: &Conditioned) -> bool {
        match self.kind {
            FamilyKind::Bernoulli => c.t < 0.0,
            FamilyKind::Poisson => c.t < 0.0,
            FamilyKind::Exponential | FamilyKind::BetaUniform => c.t <= 0.0,
            FamilyKind::NormalLocation => c.t == f64::NEG_INFINITY,
        }
    }
}

fn bernoulli_kl(x: f64, p: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return f64::INFINITY;
    }
    xlogy(x, x / p) + xlogy(1.0 - x, (1.0 - x) / (1.0 - p))
}
