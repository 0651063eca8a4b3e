//! Arm reward distributions on `[0, 1]`.
//!
//! Three families are supported: a uniform law on a segment, a mixture of
//! Gaussians truncated to `[floor, 1]` by rejection, and uniform resampling
//! (with replacement) from a fixed list of observed rewards.
//!
//! Analytic quantities of the truncated mixture are evaluated in closed form
//! from the normal CDF: the rejection procedure (pick a component, draw,
//! retry the whole procedure outside `[floor, 1]`) produces the mixture
//! density restricted to `[floor, 1]` and renormalised, so means and partial
//! expectations are sums of truncated-normal moments. Quantiles are found by
//! bisection on that CDF.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{BanditError, Result};
use crate::estimators::tail_count;

/// Retry cap for the rejection sampler of the truncated mixture.
pub const DEFAULT_REJECTION_CAP: u64 = 1_000_000;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// One Gaussian component of a truncated mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

/// Reward distribution of a single arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArmSpec {
    /// `U([center - radius, center + radius])`.
    UniformSegment { center: f64, radius: f64 },
    /// Gaussian mixture truncated to `[floor, 1]` by rejection.
    TruncatedGaussianMixture {
        floor: f64,
        components: Vec<GaussianComponent>,
    },
    /// Uniform resampling with replacement from `values`.
    EmpiricalResample { values: Vec<f64> },
}

impl ArmSpec {
    pub fn uniform(center: f64, radius: f64) -> Result<Self> {
        let spec = ArmSpec::UniformSegment { center, radius };
        spec.validate()?;
        Ok(spec)
    }

    pub fn mixture(floor: f64, components: Vec<GaussianComponent>) -> Result<Self> {
        let spec = ArmSpec::TruncatedGaussianMixture { floor, components };
        spec.validate()?;
        Ok(spec)
    }

    pub fn empirical(values: Vec<f64>) -> Result<Self> {
        let spec = ArmSpec::EmpiricalResample { values };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ArmSpec::UniformSegment { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(BanditError::invalid("radius", format!("must be > 0, got {radius}")));
                }
                if !center.is_finite() || center - radius < 0.0 || center + radius > 1.0 {
                    return Err(BanditError::invalid(
                        "center",
                        format!(
                            "support [{}, {}] must lie within [0, 1]",
                            center - radius,
                            center + radius
                        ),
                    ));
                }
            }
            ArmSpec::TruncatedGaussianMixture { floor, components } => {
                if !(0.0..1.0).contains(floor) {
                    return Err(BanditError::invalid("floor", format!("must be in [0, 1), got {floor}")));
                }
                if components.is_empty() {
                    return Err(BanditError::invalid("components", "at least one component required"));
                }
                let mut total = 0.0;
                for (j, c) in components.iter().enumerate() {
                    if !(c.weight.is_finite() && c.weight > 0.0) {
                        return Err(BanditError::invalid(
                            "weight",
                            format!("component {j} weight must be > 0, got {}", c.weight),
                        ));
                    }
                    if !(c.std.is_finite() && c.std > 0.0) {
                        return Err(BanditError::invalid(
                            "std",
                            format!("component {j} std must be > 0, got {}", c.std),
                        ));
                    }
                    if !c.mean.is_finite() {
                        return Err(BanditError::invalid(
                            "mean",
                            format!("component {j} mean is not finite"),
                        ));
                    }
                    total += c.weight;
                }
                if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                    return Err(BanditError::invalid(
                        "weight",
                        format!("weights must sum to 1, got {total}"),
                    ));
                }
            }
            ArmSpec::EmpiricalResample { values } => {
                if values.is_empty() {
                    return Err(BanditError::invalid("values", "at least one realization required"));
                }
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(BanditError::RewardOutOfRange(*v));
                }
            }
        }
        Ok(())
    }

    /// Draws one reward.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.sample_with_cap(rng, DEFAULT_REJECTION_CAP)
    }

    pub fn sample_with_cap<R: Rng + ?Sized>(&self, rng: &mut R, cap: u64) -> Result<f64> {
        match self {
            ArmSpec::UniformSegment { center, radius } => {
                let u: f64 = rng.random();
                Ok(center - radius + 2.0 * radius * u)
            }
            ArmSpec::TruncatedGaussianMixture { floor, components } => {
                for _ in 0..cap {
                    let c = pick_component(components, rng);
                    // std > 0 was validated
                    let normal = Normal::new(c.mean, c.std).expect("validated std");
                    let r = normal.sample(rng);
                    if r >= *floor && r <= 1.0 {
                        return Ok(r);
                    }
                }
                Err(BanditError::DegenerateMixture(cap))
            }
            ArmSpec::EmpiricalResample { values } => {
                let i = rng.random_range(0..values.len());
                Ok(values[i])
            }
        }
    }

    /// Expected reward.
    pub fn analytic_mean(&self) -> f64 {
        match self {
            ArmSpec::UniformSegment { center, .. } => *center,
            ArmSpec::TruncatedGaussianMixture { floor, components } => TruncatedMixture::new(*floor, components).mean(),
            ArmSpec::EmpiricalResample { values } => values.iter().sum::<f64>() / values.len() as f64,
        }
    }

    /// Largest `a` with `P(X < a) = 0`.
    pub fn essential_infimum(&self) -> f64 {
        match self {
            ArmSpec::UniformSegment { center, radius } => center - radius,
            ArmSpec::TruncatedGaussianMixture { floor, .. } => *floor,
            ArmSpec::EmpiricalResample { values } => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Quantile value `v_alpha`, for `alpha` in `(0, 1]`.
    pub fn quantile_value(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        Ok(match self {
            ArmSpec::UniformSegment { center, radius } => center - radius + alpha * 2.0 * radius,
            ArmSpec::TruncatedGaussianMixture { floor, components } => {
                TruncatedMixture::new(*floor, components).quantile(alpha)
            }
            ArmSpec::EmpiricalResample { values } => {
                let sorted = sorted_copy(values);
                sorted[tail_count(alpha, sorted.len()) - 1]
            }
        })
    }

    /// `CVaR_alpha`: mean reward conditional on falling below `v_alpha`.
    pub fn analytic_cvar(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        Ok(match self {
            ArmSpec::UniformSegment { center, radius } => center - radius + alpha * radius,
            ArmSpec::TruncatedGaussianMixture { floor, components } => {
                let m = TruncatedMixture::new(*floor, components);
                let v = m.quantile(alpha);
                m.partial_expectation(v) / m.cdf(v)
            }
            ArmSpec::EmpiricalResample { values } => {
                let sorted = sorted_copy(values);
                let n = tail_count(alpha, sorted.len());
                sorted[..n].iter().sum::<f64>() / n as f64
            }
        })
    }

    /// Constant `A` with `P(X <= a + eps) >= A * eps`, when known analytically.
    pub fn lower_bound_constant(&self) -> Option<f64> {
        match self {
            ArmSpec::UniformSegment { radius, .. } => Some(1.0 / (2.0 * radius)),
            _ => None,
        }
    }
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(BanditError::invalid("alpha", format!("must be in (0, 1], got {alpha}")))
    }
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn pick_component<'a, R: Rng + ?Sized>(components: &'a [GaussianComponent], rng: &mut R) -> &'a GaussianComponent {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for c in components {
        acc += c.weight;
        if u < acc {
            return c;
        }
    }
    components.last().expect("non-empty mixture")
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Closed-form view of a mixture restricted to `[floor, 1]`.
struct TruncatedMixture<'a> {
    floor: f64,
    components: &'a [GaussianComponent],
    mass: f64,
}

impl<'a> TruncatedMixture<'a> {
    fn new(floor: f64, components: &'a [GaussianComponent]) -> Self {
        let mut m = TruncatedMixture {
            floor,
            components,
            mass: 1.0,
        };
        m.mass = m.raw_mass(1.0);
        m
    }

    /// Unnormalised `P(floor <= Y <= x)` under the untruncated mixture.
    fn raw_mass(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let lo = (self.floor - c.mean) / c.std;
                let hi = (x - c.mean) / c.std;
                c.weight * (std_normal_cdf(hi) - std_normal_cdf(lo))
            })
            .sum()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.floor {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            (self.raw_mass(x) / self.mass).clamp(0.0, 1.0)
        }
    }

    /// `E[X; X <= x]`.
    fn partial_expectation(&self, x: f64) -> f64 {
        let x = x.clamp(self.floor, 1.0);
        let raw: f64 = self
            .components
            .iter()
            .map(|c| {
                let lo = (self.floor - c.mean) / c.std;
                let hi = (x - c.mean) / c.std;
                c.weight
                    * (c.mean * (std_normal_cdf(hi) - std_normal_cdf(lo))
                        + c.std * (std_normal_pdf(lo) - std_normal_pdf(hi)))
            })
            .sum();
        raw / self.mass
    }

    fn mean(&self) -> f64 {
        self.partial_expectation(1.0)
    }

    fn quantile(&self, alpha: f64) -> f64 {
        if alpha >= 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (self.floor, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}
