//! Regret bounds for MIN and UCB, and Monte-Carlo checks of the
//! empirical-minimum tail inequalities they rest on.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::ArmSpec;
use crate::error::{BanditError, Result};
use crate::generators::BanditProblem;
use crate::rng::{rng_from_seed, BanditRng};

/// Trials are split over this many independently seeded shards.
pub const LEMMA_SHARDS: usize = 16;

/// Inputs to the closed-form bound evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    /// Number of arms.
    pub k: usize,
    /// Density lower-bound constant.
    pub a: f64,
    pub delta_mu_max: f64,
    pub delta_a_min: f64,
    pub t: u64,
    pub delta: f64,
    /// Mean margins of the suboptimal arms, for the UCB bound.
    #[serde(default)]
    pub delta_mu_list: Vec<f64>,
    /// Number of optimal arms; the `K - 1` factor becomes `K - optimal_arms`.
    #[serde(default = "one")]
    pub optimal_arms: usize,
}

fn one() -> usize {
    1
}

impl BoundInputs {
    /// Inputs describing `problem` at time `t`. `Delta_a,min` and the margin
    /// list range over the arms other than the best-mean arm.
    pub fn from_problem(problem: &BanditProblem, t: u64, delta: f64) -> Result<Self> {
        let a = problem.lower_bound_a().ok_or(BanditError::LowerBoundUnavailable)?;
        let best = problem.best_mean_arm();
        let others = (0..problem.k()).filter(|&i| i != best);
        let delta_a_min = others
            .clone()
            .map(|i| problem.margins_min()[i])
            .fold(f64::INFINITY, f64::min);
        let delta_mu_list: Vec<f64> = others.map(|i| problem.margins_mean()[i]).collect();
        let delta_mu_max = delta_mu_list.iter().copied().fold(0.0, f64::max);
        Ok(BoundInputs {
            k: problem.k(),
            a,
            delta_mu_max,
            delta_a_min,
            t,
            delta,
            delta_mu_list,
            optimal_arms: 1,
        })
    }

    fn validate(&self, need_delta_a: bool) -> Result<()> {
        if self.k == 0 {
            return Err(BanditError::invalid("k", "must be >= 1"));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(BanditError::invalid("a", format!("must be > 0, got {}", self.a)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BanditError::invalid(
                "delta",
                format!("must be in (0, 1), got {}", self.delta),
            ));
        }
        if self.t == 0 {
            return Err(BanditError::invalid("t", "must be >= 1"));
        }
        if !(self.delta_mu_max >= 0.0 && self.delta_mu_max.is_finite()) {
            return Err(BanditError::invalid(
                "delta_mu_max",
                format!("must be >= 0, got {}", self.delta_mu_max),
            ));
        }
        if need_delta_a && !(self.delta_a_min > 0.0 && self.delta_a_min.is_finite()) {
            return Err(BanditError::NonPositiveMargin(self.delta_a_min));
        }
        if self.optimal_arms == 0 || self.optimal_arms > self.k {
            return Err(BanditError::invalid(
                "optimal_arms",
                format!("must be in 1..={}, got {}", self.k, self.optimal_arms),
            ));
        }
        Ok(())
    }

    fn suboptimal(&self) -> f64 {
        (self.k - self.optimal_arms) as f64
    }
}

/// High-probability and expectation regret bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretBound {
    /// Holds with probability at least `1 - delta`.
    pub high_prob_bound: f64,
    /// `None` when `t` is below the validity threshold.
    pub expectation_bound: Option<f64>,
    /// Why the expectation bound is absent.
    pub note: Option<String>,
}

impl RegretBound {
    fn zero() -> Self {
        RegretBound {
            high_prob_bound: 0.0,
            expectation_bound: Some(0.0),
            note: None,
        }
    }
}

/// MIN regret bound when the best-mean arm is also the best-infimum arm.
pub fn prop43_regret_bound(input: &BoundInputs) -> Result<RegretBound> {
    input.validate(true)?;
    let m = input.suboptimal();
    if m == 0.0 || input.delta_mu_max == 0.0 {
        return Ok(RegretBound::zero());
    }
    let (k, a, t) = (input.k as f64, input.a, input.t as f64);
    let ratio = input.delta_mu_max / input.delta_a_min;
    let scale = m / a * ratio;
    let tail = m * input.delta_mu_max;
    let high_prob_bound = scale * (t * k / input.delta).ln() + tail;
    let threshold = m / a * (input.delta_a_min / input.delta_mu_max);
    let (expectation_bound, note) = if t >= threshold {
        let arg = t * t * k * a / m / ratio;
        (Some(scale * (arg.ln() + 1.0) + tail), None)
    } else {
        (None, Some(format!("expectation bound requires t >= {threshold}")))
    };
    Ok(RegretBound {
        high_prob_bound,
        expectation_bound,
        note,
    })
}

/// MIN regret bound under the additional margin condition `Delta_mu,i <= Delta_a,i`.
pub fn prop44_regret_bound(input: &BoundInputs) -> Result<RegretBound> {
    input.validate(false)?;
    let m = input.suboptimal();
    if m == 0.0 {
        return Ok(RegretBound::zero());
    }
    let (k, a, t) = (input.k as f64, input.a, input.t as f64);
    let tail = m * input.delta_mu_max;
    let high_prob_bound = m / a * (t * k / input.delta).ln() + tail;
    let threshold = m / a;
    let (expectation_bound, note) = if t > threshold {
        (Some(m / a * ((t * t * k * a / m).ln() + 1.0) + tail), None)
    } else {
        (None, Some(format!("expectation bound requires t > {threshold}")))
    };
    Ok(RegretBound {
        high_prob_bound,
        expectation_bound,
        note,
    })
}

/// UCB expected regret bound `8 sum log t / Delta + (1 + pi^2/3) sum Delta`
/// over the suboptimal margins.
pub fn ucb_regret_bound(delta_mu_list: &[f64], t: u64) -> Result<f64> {
    if t == 0 {
        return Err(BanditError::invalid("t", "must be >= 1"));
    }
    if let Some(&bad) = delta_mu_list.iter().find(|d| d.is_nan() || **d <= 0.0) {
        return Err(BanditError::NonPositiveMargin(bad));
    }
    let log_t = (t as f64).ln();
    let explore: f64 = delta_mu_list.iter().map(|d| log_t / d).sum();
    let total: f64 = delta_mu_list.iter().sum();
    Ok(8.0 * explore + (1.0 + std::f64::consts::PI.powi(2) / 3.0) * total)
}

/// Which of the bound hypotheses a problem satisfies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    pub best_arm_coincide: bool,
    pub prop44_margins_hold: bool,
    pub a: Option<f64>,
}

pub fn margin_assumption_check(problem: &BanditProblem) -> MarginReport {
    const TOL: f64 = 1e-12;
    let best_arm_coincide =
        (0..problem.k()).any(|i| problem.margins_mean()[i] <= TOL && problem.margins_min()[i] <= TOL);
    let prop44_margins_hold = problem
        .margins_mean()
        .iter()
        .zip(problem.margins_min())
        .all(|(dm, da)| *dm <= da + TOL);
    MarginReport {
        best_arm_coincide,
        prop44_margins_hold,
        a: problem.lower_bound_a(),
    }
}

/// Outcome of a Monte-Carlo tail-bound check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub trials: u64,
    pub hits: u64,
    pub empirical_prob: f64,
    pub bound: f64,
    pub std_error: f64,
    /// Exact event probability when every arm is a uniform segment.
    pub exact_prob: Option<f64>,
    /// `empirical_prob <= bound + 3 std_error`.
    pub pass: bool,
}

fn uniform_tail(spec: &ArmSpec, t: u64, epsilon: f64) -> Option<f64> {
    match spec {
        ArmSpec::UniformSegment { radius, .. } => Some((1.0 - epsilon / (2.0 * radius)).max(0.0).powf(t as f64)),
        _ => None,
    }
}

/// Does every one of `t` draws land at or above `floor`?
fn min_at_least<R: Rng + ?Sized>(spec: &ArmSpec, t: u64, floor: f64, rng: &mut R) -> Result<bool> {
    for _ in 0..t {
        if spec.sample(rng)? < floor {
            return Ok(false);
        }
    }
    Ok(true)
}

fn finish(trials: u64, hits: u64, bound: f64, exact_prob: Option<f64>) -> LemmaCheck {
    let p = hits as f64 / trials as f64;
    let std_error = (p * (1.0 - p) / trials as f64).sqrt();
    LemmaCheck {
        trials,
        hits,
        empirical_prob: p,
        bound,
        std_error,
        exact_prob,
        pass: p <= bound + 3.0 * std_error,
    }
}

fn validate_check(epsilon: f64, trials: u64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(BanditError::invalid("epsilon", format!("must be > 0, got {epsilon}")));
    }
    if trials == 0 {
        return Err(BanditError::invalid("trials", "must be >= 1"));
    }
    Ok(())
}

/// Counts trials where the event holds, sharded over [`LEMMA_SHARDS`]
/// streams seeded from `rng`.
fn count_hits<F>(trials: u64, rng: &mut BanditRng, event: F) -> Result<u64>
where
    F: Fn(&mut BanditRng) -> Result<bool> + Sync,
{
    let seeds: Vec<u64> = (0..LEMMA_SHARDS).map(|_| rng.random()).collect();
    let per = trials / LEMMA_SHARDS as u64;
    let extra = trials % LEMMA_SHARDS as u64;
    let counts: Vec<u64> = seeds
        .par_iter()
        .enumerate()
        .map(|(shard, &seed)| {
            let n = per + u64::from((shard as u64) < extra);
            let mut r = rng_from_seed(seed);
            let mut hits = 0;
            for _ in 0..n {
                if event(&mut r)? {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;
    Ok(counts.iter().sum())
}

/// Estimates `P(min of t draws >= a + epsilon)` and compares it with `exp(-t A epsilon)`.
pub fn lemma41_check(spec: &ArmSpec, t: u64, epsilon: f64, trials: u64, rng: &mut BanditRng) -> Result<LemmaCheck> {
    validate_check(epsilon, trials)?;
    let a_const = spec.lower_bound_constant().ok_or(BanditError::LowerBoundUnavailable)?;
    let bound = (-(t as f64) * a_const * epsilon).exp();
    let exact = uniform_tail(spec, t, epsilon);
    if t == 0 {
        return Ok(finish(trials, trials, 1.0, Some(1.0)));
    }
    let floor = spec.essential_infimum() + epsilon;
    let hits = count_hits(trials, rng, |r| min_at_least(spec, t, floor, r))?;
    Ok(finish(trials, hits, bound, exact))
}

/// Multi-arm version over an explicit arm list: the event is that some arm's
/// `t`-sample minimum stays at or above its infimum plus `epsilon`; the
/// bound is `K exp(-t A epsilon)` with `A` the smallest per-arm constant.
pub fn lemma42_check_arms(
    arms: &[ArmSpec],
    t: u64,
    epsilon: f64,
    trials: u64,
    rng: &mut BanditRng,
) -> Result<LemmaCheck> {
    validate_check(epsilon, trials)?;
    if arms.is_empty() {
        return Err(BanditError::Config("at least one arm required".into()));
    }
    let a_const = arms
        .iter()
        .map(ArmSpec::lower_bound_constant)
        .try_fold(f64::INFINITY, |acc, a| a.map(|a| acc.min(a)))
        .ok_or(BanditError::LowerBoundUnavailable)?;
    let bound = arms.len() as f64 * (-(t as f64) * a_const * epsilon).exp();
    let exact = arms
        .iter()
        .map(|s| uniform_tail(s, t, epsilon))
        .try_fold(1.0, |acc, p| p.map(|p| acc * (1.0 - p)))
        .map(|none| 1.0 - none);
    if t == 0 {
        return Ok(finish(trials, trials, bound, Some(1.0)));
    }
    let floors: Vec<f64> = arms.iter().map(|s| s.essential_infimum() + epsilon).collect();
    let hits = count_hits(trials, rng, |r| {
        for (spec, &floor) in arms.iter().zip(&floors) {
            if min_at_least(spec, t, floor, r)? {
                return Ok(true);
            }
        }
        Ok(false)
    })?;
    Ok(finish(trials, hits, bound, exact))
}

pub fn lemma42_check(
    problem: &BanditProblem,
    t: u64,
    epsilon: f64,
    trials: u64,
    rng: &mut BanditRng,
) -> Result<LemmaCheck> {
    lemma42_check_arms(problem.arms(), t, epsilon, trials, rng)
}
