//! Arm selection rules.
//!
//! Every rule first plays each arm once, in increasing index order, since
//! none of the indices is defined on an arm without observations. After that:
//!
//! | policy  | choice                                                           |
//! |---------|------------------------------------------------------------------|
//! | UCB     | argmax `mean + C sqrt(ln t / n)`                                 |
//! | MIN     | argmax empirical minimum                                         |
//! | MaRaB   | argmax `cvar_alpha - C sqrt(ln max(1, ceil(t alpha)) / n_alpha)` |
//! | MV-LCB  | argmin `var - rho mean - (5 + rho) sqrt(ln(1/delta) / 2n)`       |
//! | ExpExp  | round robin for `t <= tau`, then the best empirical MV, frozen   |
//!
//! Ties go to the lowest arm index unless random tie breaking is enabled.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::estimators::{tail_count, time_tail_count, ArmStats};
use crate::rng::BanditRng;

/// Policy selection with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolicyConfig {
    Ucb { c: f64 },
    Min,
    Marab { c: f64, alpha: f64 },
    Mvlcb { rho: f64, delta: f64 },
    Expexp { rho: f64, tau: u64 },
}

impl PolicyConfig {
    /// Checks parameter ranges for a `k`-armed problem, and `tau <= horizon`
    /// when a horizon is given.
    pub fn validate(&self, k: usize, horizon: Option<u64>) -> Result<()> {
        if k < 2 {
            return Err(BanditError::Config(format!("at least 2 arms required, got {k}")));
        }
        match *self {
            PolicyConfig::Ucb { c } => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(BanditError::invalid("c", format!("UCB requires C > 0, got {c}")));
                }
            }
            PolicyConfig::Min => {}
            PolicyConfig::Marab { c, alpha } => {
                if !(c.is_finite() && c >= 0.0) {
                    return Err(BanditError::invalid("c", format!("MaRaB requires C >= 0, got {c}")));
                }
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(BanditError::invalid("alpha", format!("must be in (0, 1), got {alpha}")));
                }
            }
            PolicyConfig::Mvlcb { rho, delta } => {
                check_rho(rho)?;
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(BanditError::invalid("delta", format!("must be in (0, 1), got {delta}")));
                }
            }
            PolicyConfig::Expexp { rho, tau } => {
                check_rho(rho)?;
                if (tau as usize) < k {
                    return Err(BanditError::invalid("tau", format!("must be >= K = {k}, got {tau}")));
                }
                if let Some(h) = horizon {
                    if tau > h {
                        return Err(BanditError::invalid(
                            "tau",
                            format!("must be <= horizon {h}, got {tau}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Short human-readable label, e.g. `marab(c=1e-6,alpha=0.1)`.
    pub fn label(&self) -> String {
        match *self {
            PolicyConfig::Ucb { c } => format!("ucb(c={c:e})"),
            PolicyConfig::Min => "min".to_string(),
            PolicyConfig::Marab { c, alpha } => format!("marab(c={c:e},alpha={alpha})"),
            PolicyConfig::Mvlcb { rho, delta } => format!("mvlcb(rho={rho},delta={delta:e})"),
            PolicyConfig::Expexp { rho, tau } => format!("expexp(rho={rho},tau={tau})"),
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(BanditError::invalid("rho", format!("must be > 0, got {rho}")))
    }
}

/// Exploration length `K (T/14)^(2/3)`, floored and clamped to `[K, T]`.
pub fn default_expexp_tau(k: usize, horizon: u64) -> u64 {
    let tau = (k as f64 * (horizon as f64 / 14.0).powf(2.0 / 3.0)).floor() as u64;
    tau.clamp(k as u64, horizon.max(k as u64))
}

/// Confidence parameter `1/T^2` used by MV-LCB.
pub fn default_mvlcb_delta(horizon: u64) -> f64 {
    1.0 / (horizon as f64 * horizon as f64)
}

pub fn ucb_index(stats: &ArmStats, t: u64, c: f64) -> Result<f64> {
    let mean = stats.empirical_mean()?;
    Ok(mean + c * ((t as f64).ln() / stats.count() as f64).sqrt())
}

pub fn marab_index(stats: &ArmStats, t: u64, c: f64, alpha: f64) -> Result<f64> {
    let cvar = stats.empirical_cvar(alpha)?;
    let n_alpha = tail_count(alpha, stats.count()) as f64;
    let log_term = (time_tail_count(t, alpha) as f64).ln();
    Ok(cvar - c * (log_term / n_alpha).sqrt())
}

pub fn min_index(stats: &ArmStats) -> Result<f64> {
    stats.empirical_min()
}

/// MV-LCB index; the policy picks the arm minimizing it.
pub fn mvlcb_index(stats: &ArmStats, rho: f64, delta: f64) -> Result<f64> {
    let mv = stats.mv_value(rho)?;
    Ok(mv - (5.0 + rho) * ((1.0 / delta).ln() / (2.0 * stats.count() as f64)).sqrt())
}

/// Anything that picks an arm given the current per-arm statistics.
pub trait ArmSelector {
    fn select_arm(&mut self, stats: &[ArmStats], t: u64) -> Result<usize>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Max,
    Min,
}

/// Running state of a policy within one episode.
#[derive(Debug, Clone)]
pub struct PolicyState {
    config: PolicyConfig,
    round_robin_cursor: u64,
    frozen_choice: Option<usize>,
    tie_rng: Option<BanditRng>,
}

impl PolicyState {
    pub fn new(config: PolicyConfig) -> Self {
        PolicyState {
            config,
            round_robin_cursor: 0,
            frozen_choice: None,
            tie_rng: None,
        }
    }

    /// Breaks exact ties uniformly at random using `rng` instead of by lowest index.
    pub fn with_random_ties(mut self, rng: BanditRng) -> Self {
        self.tie_rng = Some(rng);
        self
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    /// Arm frozen by ExpExp once its exploration phase is over.
    pub fn frozen_choice(&self) -> Option<usize> {
        self.frozen_choice
    }

    fn best(&mut self, stats: &[ArmStats], dir: Direction, index: impl Fn(&ArmStats) -> Result<f64>) -> Result<usize> {
        let values = stats.iter().map(index).collect::<Result<Vec<f64>>>()?;
        let better = |a: f64, b: f64| match dir {
            Direction::Max => a > b,
            Direction::Min => a < b,
        };
        let mut best = 0;
        for (i, &v) in values.iter().enumerate().skip(1) {
            if better(v, values[best]) {
                best = i;
            }
        }
        if let Some(rng) = self.tie_rng.as_mut() {
            let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] == values[best]).collect();
            if ties.len() > 1 {
                best = ties[rng.random_range(0..ties.len())];
            }
        }
        Ok(best)
    }
}

impl ArmSelector for PolicyState {
    fn select_arm(&mut self, stats: &[ArmStats], t: u64) -> Result<usize> {
        let k = stats.len();
        if k < 2 {
            return Err(BanditError::Config(format!("at least 2 arms required, got {k}")));
        }
        if t == 0 {
            return Err(BanditError::invalid("t", "timesteps start at 1"));
        }
        if let Some(i) = stats.iter().position(ArmStats::is_empty) {
            return Ok(i);
        }
        match self.config {
            PolicyConfig::Ucb { c } => self.best(stats, Direction::Max, |s| ucb_index(s, t, c)),
            PolicyConfig::Min => self.best(stats, Direction::Max, min_index),
            PolicyConfig::Marab { c, alpha } => self.best(stats, Direction::Max, |s| marab_index(s, t, c, alpha)),
            PolicyConfig::Mvlcb { rho, delta } => self.best(stats, Direction::Min, |s| mvlcb_index(s, rho, delta)),
            PolicyConfig::Expexp { rho, tau } => {
                if t <= tau {
                    self.round_robin_cursor = t;
                    Ok(((t - 1) % k as u64) as usize)
                } else if let Some(arm) = self.frozen_choice {
                    Ok(arm)
                } else {
                    let arm = self.best(stats, Direction::Min, |s| s.mv_value(rho))?;
                    self.frozen_choice = Some(arm);
                    Ok(arm)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn stats(v: &[f64]) -> ArmStats {
        ArmStats::from_rewards(v).unwrap()
    }

    #[test]
    fn ucb_examples() {
        let s = stats(&[0.5]);
        assert_eq!(ucb_index(&s, 1, 1.0).unwrap(), 0.5);
        let s4 = stats(&[0.5, 0.5, 0.5, 0.5]);
        let expected = 0.5 + (55f64.ln() / 4.0).sqrt();
        assert!((ucb_index(&s4, 55, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!((ucb_index(&s4, 55, 1.0).unwrap() - 1.500_8).abs() < 1e-3);
        assert_eq!(ucb_index(&s4, 1000, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn marab_examples() {
        let s = stats(&[0.1, 0.5, 0.9]);
        assert_eq!(marab_index(&s, 10, 0.0, 0.4).unwrap(), s.empirical_cvar(0.4).unwrap());
        // ceil(t * alpha) = 1
        assert_eq!(marab_index(&s, 5, 100.0, 0.1).unwrap(), s.empirical_cvar(0.1).unwrap());
        let v = marab_index(&s, 10, 1.0, 0.4).unwrap();
        assert!((v - (0.3 - (4f64.ln() / 2.0).sqrt())).abs() < 1e-15);
        assert!((v + 0.5326).abs() < 1e-4);
    }

    #[test]
    fn min_examples() {
        assert_eq!(min_index(&stats(&[0.3, 0.7])).unwrap(), 0.3);
        assert_eq!(min_index(&stats(&[0.9])).unwrap(), 0.9);
    }

    #[test]
    fn mvlcb_example() {
        let s = stats(&[0.0, 1.0]);
        let delta = (-2f64).exp();
        let v = mvlcb_index(&s, 1.0, delta).unwrap();
        assert!((v + 4.4926).abs() < 1e-4, "{v}");
    }

    #[test]
    fn init_pass_picks_lowest_unplayed() {
        let all = vec![stats(&[0.5]), ArmStats::new(), stats(&[0.5])];
        let mut p = PolicyState::new(PolicyConfig::Min);
        assert_eq!(p.select_arm(&all, 3).unwrap(), 1);
    }

    #[test]
    fn min_policy_argmax() {
        let all = vec![stats(&[0.3, 0.9]), stats(&[0.7]), stats(&[0.5, 0.6])];
        let mut p = PolicyState::new(PolicyConfig::Min);
        assert_eq!(p.select_arm(&all, 5).unwrap(), 1);
    }

    #[test]
    fn expexp_round_robin_then_frozen() {
        let mut all = vec![stats(&[0.5]), stats(&[0.2]), stats(&[0.9])];
        let mut p = PolicyState::new(PolicyConfig::Expexp { rho: 1.0, tau: 6 });
        assert_eq!(p.select_arm(&all, 4).unwrap(), 0);
        assert_eq!(p.select_arm(&all, 6).unwrap(), 2);
        assert!(p.frozen_choice().is_none());
        // lowest var - rho * mean: arm 2
        assert_eq!(p.select_arm(&all, 7).unwrap(), 2);
        assert_eq!(p.frozen_choice(), Some(2));
        all[2].update(0.0).unwrap();
        all[2].update(0.0).unwrap();
        assert_eq!(p.select_arm(&all, 8).unwrap(), 2);
    }

    #[test]
    fn mvlcb_minimizes() {
        // same counts, so the confidence width is common; arm 1 has the lower MV value
        let all = vec![stats(&[0.0, 1.0]), stats(&[0.6, 0.6])];
        let mut p = PolicyState::new(PolicyConfig::Mvlcb { rho: 1.0, delta: 0.01 });
        assert_eq!(p.select_arm(&all, 3).unwrap(), 1);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let all = vec![stats(&[0.4]), stats(&[0.7]), stats(&[0.7])];
        for cfg in [
            PolicyConfig::Min,
            PolicyConfig::Ucb { c: 1.0 },
            PolicyConfig::Marab { c: 1.0, alpha: 0.5 },
        ] {
            assert_eq!(PolicyState::new(cfg).select_arm(&all, 4).unwrap(), 1);
        }
        let twins = vec![stats(&[0.2, 0.4]), stats(&[0.2, 0.4])];
        let mut p = PolicyState::new(PolicyConfig::Mvlcb { rho: 1.0, delta: 0.1 });
        assert_eq!(p.select_arm(&twins, 5).unwrap(), 0);
    }

    #[test]
    fn random_ties_only_among_equals() {
        let all = vec![stats(&[0.4]), stats(&[0.7]), stats(&[0.7])];
        let mut p = PolicyState::new(PolicyConfig::Min).with_random_ties(rng_from_seed(5));
        let mut seen = [0usize; 3];
        for _ in 0..200 {
            seen[p.select_arm(&all, 4).unwrap()] += 1;
        }
        assert_eq!(seen[0], 0);
        assert!(seen[1] > 0 && seen[2] > 0);
    }

    #[test]
    fn config_validation() {
        assert!(PolicyConfig::Ucb { c: 0.0 }.validate(3, None).is_err());
        assert!(PolicyConfig::Marab { c: 0.0, alpha: 0.1 }.validate(3, None).is_ok());
        assert!(PolicyConfig::Marab { c: 1.0, alpha: 1.0 }.validate(3, None).is_err());
        assert!(PolicyConfig::Mvlcb { rho: 1.0, delta: 1.0 }.validate(3, None).is_err());
        assert!(PolicyConfig::Expexp { rho: 1.0, tau: 2 }.validate(3, None).is_err());
        assert!(PolicyConfig::Expexp { rho: 1.0, tau: 20 }
            .validate(3, Some(10))
            .is_err());
        assert!(PolicyConfig::Min.validate(1, None).is_err());
        let mut p = PolicyState::new(PolicyConfig::Min);
        assert!(matches!(p.select_arm(&[stats(&[0.1])], 1), Err(BanditError::Config(_))));
    }

    #[test]
    fn default_schedules() {
        // 20 * (2000/14)^(2/3) = 546.6...
        assert_eq!(default_expexp_tau(20, 2000), 546);
        assert_eq!(default_expexp_tau(20, 20), 20);
        assert_eq!(default_mvlcb_delta(100), 1e-4);
    }

    #[test]
    fn init_pass_covers_every_arm_once() {
        for cfg in [
            PolicyConfig::Ucb { c: 1.0 },
            PolicyConfig::Min,
            PolicyConfig::Marab { c: 1.0, alpha: 0.1 },
            PolicyConfig::Mvlcb { rho: 2.0, delta: 0.01 },
            PolicyConfig::Expexp { rho: 2.0, tau: 10 },
        ] {
            let mut all = vec![ArmStats::new(); 5];
            let mut p = PolicyState::new(cfg);
            for t in 1..=5 {
                let arm = p.select_arm(&all, t).unwrap();
                assert!(all[arm].is_empty());
                all[arm].update(0.5).unwrap();
            }
        }
    }

    fn arms_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.0f64..0.5, 1..40), 2..6)
    }

    proptest! {
        #[test]
        fn translation_shifts_indices(arms in arms_strategy(), shift in 0.0f64..0.5, t in 1u64..5000) {
            for rewards in &arms {
                let a = stats(rewards);
                let shifted: Vec<f64> = rewards.iter().map(|r| r + shift).collect();
                let b = stats(&shifted);
                prop_assert!((ucb_index(&b, t, 0.3).unwrap() - ucb_index(&a, t, 0.3).unwrap() - shift).abs() < 1e-12);
                prop_assert!((marab_index(&b, t, 0.3, 0.2).unwrap() - marab_index(&a, t, 0.3, 0.2).unwrap() - shift).abs() < 1e-12);
                prop_assert!((min_index(&b).unwrap() - min_index(&a).unwrap() - shift).abs() < 1e-15);
            }
        }

        #[test]
        fn marab_reduces_to_min(arms in arms_strategy(), t in 1u64..5000) {
            let all: Vec<ArmStats> = arms.iter().map(|r| stats(r)).collect();
            let max_count = all.iter().map(ArmStats::count).max().unwrap();
            let alpha = 1.0 / max_count as f64;
            for s in &all {
                prop_assert_eq!(marab_index(s, t, 0.0, alpha).unwrap(), min_index(s).unwrap());
            }
        }

        #[test]
        fn selection_is_repeatable(arms in arms_strategy(), t in 1u64..5000) {
            let all: Vec<ArmStats> = arms.iter().map(|r| stats(r)).collect();
            for cfg in [PolicyConfig::Ucb { c: 0.5 }, PolicyConfig::Min, PolicyConfig::Marab { c: 0.5, alpha: 0.2 },
                        PolicyConfig::Mvlcb { rho: 2.0, delta: 0.01 }] {
                let first = PolicyState::new(cfg).select_arm(&all, t).unwrap();
                let second = PolicyState::new(cfg).select_arm(&all, t).unwrap();
                prop_assert_eq!(first, second);
            }
        }

        #[test]
        fn initial_phase_cvar_is_running_min(rewards in prop::collection::vec(0.0f64..=1.0, 1..10)) {
            let alpha = 0.1;
            let mut s = ArmStats::new();
            let mut prev = f64::INFINITY;
            for r in rewards {
                s.update(r).unwrap();
                let c = s.empirical_cvar(alpha).unwrap();
                prop_assert_eq!(c, s.empirical_min().unwrap());
                prop_assert!(c <= prev);
                prev = c;
            }
        }
    }
}
