//! Incremental per-arm statistics.

use crate::error::{BanditError, Result};

/// `max(1, ceil(alpha * n))`, the number of lowest rewards averaged by the
/// empirical CVaR.
///
/// Products that land within rounding noise of an integer are treated as that
/// integer, so `0.1 * 30` counts 3 rewards rather than 4.
pub fn tail_count(alpha: f64, n: usize) -> usize {
    let x = alpha * n as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (k.max(1.0) as usize).min(n.max(1))
}

/// `max(1, ceil(t * alpha))`, the argument of the logarithm in the CVaR
/// confidence width.
pub fn time_tail_count(t: u64, alpha: f64) -> u64 {
    let x = alpha * t as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    k.max(1.0) as u64
}

/// Sufficient statistics of the rewards observed on one arm.
///
/// Rewards are kept sorted so that the empirical CVaR is an exact prefix
/// average. Mean and variance use Welford accumulators.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArmStats {
    rewards: Vec<f64>,
    sum: f64,
    mean: f64,
    sq_dev: f64,
}

impl ArmStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds statistics from a batch of rewards, inserted in order.
    pub fn from_rewards(rewards: &[f64]) -> Result<Self> {
        let mut stats = Self::new();
        for &r in rewards {
            stats.update(r)?;
        }
        Ok(stats)
    }

    pub fn update(&mut self, reward: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(BanditError::RewardOutOfRange(reward));
        }
        let pos = self.rewards.partition_point(|&r| r <= reward);
        self.rewards.insert(pos, reward);
        self.sum += reward;
        let n = self.rewards.len() as f64;
        let delta = reward - self.mean;
        self.mean += delta / n;
        self.sq_dev += delta * (reward - self.mean);
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// Rewards in increasing order.
    pub fn rewards_sorted(&self) -> &[f64] {
        &self.rewards
    }

    /// Sum of all observed rewards.
    pub fn running_sum(&self) -> f64 {
        self.sum
    }

    fn require(&self, what: &'static str) -> Result<()> {
        if self.rewards.is_empty() {
            Err(BanditError::UndefinedStatistic(what))
        } else {
            Ok(())
        }
    }

    pub fn empirical_mean(&self) -> Result<f64> {
        self.require("mean")?;
        Ok(self.sum / self.count() as f64)
    }

    /// Population variance `(1/n) sum (r - mean)^2`.
    pub fn empirical_variance(&self) -> Result<f64> {
        self.require("variance")?;
        Ok((self.sq_dev / self.count() as f64).max(0.0))
    }

    pub fn empirical_min(&self) -> Result<f64> {
        self.require("min")?;
        Ok(self.rewards[0])
    }

    /// Average of the `max(1, ceil(alpha * n))` lowest rewards.
    pub fn empirical_cvar(&self, alpha: f64) -> Result<f64> {
        self.require("cvar")?;
        let k = tail_count(alpha, self.count());
        Ok(self.rewards[..k].iter().sum::<f64>() / k as f64)
    }

    /// Mean-variance value `variance - rho * mean`; lower is better.
    pub fn mv_value(&self, rho: f64) -> Result<f64> {
        Ok(self.empirical_variance()? - rho * self.empirical_mean()?)
    }
}
