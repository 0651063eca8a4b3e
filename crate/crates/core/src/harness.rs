//! Seeded episodes, regret accounting and cross-run aggregation.
//!
//! Runs are independent and execute on the current rayon pool. Results are
//! always merged in run order, in fixed-size chunks, so every aggregate is
//! bit-identical whatever the number of worker threads.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{BanditError, Result};
use crate::estimators::ArmStats;
use crate::generators::BanditProblem;
use crate::policies::{ArmSelector, PolicyConfig, PolicyState};
use crate::rng::{self, BanditRng, POLICY_STREAM};

/// Number of runs evaluated in parallel before being folded into an aggregate.
pub const MERGE_CHUNK: usize = 64;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Arc<BanditProblem>,
    pub policy: PolicyConfig,
    pub horizon: u64,
    pub seed: u64,
    pub n_runs: usize,
    pub random_ties: bool,
}

impl RunConfig {
    pub fn new(problem: Arc<BanditProblem>, policy: PolicyConfig, horizon: u64, seed: u64, n_runs: usize) -> Self {
        RunConfig {
            problem,
            policy,
            horizon,
            seed,
            n_runs,
            random_ties: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.problem.k();
        if self.horizon < k as u64 {
            return Err(BanditError::invalid(
                "horizon",
                format!("must be >= number of arms {k}, got {}", self.horizon),
            ));
        }
        if self.n_runs == 0 {
            return Err(BanditError::invalid("runs", "must be >= 1"));
        }
        self.policy.validate(k, Some(self.horizon))
    }
}

/// Trajectory of one episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretLedger {
    /// Arm pulled at each step.
    pub arms: Vec<usize>,
    pub rewards: Vec<f64>,
    /// `t mu* - sum_k n_k,t mu_k`.
    pub theoretical: Vec<f64>,
    /// `t mu* - sum_k n_k,t muhat_k,t`; arms never pulled contribute 0.
    pub empirical: Vec<f64>,
    /// Final pull count of each arm.
    pub pulls: Vec<u64>,
}

impl RegretLedger {
    pub fn horizon(&self) -> usize {
        self.arms.len()
    }

    pub fn final_theoretical(&self) -> f64 {
        self.theoretical.last().copied().unwrap_or(0.0)
    }

    pub fn final_empirical(&self) -> f64 {
        self.empirical.last().copied().unwrap_or(0.0)
    }
}

/// Runs one episode of `cfg`, seeded from `(cfg.seed, run_index)`.
pub fn run_episode(cfg: &RunConfig, run_index: u64) -> Result<RegretLedger> {
    cfg.validate()?;
    let mut policy = PolicyState::new(cfg.policy);
    if cfg.random_ties {
        policy = policy.with_random_ties(rng::stream(cfg.seed, run_index, POLICY_STREAM));
    }
    run_episode_with(&cfg.problem, &mut policy, cfg.horizon, cfg.seed, run_index)
}

/// Runs one episode with an arbitrary selector. Arm `k` draws its rewards
/// from `rng::stream(seed, run_index, k)`.
pub fn run_episode_with<S: ArmSelector + ?Sized>(
    problem: &BanditProblem,
    selector: &mut S,
    horizon: u64,
    seed: u64,
    run_index: u64,
) -> Result<RegretLedger> {
    let k = problem.k();
    let mut streams: Vec<BanditRng> = (0..k as u64).map(|arm| rng::stream(seed, run_index, arm)).collect();
    let mut stats = vec![ArmStats::new(); k];
    let t_max = horizon as usize;
    let mut ledger = RegretLedger {
        arms: Vec::with_capacity(t_max),
        rewards: Vec::with_capacity(t_max),
        theoretical: Vec::with_capacity(t_max),
        empirical: Vec::with_capacity(t_max),
        pulls: vec![0; k],
    };
    let best_mean = problem.best_mean();
    let margins = problem.margins_mean();
    let mut regret = 0.0;
    for t in 1..=horizon {
        let arm = selector.select_arm(&stats, t)?;
        if arm >= k {
            return Err(BanditError::Config(format!(
                "selector returned arm {arm} for a {k}-armed problem"
            )));
        }
        let reward = problem.arms()[arm].sample(&mut streams[arm])?;
        stats[arm].update(reward)?;
        ledger.pulls[arm] += 1;
        regret += margins[arm];
        let gathered: f64 = stats.iter().map(ArmStats::running_sum).sum();
        ledger.arms.push(arm);
        ledger.rewards.push(reward);
        ledger.theoretical.push(regret);
        ledger.empirical.push(t as f64 * best_mean - gathered);
    }
    Ok(ledger)
}

/// Pointwise mean regret across runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretCurve {
    pub runs: usize,
    pub mean_theoretical: Vec<f64>,
    pub mean_empirical: Vec<f64>,
    /// Population standard deviation of the theoretical regret.
    pub std_theoretical: Vec<f64>,
}

impl RegretCurve {
    pub fn horizon(&self) -> usize {
        self.mean_theoretical.len()
    }

    pub fn final_theoretical(&self) -> f64 {
        self.mean_theoretical.last().copied().unwrap_or(0.0)
    }

    pub fn final_empirical(&self) -> f64 {
        self.mean_empirical.last().copied().unwrap_or(0.0)
    }

    pub fn final_std(&self) -> f64 {
        self.std_theoretical.last().copied().unwrap_or(0.0)
    }
}

/// Streaming accumulator over ledgers of a common horizon. Folding order
/// determines the floating-point result, so callers add ledgers in run order.
#[derive(Debug, Clone)]
pub struct LedgerAggregate {
    horizon: usize,
    runs: usize,
    theo_mean: Vec<f64>,
    theo_m2: Vec<f64>,
    emp_mean: Vec<f64>,
    reward_sum: Vec<f64>,
    pulls: Vec<u64>,
    final_theoretical: Vec<f64>,
    final_empirical: Vec<f64>,
}

impl LedgerAggregate {
    pub fn new(horizon: usize) -> Self {
        LedgerAggregate {
            horizon,
            runs: 0,
            theo_mean: vec![0.0; horizon],
            theo_m2: vec![0.0; horizon],
            emp_mean: vec![0.0; horizon],
            reward_sum: vec![0.0; horizon],
            pulls: Vec::new(),
            final_theoretical: Vec::new(),
            final_empirical: Vec::new(),
        }
    }

    pub fn add(&mut self, ledger: &RegretLedger) -> Result<()> {
        if ledger.horizon() != self.horizon {
            return Err(BanditError::HorizonMismatch {
                expected: self.horizon,
                found: ledger.horizon(),
            });
        }
        self.runs += 1;
        let n = self.runs as f64;
        for t in 0..self.horizon {
            let x = ledger.theoretical[t];
            let d = x - self.theo_mean[t];
            self.theo_mean[t] += d / n;
            self.theo_m2[t] += d * (x - self.theo_mean[t]);
            self.emp_mean[t] += (ledger.empirical[t] - self.emp_mean[t]) / n;
            self.reward_sum[t] += ledger.rewards[t];
        }
        if self.pulls.len() < ledger.pulls.len() {
            self.pulls.resize(ledger.pulls.len(), 0);
        }
        for (total, p) in self.pulls.iter_mut().zip(&ledger.pulls) {
            *total += p;
        }
        self.final_theoretical.push(ledger.final_theoretical());
        self.final_empirical.push(ledger.final_empirical());
        Ok(())
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn curve(&self) -> RegretCurve {
        let n = self.runs.max(1) as f64;
        RegretCurve {
            runs: self.runs,
            mean_theoretical: self.theo_mean.clone(),
            mean_empirical: self.emp_mean.clone(),
            std_theoretical: self.theo_m2.iter().map(|m2| (m2 / n).max(0.0).sqrt()).collect(),
        }
    }

    /// Per-step rewards averaged across runs, sorted increasingly.
    pub fn sorted_reward_cdf(&self) -> Vec<f64> {
        let n = self.runs.max(1) as f64;
        let mut mean: Vec<f64> = self.reward_sum.iter().map(|s| s / n).collect();
        mean.sort_by(f64::total_cmp);
        mean
    }

    /// Total pulls per arm across runs.
    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    /// Final theoretical regret of each run, in run order.
    pub fn final_theoretical(&self) -> &[f64] {
        &self.final_theoretical
    }

    pub fn final_empirical(&self) -> &[f64] {
        &self.final_empirical
    }
}

fn check_horizons(ledgers: &[RegretLedger]) -> Result<usize> {
    let first = ledgers
        .first()
        .ok_or_else(|| BanditError::Config("at least one ledger required".into()))?;
    let horizon = first.horizon();
    if let Some(bad) = ledgers.iter().find(|l| l.horizon() != horizon) {
        return Err(BanditError::HorizonMismatch {
            expected: horizon,
            found: bad.horizon(),
        });
    }
    Ok(horizon)
}

fn aggregate_all(ledgers: &[RegretLedger]) -> Result<LedgerAggregate> {
    let mut agg = LedgerAggregate::new(check_horizons(ledgers)?);
    for l in ledgers {
        agg.add(l)?;
    }
    Ok(agg)
}

pub fn aggregate_regret(ledgers: &[RegretLedger]) -> Result<RegretCurve> {
    Ok(aggregate_all(ledgers)?.curve())
}

/// Mean reward at each step across runs, sorted increasingly. The low tail
/// shows how often poor arms were tried.
pub fn sorted_reward_cdf(ledgers: &[RegretLedger]) -> Result<Vec<f64>> {
    Ok(aggregate_all(ledgers)?.sorted_reward_cdf())
}

pub fn sorted_final_regret(per_instance: &[f64]) -> Vec<f64> {
    let mut v = per_instance.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Runs every episode of `cfg`, returning ledgers in run order.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<RegretLedger>> {
    cfg.validate()?;
    (0..cfg.n_runs as u64)
        .into_par_iter()
        .map(|run| run_episode(cfg, run))
        .collect()
}

/// Runs every episode of `cfg` and folds them into an aggregate without
/// keeping the ledgers.
pub fn run_aggregate(cfg: &RunConfig) -> Result<LedgerAggregate> {
    cfg.validate()?;
    let mut agg = LedgerAggregate::new(cfg.horizon as usize);
    let runs: Vec<u64> = (0..cfg.n_runs as u64).collect();
    for chunk in runs.chunks(MERGE_CHUNK) {
        let ledgers: Vec<RegretLedger> = chunk
            .par_iter()
            .map(|&run| run_episode(cfg, run))
            .collect::<Result<_>>()?;
        for l in &ledgers {
            agg.add(l)?;
        }
    }
    Ok(agg)
}

/// Parameter names a grid may vary for `policy`.
pub fn grid_parameters(policy: &PolicyConfig) -> &'static [&'static str] {
    match policy {
        PolicyConfig::Ucb { .. } => &["c"],
        PolicyConfig::Min => &[],
        PolicyConfig::Marab { .. } => &["c", "alpha"],
        PolicyConfig::Mvlcb { .. } => &["rho", "delta"],
        PolicyConfig::Expexp { .. } => &["rho", "tau"],
    }
}

/// Returns `policy` with parameter `name` set to `value`.
pub fn with_parameter(policy: PolicyConfig, name: &str, value: f64) -> Result<PolicyConfig> {
    let unknown = || {
        BanditError::invalid(
            name,
            format!(
                "unknown parameter for {}; allowed: {:?}",
                policy.label(),
                grid_parameters(&policy)
            ),
        )
    };
    Ok(match (policy, name) {
        (PolicyConfig::Ucb { .. }, "c") => PolicyConfig::Ucb { c: value },
        (PolicyConfig::Marab { alpha, .. }, "c") => PolicyConfig::Marab { c: value, alpha },
        (PolicyConfig::Marab { c, .. }, "alpha") => PolicyConfig::Marab { c, alpha: value },
        (PolicyConfig::Mvlcb { delta, .. }, "rho") => PolicyConfig::Mvlcb { rho: value, delta },
        (PolicyConfig::Mvlcb { rho, .. }, "delta") => PolicyConfig::Mvlcb { rho, delta: value },
        (PolicyConfig::Expexp { tau, .. }, "rho") => PolicyConfig::Expexp { rho: value, tau },
        (PolicyConfig::Expexp { rho, .. }, "tau") => {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(BanditError::invalid(
                    "tau",
                    format!("must be a non-negative integer, got {value}"),
                ));
            }
            PolicyConfig::Expexp { rho, tau: value as u64 }
        }
        _ => return Err(unknown()),
    })
}

/// One cell of a parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub params: Vec<(String, f64)>,
    pub policy: PolicyConfig,
    pub curve: RegretCurve,
}

/// Grid parameter assignments and the policy they produce.
pub type GridCell = (Vec<(String, f64)>, PolicyConfig);

/// Cartesian product of `grid` applied to `policy`, first entry varying
/// slowest. An empty grid yields `policy` alone.
pub fn expand_grid(policy: PolicyConfig, grid: &[(String, Vec<f64>)]) -> Result<Vec<GridCell>> {
    let mut cells: Vec<GridCell> = vec![(Vec::new(), policy)];
    for (name, values) in grid {
        // probe the name even when the value list is empty
        with_parameter(policy, name, values.first().copied().unwrap_or(1.0))?;
        let mut next = Vec::with_capacity(cells.len() * values.len());
        for (params, cell_policy) in &cells {
            for &v in values {
                let mut p = params.clone();
                p.push((name.clone(), v));
                next.push((p, with_parameter(*cell_policy, name, v)?));
            }
        }
        cells = next;
    }
    Ok(cells)
}

/// Aggregates every cell of `expand_grid(base.policy, grid)`.
pub fn sweep(base: &RunConfig, grid: &[(String, Vec<f64>)]) -> Result<Vec<SweepCell>> {
    expand_grid(base.policy, grid)?
        .into_iter()
        .map(|(params, policy)| {
            let cfg = RunConfig { policy, ..base.clone() };
            let agg = run_aggregate(&cfg)?;
            Ok(SweepCell {
                params,
                policy,
                curve: agg.curve(),
            })
        })
        .collect()
}
