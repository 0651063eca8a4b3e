//! Problem generators.

use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distributions::{ArmSpec, GaussianComponent};
use crate::error::{BanditError, Result};

/// K arms with cached analytic means, essential infima and margins.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditProblem {
    arms: Vec<ArmSpec>,
    means: Vec<f64>,
    infima: Vec<f64>,
    lower_bound_a: Option<f64>,
    best_mean_arm: usize,
    margins_mean: Vec<f64>,
    margins_min: Vec<f64>,
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl BanditProblem {
    /// Builds a problem, validating every arm and caching its analytic quantities.
    ///
    /// `A` is the smallest per-arm lower-bound constant when every arm has one.
    pub fn new(arms: Vec<ArmSpec>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(BanditError::Config(format!(
                "at least 2 arms required, got {}",
                arms.len()
            )));
        }
        for (i, arm) in arms.iter().enumerate() {
            arm.validate()
                .map_err(|e| BanditError::Config(format!("arm {}: {e}", i + 1)))?;
        }
        let means: Vec<f64> = arms.iter().map(ArmSpec::analytic_mean).collect();
        let infima: Vec<f64> = arms.iter().map(ArmSpec::essential_infimum).collect();
        let lower_bound_a = arms
            .iter()
            .map(ArmSpec::lower_bound_constant)
            .try_fold(f64::INFINITY, |acc, a| a.map(|a| acc.min(a)));
        let best_mean_arm = argmax_lowest(&means);
        let best_mean = means[best_mean_arm];
        let best_inf = infima.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let margins_mean = means.iter().map(|m| best_mean - m).collect();
        let margins_min = infima.iter().map(|a| best_inf - a).collect();
        Ok(BanditProblem {
            arms,
            means,
            infima,
            lower_bound_a,
            best_mean_arm,
            margins_mean,
            margins_min,
        })
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[ArmSpec] {
        &self.arms
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn infima(&self) -> &[f64] {
        &self.infima
    }

    pub fn lower_bound_a(&self) -> Option<f64> {
        self.lower_bound_a
    }

    pub fn best_mean_arm(&self) -> usize {
        self.best_mean_arm
    }

    pub fn best_mean(&self) -> f64 {
        self.means[self.best_mean_arm]
    }

    /// Index of the arm with the largest essential infimum (lowest index on ties).
    pub fn best_min_arm(&self) -> usize {
        argmax_lowest(&self.infima)
    }

    /// `max(means) - means[i]`.
    pub fn margins_mean(&self) -> &[f64] {
        &self.margins_mean
    }

    /// `max(infima) - infima[i]`.
    pub fn margins_min(&self) -> &[f64] {
        &self.margins_min
    }
}

/// Parameters of the uniform-segment family whose margins satisfy
/// `Delta_a,i >= Delta_mu,i` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProofOfConceptParams {
    pub arms: usize,
    pub mu_star: f64,
    pub a_star: f64,
    pub delta_max: f64,
    pub r_max: f64,
}

impl Default for ProofOfConceptParams {
    /// `mu* = 0.5`, `a* = mu* - 1e-3` and 20 arms; `delta_max = 0.05` and
    /// `r_max = 0.4` are local choices that keep every support inside `[0, 1]`.
    fn default() -> Self {
        ProofOfConceptParams {
            arms: 20,
            mu_star: 0.5,
            a_star: 0.499,
            delta_max: 0.05,
            r_max: 0.4,
        }
    }
}

/// Arm `i` (1-based) is uniform with center `mu* - (i-1)/(K-1) delta_max`
/// and radius `(mu* - a*) + (i-1)/(K-1) r_max`.
pub fn gen_proof_of_concept(p: &ProofOfConceptParams) -> Result<BanditProblem> {
    let k = p.arms;
    if k < 2 {
        return Err(BanditError::Config(format!("at least 2 arms required, got {k}")));
    }
    if !(p.a_star > 0.0 && p.a_star < p.mu_star) {
        return Err(BanditError::invalid(
            "a_star",
            format!(
                "need 0 < a_star < mu_star, got a_star={} mu_star={}",
                p.a_star, p.mu_star
            ),
        ));
    }
    if !(p.delta_max >= 0.0 && p.delta_max.is_finite()) {
        return Err(BanditError::invalid(
            "delta_max",
            format!("must be >= 0, got {}", p.delta_max),
        ));
    }
    if !(p.r_max >= 0.0 && p.r_max.is_finite()) {
        return Err(BanditError::invalid("r_max", format!("must be >= 0, got {}", p.r_max)));
    }
    let r1 = p.mu_star - p.a_star;
    let mut arms = Vec::with_capacity(k);
    for i in 0..k {
        let frac = i as f64 / (k - 1) as f64;
        let center = p.mu_star - frac * p.delta_max;
        let radius = r1 + frac * p.r_max;
        if center - radius < 0.0 || center + radius > 1.0 {
            return Err(BanditError::invalid(
                &format!("arm {}", i + 1),
                format!(
                    "support [{:.6}, {:.6}] escapes [0, 1]; lower delta_max or r_max",
                    center - radius,
                    center + radius
                ),
            ));
        }
        arms.push(ArmSpec::UniformSegment { center, radius });
    }
    let problem = BanditProblem::new(arms)?;
    debug_assert_eq!(problem.best_mean_arm(), 0);
    debug_assert_eq!(problem.best_min_arm(), 0);
    debug_assert!(problem
        .margins_min()
        .iter()
        .zip(problem.margins_mean())
        .all(|(a, m)| a + 1e-12 >= *m));
    Ok(problem)
}

/// Random truncated-Gaussian-mixture problem.
///
/// Per arm: floor `~ U[0, 0.05]`, component count `~ U{1..4}`, component
/// means `~ U[0, 1]`, standard deviations `~ U[0.12, 0.5]`, and weights drawn
/// as independent `U(0, 1]` values normalised to sum to one.
pub fn gen_mixture<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<BanditProblem> {
    if k < 2 {
        return Err(BanditError::Config(format!("at least 2 arms required, got {k}")));
    }
    let mut arms = Vec::with_capacity(k);
    for _ in 0..k {
        let floor = rng.random_range(0.0..=0.05);
        let n = rng.random_range(1..=4usize);
        let mut components: Vec<GaussianComponent> = (0..n)
            .map(|_| {
                let mean = rng.random_range(0.0..=1.0);
                let std = rng.random_range(0.12..=0.5);
                let weight = 1.0 - rng.random::<f64>();
                GaussianComponent { weight, mean, std }
            })
            .collect();
        let total: f64 = components.iter().map(|c| c.weight).sum();
        for c in &mut components {
            c.weight /= total;
        }
        arms.push(ArmSpec::mixture(floor, components)?);
    }
    BanditProblem::new(arms)
}

/// One resampled arm per row. With `rescale`, values are min-max mapped to
/// `[0, 1]` over the whole matrix first (a constant matrix maps to 0.5).
pub fn gen_from_matrix(rows: &[Vec<f64>], rescale: bool) -> Result<BanditProblem> {
    if rows.len() < 2 {
        return Err(BanditError::Config(format!(
            "at least 2 arms required, got {}",
            rows.len()
        )));
    }
    if let Some(i) = rows.iter().position(Vec::is_empty) {
        return Err(BanditError::Config(format!("row {} is empty", i + 1)));
    }
    let rows = if rescale { rescale_matrix(rows) } else { rows.to_vec() };
    let arms = rows
        .into_iter()
        .enumerate()
        .map(|(i, values)| ArmSpec::empirical(values).map_err(|e| BanditError::Config(format!("row {}: {e}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    BanditProblem::new(arms)
}

/// Min-max rescaling over every entry of the matrix.
pub fn rescale_matrix(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (lo, hi) = rows
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    rows.iter()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    if span > 0.0 {
                        ((v - lo) / span).clamp(0.0, 1.0)
                    } else {
                        0.5
                    }
                })
                .collect()
        })
        .collect()
}

/// Parses a reward matrix: one arm per line, comma-separated values, rows
/// of varying length allowed. Blank lines and lines starting with `#` are skipped.
pub fn parse_matrix_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut text = String::new();
    let mut reader = reader;
    reader
        .read_to_string(&mut text)
        .map_err(|e| BanditError::Config(format!("cannot read reward matrix: {e}")))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map_err(|_| {
                    BanditError::Config(format!("line {}: `{}` is not a number", lineno + 1, field.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file =
        std::fs::File::open(path).map_err(|e| BanditError::Config(format!("cannot open {}: {e}", path.display())))?;
    parse_matrix_csv(file)
}

/// Settings of the synthetic battery simulator.
///
/// Each realization simulates `steps` periods. Demand is
/// `max(0, base + amplitude sin(2 pi t / steps) + noise z_t)` with
/// `z_t ~ N(0, 1)`, shared by every strategy within a realization. The grid
/// covers demand up to `threshold`; anything above it must come from the
/// battery or is bought at unit price. Strategy `k` (1-based) releases the
/// fraction `k / n_arms` of the current charge whenever demand exceeds the
/// threshold, and released energy beyond the excess is lost. When demand is
/// at or below the threshold the spare grid capacity recharges the battery by
/// up to `recharge_rate`. The charge leaks by the factor `1 - leak` each
/// period. The reward of a realization is minus the purchase cost, and the
/// whole matrix is then min-max rescaled to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatterySimConfig {
    pub steps: usize,
    pub capacity: f64,
    pub initial_charge: f64,
    pub leak: f64,
    pub threshold: f64,
    pub recharge_rate: f64,
    pub demand_base: f64,
    pub demand_amplitude: f64,
    pub demand_noise: f64,
}

impl Default for BatterySimConfig {
    fn default() -> Self {
        BatterySimConfig {
            steps: 24,
            capacity: 1.0,
            initial_charge: 0.5,
            leak: 0.02,
            threshold: 0.6,
            recharge_rate: 0.15,
            demand_base: 0.5,
            demand_amplitude: 0.3,
            demand_noise: 0.2,
        }
    }
}

/// `n_arms x n_realizations` matrix of rescaled battery rewards.
pub fn gen_battery_synthetic<R: Rng + ?Sized>(
    n_arms: usize,
    n_realizations: usize,
    cfg: &BatterySimConfig,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if n_arms < 2 {
        return Err(BanditError::Config(format!("at least 2 arms required, got {n_arms}")));
    }
    if n_realizations == 0 {
        return Err(BanditError::invalid("n_realizations", "must be >= 1"));
    }
    let mut costs = vec![Vec::with_capacity(n_realizations); n_arms];
    for _ in 0..n_realizations {
        let demand: Vec<f64> = (0..cfg.steps)
            .map(|t| {
                let z: f64 = StandardNormal.sample(rng);
                let phase = 2.0 * std::f64::consts::PI * t as f64 / cfg.steps as f64;
                (cfg.demand_base + cfg.demand_amplitude * phase.sin() + cfg.demand_noise * z).max(0.0)
            })
            .collect();
        for (k, arm_costs) in costs.iter_mut().enumerate() {
            let fraction = (k + 1) as f64 / n_arms as f64;
            arm_costs.push(-simulate_battery(&demand, fraction, cfg));
        }
    }
    Ok(rescale_matrix(&costs))
}

fn simulate_battery(demand: &[f64], fraction: f64, cfg: &BatterySimConfig) -> f64 {
    let mut charge = cfg.initial_charge.min(cfg.capacity);
    let mut cost = 0.0;
    for &d in demand {
        charge *= 1.0 - cfg.leak;
        let excess = d - cfg.threshold;
        if excess > 0.0 {
            let released = fraction * charge;
            charge -= released;
            cost += (excess - released).max(0.0);
        } else {
            charge = (charge + cfg.recharge_rate.min(-excess)).min(cfg.capacity);
        }
    }
    cost
}
