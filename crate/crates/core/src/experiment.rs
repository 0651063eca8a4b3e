//! Declarative experiment documents and their execution.
//!
//! An experiment is a TOML document:
//!
//! ```toml
//! seed = 2013
//! horizon = 2000
//! runs = 40
//! instances = 1          # problem instances per family (default 1)
//! out = "results/poc"    # optional, `--out` overrides
//!
//! [problem]
//! generator = "proof-of-concept"   # or mixture, csv, battery, explicit
//! arms = 20
//!
//! [[policies]]
//! kind = "marab"
//! c = 1e-6
//! alpha = 0.1
//! grid = { c = [1e-6, 1e-3, 1.0], alpha = [0.001, 0.01, 0.1] }
//! ```
//!
//! Unknown keys are rejected. Grid keys expand in alphabetical order, the
//! first varying slowest. MV-LCB `delta` defaults to `1/T^2` and ExpExp `tau`
//! to `K (T/14)^(2/3)`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::ArmSpec;
use crate::error::{BanditError, Result};
use crate::generators::{
    gen_battery_synthetic, gen_from_matrix, gen_mixture, gen_proof_of_concept, read_matrix_csv, BanditProblem,
    BatterySimConfig, ProofOfConceptParams,
};
use crate::harness::{expand_grid, run_episode, LedgerAggregate, RegretCurve, RegretLedger, RunConfig, MERGE_CHUNK};
use crate::policies::{default_expexp_tau, default_mvlcb_delta, PolicyConfig};
use crate::rng::{instance_run_seed, instance_seed, rng_from_seed};

fn one() -> usize {
    1
}

fn twenty() -> usize {
    20
}

fn default_realizations() -> usize {
    117
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub seed: Option<u64>,
    pub horizon: u64,
    pub runs: usize,
    #[serde(default = "one")]
    pub instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub random_ties: bool,
    pub problem: ProblemSpec,
    pub policies: Vec<PolicySpec>,
}

/// Problem family and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    ProofOfConcept(ProofOfConceptParams),
    Mixture {
        #[serde(default = "twenty")]
        arms: usize,
    },
    /// One arm per CSV row; relative paths resolve against the spec file.
    Csv {
        path: PathBuf,
        #[serde(default)]
        rescale: bool,
    },
    Battery {
        #[serde(default = "twenty")]
        arms: usize,
        #[serde(default = "default_realizations")]
        realizations: usize,
        #[serde(default)]
        sim: BatterySimConfig,
    },
    Explicit {
        arms: Vec<ArmSpec>,
    },
}

/// Parameter grid: name to list of values.
pub type Grid = BTreeMap<String, Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolicySpec {
    Ucb {
        c: f64,
        #[serde(default, skip_serializing_if = "Grid::is_empty")]
        grid: Grid,
    },
    Min {
        #[serde(default, skip_serializing_if = "Grid::is_empty")]
        grid: Grid,
    },
    Marab {
        c: f64,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Grid::is_empty")]
        grid: Grid,
    },
    Mvlcb {
        rho: f64,
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Grid::is_empty")]
        grid: Grid,
    },
    Expexp {
        rho: f64,
        tau: Option<u64>,
        #[serde(default, skip_serializing_if = "Grid::is_empty")]
        grid: Grid,
    },
}

impl PolicySpec {
    /// Base configuration with horizon-dependent defaults filled in.
    pub fn resolve(&self, k: usize, horizon: u64) -> PolicyConfig {
        match *self {
            PolicySpec::Ucb { c, .. } => PolicyConfig::Ucb { c },
            PolicySpec::Min { .. } => PolicyConfig::Min,
            PolicySpec::Marab { c, alpha, .. } => PolicyConfig::Marab { c, alpha },
            PolicySpec::Mvlcb { rho, delta, .. } => PolicyConfig::Mvlcb {
                rho,
                delta: delta.unwrap_or_else(|| default_mvlcb_delta(horizon)),
            },
            PolicySpec::Expexp { rho, tau, .. } => PolicyConfig::Expexp {
                rho,
                tau: tau.unwrap_or_else(|| default_expexp_tau(k, horizon)),
            },
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            PolicySpec::Ucb { grid, .. }
            | PolicySpec::Min { grid }
            | PolicySpec::Marab { grid, .. }
            | PolicySpec::Mvlcb { grid, .. }
            | PolicySpec::Expexp { grid, .. } => grid,
        }
    }
}

/// One concrete policy to run, possibly a grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyCell {
    /// Index of the policy entry in the document.
    pub entry: usize,
    pub label: String,
    pub params: Vec<(String, f64)>,
    pub config: PolicyConfig,
}

/// Fully resolved experiment, echoed into every output for provenance.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedExperiment {
    pub seed: u64,
    pub horizon: u64,
    pub runs: usize,
    pub instances: usize,
    pub random_ties: bool,
    pub arms: usize,
    pub problem: ProblemSpec,
    pub policies: Vec<PolicyCell>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub problems: Vec<Arc<BanditProblem>>,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BanditError::Config(e.to_string()))
    }

    /// Reads a spec; relative CSV paths are resolved against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BanditError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut spec = Self::from_toml_str(&text)?;
        if let ProblemSpec::Csv { path: csv, .. } = &mut spec.problem {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(spec)
    }

    /// Validates the document and builds every problem instance.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let seed = self
            .seed
            .ok_or_else(|| BanditError::invalid("seed", "missing; set `seed` in the spec or pass --seed"))?;
        if self.runs == 0 {
            return Err(BanditError::invalid("runs", "must be >= 1"));
        }
        if self.instances == 0 {
            return Err(BanditError::invalid("instances", "must be >= 1"));
        }
        if self.policies.is_empty() {
            return Err(BanditError::invalid("policies", "at least one policy required"));
        }
        let problems = build_problems(&self.problem, seed, self.instances)?;
        let k = problems[0].k();
        if self.horizon < k as u64 {
            return Err(BanditError::invalid(
                "horizon",
                format!("must be >= number of arms {k}, got {}", self.horizon),
            ));
        }
        let mut policies = Vec::new();
        for (entry, spec) in self.policies.iter().enumerate() {
            let base = spec.resolve(k, self.horizon);
            let grid: Vec<(String, Vec<f64>)> = spec.grid().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
            for (params, config) in expand_grid(base, &grid)? {
                config
                    .validate(k, Some(self.horizon))
                    .map_err(|e| BanditError::Config(format!("policies[{entry}] {}: {e}", config.label())))?;
                policies.push(PolicyCell {
                    entry,
                    label: config.label(),
                    params,
                    config,
                });
            }
        }
        Ok(ResolvedExperiment {
            seed,
            horizon: self.horizon,
            runs: self.runs,
            instances: self.instances,
            random_ties: self.random_ties,
            arms: k,
            problem: self.problem.clone(),
            policies,
            out: self.out.clone(),
            problems,
        })
    }
}

/// Builds `instances` problems. Random families draw instance `i` from
/// `instance_seed(seed, i)`; deterministic ones repeat the same problem.
pub fn build_problems(spec: &ProblemSpec, seed: u64, instances: usize) -> Result<Vec<Arc<BanditProblem>>> {
    let repeat = |p: BanditProblem| {
        let p = Arc::new(p);
        Ok(vec![p; instances])
    };
    match spec {
        ProblemSpec::ProofOfConcept(params) => repeat(gen_proof_of_concept(params)?),
        ProblemSpec::Explicit { arms } => repeat(BanditProblem::new(arms.clone())?),
        ProblemSpec::Csv { path, rescale } => repeat(gen_from_matrix(&read_matrix_csv(path)?, *rescale)?),
        ProblemSpec::Mixture { arms } => (0..instances as u64)
            .into_par_iter()
            .map(|i| gen_mixture(*arms, &mut rng_from_seed(instance_seed(seed, i))).map(Arc::new))
            .collect(),
        ProblemSpec::Battery {
            arms,
            realizations,
            sim,
        } => (0..instances as u64)
            .into_par_iter()
            .map(|i| {
                let rows =
                    gen_battery_synthetic(*arms, *realizations, sim, &mut rng_from_seed(instance_seed(seed, i)))?;
                gen_from_matrix(&rows, false).map(Arc::new)
            })
            .collect(),
    }
}

/// Aggregated results of one policy cell over every instance and run.
#[derive(Debug, Clone)]
pub struct PolicyOutcome {
    pub cell: PolicyCell,
    pub curve: RegretCurve,
    pub reward_cdf: Vec<f64>,
    /// Mean final regret of each instance over its runs, in instance order.
    pub instance_final_theoretical: Vec<f64>,
    pub instance_final_empirical: Vec<f64>,
    /// Total pulls per arm across every run.
    pub pulls: Vec<u64>,
}

impl ResolvedExperiment {
    /// Runs one policy cell. Work units are `(instance, run)` pairs,
    /// evaluated in parallel by chunks and merged in index order.
    pub fn execute_cell(&self, cell: &PolicyCell) -> Result<PolicyOutcome> {
        let configs: Vec<RunConfig> = self
            .problems
            .iter()
            .enumerate()
            .map(|(i, problem)| RunConfig {
                problem: problem.clone(),
                policy: cell.config,
                horizon: self.horizon,
                seed: instance_run_seed(self.seed, i as u64),
                n_runs: self.runs,
                random_ties: self.random_ties,
            })
            .collect();
        let units: Vec<(usize, u64)> = (0..self.instances)
            .flat_map(|i| (0..self.runs as u64).map(move |r| (i, r)))
            .collect();
        let mut agg = LedgerAggregate::new(self.horizon as usize);
        let mut theo_sum = vec![0.0; self.instances];
        let mut emp_sum = vec![0.0; self.instances];
        for chunk in units.chunks(MERGE_CHUNK) {
            let ledgers: Vec<RegretLedger> = chunk
                .par_iter()
                .map(|&(i, run)| run_episode(&configs[i], run))
                .collect::<Result<_>>()?;
            for (&(i, _), ledger) in chunk.iter().zip(&ledgers) {
                agg.add(ledger)?;
                theo_sum[i] += ledger.final_theoretical();
                emp_sum[i] += ledger.final_empirical();
            }
        }
        let runs = self.runs as f64;
        Ok(PolicyOutcome {
            cell: cell.clone(),
            curve: agg.curve(),
            reward_cdf: agg.sorted_reward_cdf(),
            instance_final_theoretical: theo_sum.iter().map(|s| s / runs).collect(),
            instance_final_empirical: emp_sum.iter().map(|s| s / runs).collect(),
            pulls: agg.pulls().to_vec(),
        })
    }

    pub fn execute(&self) -> Result<Vec<PolicyOutcome>> {
        self.policies.iter().map(|c| self.execute_cell(c)).collect()
    }
}
