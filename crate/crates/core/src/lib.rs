//! Risk-aware multi-armed bandits.
//!
//! The crate simulates stochastic bandits with rewards in `[0, 1]` and
//! compares risk-neutral and risk-aware arm selection:
//!
//! - **MaRaB** selects the arm with the best lower confidence bound on its
//!   empirical conditional value at risk (CVaR) at level `alpha`.
//! - **MIN**, its limit as `alpha -> 0` with no confidence term, selects the
//!   arm with the largest observed minimum reward.
//! - **UCB**, **MV-LCB** and **ExpExp** serve as baselines.
//!
//! Modules, bottom up: [`distributions`] (arm laws and their analytic
//! quantities), [`estimators`] (per-arm statistics), [`policies`],
//! [`generators`] (problem families), [`harness`] (seeded episodes and regret
//! aggregation), [`theory`] (regret bounds and tail-inequality checks) and
//! [`cli`] (the `riskbandit` command line).

pub mod cli;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod generators;
pub mod harness;
pub mod output;
pub mod policies;
pub mod rng;
pub mod theory;

pub use distributions::{ArmSpec, GaussianComponent};
pub use error::{BanditError, Result};
pub use estimators::ArmStats;
pub use generators::BanditProblem;
pub use harness::{RegretCurve, RegretLedger, RunConfig};
pub use policies::{ArmSelector, PolicyConfig, PolicyState};
