//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riskbandit_core::experiment::ExperimentSpec;
use riskbandit_core::generators::{gen_proof_of_concept, ProofOfConceptParams};
use riskbandit_core::harness::run_aggregate;
use riskbandit_core::policies::{marab_index, min_index};
use riskbandit_core::rng::{instance_run_seed, rng_from_seed};
use riskbandit_core::theory::{lemma41_check, prop43_regret_bound, prop44_regret_bound, BoundInputs};
use riskbandit_core::{ArmSpec, ArmStats, PolicyConfig, RunConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// MaRaB with `C = 0` and `alpha <= 1/n` equals MIN exactly.
fn marab_min_limit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=50);
        let rewards: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let stats = ArmStats::from_rewards(&rewards).unwrap();
        let alpha = rng.random_range(1e-6..=1.0) / n as f64;
        let t = rng.random_range(1..=10_000);
        if marab_index(&stats, t, 0.0, alpha).unwrap() != min_index(&stats).unwrap() {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches}/100 fixtures differ"))
}

/// Naive CVaR: sort, then average the `ceil(j n / 20)` smallest values, with
/// the ceiling taken in integer arithmetic.
fn naive_cvar(values: &[f64], j: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = (j * v.len()).div_ceil(20).max(1);
    v[..m].iter().sum::<f64>() / m as f64
}

fn cvar_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=50);
        // coarse values so that ties are frequent
        let values: Vec<f64> = (0..n).map(|_| (rng.random_range(0..=20) as f64) / 20.0).collect();
        let stats = ArmStats::from_rewards(&values).unwrap();
        for j in 1..=20 {
            let alpha = j as f64 / 20.0;
            if stats.empirical_cvar(alpha).unwrap() != naive_cvar(&values, j) {
                mismatches += 1;
            }
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches}/20000 (multiset, alpha) pairs differ"),
    )
}

fn cvar_consistency() -> Outcome {
    let u = ArmSpec::uniform(0.5, 0.5).unwrap();
    let mut good = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let mut rng = rng_from_seed(seed);
        let draws: Vec<f64> = (0..10_000).map(|_| u.sample(&mut rng).unwrap()).collect();
        let err = (ArmStats::from_rewards(&draws).unwrap().empirical_cvar(0.2).unwrap() - 0.1).abs();
        worst = worst.max(err);
        if err <= 0.02 {
            good += 1;
        }
    }
    check(
        good >= 95,
        format!("{good}/100 seeds within 0.02 (worst error {worst:.4})"),
    )
}

fn lemma_tail_bound() -> Outcome {
    let spec = ArmSpec::uniform(0.5, 0.5).unwrap();
    let c = lemma41_check(&spec, 10, 0.1, 100_000, &mut rng_from_seed(4)).unwrap();
    let exact = 0.9f64.powi(10);
    let bound = (-1.0f64).exp();
    check(
        (c.empirical_prob - exact).abs() <= 0.005 && c.empirical_prob <= bound && (c.bound - bound).abs() < 1e-12,
        format!(
            "empirical {:.4}, exact {exact:.4}, bound {:.4}",
            c.empirical_prob, c.bound
        ),
    )
}

fn poc_run(policy: PolicyConfig, runs: usize, seed: u64) -> riskbandit_core::harness::LedgerAggregate {
    let problem = Arc::new(gen_proof_of_concept(&ProofOfConceptParams::default()).unwrap());
    run_aggregate(&RunConfig::new(problem, policy, 2000, seed, runs)).unwrap()
}

fn min_plateau() -> Outcome {
    let curve = poc_run(PolicyConfig::Min, 40, 5).curve();
    let r500 = curve.mean_theoretical[499];
    let r2000 = curve.mean_theoretical[1999];
    check(
        r2000 - r500 <= 0.01 * r500 + 1.0,
        format!("R_500 = {r500:.4}, R_2000 = {r2000:.4}"),
    )
}

fn marab_c_insensitivity() -> Outcome {
    let mut finals = Vec::new();
    for alpha in [0.001, 0.01, 0.1] {
        for i in -6..=3 {
            let c = 10f64.powi(i);
            finals.push(
                poc_run(PolicyConfig::Marab { c, alpha }, 40, 6)
                    .curve()
                    .final_theoretical(),
            );
        }
    }
    let lo = finals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finals.iter().copied().fold(0.0, f64::max);
    check(
        hi <= 2.0 * lo,
        format!(
            "{} cells, final regret in [{lo:.4}, {hi:.4}], ratio {:.3}",
            finals.len(),
            hi / lo
        ),
    )
}

/// Least-squares fit `R_t = b + c log t`; returns `(b, c, R^2)`.
fn log_fit(t: &[f64], r: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let x: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = r.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(r).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let c = sxy / sxx;
    let b = my - c * mx;
    let ss_res: f64 = x.iter().zip(r).map(|(a, y)| (y - b - c * a).powi(2)).sum();
    let ss_tot: f64 = r.iter().map(|y| (y - my).powi(2)).sum();
    (b, c, 1.0 - ss_res / ss_tot)
}

fn ucb_log_growth() -> Outcome {
    let spec = ExperimentSpec::from_toml_str(
        r#"
seed = 7
horizon = 2000
runs = 40
instances = 10
[problem]
generator = "mixture"
arms = 20
[[policies]]
kind = "ucb"
c = 1e-3
"#,
    )
    .unwrap();
    let exp = spec.resolve().unwrap();
    let out = exp.execute().unwrap();
    let curve = &out[0].curve;
    let t: Vec<f64> = (200..=2000).map(|v| v as f64).collect();
    let r: Vec<f64> = (200..=2000).map(|v| curve.mean_theoretical[v - 1]).collect();
    let (b, c, r2) = log_fit(&t, &r);
    check(r2 >= 0.9, format!("R_t ~ {b:.2} + {c:.2} log t, R^2 = {r2:.4}"))
}

fn bound_evaluators() -> Outcome {
    let example = BoundInputs {
        k: 2,
        a: 1.0,
        delta_mu_max: 0.1,
        delta_a_min: 0.1,
        t: 100,
        delta: 0.05,
        delta_mu_list: vec![],
        optimal_arms: 1,
    };
    let hp = prop43_regret_bound(&example).unwrap().high_prob_bound;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    let mut reverse = 0;
    for _ in 0..1000 {
        let delta_a_min = rng.random_range(1e-3..1.0);
        let input = BoundInputs {
            k: rng.random_range(2..=50),
            a: rng.random_range(0.1..100.0),
            delta_mu_max: rng.random_range(1e-4..=1.0) * delta_a_min,
            delta_a_min,
            t: rng.random_range(1..=100_000),
            delta: rng.random_range(1e-6..0.5),
            delta_mu_list: vec![],
            optimal_arms: 1,
        };
        let p43 = prop43_regret_bound(&input).unwrap().high_prob_bound;
        let p44 = prop44_regret_bound(&input).unwrap().high_prob_bound;
        if p44 > p43 {
            violations += 1;
        }
        if p43 <= p44 {
            reverse += 1;
        }
    }
    check(
        (hp - 8.394).abs() <= 1e-3 && violations == 0,
        format!(
            "example {hp:.4}; {violations}/1000 random inputs with prop44 > prop43 \
             (prop43 <= prop44 on {reverse}/1000: the margin ratio multiplies prop43 and is <= 1 here)"
        ),
    )
}

fn theory_simulation_link() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for i in 0..20 {
        let params = ProofOfConceptParams {
            delta_max: rng.random_range(0.01..=0.1),
            r_max: rng.random_range(0.1..=0.39),
            ..ProofOfConceptParams::default()
        };
        let problem = Arc::new(gen_proof_of_concept(&params).unwrap());
        let cfg = RunConfig::new(problem.clone(), PolicyConfig::Min, 2000, instance_run_seed(9, i), 40);
        let curve = run_aggregate(&cfg).unwrap().curve();
        let inputs = BoundInputs::from_problem(&problem, 2000, 0.05).unwrap();
        let bound = prop44_regret_bound(&inputs).unwrap().expectation_bound.unwrap();
        let observed = curve.final_theoretical().max(curve.final_empirical());
        worst = worst.max(observed / bound);
        if observed > bound {
            failures += 1;
        }
    }
    check(
        failures == 0,
        format!("{failures}/20 problems above the bound; largest regret/bound ratio {worst:.4}"),
    )
}

fn run_cli(spec: &Path, out: &Path, threads: &str) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_riskbandit"))
        .args(["run", "--spec"])
        .arg(spec)
        .arg("--out")
        .arg(out)
        .args(["--threads", threads])
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("riskbandit exited with {status}"))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = dir.path().join("spec.toml");
    std::fs::write(
        &spec,
        r#"
seed = 10
horizon = 500
runs = 24
instances = 6
[problem]
generator = "mixture"
arms = 8
[[policies]]
kind = "ucb"
c = 0.1
[[policies]]
kind = "marab"
c = 1e-3
alpha = 0.1
[[policies]]
kind = "mvlcb"
rho = 1.0
[[policies]]
kind = "expexp"
rho = 1.0
"#,
    )
    .map_err(|e| e.to_string())?;
    let runs = [("a", "8"), ("b", "8"), ("c", "1")];
    for (name, threads) in runs {
        run_cli(&spec, &dir.path().join(name), threads)?;
    }
    let mut compared = 0;
    for file in ["regret_curve.csv", "reward_cdf.csv", "final_regret.csv"] {
        let a = std::fs::read(dir.path().join("a").join(file)).map_err(|e| e.to_string())?;
        for other in ["b", "c"] {
            let b = std::fs::read(dir.path().join(other).join(file)).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{file} differs between run a and run {other}"));
            }
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} CSV pairs byte-identical (repeat run, --threads 8 vs 1)"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "1 MaRaB with C=0, small alpha equals MIN",
            Duration::from_secs(1),
            marab_min_limit,
        ),
        (
            "2 empirical CVaR matches sort-and-average oracle",
            Duration::from_secs(5),
            cvar_oracle,
        ),
        (
            "3 empirical CVaR(0.2) of U[0,1] within 0.02 of 0.1",
            Duration::from_secs(10),
            cvar_consistency,
        ),
        (
            "4 minimum-reward tail probability and bound",
            Duration::from_secs(5),
            lemma_tail_bound,
        ),
        (
            "5 MIN regret plateaus on the proof-of-concept problem",
            Duration::from_secs(30),
            min_plateau,
        ),
        (
            "6 MaRaB final regret within 2x across C and alpha",
            Duration::from_secs(300),
            marab_c_insensitivity,
        ),
        (
            "7 UCB regret grows logarithmically on mixtures",
            Duration::from_secs(300),
            ucb_log_growth,
        ),
        (
            "8 bound evaluators: example value and ordering",
            Duration::from_secs(1),
            bound_evaluators,
        ),
        (
            "9 MIN regret below the expectation bound",
            Duration::from_secs(120),
            theory_simulation_link,
        ),
        (
            "10 CLI outputs are deterministic",
            Duration::from_secs(120),
            determinism,
        ),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.2?}, limit {limit:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {detail} [{:.2?}]",
            if ok { "PASS" } else { "FAIL" },
            elapsed
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
