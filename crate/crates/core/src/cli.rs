//! The `riskbandit` command line.
//!
//! ```text
//! riskbandit run         --spec exp.toml [--out DIR] [--seed N] [--format csv|json]
//! riskbandit sweep       --spec exp.toml [--out DIR] [--seed N] [--format csv|json]
//! riskbandit bound       --spec inputs.json        # `-` reads stdin
//! riskbandit check-lemma [--arm CENTER,RADIUS]... [--t N] [--epsilon E] [--trials N] [--seed N]
//! ```
//!
//! `--threads N` (or `RISKBANDIT_THREADS`) sizes the worker pool. Exit codes:
//! 0 success, 1 invalid input, 2 failure while running.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::distributions::ArmSpec;
use crate::error::{BanditError, Result};
use crate::experiment::ExperimentSpec;
use crate::generators::{gen_proof_of_concept, ProofOfConceptParams};
use crate::output::{write_report, Format, Report};
use crate::rng::rng_from_seed;
use crate::theory::{
    lemma41_check, lemma42_check_arms, prop43_regret_bound, prop44_regret_bound, ucb_regret_bound, BoundInputs,
};

#[derive(Debug, Parser)]
#[command(name = "riskbandit", version, about = "Risk-aware multi-armed bandit experiments")]
pub struct Cli {
    /// Worker threads; 0 or unset uses every available core.
    #[arg(long, global = true, env = "RISKBANDIT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every policy of an experiment and write regret curves.
    Run(ExperimentArgs),
    /// Run every grid cell and write one summary row per cell.
    Sweep(ExperimentArgs),
    /// Evaluate the regret bounds for a JSON document of bound inputs.
    Bound(BoundArgs),
    /// Monte-Carlo check of the minimum-reward tail bound.
    CheckLemma(LemmaArgs),
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment document (TOML).
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory; overrides `out` in the spec (default `results`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the spec.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// JSON bound inputs, or `-` for stdin.
    #[arg(long, default_value = "-")]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    /// Uniform arm as `CENTER,RADIUS`; repeat for several arms. Without any,
    /// the default proof-of-concept problem is used.
    #[arg(long = "arm", value_parser = parse_arm)]
    pub arms: Vec<ArmSpec>,
    #[arg(long, default_value_t = 10)]
    pub t: u64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_arm(s: &str) -> std::result::Result<ArmSpec, String> {
    let (c, r) = s
        .split_once(',')
        .ok_or_else(|| format!("expected CENTER,RADIUS, got `{s}`"))?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    ArmSpec::uniform(parse(c)?, parse(r)?).map_err(|e| e.to_string())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

/// Runs a parsed command inside a pool of `cli.threads` workers.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| BanditError::Io(format!("cannot start worker pool: {e}")))?;
    let printed = pool.install(|| match &cli.command {
        Command::Run(args) => cmd_experiment(args, Report::Run).map(|()| None),
        Command::Sweep(args) => cmd_experiment(args, Report::Sweep).map(|()| None),
        Command::Bound(args) => cmd_bound(args).map(Some),
        Command::CheckLemma(args) => cmd_check_lemma(args).map(Some),
    })?;
    match printed {
        Some(value) => {
            let text = serde_json::to_string_pretty(&value).expect("json value serializes");
            writeln!(out, "{text}").map_err(|e| BanditError::Io(e.to_string()))
        }
        None => Ok(()),
    }
}

fn cmd_experiment(args: &ExperimentArgs, report: Report) -> Result<()> {
    let start = Instant::now();
    let mut spec = ExperimentSpec::from_path(&args.spec)?;
    if args.seed.is_some() {
        spec.seed = args.seed;
    }
    if args.out.is_some() {
        spec.out = args.out.clone();
    }
    let exp = spec.resolve()?;
    let dir = exp.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    eprintln!(
        "riskbandit: {} cells, {} instance(s) x {} run(s), horizon {}",
        exp.policies.len(),
        exp.instances,
        exp.runs,
        exp.horizon
    );
    let mut outcomes = Vec::with_capacity(exp.policies.len());
    for cell in &exp.policies {
        let o = exp.execute_cell(cell)?;
        eprintln!(
            "  {}: final regret {:.4} (empirical {:.4})",
            cell.label,
            o.curve.final_theoretical(),
            o.curve.final_empirical()
        );
        outcomes.push(o);
    }
    for path in write_report(&dir, &exp, &outcomes, report, args.format, start.elapsed())? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_bound(args: &BoundArgs) -> Result<serde_json::Value> {
    let text = if args.spec.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| BanditError::Config(format!("cannot read stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(&args.spec)
            .map_err(|e| BanditError::Config(format!("cannot read {}: {e}", args.spec.display())))?
    };
    evaluate_bounds(&text)
}

/// Evaluates every bound for a JSON [`BoundInputs`] document. A bound whose
/// hypotheses fail is reported as `{"error": ...}`; the UCB bound is `null`
/// when no margin list is given.
pub fn evaluate_bounds(json_text: &str) -> Result<serde_json::Value> {
    let inputs: BoundInputs =
        serde_json::from_str(json_text).map_err(|e| BanditError::Config(format!("bound inputs: {e}")))?;
    let as_json = |r: Result<_>| match r {
        Ok(b) => serde_json::to_value(b).expect("bound serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let ucb = if inputs.delta_mu_list.is_empty() {
        serde_json::Value::Null
    } else {
        match ucb_regret_bound(&inputs.delta_mu_list, inputs.t) {
            Ok(b) => json!(b),
            Err(e) => json!({ "error": e.to_string() }),
        }
    };
    let prop43 = prop43_regret_bound(&inputs);
    let prop44 = prop44_regret_bound(&inputs);
    if let (Err(e), Err(_)) = (&prop43, &prop44) {
        return Err(e.clone());
    }
    Ok(json!({
        "inputs": inputs,
        "prop43": as_json(prop43),
        "prop44": as_json(prop44),
        "ucb": ucb,
    }))
}

fn cmd_check_lemma(args: &LemmaArgs) -> Result<serde_json::Value> {
    let arms = if args.arms.is_empty() {
        gen_proof_of_concept(&ProofOfConceptParams::default())?.arms().to_vec()
    } else {
        args.arms.clone()
    };
    let mut rng = rng_from_seed(args.seed);
    let (kind, check) = if arms.len() == 1 {
        (
            "single-arm",
            lemma41_check(&arms[0], args.t, args.epsilon, args.trials, &mut rng)?,
        )
    } else {
        (
            "multi-arm",
            lemma42_check_arms(&arms, args.t, args.epsilon, args.trials, &mut rng)?,
        )
    };
    let mut value = serde_json::to_value(&check).expect("check serializes");
    let obj = value.as_object_mut().expect("check is an object");
    obj.insert("check".into(), json!(kind));
    obj.insert("arms".into(), json!(arms.len()));
    obj.insert("t".into(), json!(args.t));
    obj.insert("epsilon".into(), json!(args.epsilon));
    obj.insert("seed".into(), json!(args.seed));
    Ok(value)
}
