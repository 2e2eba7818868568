//! `hamming-overfit`: seeded sweeps, bound reports, reduction checks and
//! exact tiny-instance values.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use num_traits::ToPrimitive;
use serde::Serialize;

use hamming_overfit::bounds::{exact_small_k1_accuracy, exhaustive_tiny_oracle};
use hamming_overfit::harness::float::format_g17;
use hamming_overfit::harness::{
    run_sweep, verify_reduction, write_csv_file, write_json, write_json_file, AttackId, CheckKind, ExperimentConfig,
    Labeling, ReductionConfig, ReductionReport, Verdict, SCHEMA,
};
use hamming_overfit::rng::derive_seed;
use hamming_overfit::{wrap_attack, Attack, BoundReport, Error, LargeAttack, SmallAttack, UniformGuess};

#[derive(Parser, Debug)]
#[command(
    name = "hamming-overfit",
    version,
    about = "Holdout overfitting attacks from accuracy queries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo sweep over the n × m × k grid with bound verdicts.
    Run(RunArgs),
    /// Print the bound report for every grid point as JSON lines.
    Bounds(GridArgs),
    /// Compare a wrapped attack on a fixed labeling with the plain attack on uniform labels.
    VerifyReduction(VerifyArgs),
    /// Exact mean accuracy over all m^n hidden sequences.
    OracleExact(ExactArgs),
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
}

impl GridArgs {
    fn points(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.n
            .iter()
            .flat_map(move |&n| self.m.iter().flat_map(move |&m| self.k.iter().map(move |&k| (n, m, k))))
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    attack: AttackId,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    wrap_permutation: bool,
    /// uniform, constant:L or file:PATH
    #[arg(long, default_value = "uniform")]
    labeling: String,
    #[arg(long)]
    universe_size: Option<u64>,
    #[arg(long)]
    force_t: Option<usize>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Fill the `ms` column with per-trial wall time (breaks byte-identical replay).
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    attack: AttackId,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// The fixed labeling: constant:L or file:PATH
    #[arg(long, default_value = "constant:1")]
    labeling: String,
    #[arg(long)]
    universe_size: Option<u64>,
    #[arg(long)]
    force_t: Option<usize>,
    /// Wrap with identity permutations; paired trials must then agree exactly.
    #[arg(long)]
    identity_hook: bool,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    /// small, large or random-baseline
    #[arg(long, default_value = "small")]
    attack: AttackId,
    #[command(flatten)]
    grid: GridArgs,
    /// Number of RNG seeds each hidden sequence is attacked with.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    wrap_permutation: bool,
    #[arg(long)]
    force_t: Option<usize>,
}

#[derive(Serialize)]
struct ReductionEnvelope<'a> {
    schema: &'static str,
    reports: &'a [ReductionReport],
}

#[derive(Serialize)]
struct ExactLine {
    attack: AttackId,
    wrapped: bool,
    n: usize,
    m: usize,
    k: usize,
    seeds: usize,
    accuracy: String,
    accuracy_float: String,
    exact_k1: Option<String>,
    agrees: Option<bool>,
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

fn verdict_code(v: Verdict) -> ExitCode {
    if v == Verdict::Fail {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_run(a: RunArgs) -> anyhow::Result<ExitCode> {
    let cfg = ExperimentConfig {
        attack: a.attack,
        n: a.grid.n,
        m: a.grid.m,
        k: a.grid.k,
        trials: a.trials,
        seed: a.seed,
        wrap_permutation: a.wrap_permutation,
        labeling: Labeling::parse(&a.labeling)?,
        universe_size: a.universe_size,
        force_t: a.force_t,
        timing: a.timing,
    };
    let result = run_sweep(&cfg)?;
    if let Some(path) = &a.out_csv {
        write_csv_file(&result.records, path)?;
    }
    if let Some(path) = &a.out_json {
        write_json_file(&result.summary, path)?;
    }
    let mut out = io::stdout().lock();
    for g in &result.summary.grid {
        let checks: Vec<String> = g
            .checks
            .iter()
            .map(|c| {
                let op = match c.kind {
                    CheckKind::AtLeast => ">=",
                    CheckKind::AtMost => "<=",
                    CheckKind::Equal => "==",
                };
                format!("{}{op}{}:{}", c.name, format_g17(c.threshold), c.verdict)
            })
            .collect();
        writeln!(
            out,
            "{} {} n={} m={} k={} trials={} mean={} se={} {}",
            g.verdict,
            cfg.attack,
            g.n,
            g.m,
            g.k,
            g.trials,
            format_g17(g.mean),
            format_g17(g.se),
            checks.join(" ")
        )?;
    }
    let verdict = result.summary.verdict();
    writeln!(out, "overall: {verdict}")?;
    Ok(verdict_code(verdict))
}

fn cmd_bounds(a: GridArgs) -> anyhow::Result<ExitCode> {
    let mut out = io::stdout().lock();
    for (n, m, k) in a.points() {
        if n == 0 || m < 2 {
            return Err(config_err(format!("bounds need n ≥ 1 and m ≥ 2, got n={n}, m={m}")));
        }
        writeln!(out, "{}", serde_json::to_string(&BoundReport::new(n, m, k))?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> anyhow::Result<ExitCode> {
    let labeling = Labeling::parse(&a.labeling)?;
    let mut reports = Vec::new();
    for (n, m, k) in a.grid.points() {
        reports.push(verify_reduction(&ReductionConfig {
            attack: a.attack,
            n,
            m,
            k,
            trials: a.trials,
            seed: a.seed,
            labeling: labeling.clone(),
            universe_size: a.universe_size,
            force_t: a.force_t,
            identity_hook: a.identity_hook,
        })?);
    }
    let envelope = ReductionEnvelope {
        schema: SCHEMA,
        reports: &reports,
    };
    match &a.out_json {
        Some(path) => write_json_file(&envelope, path)?,
        None => write_json(&envelope, &mut io::stdout().lock())?,
    }
    let verdict = Verdict::combine(reports.iter().map(|r| r.verdict));
    eprintln!("overall: {verdict}");
    Ok(verdict_code(verdict))
}

fn cmd_exact(a: ExactArgs) -> anyhow::Result<ExitCode> {
    if a.seeds == 0 {
        return Err(config_err("--seeds must be at least 1"));
    }
    if a.force_t.is_some() && a.attack != AttackId::Large {
        return Err(config_err("--force-t only applies to the large attack"));
    }
    let inner: Box<dyn Attack> = match a.attack {
        AttackId::Small => Box::new(SmallAttack),
        AttackId::Large => Box::new(LargeAttack { force_t: a.force_t }),
        AttackId::RandomBaseline => Box::new(UniformGuess),
        other => {
            return Err(config_err(format!(
                "oracle-exact runs sequence attacks only, not {other}"
            )))
        }
    };
    let attack: Box<dyn Attack> = if a.wrap_permutation {
        Box::new(wrap_attack(inner))
    } else {
        inner
    };
    let seeds: Vec<u64> = (0..a.seeds as u64).map(|i| derive_seed(a.seed, &[i])).collect();
    let mut all_agree = true;
    let mut out = io::stdout().lock();
    for (n, m, k) in a.grid.points() {
        let acc =
            exhaustive_tiny_oracle(n, m, k, attack.as_ref(), &seeds).with_context(|| format!("n={n}, m={m}, k={k}"))?;
        let reference = (a.attack == AttackId::Small && k == 1)
            .then(|| exact_small_k1_accuracy(n, m))
            .transpose()?;
        let agrees = reference.as_ref().map(|r| *r == acc);
        all_agree &= agrees.unwrap_or(true);
        let line = ExactLine {
            attack: a.attack,
            wrapped: a.wrap_permutation,
            n,
            m,
            k,
            seeds: a.seeds,
            accuracy: acc.to_string(),
            accuracy_float: format_g17(acc.to_f64().unwrap_or(f64::NAN)),
            exact_k1: reference.map(|r| r.to_string()),
            agrees,
        };
        writeln!(out, "{}", serde_json::to_string(&line)?)?;
    }
    Ok(if all_agree {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Trial failures and budget violations are run failures (1); everything
/// else is a configuration or environment problem (2).
fn error_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Trial { .. } | Error::Budget { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::VerifyReduction(a) => cmd_verify(a),
        Command::OracleExact(a) => cmd_exact(a),
    };
    result.unwrap_or_else(|err| {
        let mut msg = err.to_string();
        for cause in err.chain().skip(1) {
            let cause = cause.to_string();
            if !msg.contains(&cause) {
                msg = format!("{msg}: {cause}");
            }
        }
        eprintln!("error: {msg}");
        ExitCode::from(error_code(&err))
    })
}
