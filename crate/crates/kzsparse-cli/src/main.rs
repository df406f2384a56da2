//! Command-line front end over the kzsparse harness and analysis oracles.
//!
//! Every subcommand is a thin adapter: it assembles a config, calls the
//! library, and prints results or writes the library's artifacts. Exit
//! codes: 0 success, 1 configuration or validation error (the message
//! names the offending field), 2 runtime numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kzsparse::analysis;
use kzsparse::harness::config::{
    ExperimentConfig, GammaSpec, MatrixConfig, MatrixKind, NoiseConfig, NoiseKind, SignalConfig,
    SolverConfig, SolverName, SweepConfig,
};
use kzsparse::harness::{self, output, RunMode};
use kzsparse::schedules::{next_epoch_schedule, ScheduleRule};
use kzsparse::seeds;
use kzsparse::sensing::seeded_descriptor;
use kzsparse::{KzError, OperatorKind, SolveStatus, SparsityLevel};

/// Library version plus the schema version of the config files and CSV
/// layouts this build accepts.
const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");

#[derive(Parser)]
#[command(name = "kzsparse", about = "Kaczmarz-based sparse recovery solvers and experiments", version = VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one synthetic instance and write its trace CSV.
    Solve(SolveArgs),
    /// Mean error-decay curves over seeded trials (config file driven).
    Curve(ConfigArgs),
    /// Phase-transition grid over (m, s) cells.
    Phase(ConfigArgs),
    /// Reshuffling vs with-replacement KZIHT ablation.
    Ablate(ConfigArgs),
    /// KZPT thresholding-period sweep.
    SweepPeriod(SweepArgs),
    /// Check the multi-step epoch identity on random instances.
    VerifyIdentity(VerifyArgs),
    /// Brute-force restricted isometry constant of a sampled operator.
    Rip(RipArgs),
    /// Cross-term operator norms of epoch products against their bound.
    CrossTerm(CrossTermArgs),
}

#[derive(Args)]
struct MatrixArgs {
    /// Sensing ensemble: hadamard | bernoulli | gaussian.
    #[arg(long)]
    matrix: MatrixKind,
    /// Number of rows (measurements).
    #[arg(long)]
    m: usize,
    /// Signal dimension (columns).
    #[arg(long = "N", visible_alias = "n")]
    n: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Sparsity of the planted signal.
    #[arg(long)]
    s: usize,
    /// Solver: kz | iht | kziht | kzpt.
    #[arg(long)]
    solver: SolverName,
    /// Kaczmarz step size, or "auto" (1 for kz, N/m for kziht, N/p for kzpt).
    #[arg(long, default_value = "auto")]
    gamma: GammaSpec,
    /// Gradient step size for kzpt.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Thresholding period for kzpt (defaults to m).
    #[arg(long)]
    period: Option<usize>,
    /// Epoch budget.
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Row schedule: reshuffle | reshuffle-once | cyclic | replacement.
    #[arg(long, default_value = "reshuffle")]
    rule: ScheduleRule,
    /// Gaussian noise level (0 = noiseless).
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Stop once the relative error reaches this value (0 disables).
    #[arg(long, default_value_t = 0.0)]
    target_error: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the trace CSV.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML or JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path overrides, e.g. --set solver.gamma=4.
    #[arg(long = "set")]
    overrides: Vec<String>,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config's `outputs`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Comma-separated thresholding periods, overriding sweep.p_list.
    #[arg(long)]
    periods: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest row count drawn for a random instance.
    #[arg(long, default_value_t = 16)]
    m: usize,
    /// Largest signal dimension drawn for a random instance.
    #[arg(long = "N", visible_alias = "n", default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RipArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Sparsity level of the RIP constant.
    #[arg(long)]
    s: usize,
    /// Operator scale before the Gram computation (default 1/sqrt(m)).
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CrossTermArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Kaczmarz step size, or "auto" for the largest admissible value.
    #[arg(long, default_value = "auto")]
    gamma: GammaSpec,
    /// Sub-Gaussian norm bound K.
    #[arg(long, default_value_t = 1.0)]
    k_subg: f64,
    /// Number of random reshuffling schedules to test.
    #[arg(long, default_value_t = 1)]
    schedules: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let is_help = matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if is_help {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Curve(args) => cmd_curve(args),
        Command::Phase(args) => cmd_phase(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::SweepPeriod(args) => cmd_sweep(args),
        Command::VerifyIdentity(args) => cmd_verify_identity(args),
        Command::Rip(args) => cmd_rip(args),
        Command::CrossTerm(args) => cmd_cross_term(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err);
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &KzError) -> u8 {
    match err {
        KzError::Config(_) | KzError::InvalidArgument(_) | KzError::GuardExceeded(_) => 1,
        KzError::InfeasibleParameters { .. } | KzError::Io(_) => 2,
    }
}

fn matrix_kind_to_operator(kind: MatrixKind) -> OperatorKind {
    match kind {
        MatrixKind::Hadamard => OperatorKind::SubsampledBos,
        MatrixKind::Bernoulli => OperatorKind::Bernoulli,
        MatrixKind::Gaussian => OperatorKind::GaussianFixedNorm,
    }
}

fn cmd_solve(args: SolveArgs) -> Result<(), KzError> {
    let config = ExperimentConfig {
        matrix: MatrixConfig {
            kind: args.matrix.matrix,
            m: args.matrix.m,
            n: args.matrix.n,
        },
        signal: SignalConfig { s: vec![args.s] },
        noise: if args.noise_sigma > 0.0 {
            NoiseConfig {
                model: NoiseKind::Gaussian,
                sigma: args.noise_sigma,
            }
        } else {
            NoiseConfig::default()
        },
        solver: SolverConfig {
            name: args.solver,
            rule: args.rule,
            gamma: args.gamma,
            lambda: args.lambda,
            period: args.period,
            epochs: Some(args.epochs),
            target_error: args.target_error,
            divergence_threshold: 1e6,
            preset: None,
            k_subg: 1.0,
        },
        trials: 1,
        base_seed: args.seed,
        success_threshold: 1e-1,
        outputs: None,
        phase: None,
        sweep: None,
    };
    println!("seed: {}", args.seed);
    let outcome = harness::run_single_solve(&config, 0)?;
    println!("resolved gamma: {}", outcome.resolved.gamma);
    let trace = &outcome.record.trace;
    let status = match trace.status {
        SolveStatus::Converged => "converged",
        SolveStatus::BudgetExhausted => "budget-exhausted",
        SolveStatus::Diverged => "diverged",
    };
    println!(
        "final relative error: {} after {} epochs (status: {})",
        trace.final_relative_error(),
        trace.epochs.len(),
        status
    );
    std::fs::create_dir_all(&args.out)?;
    let trace_path = args.out.join("solve_trace.csv");
    std::fs::write(&trace_path, output::trace_csv(trace))?;
    println!("trace: {}", trace_path.display());
    Ok(())
}

fn load_with_flags(args: &ConfigArgs) -> Result<ExperimentConfig, KzError> {
    let mut config = harness::load_config(&args.config, &args.overrides)?;
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    if let Some(out) = &args.out {
        config.outputs = Some(out.clone());
    }
    Ok(config)
}

fn output_dir(config: &ExperimentConfig, command: &str) -> PathBuf {
    config
        .outputs
        .clone()
        .unwrap_or_else(|| Path::new("kzsparse-out").join(command))
}

fn cmd_curve(args: ConfigArgs) -> Result<(), KzError> {
    let config = load_with_flags(&args)?;
    println!("seed: {}", config.base_seed);
    let resolved = harness::resolve_solver(&config, RunMode::Curve, config.matrix.m)?;
    let curves = harness::run_error_curve(&config)?;
    for curve in &curves {
        let last = curve.points.last().expect("at least one epoch");
        println!(
            "s = {}: mean relative error {} after {} epochs ({} trials, {} diverged)",
            curve.s, last.mean_rel_err, last.epoch, last.n_trials, last.n_diverged
        );
    }
    let dir = output_dir(&config, "curve");
    let manifest = output::persist_curves(&dir, "curve", &config, &resolved, &curves, "curve")?;
    println!("artifacts: {}", manifest.parent().unwrap_or(&dir).display());
    Ok(())
}

fn cmd_phase(args: ConfigArgs) -> Result<(), KzError> {
    let config = load_with_flags(&args)?;
    println!("seed: {}", config.base_seed);
    let grid = harness::run_phase_transition(&config)?;
    for (i, &m) in grid.m_values.iter().enumerate() {
        let row: Vec<String> = grid.success_prob[i].iter().map(|p| p.to_string()).collect();
        println!("m = {}: [{}]", m, row.join(", "));
    }
    let dir = output_dir(&config, "phase");
    let manifest = output::persist_phase(&dir, &config, &grid, "phase")?;
    println!("artifacts: {}", manifest.parent().unwrap_or(&dir).display());
    Ok(())
}

fn cmd_ablate(args: ConfigArgs) -> Result<(), KzError> {
    let config = load_with_flags(&args)?;
    println!("seed: {}", config.base_seed);
    let resolved = harness::resolve_solver(&config, RunMode::Ablation, config.matrix.m)?;
    let result = harness::run_schedule_ablation(&config)?;
    for (rule, curves) in [
        ("reshuffle", &result.reshuffle),
        ("replacement", &result.replacement),
    ] {
        for curve in curves.iter() {
            let last = curve.points.last().expect("at least one epoch");
            println!(
                "{} s = {}: mean relative error {} ({} diverged)",
                rule, curve.s, last.mean_rel_err, last.n_diverged
            );
        }
    }
    let dir = output_dir(&config, "ablate");
    let manifest = output::persist_ablation(&dir, &config, &resolved, &result, "ablate")?;
    println!("artifacts: {}", manifest.parent().unwrap_or(&dir).display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), KzError> {
    let mut config = load_with_flags(&args.common)?;
    if let Some(periods) = &args.periods {
        let p_list = periods
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| KzError::Config(format!("sweep.p_list: bad period '{}'", p)))
            })
            .collect::<Result<Vec<usize>, KzError>>()?;
        match &mut config.sweep {
            Some(sweep) => sweep.p_list = p_list,
            None => {
                config.sweep = Some(SweepConfig {
                    p_list,
                    c_rip: 1.0,
                })
            }
        }
    }
    println!("seed: {}", config.base_seed);
    let result = harness::run_period_sweep(&config)?;
    for entry in &result.entries {
        for &(s, epochs) in &entry.mean_epochs_to_tolerance {
            println!(
                "p = {} (gamma {}): s = {} mean epochs to 1e-6 = {}",
                entry.period, entry.gamma, s, epochs
            );
        }
    }
    let dir = output_dir(&config, "sweep-period");
    let manifest = output::persist_sweep(&dir, &config, &result, "sweep-period")?;
    println!("artifacts: {}", manifest.parent().unwrap_or(&dir).display());
    Ok(())
}

fn cmd_verify_identity(args: VerifyArgs) -> Result<(), KzError> {
    println!("seed: {}", args.seed);
    let report = analysis::verify_identity_suite(args.m, args.n, args.trials, args.seed)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(())
}

fn cmd_rip(args: RipArgs) -> Result<(), KzError> {
    println!("seed: {}", args.seed);
    let (op, descriptor) = seeded_descriptor(
        matrix_kind_to_operator(args.matrix.matrix),
        args.matrix.m,
        args.matrix.n,
        args.seed,
    )?;
    let scale = args.scale.unwrap_or(1.0 / (args.matrix.m as f64).sqrt());
    let dense = analysis::scaled_dense(&op, scale);
    let report = analysis::rip_constant_bruteforce(&dense, SparsityLevel::new(args.s)?)?;
    let json = serde_json::json!({
        "report": report,
        "scale": scale,
        "seed": args.seed,
        "operator": descriptor,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&json).expect("report serializes")
    );
    Ok(())
}

fn cmd_cross_term(args: CrossTermArgs) -> Result<(), KzError> {
    println!("seed: {}", args.seed);
    let (op, _descriptor) = seeded_descriptor(
        matrix_kind_to_operator(args.matrix.matrix),
        args.matrix.m,
        args.matrix.n,
        args.seed,
    )?;
    let gamma = match args.gamma {
        GammaSpec::Value(g) => g,
        GammaSpec::Auto(_) => {
            analysis::admissible_gamma(args.matrix.m, args.matrix.n, args.k_subg)
        }
    };
    let mut reports = Vec::with_capacity(args.schedules);
    let mut below = 0usize;
    for i in 0..args.schedules {
        let schedule = next_epoch_schedule(
            ScheduleRule::Reshuffle,
            args.matrix.m,
            i as u64,
            seeds::mix(args.seed, i as u64),
        );
        let report = analysis::cross_term_report(&op, &schedule, gamma, args.k_subg)?;
        if report.operator_norm < report.bound {
            below += 1;
        }
        reports.push(report);
    }
    let json = serde_json::json!({
        "gamma": gamma,
        "schedules": args.schedules,
        "below_bound": below,
        "reports": reports,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&json).expect("report serializes")
    );
    Ok(())
}
