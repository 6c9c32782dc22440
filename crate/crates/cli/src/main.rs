use std::path::PathBuf;
use std::process::ExitCode;

use ccgp_cli::{bench, commands, verify, CliError, Layout, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ccgp", version, about = "Chance-constrained planning experiments")]
struct Cli {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// 200 pairs per environment and 100 trials per plan.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the environments and collect GP training data.
    Collect,
    /// Fit the distance models.
    Fit,
    /// Draw start/goal pairs and plan with every configured planner.
    Plan,
    /// Roll out the plans and write the reports.
    Eval,
    /// Compare SHGO with a dense grid on the test-function suite.
    BenchShgo {
        #[arg(long, default_value = "default")]
        suite: String,
    },
    /// Dense audit of g ≥ c along chance-plan edges.
    Verify {
        /// Single plan file; without it every chance plan of the run is audited.
        #[arg(long, requires = "model")]
        plan: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        delta: Option<f64>,
        /// Points per edge.
        #[arg(long, default_value_t = 1000)]
        density: usize,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    /// Print the default configuration.
    DumpDefaults,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    if cli.paper_scale {
        config = config.paper_scale();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Command::DumpDefaults = cli.command {
        print!("{}", commands::dump_defaults());
        return Ok(());
    }
    let config = resolve(&cli)?;
    let layout = Layout::new(&config.output);
    match &cli.command {
        Command::Collect => {
            let sets = commands::collect(&config)?;
            println!("collected {} training set(s) in {}", sets.len(), layout.root.display());
        }
        Command::Fit => {
            for (i, r) in commands::fit(&config)?.iter().enumerate() {
                println!("e{i}: length scale {:.4}, Lipschitz bound valid: {}", r.length_scale, r.lipschitz.valid);
            }
        }
        Command::Plan => {
            let outcomes = commands::plan(&config)?;
            let planned = outcomes.iter().filter(|o| o.plan.is_ok()).count();
            println!("planned {planned} of {} job(s)", outcomes.len());
        }
        Command::Eval => {
            let summary = commands::eval(&config)?;
            for s in &summary.report.summaries {
                let median = s.success_rate.map(|q| q.median);
                println!("{} δ={:?}: planned {}/{}, median success {:?}", s.planner, s.delta, s.planned, s.pairs, median);
            }
            if !summary.violations.is_empty() {
                for v in &summary.violations {
                    eprintln!("{v}");
                }
                return Err(CliError::Invariant(format!("{} check(s) failed", summary.violations.len())));
            }
        }
        Command::BenchShgo { suite } => {
            let report = bench::bench_shgo(suite, &layout)?;
            for r in &report.rows {
                println!("{:<16} gap {:.2e}", r.function, r.gap);
            }
            let failures = report.failures();
            if !failures.is_empty() || !report.stabilized() {
                return Err(CliError::Invariant(format!(
                    "{} function(s) above tolerance; minimizer count stabilized: {}",
                    failures.len(),
                    report.stabilized()
                )));
            }
        }
        Command::Verify { plan, model, delta, density, tolerance } => {
            let report = match (plan, model) {
                (Some(p), Some(m)) => verify::verify_files(p, m, *delta, &config.input_map(), *density, *tolerance)?,
                _ => verify::verify_run(&config, *density, *tolerance)?,
            };
            for a in &report.plans {
                for v in &a.violations {
                    println!("{}: edge {} t={:.6} g={:.6} < c={:.6}", a.plan, v.edge, v.t, v.g, a.c);
                }
            }
            println!("audited {} plan(s), {} violation(s)", report.plans.len(), report.total_violations);
            if report.total_violations > 0 {
                return Err(CliError::Invariant(format!("{} point(s) below c", report.total_violations)));
            }
        }
        Command::DumpDefaults => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
