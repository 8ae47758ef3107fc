use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vlasov::commands::{self, parse_grid};
use vlasov::config::{parse_config, Mode, RunConfig};
use vlasov::error::CliError;
use vlasov::output::to_sorted_json;

/// Steady states of the spherically symmetric Vlasov-Poisson system, the
/// transport operator they induce and checks of its properties.
#[derive(Debug, Parser)]
#[command(name = "vlasov", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON run configuration; defaults are used for missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true, env = "VLASOV_OUT")]
    out: Option<PathBuf>,
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, global = true, env = "VLASOV_THREADS")]
    threads: Option<usize>,
    /// Seed of the random test functions and Monte Carlo checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Radial profiles of the steady state.
    SteadyState {
        /// Solve the Einstein-Vlasov system instead.
        #[arg(long)]
        relativistic: bool,
    },
    /// Minimum of the effective potential and the turning points.
    Potential {
        #[arg(long = "L")]
        l: f64,
        #[arg(long = "E")]
        e: Option<f64>,
    },
    /// One bound radial orbit integrated over several periods.
    Orbit {
        #[arg(long = "E")]
        e: f64,
        #[arg(long = "L")]
        l: f64,
        #[arg(long, default_value_t = 1.0)]
        periods: f64,
    },
    /// Radial periods and their upper bound on the admissible grid.
    PeriodTable {
        /// `<nE>x<nL>`; defaults to the configured grid.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Orbit average of a builtin phase function on the admissible grid.
    Project {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        grid: Option<String>,
    },
    /// Runs every check and writes report.json.
    Verify {
        #[arg(long)]
        relativistic: bool,
    },
}

fn load_config(global: &Global, relativistic: bool) -> Result<RunConfig, CliError> {
    let mut cfg = match &global.config {
        Some(path) => parse_config(path)?,
        None if relativistic => RunConfig::for_mode(Mode::Relativistic),
        None => RunConfig::default(),
    };
    if relativistic && cfg.mode != Mode::Relativistic {
        if global.config.is_some() {
            cfg.mode = Mode::Relativistic;
        } else {
            cfg = RunConfig::for_mode(Mode::Relativistic);
        }
    }
    if let Some(out) = &global.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn grid_or_default(cfg: &RunConfig, grid: &Option<String>) -> Result<(usize, usize), CliError> {
    match grid {
        Some(text) => parse_grid(text),
        None => Ok((cfg.grid.n_e, cfg.grid.n_l)),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    }
    let relativistic = matches!(
        cli.command,
        Command::SteadyState { relativistic: true } | Command::Verify { relativistic: true }
    );
    let cfg = load_config(&cli.global, relativistic)?;
    let out = cfg.output_dir.clone();
    match &cli.command {
        Command::SteadyState { .. } => {
            for path in commands::steady_state(&cfg, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Potential { l, e } => {
            let bg = commands::background(&cfg)?;
            let report = commands::potential(bg.as_ref(), *l, *e)?;
            print!("{}", to_sorted_json(&report, "potential")?);
        }
        Command::Orbit { e, l, periods } => {
            let bg = commands::background(&cfg)?;
            let path = commands::orbit(&cfg, bg.as_ref(), *e, *l, *periods, &out)?;
            println!("{}", path.display());
        }
        Command::PeriodTable { grid } => {
            let (n_e, n_l) = grid_or_default(&cfg, grid)?;
            let bg = commands::background(&cfg)?;
            let path = commands::period_table(&cfg, bg.as_ref(), n_e, n_l, &out)?;
            println!("{}", path.display());
        }
        Command::Project { function, grid } => {
            let (n_e, n_l) = grid_or_default(&cfg, grid)?;
            let bg = commands::background(&cfg)?;
            let path = commands::project(&cfg, bg.as_ref(), function, n_e, n_l, &out)?;
            println!("{}", path.display());
        }
        Command::Verify { .. } => {
            let (report, path) = commands::verify(&cfg, &out)?;
            print!("{}", report.table());
            println!("{}", path.display());
            if !report.all_pass() {
                return Err(CliError::Verification {
                    failed: report.summary.failed,
                    total: report.summary.total,
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
