//! Command-line front end: parses flags into a `RunConfig`, dispatches to the
//! study runners, and writes the CSV plus a JSON config echo next to it.
//!
//! Exit codes: 0 on success, 2 on configuration/usage errors, 1 on runtime
//! errors (I/O, estimator failures).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use fkspline::harness::{configure_threads, run_study, RunConfig};
use fkspline::Error;

#[derive(Parser)]
#[command(
    name = "fkspline",
    version,
    about = "Monte Carlo studies of free-knot spline approximation of additive-noise SDE paths"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Spline degree bound r
    #[arg(long, default_value_t = 0)]
    degree: usize,
    /// Number of Monte Carlo replications
    #[arg(long)]
    paths: usize,
    /// Fine grid has 2^GRID_EXP steps per unit time
    #[arg(long = "grid-exp")]
    grid_exp: u32,
    /// Master seed; replication i uses stream i of this seed
    #[arg(long)]
    seed: u64,
    /// Output CSV path (a .config.json echo is written next to it)
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 = all cores); never affects output bytes
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args, Clone)]
struct TauEstArgs {
    /// Replications for the internal stopping-time moment estimate
    #[arg(long = "tau-paths", default_value_t = 20_000)]
    tau_paths: usize,
    /// Grid exponent for the internal stopping-time moment estimate
    #[arg(long = "tau-grid-exp", default_value_t = 18)]
    tau_grid_exp: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Moments of the unit-level stopping time of the best-fit error
    Tau {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Median pathwise minimal spline error per knot budget
    Gamma {
        /// Knot budgets, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        tau: TauEstArgs,
    },
    /// Error estimates and asymptotic-constant ratios over a budget sweep
    Converge {
        /// Methods: dagger, star, euler, min (comma separated)
        #[arg(long, value_delimiter = ',', required = true)]
        method: Vec<String>,
        /// SDE preset: bm, ou, ramp-sigma, time-drift
        #[arg(long)]
        sde: String,
        /// Knot budgets, comma separated, strictly increasing
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// Moment orders q in [1, 4], comma separated
        #[arg(long, value_delimiter = ',', default_value = "1")]
        q: Vec<f64>,
        /// Coarse-grid exponent delta in (1/2, 1)
        #[arg(long, default_value_t = 0.75)]
        delta: f64,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        tau: TauEstArgs,
    },
    /// Two methods side by side on matched paths
    Compare {
        #[arg(long = "method-a")]
        method_a: String,
        #[arg(long = "method-b")]
        method_b: String,
        #[arg(long)]
        sde: String,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        q: Vec<f64>,
        #[arg(long, default_value_t = 0.75)]
        delta: f64,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        tau: TauEstArgs,
    },
}

fn to_config(command: Command) -> RunConfig {
    match command {
        Command::Tau { common } => RunConfig {
            command: "tau".into(),
            sde: None,
            methods: vec![],
            k_list: vec![],
            q_list: vec![],
            degree: common.degree,
            delta: 0.75,
            grid_exp: common.grid_exp,
            n_paths: common.paths,
            master_seed: common.seed,
            tau_paths: 0,
            tau_grid_exp: common.grid_exp,
            threads: common.threads,
            out: common.out.display().to_string(),
        },
        Command::Gamma { k, common, tau } => RunConfig {
            command: "gamma".into(),
            sde: None,
            methods: vec![],
            k_list: k,
            q_list: vec![],
            degree: common.degree,
            delta: 0.75,
            grid_exp: common.grid_exp,
            n_paths: common.paths,
            master_seed: common.seed,
            tau_paths: tau.tau_paths,
            tau_grid_exp: tau.tau_grid_exp,
            threads: common.threads,
            out: common.out.display().to_string(),
        },
        Command::Converge {
            method,
            sde,
            k,
            q,
            delta,
            common,
            tau,
        } => RunConfig {
            command: "converge".into(),
            sde: Some(sde),
            methods: method,
            k_list: k,
            q_list: q,
            degree: common.degree,
            delta,
            grid_exp: common.grid_exp,
            n_paths: common.paths,
            master_seed: common.seed,
            tau_paths: tau.tau_paths,
            tau_grid_exp: tau.tau_grid_exp,
            threads: common.threads,
            out: common.out.display().to_string(),
        },
        Command::Compare {
            method_a,
            method_b,
            sde,
            k,
            q,
            delta,
            common,
            tau,
        } => RunConfig {
            command: "compare".into(),
            sde: Some(sde),
            methods: vec![method_a, method_b],
            k_list: k,
            q_list: q,
            degree: common.degree,
            delta,
            grid_exp: common.grid_exp,
            n_paths: common.paths,
            master_seed: common.seed,
            tau_paths: tau.tau_paths,
            tau_grid_exp: tau.tau_grid_exp,
            threads: common.threads,
            out: common.out.display().to_string(),
        },
    }
}

fn echo_path(out: &Path) -> PathBuf {
    out.with_extension("config.json")
}

fn execute(config: &RunConfig) -> Result<String, Error> {
    configure_threads(config.threads);
    let table = run_study(config)?;
    let out = Path::new(&config.out);
    std::fs::write(out, table.to_csv())?;
    let echo = echo_path(out);
    std::fs::write(&echo, config.echo_json() + "\n")?;
    Ok(format!(
        "{}: wrote {} rows to {} (config echo: {})",
        config.command,
        table.rows.len(),
        out.display(),
        echo.display()
    ))
}

/// Parse arguments, run the requested study, report a one-line summary.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    let config = to_config(cli.command);
    match execute(&config) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::Argument(_) => 2,
                _ => 1,
            }
        }
    }
}
