use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pgs_cli::config::{parse_config, DEFAULT_TOML};
use pgs_cli::run::{self, CliError, EXIT_OK};

#[derive(Parser)]
#[command(name = "pgs", version, about = "Transonic shock solver for the pressure gradient system")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full continuation solve and write all artifacts.
    Solve {
        /// TOML config; the bundled default is used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute the property report from a finished run.
    Verify {
        #[arg(long)]
        run: PathBuf,
    },
    /// Print `p u v region` at a self-similar point.
    Sample {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        xi: f64,
        #[arg(long, allow_hyphen_values = true)]
        eta: f64,
    },
    /// Independent solves over a list of parameter values.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the bundled default config.
    DefaultConfig,
}

fn config(path: Option<PathBuf>) -> Result<pgs_cli::config::RunConfig, CliError> {
    match path {
        Some(p) => run::load(&p),
        None => Ok(parse_config(DEFAULT_TOML)?),
    }
}

fn print_report(report: &pgs_core::verify::PropertyReport) {
    for c in &report.checks {
        let vals: Vec<String> = c.values.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
        println!("{:<22} {:<12} {}", c.name, format!("{:?}", c.status).to_lowercase(), vals.join(" "));
    }
}

fn dispatch(cmd: Cmd) -> Result<i32, CliError> {
    match cmd {
        Cmd::Solve { config: c, out } => {
            let o = run::solve(&config(c)?, &out)?;
            print_report(&o.report);
            Ok(o.exit_code)
        }
        Cmd::Verify { run: dir } => {
            let (code, report) = run::verify_run(&dir)?;
            print_report(&report);
            Ok(code)
        }
        Cmd::Sample { run: dir, xi, eta } => {
            let loaded = run::load_run(&dir)?;
            println!("{}", run::sample(&loaded, xi, eta));
            Ok(EXIT_OK)
        }
        Cmd::Sweep { config: c, param, values, out } => {
            if values.is_empty() {
                return Err(CliError::Usage("--values needs at least one value".into()));
            }
            let entries = run::sweep(&config(c)?, &param, &values, &out, run::thread_count())?;
            for e in &entries {
                println!("{param}={} exit={} r_p2={}", e.value, e.exit_code, e.r_p2.map_or("-".into(), |r| r.to_string()));
            }
            Ok(entries.iter().map(|e| e.exit_code).max().unwrap_or(EXIT_OK))
        }
        Cmd::DefaultConfig => {
            print!("{DEFAULT_TOML}");
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = dispatch(cli.cmd).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
