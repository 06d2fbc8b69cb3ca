use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser};

use polyrand_cli::{defaults_help, dry_run, run, CliError, Format, RunConfig, Status, Suite};

/// Reproducible verification suites for polynomials in random elements.
#[derive(Debug, Parser)]
#[command(name = "polyrand", version)]
struct Cli {
    /// Suite to run; overrides the config file.
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format (default csv).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; the output does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the cost estimate and exit without running.
    #[arg(long)]
    dry_run: bool,
    /// Parameter overrides such as `p=3` or `options.n_mc=1000`.
    #[arg(value_name = "KEY=VALUE")]
    params: Vec<String>,
}

fn config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut c = match (&cli.config, cli.suite) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(s)) => RunConfig::new(s),
        (None, None) => return Err(CliError::Config("either --suite or --config is required".into())),
    };
    if let Some(s) = cli.suite {
        if s != c.suite {
            c.params = serde_json::Value::Null;
        }
        c.suite = s;
    }
    if let Some(seed) = cli.seed {
        c.seed = seed;
    }
    if let Some(out) = &cli.out {
        c.out = Some(out.clone());
    }
    if let Some(f) = cli.format {
        c.format = f;
    }
    if cli.jobs.is_some() {
        c.jobs = cli.jobs;
    }
    for p in &cli.params {
        c.set_param(p)?;
    }
    Ok(c)
}

fn main() -> ExitCode {
    let matches = Cli::command().after_long_help(defaults_help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let cfg = match config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return e.status().into();
        }
    };
    if cli.dry_run {
        return match dry_run(&cfg) {
            Ok(est) => {
                println!("{}", serde_json::to_string_pretty(&est).expect("serializable"));
                if est.feasible { Status::Pass } else { Status::Infeasible }.into()
            }
            Err(e) => {
                eprintln!("{e}");
                e.status().into()
            }
        };
    }
    run(&cfg).into()
}
