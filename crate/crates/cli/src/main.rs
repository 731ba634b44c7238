use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use numeraire::sde::Scheme;

mod commands;
mod config;

use config::{Command, ExperimentConfig, Strike};

/// Dual-measure pricing with an exploding or devaluing exchange rate.
#[derive(Parser)]
#[command(name = "numeraire", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Price one claim by Monte Carlo under both measures
    Price(Flags),
    /// Put-call parity table over strikes
    Parity(Flags),
    /// International put-call equivalence table over strikes
    Intl(Flags),
    /// Martingale defect of X against the dual explosion mass
    Defect(Flags),
    /// Exact identity checks on a tree file
    LatticeVerify(Flags),
    /// Physical measure construction and consistency checks on a tree file
    Physical(Flags),
    /// Euler against exact sampling over a list of step counts
    Convergence(Flags),
    /// List the model catalog
    Catalog(Flags),
    /// Run an experiment described by a JSON config file
    Run {
        config: PathBuf,
        /// Overrides the config's output directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Tree file (JSON) for lattice-verify and physical
    #[arg(long)]
    tree: Option<PathBuf>,
    /// e.g. euro_forward, call_1, put_0.5, dollar_call_2
    #[arg(long)]
    claim: Option<String>,
    /// Comma-separated; exact forms such as 1/3 are accepted
    #[arg(long, value_delimiter = ',')]
    strikes: Vec<String>,
    /// Number of paths per measure
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// exact, euler, or the name of an exact sampler
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long, value_delimiter = ',')]
    steps_list: Vec<usize>,
    /// Output directory (default: $NUMERAIRE_OUT_DIR, then ./numeraire-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the terminal samples as CSV
    #[arg(long)]
    dump_samples: bool,
}

impl Flags {
    fn into_config(self, command: Command) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(command);
        cfg.model = self.model;
        cfg.x0 = self.x0;
        cfg.horizon = self.horizon;
        cfg.tree = self.tree;
        cfg.claim = self.claim;
        cfg.strikes = self.strikes.into_iter().map(Strike::Text).collect();
        if let Some(n) = self.n {
            cfg.mc.n = n;
        }
        if let Some(steps) = self.steps {
            cfg.mc.steps = steps;
        }
        if let Some(seed) = self.seed {
            cfg.mc.seed = seed;
        }
        if let Some(scheme) = self.scheme {
            cfg.mc.scheme = scheme;
        }
        cfg.steps_list = self.steps_list;
        cfg.out_dir = self.out;
        cfg.dump_samples = self.dump_samples;
        cfg
    }
}

fn load_config(path: &PathBuf, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
    if out.is_some() {
        cfg.out_dir = out;
    }
    Ok(cfg)
}

fn config_of(sub: Sub) -> Result<ExperimentConfig> {
    Ok(match sub {
        Sub::Price(f) => f.into_config(Command::Price),
        Sub::Parity(f) => f.into_config(Command::Parity),
        Sub::Intl(f) => f.into_config(Command::Intl),
        Sub::Defect(f) => f.into_config(Command::Defect),
        Sub::LatticeVerify(f) => f.into_config(Command::LatticeVerify),
        Sub::Physical(f) => f.into_config(Command::Physical),
        Sub::Convergence(f) => f.into_config(Command::Convergence),
        Sub::Catalog(f) => f.into_config(Command::Catalog),
        Sub::Run { config, out } => load_config(&config, out)?,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let report = config_of(cli.cmd).and_then(|cfg| commands::execute(&cfg));
    match report {
        Ok(r) => {
            let text = serde_json::to_string_pretty(&r.json).unwrap_or_default();
            // a closed pipe is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if r.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: identity check failed");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
