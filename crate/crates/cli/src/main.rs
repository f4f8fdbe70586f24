//! `nexop` command-line runner.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nexop::experiment::{self, ExperimentConfig};
use nexop::sim::Outcome;
use nexop::Error;

const PRESETS: &[(&str, &str)] = &[
    ("admm_path3", include_str!("../examples/admm_path3.cfg")),
    ("admm_lossy", include_str!("../examples/admm_lossy.cfg")),
    ("atc_bias", include_str!("../examples/atc_bias.cfg")),
    ("gt_path3", include_str!("../examples/gt_path3.cfg")),
    ("logistic_ring", include_str!("../examples/logistic_ring.cfg")),
];

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "nexop", version, about = "Distributed optimization over simulated networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(Common),
    /// Run one experiment per value of a single key.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Key to vary, e.g. algo.rho_scale.
        #[arg(long)]
        key: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Check operator properties of the configured problem without running it.
    Certify(Common),
    /// List the bundled presets, or print one.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct Common {
    /// Config file (`key = value` lines).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled preset name (see `nexop presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Suppress the report on stdout.
    #[arg(long)]
    quiet: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_IO,
            Error::Divergence { .. } | Error::NonFinite { .. } => EXIT_DIVERGED,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(message: String) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message,
    }
}

fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => {
                if !path.exists() {
                    return Err(Failure {
                        code: EXIT_IO,
                        message: format!("config file {} not found", path.display()),
                    });
                }
                ExperimentConfig::load(path)?
            }
            (None, Some(name)) => {
                let text = preset(name)
                    .ok_or_else(|| config_error(format!("unknown preset `{name}`")))?;
                ExperimentConfig::parse(text)?
            }
            (None, None) => ExperimentConfig::default(),
        };
        for item in &self.overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| config_error(format!("--set expects KEY=VALUE, got `{item}`")))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| Path::new(default).to_path_buf())
    }
}

fn run(common: &Common) -> Result<(), Failure> {
    let cfg = common.load()?;
    let exp = experiment::build(&cfg)?;
    let summary = experiment::run_experiment(&exp)?;
    let out = common.out_dir("nexop_out");
    experiment::write_artifacts(&out, &exp, &summary)?;
    if !common.quiet {
        let err = summary
            .final_error()
            .map_or("n/a".to_string(), |e| format!("{e:e}"));
        println!(
            "{} on {} agents: {} rounds, outcome {}, final optimality error {err}",
            cfg.algorithm,
            exp.problem.n_agents(),
            summary.records.len(),
            outcome_label(&summary.outcome)
        );
        print!("{}", summary.report);
        println!("artifacts written to {}", out.display());
    }
    if let Outcome::Diverged { iteration, magnitude } = summary.outcome {
        return Err(Failure {
            code: EXIT_DIVERGED,
            message: format!("diverged at iteration {iteration} (|value| = {magnitude:e})"),
        });
    }
    Ok(())
}

fn outcome_label(o: &Outcome) -> &'static str {
    match o {
        Outcome::Converged => "converged",
        Outcome::MaxIterations => "max_iterations",
        Outcome::Diverged { .. } => "diverged",
    }
}

fn sweep(common: &Common, key: &str, values: &[String]) -> Result<(), Failure> {
    let cfg = common.load()?;
    let sweep = experiment::run_sweep(&cfg, key, values)?;
    let out = common.out_dir("nexop_sweep");
    sweep.write_artifacts(&out)?;
    if !common.quiet {
        print!("{}", sweep.summary_text());
        println!("artifacts written to {}", out.display());
    }
    if let Some(c) = sweep.children.iter().find(|c| c.run.diverged()) {
        return Err(Failure {
            code: EXIT_DIVERGED,
            message: format!("run with {key} = {} diverged", c.value),
        });
    }
    Ok(())
}

fn certify(common: &Common) -> Result<(), Failure> {
    let cfg = common.load()?;
    let exp = experiment::build(&cfg)?;
    let report = experiment::certify(&exp)?;
    if let Some(out) = &common.out {
        std::fs::create_dir_all(out).map_err(Error::from)?;
        std::fs::write(out.join("certify_report.txt"), report.to_string()).map_err(Error::from)?;
    }
    if !common.quiet {
        print!("{report}");
    }
    Ok(())
}

fn presets(name: Option<&str>) -> Result<(), Failure> {
    match name {
        None => {
            for (n, text) in PRESETS {
                let about = text
                    .lines()
                    .next()
                    .and_then(|l| l.strip_prefix('#'))
                    .unwrap_or("")
                    .trim();
                println!("{n:<14} {about}");
            }
            Ok(())
        }
        Some(n) => {
            let text = preset(n).ok_or_else(|| config_error(format!("unknown preset `{n}`")))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::Sweep { common, key, values } => sweep(common, key, values),
        Command::Certify(c) => certify(c),
        Command::Presets { name } => presets(name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
