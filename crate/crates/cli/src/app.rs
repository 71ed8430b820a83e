//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stochabs::composition::AlphaMode;
use stochabs::speclang::{absorb_dfa, compile_scltl, parse_scltl, powerset_alphabet};

use crate::commands::*;
use crate::config::ProjectConfig;
use crate::report::RunReport;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "stochabs", version, about = "Verify, compose and simulate stochastic abstractions")]
pub struct Cli {
    /// Directory for report.json, trajectories.csv and spec.dot.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Generic,
    Quadratic,
}

impl From<Mode> for AlphaMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Generic => AlphaMode::Generic,
            Mode::Quadratic => AlphaMode::Quadratic,
        }
    }
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Project configuration (JSON).
    pub config: PathBuf,
    /// Override the residual tolerance of the configuration.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Override the alpha mode of the configuration.
    #[arg(long, value_enum)]
    pub alpha_mode: Option<Mode>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every subsystem certificate.
    Verify(ConfigArgs),
    /// Verify, then check the composition LMI and solve for the abstract coupling.
    Compose(ConfigArgs),
    /// Closeness bounds of the composed network.
    Bound {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated distances.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        eps: Vec<f64>,
        /// Comma-separated horizons.
        #[arg(long, value_delimiter = ',', default_value = "10")]
        horizon: Vec<usize>,
        #[arg(long)]
        nuhat_sup: Option<f64>,
    },
    /// Full pipeline on a configuration with simulation and specification sections.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compile a co-safe formula to a DFA in DOT form.
    Compile {
        #[arg(long)]
        formula: String,
        /// Comma-separated propositions in addition to those of the formula.
        #[arg(long, value_delimiter = ',')]
        props: Vec<String>,
        /// Add the fresh letter and its absorbing location.
        #[arg(long)]
        absorb: bool,
    },
    /// Run the bundled consensus example end to end.
    Casestudy {
        /// Three states per subsystem instead of 74.
        #[arg(long)]
        small: bool,
        /// Remove the process noise.
        #[arg(long)]
        zero_noise: bool,
        #[arg(long, value_enum)]
        alpha_mode: Option<Mode>,
        #[command(flatten)]
        run: RunArgs,
    },
}

/// Text for stdout and the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

fn load(args: &ConfigArgs) -> Result<(ProjectConfig, AlphaMode), CliError> {
    let mut cfg = ProjectConfig::load(&args.config)?;
    if let Some(t) = args.tol {
        if !(t > 0.0) {
            return Err(CliError::Config(format!("tolerance {t} is not positive")));
        }
        cfg.tolerance = t;
    }
    let mode = args.alpha_mode.map_or(cfg.alpha_mode, AlphaMode::from);
    Ok((cfg, mode))
}

impl Cli {
    pub fn execute(&self) -> Result<Outcome, CliError> {
        let mut report = RunReport::default();
        let mut batch = None;
        match &self.command {
            Command::Compile { formula, props, absorb } => {
                let f = parse_scltl(formula).map_err(|e| CliError::Config(e.to_string()))?;
                let mut all: std::collections::BTreeSet<String> = props.iter().cloned().collect();
                all.extend(f.atoms());
                let mut dfa = compile_scltl(&f, &powerset_alphabet(&all)?)?;
                if *absorb {
                    dfa = absorb_dfa(&dfa)?;
                }
                let dot = dfa.to_dot();
                if let Some(dir) = &self.out {
                    write_file(dir, "spec.dot", dot.as_bytes())?;
                }
                return Ok(Outcome { stdout: dot, code: 0 });
            }
            Command::Verify(a) => {
                let (cfg, _) = load(a)?;
                verify(&cfg, cfg.tolerance, &mut report)?;
            }
            Command::Compose(a) => {
                let (cfg, mode) = load(a)?;
                if let Some(v) = verify(&cfg, cfg.tolerance, &mut report)? {
                    compose_stage(&cfg, v, mode, &mut report)?;
                }
            }
            Command::Bound { cfg: a, eps, horizon, nuhat_sup } => {
                let (cfg, mode) = load(a)?;
                let sup = nuhat_sup.unwrap_or(cfg.nuhat_sup);
                if eps.iter().any(|e| !(*e > 0.0)) || !(sup >= 0.0) {
                    return Err(CliError::Config("distances must be positive and nuhat_sup non-negative".into()));
                }
                let modes = if a.alpha_mode.is_some() {
                    vec![mode]
                } else {
                    vec![AlphaMode::Quadratic, AlphaMode::Generic]
                };
                if let Some(v) = verify(&cfg, cfg.tolerance, &mut report)? {
                    if let Some(c) = compose_stage(&cfg, v, mode, &mut report)? {
                        report.bounds = bound_rows(&c, eps, horizon, sup, &modes)?;
                    }
                }
            }
            Command::Simulate { cfg: a, run } => {
                let (cfg, mode) = load(a)?;
                batch = pipeline(&cfg, mode, run, &mut report)?;
            }
            Command::Casestudy { small, zero_noise, alpha_mode, run } => {
                let cfg = casestudy_config(*small, *zero_noise);
                let mode = alpha_mode.map_or(cfg.alpha_mode, AlphaMode::from);
                batch = pipeline(&cfg, mode, run, &mut report)?;
            }
        }
        if let Some(dir) = &self.out {
            write_file(dir, "report.json", report.to_json().as_bytes())?;
            if let Some(s) = &batch {
                write_batch_csv(dir, &s.batch)?;
                if let Some(d) = &s.dfa {
                    write_file(dir, "spec.dot", d.to_dot().as_bytes())?;
                }
            }
        }
        let stdout = match self.format {
            Format::Text => report.to_text(),
            Format::Json => report.to_json(),
        };
        Ok(Outcome { stdout, code: report.exit_code() })
    }
}

fn pipeline(cfg: &ProjectConfig, mode: AlphaMode, run: &RunArgs, report: &mut RunReport) -> Result<Option<Simulated>, CliError> {
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| CliError::Config("no simulation section".into()))?;
    let trials = run.trials.unwrap_or(sim.trials);
    if trials == 0 {
        return Err(CliError::Config("at least one trial is needed".into()));
    }
    run_pipeline(cfg, mode, trials, run.seed.unwrap_or(sim.seed), report)
}
