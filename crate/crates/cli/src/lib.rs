//! Command line front end: configuration, file formats and the subcommands.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use error::{CliError, CliResult};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "borel-ns", version, about = "Borel-plane Navier-Stokes solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags mirror the config keys and override `--config`.
#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    /// `key = value` config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    /// Galerkin half-width
    #[arg(long = "N")]
    pub modes: Option<String>,
    #[arg(long)]
    pub nu: Option<String>,
    /// acceleration order
    #[arg(long = "n")]
    pub order: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub q0: Option<String>,
    #[arg(long)]
    pub qm: Option<String>,
    #[arg(long)]
    pub m0: Option<String>,
    #[arg(long)]
    pub alpha0: Option<String>,
    #[arg(long)]
    pub output_dir: Option<String>,
    #[arg(long)]
    pub c4: Option<String>,
    #[arg(long)]
    pub c_m_table: Option<String>,
    #[arg(long)]
    pub v0_file: Option<String>,
    #[arg(long)]
    pub forcing_file: Option<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(p) = &self.config {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            cfg.merge_text(&text)?;
        }
        let flags = [
            ("problem", &self.problem),
            ("N", &self.modes),
            ("nu", &self.nu),
            ("n", &self.order),
            ("delta", &self.delta),
            ("q0", &self.q0),
            ("qm", &self.qm),
            ("m0", &self.m0),
            ("alpha0", &self.alpha0),
            ("output_dir", &self.output_dir),
            ("c4", &self.c4),
            ("c_m_table", &self.c_m_table),
            ("v0_file", &self.v0_file),
            ("forcing_file", &self.forcing_file),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// March the Borel-plane equation and store the trajectory
    Solve(ConfigArgs),
    /// Existence-time certificate for a stored trajectory
    Certify {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// trajectory file (default: <output_dir>/trajectory.bnst)
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// check the arithmetic with injected constants instead
        #[arg(long)]
        self_test: bool,
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        #[arg(long, default_value_t = 1.1403)]
        epsilon: f64,
        #[arg(long, default_value_t = 13.6921)]
        epsilon1: f64,
        /// calibrate the classical-time table to this T_cl
        #[arg(long)]
        calibrate_tcl: Option<f64>,
    },
    /// Resum a stored trajectory at the given times
    Synthesize {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        /// also write CSV snapshots
        #[arg(long)]
        csv: bool,
    },
    /// Refinement study of the manufactured case
    Convergence {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
    },
    /// Dump F and G with their evaluation regime as CSV
    KernelTable {
        #[arg(long = "n", default_value_t = 2)]
        order: u32,
        #[arg(long, default_value_t = 50.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, default_value = "kernel_table.csv")]
        output: PathBuf,
    },
    /// Dump the startup Taylor coefficient norms as CSV
    StartupDump(ConfigArgs),
}

pub fn execute(cli: Cli) -> CliResult<String> {
    let traj_path = |cfg: &RunConfig, p: Option<PathBuf>| p.unwrap_or_else(|| cfg.output_dir.join(commands::TRAJECTORY_FILE));
    match cli.command {
        Command::Solve(a) => commands::cmd_solve(&a.resolve()?),
        Command::Certify { cfg, trajectory, self_test, b, epsilon, epsilon1, calibrate_tcl } => {
            let cfg = cfg.resolve()?;
            if self_test {
                commands::certify_self_test(b, epsilon, epsilon1, cfg.n, cfg.alpha0)
            } else {
                let p = traj_path(&cfg, trajectory);
                commands::cmd_certify(&cfg, &p, calibrate_tcl)
            }
        }
        Command::Synthesize { cfg, trajectory, times, csv } => {
            let cfg = cfg.resolve()?;
            let p = traj_path(&cfg, trajectory);
            commands::cmd_synthesize(&cfg, &p, &times, csv)
        }
        Command::Convergence { cfg, deltas } => commands::cmd_convergence(&cfg.resolve()?, &deltas),
        Command::KernelTable { order, mu_max, points, output } => commands::cmd_kernel_table(order, mu_max, points, &output),
        Command::StartupDump(a) => commands::cmd_startup_dump(&a.resolve()?),
    }
}
