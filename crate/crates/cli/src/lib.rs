//! Command-line front end for the `ep_atlas` library.
//!
//! A JSON job config is the primary input; flags only pick a model,
//! override single parameters, give a grid shorthand, or set the output path.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{HamiltonianSpec, JobConfig, TableCheckSpec};
use crate::error::{CliError, Status};
use crate::output::{format_for, write_file, write_stdout};

#[derive(Debug, Parser)]
#[command(name = "ep-atlas", version, about = "Find and classify exceptional points of non-Hermitian Bloch Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON job config (schema 1).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in model name; replaces the config's Hamiltonian source.
    #[arg(long)]
    pub model: Option<String>,
    /// Parameter override `name=value`, value in the expression language.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Grid shorthand `min:max:count[,min:max:count...]`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Where to write the main report (`.csv` selects CSV).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sorted eigenvalues (and constraint values) over the grid.
    Bands(Common),
    /// Locate degeneracies and exceptional points on the grid.
    Scan(Common),
    /// Classify an EP and fit its dispersion exponents.
    Classify(Common),
    /// Check the Hamiltonian against its symmetry relations.
    Symcheck(Common),
    /// Reproduce the symmetry constraint and parameter tables.
    Tablecheck {
        #[command(flatten)]
        common: Common,
        /// Band count (2..5); all when omitted.
        #[arg(long)]
        n: Option<usize>,
        /// Symmetry kind, table row name, or `all`.
        #[arg(long)]
        kind: Option<String>,
    },
}

/// Merge flags into the loaded (or empty) config.
pub fn job_config(common: &Common) -> Result<JobConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => JobConfig::load(p)?,
        None => JobConfig::new_empty(),
    };
    if let Some(model) = &common.model {
        let keep = cfg.hamiltonian.as_ref().filter(|h| h.model.as_deref() == Some(model.as_str())).map(|h| h.params.clone());
        cfg.hamiltonian = Some(HamiltonianSpec { model: Some(model.clone()), params: keep.unwrap_or_default(), ..Default::default() });
    }
    for p in &common.params {
        let (k, v) = config::parse_param(p)?;
        let h = cfg.hamiltonian.as_mut().ok_or_else(|| CliError::config("--param", "no Hamiltonian to apply it to"))?;
        h.params.insert(k, v);
    }
    if let Some(g) = &common.grid {
        cfg.scan.get_or_insert_with(Default::default).grid = config::parse_grid(g)?;
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("EP_ATLAS_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config("EP_ATLAS_THREADS", format!("expected a positive integer, got {v:?}")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Run a command and write its reports; returns the exit status.
pub fn execute(cli: &Cli) -> Result<Status, CliError> {
    configure_threads()?;
    let (common, outcome) = match &cli.command {
        Command::Bands(c) => (c, commands::bands(&job_config(c)?)?),
        Command::Scan(c) => (c, commands::scan_cmd(&job_config(c)?)?),
        Command::Classify(c) => (c, commands::classify_cmd(&job_config(c)?)?),
        Command::Symcheck(c) => (c, commands::symcheck(&job_config(c)?)?),
        Command::Tablecheck { common, n, kind } => {
            let mut cfg = job_config(common)?;
            let spec = cfg.table_check.get_or_insert_with(TableCheckSpec::default);
            if n.is_some() {
                spec.n = *n;
            }
            if let Some(k) = kind {
                spec.kind = k.clone();
            }
            let out = commands::tablecheck(&cfg)?;
            for line in commands::table_summary(&out.documents[0]) {
                eprintln!("{line}");
            }
            (common, out)
        }
    };
    let cfg = job_config(common)?;
    for (i, doc) in outcome.documents.iter().enumerate() {
        let primary = i == 0;
        if primary {
            if let Some(path) = &common.out {
                write_file(path, &doc.render(format_for(path))?)?;
                continue;
            }
        }
        let targets: Vec<_> = cfg.outputs.iter().filter(|o| o.kind == doc.kind).collect();
        for t in &targets {
            write_file(&t.path, &doc.render(t.format)?)?;
        }
        if primary && targets.is_empty() {
            write_stdout(&doc.render(config::Format::Json)?)?;
        }
    }
    Ok(outcome.status)
}

/// Entry point shared by the binary: parse, run, report, exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("ep-atlas: {e}");
            e.exit_code()
        }
    }
}
