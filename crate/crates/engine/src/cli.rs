use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use dml_core::io::export_cypher;
use dml_core::Session;

use crate::config::ServiceConfig;
use crate::{
    downward_payload, load_text, parse_evidence, read_file, render, upward_payload, validate_text,
    EngineError,
};

#[derive(Debug, Parser)]
#[command(
    name = "dml-engine",
    version,
    about = "Diagnostic reasoning over master logic models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model document and print the validation report.
    Validate { model: PathBuf },
    /// Print element counts per tier.
    Counts { model: PathBuf },
    /// Propagate evidence upward and print per-node success probabilities.
    Up {
        model: PathBuf,
        #[arg(long)]
        evidence: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Print the success path-sets of a node.
    Down {
        model: PathBuf,
        #[arg(long)]
        node: String,
        /// Skip minimization.
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Print the model as Cypher statements.
    Cypher { model: PathBuf },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "DML_ENGINE_CONFIG")]
        config: Option<PathBuf>,
    },
}

fn session(model: &Path) -> Result<Session, EngineError> {
    Ok(Session::new(load_text(&read_file(model)?)?))
}

fn execute(command: Command) -> Result<(String, i32), EngineError> {
    match command {
        Command::Validate { model } => {
            let report = validate_text(&read_file(&model)?)?;
            let code = if report.passed() { 0 } else { 2 };
            Ok((render(&report), code))
        }
        Command::Counts { model } => Ok((render(&session(&model)?.model().count_elements()), 0)),
        Command::Up {
            model,
            evidence,
            threshold,
        } => {
            let mut s = session(&model)?;
            if let Some(path) = evidence {
                s.set_evidence(&parse_evidence(&read_file(&path)?)?)?;
            }
            Ok((upward_payload(&s, threshold)?, 0))
        }
        Command::Down {
            model,
            node,
            raw,
            limit,
        } => Ok((downward_payload(&session(&model)?, &node, raw, limit)?, 0)),
        Command::Cypher { model } => Ok((export_cypher(&load_text(&read_file(&model)?)?), 0)),
        Command::Serve { config } => {
            let config = match config {
                Some(path) => ServiceConfig::load(&path)?,
                None => ServiceConfig::default(),
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| EngineError::Io {
                path: "runtime".into(),
                message: e.to_string(),
            })?;
            runtime.block_on(crate::service::serve(&config))?;
            Ok((String::new(), 0))
        }
    }
}

/// Runs the CLI; returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command) {
        Ok((text, code)) => {
            let _ = stdout.write_all(text.as_bytes());
            code
        }
        Err(e) => {
            let _ = stderr.write_all(render(&e.body()).as_bytes());
            e.exit_code()
        }
    }
}
