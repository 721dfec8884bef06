//! `idecomp`: check and compute interaction decompositions from JSON specs.
//!
//! Exit status: 0 when the job passes (decomposable, factorizes), 1 when it
//! fails, 2 on any input error.

mod job;
mod report;

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use job::{InputError, Mode, Overrides};

#[derive(Debug, Parser)]
#[command(name = "idecomp", version, about = "Interaction decompositions of subspace families and isometry diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct Common {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    #[arg(long, global = true)]
    tol_proj: Option<f64>,
    #[arg(long, global = true)]
    tol_eq: Option<f64>,
    /// Cap on lower-set enumeration.
    #[arg(long, global = true)]
    max_lowersets: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the intersection property and build the decomposition.
    Decompose {
        /// Job file (`-` for stdin).
        #[arg(long)]
        input: PathBuf,
    },
    /// Check the intersection property only.
    Check {
        #[arg(long)]
        input: PathBuf,
    },
    /// Test whether a distribution factorizes along a hierarchical model.
    AnalyzeGibbs {
        /// `{"variables": [{"name": .., "states": ..}, ..]}`
        #[arg(long)]
        model: PathBuf,
        /// Flat array of probabilities, first variable slowest.
        #[arg(long)]
        dist: PathBuf,
        /// Array of variable-name lists.
        #[arg(long)]
        classes: PathBuf,
    },
    /// Hermite-Ito expansions for a finite Gaussian vector.
    Chaos {
        /// Number of sites, named s1..sn.
        #[arg(long)]
        sites: usize,
        /// Covariance matrix; identity when omitted.
        #[arg(long)]
        cov: Option<PathBuf>,
        #[arg(long)]
        max_degree: usize,
        /// Monomial to expand, e.g. `s1*s1*s2`; repeatable.
        #[arg(long)]
        expand: Vec<String>,
    },
}

fn read_json(path: &Path, pointer: &str) -> Result<Value, InputError> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| InputError::at(pointer, format!("reading stdin: {e}")))?;
        s
    } else {
        fs::read_to_string(path)
            .map_err(|e| InputError::at(pointer, format!("reading {}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| {
        InputError::at(
            pointer,
            format!("{}: invalid JSON at line {}, column {}: {e}", path.display(), e.line(), e.column()),
        )
    })
}

fn job_document(cmd: &Command) -> Result<(Value, Mode), InputError> {
    Ok(match cmd {
        Command::Decompose { input } => (read_json(input, "")?, Mode::Decompose),
        Command::Check { input } => (read_json(input, "")?, Mode::Check),
        Command::AnalyzeGibbs {
            model,
            dist,
            classes,
        } => (
            json!({
                "kind": "gibbs",
                "model": read_json(model, "/model")?,
                "dist": read_json(dist, "/dist")?,
                "classes": read_json(classes, "/classes")?,
            }),
            Mode::Decompose,
        ),
        Command::Chaos {
            sites,
            cov,
            max_degree,
            expand,
        } => {
            let mut doc = json!({
                "kind": "chaos",
                "sites": sites,
                "max_degree": max_degree,
                "expand": expand,
            });
            if let Some(path) = cov {
                doc["cov"] = read_json(path, "/cov")?;
            }
            (doc, Mode::Decompose)
        }
    })
}

fn max_dim_from_env() -> Result<Option<usize>, InputError> {
    match std::env::var("ID_MAX_DIM") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| InputError::at("", format!("ID_MAX_DIM must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let overrides = Overrides {
            tol_rank: cli.common.tol_rank,
            tol_proj: cli.common.tol_proj,
            tol_eq: cli.common.tol_eq,
            max_lower_sets: cli.common.max_lowersets,
            max_dim: max_dim_from_env()?,
        };
        let (doc, mode) = job_document(&cli.command)?;
        let hash = report::spec_hash(&doc);
        Ok::<_, InputError>(job::run(&doc, mode, &overrides)?.with_hash(hash))
    })();
    match result {
        Ok(report) => {
            let out = match cli.common.format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            };
            print!("{out}");
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            match cli.common.format {
                Format::Json => {
                    let err = json!({"error": {"pointer": e.pointer, "message": e.message}});
                    println!("{}", serde_json::to_string_pretty(&err).expect("values serialize"));
                }
                Format::Text => {}
            }
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
