//! Command-line front end.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use chainlog_core::{
    validate_changelog, ChangeLog, CheckOutcome, IngestConfig, PathKind, SessionConfig,
    StartDistribution, TransitionModel,
};
use clap::{Args, Parser, Subcommand};

use crate::analyze::{build_paths, load_log, run_analyze, AnalysisConfig, EntropySource};
use crate::error::{Error, Result};
use crate::hierarchy_io::load_hierarchy;
use crate::ingest::{read_records, read_user_list, LogFormat};
use crate::model_io::{load_model, save_model};
use crate::paths_io::{read_paths_jsonl, write_paths_jsonl};

pub const SEED_ENV: &str = "CHAINLOG_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "chainlog",
    version,
    about = "Sequential interaction mining over ontology change logs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a change log for ordering, consistency and reference problems.
    Validate {
        #[command(flatten)]
        input: LogArgs,
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        #[arg(long)]
        root: Option<String>,
    },
    /// Extract interaction paths as JSON lines.
    Paths {
        #[command(flatten)]
        input: LogArgs,
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        #[arg(long)]
        root: Option<String>,
        #[arg(long, value_parser = parse_kind)]
        kind: PathKind,
        #[arg(long, default_value_t = 300)]
        break_secs: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full pipeline and write matrix, counts, histogram, report and heatmap.
    Analyze {
        #[command(flatten)]
        input: LogArgs,
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        #[arg(long)]
        root: Option<String>,
        #[arg(long, value_parser = parse_kind)]
        kind: PathKind,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 300)]
        break_secs: u64,
        #[arg(long, default_value_t = 0)]
        min_user_changes: u64,
        #[arg(long, default_value = "user-changes")]
        entropy_source: EntropySource,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a Markov chain model on a paths file.
    Fit {
        #[arg(long)]
        paths: PathBuf,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank the most likely next states after a history.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// One state per occurrence, oldest first; repeat for higher orders.
        #[arg(long = "history", required = true)]
        history: Vec<String>,
        #[arg(long, default_value_t = 3)]
        top: usize,
    },
    /// Draw synthetic paths from a model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1)]
        n_paths: usize,
        #[arg(long)]
        len: usize,
        /// Overridden by the CHAINLOG_SEED environment variable.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixed starting history; defaults to the empirical context distribution.
        #[arg(long = "start")]
        start: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Log-likelihood of a paths file under a model.
    Loglik {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        paths: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct LogArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// jsonl or csv; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<LogFormat>,
    /// File listing bot usernames to exclude, one per line.
    #[arg(long)]
    pub bots: Option<PathBuf>,
    #[arg(long)]
    pub obfuscate: bool,
}

impl LogArgs {
    fn ingest_config(&self) -> Result<IngestConfig> {
        let mut cfg = IngestConfig {
            obfuscate_users: self.obfuscate,
            ..IngestConfig::default()
        };
        if let Some(bots) = &self.bots {
            cfg.bot_users = read_user_list(bots)?;
        }
        Ok(cfg)
    }

    fn format(&self) -> LogFormat {
        self.format
            .unwrap_or_else(|| LogFormat::from_extension(&self.log))
    }
}

fn parse_kind(s: &str) -> std::result::Result<PathKind, String> {
    s.parse()
        .map_err(|e: chainlog_core::PathError| e.to_string())
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let w = |e: io::Error| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };

    match cli.command {
        Command::Validate {
            input,
            hierarchy,
            root,
        } => {
            let config = input.ingest_config()?;
            let (records, digest) = read_records(&input.log, input.format())?;
            let records = records
                .into_iter()
                .filter(|r| !config.bot_users.contains(&r.user))
                .collect();
            let log = ChangeLog::from_raw(records, digest);
            let graph = hierarchy
                .as_deref()
                .map(|p| load_hierarchy(p, root.as_deref()))
                .transpose()?;
            let report = validate_changelog(&log, &config, graph.as_ref());
            writeln!(out, "records\t{}", log.len()).map_err(w)?;
            for (kind, outcome) in &report.checks {
                match outcome {
                    CheckOutcome::Passed => writeln!(out, "PASS\t{kind}"),
                    CheckOutcome::Skipped(why) => writeln!(out, "SKIP\t{kind}\t{why}"),
                    CheckOutcome::Failed(findings) => {
                        writeln!(out, "FAIL\t{kind}\t{} finding(s)", findings.len()).map_err(w)?;
                        for (seq, msg) in findings.iter().take(10) {
                            writeln!(out, "\tseq {seq}: {msg}").map_err(w)?;
                        }
                        Ok(())
                    }
                }
                .map_err(w)?;
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Paths {
            input,
            hierarchy,
            root,
            kind,
            break_secs,
            out: target,
        } => {
            let log = load_log(&input.log, input.format, &input.ingest_config()?)?;
            let graph = hierarchy
                .as_deref()
                .map(|p| load_hierarchy(p, root.as_deref()))
                .transpose()?;
            let session = SessionConfig::from_secs(break_secs)?;
            let paths = build_paths(kind, &log, graph.as_ref(), &session)?;
            write_paths_jsonl(&paths, &target)?;
            writeln!(out, "wrote {} paths to {}", paths.len(), target.display()).map_err(w)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze {
            input,
            hierarchy,
            root,
            kind,
            order,
            alpha,
            break_secs,
            min_user_changes,
            entropy_source,
            out: out_dir,
        } => {
            let cfg = AnalysisConfig {
                log_path: input.log.clone(),
                log_format: input.format,
                hierarchy_path: hierarchy,
                root_override: root,
                path_kind: kind,
                order,
                alpha,
                break_secs,
                min_user_changes,
                ingest: input.ingest_config()?,
                entropy_source,
                out_dir,
            };
            let bundle = run_analyze(&cfg)?;
            for p in &bundle.outputs {
                writeln!(out, "{}", p.display()).map_err(w)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit {
            paths,
            order,
            alpha,
            out: target,
        } => {
            let paths = read_paths_jsonl(&paths)?;
            let model = TransitionModel::fit(&paths, order, alpha)?;
            save_model(&model, &target)?;
            writeln!(
                out,
                "fitted order-{order} model: {} states, {} histories, {} transitions",
                model.states().len(),
                model.histories().len(),
                model.n_transitions()
            )
            .map_err(w)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict {
            model,
            history,
            top,
        } => {
            let model = load_model(&model)?;
            for (label, p) in model.predict_top_k(&history, top)? {
                writeln!(out, "{label}\t{p:.9}").map_err(w)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample {
            model,
            n_paths,
            len,
            seed,
            start,
            out: target,
        } => {
            let model = load_model(&model)?;
            let seed = match std::env::var(SEED_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|e| Error::Config(format!("{SEED_ENV}={v:?}: {e}")))?,
                Err(_) => seed,
            };
            let start = if start.is_empty() {
                StartDistribution::Empirical
            } else {
                StartDistribution::Fixed(start)
            };
            let paths = model.sample_paths(n_paths, len, seed, &start)?;
            write_paths_jsonl(&paths, &target)?;
            writeln!(
                out,
                "wrote {} paths (seed {seed}) to {}",
                paths.len(),
                target.display()
            )
            .map_err(w)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Loglik { model, paths } => {
            let model = load_model(&model)?;
            let paths = read_paths_jsonl(&paths)?;
            let ll = model.log_likelihood(&paths)?;
            writeln!(out, "log_likelihood\t{:.9}", ll.value).map_err(w)?;
            writeln!(out, "windows\t{}", ll.windows).map_err(w)?;
            writeln!(
                out,
                "zero_probability_windows\t{}",
                ll.zero_probability_windows
            )
            .map_err(w)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
