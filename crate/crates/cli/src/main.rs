use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use log::{info, warn};
use normforge::config::{load_lint_config, RunConfig};
use normforge::gateway::BackendKind;
use normforge::pipeline::{run_pipeline, RunOutput};
use normforge::report::{emit_report, render_text, ReportFormat};

const EXIT_CLAUSE_FAILURES: u8 = 2;
const EXIT_FATAL: u8 = 3;

/// Extract norms from contract clauses with a chat model and lint the results.
///
/// Settings come from `--config` when given; every flag below overrides the
/// matching config entry.
#[derive(Debug, Parser)]
#[command(name = "normforge", version)]
struct Args {
    /// TOML run configuration
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// CUAD JSON release or a clause-per-line JSONL file
    #[arg(long, value_name = "PATH")]
    corpus: Option<PathBuf>,

    /// Clause categories to draw from (comma separated)
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    categories: Option<Vec<String>>,

    /// Size of the uniform random sample [default: 100]
    #[arg(long, value_name = "N")]
    sample_random: Option<usize>,

    /// Size of the keyword-ranked challenging sample [default: 50]
    #[arg(long, value_name = "N")]
    sample_challenging: Option<usize>,

    /// Sampling seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,

    /// live or replay [default: replay]
    #[arg(long)]
    backend: Option<BackendKind>,

    /// Fixture file read by replay and written by --record-fixtures
    #[arg(long, value_name = "PATH")]
    fixtures: Option<PathBuf>,

    /// Model name [default: gpt-3.5-turbo]
    #[arg(long)]
    model: Option<String>,

    /// Sampling temperature [default: 0.0]
    #[arg(long)]
    temperature: Option<f64>,

    /// Output directory for the journal and reports
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Report format: jsonl, csv or text (repeatable)
    #[arg(long = "format", value_name = "FORMAT", value_delimiter = ',')]
    formats: Vec<ReportFormat>,

    /// TOML file with lint settings, replacing the config's [lints]
    #[arg(long, value_name = "PATH")]
    lint_config: Option<PathBuf>,

    /// Clauses processed concurrently [default: 1]
    #[arg(long, value_name = "N")]
    parallel: Option<usize>,

    /// Live runs also write every exchange to --fixtures
    #[arg(long)]
    record_fixtures: bool,

    /// Ignore the journal of an earlier run in --out
    #[arg(long)]
    no_resume: bool,

    /// Print the effective configuration as TOML and exit
    #[arg(long)]
    dump_config: bool,

    /// More log output (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn build_config(args: &Args) -> Result<RunConfig> {
    let mut c = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &args.corpus {
        c.corpus.path = Some(v.clone());
    }
    if let Some(v) = &args.categories {
        c.corpus.categories = v.iter().map(|s| s.trim().to_string()).collect();
    }
    if let Some(v) = args.sample_random {
        c.selection.random_count = v;
    }
    if let Some(v) = args.sample_challenging {
        c.selection.challenging_count = v;
    }
    if let Some(v) = args.seed {
        c.selection.seed = v;
    }
    if let Some(v) = args.backend {
        c.backend.kind = v;
    }
    if let Some(v) = &args.fixtures {
        c.backend.fixture_path = Some(v.clone());
    }
    if let Some(v) = &args.model {
        c.backend.model_name = v.clone();
    }
    if let Some(v) = args.temperature {
        c.backend.temperature = v;
    }
    if let Some(v) = &args.out {
        c.output.dir = Some(v.clone());
    }
    if !args.formats.is_empty() {
        c.output.formats = args.formats.clone();
    }
    if let Some(path) = &args.lint_config {
        c.lints = load_lint_config(path)?;
    }
    if let Some(v) = args.parallel {
        c.run.parallel = v;
    }
    if args.record_fixtures {
        c.run.record_fixtures = true;
    }
    if args.no_resume {
        c.run.resume = false;
    }
    Ok(c)
}

fn report(config: &RunConfig, out: &RunOutput) -> Result<()> {
    if let Some(dir) = &config.output.dir {
        let written = emit_report(&out.records, &out.summary, &config.output.formats, dir)
            .with_context(|| format!("writing reports to {}", dir.display()))?;
        for path in written {
            info!("wrote {}", path.display());
        }
    }
    if config.output.dir.is_none() || config.output.formats.contains(&ReportFormat::Text) {
        print!("{}", render_text(&out.records, &out.summary));
    }
    Ok(())
}

fn fatal(e: &anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(EXIT_FATAL)
}

fn main() -> ExitCode {
    // clap's own usage-error code (2) would collide with clause failures
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_FATAL);
        }
        Err(e) => e.exit(),
    };
    let level = match args.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let config = match build_config(&args) {
        Ok(c) => c,
        Err(e) => return fatal(&e),
    };
    if args.dump_config {
        print!("{}", config.to_toml_string());
        return ExitCode::SUCCESS;
    }

    let out = match run_pipeline(&config) {
        Ok(out) => out,
        Err(e) => return fatal(&e.into()),
    };
    for w in &out.warnings {
        warn!("{w}");
    }
    info!(
        "{} clause(s): {} reused from the journal",
        out.selection_size, out.reused
    );
    if let Err(e) = report(&config, &out) {
        return fatal(&e);
    }
    if out.summary.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &out.summary.failures {
            eprintln!("clause {} failed: {}", f.clause_id, f.message);
        }
        ExitCode::from(EXIT_CLAUSE_FAILURES)
    }
}
