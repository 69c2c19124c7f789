use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use storyline::eval::{evaluate_run, EvalError};
use storyline::json::to_canonical_pretty;
use storyline::narrative::NarrativeMode;
use storyline::pipeline::{analyze_to_dir, AnalyzeConfig, PipelineError};
use storyline_server::{AppState, ServiceConfig, ServiceError};

/// Insight mining, data stories and the editing-loop service.
#[derive(Parser)]
#[command(name = "storyline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the offline pipeline and write its artifacts.
    Analyze {
        /// Analyze config, or the manifest.json of an earlier run.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's narrative mode.
        #[arg(long, value_parser = ["template", "remote"])]
        narrative_mode: Option<String>,
    },
    /// Score produced runs against annotations.
    Eval {
        /// Directory holding one `<dataset>/` output directory per dataset.
        #[arg(long)]
        produced: PathBuf,
        /// Directory holding `<dataset>.ranking.jsonl` and reference stories.
        #[arg(long)]
        annotations: PathBuf,
        /// Directory for eval_report.json and eval_report.md.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        /// Service config document.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        registry_dir: Option<PathBuf>,
        #[arg(long)]
        session_dir: Option<PathBuf>,
    },
}

enum Failure {
    /// Missing files or malformed documents.
    Input(String),
    Other(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_io_or_format() {
            Failure::Input(e.to_string())
        } else {
            Failure::Other(e.to_string())
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io { .. } | EvalError::Format { .. } => Failure::Input(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Io { .. } => Failure::Input(e.to_string()),
            ServiceError::Pipeline(p) => p.into(),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn write(path: PathBuf, text: &str) -> Result<(), Failure> {
    std::fs::write(&path, text)
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn analyze(config: PathBuf, out: PathBuf, mode: Option<String>) -> Result<(), Failure> {
    let mut cfg = AnalyzeConfig::load(&config)?;
    if let Some(m) = mode {
        cfg.narrative.mode = m
            .parse::<NarrativeMode>()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    if cfg.narrative.mode == NarrativeMode::Remote {
        cfg.narrative = cfg.narrative.with_env();
    }
    let run = analyze_to_dir(&cfg, &out)?;
    eprintln!(
        "{}: {} insights from {} subspaces in {:.0} ms; artifacts in {}",
        run.table.name(),
        run.pool.len(),
        run.cube.len(),
        run.timings.total_ms,
        out.display()
    );
    Ok(())
}

fn eval(produced: PathBuf, annotations: PathBuf, out: PathBuf) -> Result<(), Failure> {
    let report = evaluate_run(&produced, &annotations)?;
    std::fs::create_dir_all(&out)
        .map_err(|e| Failure::Input(format!("cannot create {}: {e}", out.display())))?;
    write(
        out.join("eval_report.json"),
        &to_canonical_pretty(&report).map_err(|e| Failure::Other(e.to_string()))?,
    )?;
    let md = report.to_markdown();
    write(out.join("eval_report.md"), &md)?;
    print!("{md}");
    Ok(())
}

fn serve(
    config: Option<PathBuf>,
    bind: Option<String>,
    registry_dir: Option<PathBuf>,
    session_dir: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ServiceConfig>(&text)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
        }
        None => ServiceConfig::default(),
    };
    cfg.bind = bind.unwrap_or(cfg.bind);
    cfg.registry_dir = registry_dir.unwrap_or(cfg.registry_dir);
    cfg.session_dir = session_dir.unwrap_or(cfg.session_dir);
    if cfg.narrative.mode == NarrativeMode::Remote {
        cfg.narrative = cfg.narrative.with_env();
    }
    let bind = cfg.bind.clone();
    let state = Arc::new(AppState::new(cfg)?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Other(e.to_string()))?;
    eprintln!("listening on http://{bind}");
    rt.block_on(storyline_server::serve(state))
        .map_err(|e| Failure::Input(format!("serve on {bind}: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze {
            config,
            out,
            narrative_mode,
        } => analyze(config, out, narrative_mode),
        Command::Eval {
            produced,
            annotations,
            out,
        } => eval(produced, annotations, out),
        Command::Serve {
            config,
            bind,
            registry_dir,
            session_dir,
        } => serve(config, bind, registry_dir, session_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
