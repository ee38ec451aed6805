use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use face_affect::pipeline::{self, server, PipelineConfig, ProcessOptions, Workspace};
use face_affect::sampler::SamplingStrategy;
use face_affect::stats::AnalysisReport;
use face_affect::{Error, Result};

#[derive(Parser)]
#[command(name = "face-affect", version, about = "Facial affect analysis of political videos")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Frame sampling: uniform300 or stride50 (any uniformN / strideK).
    #[arg(long, global = true)]
    strategy: Option<SamplingStrategy>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Join manifest and labels, fetch media.
    Ingest,
    /// Detect, classify and summarize every ingested video.
    Process {
        #[arg(long)]
        force: bool,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Manual verification of ambiguous videos.
    Review {
        #[command(subcommand)]
        action: ReviewAction,
    },
    /// Statistics and figures from the summary table.
    Analyze {
        /// Analyze this summary CSV instead of the pipeline output.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Figures only.
    Figures {
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ReviewAction {
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
    },
}

fn config(cli: &Cli, required: bool) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None if required => return Err(Error::Config("--config is required for this command".into())),
        None => PipelineConfig::new(PathBuf::new(), PathBuf::new(), PathBuf::from("out")),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(s) = cli.strategy {
        cfg.strategy = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Strategies to analyze: the one asked for, else every one with a summary.
fn strategies(cli: &Cli, cfg: &PipelineConfig) -> Vec<SamplingStrategy> {
    if let Some(s) = cli.strategy {
        return vec![s];
    }
    let ws = Workspace::new(&cfg.out_dir);
    let found: Vec<SamplingStrategy> = [SamplingStrategy::default(), SamplingStrategy::STRIDE_DEFAULT]
        .into_iter()
        .filter(|s| ws.summary(*s).exists() || ws.strategy_dir(*s).join("faces").exists())
        .collect();
    if found.is_empty() {
        vec![cfg.strategy]
    } else {
        found
    }
}

fn print_report(report: &AnalysisReport, json: &std::path::Path) {
    println!("{}", report.to_text());
    println!("report written to {}", json.display());
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Ingest => {
            let cfg = config(cli, true)?;
            let r = pipeline::ingest(&cfg)?;
            println!(
                "{} videos ({} pluralist, {} populist); media ready for {}",
                r.videos, r.pluralist, r.populist, r.media_ready
            );
            for (id, reason) in &r.media_failed {
                println!("  {id}: {reason}");
            }
            Ok(u8::from(!r.media_failed.is_empty()))
        }
        Command::Process { force, jobs } => {
            let cfg = config(cli, true)?;
            let report = pipeline::process(&cfg, ProcessOptions { force: *force, jobs: *jobs })?;
            println!("{}", report.summary_line());
            for v in &report.videos {
                if let Some(d) = &v.detail {
                    println!("  {} {:?}: {d}", v.video_id, v.status);
                }
            }
            Ok(report.exit_code() as u8)
        }
        Command::Review {
            action: ReviewAction::Serve { port },
        } => {
            let cfg = config(cli, false)?;
            let root = Workspace::new(&cfg.out_dir).review_root(cfg.strategy);
            let pending = server::pending_items(&root)?.len();
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Config(format!("runtime: {e}")))?;
            rt.block_on(async {
                let listener = server::bind(*port).await?;
                println!("{pending} videos awaiting review at http://127.0.0.1:{port}/api/videos");
                server::serve(listener, root).await
            })?;
            Ok(0)
        }
        Command::Analyze { summary } => {
            let cfg = config(cli, false)?;
            if let Some(path) = summary {
                let rows = face_affect::affect::read_summary_csv(path)?;
                let label = cli.strategy.unwrap_or(cfg.strategy).to_string();
                let dir = Workspace::new(&cfg.out_dir).root().join(&label);
                let out = pipeline::analyze_summary(&rows, &cfg, &label, &dir)?;
                print_report(&out.report, &out.report_json);
                return Ok(0);
            }
            for s in strategies(cli, &cfg) {
                let out = pipeline::analyze(&cfg, s)?;
                print_report(&out.report, &out.report_json);
                println!("{} figures written, {} skipped", out.figures.written.len(), out.figures.skipped.len());
            }
            Ok(0)
        }
        Command::Figures { summary } => {
            let cfg = config(cli, false)?;
            let outcomes = match summary {
                Some(path) => {
                    let rows = face_affect::affect::read_summary_csv(path)?;
                    let s = cli.strategy.unwrap_or(cfg.strategy);
                    let dir = Workspace::new(&cfg.out_dir).figures_dir(s);
                    vec![face_affect::viz::render_figures(&rows, &s.to_string(), &dir, cfg.seed)?]
                }
                None => strategies(cli, &cfg)
                    .into_iter()
                    .map(|s| pipeline::figures(&cfg, s))
                    .collect::<Result<_>>()?,
            };
            for o in outcomes {
                for p in &o.written {
                    println!("{}", p.display());
                }
                for s in &o.skipped {
                    println!("skipped: {s}");
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_configuration() { 2 } else { 1 })
        }
    }
}
