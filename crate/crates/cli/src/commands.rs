use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::anyhow;
use clap::{ArgGroup, Args, Parser, Subcommand};

use vocab_tutor::sim::{build_pilot_with_log, run_pilot, RunOptions, SimConfig, SimError};
use vocab_tutor::stats::{
    assignments_from_events, per_word_ab_report, write_report_csv, AnalysisParams,
};
use vocab_tutor::store::{
    read_jsonl_file, word_status_for_class, word_status_for_learner, Event, EventLog,
};
use vocab_tutor::{ClassId, Dimension, Engine, EngineConfig, LearnerId, WordWeb};

use crate::{server, Failure};

#[derive(Debug, Parser)]
#[command(name = "tutor", version, about = "Adaptive vocabulary tutor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a word-web document and print a summary.
    Ingest(IngestArgs),
    /// Run a simulated classroom pilot and write its event log.
    Simulate(SimulateArgs),
    /// Per-word A/B analysis of an event log, written as CSV.
    Analyze(AnalyzeArgs),
    /// Word-status report for one learner or one class, as JSON.
    Report(ReportArgs),
    /// Replay a log and write the learner state as one JSON document.
    Snapshot(SnapshotArgs),
    /// Serve the tutor over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Word-web JSON document.
    pub web: PathBuf,
    /// Write the normalized document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub learners_per_class: Option<usize>,
    #[arg(long)]
    pub words: Option<usize>,
    #[arg(long)]
    pub days: Option<u32>,
    /// Simulation config JSON; omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Event log (JSON Lines) to create.
    #[arg(long)]
    pub out: PathBuf,
    /// Daily snapshot CSV [default: snapshots.csv next to the log].
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// Minimum responses per learner.
    #[arg(long, default_value_t = 3)]
    pub tau: usize,
    /// Minimum learners per group.
    #[arg(long, default_value_t = 10)]
    pub eta: usize,
    #[arg(long, default_value_t = 0.1)]
    pub level: f64,
    #[arg(long, default_value = "listening")]
    pub dimension: Dimension,
    /// CSV destination [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where the engine state comes from: a log replayed over a word web.
#[derive(Debug, Args)]
pub struct StateArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// Word-web JSON [default: wordweb.json next to the log].
    #[arg(long)]
    pub web: Option<PathBuf>,
    /// Engine config JSON [default: engine.json next to the log, if present].
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("scope").required(true).args(["class", "learner"])))]
pub struct ReportArgs {
    #[arg(long)]
    pub class: Option<String>,
    #[arg(long)]
    pub learner: Option<String>,
    #[arg(long, default_value = "listening")]
    pub dimension: Dimension,
    #[command(flatten)]
    pub state: StateArgs,
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// Destination [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long)]
    pub web: PathBuf,
    /// Event log to resume and append to; in-memory when omitted.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Report(a) => report(a),
        Command::Snapshot(a) => snapshot(a),
        Command::Serve(a) => serve(a),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::storage(e).context(path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::storage(e).context(path.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json(out: impl Write, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, value).map_err(Failure::storage)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub(crate) fn load_web(path: &Path) -> Result<WordWeb, Failure> {
    WordWeb::from_json(&read_text(path)?)
        .map_err(|e| Failure::validation(e).context(path.display()))
}

pub(crate) fn load_engine_config(path: Option<&Path>) -> Result<EngineConfig, Failure> {
    let Some(path) = path else {
        return Ok(EngineConfig::default());
    };
    let config: EngineConfig = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure::validation(e).context(path.display()))?;
    config
        .validate()
        .map_err(|e| Failure::validation(e).context(path.display()))?;
    Ok(config)
}

fn load_events(path: &Path) -> Result<Vec<Event>, Failure> {
    read_jsonl_file(path).map_err(|e| Failure::from(e).context(path.display()))
}

fn sibling(log: &Path, name: &str) -> PathBuf {
    log.with_file_name(name)
}

fn replay_state(args: &StateArgs) -> Result<Engine, Failure> {
    let web_path = args
        .web
        .clone()
        .unwrap_or_else(|| sibling(&args.log, "wordweb.json"));
    let web = load_web(&web_path)?;
    let config_path = args.config.clone().or_else(|| {
        let p = sibling(&args.log, "engine.json");
        p.exists().then_some(p)
    });
    let config = load_engine_config(config_path.as_deref())?;
    let events = load_events(&args.log)?;
    Engine::replay(Arc::new(web), config, &events)
        .map_err(|e| Failure::from(e).context(args.log.display()))
}

fn ingest(args: IngestArgs) -> Result<(), Failure> {
    let web = load_web(&args.web)?;
    let mcq_ready = web
        .curriculum()
        .iter()
        .filter(|w| web.generate_picture_mcq(w, 0).is_ok())
        .count();
    println!(
        "{}: {} words, {} relations, {} media assets; {} words can generate a picture question",
        args.web.display(),
        web.len(),
        web.relations().len(),
        web.media_assets().count(),
        mcq_ready
    );
    if let Some(out) = &args.out {
        write_json(create(out)?, &web.to_document())?;
    }
    Ok(())
}

fn sim_config(args: &SimulateArgs) -> Result<SimConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str(&read_text(path)?)
            .map_err(|e| Failure::validation(e).context(path.display()))?,
        None => SimConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.rng_seed = seed;
    }
    if let Some(c) = args.classes {
        config.num_classes = c;
    }
    if let Some(w) = args.words {
        config.num_words = w;
    }
    if let Some(d) = args.days {
        config.duration_days = d;
    }
    if let Some(per) = args.learners_per_class {
        config.num_learners = per * config.num_classes;
    }
    Ok(config)
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let config = sim_config(&args)?;
    config.validate().map_err(Failure::validation)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::from(e).context(dir.display()))?;
    }
    let log =
        EventLog::create(&args.out).map_err(|e| Failure::from(e).context(args.out.display()))?;
    let scenario = build_pilot_with_log(config, log).map_err(sim_failure)?;
    let run = run_pilot(scenario, RunOptions::default()).map_err(sim_failure)?;

    write_json(
        create(&sibling(&args.out, "wordweb.json"))?,
        &run.engine.web().to_document(),
    )?;
    write_json(
        create(&sibling(&args.out, "engine.json"))?,
        run.engine.config(),
    )?;
    let snap_path = args
        .snapshots
        .clone()
        .unwrap_or_else(|| sibling(&args.out, "snapshots.csv"));
    let mut csv = csv::Writer::from_writer(create(&snap_path)?);
    for s in &run.snapshots {
        csv.serialize(s).map_err(Failure::storage)?;
    }
    csv.flush()?;

    println!(
        "{} learners in {} classes, {} words, {} days: {} events -> {}",
        run.profiles.len(),
        run.classes.len(),
        run.config.num_words,
        run.config.duration_days,
        run.engine.events().len(),
        args.out.display()
    );
    Ok(())
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::OddClassCount(_) | SimError::InvalidConfig(_) => Failure::validation(e),
        SimError::Setup(t) | SimError::Engine { source: t, .. } => Failure::from(t),
        other => Failure::validation(other),
    }
}

fn analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let params = AnalysisParams {
        tau_min_responses: args.tau,
        eta_min_learners: args.eta,
        significance_level: args.level,
    };
    params.validate().map_err(Failure::validation)?;
    let events = load_events(&args.log)?;
    let assignments = assignments_from_events(&events);
    if assignments.is_empty() {
        return Err(Failure::validation(anyhow!(
            "log has no group assignments to compare"
        )));
    }
    let report = per_word_ab_report(&events, &assignments, &params, args.dimension)
        .map_err(Failure::validation)?;
    write_report_csv(&report, output(args.out.as_deref())?).map_err(Failure::storage)?;
    let analyzed: Vec<_> = report.iter().filter(|r| r.is_analyzed()).collect();
    let rejected = analyzed
        .iter()
        .filter(|r| r.t_test().is_some_and(|t| t.reject_null))
        .count();
    eprintln!(
        "{} of {} words analyzable; t-test rejects at {} for {}",
        analyzed.len(),
        report.len(),
        args.level,
        rejected
    );
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let engine = replay_state(&args.state)?;
    let out = io::stdout().lock();
    match (&args.class, &args.learner) {
        (Some(class), _) => {
            let rows =
                word_status_for_class(&engine, &ClassId::new(class.as_str()), args.dimension)?;
            write_json(out, &rows)
        }
        (None, Some(learner)) => {
            let rows = word_status_for_learner(
                &engine,
                &LearnerId::new(learner.as_str()),
                args.dimension,
            )?;
            write_json(out, &rows)
        }
        (None, None) => unreachable!("clap requires one scope"),
    }
}

fn snapshot(args: SnapshotArgs) -> Result<(), Failure> {
    let engine = replay_state(&args.state)?;
    write_json(output(args.out.as_deref())?, &engine.state().learners)
}

fn serve(args: ServeArgs) -> Result<(), Failure> {
    let web = Arc::new(load_web(&args.web)?);
    let config = load_engine_config(args.config.as_deref())?;
    let engine = match &args.log {
        Some(path) if path.exists() => {
            let log = EventLog::open(path).map_err(|e| Failure::from(e).context(path.display()))?;
            Engine::resume(web, config, log)
                .map_err(|e| Failure::from(e).context(path.display()))?
        }
        Some(path) => {
            let log =
                EventLog::create(path).map_err(|e| Failure::from(e).context(path.display()))?;
            Engine::with_log(web, config, log)?
        }
        None => Engine::new(web, config)?,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port)).await?;
        eprintln!("listening on {}", listener.local_addr()?);
        axum::serve(listener, server::router(engine, true)).await
    })?;
    Ok(())
}
