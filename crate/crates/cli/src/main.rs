//! Command-line front end: run simulations, validate and replay logs, and
//! generate analysis reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use werewolf_engine::agents::{GatewayConfig, MockBackend, ModelGateway};
use werewolf_engine::config::GameConfig;
use werewolf_engine::log::{read_log, replay, validate_file, FileSink, ReplayError};
use werewolf_engine::metrics::{extract_game, figure_csv, run_report, GameData};
use werewolf_engine::runner::{GameRunner, RunError};

// Stable exit codes, documented in the README.
const EXIT_OK: u8 = 0;
const EXIT_GENERAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BACKEND: u8 = 3;
const EXIT_SCHEMA: u8 = 4;
const EXIT_REPLAY_MISMATCH: u8 = 5;
const EXIT_REPLAY_PARTIAL: u8 = 6;

#[derive(Parser)]
#[command(
    name = "werewolf",
    version,
    about = "Deterministic Werewolf simulator with statement-level deception measurement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Mock,
    Llm,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of games, writing one NDJSON log per game plus a manifest.
    Run(RunArgs),
    /// Analyze a run directory into the full metrics report.
    Analyze(AnalyzeArgs),
    /// Replay one log and verify it against its own recorded snapshots.
    Replay(ReplayArgs),
    /// Schema-validate NDJSON logs line by line.
    Validate(ValidateArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Number of games to run.
    #[arg(long)]
    games: u32,
    #[arg(long, value_enum, default_value = "mock")]
    mode: Mode,
    /// Base seed; game i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for logs and the manifest.
    #[arg(long)]
    out: PathBuf,
    /// TOML config file (game settings and backend settings).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Independent game workers.
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    overwrite: bool,
    /// Model endpoint URL (llm mode; overrides config file and environment).
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name passed through to the endpoint.
    #[arg(long)]
    model: Option<String>,
    /// Name of the environment variable holding the API credential.
    #[arg(long)]
    api_key_env: Option<String>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    max_retries: Option<u32>,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Run directory containing manifest.json and per-game logs.
    #[arg(long)]
    logs: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    format: ReportFormat,
    /// Report output path (defaults to report.<ext> inside the run dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ReplayArgs {
    /// Path to one game log.
    log_file: PathBuf,
}

#[derive(clap::Args)]
struct ValidateArgs {
    /// Run directory or single .ndjson file.
    path: PathBuf,
}

/// TOML config file: game settings plus backend settings.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default)]
struct ConfigFile {
    game: GameConfig,
    backend: GatewayConfig,
}

#[derive(Debug, Clone, Serialize)]
struct ManifestGame {
    game_id: String,
    seed: u64,
    file: String,
    winner: Option<String>,
    rounds: u32,
    statements: u32,
    events: u64,
    aborted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    abort_reason: Option<String>,
}

#[derive(Debug, Serialize)]
struct Manifest {
    run_id: String,
    mode: String,
    base_seed: u64,
    games: u32,
    parallelism: usize,
    settings_hash: String,
    config: GameConfig,
    game_files: Vec<ManifestGame>,
}

#[derive(Deserialize)]
struct ManifestIn {
    game_files: Vec<ManifestGameIn>,
}

#[derive(Deserialize)]
struct ManifestGameIn {
    game_id: String,
    file: String,
    aborted: bool,
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Replay(args) => cmd_replay(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

fn load_config(args: &RunArgs) -> Result<(GameConfig, GatewayConfig), String> {
    let mut file_cfg = ConfigFile::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        file_cfg = toml::from_str(&text).map_err(|e| format!("invalid config file: {e}"))?;
    }
    let mut game = file_cfg.game;
    let mut backend = file_cfg.backend;

    // Environment overrides file values; CLI flags override both.
    if let Ok(v) = std::env::var("WEREWOLF_ENDPOINT") {
        backend.endpoint = v;
    }
    if let Ok(v) = std::env::var("WEREWOLF_MODEL") {
        backend.model = v;
    }
    if let Ok(v) = std::env::var("WEREWOLF_API_KEY_ENV") {
        backend.api_key_env = Some(v);
    }
    if let Ok(v) = std::env::var("WEREWOLF_TIMEOUT_SECS") {
        backend.timeout_secs = v.parse().map_err(|_| "WEREWOLF_TIMEOUT_SECS must be an integer")?;
    }
    if let Ok(v) = std::env::var("WEREWOLF_MAX_RETRIES") {
        backend.max_retries = v.parse().map_err(|_| "WEREWOLF_MAX_RETRIES must be an integer")?;
    }
    if let Some(v) = &args.endpoint {
        backend.endpoint = v.clone();
    }
    if let Some(v) = &args.model {
        backend.model = v.clone();
    }
    if let Some(v) = &args.api_key_env {
        backend.api_key_env = Some(v.clone());
    }
    if let Some(v) = args.timeout_secs {
        backend.timeout_secs = v;
    }
    if let Some(v) = args.max_retries {
        backend.max_retries = v;
    }

    game.seed = args.seed;
    game.validate().map_err(|e| e.to_string())?;
    Ok((game, backend))
}

fn cmd_run(args: RunArgs) -> ExitCode {
    if args.games == 0 {
        return fail(EXIT_CONFIG, "--games must be at least 1");
    }
    if args.parallelism == 0 {
        return fail(EXIT_CONFIG, "--parallelism must be at least 1");
    }
    let (base_config, backend_config) = match load_config(&args) {
        Ok(pair) => pair,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    // Fail fast in llm mode: endpoint and credential are checked before any
    // game starts.
    if args.mode == Mode::Llm {
        if let Err(e) = ModelGateway::new(backend_config.clone()) {
            return fail(EXIT_CONFIG, e);
        }
    }

    if let Err(e) = std::fs::create_dir_all(&args.out) {
        return fail(EXIT_GENERAL, format!("cannot create {}: {e}", args.out.display()));
    }
    match std::fs::read_dir(&args.out) {
        Ok(mut entries) => {
            if entries.next().is_some() && !args.overwrite {
                return fail(
                    EXIT_CONFIG,
                    format!("{} is not empty; pass --overwrite to reuse it", args.out.display()),
                );
            }
        }
        Err(e) => return fail(EXIT_GENERAL, format!("cannot read {}: {e}", args.out.display())),
    }

    let indices: Vec<u32> = (0..args.games).collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<BTreeMap<u32, ManifestGame>> = Mutex::new(BTreeMap::new());
    let out_dir = args.out.clone();
    let mode = args.mode;

    std::thread::scope(|scope| {
        for _ in 0..args.parallelism.min(indices.len()) {
            scope.spawn(|| loop {
                let slot = next.fetch_add(1, Ordering::SeqCst);
                let Some(&index) = indices.get(slot) else { break };
                let game_id = format!("g{index:04}");
                let seed = args.seed.wrapping_add(index as u64);
                let mut config = base_config.clone();
                config.seed = seed;
                let file_name = format!("{game_id}.ndjson");
                let entry =
                    run_one_game(&out_dir.join(&file_name), &game_id, seed, config, mode, &backend_config)
                        .unwrap_or_else(|reason| ManifestGame {
                            game_id: game_id.clone(),
                            seed,
                            file: file_name.clone(),
                            winner: None,
                            rounds: 0,
                            statements: 0,
                            events: 0,
                            aborted: true,
                            abort_reason: Some(reason),
                        });
                results.lock().unwrap().insert(index, entry);
            });
        }
    });

    let games: Vec<ManifestGame> = results.into_inner().unwrap().into_values().collect();
    let mut settings = base_config.clone();
    settings.seed = 0;
    let manifest = Manifest {
        run_id: args
            .out
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".to_string()),
        mode: match mode {
            Mode::Mock => "mock".to_string(),
            Mode::Llm => "llm".to_string(),
        },
        base_seed: args.seed,
        games: args.games,
        parallelism: args.parallelism,
        settings_hash: settings.content_hash(),
        config: base_config,
        game_files: games,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = std::fs::write(args.out.join("manifest.json"), manifest_json + "\n") {
        return fail(EXIT_GENERAL, format!("cannot write manifest: {e}"));
    }

    let mut any_abort = false;
    for g in &manifest.game_files {
        if g.aborted {
            any_abort = true;
            println!(
                "{} seed={} ABORTED: {}",
                g.game_id,
                g.seed,
                g.abort_reason.as_deref().unwrap_or("unknown")
            );
        } else {
            println!(
                "{} seed={} winner={} rounds={} statements={} events={}",
                g.game_id,
                g.seed,
                g.winner.as_deref().unwrap_or("?"),
                g.rounds,
                g.statements,
                g.events
            );
        }
    }
    if any_abort {
        ExitCode::from(EXIT_BACKEND)
    } else {
        ExitCode::from(EXIT_OK)
    }
}

fn run_one_game(
    path: &Path,
    game_id: &str,
    seed: u64,
    config: GameConfig,
    mode: Mode,
    backend_config: &GatewayConfig,
) -> Result<ManifestGame, String> {
    let mut sink = FileSink::create(path, game_id).map_err(|e| e.to_string())?;
    let mut mock = MockBackend;
    let mut gateway;
    let backend: &mut dyn werewolf_engine::agents::AgentBackend = match mode {
        Mode::Mock => &mut mock,
        Mode::Llm => {
            gateway = ModelGateway::new(backend_config.clone()).map_err(|e| e.to_string())?;
            &mut gateway
        }
    };
    let runner = GameRunner::new(config, backend, &mut sink).map_err(|e| e.to_string())?;
    match runner.run() {
        Ok(summary) => Ok(ManifestGame {
            game_id: game_id.to_string(),
            seed,
            file: path.file_name().unwrap().to_string_lossy().into_owned(),
            winner: Some(summary.winner.to_string()),
            rounds: summary.rounds,
            statements: summary.statements,
            events: summary.events,
            aborted: false,
            abort_reason: None,
        }),
        Err(RunError::Backend { player, source }) => {
            Err(format!("backend failure while deciding for {player}: {source}"))
        }
        Err(other) => Err(other.to_string()),
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> ExitCode {
    let manifest_path = args.logs.join("manifest.json");
    let manifest_text = match std::fs::read_to_string(&manifest_path) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                EXIT_CONFIG,
                format!("cannot read {} ({e}); is this a run directory?", manifest_path.display()),
            )
        }
    };
    let manifest: ManifestIn = match serde_json::from_str(&manifest_text) {
        Ok(m) => m,
        Err(e) => return fail(EXIT_SCHEMA, format!("invalid manifest: {e}")),
    };

    // Schema-validate everything first; refuse to analyze a corrupt run.
    let mut violation_count = 0usize;
    for g in &manifest.game_files {
        let path = args.logs.join(&g.file);
        match validate_file(&path) {
            Ok(violations) => {
                for v in violations {
                    violation_count += 1;
                    eprintln!("{}:{}", path.display(), v);
                }
            }
            Err(e) => return fail(EXIT_GENERAL, format!("cannot read {}: {e}", path.display())),
        }
    }
    if violation_count > 0 {
        return fail(EXIT_SCHEMA, format!("{violation_count} schema violation(s)"));
    }

    let mut games: Vec<GameData> = Vec::with_capacity(manifest.game_files.len());
    for g in &manifest.game_files {
        if g.aborted {
            return fail(
                EXIT_SCHEMA,
                format!("game {} aborted; remove it from the run or re-run before analyzing", g.game_id),
            );
        }
        let path = args.logs.join(&g.file);
        let parsed = match read_log(&path) {
            Ok(p) => p,
            Err(e) => return fail(EXIT_SCHEMA, format!("{}: {e}", path.display())),
        };
        match extract_game(&parsed.records) {
            Ok(data) => games.push(data),
            Err(e) => return fail(EXIT_SCHEMA, e.to_string()),
        }
    }

    let report = match run_report(&games) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_SCHEMA, e.to_string()),
    };

    let (ext, body) = match args.format {
        ReportFormat::Markdown => ("md", report.to_markdown()),
        ReportFormat::Csv => ("csv", report.to_csv()),
        ReportFormat::Json => ("json", report.to_json()),
    };
    let out_path = args.out.unwrap_or_else(|| args.logs.join(format!("report.{ext}")));
    if let Err(e) = std::fs::write(&out_path, body) {
        return fail(EXIT_GENERAL, format!("cannot write {}: {e}", out_path.display()));
    }
    let trends_path = out_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join("suspicion_trends.csv");
    if let Err(e) = std::fs::write(&trends_path, figure_csv(&report.trends)) {
        return fail(EXIT_GENERAL, format!("cannot write {}: {e}", trends_path.display()));
    }
    println!(
        "analyzed {} games ({} statements, {} judgments); report: {}; trends: {}",
        report.meta.games,
        report.meta.total_statements,
        report.meta.total_judgments,
        out_path.display(),
        trends_path.display(),
    );
    ExitCode::from(EXIT_OK)
}

fn cmd_replay(args: ReplayArgs) -> ExitCode {
    let parsed = match read_log(&args.log_file) {
        Ok(p) => p,
        Err(werewolf_engine::log::ReadLogError::Malformed { line, message }) => {
            return fail(EXIT_SCHEMA, format!("{}:{line}: {message}", args.log_file.display()))
        }
        Err(e) => return fail(EXIT_GENERAL, e),
    };
    match replay(&parsed.records) {
        Ok(outcome) => {
            let digest = {
                let state = serde_json::to_string(&outcome.state).expect("state serializes");
                let matrix = serde_json::to_string(&outcome.matrix).expect("matrix serializes");
                format!(
                    "{:016x}",
                    werewolf_engine::hash::fnv1a_parts(&[state.as_bytes(), matrix.as_bytes()])
                )
            };
            println!(
                "records={} statements={} snapshots_verified={} winner={} digest={digest}",
                outcome.records,
                outcome.statements,
                outcome.snapshots_verified,
                outcome
                    .state
                    .winner
                    .map(|w| w.to_string())
                    .unwrap_or_else(|| "none".to_string()),
            );
            if parsed.truncated || !outcome.complete {
                println!(
                    "partial replay: log is {} (replayed {} records cleanly)",
                    if parsed.truncated { "truncated" } else { "incomplete" },
                    outcome.records
                );
                ExitCode::from(EXIT_REPLAY_PARTIAL)
            } else {
                println!("replay matches every recorded snapshot");
                ExitCode::from(EXIT_OK)
            }
        }
        Err(e @ ReplayError::Mismatch { .. }) => fail(EXIT_REPLAY_MISMATCH, e),
        Err(e) => fail(EXIT_SCHEMA, e),
    }
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    let mut files: Vec<PathBuf> = Vec::new();
    if args.path.is_dir() {
        match std::fs::read_dir(&args.path) {
            Ok(entries) => {
                for entry in entries.flatten() {
                    let p = entry.path();
                    if p.extension().map(|e| e == "ndjson").unwrap_or(false) {
                        files.push(p);
                    }
                }
            }
            Err(e) => return fail(EXIT_GENERAL, format!("cannot read {}: {e}", args.path.display())),
        }
        files.sort();
        if files.is_empty() {
            return fail(EXIT_CONFIG, format!("no .ndjson files under {}", args.path.display()));
        }
    } else {
        files.push(args.path.clone());
    }

    let mut total = 0usize;
    for file in &files {
        match validate_file(file) {
            Ok(violations) => {
                for v in &violations {
                    println!("{}:{}", file.display(), v);
                }
                total += violations.len();
            }
            Err(e) => return fail(EXIT_GENERAL, format!("cannot read {}: {e}", file.display())),
        }
    }
    println!("{} file(s), {} violation(s)", files.len(), total);
    if total == 0 {
        ExitCode::from(EXIT_OK)
    } else {
        ExitCode::from(EXIT_SCHEMA)
    }
}
