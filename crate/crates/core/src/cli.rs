//! The `denm` command line: batch runs, codec utilities, validation,
//! evaluation and telemetry reports.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation failure, 3 runtime or
//! provider error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::agents::{load_manifest, run_batch, CameraConfig, Clock, PipelineConfig, Prompts, Providers};
use crate::denm::{validate_denm, BuildOptions, CauseRegistry, Denm, LanePolarity, ValidationReport};
use crate::eval::{
    load_ground_truth, load_predictions, render_report, score_detection, score_fields, score_schema, EvalReport,
    ReportFormat,
};
use crate::providers::{
    DepthDirProvider, DepthProvider, EndpointConfig, HttpDepthProvider, HttpModelProvider, ModelProvider, ReplayBundle,
};
use crate::telemetry::{aggregate, aggregate_all, read_log, render_stats_table, TelemetryLog};
use crate::uper::{decode_denm, encode_denm, payload_to_hex, read_uper_file, write_uper_file, UperError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "denm",
    version,
    about = "Camera frames to DENM messages, plus codec and evaluation tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the detection-to-DENM pipeline over an image manifest.
    Run(Box<RunArgs>),
    /// Encode a DENM JSON document to a `.uper` hex file.
    Encode {
        #[arg(long)]
        json: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a `.uper` hex file and print the DENM as JSON.
    Decode {
        #[arg(long)]
        uper: PathBuf,
    },
    /// Validate a DENM JSON document and print the report.
    Validate {
        #[arg(long)]
        json: PathBuf,
        /// Skip the strict checks (required containers, registry membership).
        #[arg(long)]
        lenient: bool,
        #[arg(long, default_value = "default")]
        registry: String,
    },
    /// Score a run output directory against a ground-truth CSV.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Row label for the report table.
        #[arg(long, default_value = "pipeline")]
        label: String,
        #[arg(long, default_value = "default")]
        registry: String,
        /// Lane-status convention the messages were written with.
        #[arg(long, value_enum, default_value_t = PolarityArg::OneIsOpen)]
        lane_polarity: PolarityArg,
    },
    /// Per-model request averages from a telemetry log.
    Stats {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ProviderKind {
    Replay,
    Http,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PolarityArg {
    OneIsOpen,
    OneIsClosed,
}

impl From<PolarityArg> for LanePolarity {
    fn from(p: PolarityArg) -> Self {
        match p {
            PolarityArg::OneIsOpen => LanePolarity::OneIsOpen,
            PolarityArg::OneIsClosed => LanePolarity::OneIsClosed,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    cameras: Option<PathBuf>,
    #[arg(long, value_enum)]
    provider: Option<ProviderKind>,
    #[arg(long)]
    replay_bundle: Option<PathBuf>,
    #[arg(long)]
    endpoint_url: Option<String>,
    #[arg(long)]
    model_id: Option<String>,
    #[arg(long)]
    auth_env: Option<String>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    depth_dir: Option<PathBuf>,
    #[arg(long)]
    depth_url: Option<String>,
    #[arg(long)]
    prompts_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// Fixed ITS timestamp (ms since 2004-01-01) for reproducible runs.
    #[arg(long)]
    fixed_clock: Option<i64>,
    /// `default`, `etsi`, or a path to a registry JSON file.
    #[arg(long)]
    registry: Option<String>,
    #[arg(long, value_enum)]
    lane_polarity: Option<PolarityArg>,
    /// Fail on out-of-range model values instead of clamping.
    #[arg(long)]
    strict_params: bool,
}

/// Keys accepted in the `run` TOML file. Relative paths resolve against the
/// file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    manifest: Option<PathBuf>,
    cameras: Option<PathBuf>,
    provider: Option<ProviderKind>,
    replay_bundle: Option<PathBuf>,
    endpoint: Option<EndpointConfig>,
    depth_dir: Option<PathBuf>,
    depth_endpoint: Option<EndpointConfig>,
    prompts_dir: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    max_in_flight: Option<usize>,
    fixed_clock: Option<i64>,
    registry: Option<String>,
    lane_polarity: Option<PolarityArg>,
    strict_params: Option<bool>,
}

enum ModelSource {
    Replay(PathBuf),
    Http(EndpointConfig),
}

enum DepthSource {
    Dir(PathBuf),
    Http(EndpointConfig),
}

struct RunConfig {
    manifest: PathBuf,
    cameras: PathBuf,
    model: ModelSource,
    depth: DepthSource,
    prompts_dir: Option<PathBuf>,
    output_dir: PathBuf,
    max_in_flight: usize,
    fixed_clock: Option<i64>,
    registry: String,
    lane_polarity: LanePolarity,
    strict_params: bool,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

fn resolve_path(base: &Path, path: PathBuf) -> PathBuf {
    if path.is_relative() {
        base.join(path)
    } else {
        path
    }
}

fn read_run_file(path: &Path) -> Result<RunFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut file: RunFile = toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    for slot in [
        &mut file.manifest,
        &mut file.cameras,
        &mut file.replay_bundle,
        &mut file.depth_dir,
        &mut file.prompts_dir,
        &mut file.output_dir,
    ] {
        *slot = slot.take().map(|p| resolve_path(base, p));
    }
    if let Some(registry) = &mut file.registry {
        if !matches!(registry.as_str(), "default" | "etsi") {
            *registry = resolve_path(base, PathBuf::from(&*registry)).display().to_string();
        }
    }
    Ok(file)
}

fn merge_endpoint(
    from_file: Option<EndpointConfig>,
    url: Option<String>,
    model_id: Option<String>,
    auth_env: Option<String>,
    timeout_ms: Option<u64>,
) -> Option<EndpointConfig> {
    let mut endpoint = match (from_file, url) {
        (Some(mut e), Some(url)) => {
            e.url = url;
            e
        }
        (Some(e), None) => e,
        (None, Some(url)) => EndpointConfig::new(url, ""),
        (None, None) => return None,
    };
    if let Some(id) = model_id {
        endpoint.model_id = id;
    }
    if auth_env.is_some() {
        endpoint.auth_env_var = auth_env;
    }
    if let Some(t) = timeout_ms {
        endpoint.timeout_ms = t;
    }
    Some(endpoint)
}

fn build_run_config(args: RunArgs) -> Result<RunConfig, Failure> {
    let mut file = match &args.config {
        Some(path) => read_run_file(path)?,
        None => RunFile::default(),
    };
    // choosing a provider on the command line drops the other source from the file
    match args.provider {
        Some(ProviderKind::Replay) => file.endpoint = None,
        Some(ProviderKind::Http) => file.replay_bundle = None,
        None => {}
    }
    if args.depth_dir.is_some() {
        file.depth_endpoint = None;
    }
    if args.depth_url.is_some() {
        file.depth_dir = None;
    }

    let replay_bundle = args.replay_bundle.or(file.replay_bundle);
    let endpoint = merge_endpoint(
        file.endpoint,
        args.endpoint_url,
        args.model_id,
        args.auth_env.clone(),
        args.timeout_ms,
    );
    let provider = args.provider.or(file.provider);
    let model = match (provider, replay_bundle, endpoint) {
        (Some(ProviderKind::Replay) | None, Some(bundle), None) => ModelSource::Replay(bundle),
        (Some(ProviderKind::Http) | None, None, Some(endpoint)) => ModelSource::Http(endpoint),
        (_, Some(_), Some(_)) => {
            return Err(Failure::usage(
                "configure either a replay bundle or an endpoint, not both",
            ))
        }
        (Some(ProviderKind::Replay), None, _) => return Err(Failure::usage("replay provider needs a replay bundle")),
        (Some(ProviderKind::Http), _, None) => return Err(Failure::usage("http provider needs an endpoint url")),
        (None, None, None) => return Err(Failure::usage("no model provider configured")),
    };

    let depth_dir = args.depth_dir.or(file.depth_dir);
    let depth_endpoint = merge_endpoint(
        file.depth_endpoint,
        args.depth_url,
        None,
        args.auth_env,
        args.timeout_ms,
    );
    let depth = match (depth_dir, depth_endpoint) {
        (Some(dir), None) => DepthSource::Dir(dir),
        (None, Some(endpoint)) => DepthSource::Http(endpoint),
        (Some(_), Some(_)) => {
            return Err(Failure::usage(
                "configure either a depth directory or a depth endpoint, not both",
            ))
        }
        (None, None) => return Err(Failure::usage("no depth provider configured")),
    };

    let manifest = args
        .manifest
        .or(file.manifest)
        .ok_or_else(|| Failure::usage("missing --manifest"))?;
    let cameras = args
        .cameras
        .or(file.cameras)
        .ok_or_else(|| Failure::usage("missing --cameras"))?;
    let output_dir = args
        .out
        .or(file.output_dir)
        .ok_or_else(|| Failure::usage("missing --out"))?;
    let max_in_flight = args.max_in_flight.or(file.max_in_flight).unwrap_or(1);
    if max_in_flight == 0 {
        return Err(Failure::usage("max_in_flight must be at least 1"));
    }

    let config = RunConfig {
        manifest,
        cameras,
        model,
        depth,
        prompts_dir: args.prompts_dir.or(file.prompts_dir),
        output_dir,
        max_in_flight,
        fixed_clock: args.fixed_clock.or(file.fixed_clock),
        registry: args.registry.or(file.registry).unwrap_or_else(|| "default".into()),
        lane_polarity: args
            .lane_polarity
            .or(file.lane_polarity)
            .map(Into::into)
            .unwrap_or_default(),
        strict_params: args.strict_params || file.strict_params.unwrap_or(false),
    };

    let mut required: Vec<&Path> = vec![&config.manifest, &config.cameras];
    if let ModelSource::Replay(dir) = &config.model {
        required.push(dir);
    }
    if let DepthSource::Dir(dir) = &config.depth {
        required.push(dir);
    }
    if let Some(dir) = &config.prompts_dir {
        required.push(dir);
    }
    if let Some(missing) = required.into_iter().find(|p| !p.exists()) {
        return Err(Failure::usage(format!("{} does not exist", missing.display())));
    }
    Ok(config)
}

fn cmd_run(args: RunArgs) -> Result<i32, Failure> {
    let config = build_run_config(args)?;
    let registry = CauseRegistry::resolve(&config.registry).map_err(|e| Failure::usage(e.to_string()))?;
    let manifest = load_manifest(&config.manifest).map_err(|e| Failure::runtime(e.to_string()))?;
    let cameras = CameraConfig::load(&config.cameras).map_err(|e| Failure::runtime(e.to_string()))?;
    let prompts = match &config.prompts_dir {
        Some(dir) => Prompts::load(dir).map_err(|e| Failure::runtime(format!("{}: {e}", dir.display())))?,
        None => Prompts::default(),
    };

    let model: Box<dyn ModelProvider> = match config.model {
        ModelSource::Replay(dir) => Box::new(ReplayBundle::load(&dir).map_err(|e| Failure::runtime(e.to_string()))?),
        ModelSource::Http(endpoint) => Box::new(HttpModelProvider::new(endpoint)),
    };
    let depth: Box<dyn DepthProvider> = match config.depth {
        DepthSource::Dir(dir) => Box::new(DepthDirProvider::new(dir)),
        DepthSource::Http(endpoint) => Box::new(HttpDepthProvider::new(endpoint)),
    };

    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Failure::runtime(format!("{}: {e}", config.output_dir.display())))?;
    let telemetry_path = config.output_dir.join("telemetry.jsonl");
    let errors_path = config.output_dir.join("errors.jsonl");
    // each run owns its logs
    for path in [&telemetry_path, &errors_path] {
        std::fs::File::create(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    }
    let telemetry = TelemetryLog::open(&telemetry_path).map_err(|e| Failure::runtime(e.to_string()))?;

    let pipeline = PipelineConfig {
        prompts,
        cameras,
        build: BuildOptions {
            lane_polarity: config.lane_polarity,
            registry,
            ..BuildOptions::default()
        },
        strict_params: config.strict_params,
        output_dir: config.output_dir.clone(),
        clock: config.fixed_clock.map_or(Clock::System, Clock::Fixed),
    };
    let providers = Providers {
        model: model.as_ref(),
        depth: depth.as_ref(),
    };
    let summary = run_batch(
        &manifest,
        &pipeline,
        providers,
        config.max_in_flight,
        &telemetry,
        &errors_path,
    )
    .map_err(|e| Failure::runtime(e.to_string()))?;

    let messages = summary.outputs.iter().filter(|o| o.denm.is_some()).count();
    eprintln!(
        "{} images: {} processed ({} messages), {} failed",
        summary.total(),
        summary.outputs.len(),
        messages,
        summary.failures.len()
    );
    Ok(if summary.all_failed() { EXIT_RUNTIME } else { EXIT_OK })
}

fn read_denm_json(path: &Path) -> Result<Denm, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    Denm::from_json_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn cmd_encode(json: &Path, out: &Path) -> Result<i32, Failure> {
    let denm = read_denm_json(json)?;
    let payload = match encode_denm(&denm) {
        Ok(p) => p,
        Err(UperError::InvalidMessage(report)) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            return Ok(EXIT_INVALID);
        }
        Err(e) => return Err(Failure::invalid(e.to_string())),
    };
    write_uper_file(out, &payload).map_err(|e| Failure::runtime(format!("{}: {e}", out.display())))?;
    println!("{}", payload_to_hex(&payload));
    Ok(EXIT_OK)
}

fn cmd_decode(uper: &Path) -> Result<i32, Failure> {
    let payload = read_uper_file(uper)
        .map_err(|e| Failure::runtime(format!("{}: {e}", uper.display())))?
        .map_err(|e| Failure::invalid(format!("{}: {e}", uper.display())))?;
    let denm = decode_denm(&payload.octets).map_err(|e| Failure::invalid(format!("{}: {e}", uper.display())))?;
    print!("{}", denm.to_json_string());
    Ok(EXIT_OK)
}

fn cmd_validate(json: &Path, lenient: bool, registry: &str) -> Result<i32, Failure> {
    let registry = CauseRegistry::resolve(registry).map_err(|e| Failure::usage(e.to_string()))?;
    let text = std::fs::read_to_string(json).map_err(|e| Failure::runtime(format!("{}: {e}", json.display())))?;
    let report = match Denm::from_json_str(&text) {
        Ok(denm) => validate_denm(&denm, !lenient, &registry),
        Err(e) => ValidationReport::malformed(e.to_string()),
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(if report.valid { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_eval(
    pred: &Path,
    gt: &Path,
    out: &Path,
    label: String,
    registry: &str,
    polarity: LanePolarity,
) -> Result<i32, Failure> {
    let registry = CauseRegistry::resolve(registry).map_err(|e| Failure::usage(e.to_string()))?;
    let rows = load_ground_truth(gt).map_err(|e| Failure::runtime(e.to_string()))?;
    let predictions = load_predictions(pred, polarity).map_err(|e| Failure::runtime(e.to_string()))?;
    let detection = score_detection(&predictions.situations, &rows).map_err(|e| Failure::runtime(e.to_string()))?;
    let fields = score_fields(&predictions.fields, &rows);
    let schema = score_schema(pred, &registry).map_err(|e| Failure::runtime(e.to_string()))?;
    let report = EvalReport {
        label,
        detection,
        fields,
        schema,
    };

    let text = render_report(&report, ReportFormat::Text);
    std::fs::create_dir_all(out).map_err(|e| Failure::runtime(format!("{}: {e}", out.display())))?;
    for (name, body) in [
        ("report.txt", &text),
        ("report.json", &render_report(&report, ReportFormat::Json)),
    ] {
        let path = out.join(name);
        std::fs::write(&path, body).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    }
    print!("{text}");
    Ok(EXIT_OK)
}

fn cmd_stats(log: &Path, model: Option<&str>, json: bool) -> Result<i32, Failure> {
    let records = read_log(log).map_err(|e| Failure::runtime(format!("{}: {e}", log.display())))?;
    let stats = match model {
        Some(id) => vec![aggregate(&records, id).map_err(|e| Failure::runtime(e.to_string()))?],
        None => aggregate_all(&records),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    } else {
        print!("{}", render_stats_table(&stats));
    }
    Ok(EXIT_OK)
}

/// Parses `argv` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(*args),
        Command::Encode { json, out } => cmd_encode(&json, &out),
        Command::Decode { uper } => cmd_decode(&uper),
        Command::Validate {
            json,
            lenient,
            registry,
        } => cmd_validate(&json, lenient, &registry),
        Command::Eval {
            pred,
            gt,
            out,
            label,
            registry,
            lane_polarity,
        } => cmd_eval(&pred, &gt, &out, label, &registry, lane_polarity.into()),
        Command::Stats { log, model, json } => cmd_stats(&log, model.as_deref(), json),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("denm: {}", failure.message);
            failure.code
        }
    }
}
