//! Batch command-line surface over the biomatch engine.
//!
//! Exit codes: 0 success or accept, 1 decision-negative (reject or no
//! match), 2 usage error, 3 runtime fault. Every command prints one
//! machine-readable `key=value` line per result on stdout; diagnostics go
//! to stderr.
//!
//! The configuration file is taken from `--config`, then the
//! `BIOMATCH_CONFIG` environment variable, then `./biomatch.conf`.
//! Relative paths inside the configuration resolve against the
//! configuration file's directory.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use biomatch_core::experiment::{
    data_spec_for, extractor_for, parse_report_entries, parse_scores_csv, resolve_path,
    run_experiment, ExperimentConfig, StageSeeds,
};
use biomatch_core::learner::{load_model, model_to_bytes, save_model, train, TrainingConfig};
use biomatch_core::matcher::{fmr, fnmr, IdentifyOutcome};
use biomatch_core::metric::Orientation;
use biomatch_core::protocol::{model_digest, BiometricSystem, SystemParams, VerifyOutcome};
use biomatch_core::store::{Gallery, TemplateId};
use biomatch_core::synth::{dataset_csv, gen_synthetic};

pub const CONFIG_ENV_VAR: &str = "BIOMATCH_CONFIG";
const DEFAULT_CONFIG_PATH: &str = "biomatch.conf";

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAULT: i32 = 3;

#[derive(Parser)]
#[command(
    name = "biomatch",
    version,
    about = "Template-based biometric verification and identification over synthetic data"
)]
struct Cli {
    /// Configuration file; defaults to $BIOMATCH_CONFIG, then ./biomatch.conf
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the model against the configured space and create an empty gallery
    Init,
    /// Enroll one probe file and print the fresh identifier
    Enroll {
        /// Probe file: one decimal value per line
        #[arg(long)]
        input: PathBuf,
    },
    /// Verify a probe file against a claimed identifier
    Verify {
        /// Claimed identifier, hex-encoded
        #[arg(long)]
        id: String,
        #[arg(long)]
        input: PathBuf,
    },
    /// Search the whole gallery for the probe's identity
    Identify {
        #[arg(long)]
        input: PathBuf,
    },
    /// Train the feature extractor on synthetic data and save the model
    Train,
    /// Generate the synthetic dataset CSV
    GenData,
    /// Run the full pipeline: generate, train, enroll, score, report
    Evaluate,
    /// Print the persisted report after checking it against the scored comparisons
    Report,
}

/// Parses `argv` and runs the selected command, returning the process
/// exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    EXIT_OK
                }
                _ => {
                    eprint!("{err}");
                    EXIT_USAGE
                }
            }
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            EXIT_USAGE
        }
        Err(Failure::Fault(message)) => {
            eprintln!("error: {message}");
            EXIT_FAULT
        }
    }
}

enum Failure {
    Usage(String),
    Fault(String),
}

type CmdResult = Result<i32, Failure>;

fn fault<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> Failure + '_ {
    move |err| Failure::Fault(format!("{context}: {err}"))
}

fn run(cli: Cli) -> CmdResult {
    let config_path = cli
        .config
        .or_else(|| std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG_PATH));
    let (cfg, base) = load_config(&config_path)?;
    match cli.command {
        Command::Init => cmd_init(&cfg, &base),
        Command::Enroll { input } => cmd_enroll(&cfg, &base, &input),
        Command::Verify { id, input } => cmd_verify(&cfg, &base, &id, &input),
        Command::Identify { input } => cmd_identify(&cfg, &base, &input),
        Command::Train => cmd_train(&cfg, &base),
        Command::GenData => cmd_gen_data(&cfg, &base),
        Command::Evaluate => cmd_evaluate(&cfg, &base),
        Command::Report => cmd_report(&cfg, &base),
    }
}

fn load_config(path: &Path) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Fault(format!("cannot read config {}: {e}", path.display())))?;
    let cfg = ExperimentConfig::parse(&text)
        .map_err(|e| Failure::Fault(format!("bad config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    Ok((cfg, base))
}

/// One decimal value per line; the count must match the model input.
fn read_probe(path: &Path, expected_dim: usize) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Fault(format!("cannot read probe {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: f64 = trimmed.parse().map_err(|_| {
            Failure::Fault(format!(
                "probe {} line {}: not a decimal value",
                path.display(),
                idx + 1
            ))
        })?;
        values.push(value);
    }
    if values.len() != expected_dim {
        return Err(Failure::Fault(format!(
            "probe {} has {} values, model expects {}",
            path.display(),
            values.len(),
            expected_dim
        )));
    }
    Ok(values)
}

fn system_params(cfg: &ExperimentConfig, model_bytes: &[u8]) -> SystemParams {
    SystemParams {
        lambda: cfg.system.lambda,
        space: cfg.system.space,
        threshold: cfg.system.threshold,
        capacity: cfg.system.capacity,
        model_id: cfg
            .system
            .model_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".to_string()),
        model_digest: model_digest(model_bytes),
    }
}

/// Loads the model and persisted gallery and restores a system handle.
fn restore_system(cfg: &ExperimentConfig, base: &Path) -> Result<BiometricSystem, Failure> {
    let model_path = resolve_path(base, &cfg.system.model_path);
    let model = load_model(&model_path).map_err(fault("loading model"))?;
    let gallery_path = resolve_path(base, &cfg.gallery_path);
    let gallery = Gallery::load(&gallery_path).map_err(fault("loading gallery"))?;
    let params = system_params(cfg, &model_to_bytes(&model));
    // fresh identifiers stay deterministic for a given configuration and
    // gallery state
    let rng_seed = cfg.system.seed.wrapping_add(gallery.len() as u64);
    let mut system = BiometricSystem::new();
    system
        .init_with_gallery(params, model, gallery, rng_seed)
        .map_err(fault("restoring system"))?;
    Ok(system)
}

fn persist_gallery(
    system: &BiometricSystem,
    cfg: &ExperimentConfig,
    base: &Path,
) -> Result<(), Failure> {
    system
        .gallery()
        .map_err(fault("reading gallery"))?
        .save(&resolve_path(base, &cfg.gallery_path))
        .map_err(fault("saving gallery"))
}

fn append_transcript(
    system: &BiometricSystem,
    cfg: &ExperimentConfig,
    base: &Path,
) -> Result<(), Failure> {
    let Some(path) = &cfg.transcript_path else {
        return Ok(());
    };
    let lines = system
        .transcript_export()
        .map_err(fault("exporting transcript"))?;
    use std::io::Write;
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(resolve_path(base, path))
        .map_err(fault("opening transcript"))?;
    file.write_all(lines.as_bytes())
        .map_err(fault("appending transcript"))?;
    Ok(())
}

fn cmd_init(cfg: &ExperimentConfig, base: &Path) -> CmdResult {
    let gallery_path = resolve_path(base, &cfg.gallery_path);
    if gallery_path.exists() {
        return Err(Failure::Fault(format!(
            "already initialised: {} exists (remove it to reinitialise)",
            gallery_path.display()
        )));
    }
    let model_path = resolve_path(base, &cfg.system.model_path);
    let model = load_model(&model_path).map_err(fault("loading model"))?;
    let model_bytes = model_to_bytes(&model);
    let params = system_params(cfg, &model_bytes);
    let digest_hex: String = params
        .model_digest
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let mut system = BiometricSystem::new();
    system
        .init(params, model, cfg.system.seed)
        .map_err(fault("initialising system"))?;
    persist_gallery(&system, cfg, base)?;
    println!(
        "event=init gallery={} model={} digest={}",
        gallery_path.display(),
        cfg.system.model_path.display(),
        digest_hex
    );
    Ok(EXIT_OK)
}

fn cmd_enroll(cfg: &ExperimentConfig, base: &Path, input: &Path) -> CmdResult {
    let mut system = restore_system(cfg, base)?;
    let dim = system
        .extractor()
        .map_err(fault("reading extractor"))?
        .input_dim();
    let probe = read_probe(input, dim)?;
    let id = system.enroll(&probe).map_err(fault("enrolling"))?;
    persist_gallery(&system, cfg, base)?;
    append_transcript(&system, cfg, base)?;
    let size = system.gallery().map_err(fault("reading gallery"))?.len();
    println!("event=enroll id={} gallery_size={}", id.to_hex(), size);
    Ok(EXIT_OK)
}

fn cmd_verify(cfg: &ExperimentConfig, base: &Path, id_hex: &str, input: &Path) -> CmdResult {
    let id = TemplateId::from_hex(id_hex)
        .map_err(|_| Failure::Usage(format!("--id {id_hex:?} is not valid hex")))?;
    let mut system = restore_system(cfg, base)?;
    let dim = system
        .extractor()
        .map_err(fault("reading extractor"))?
        .input_dim();
    let probe = read_probe(input, dim)?;
    let outcome = system.verify(&id, &probe).map_err(fault("verifying"))?;
    append_transcript(&system, cfg, base)?;
    match outcome {
        VerifyOutcome::Decision(decision) if decision.accept => {
            println!(
                "event=verify accepted=true score={} threshold={}",
                decision.score, decision.threshold
            );
            Ok(EXIT_OK)
        }
        VerifyOutcome::Decision(decision) => {
            println!(
                "event=verify accepted=false reason=score score={} threshold={}",
                decision.score, decision.threshold
            );
            Ok(EXIT_NEGATIVE)
        }
        VerifyOutcome::UnknownId => {
            println!("event=verify accepted=false reason=unknown_id");
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn cmd_identify(cfg: &ExperimentConfig, base: &Path, input: &Path) -> CmdResult {
    let mut system = restore_system(cfg, base)?;
    let dim = system
        .extractor()
        .map_err(fault("reading extractor"))?
        .input_dim();
    let probe = read_probe(input, dim)?;
    let result = system.identify(&probe).map_err(fault("identifying"))?;
    append_transcript(&system, cfg, base)?;
    match result.outcome {
        IdentifyOutcome::Identified(id) => {
            println!(
                "event=identify outcome=identified id={} score={} margin={}",
                id.to_hex(),
                result.best_score.expect("identified implies a score"),
                result.runner_up_margin
            );
            Ok(EXIT_OK)
        }
        IdentifyOutcome::NoMatch => {
            match result.best_score {
                Some(score) => println!(
                    "event=identify outcome=no_match best_score={score} margin={}",
                    result.runner_up_margin
                ),
                None => println!("event=identify outcome=no_match gallery_size=0"),
            }
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn cmd_train(cfg: &ExperimentConfig, base: &Path) -> CmdResult {
    let seeds = StageSeeds::derive(cfg.system.seed);
    let data = gen_synthetic(&data_spec_for(cfg, seeds.data)).map_err(fault("generating data"))?;
    let initial = extractor_for(cfg, seeds.weights);
    let training = TrainingConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        loss: cfg.loss,
        seed: seeds.weights,
    };
    let outcome = train(&initial, &data, &training).map_err(fault("training"))?;
    let model_path = resolve_path(base, &cfg.system.model_path);
    save_model(&outcome.network, &model_path).map_err(fault("saving model"))?;
    println!(
        "event=train epochs={} final_loss={} model={}",
        cfg.epochs,
        outcome.epoch_losses.last().expect("at least one epoch"),
        cfg.system.model_path.display()
    );
    Ok(EXIT_OK)
}

fn cmd_gen_data(cfg: &ExperimentConfig, base: &Path) -> CmdResult {
    let seeds = StageSeeds::derive(cfg.system.seed);
    let data = gen_synthetic(&data_spec_for(cfg, seeds.data)).map_err(fault("generating data"))?;
    let path = resolve_path(base, &cfg.data_path);
    fs::write(&path, dataset_csv(&data)).map_err(fault("writing dataset"))?;
    println!(
        "event=gen-data samples={} path={}",
        data.len(),
        cfg.data_path.display()
    );
    Ok(EXIT_OK)
}

fn cmd_evaluate(cfg: &ExperimentConfig, base: &Path) -> CmdResult {
    let report = run_experiment(cfg, base).map_err(fault("evaluate"))?;
    println!(
        "event=evaluate eer={} threshold={} report={} roc={}",
        report.eer,
        report.threshold,
        cfg.report_path.display(),
        cfg.roc_path.display()
    );
    Ok(EXIT_OK)
}

fn cmd_report(cfg: &ExperimentConfig, base: &Path) -> CmdResult {
    let report_text = fs::read_to_string(resolve_path(base, &cfg.report_path))
        .map_err(fault("reading report"))?;
    let entries = parse_report_entries(&report_text).map_err(fault("parsing report"))?;
    let field = |key: &str| -> Result<f64, Failure> {
        entries
            .iter()
            .find(|(k, _)| k == key)
            .ok_or_else(|| Failure::Fault(format!("report is missing {key}")))?
            .1
            .parse()
            .map_err(|_| Failure::Fault(format!("report field {key} is not a number")))
    };
    let threshold = field("threshold")?;
    let reported_fmr = field("fmr.at_threshold")?;
    let reported_fnmr = field("fnmr.at_threshold")?;

    let scores_text = fs::read_to_string(resolve_path(base, &cfg.scores_path))
        .map_err(fault("reading scores"))?;
    let orientation = cfg.system.space.orientation();
    let scores = parse_scores_csv(&scores_text, orientation).map_err(fault("parsing scores"))?;
    let (genuine, impostor) = scores.similarity_scores();
    let similarity_threshold = match orientation {
        Orientation::Distance => -threshold,
        Orientation::Similarity => threshold,
    };
    let recomputed_fmr = fmr(&impostor, similarity_threshold).map_err(fault("recomputing fmr"))?;
    let recomputed_fnmr =
        fnmr(&genuine, similarity_threshold).map_err(fault("recomputing fnmr"))?;
    if recomputed_fmr != reported_fmr || recomputed_fnmr != reported_fnmr {
        return Err(Failure::Fault(format!(
            "report inconsistent with persisted scores: fmr {recomputed_fmr} vs {reported_fmr}, fnmr {recomputed_fnmr} vs {reported_fnmr}"
        )));
    }
    print!("{report_text}");
    Ok(EXIT_OK)
}
