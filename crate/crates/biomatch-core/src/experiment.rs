//! End-to-end evaluation pipeline: generate synthetic identities, train
//! the extractor, enroll one template per identity, score held-out
//! probes, and report EER, operating-point rates, and the n-gallery
//! scaling approximation.
//!
//! Everything is driven by one master seed; per-stage seeds derive from
//! it by fixed offsets and are echoed in the report, so a rerun with the
//! same configuration reproduces every artifact byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::learner::{
    model_to_bytes, save_model, train, ActivationKind, LabeledSample, Loss, NeuralNetwork,
    TrainingConfig,
};
use crate::matcher::{
    eer, gallery_scaled_rates, roc_curve, write_roc_csv, ScaledRates, ScoreLabel, ScoreSet,
    ThresholdGrid,
};
use crate::metric::{compare, Orientation};
use crate::protocol::{
    lookup_value, model_digest, parse_kv, parse_value, BiometricSystem, ConfigError, SystemConfig,
    SystemParams,
};
use crate::store::TemplateId;
use crate::synth::{gen_synthetic, SyntheticDataSpec};

#[derive(Debug, Error)]
#[error("stage {stage}: {message}")]
pub struct ExperimentError {
    pub stage: &'static str,
    pub message: String,
}

fn stage<E: std::fmt::Display>(name: &'static str) -> impl Fn(E) -> ExperimentError {
    move |err| ExperimentError {
        stage: name,
        message: err.to_string(),
    }
}

/// Full pipeline configuration: the shared system keys plus the data,
/// training, and output settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub classes: usize,
    pub samples_per_class: usize,
    pub data_dim: usize,
    pub center_scale: f64,
    pub noise_std: f64,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub loss: Loss,
    pub impostor_cap: usize,
    pub gallery_path: PathBuf,
    pub roc_path: PathBuf,
    pub report_path: PathBuf,
    pub scores_path: PathBuf,
    pub data_path: PathBuf,
    pub transcript_path: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "lambda",
    "space.kind",
    "space.dim",
    "threshold",
    "capacity",
    "model.path",
    "seed",
    "data.classes",
    "data.samples_per_class",
    "data.dim",
    "data.scale",
    "data.noise",
    "train.hidden",
    "train.epochs",
    "train.learning_rate",
    "train.loss",
    "eval.impostor_cap",
    "gallery.path",
    "roc.path",
    "report.path",
    "scores.path",
    "data.path",
    "transcript.path",
];

fn optional<T: std::str::FromStr>(
    entries: &[(String, String)],
    key: &'static str,
    default: T,
) -> Result<T, ConfigError> {
    match lookup_value(entries, key) {
        Ok(_) => parse_value(entries, key),
        Err(ConfigError::MissingKey(_)) => Ok(default),
        Err(e) => Err(e),
    }
}

fn optional_path(entries: &[(String, String)], key: &'static str, default: &str) -> PathBuf {
    PathBuf::from(
        lookup_value(entries, key)
            .map(str::to_owned)
            .unwrap_or_else(|_| default.to_string()),
    )
}

impl ExperimentConfig {
    /// Parses the shared configuration file. System keys are required;
    /// pipeline keys fall back to defaults; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let entries = parse_kv(text)?;
        for (key, _) in &entries {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }
        let system = SystemConfig::from_entries(&entries)?;
        let hidden_text = lookup_value(&entries, "train.hidden")
            .map(str::to_owned)
            .unwrap_or_else(|_| "24".to_string());
        let hidden = parse_hidden(&hidden_text).ok_or_else(|| ConfigError::InvalidValue {
            key: "train.hidden".into(),
            value: hidden_text.clone(),
        })?;
        let loss_text = lookup_value(&entries, "train.loss")
            .map(str::to_owned)
            .unwrap_or_else(|_| "cross_entropy".to_string());
        let loss = match loss_text.as_str() {
            "cross_entropy" => Loss::CrossEntropy,
            "squared_error" => Loss::SquaredError,
            _ => {
                return Err(ConfigError::InvalidValue {
                    key: "train.loss".into(),
                    value: loss_text,
                })
            }
        };
        Ok(ExperimentConfig {
            system,
            classes: optional(&entries, "data.classes", 8)?,
            samples_per_class: optional(&entries, "data.samples_per_class", 12)?,
            data_dim: optional(&entries, "data.dim", 16)?,
            center_scale: optional(&entries, "data.scale", 10.0)?,
            noise_std: optional(&entries, "data.noise", 0.05)?,
            hidden,
            epochs: optional(&entries, "train.epochs", 300)?,
            learning_rate: optional(&entries, "train.learning_rate", 0.05)?,
            loss,
            impostor_cap: optional(&entries, "eval.impostor_cap", 2000)?,
            gallery_path: optional_path(&entries, "gallery.path", "gallery.bmdb"),
            roc_path: optional_path(&entries, "roc.path", "roc.csv"),
            report_path: optional_path(&entries, "report.path", "report.txt"),
            scores_path: optional_path(&entries, "scores.path", "scores.csv"),
            data_path: optional_path(&entries, "data.path", "data.csv"),
            transcript_path: lookup_value(&entries, "transcript.path")
                .ok()
                .map(PathBuf::from),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = self.system.to_text();
        let hidden = self
            .hidden
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let loss = match self.loss {
            Loss::CrossEntropy => "cross_entropy",
            Loss::SquaredError => "squared_error",
            Loss::ZeroOne => "zero_one",
        };
        out.push_str(&format!(
            "data.classes={}\ndata.samples_per_class={}\ndata.dim={}\ndata.scale={}\ndata.noise={}\n",
            self.classes, self.samples_per_class, self.data_dim, self.center_scale, self.noise_std,
        ));
        out.push_str(&format!(
            "train.hidden={}\ntrain.epochs={}\ntrain.learning_rate={}\ntrain.loss={}\n",
            hidden, self.epochs, self.learning_rate, loss,
        ));
        out.push_str(&format!("eval.impostor_cap={}\n", self.impostor_cap));
        out.push_str(&format!(
            "gallery.path={}\nroc.path={}\nreport.path={}\nscores.path={}\ndata.path={}\n",
            self.gallery_path.display(),
            self.roc_path.display(),
            self.report_path.display(),
            self.scores_path.display(),
            self.data_path.display(),
        ));
        if let Some(path) = &self.transcript_path {
            out.push_str(&format!("transcript.path={}\n", path.display()));
        }
        out
    }
}

fn parse_hidden(text: &str) -> Option<Vec<usize>> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Some(Vec::new());
    }
    trimmed
        .split(',')
        .map(|part| part.trim().parse::<usize>().ok().filter(|&h| h > 0))
        .collect()
}

/// Per-stage seeds derived from the master seed by fixed offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSeeds {
    pub master: u64,
    pub data: u64,
    pub weights: u64,
    pub subsample: u64,
    pub ids: u64,
}

impl StageSeeds {
    pub fn derive(master: u64) -> StageSeeds {
        StageSeeds {
            master,
            data: master.wrapping_add(1),
            weights: master.wrapping_add(2),
            subsample: master.wrapping_add(3),
            ids: master.wrapping_add(4),
        }
    }
}

/// Everything the evaluation pipeline reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub eer: f64,
    /// Calibrated threshold in the space's own orientation.
    pub threshold: f64,
    pub fmr_at_threshold: f64,
    pub fnmr_at_threshold: f64,
    pub gallery_size: u32,
    pub scaled: ScaledRates,
    pub genuine_count: usize,
    pub impostor_count: usize,
    pub self_verify_failures: usize,
    pub roc_path: String,
    pub seeds: StageSeeds,
    /// Resolved configuration, echoed as written.
    pub config_echo: String,
}

fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

impl ExperimentReport {
    /// Flat `key: value` text; real values carry 17 significant digits so
    /// they re-parse exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            writeln!(out, "{key}: {value}").expect("string writes cannot fail");
        };
        put("report.version", "1".into());
        put("eer", fmt_f64(self.eer));
        put("threshold", fmt_f64(self.threshold));
        put("fmr.at_threshold", fmt_f64(self.fmr_at_threshold));
        put("fnmr.at_threshold", fmt_f64(self.fnmr_at_threshold));
        put("gallery.size", self.gallery_size.to_string());
        put("scaled.fmr", fmt_f64(self.scaled.fmr_n));
        put("scaled.fnmr", fmt_f64(self.scaled.fnmr_n));
        put("scaled.valid", self.scaled.valid.to_string());
        put("scores.genuine", self.genuine_count.to_string());
        put("scores.impostor", self.impostor_count.to_string());
        put(
            "self_verify.failures",
            self.self_verify_failures.to_string(),
        );
        put("roc.path", self.roc_path.clone());
        put("seed.master", self.seeds.master.to_string());
        put("seed.data", self.seeds.data.to_string());
        put("seed.weights", self.seeds.weights.to_string());
        put("seed.subsample", self.seeds.subsample.to_string());
        put("seed.ids", self.seeds.ids.to_string());
        for line in self.config_echo.lines() {
            if let Some((key, value)) = line.split_once('=') {
                put(&format!("config.{key}"), value.to_string());
            }
        }
        out
    }
}

/// Parses `key: value` report lines back into pairs.
pub fn parse_report_entries(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(format!("report line {} is not key: value", idx + 1));
        };
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

/// Joins `path` onto `base_dir` unless it is already absolute.
pub fn resolve_path(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

use resolve_path as resolve;

/// Labelled comparison scores rendered as `label,score` CSV rows, scores
/// in the space's own orientation.
pub fn scores_csv(scores: &ScoreSet) -> String {
    let mut out = String::from("label,score\n");
    for (value, label) in scores.iter() {
        let name = match label {
            ScoreLabel::Genuine => "genuine",
            ScoreLabel::Impostor => "impostor",
        };
        writeln!(out, "{name},{}", fmt_f64(value)).expect("string writes cannot fail");
    }
    out
}

pub fn parse_scores_csv(text: &str, orientation: Orientation) -> Result<ScoreSet, String> {
    let mut scores = ScoreSet::new(orientation);
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != "label,score" {
                return Err("missing label,score header".into());
            }
            continue;
        }
        let Some((label, value)) = line.split_once(',') else {
            return Err(format!("scores line {} is not label,score", idx + 1));
        };
        let label = match label {
            "genuine" => ScoreLabel::Genuine,
            "impostor" => ScoreLabel::Impostor,
            other => return Err(format!("unknown score label {other:?}")),
        };
        let value: f64 = value
            .parse()
            .map_err(|_| format!("bad score value on line {}", idx + 1))?;
        scores.push(value, label).map_err(|e| e.to_string())?;
    }
    Ok(scores)
}

/// Runs generate → train → enroll → score → rates → emit. Relative paths
/// in the configuration resolve against `base_dir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    base_dir: &Path,
) -> Result<ExperimentReport, ExperimentError> {
    let seeds = StageSeeds::derive(cfg.system.seed);

    // generate
    let data_spec = data_spec_for(cfg, seeds.data);
    let data = gen_synthetic(&data_spec).map_err(stage("generate"))?;

    // train
    let initial = extractor_for(cfg, seeds.weights);
    let training = TrainingConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        loss: cfg.loss,
        seed: seeds.weights,
    };
    let outcome = train(&initial, &data, &training).map_err(stage("train"))?;
    let extractor = outcome.network;
    let model_path = resolve(base_dir, &cfg.system.model_path);
    save_model(&extractor, &model_path).map_err(stage("train"))?;

    // init
    let model_bytes = model_to_bytes(&extractor);
    let params = SystemParams {
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
        model_digest: model_digest(&model_bytes),
    };
    let mut system = BiometricSystem::new();
    system
        .init(params, extractor, seeds.ids)
        .map_err(stage("init"))?;

    // enroll the first sample of every identity
    let per_class: Vec<Vec<&LabeledSample>> = (0..cfg.classes)
        .map(|c| data.iter().filter(|s| s.label == c).collect())
        .collect();
    let mut identities: Vec<(TemplateId, &LabeledSample)> = Vec::with_capacity(cfg.classes);
    for samples in &per_class {
        let enrolled = samples.first().expect("every class has samples");
        let id = system
            .enroll(enrolled.input.flat())
            .map_err(stage("enroll"))?;
        identities.push((id, enrolled));
    }

    // round-trip soundness check on the enrolled pairs
    let mut self_verify_failures = 0;
    for (id, enrolled) in &identities {
        let outcome = system
            .verify(id, enrolled.input.flat())
            .map_err(stage("enroll"))?;
        if !outcome.accepted() {
            self_verify_failures += 1;
        }
    }

    // score: genuine pairs in (identity, probe index) order, then all
    // cross pairs subsampled to the cap
    let space = cfg.system.space;
    let orientation = space.orientation();
    let extractor_ref = system.extractor().map_err(stage("score"))?.clone();
    let embed_probe =
        |sample: &LabeledSample| crate::learner::embed(&extractor_ref, sample.input.flat(), &space);
    let mut score_set = ScoreSet::new(orientation);
    let mut genuine_count = 0;
    for (class, (id, _)) in identities.iter().enumerate() {
        let template = system
            .gallery()
            .map_err(stage("score"))?
            .lookup(id)
            .expect("enrolled template present")
            .clone();
        for probe in per_class[class].iter().skip(1) {
            let embedding = embed_probe(probe).map_err(stage("score"))?;
            let value = compare(&space, &embedding, &template).map_err(stage("score"))?;
            score_set
                .push(value, ScoreLabel::Genuine)
                .map_err(stage("score"))?;
            genuine_count += 1;
        }
    }
    let mut impostor_pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (template_class, _) in identities.iter().enumerate() {
        for (probe_class, probes) in per_class.iter().enumerate() {
            if probe_class == template_class {
                continue;
            }
            for probe_idx in 1..probes.len() {
                impostor_pairs.push((template_class, probe_class, probe_idx));
            }
        }
    }
    if impostor_pairs.len() > cfg.impostor_cap {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.subsample);
        impostor_pairs.shuffle(&mut rng);
        impostor_pairs.truncate(cfg.impostor_cap);
        impostor_pairs.sort_unstable();
    }
    let impostor_count = impostor_pairs.len();
    for (template_class, probe_class, probe_idx) in impostor_pairs {
        let (id, _) = &identities[template_class];
        let template = system
            .gallery()
            .map_err(stage("score"))?
            .lookup(id)
            .expect("enrolled template present")
            .clone();
        let probe = per_class[probe_class][probe_idx];
        let embedding = embed_probe(probe).map_err(stage("score"))?;
        let value = compare(&space, &embedding, &template).map_err(stage("score"))?;
        score_set
            .push(value, ScoreLabel::Impostor)
            .map_err(stage("score"))?;
    }

    // rates at the equal-error operating point
    let (genuine, impostor) = score_set.similarity_scores();
    let mut pooled = genuine.clone();
    pooled.extend_from_slice(&impostor);
    let grid = ThresholdGrid::midpoints(&pooled).map_err(stage("rates"))?;
    let eer_result = eer(&genuine, &impostor, &grid).map_err(stage("rates"))?;
    let roc_rows = roc_curve(&genuine, &impostor, &grid).map_err(stage("rates"))?;
    let threshold = match orientation {
        Orientation::Distance => -eer_result.threshold,
        Orientation::Similarity => eer_result.threshold,
    };

    // n-gallery extrapolation
    let gallery_size = system.gallery().map_err(stage("scale"))?.len() as u32;
    let scaled = gallery_scaled_rates(
        eer_result.fmr_at_threshold,
        eer_result.fnmr_at_threshold,
        gallery_size,
    );

    // emit artifacts
    let report = ExperimentReport {
        eer: eer_result.eer,
        threshold,
        fmr_at_threshold: eer_result.fmr_at_threshold,
        fnmr_at_threshold: eer_result.fnmr_at_threshold,
        gallery_size,
        scaled,
        genuine_count,
        impostor_count,
        self_verify_failures,
        roc_path: cfg.roc_path.display().to_string(),
        seeds,
        config_echo: cfg.to_text(),
    };
    write_roc_csv(&resolve(base_dir, &cfg.roc_path), &roc_rows).map_err(stage("emit"))?;
    std::fs::write(resolve(base_dir, &cfg.scores_path), scores_csv(&score_set))
        .map_err(stage("emit"))?;
    system
        .gallery()
        .map_err(stage("emit"))?
        .save(&resolve(base_dir, &cfg.gallery_path))
        .map_err(stage("emit"))?;
    std::fs::write(resolve(base_dir, &cfg.report_path), report.to_text()).map_err(stage("emit"))?;
    if let Some(path) = &cfg.transcript_path {
        std::fs::write(
            resolve(base_dir, path),
            system.transcript_export().map_err(stage("emit"))?,
        )
        .map_err(stage("emit"))?;
    }
    Ok(report)
}

/// The extractor architecture the pipeline trains: an MLP from the data
/// dimension through the configured hidden layers to one logit per
/// identity, with a softmax head.
pub fn extractor_for(cfg: &ExperimentConfig, weight_seed: u64) -> NeuralNetwork {
    let mut dims = Vec::with_capacity(cfg.hidden.len() + 2);
    dims.push(cfg.data_dim);
    dims.extend_from_slice(&cfg.hidden);
    dims.push(cfg.classes);
    NeuralNetwork::mlp(&dims, ActivationKind::Relu, true, weight_seed)
}

/// The synthetic data specification the pipeline draws from.
pub fn data_spec_for(cfg: &ExperimentConfig, data_seed: u64) -> SyntheticDataSpec {
    SyntheticDataSpec {
        class_count: cfg.classes,
        samples_per_class: cfg.samples_per_class,
        input_dim: cfg.data_dim,
        center_scale: cfg.center_scale,
        noise_std: cfg.noise_std,
        seed: data_seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{SpaceDescriptor, SpaceKind};

    fn base_config(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            system: SystemConfig {
                lambda: 64,
                space: SpaceDescriptor::new(SpaceKind::Euclidean, 4),
                threshold: 1.0,
                capacity: 64,
                model_path: PathBuf::from("model.bmnn"),
                seed,
            },
            classes: 4,
            samples_per_class: 6,
            data_dim: 8,
            center_scale: 10.0,
            noise_std: 0.05,
            hidden: vec![12],
            epochs: 300,
            learning_rate: 0.05,
            loss: Loss::CrossEntropy,
            impostor_cap: 50,
            gallery_path: PathBuf::from("gallery.bmdb"),
            roc_path: PathBuf::from("roc.csv"),
            report_path: PathBuf::from("report.txt"),
            scores_path: PathBuf::from("scores.csv"),
            data_path: PathBuf::from("data.csv"),
            transcript_path: None,
        }
    }

    #[test]
    fn config_text_round_trips() {
        let cfg = base_config(7);
        let parsed = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = base_config(7).to_text();
        text.push_str("bogus.key=1\n");
        assert!(matches!(
            ExperimentConfig::parse(&text),
            Err(ConfigError::UnknownKey(_))
        ));
    }

    #[test]
    fn defaults_fill_missing_pipeline_keys() {
        let system_only = SystemConfig {
            lambda: 64,
            space: SpaceDescriptor::new(SpaceKind::Euclidean, 8),
            threshold: 1.0,
            capacity: 64,
            model_path: PathBuf::from("model.bmnn"),
            seed: 1,
        }
        .to_text();
        let cfg = ExperimentConfig::parse(&system_only).unwrap();
        assert_eq!(cfg.classes, 8);
        assert_eq!(cfg.hidden, vec![24]);
        assert_eq!(cfg.loss, Loss::CrossEntropy);
        assert_eq!(cfg.roc_path, PathBuf::from("roc.csv"));
    }

    #[test]
    fn separable_pipeline_reaches_low_eer() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&base_config(11), dir.path()).unwrap();
        assert!(report.eer < 0.05, "eer {}", report.eer);
        assert_eq!(report.self_verify_failures, 0);
        assert_eq!(report.gallery_size, 4);
        assert_eq!(report.genuine_count, 4 * 5);
        assert!(report.impostor_count <= 50);
        for path in [
            "model.bmnn",
            "gallery.bmdb",
            "roc.csv",
            "report.txt",
            "scores.csv",
        ] {
            assert!(dir.path().join(path).exists(), "{path} missing");
        }

        // same-class embeddings sit closer to their template than the
        // cross-class average
        let text = std::fs::read_to_string(dir.path().join("scores.csv")).unwrap();
        let scores = parse_scores_csv(&text, Orientation::Distance).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let genuine = scores.genuine();
        let impostor_mean = mean(&scores.impostor());
        assert!(genuine.iter().all(|&g| g < impostor_mean));
    }

    #[test]
    fn indistinguishable_classes_push_eer_up() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(13);
        cfg.center_scale = 0.1;
        cfg.noise_std = 100.0;
        cfg.epochs = 40;
        let report = run_experiment(&cfg, dir.path()).unwrap();
        assert!(report.eer >= 0.3, "eer {}", report.eer);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let cfg = base_config(17);
        let report_a = run_experiment(&cfg, dir_a.path()).unwrap();
        let report_b = run_experiment(&cfg, dir_b.path()).unwrap();
        assert_eq!(report_a, report_b);
        for file in [
            "report.txt",
            "roc.csv",
            "gallery.bmdb",
            "scores.csv",
            "model.bmnn",
        ] {
            let a = std::fs::read(dir_a.path().join(file)).unwrap();
            let b = std::fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between reruns");
        }
    }

    #[test]
    fn report_rates_match_persisted_scores() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base_config(19);
        let report = run_experiment(&cfg, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("scores.csv")).unwrap();
        let scores = parse_scores_csv(&text, Orientation::Distance).unwrap();
        let (genuine, impostor) = scores.similarity_scores();
        let t = -report.threshold;
        assert_eq!(
            crate::matcher::fmr(&impostor, t).unwrap(),
            report.fmr_at_threshold
        );
        assert_eq!(
            crate::matcher::fnmr(&genuine, t).unwrap(),
            report.fnmr_at_threshold
        );
    }

    #[test]
    fn report_text_parses_back() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&base_config(23), dir.path()).unwrap();
        let entries = parse_report_entries(&report.to_text()).unwrap();
        let eer_text = &entries.iter().find(|(k, _)| k == "eer").unwrap().1;
        assert_eq!(eer_text.parse::<f64>().unwrap(), report.eer);
        let threshold_text = &entries.iter().find(|(k, _)| k == "threshold").unwrap().1;
        assert_eq!(threshold_text.parse::<f64>().unwrap(), report.threshold);
    }
}
