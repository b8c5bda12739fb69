//! The interactive verification/identification system: a prover holding
//! raw biometric inputs and a verifier holding the gallery, run in one
//! process with every exchanged message recorded in a transcript.
//!
//! The prover side computes the embedding g(x) locally and only the
//! embedding crosses the boundary, so transcripts never contain raw
//! biometric inputs; the message types make that structural.

use std::fmt;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::learner::{embed, LearnerError, NeuralNetwork};
use crate::matcher::{
    decide, eer, IdentificationResult, IdentifyOutcome, MatchDecision, MatcherError, ScoreSet,
    ThresholdGrid,
};
use crate::metric::{compare, MetricError, MetricPoint, Orientation, SpaceDescriptor, SpaceKind};
use crate::store::{encode_embedding, Gallery, StoreError, TemplateId, TemplateRecord};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("system is already initialised")]
    AlreadyInitialized,
    #[error("system is not initialised")]
    NotInitialized,
    #[error("extractor output dimension {extractor} does not match space dimension {space}")]
    DimensionMismatch { extractor: usize, space: usize },
    #[error("distance thresholds must be non-negative")]
    InvalidThreshold,
    #[error("gallery does not match the system parameters: {0}")]
    GalleryMismatch(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Embed(#[from] LearnerError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Matcher(#[from] MatcherError),
}

/// Public parameters fixed at initialisation.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Security parameter: identifier bit length.
    pub lambda: u16,
    pub space: SpaceDescriptor,
    /// Decision threshold in the space's orientation.
    pub threshold: f64,
    /// Gallery capacity.
    pub capacity: u32,
    /// Label of the extractor model, typically its file name.
    pub model_id: String,
    /// SHA-256 of the serialised extractor.
    pub model_digest: [u8; 32],
}

/// SHA-256 digest of a serialised model, the binding stored in
/// [`SystemParams`].
pub fn model_digest(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ProverToVerifier,
    VerifierToProver,
}

impl Direction {
    fn wire_name(self) -> &'static str {
        match self {
            Direction::ProverToVerifier => "p2v",
            Direction::VerifierToProver => "v2p",
        }
    }
}

/// A protocol message. Requests carry embeddings, never raw inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    EnrollRequest {
        embedding: MetricPoint,
    },
    EnrollResponse {
        id: TemplateId,
    },
    VerifyRequest {
        id: TemplateId,
        embedding: MetricPoint,
    },
    VerifyResponse {
        accepted: bool,
        /// Absent when the claimed identifier was unknown.
        score: Option<f64>,
    },
    IdentifyRequest {
        embedding: MetricPoint,
    },
    IdentifyResponse {
        outcome: IdentifyOutcome,
        best_score: Option<f64>,
        margin: f64,
    },
}

impl Message {
    fn kind(&self) -> &'static str {
        match self {
            Message::EnrollRequest { .. } => "enroll_request",
            Message::EnrollResponse { .. } => "enroll_response",
            Message::VerifyRequest { .. } => "verify_request",
            Message::VerifyResponse { .. } => "verify_response",
            Message::IdentifyRequest { .. } => "identify_request",
            Message::IdentifyResponse { .. } => "identify_response",
        }
    }

    /// Binary payload for the transcript export; embeddings use the store
    /// record encoding.
    fn payload(&self, space: &SpaceDescriptor) -> Vec<u8> {
        fn optional_f64(out: &mut Vec<u8>, value: Option<f64>) {
            match value {
                Some(v) => {
                    out.push(1);
                    out.extend_from_slice(&v.to_le_bytes());
                }
                None => out.push(0),
            }
        }
        let encode = |p: &MetricPoint| {
            encode_embedding(space, p).expect("transcript embeddings conform to the space")
        };
        match self {
            Message::EnrollRequest { embedding } => encode(embedding),
            Message::EnrollResponse { id } => id.as_bytes().to_vec(),
            Message::VerifyRequest { id, embedding } => {
                let mut out = id.as_bytes().to_vec();
                out.extend_from_slice(&encode(embedding));
                out
            }
            Message::VerifyResponse { accepted, score } => {
                let mut out = vec![u8::from(*accepted)];
                optional_f64(&mut out, *score);
                out
            }
            Message::IdentifyRequest { embedding } => encode(embedding),
            Message::IdentifyResponse {
                outcome,
                best_score,
                margin,
            } => {
                let mut out = Vec::new();
                match outcome {
                    IdentifyOutcome::Identified(id) => {
                        out.push(1);
                        out.extend_from_slice(id.as_bytes());
                    }
                    IdentifyOutcome::NoMatch => out.push(0),
                }
                optional_f64(&mut out, *best_score);
                out.extend_from_slice(&margin.to_le_bytes());
                out
            }
        }
    }
}

/// One recorded message. `timestamp` is a logical operation counter, not
/// wall-clock time, so identical runs produce identical transcripts.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub timestamp: u64,
    pub direction: Direction,
    pub message: Message,
}

/// Ordered record of every message the system exchanged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
    operations: u64,
}

impl Transcript {
    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    fn begin_operation(&mut self) -> u64 {
        let ts = self.operations;
        self.operations += 1;
        ts
    }

    fn record(&mut self, timestamp: u64, direction: Direction, message: Message) {
        self.entries.push(TranscriptEntry {
            seq: self.entries.len() as u64,
            timestamp,
            direction,
            message,
        });
    }

    /// Line-delimited export, one `seq,direction,kind,payload-hex` record
    /// per message.
    pub fn export(&self, space: &SpaceDescriptor) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                entry.seq,
                entry.direction.wire_name(),
                entry.message.kind(),
                hex::encode(entry.message.payload(space)),
            ));
        }
        out
    }
}

/// Result of a verification claim. An unknown identifier is reported
/// distinctly from a failed match; callers wanting the two to be
/// indistinguishable can collapse on [`VerifyOutcome::accepted`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerifyOutcome {
    Decision(MatchDecision),
    UnknownId,
}

impl VerifyOutcome {
    pub fn accepted(&self) -> bool {
        matches!(self, VerifyOutcome::Decision(d) if d.accept)
    }

    pub fn score(&self) -> Option<f64> {
        match self {
            VerifyOutcome::Decision(d) => Some(d.score),
            VerifyOutcome::UnknownId => None,
        }
    }
}

struct SystemState {
    params: SystemParams,
    gallery: Gallery,
    extractor: NeuralNetwork,
    transcript: Transcript,
    rng: ChaCha8Rng,
}

/// A biometric system handle. `init` runs exactly once per handle; the
/// protocol operations require it.
#[derive(Default)]
pub struct BiometricSystem {
    state: Option<SystemState>,
}

impl BiometricSystem {
    pub fn new() -> Self {
        BiometricSystem { state: None }
    }

    /// Fixes the public parameters, binds the extractor, and creates an
    /// empty gallery. Rejected on a handle that was already initialised.
    pub fn init(
        &mut self,
        params: SystemParams,
        extractor: NeuralNetwork,
        rng_seed: u64,
    ) -> Result<&SystemParams, ProtocolError> {
        let gallery = Gallery::new(params.lambda, params.capacity, params.space)?;
        self.init_with_gallery(params, extractor, gallery, rng_seed)
    }

    /// Like [`BiometricSystem::init`] but resuming from a persisted
    /// gallery, which must agree with the parameters.
    pub fn init_with_gallery(
        &mut self,
        params: SystemParams,
        extractor: NeuralNetwork,
        gallery: Gallery,
        rng_seed: u64,
    ) -> Result<&SystemParams, ProtocolError> {
        if self.state.is_some() {
            return Err(ProtocolError::AlreadyInitialized);
        }
        if extractor.output_dim() != params.space.dimension {
            return Err(ProtocolError::DimensionMismatch {
                extractor: extractor.output_dim(),
                space: params.space.dimension,
            });
        }
        if params.space.orientation() == Orientation::Distance && params.threshold < 0.0 {
            return Err(ProtocolError::InvalidThreshold);
        }
        if gallery.space() != &params.space {
            return Err(ProtocolError::GalleryMismatch("space differs".into()));
        }
        if gallery.lambda() != params.lambda {
            return Err(ProtocolError::GalleryMismatch("lambda differs".into()));
        }
        if gallery.capacity() != params.capacity {
            return Err(ProtocolError::GalleryMismatch("capacity differs".into()));
        }
        self.state = Some(SystemState {
            params,
            gallery,
            extractor,
            transcript: Transcript::default(),
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
        });
        Ok(&self.state.as_ref().unwrap().params)
    }

    fn state(&self) -> Result<&SystemState, ProtocolError> {
        self.state.as_ref().ok_or(ProtocolError::NotInitialized)
    }

    fn state_mut(&mut self) -> Result<&mut SystemState, ProtocolError> {
        self.state.as_mut().ok_or(ProtocolError::NotInitialized)
    }

    pub fn params(&self) -> Result<&SystemParams, ProtocolError> {
        Ok(&self.state()?.params)
    }

    pub fn gallery(&self) -> Result<&Gallery, ProtocolError> {
        Ok(&self.state()?.gallery)
    }

    pub fn transcript(&self) -> Result<&Transcript, ProtocolError> {
        Ok(&self.state()?.transcript)
    }

    pub fn extractor(&self) -> Result<&NeuralNetwork, ProtocolError> {
        Ok(&self.state()?.extractor)
    }

    /// Transcript export lines in the system's space encoding.
    pub fn transcript_export(&self) -> Result<String, ProtocolError> {
        let state = self.state()?;
        Ok(state.transcript.export(&state.params.space))
    }

    /// Registers a raw input: the prover sends its embedding, the
    /// verifier draws a fresh identifier and stores the template.
    pub fn enroll(&mut self, input: &[f64]) -> Result<TemplateId, ProtocolError> {
        let state = self.state_mut()?;
        if state.gallery.len() as u32 >= state.params.capacity {
            return Err(StoreError::CapacityExceeded {
                capacity: state.params.capacity,
            }
            .into());
        }
        let embedding = embed(&state.extractor, input, &state.params.space)?;
        let ts = state.transcript.begin_operation();
        state.transcript.record(
            ts,
            Direction::ProverToVerifier,
            Message::EnrollRequest {
                embedding: embedding.clone(),
            },
        );
        let id = state.gallery.fresh_id(&mut state.rng)?;
        state.gallery.insert(TemplateRecord {
            id: id.clone(),
            embedding,
        })?;
        state.transcript.record(
            ts,
            Direction::VerifierToProver,
            Message::EnrollResponse { id: id.clone() },
        );
        Ok(id)
    }

    /// One-to-one check of a raw input against a claimed identifier.
    pub fn verify(
        &mut self,
        id: &TemplateId,
        input: &[f64],
    ) -> Result<VerifyOutcome, ProtocolError> {
        let state = self.state_mut()?;
        let embedding = embed(&state.extractor, input, &state.params.space)?;
        let ts = state.transcript.begin_operation();
        state.transcript.record(
            ts,
            Direction::ProverToVerifier,
            Message::VerifyRequest {
                id: id.clone(),
                embedding: embedding.clone(),
            },
        );
        let outcome = match state.gallery.lookup(id) {
            None => VerifyOutcome::UnknownId,
            Some(stored) => {
                let score = compare(&state.params.space, &embedding, stored)?;
                VerifyOutcome::Decision(decide(
                    score,
                    state.params.threshold,
                    state.params.space.orientation(),
                ))
            }
        };
        state.transcript.record(
            ts,
            Direction::VerifierToProver,
            Message::VerifyResponse {
                accepted: outcome.accepted(),
                score: outcome.score(),
            },
        );
        Ok(outcome)
    }

    /// One-to-many search of a raw input over the whole gallery.
    pub fn identify(&mut self, input: &[f64]) -> Result<IdentificationResult, ProtocolError> {
        let state = self.state_mut()?;
        let embedding = embed(&state.extractor, input, &state.params.space)?;
        let ts = state.transcript.begin_operation();
        state.transcript.record(
            ts,
            Direction::ProverToVerifier,
            Message::IdentifyRequest {
                embedding: embedding.clone(),
            },
        );
        let result = crate::matcher::identify(
            state.gallery.iter(),
            &embedding,
            state.params.threshold,
            &state.params.space,
        )?;
        state.transcript.record(
            ts,
            Direction::VerifierToProver,
            Message::IdentifyResponse {
                outcome: result.outcome.clone(),
                best_score: result.best_score,
                margin: result.runner_up_margin,
            },
        );
        Ok(result)
    }

    /// Optional calibration: sets the decision threshold to the
    /// equal-error operating point of labelled calibration scores. The
    /// returned threshold (and the stored one) is in the space's own
    /// orientation.
    pub fn calibrate(
        &mut self,
        scores: &ScoreSet,
    ) -> Result<crate::matcher::EerResult, ProtocolError> {
        let state = self.state_mut()?;
        let (genuine, impostor) = scores.similarity_scores();
        let mut pooled = genuine.clone();
        pooled.extend_from_slice(&impostor);
        let grid = ThresholdGrid::midpoints(&pooled)?;
        let mut result = eer(&genuine, &impostor, &grid)?;
        if state.params.space.orientation() == Orientation::Distance {
            result.threshold = -result.threshold;
        }
        state.params.threshold = result.threshold;
        Ok(result)
    }
}

impl fmt::Debug for BiometricSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.state {
            Some(state) => f
                .debug_struct("BiometricSystem")
                .field("params", &state.params)
                .field("enrolled", &state.gallery.len())
                .finish(),
            None => f.write_str("BiometricSystem(uninitialised)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("duplicate key {0}")]
    DuplicateKey(String),
    #[error("missing key {0}")]
    MissingKey(&'static str),
    #[error("invalid value {value:?} for {key}")]
    InvalidValue { key: String, value: String },
    #[error("unknown key {0}")]
    UnknownKey(String),
}

/// Parses `key=value` lines; `#` comments and blank lines are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                text: raw.to_string(),
            });
        };
        let key = key.trim().to_string();
        if entries.iter().any(|(k, _)| k == &key) {
            return Err(ConfigError::DuplicateKey(key));
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

pub fn space_kind_name(kind: SpaceKind) -> &'static str {
    match kind {
        SpaceKind::Hamming => "hamming",
        SpaceKind::Levenshtein => "levenshtein",
        SpaceKind::Euclidean => "euclidean",
        SpaceKind::Chebyshev => "chebyshev",
        SpaceKind::CosineSimilarity => "cosine",
    }
}

pub fn space_kind_from_name(name: &str) -> Option<SpaceKind> {
    match name {
        "hamming" => Some(SpaceKind::Hamming),
        "levenshtein" => Some(SpaceKind::Levenshtein),
        "euclidean" => Some(SpaceKind::Euclidean),
        "chebyshev" => Some(SpaceKind::Chebyshev),
        "cosine" => Some(SpaceKind::CosineSimilarity),
        _ => None,
    }
}

/// The system half of the shared configuration file.
///
/// Keys: `lambda`, `space.kind`, `space.dim`, `threshold`, `capacity`,
/// `model.path`, `seed`. Unknown keys are ignored here so the file can
/// carry additional pipeline settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub lambda: u16,
    pub space: SpaceDescriptor,
    pub threshold: f64,
    pub capacity: u32,
    pub model_path: PathBuf,
    pub seed: u64,
}

pub(crate) fn lookup_value<'a>(
    entries: &'a [(String, String)],
    key: &'static str,
) -> Result<&'a str, ConfigError> {
    entries
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or(ConfigError::MissingKey(key))
}

pub(crate) fn parse_value<T: std::str::FromStr>(
    entries: &[(String, String)],
    key: &'static str,
) -> Result<T, ConfigError> {
    let value = lookup_value(entries, key)?;
    value.parse().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl SystemConfig {
    pub fn from_entries(entries: &[(String, String)]) -> Result<Self, ConfigError> {
        let kind_name = lookup_value(entries, "space.kind")?;
        let kind = space_kind_from_name(kind_name).ok_or_else(|| ConfigError::InvalidValue {
            key: "space.kind".into(),
            value: kind_name.into(),
        })?;
        let dimension: usize = parse_value(entries, "space.dim")?;
        if dimension == 0 {
            return Err(ConfigError::InvalidValue {
                key: "space.dim".into(),
                value: "0".into(),
            });
        }
        Ok(SystemConfig {
            lambda: parse_value(entries, "lambda")?,
            space: SpaceDescriptor::new(kind, dimension),
            threshold: parse_value(entries, "threshold")?,
            capacity: parse_value(entries, "capacity")?,
            model_path: PathBuf::from(lookup_value(entries, "model.path")?),
            seed: parse_value(entries, "seed")?,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        SystemConfig::from_entries(&parse_kv(text)?)
    }

    pub fn to_text(&self) -> String {
        format!(
            "lambda={}\nspace.kind={}\nspace.dim={}\nthreshold={}\ncapacity={}\nmodel.path={}\nseed={}\n",
            self.lambda,
            space_kind_name(self.space.kind),
            self.space.dimension,
            self.threshold,
            self.capacity,
            self.model_path.display(),
            self.seed,
        )
    }
}
