//! Template database: identifier generation, capacity-bounded storage of
//! (identifier, embedding) records, and binary persistence.
//!
//! Store file layout (all integers and floats little-endian):
//!
//! ```text
//! magic        4 bytes  "BMDB"
//! version      u16      currently 1
//! lambda       u16      identifier bit length
//! capacity     u32
//! space        kind u8 (0 hamming, 2 euclidean, 3 chebyshev, 4 cosine),
//!              dimension u32, orientation u8 (0 distance, 1 similarity)
//! record count u32
//! records, sorted ascending by identifier:
//!   identifier lambda/8 raw bytes
//!   embedding  dimension × f64 for real-vector spaces, or packed bits
//!              (most-significant bit first, padded to a whole byte) for
//!              Hamming spaces
//! ```
//!
//! Symbol-string spaces have no record encoding and are rejected when a
//! gallery is created.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::RngCore;
use thiserror::Error;

use crate::metric::{MetricError, MetricPoint, Orientation, SpaceDescriptor, SpaceKind};
use crate::wire::{Cursor, Truncated};

pub const STORE_MAGIC: &[u8; 4] = b"BMDB";
pub const STORE_VERSION: u16 = 1;

/// Resampling attempts before identifier generation gives up.
const MAX_ID_RESAMPLES: usize = 100;

/// Why a store file was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorruptStore {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("file truncated")]
    Truncated,
    #[error("invalid encoding: {0}")]
    InvalidEncoding(String),
    #[error("trailing bytes after the last record")]
    TrailingBytes,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("lambda must be a positive multiple of 8 bits, at least 16 (got {0})")]
    InvalidLambda(u16),
    #[error("capacity must be positive")]
    InvalidCapacity,
    #[error("no record encoding for {0:?} spaces")]
    UnsupportedSpace(SpaceKind),
    #[error("gallery is at capacity ({capacity})")]
    CapacityExceeded { capacity: u32 },
    #[error("identifier {0} already enrolled")]
    DuplicateId(String),
    #[error("embedding does not conform to the gallery space: {0}")]
    SpaceMismatch(#[from] MetricError),
    #[error("could not draw a fresh identifier after {MAX_ID_RESAMPLES} attempts")]
    CapacityExhausted,
    #[error("corrupt store file: {0}")]
    Corrupt(#[from] CorruptStore),
    #[error("store i/o failed: {0}")]
    Io(#[from] std::io::Error),
}

impl From<Truncated> for StoreError {
    fn from(_: Truncated) -> Self {
        StoreError::Corrupt(CorruptStore::Truncated)
    }
}

/// A λ-bit record identifier; hex-encoded wherever it leaves the process.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemplateId(Vec<u8>);

impl TemplateId {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        TemplateId(bytes)
    }

    pub fn from_hex(text: &str) -> Result<Self, hex::FromHexError> {
        Ok(TemplateId(hex::decode(text)?))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn bit_len(&self) -> usize {
        self.0.len() * 8
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// A stored (identifier, embedding) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateRecord {
    pub id: TemplateId,
    pub embedding: MetricPoint,
}

/// Capacity-bounded collection of enrolled templates over one space.
///
/// Reads take `&self` and writes `&mut self`, so the borrow checker
/// enforces concurrent readers with exclusive writers; behind a lock a
/// reader observes either the pre- or post-insert state, never a partial
/// record.
#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    lambda: u16,
    capacity: u32,
    space: SpaceDescriptor,
    records: BTreeMap<TemplateId, MetricPoint>,
}

impl Gallery {
    pub fn new(lambda: u16, capacity: u32, space: SpaceDescriptor) -> Result<Self, StoreError> {
        if lambda < 16 || !lambda.is_multiple_of(8) {
            return Err(StoreError::InvalidLambda(lambda));
        }
        if capacity == 0 {
            return Err(StoreError::InvalidCapacity);
        }
        if space.kind == SpaceKind::Levenshtein {
            return Err(StoreError::UnsupportedSpace(space.kind));
        }
        Ok(Gallery {
            lambda,
            capacity,
            space,
            records: BTreeMap::new(),
        })
    }

    pub fn lambda(&self) -> u16 {
        self.lambda
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in ascending identifier order.
    pub fn iter(&self) -> impl Iterator<Item = (&TemplateId, &MetricPoint)> {
        self.records.iter()
    }

    /// Draws a fresh identifier, resampling on collision.
    pub fn fresh_id<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<TemplateId, StoreError> {
        generate_id(self.lambda, |id| self.records.contains_key(id), rng)
    }

    pub fn insert(&mut self, record: TemplateRecord) -> Result<(), StoreError> {
        if self.records.len() as u32 >= self.capacity {
            return Err(StoreError::CapacityExceeded {
                capacity: self.capacity,
            });
        }
        if record.id.bit_len() != self.lambda as usize {
            return Err(StoreError::Corrupt(CorruptStore::InvalidEncoding(format!(
                "identifier has {} bits, gallery uses {}",
                record.id.bit_len(),
                self.lambda
            ))));
        }
        if self.records.contains_key(&record.id) {
            return Err(StoreError::DuplicateId(record.id.to_hex()));
        }
        self.space.validate_point(&record.embedding)?;
        self.records.insert(record.id, record.embedding);
        Ok(())
    }

    /// Exact-match retrieval; absence is a normal outcome.
    pub fn lookup(&self, id: &TemplateId) -> Option<&MetricPoint> {
        self.records.get(id)
    }

    /// Removes a record, returning its embedding when present.
    pub fn remove(&mut self, id: &TemplateId) -> Option<MetricPoint> {
        self.records.remove(id)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(STORE_MAGIC);
        out.extend_from_slice(&STORE_VERSION.to_le_bytes());
        out.extend_from_slice(&self.lambda.to_le_bytes());
        out.extend_from_slice(&self.capacity.to_le_bytes());
        out.push(space_kind_tag(self.space.kind));
        out.extend_from_slice(&(self.space.dimension as u32).to_le_bytes());
        out.push(match self.space.orientation() {
            Orientation::Distance => 0,
            Orientation::Similarity => 1,
        });
        out.extend_from_slice(&(self.records.len() as u32).to_le_bytes());
        for (id, embedding) in &self.records {
            out.extend_from_slice(id.as_bytes());
            out.extend_from_slice(
                &encode_embedding(&self.space, embedding).expect("stored points conform"),
            );
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreError> {
        let mut cursor = Cursor::new(bytes);
        if cursor.take(4)? != STORE_MAGIC {
            return Err(CorruptStore::BadMagic.into());
        }
        let version = cursor.read_u16()?;
        if version != STORE_VERSION {
            return Err(CorruptStore::UnsupportedVersion(version).into());
        }
        let lambda = cursor.read_u16()?;
        let capacity = cursor.read_u32()?;
        let kind = space_kind_from_tag(cursor.read_u8()?)?;
        let dimension = cursor.read_u32()? as usize;
        if dimension == 0 {
            return Err(CorruptStore::InvalidEncoding("zero dimension".into()).into());
        }
        let space = SpaceDescriptor::new(kind, dimension);
        let orientation = cursor.read_u8()?;
        let expected_orientation = match space.orientation() {
            Orientation::Distance => 0,
            Orientation::Similarity => 1,
        };
        if orientation != expected_orientation {
            return Err(CorruptStore::InvalidEncoding(
                "orientation disagrees with the space kind".into(),
            )
            .into());
        }
        let count = cursor.read_u32()?;
        let mut gallery = Gallery::new(lambda, capacity, space)?;
        if count > capacity {
            return Err(
                CorruptStore::InvalidEncoding("record count exceeds capacity".into()).into(),
            );
        }
        let mut previous: Option<TemplateId> = None;
        for _ in 0..count {
            let id = TemplateId::from_bytes(cursor.take(lambda as usize / 8)?.to_vec());
            if let Some(prev) = &previous {
                if *prev >= id {
                    return Err(CorruptStore::InvalidEncoding(
                        "records are not sorted by identifier".into(),
                    )
                    .into());
                }
            }
            let embedding = decode_embedding(&space, &mut cursor)?;
            previous = Some(id.clone());
            gallery.records.insert(id, embedding);
        }
        if cursor.remaining() != 0 {
            return Err(CorruptStore::TrailingBytes.into());
        }
        Ok(gallery)
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        Ok(fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        Gallery::from_bytes(&fs::read(path)?)
    }
}

fn space_kind_tag(kind: SpaceKind) -> u8 {
    match kind {
        SpaceKind::Hamming => 0,
        SpaceKind::Levenshtein => 1,
        SpaceKind::Euclidean => 2,
        SpaceKind::Chebyshev => 3,
        SpaceKind::CosineSimilarity => 4,
    }
}

fn space_kind_from_tag(tag: u8) -> Result<SpaceKind, CorruptStore> {
    match tag {
        0 => Ok(SpaceKind::Hamming),
        2 => Ok(SpaceKind::Euclidean),
        3 => Ok(SpaceKind::Chebyshev),
        4 => Ok(SpaceKind::CosineSimilarity),
        1 => Err(CorruptStore::InvalidEncoding(
            "symbol-string spaces have no record encoding".into(),
        )),
        other => Err(CorruptStore::InvalidEncoding(format!(
            "unknown space kind tag {other}"
        ))),
    }
}

/// Encodes an embedding in the store's record layout: packed bits for
/// Hamming spaces (most-significant bit first), f64 coordinates otherwise.
pub fn encode_embedding(
    space: &SpaceDescriptor,
    point: &MetricPoint,
) -> Result<Vec<u8>, StoreError> {
    space.validate_point(point)?;
    match point {
        MetricPoint::BitString(bits) => {
            let mut out = vec![0_u8; bits.len().div_ceil(8)];
            for (i, &bit) in bits.iter().enumerate() {
                if bit {
                    out[i / 8] |= 1 << (7 - i % 8);
                }
            }
            Ok(out)
        }
        MetricPoint::RealVector(values) => {
            let mut out = Vec::with_capacity(values.len() * 8);
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
            Ok(out)
        }
        MetricPoint::SymbolString(_) => Err(StoreError::UnsupportedSpace(SpaceKind::Levenshtein)),
    }
}

fn decode_embedding(
    space: &SpaceDescriptor,
    cursor: &mut Cursor<'_>,
) -> Result<MetricPoint, StoreError> {
    match space.kind {
        SpaceKind::Hamming => {
            let bytes = cursor.take(space.dimension.div_ceil(8))?;
            let bits = (0..space.dimension)
                .map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1)
                .collect();
            Ok(MetricPoint::BitString(bits))
        }
        SpaceKind::Euclidean | SpaceKind::Chebyshev | SpaceKind::CosineSimilarity => {
            let mut values = Vec::with_capacity(space.dimension);
            for _ in 0..space.dimension {
                let v = cursor.read_f64()?;
                if !v.is_finite() {
                    return Err(CorruptStore::InvalidEncoding(
                        "non-finite embedding coordinate".into(),
                    )
                    .into());
                }
                values.push(v);
            }
            Ok(MetricPoint::RealVector(values))
        }
        SpaceKind::Levenshtein => Err(StoreError::UnsupportedSpace(space.kind)),
    }
}

/// Draws a uniform λ-bit identifier distinct from every taken one,
/// resampling on collision up to a fixed attempt budget.
pub fn generate_id<R, F>(lambda: u16, is_taken: F, rng: &mut R) -> Result<TemplateId, StoreError>
where
    R: RngCore + ?Sized,
    F: Fn(&TemplateId) -> bool,
{
    if lambda < 16 || !lambda.is_multiple_of(8) {
        return Err(StoreError::InvalidLambda(lambda));
    }
    for _ in 0..MAX_ID_RESAMPLES {
        let mut bytes = vec![0_u8; lambda as usize / 8];
        rng.fill_bytes(&mut bytes);
        let id = TemplateId::from_bytes(bytes);
        if !is_taken(&id) {
            return Ok(id);
        }
    }
    Err(StoreError::CapacityExhausted)
}
