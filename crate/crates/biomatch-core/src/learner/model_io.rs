//! Binary model container.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic        4 bytes   "BMNN"
//! version      u16       currently 1
//! input tag    u8        0 = vector, 1 = matrix
//! input dims   u32       vector length, or u32 rows + u32 cols
//! seed         u64       weight-initialisation seed
//! layer count  u32
//! per layer    u8 tag:
//!   0 Linear    out u32, in u32, out·in f64 weights row-major, out f64 bias
//!   1 Activation kind u8 (0 sign, 1 threshold, 2 sigmoid, 3 relu, 4 softmax)
//!   2 Conv2D    rows u32, cols u32, rows·cols f64 filter row-major
//!   3 MaxPool2D rows u32, cols u32
//!   4 AvgPool2D rows u32, cols u32
//! ```
//!
//! Save followed by load reproduces the network bit-exactly.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::matrix::Matrix;
use super::net::{ActivationKind, Layer, NeuralNetwork, Shape};
use super::LearnerError;
use crate::wire::{Cursor, Truncated};

pub const MODEL_MAGIC: &[u8; 4] = b"BMNN";
pub const MODEL_VERSION: u16 = 1;

/// Why a model file was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorruptModel {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("file truncated")]
    Truncated,
    #[error("invalid tag {value} for {field}")]
    InvalidTag { field: &'static str, value: u8 },
    #[error("trailing bytes after the last layer")]
    TrailingBytes,
}

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("model i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt model file: {0}")]
    Corrupt(#[from] CorruptModel),
    #[error("model fails validation: {0}")]
    Invalid(#[from] LearnerError),
}

impl From<Truncated> for ModelIoError {
    fn from(_: Truncated) -> Self {
        ModelIoError::Corrupt(CorruptModel::Truncated)
    }
}

pub fn model_to_bytes(net: &NeuralNetwork) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    match net.input_shape() {
        Shape::Vector(n) => {
            out.push(0);
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        Shape::Matrix(n, m) => {
            out.push(1);
            out.extend_from_slice(&(n as u32).to_le_bytes());
            out.extend_from_slice(&(m as u32).to_le_bytes());
        }
    }
    out.extend_from_slice(&net.seed().to_le_bytes());
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for layer in net.layers() {
        match layer {
            Layer::Linear { weights, bias } => {
                out.push(0);
                out.extend_from_slice(&(weights.rows() as u32).to_le_bytes());
                out.extend_from_slice(&(weights.cols() as u32).to_le_bytes());
                for w in weights.data() {
                    out.extend_from_slice(&w.to_le_bytes());
                }
                for b in bias {
                    out.extend_from_slice(&b.to_le_bytes());
                }
            }
            Layer::Activation(kind) => {
                out.push(1);
                out.push(match kind {
                    ActivationKind::Sign => 0,
                    ActivationKind::Threshold => 1,
                    ActivationKind::Sigmoid => 2,
                    ActivationKind::Relu => 3,
                    ActivationKind::Softmax => 4,
                });
            }
            Layer::Conv2D { filter } => {
                out.push(2);
                out.extend_from_slice(&(filter.rows() as u32).to_le_bytes());
                out.extend_from_slice(&(filter.cols() as u32).to_le_bytes());
                for w in filter.data() {
                    out.extend_from_slice(&w.to_le_bytes());
                }
            }
            Layer::MaxPool2D { rows, cols } => {
                out.push(3);
                out.extend_from_slice(&(*rows as u32).to_le_bytes());
                out.extend_from_slice(&(*cols as u32).to_le_bytes());
            }
            Layer::AvgPool2D { rows, cols } => {
                out.push(4);
                out.extend_from_slice(&(*rows as u32).to_le_bytes());
                out.extend_from_slice(&(*cols as u32).to_le_bytes());
            }
        }
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<NeuralNetwork, ModelIoError> {
    let mut cursor = Cursor::new(bytes);
    if cursor.take(4)? != MODEL_MAGIC {
        return Err(CorruptModel::BadMagic.into());
    }
    let version = cursor.read_u16()?;
    if version != MODEL_VERSION {
        return Err(CorruptModel::UnsupportedVersion(version).into());
    }
    let input_shape = match cursor.read_u8()? {
        0 => Shape::Vector(cursor.read_u32()? as usize),
        1 => {
            let rows = cursor.read_u32()? as usize;
            let cols = cursor.read_u32()? as usize;
            Shape::Matrix(rows, cols)
        }
        value => {
            return Err(CorruptModel::InvalidTag {
                field: "input shape",
                value,
            }
            .into())
        }
    };
    let seed = cursor.read_u64()?;
    let layer_count = cursor.read_u32()? as usize;
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let tag = cursor.read_u8()?;
        let layer = match tag {
            0 => {
                let rows = cursor.read_u32()? as usize;
                let cols = cursor.read_u32()? as usize;
                let mut weights = Vec::with_capacity(rows * cols);
                for _ in 0..rows * cols {
                    weights.push(cursor.read_f64()?);
                }
                let mut bias = Vec::with_capacity(rows);
                for _ in 0..rows {
                    bias.push(cursor.read_f64()?);
                }
                Layer::Linear {
                    weights: Matrix::from_flat(rows, cols, weights),
                    bias,
                }
            }
            1 => Layer::Activation(match cursor.read_u8()? {
                0 => ActivationKind::Sign,
                1 => ActivationKind::Threshold,
                2 => ActivationKind::Sigmoid,
                3 => ActivationKind::Relu,
                4 => ActivationKind::Softmax,
                value => {
                    return Err(CorruptModel::InvalidTag {
                        field: "activation kind",
                        value,
                    }
                    .into())
                }
            }),
            2 => {
                let rows = cursor.read_u32()? as usize;
                let cols = cursor.read_u32()? as usize;
                let mut filter = Vec::with_capacity(rows * cols);
                for _ in 0..rows * cols {
                    filter.push(cursor.read_f64()?);
                }
                Layer::Conv2D {
                    filter: Matrix::from_flat(rows, cols, filter),
                }
            }
            3 => Layer::MaxPool2D {
                rows: cursor.read_u32()? as usize,
                cols: cursor.read_u32()? as usize,
            },
            4 => Layer::AvgPool2D {
                rows: cursor.read_u32()? as usize,
                cols: cursor.read_u32()? as usize,
            },
            value => {
                return Err(CorruptModel::InvalidTag {
                    field: "layer",
                    value,
                }
                .into())
            }
        };
        layers.push(layer);
    }
    if cursor.remaining() != 0 {
        return Err(CorruptModel::TrailingBytes.into());
    }
    Ok(NeuralNetwork::new(input_shape, layers, seed)?)
}

pub fn save_model(net: &NeuralNetwork, path: &Path) -> Result<(), ModelIoError> {
    Ok(fs::write(path, model_to_bytes(net))?)
}

pub fn load_model(path: &Path) -> Result<NeuralNetwork, ModelIoError> {
    model_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_net() -> NeuralNetwork {
        NeuralNetwork::new(
            Shape::Matrix(3, 3),
            vec![
                Layer::Conv2D {
                    filter: Matrix::from_rows(vec![vec![0.5, -1.0], vec![0.0, 2.0]]),
                },
                Layer::MaxPool2D { rows: 1, cols: 3 },
                Layer::Activation(ActivationKind::Relu),
                Layer::linear(Matrix::from_rows(vec![vec![1.5, -2.5, 0.25]]), vec![0.125]),
                Layer::Activation(ActivationKind::Softmax),
            ],
            99,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let net = sample_net();
        let bytes = model_to_bytes(&net);
        let loaded = model_from_bytes(&bytes).unwrap();
        assert_eq!(loaded, net);
        assert_eq!(model_to_bytes(&loaded), bytes);
    }

    #[test]
    fn round_trip_through_filesystem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bmnn");
        let net =
            super::super::net::NeuralNetwork::mlp(&[4, 7, 3], ActivationKind::Relu, true, 2024);
        save_model(&net, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, net);
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = model_to_bytes(&sample_net());
        bytes[0] = b'X';
        assert!(matches!(
            model_from_bytes(&bytes),
            Err(ModelIoError::Corrupt(CorruptModel::BadMagic))
        ));
    }

    #[test]
    fn unsupported_version_rejected() {
        let mut bytes = model_to_bytes(&sample_net());
        bytes[4] = 9;
        assert!(matches!(
            model_from_bytes(&bytes),
            Err(ModelIoError::Corrupt(CorruptModel::UnsupportedVersion(9)))
        ));
    }

    #[test]
    fn truncation_rejected() {
        let bytes = model_to_bytes(&sample_net());
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(
            model_from_bytes(cut),
            Err(ModelIoError::Corrupt(CorruptModel::Truncated))
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = model_to_bytes(&sample_net());
        bytes.push(0);
        assert!(matches!(
            model_from_bytes(&bytes),
            Err(ModelIoError::Corrupt(CorruptModel::TrailingBytes))
        ));
    }
}
