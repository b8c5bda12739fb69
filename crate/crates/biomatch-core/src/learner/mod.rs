//! The feature extractor: a feedforward network with full-batch
//! gradient-descent training, plus the circuit-to-network compiler and
//! the binary model format.

pub mod circuit;
pub mod matrix;
pub mod model_io;
pub mod net;
pub mod train;

pub use circuit::{circuit_to_mlp, BooleanCircuit, CircuitError, Gate, GateKind};
pub use matrix::Matrix;
pub use model_io::{
    load_model, model_from_bytes, model_to_bytes, save_model, CorruptModel, ModelIoError,
};
pub use net::{
    activation, avgpool2d, conv2d, embed, maxpool2d, relu, softmax, ActivationKind, Layer,
    NeuralNetwork, Shape, Value,
};
pub use train::{
    backprop_gradients, batch_loss, empirical_error, gradient_descent_step, train, Gradients,
    LabeledSample, LayerGradient, Loss, TrainingConfig, TrainingOutcome,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite activation after layer {layer}")]
    NonFiniteActivation { layer: usize },
    #[error("network weights contain non-finite values")]
    NonFiniteWeights,
    #[error("gradient contains non-finite values")]
    NonFiniteGradient,
    #[error("layer requires a matrix input")]
    ExpectedMatrixInput,
    #[error("window {window:?} exceeds input {input:?}")]
    WindowTooLarge {
        window: (usize, usize),
        input: (usize, usize),
    },
    #[error("gradient structure does not match the network")]
    ShapeMismatch,
    #[error("training diverged at epoch {epoch} with loss {loss}")]
    DivergenceDetected { epoch: usize, loss: f64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("loss is not differentiable")]
    NonDifferentiableLoss,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("embeddings target bit or real spaces only")]
    UnsupportedEmbeddingSpace,
}
