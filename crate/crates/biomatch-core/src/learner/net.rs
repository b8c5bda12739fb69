//! Feedforward network structure and forward evaluation.
//!
//! A network is an ordered list of layers applied to a vector or matrix
//! input. Layer kinds cover fully-connected maps, element-wise
//! activations (sign, threshold, sigmoid, ReLU, softmax), a single-filter
//! convolution, and non-overlapping max/average pooling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matrix::Matrix;
use super::LearnerError;
use crate::metric::{MetricPoint, SpaceDescriptor, SpaceKind};

/// Element-wise activation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    /// sign(x) with sign(0) = 0.
    Sign,
    /// 1 when x > 0, else 0.
    Threshold,
    /// 1 / (1 + e^(-x)).
    Sigmoid,
    /// max(x, 0).
    Relu,
    /// Normalised exponentials over the whole input.
    Softmax,
}

/// Scalar activation. Softmax degenerates to 1 on a single value.
pub fn activation(kind: ActivationKind, x: f64) -> f64 {
    match kind {
        ActivationKind::Sign => {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        ActivationKind::Threshold => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        ActivationKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        ActivationKind::Relu => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
        ActivationKind::Softmax => 1.0,
    }
}

/// Per-coordinate max(x, 0).
pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| activation(ActivationKind::Relu, v))
        .collect()
}

/// `softmax(x)_i = e^(x_i) / Σ_j e^(x_j)`, computed with max subtraction
/// so large inputs cannot overflow.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Shape of a value flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn flat_len(&self) -> usize {
        match self {
            Shape::Vector(n) => *n,
            Shape::Matrix(n, m) => n * m,
        }
    }
}

/// A vector or matrix value flowing through the network.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Vector(Vec<f64>),
    Matrix(Matrix),
}

impl Value {
    pub fn shape(&self) -> Shape {
        match self {
            Value::Vector(v) => Shape::Vector(v.len()),
            Value::Matrix(m) => Shape::Matrix(m.rows(), m.cols()),
        }
    }

    /// Row-major view of the entries.
    pub fn flat(&self) -> &[f64] {
        match self {
            Value::Vector(v) => v,
            Value::Matrix(m) => m.data(),
        }
    }

    pub fn from_flat(shape: Shape, data: Vec<f64>) -> Value {
        debug_assert_eq!(shape.flat_len(), data.len());
        match shape {
            Shape::Vector(_) => Value::Vector(data),
            Shape::Matrix(n, m) => Value::Matrix(Matrix::from_flat(n, m, data)),
        }
    }
}

/// One step of a network.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// y = W x + b with W of shape (output × input). Matrix inputs are
    /// consumed flattened row-major.
    Linear {
        weights: Matrix,
        bias: Vec<f64>,
    },
    Activation(ActivationKind),
    /// Single-filter convolution preserving the input shape, zero padded.
    Conv2D {
        filter: Matrix,
    },
    /// Non-overlapping window maximum; trailing partial windows drop.
    MaxPool2D {
        rows: usize,
        cols: usize,
    },
    /// Non-overlapping window mean; trailing partial windows drop.
    AvgPool2D {
        rows: usize,
        cols: usize,
    },
}

impl Layer {
    pub fn linear(weights: Matrix, bias: Vec<f64>) -> Layer {
        assert_eq!(weights.rows(), bias.len(), "bias length must match rows");
        Layer::Linear { weights, bias }
    }

    /// Shape this layer produces for the given input shape.
    pub fn output_shape(&self, input: Shape) -> Result<Shape, LearnerError> {
        match self {
            Layer::Linear { weights, .. } => {
                if input.flat_len() != weights.cols() {
                    return Err(LearnerError::DimensionMismatch {
                        expected: weights.cols(),
                        got: input.flat_len(),
                    });
                }
                Ok(Shape::Vector(weights.rows()))
            }
            Layer::Activation(_) => Ok(input),
            Layer::Conv2D { filter } => match input {
                Shape::Matrix(n, m) => {
                    check_window(filter.rows(), filter.cols(), n, m)?;
                    Ok(Shape::Matrix(n, m))
                }
                Shape::Vector(_) => Err(LearnerError::ExpectedMatrixInput),
            },
            Layer::MaxPool2D { rows, cols } | Layer::AvgPool2D { rows, cols } => match input {
                Shape::Matrix(n, m) => {
                    check_window(*rows, *cols, n, m)?;
                    Ok(Shape::Matrix(n / rows, m / cols))
                }
                Shape::Vector(_) => Err(LearnerError::ExpectedMatrixInput),
            },
        }
    }

    fn weights_finite(&self) -> bool {
        match self {
            Layer::Linear { weights, bias } => {
                weights.data().iter().chain(bias).all(|w| w.is_finite())
            }
            Layer::Conv2D { filter } => filter.data().iter().all(|w| w.is_finite()),
            _ => true,
        }
    }
}

fn check_window(k: usize, l: usize, n: usize, m: usize) -> Result<(), LearnerError> {
    assert!(k > 0 && l > 0, "window dimensions must be positive");
    if k > n || l > m {
        return Err(LearnerError::WindowTooLarge {
            window: (k, l),
            input: (n, m),
        });
    }
    Ok(())
}

/// Convolution of a k×ℓ filter with an n×m input, output n×m.
///
/// Output entry (i, j) sums `F[u, v] · X[i − u − 1, j − v − 1]` over the
/// window, dropping terms whose index falls outside the input (zero
/// padding). The offset of one reproduces the 1-based indexing of the
/// defining formula, so a 1×1 unit filter shifts the input down and right
/// by one cell.
pub fn conv2d(filter: &Matrix, input: &Matrix) -> Result<Matrix, LearnerError> {
    let (k, l) = (filter.rows(), filter.cols());
    let (n, m) = (input.rows(), input.cols());
    check_window(k, l, n, m)?;
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let mut acc = 0.0;
            for u in 0..k.min(i) {
                for v in 0..l.min(j) {
                    acc += filter.get(u, v) * input.get(i - u - 1, j - v - 1);
                }
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Maximum over non-overlapping k×ℓ windows (stride equals the window).
pub fn maxpool2d(
    window_rows: usize,
    window_cols: usize,
    input: &Matrix,
) -> Result<Matrix, LearnerError> {
    let (n, m) = (input.rows(), input.cols());
    check_window(window_rows, window_cols, n, m)?;
    let (out_rows, out_cols) = (n / window_rows, m / window_cols);
    let mut out = Matrix::zeros(out_rows, out_cols);
    for i in 0..out_rows {
        for j in 0..out_cols {
            let mut best = f64::NEG_INFINITY;
            for u in 0..window_rows {
                for v in 0..window_cols {
                    best = best.max(input.get(i * window_rows + u, j * window_cols + v));
                }
            }
            out.set(i, j, best);
        }
    }
    Ok(out)
}

/// Mean over non-overlapping k×ℓ windows (stride equals the window).
pub fn avgpool2d(
    window_rows: usize,
    window_cols: usize,
    input: &Matrix,
) -> Result<Matrix, LearnerError> {
    let (n, m) = (input.rows(), input.cols());
    check_window(window_rows, window_cols, n, m)?;
    let (out_rows, out_cols) = (n / window_rows, m / window_cols);
    let scale = 1.0 / (window_rows * window_cols) as f64;
    let mut out = Matrix::zeros(out_rows, out_cols);
    for i in 0..out_rows {
        for j in 0..out_cols {
            let mut sum = 0.0;
            for u in 0..window_rows {
                for v in 0..window_cols {
                    sum += input.get(i * window_rows + u, j * window_cols + v);
                }
            }
            out.set(i, j, sum * scale);
        }
    }
    Ok(out)
}

pub(crate) fn apply_layer(layer: &Layer, input: &Value) -> Result<Value, LearnerError> {
    match layer {
        Layer::Linear { weights, bias } => {
            let x = input.flat();
            if x.len() != weights.cols() {
                return Err(LearnerError::DimensionMismatch {
                    expected: weights.cols(),
                    got: x.len(),
                });
            }
            let mut y = weights.matvec(x);
            for (v, b) in y.iter_mut().zip(bias) {
                *v += b;
            }
            Ok(Value::Vector(y))
        }
        Layer::Activation(ActivationKind::Softmax) => {
            Ok(Value::from_flat(input.shape(), softmax(input.flat())))
        }
        Layer::Activation(kind) => Ok(Value::from_flat(
            input.shape(),
            input.flat().iter().map(|&v| activation(*kind, v)).collect(),
        )),
        Layer::Conv2D { filter } => match input {
            Value::Matrix(x) => Ok(Value::Matrix(conv2d(filter, x)?)),
            Value::Vector(_) => Err(LearnerError::ExpectedMatrixInput),
        },
        Layer::MaxPool2D { rows, cols } => match input {
            Value::Matrix(x) => Ok(Value::Matrix(maxpool2d(*rows, *cols, x)?)),
            Value::Vector(_) => Err(LearnerError::ExpectedMatrixInput),
        },
        Layer::AvgPool2D { rows, cols } => match input {
            Value::Matrix(x) => Ok(Value::Matrix(avgpool2d(*rows, *cols, x)?)),
            Value::Vector(_) => Err(LearnerError::ExpectedMatrixInput),
        },
    }
}

/// Layered feedforward model; the embedding map of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNetwork {
    layers: Vec<Layer>,
    input_shape: Shape,
    output_dim: usize,
    seed: u64,
}

impl NeuralNetwork {
    /// Builds a network, validating that consecutive layer shapes chain
    /// and all weights are finite.
    pub fn new(input_shape: Shape, layers: Vec<Layer>, seed: u64) -> Result<Self, LearnerError> {
        let mut shape = input_shape;
        for layer in &layers {
            if !layer.weights_finite() {
                return Err(LearnerError::NonFiniteWeights);
            }
            shape = layer.output_shape(shape)?;
        }
        Ok(NeuralNetwork {
            layers,
            input_shape,
            output_dim: shape.flat_len(),
            seed,
        })
    }

    /// Fully-connected network over `dims` (input first). Hidden layers
    /// use `hidden_activation`; `softmax_output` appends a softmax head.
    ///
    /// Weights are drawn uniformly from [−1/√fan_in, +1/√fan_in] by the
    /// seeded generator; biases start at zero.
    pub fn mlp(
        dims: &[usize],
        hidden_activation: ActivationKind,
        softmax_output: bool,
        seed: u64,
    ) -> NeuralNetwork {
        assert!(dims.len() >= 2, "an MLP needs input and output dimensions");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for (idx, pair) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut weights = Matrix::zeros(fan_out, fan_in);
            for w in weights.data_mut() {
                *w = rng.random_range(-bound..=bound);
            }
            layers.push(Layer::Linear {
                weights,
                bias: vec![0.0; fan_out],
            });
            if idx + 2 < dims.len() {
                layers.push(Layer::Activation(hidden_activation));
            }
        }
        if softmax_output {
            layers.push(Layer::Activation(ActivationKind::Softmax));
        }
        NeuralNetwork::new(Shape::Vector(dims[0]), layers, seed)
            .expect("generated layers chain by construction")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn input_dim(&self) -> usize {
        self.input_shape.flat_len()
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Applies every layer in order and returns the flattened output.
    pub fn forward(&self, input: &Value) -> Result<Vec<f64>, LearnerError> {
        let (_, output) = self.forward_trace(input)?;
        Ok(output.flat().to_vec())
    }

    /// Forward pass that keeps each layer's input, for backpropagation.
    /// Returns (per-layer inputs, final output).
    pub(crate) fn forward_trace(&self, input: &Value) -> Result<(Vec<Value>, Value), LearnerError> {
        if input.shape() != self.input_shape {
            return Err(LearnerError::DimensionMismatch {
                expected: self.input_shape.flat_len(),
                got: input.shape().flat_len(),
            });
        }
        if input.flat().iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::NonFiniteActivation { layer: 0 });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut current = input.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            let next = apply_layer(layer, &current)?;
            if next.flat().iter().any(|v| !v.is_finite()) {
                return Err(LearnerError::NonFiniteActivation { layer: idx });
            }
            inputs.push(current);
            current = next;
        }
        Ok((inputs, current))
    }

    /// Number of layers without a trailing softmax head.
    pub(crate) fn embedding_layer_count(&self) -> usize {
        match self.layers.last() {
            Some(Layer::Activation(ActivationKind::Softmax)) => self.layers.len() - 1,
            _ => self.layers.len(),
        }
    }
}

/// Maps a raw input into the system's metric space.
///
/// Runs the forward pass with any trailing softmax head stripped, keeping
/// the penultimate representation. Hamming spaces binarise each coordinate
/// with the threshold function at zero; the real-vector spaces take the
/// representation as is.
pub fn embed(
    net: &NeuralNetwork,
    input: &[f64],
    space: &SpaceDescriptor,
) -> Result<MetricPoint, LearnerError> {
    if net.output_dim() != space.dimension {
        return Err(LearnerError::DimensionMismatch {
            expected: space.dimension,
            got: net.output_dim(),
        });
    }
    let value = Value::Vector(input.to_vec());
    if value.shape() != net.input_shape() {
        return Err(LearnerError::DimensionMismatch {
            expected: net.input_dim(),
            got: input.len(),
        });
    }
    let mut current = value;
    for (idx, layer) in net.layers()[..net.embedding_layer_count()]
        .iter()
        .enumerate()
    {
        current = apply_layer(layer, &current)?;
        if current.flat().iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::NonFiniteActivation { layer: idx });
        }
    }
    let representation = current.flat();
    match space.kind {
        SpaceKind::Hamming => Ok(MetricPoint::BitString(
            representation.iter().map(|&v| v > 0.0).collect(),
        )),
        SpaceKind::Euclidean | SpaceKind::Chebyshev | SpaceKind::CosineSimilarity => {
            Ok(MetricPoint::RealVector(representation.to_vec()))
        }
        SpaceKind::Levenshtein => Err(LearnerError::UnsupportedEmbeddingSpace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_identity_linear() {
        let net = NeuralNetwork::new(
            Shape::Vector(2),
            vec![Layer::linear(Matrix::identity(2), vec![0.0, 0.0])],
            0,
        )
        .unwrap();
        assert_eq!(
            net.forward(&Value::Vector(vec![3.0, -1.0])).unwrap(),
            vec![3.0, -1.0]
        );
    }

    #[test]
    fn forward_sigmoid_of_zero_sum() {
        let net = NeuralNetwork::new(
            Shape::Vector(2),
            vec![
                Layer::linear(Matrix::from_rows(vec![vec![1.0, 1.0]]), vec![0.0]),
                Layer::Activation(ActivationKind::Sigmoid),
            ],
            0,
        )
        .unwrap();
        assert_eq!(
            net.forward(&Value::Vector(vec![0.0, 0.0])).unwrap(),
            vec![0.5]
        );
    }

    #[test]
    fn forward_linear_then_relu_clamps() {
        // 2 * (-3) + 1 = -5, clamped to 0
        let net = NeuralNetwork::new(
            Shape::Vector(1),
            vec![
                Layer::linear(Matrix::from_rows(vec![vec![2.0]]), vec![1.0]),
                Layer::Activation(ActivationKind::Relu),
            ],
            0,
        )
        .unwrap();
        assert_eq!(net.forward(&Value::Vector(vec![-3.0])).unwrap(), vec![0.0]);
    }

    #[test]
    fn forward_is_deterministic() {
        let net = NeuralNetwork::mlp(&[3, 5, 2], ActivationKind::Relu, true, 11);
        let x = Value::Vector(vec![0.25, -1.5, 2.0]);
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn relu_cases() {
        assert_eq!(relu(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(relu(&[-1.0, 2.0]), vec![0.0, 2.0]);
        let out = relu(&[-0.0]);
        assert_eq!(out[0].to_bits(), 0.0_f64.to_bits());
    }

    #[test]
    fn softmax_cases() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        for v in softmax(&[7.5, 7.5, 7.5]) {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        // direct scalar evaluation: e / (1 + e)
        let s = softmax(&[1.0, 2.0]);
        assert!((s[0] - 0.26894).abs() < 1e-4);
        assert!((s[1] - 0.73106).abs() < 1e-4);
    }

    #[test]
    fn softmax_shift_invariance_and_normalisation() {
        let x = [0.2, -1.0, 3.5, 0.0];
        let shifted: Vec<f64> = x.iter().map(|v| v + 123.0).collect();
        let a = softmax(&x);
        let b = softmax(&shifted);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-9);
            assert!(*p >= 0.0 && *p <= 1.0);
        }
        // huge inputs stay finite thanks to max subtraction
        let big = softmax(&[1e306, 1e306 / 2.0]);
        assert!(big.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn scalar_activations() {
        assert_eq!(activation(ActivationKind::Sigmoid, 0.0), 0.5);
        assert_eq!(activation(ActivationKind::Threshold, 0.0), 0.0);
        assert_eq!(activation(ActivationKind::Threshold, 1e-12), 1.0);
        assert_eq!(activation(ActivationKind::Sign, -7.0), -1.0);
        assert_eq!(activation(ActivationKind::Sign, 0.0), 0.0);
        assert_eq!(activation(ActivationKind::Sign, 3.0), 1.0);
    }

    #[test]
    fn conv_single_tap_shifts() {
        let x = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let y = conv2d(&Matrix::from_rows(vec![vec![1.0]]), &x).unwrap();
        // Y[i, j] = X[i-1, j-1] under the formula's 1-based indices
        assert_eq!(y.data(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn conv_null_filter_zeroes() {
        let x = Matrix::from_rows(vec![vec![5.0, -1.0], vec![2.5, 9.0]]);
        let y = conv2d(&Matrix::from_rows(vec![vec![0.0, 0.0], vec![0.0, 0.0]]), &x).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_matches_brute_force_oracle() {
        let f = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let x = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        // brute-force double loop over (u, v) with explicit bounds checks,
        // 1-based indices transliterated directly
        let mut expected = Matrix::zeros(2, 2);
        for i in 1..=2_i64 {
            for j in 1..=2_i64 {
                let mut acc = 0.0;
                for u in 1..=2_i64 {
                    for v in 1..=2_i64 {
                        let (p, q) = (i - u, j - v);
                        if (1..=2).contains(&p) && (1..=2).contains(&q) {
                            acc += f.get((u - 1) as usize, (v - 1) as usize)
                                * x.get((p - 1) as usize, (q - 1) as usize);
                        }
                    }
                }
                expected.set((i - 1) as usize, (j - 1) as usize, acc);
            }
        }
        assert_eq!(conv2d(&f, &x).unwrap(), expected);
    }

    #[test]
    fn conv_rejects_oversized_window() {
        let x = Matrix::from_rows(vec![vec![1.0, 2.0]]);
        let f = Matrix::from_rows(vec![vec![1.0], vec![1.0]]);
        assert!(matches!(
            conv2d(&f, &x),
            Err(LearnerError::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn pooling_1x1_is_identity() {
        let x = Matrix::from_rows(vec![vec![1.0, -2.0], vec![0.5, 4.0]]);
        assert_eq!(maxpool2d(1, 1, &x).unwrap(), x);
        assert_eq!(avgpool2d(1, 1, &x).unwrap(), x);
    }

    #[test]
    fn pooling_2x2_single_window() {
        let x = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(maxpool2d(2, 2, &x).unwrap().data(), &[4.0]);
        assert_eq!(avgpool2d(2, 2, &x).unwrap().data(), &[2.5]);
    }

    #[test]
    fn pooling_drops_trailing_partial_windows() {
        let x = Matrix::from_rows(vec![
            vec![1.0, 2.0, 9.0],
            vec![3.0, 4.0, 9.0],
            vec![9.0, 9.0, 9.0],
        ]);
        let pooled = maxpool2d(2, 2, &x).unwrap();
        assert_eq!(pooled.rows(), 1);
        assert_eq!(pooled.cols(), 1);
        assert_eq!(pooled.data(), &[4.0]);
    }

    #[test]
    fn avgpool_stays_within_input_range() {
        let x = Matrix::from_rows(vec![vec![-3.0, 2.0], vec![0.5, 4.0], vec![7.0, 1.0]]);
        let pooled = avgpool2d(3, 1, &x).unwrap();
        let (lo, hi) = (-3.0, 7.0);
        assert!(pooled.data().iter().all(|&v| v >= lo && v <= hi));
    }

    #[test]
    fn network_rejects_mismatched_chain() {
        let result = NeuralNetwork::new(
            Shape::Vector(2),
            vec![
                Layer::linear(Matrix::zeros(3, 2), vec![0.0; 3]),
                Layer::linear(Matrix::zeros(1, 4), vec![0.0]),
            ],
            0,
        );
        assert!(matches!(
            result,
            Err(LearnerError::DimensionMismatch {
                expected: 4,
                got: 3
            })
        ));
    }

    #[test]
    fn network_rejects_non_finite_weights() {
        let result = NeuralNetwork::new(
            Shape::Vector(1),
            vec![Layer::linear(
                Matrix::from_rows(vec![vec![f64::NAN]]),
                vec![0.0],
            )],
            0,
        );
        assert!(matches!(result, Err(LearnerError::NonFiniteWeights)));
    }

    #[test]
    fn forward_rejects_wrong_input_dimension() {
        let net = NeuralNetwork::mlp(&[3, 2], ActivationKind::Relu, false, 1);
        assert!(matches!(
            net.forward(&Value::Vector(vec![1.0, 2.0])),
            Err(LearnerError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn embed_identity_net_returns_input() {
        let net = NeuralNetwork::new(
            Shape::Vector(3),
            vec![Layer::linear(Matrix::identity(3), vec![0.0; 3])],
            0,
        )
        .unwrap();
        let space = SpaceDescriptor::new(SpaceKind::Euclidean, 3);
        let p = embed(&net, &[0.5, -1.0, 2.0], &space).unwrap();
        assert_eq!(p, MetricPoint::RealVector(vec![0.5, -1.0, 2.0]));
    }

    #[test]
    fn embed_is_deterministic_and_strips_softmax() {
        let net = NeuralNetwork::mlp(&[4, 6, 3], ActivationKind::Relu, true, 7);
        let space = SpaceDescriptor::new(SpaceKind::Euclidean, 3);
        let x = [1.0, -0.5, 0.25, 2.0];
        let a = embed(&net, &x, &space).unwrap();
        let b = embed(&net, &x, &space).unwrap();
        assert_eq!(a, b);
        // stripped embedding differs from the softmax output
        let full = net.forward(&Value::Vector(x.to_vec())).unwrap();
        if let MetricPoint::RealVector(v) = &a {
            assert_ne!(v, &full);
        } else {
            panic!("expected a real vector");
        }
    }

    #[test]
    fn embed_binarises_for_hamming_spaces() {
        let net = NeuralNetwork::new(
            Shape::Vector(3),
            vec![Layer::linear(Matrix::identity(3), vec![0.0; 3])],
            0,
        )
        .unwrap();
        let space = SpaceDescriptor::new(SpaceKind::Hamming, 3);
        let p = embed(&net, &[0.5, -1.0, 0.0], &space).unwrap();
        assert_eq!(p, MetricPoint::BitString(vec![true, false, false]));
    }
}
