//! Empirical-risk training: loss functions, backpropagation, and the
//! full-batch gradient-descent loop.

use super::matrix::Matrix;
use super::net::{activation, softmax, ActivationKind, Layer, NeuralNetwork, Value};
use super::LearnerError;

/// Training aborts once the epoch loss exceeds this bound.
const DIVERGENCE_LIMIT: f64 = 1e12;

/// Floor applied to predicted probabilities inside the cross-entropy
/// value and gradient.
const PROBABILITY_FLOOR: f64 = 1e-12;

/// One training example: an input value and its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub input: Value,
    pub label: usize,
}

impl LabeledSample {
    pub fn new(input: Vec<f64>, label: usize) -> Self {
        LabeledSample {
            input: Value::Vector(input),
            label,
        }
    }
}

/// Loss functions. `ZeroOne` is evaluation-only and cannot be
/// differentiated for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    SquaredError,
    CrossEntropy,
    ZeroOne,
}

impl Loss {
    pub fn is_differentiable(self) -> bool {
        !matches!(self, Loss::ZeroOne)
    }

    /// Target vector comparisons: one-output networks regress directly on
    /// the label value, wider networks compare against a one-hot target.
    fn value(self, output: &[f64], label: usize) -> f64 {
        match self {
            Loss::SquaredError => {
                if output.len() == 1 {
                    let d = output[0] - label as f64;
                    d * d
                } else {
                    output
                        .iter()
                        .enumerate()
                        .map(|(i, &o)| {
                            let t = if i == label { 1.0 } else { 0.0 };
                            (o - t) * (o - t)
                        })
                        .sum()
                }
            }
            Loss::CrossEntropy => -output[label].max(PROBABILITY_FLOOR).ln(),
            Loss::ZeroOne => {
                if argmax_lowest(output) == label {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    fn gradient(self, output: &[f64], label: usize) -> Option<Vec<f64>> {
        match self {
            Loss::SquaredError => {
                if output.len() == 1 {
                    Some(vec![2.0 * (output[0] - label as f64)])
                } else {
                    Some(
                        output
                            .iter()
                            .enumerate()
                            .map(|(i, &o)| {
                                let t = if i == label { 1.0 } else { 0.0 };
                                2.0 * (o - t)
                            })
                            .collect(),
                    )
                }
            }
            Loss::CrossEntropy => {
                let mut g = vec![0.0; output.len()];
                g[label] = -1.0 / output[label].max(PROBABILITY_FLOOR);
                Some(g)
            }
            Loss::ZeroOne => None,
        }
    }
}

/// Full-batch gradient-descent configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub loss: Loss,
    /// Seed used when the initial weights are drawn; the descent itself
    /// is deterministic.
    pub seed: u64,
}

/// Gradient of the mean batch loss for one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerGradient {
    Linear {
        weights: Matrix,
        bias: Vec<f64>,
    },
    Conv2D {
        filter: Matrix,
    },
    /// Activation and pooling layers carry no parameters.
    None,
}

/// Gradients aligned with a network's layer list.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layers: Vec<LayerGradient>,
}

impl Gradients {
    /// Builds a gradient structure directly; layer kinds and shapes must
    /// match the network they will be applied to.
    pub fn new(layers: Vec<LayerGradient>) -> Gradients {
        Gradients { layers }
    }

    fn zeros_like(net: &NeuralNetwork) -> Gradients {
        let layers = net
            .layers()
            .iter()
            .map(|layer| match layer {
                Layer::Linear { weights, bias } => LayerGradient::Linear {
                    weights: Matrix::zeros(weights.rows(), weights.cols()),
                    bias: vec![0.0; bias.len()],
                },
                Layer::Conv2D { filter } => LayerGradient::Conv2D {
                    filter: Matrix::zeros(filter.rows(), filter.cols()),
                },
                _ => LayerGradient::None,
            })
            .collect();
        Gradients { layers }
    }

    pub fn layers(&self) -> &[LayerGradient] {
        &self.layers
    }

    fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            match layer {
                LayerGradient::Linear { weights, bias } => {
                    for w in weights.data_mut() {
                        *w *= factor;
                    }
                    for b in bias {
                        *b *= factor;
                    }
                }
                LayerGradient::Conv2D { filter } => {
                    for w in filter.data_mut() {
                        *w *= factor;
                    }
                }
                LayerGradient::None => {}
            }
        }
    }

    fn is_finite(&self) -> bool {
        self.layers.iter().all(|layer| match layer {
            LayerGradient::Linear { weights, bias } => {
                weights.data().iter().chain(bias).all(|v| v.is_finite())
            }
            LayerGradient::Conv2D { filter } => filter.data().iter().all(|v| v.is_finite()),
            LayerGradient::None => true,
        })
    }
}

/// Index of the largest entry; ties resolve to the lowest index.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Gradient of the loss with respect to one layer's input and parameters,
/// given the gradient with respect to its output.
fn backward_layer(
    layer: &Layer,
    input: &Value,
    upstream: &[f64],
    grad: &mut LayerGradient,
) -> Vec<f64> {
    match (layer, grad) {
        (
            Layer::Linear { weights, .. },
            LayerGradient::Linear {
                weights: gw,
                bias: gb,
            },
        ) => {
            let x = input.flat();
            for (r, &dy) in upstream.iter().enumerate() {
                gb[r] += dy;
                for (c, &xv) in x.iter().enumerate() {
                    gw.add_at(r, c, dy * xv);
                }
            }
            weights.matvec_transposed(upstream)
        }
        (Layer::Activation(kind), LayerGradient::None) => match kind {
            ActivationKind::Sigmoid => input
                .flat()
                .iter()
                .zip(upstream)
                .map(|(&x, &dy)| {
                    let s = activation(ActivationKind::Sigmoid, x);
                    dy * s * (1.0 - s)
                })
                .collect(),
            ActivationKind::Relu => input
                .flat()
                .iter()
                .zip(upstream)
                .map(|(&x, &dy)| if x > 0.0 { dy } else { 0.0 })
                .collect(),
            // piecewise-constant activations have zero derivative almost
            // everywhere
            ActivationKind::Sign | ActivationKind::Threshold => vec![0.0; upstream.len()],
            ActivationKind::Softmax => {
                let s = softmax(input.flat());
                let dot: f64 = upstream.iter().zip(&s).map(|(dy, si)| dy * si).sum();
                s.iter()
                    .zip(upstream)
                    .map(|(&si, &dy)| si * (dy - dot))
                    .collect()
            }
        },
        (Layer::Conv2D { filter }, LayerGradient::Conv2D { filter: gf }) => {
            let x = match input {
                Value::Matrix(m) => m,
                Value::Vector(_) => unreachable!("validated during the forward pass"),
            };
            let (n, m) = (x.rows(), x.cols());
            let (k, l) = (filter.rows(), filter.cols());
            let mut dx = Matrix::zeros(n, m);
            for i in 0..n {
                for j in 0..m {
                    let dy = upstream[i * m + j];
                    if dy == 0.0 {
                        continue;
                    }
                    for u in 0..k.min(i) {
                        for v in 0..l.min(j) {
                            gf.add_at(u, v, dy * x.get(i - u - 1, j - v - 1));
                            dx.add_at(i - u - 1, j - v - 1, dy * filter.get(u, v));
                        }
                    }
                }
            }
            dx.data().to_vec()
        }
        (Layer::MaxPool2D { rows, cols }, LayerGradient::None) => {
            let x = match input {
                Value::Matrix(m) => m,
                Value::Vector(_) => unreachable!("validated during the forward pass"),
            };
            let (n, m) = (x.rows(), x.cols());
            let (out_rows, out_cols) = (n / rows, m / cols);
            let mut dx = vec![0.0; n * m];
            for i in 0..out_rows {
                for j in 0..out_cols {
                    // route the gradient to the first position attaining
                    // the window maximum
                    let (mut br, mut bc) = (i * rows, j * cols);
                    for u in 0..*rows {
                        for v in 0..*cols {
                            let (r, c) = (i * rows + u, j * cols + v);
                            if x.get(r, c) > x.get(br, bc) {
                                br = r;
                                bc = c;
                            }
                        }
                    }
                    dx[br * m + bc] += upstream[i * out_cols + j];
                }
            }
            dx
        }
        (Layer::AvgPool2D { rows, cols }, LayerGradient::None) => {
            let x = match input {
                Value::Matrix(m) => m,
                Value::Vector(_) => unreachable!("validated during the forward pass"),
            };
            let (n, m) = (x.rows(), x.cols());
            let (out_rows, out_cols) = (n / rows, m / cols);
            let scale = 1.0 / (rows * cols) as f64;
            let mut dx = vec![0.0; n * m];
            for i in 0..out_rows {
                for j in 0..out_cols {
                    let dy = upstream[i * out_cols + j] * scale;
                    for u in 0..*rows {
                        for v in 0..*cols {
                            dx[(i * rows + u) * m + (j * cols + v)] += dy;
                        }
                    }
                }
            }
            dx
        }
        _ => unreachable!("gradient structure is built from the same layer list"),
    }
}

fn validate_labels(
    net: &NeuralNetwork,
    batch: &[LabeledSample],
    loss: Loss,
) -> Result<(), LearnerError> {
    // one-output squared error regresses on the raw label value
    if loss == Loss::SquaredError && net.output_dim() == 1 {
        return Ok(());
    }
    for sample in batch {
        if sample.label >= net.output_dim() {
            return Err(LearnerError::LabelOutOfRange {
                label: sample.label,
                classes: net.output_dim(),
            });
        }
    }
    Ok(())
}

fn backprop_with_loss(
    net: &NeuralNetwork,
    batch: &[LabeledSample],
    loss: Loss,
) -> Result<(Gradients, f64), LearnerError> {
    if batch.is_empty() {
        return Err(LearnerError::EmptyDataset);
    }
    if !loss.is_differentiable() {
        return Err(LearnerError::NonDifferentiableLoss);
    }
    validate_labels(net, batch, loss)?;
    let mut grads = Gradients::zeros_like(net);
    let mut total_loss = 0.0;
    for sample in batch {
        let (inputs, output) = net.forward_trace(&sample.input)?;
        let output = output.flat();
        total_loss += loss.value(output, sample.label);
        let mut upstream = loss
            .gradient(output, sample.label)
            .expect("loss checked differentiable");
        for (idx, layer) in net.layers().iter().enumerate().rev() {
            upstream = backward_layer(layer, &inputs[idx], &upstream, &mut grads.layers[idx]);
        }
    }
    let scale = 1.0 / batch.len() as f64;
    grads.scale(scale);
    if !grads.is_finite() {
        return Err(LearnerError::NonFiniteGradient);
    }
    Ok((grads, total_loss * scale))
}

/// Gradient of the mean batch loss with respect to every weight and bias.
pub fn backprop_gradients(
    net: &NeuralNetwork,
    batch: &[LabeledSample],
    loss: Loss,
) -> Result<Gradients, LearnerError> {
    backprop_with_loss(net, batch, loss).map(|(g, _)| g)
}

/// Mean loss of the network over a batch.
pub fn batch_loss(
    net: &NeuralNetwork,
    batch: &[LabeledSample],
    loss: Loss,
) -> Result<f64, LearnerError> {
    if batch.is_empty() {
        return Err(LearnerError::EmptyDataset);
    }
    validate_labels(net, batch, loss)?;
    let mut total = 0.0;
    for sample in batch {
        let output = net.forward(&sample.input)?;
        total += loss.value(&output, sample.label);
    }
    Ok(total / batch.len() as f64)
}

/// One descent update `w ← w − α·g` over every parameter.
pub fn gradient_descent_step(
    net: &NeuralNetwork,
    grads: &Gradients,
    learning_rate: f64,
) -> Result<NeuralNetwork, LearnerError> {
    if grads.layers.len() != net.layers().len() {
        return Err(LearnerError::ShapeMismatch);
    }
    let mut layers = Vec::with_capacity(net.layers().len());
    for (layer, grad) in net.layers().iter().zip(&grads.layers) {
        let updated = match (layer, grad) {
            (
                Layer::Linear { weights, bias },
                LayerGradient::Linear {
                    weights: gw,
                    bias: gb,
                },
            ) => {
                if !weights.same_shape(gw) || bias.len() != gb.len() {
                    return Err(LearnerError::ShapeMismatch);
                }
                let mut new_weights = weights.clone();
                for (w, g) in new_weights.data_mut().iter_mut().zip(gw.data()) {
                    *w -= learning_rate * g;
                }
                let new_bias = bias
                    .iter()
                    .zip(gb)
                    .map(|(b, g)| b - learning_rate * g)
                    .collect();
                Layer::Linear {
                    weights: new_weights,
                    bias: new_bias,
                }
            }
            (Layer::Conv2D { filter }, LayerGradient::Conv2D { filter: gf }) => {
                if !filter.same_shape(gf) {
                    return Err(LearnerError::ShapeMismatch);
                }
                let mut new_filter = filter.clone();
                for (w, g) in new_filter.data_mut().iter_mut().zip(gf.data()) {
                    *w -= learning_rate * g;
                }
                Layer::Conv2D { filter: new_filter }
            }
            (other, LayerGradient::None)
                if !matches!(other, Layer::Linear { .. } | Layer::Conv2D { .. }) =>
            {
                other.clone()
            }
            _ => return Err(LearnerError::ShapeMismatch),
        };
        layers.push(updated);
    }
    NeuralNetwork::new(net.input_shape(), layers, net.seed())
}

/// A trained network together with the loss observed at each epoch.
#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub network: NeuralNetwork,
    /// Mean batch loss measured before each epoch's update.
    pub epoch_losses: Vec<f64>,
}

/// Full-batch gradient descent minimising the empirical risk.
///
/// Deterministic for fixed inputs; aborts with
/// [`LearnerError::DivergenceDetected`] when the loss leaves the finite
/// range.
pub fn train(
    net: &NeuralNetwork,
    data: &[LabeledSample],
    cfg: &TrainingConfig,
) -> Result<TrainingOutcome, LearnerError> {
    if data.is_empty() {
        return Err(LearnerError::EmptyDataset);
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(LearnerError::InvalidConfig(
            "learning rate must be positive and finite".into(),
        ));
    }
    if cfg.epochs == 0 {
        return Err(LearnerError::InvalidConfig(
            "epochs must be positive".into(),
        ));
    }
    if !cfg.loss.is_differentiable() {
        return Err(LearnerError::NonDifferentiableLoss);
    }
    let mut current = net.clone();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (grads, loss) = backprop_with_loss(&current, data, cfg.loss)?;
        if !loss.is_finite() || loss > DIVERGENCE_LIMIT {
            return Err(LearnerError::DivergenceDetected { epoch, loss });
        }
        epoch_losses.push(loss);
        current = gradient_descent_step(&current, &grads, cfg.learning_rate)?;
    }
    Ok(TrainingOutcome {
        network: current,
        epoch_losses,
    })
}

/// Fraction of samples whose predicted class (argmax of the network
/// output, ties to the lowest index) differs from the label.
pub fn empirical_error(net: &NeuralNetwork, data: &[LabeledSample]) -> Result<f64, LearnerError> {
    if data.is_empty() {
        return Err(LearnerError::EmptyDataset);
    }
    let mut wrong = 0_usize;
    for sample in data {
        let output = net.forward(&sample.input)?;
        if argmax_lowest(&output) != sample.label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / data.len() as f64)
}
