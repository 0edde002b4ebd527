//! Dense classifier over a flat parameter vector.
//!
//! The model is a stack of dense layers with a nonlinearity between hidden
//! layers and softmax cross-entropy at the output; an empty hidden list
//! gives plain softmax regression. Parameters live in one flat vector so
//! they can be handed to a transport coordinate by coordinate: for each
//! layer the weight matrix (output-major rows) is followed by its bias
//! vector, and `ModelSpec::param_count` is the total length Q.

#[cfg(not(feature = "std"))]
use crate::math::F64Ext;
use crate::feel::data::Dataset;
use crate::feel::FeelError;
use crate::rng::Gaussian;
use alloc::vec;
use alloc::vec::Vec;

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Relu => x.max(0.0),
            Self::Tanh => {
                // tanh via exp keeps the std/libm backends identical.
                let e2 = (2.0 * x).exp();
                (e2 - 1.0) / (e2 + 1.0)
            }
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Self::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tanh => 1.0 - y * y,
        }
    }
}

/// Architecture descriptor: layer sizes and the hidden nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
    pub activation: Activation,
}

impl ModelSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, classes: usize, activation: Activation) -> Self {
        Self {
            input_dim,
            hidden,
            classes,
            activation,
        }
    }

    /// (fan_in, fan_out) of every dense layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut fan_in = self.input_dim;
        for &h in &self.hidden {
            dims.push((fan_in, h));
            fan_in = h;
        }
        dims.push((fan_in, self.classes));
        dims
    }

    /// Total flat parameter count Q.
    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|&(fan_in, fan_out)| fan_out * (fan_in + 1))
            .sum()
    }

    /// Fresh parameter vector: N(0, scale^2) weights, zero biases.
    pub fn init_params(&self, scale: f64, gaussian: &mut Gaussian) -> Vec<f64> {
        let mut params = vec![0.0; self.param_count()];
        let mut offset = 0;
        for (fan_in, fan_out) in self.layer_dims() {
            for w in params[offset..offset + fan_out * fan_in].iter_mut() {
                *w = scale * gaussian.sample();
            }
            offset += fan_out * (fan_in + 1);
        }
        params
    }

    fn check_params(&self, params: &[f64]) -> Result<(), FeelError> {
        if params.len() != self.param_count() {
            return Err(FeelError::ParamLength {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        Ok(())
    }
}

/// Per-layer view into the flat vector: weights then biases.
struct LayerView<'a> {
    weights: &'a [f64],
    biases: &'a [f64],
    fan_in: usize,
    fan_out: usize,
}

fn layer_views<'a>(spec: &ModelSpec, params: &'a [f64]) -> Vec<LayerView<'a>> {
    let mut views = Vec::new();
    let mut offset = 0;
    for (fan_in, fan_out) in spec.layer_dims() {
        let weights = &params[offset..offset + fan_out * fan_in];
        let biases = &params[offset + fan_out * fan_in..offset + fan_out * (fan_in + 1)];
        views.push(LayerView {
            weights,
            biases,
            fan_in,
            fan_out,
        });
        offset += fan_out * (fan_in + 1);
    }
    views
}

fn dense_forward(view: &LayerView<'_>, input: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for o in 0..view.fan_out {
        let row = &view.weights[o * view.fan_in..(o + 1) * view.fan_in];
        let mut acc = view.biases[o];
        for (w, x) in row.iter().zip(input) {
            acc += w * x;
        }
        out.push(acc);
    }
}

/// Class scores for one feature vector.
pub fn logits(spec: &ModelSpec, params: &[f64], features: &[f64]) -> Result<Vec<f64>, FeelError> {
    spec.check_params(params)?;
    if features.len() != spec.input_dim {
        return Err(FeelError::FeatureLength {
            expected: spec.input_dim,
            got: features.len(),
        });
    }
    let views = layer_views(spec, params);
    let mut current = features.to_vec();
    let mut next = Vec::new();
    let last = views.len() - 1;
    for (i, view) in views.iter().enumerate() {
        dense_forward(view, &current, &mut next);
        if i < last {
            for v in next.iter_mut() {
                *v = spec.activation.apply(*v);
            }
        }
        core::mem::swap(&mut current, &mut next);
    }
    Ok(current)
}

/// Numerically stable log-softmax probabilities in place of logits.
fn log_softmax(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = scores
        .iter()
        .map(|&z| (z - max).exp())
        .sum::<f64>()
        .ln()
        + max;
    for z in scores.iter_mut() {
        *z -= log_sum;
    }
}

/// Mean cross-entropy of the model on a dataset.
pub fn local_loss(spec: &ModelSpec, params: &[f64], data: &Dataset) -> Result<f64, FeelError> {
    spec.check_params(params)?;
    if data.is_empty() {
        return Err(FeelError::EmptyDataset);
    }
    let mut total = 0.0;
    for (features, label) in data.iter() {
        let mut scores = logits(spec, params, features)?;
        log_softmax(&mut scores);
        total -= scores[label];
    }
    Ok(total / data.len() as f64)
}

/// Mean of local losses of one shared model over all device datasets.
pub fn global_loss(
    spec: &ModelSpec,
    params: &[f64],
    datasets: &[Dataset],
) -> Result<f64, FeelError> {
    if datasets.is_empty() {
        return Err(FeelError::EmptyDataset);
    }
    let mut total = 0.0;
    for data in datasets {
        total += local_loss(spec, params, data)?;
    }
    Ok(total / datasets.len() as f64)
}

/// Mean cross-entropy and its gradient over the given sample indices
/// (full batch when `indices` is `None`).
pub fn loss_and_gradient(
    spec: &ModelSpec,
    params: &[f64],
    data: &Dataset,
    indices: Option<&[usize]>,
) -> Result<(f64, Vec<f64>), FeelError> {
    spec.check_params(params)?;
    if data.is_empty() {
        return Err(FeelError::EmptyDataset);
    }
    let views = layer_views(spec, params);
    let layers = views.len();
    let mut grad = vec![0.0; params.len()];
    let count = indices.map_or(data.len(), <[usize]>::len);
    if count == 0 {
        return Err(FeelError::EmptyDataset);
    }
    let mut total_loss = 0.0;

    // Reused per-sample buffers: activations[0] is the input, activations[i]
    // the output of layer i-1 after its nonlinearity.
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(layers + 1);
    for _ in 0..=layers {
        activations.push(Vec::new());
    }
    let mut delta = Vec::new();
    let mut delta_prev = Vec::new();

    for pick in 0..count {
        let sample = indices.map_or(pick, |idx| idx[pick]);
        let (features, label) = data.get(sample).ok_or(FeelError::SampleOutOfRange {
            index: sample,
            len: data.len(),
        })?;
        if features.len() != spec.input_dim {
            return Err(FeelError::FeatureLength {
                expected: spec.input_dim,
                got: features.len(),
            });
        }
        activations[0].clear();
        activations[0].extend_from_slice(features);
        for (i, view) in views.iter().enumerate() {
            let (before, after) = activations.split_at_mut(i + 1);
            dense_forward(view, &before[i], &mut after[0]);
            if i < layers - 1 {
                for v in after[0].iter_mut() {
                    *v = spec.activation.apply(*v);
                }
            }
        }

        // Softmax cross-entropy head: delta = softmax(scores) - onehot.
        let mut scores = activations[layers].clone();
        log_softmax(&mut scores);
        total_loss -= scores[label];
        delta.clear();
        delta.extend(scores.iter().map(|&ls| ls.exp()));
        delta[label] -= 1.0;

        for (i, view) in views.iter().enumerate().rev() {
            let input = &activations[i];
            let offset = layer_offset(spec, i);
            let wgrad = &mut grad[offset..offset + view.fan_out * (view.fan_in + 1)];
            for (row, &d) in wgrad.chunks_exact_mut(view.fan_in).zip(&delta) {
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            let bgrad = &mut wgrad[view.fan_out * view.fan_in..];
            for (g, &d) in bgrad.iter_mut().zip(&delta) {
                *g += d;
            }
            if i > 0 {
                delta_prev.clear();
                delta_prev.resize(view.fan_in, 0.0);
                for (row, &d) in view.weights.chunks_exact(view.fan_in).zip(&delta) {
                    for (dp, w) in delta_prev.iter_mut().zip(row) {
                        *dp += d * w;
                    }
                }
                for (dp, &y) in delta_prev.iter_mut().zip(input.iter()) {
                    *dp *= spec.activation.derivative_from_output(y);
                }
                core::mem::swap(&mut delta, &mut delta_prev);
            }
        }
    }

    let inv = 1.0 / count as f64;
    for g in grad.iter_mut() {
        *g *= inv;
    }
    for (layer, (fan_in, fan_out)) in spec.layer_dims().iter().enumerate() {
        let offset = layer_offset(spec, layer);
        let span = &grad[offset..offset + fan_out * (fan_in + 1)];
        if span.iter().any(|g| !g.is_finite()) {
            return Err(FeelError::NonFiniteGradient { layer });
        }
    }
    Ok((total_loss * inv, grad))
}

fn layer_offset(spec: &ModelSpec, layer: usize) -> usize {
    spec.layer_dims()
        .iter()
        .take(layer)
        .map(|&(fan_in, fan_out)| fan_out * (fan_in + 1))
        .sum()
}

/// One gradient-descent step on the local loss; the input is not modified.
pub fn sgd_step(
    spec: &ModelSpec,
    params: &[f64],
    data: &Dataset,
    learning_rate: f64,
    indices: Option<&[usize]>,
) -> Result<Vec<f64>, FeelError> {
    let (_, grad) = loss_and_gradient(spec, params, data, indices)?;
    Ok(params
        .iter()
        .zip(&grad)
        .map(|(w, g)| w - learning_rate * g)
        .collect())
}

/// Coordinate-wise arithmetic mean of equally long parameter vectors.
pub fn global_average(models: &[Vec<f64>]) -> Result<Vec<f64>, FeelError> {
    let first = models.first().ok_or(FeelError::EmptyDataset)?;
    for m in models {
        if m.len() != first.len() {
            return Err(FeelError::ParamLength {
                expected: first.len(),
                got: m.len(),
            });
        }
    }
    let inv = 1.0 / models.len() as f64;
    let mut out = vec![0.0; first.len()];
    for m in models {
        for (o, &v) in out.iter_mut().zip(m) {
            *o += v;
        }
    }
    for o in out.iter_mut() {
        *o *= inv;
    }
    Ok(out)
}

/// Fraction of argmax-correct predictions on a test set.
pub fn evaluate(spec: &ModelSpec, params: &[f64], data: &Dataset) -> Result<f64, FeelError> {
    spec.check_params(params)?;
    if data.is_empty() {
        return Err(FeelError::EmptyDataset);
    }
    let mut correct = 0usize;
    for (features, label) in data.iter() {
        let scores = logits(spec, params, features)?;
        let mut best = 0usize;
        for (c, &z) in scores.iter().enumerate().skip(1) {
            if z > scores[best] {
                best = c;
            }
        }
        if best == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
