use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NetError;
use crate::scalar::Scalar;

/// Affine map `x ↦ x W + b` with `W` stored as `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Layer<T> {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Layer { weights: Array2::zeros((fan_in, fan_out)), bias: Array1::zeros(fan_out) }
    }

    fn same_shape(&self, other: &Layer<T>) -> bool {
        self.weights.dim() == other.weights.dim() && self.bias.len() == other.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Layer<T>>,
}

/// Deep copy of a network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSnapshot<T> {
    layers: Vec<Layer<T>>,
}

/// Gradient with the same layout as the network it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBuffer<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> GradientBuffer<T> {
    pub fn zeros_like(mlp: &Mlp<T>) -> Self {
        GradientBuffer { layers: mlp.layers.iter().map(|l| Layer::zeros(l.weights.nrows(), l.weights.ncols())).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    /// All entries, layer by layer, weights (row-major) before biases.
    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    pub fn max_abs(&self) -> T {
        self.values().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, factor: T) {
        for l in &mut self.layers {
            l.weights.mapv_inplace(|v| v * factor);
            l.bias.mapv_inplace(|v| v * factor);
        }
    }
}

/// Loss over a batch of selected outputs with constant targets.
#[derive(Debug, Clone)]
pub struct SelectedLoss<T> {
    pub loss: T,
    pub grads: GradientBuffer<T>,
    /// The selected outputs, evaluated at the parameters the gradient was taken at.
    pub outputs: Vec<T>,
}

struct Activations<T> {
    /// Input followed by the output of every layer.
    values: Vec<Array2<T>>,
}

impl<T: Scalar> Mlp<T> {
    /// Uniform `±sqrt(6 / (fan_in + fan_out))` weights and zero biases.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self, NetError> {
        if layer_sizes.len() < 2 {
            return Err(NetError::TooFewLayers(layer_sizes.len()));
        }
        if let Some(i) = layer_sizes.iter().position(|&w| w == 0) {
            return Err(NetError::ZeroWidth(i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || T::lit(rng.random_range(-limit..limit)));
                Layer { weights, bias: Array1::zeros(fan_out) }
            })
            .collect();
        Ok(Mlp { layers })
    }

    /// Builds a network from explicit layers.
    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::TooFewLayers(layers.len()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.nrows() == 0 || l.weights.ncols() == 0 {
                return Err(NetError::ZeroWidth(i));
            }
            if l.bias.len() != l.weights.ncols() {
                return Err(NetError::ShapeMismatch);
            }
        }
        if layers.windows(2).any(|w| w[0].weights.ncols() != w[1].weights.nrows()) {
            return Err(NetError::ShapeMismatch);
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_len()).chain(self.layers.iter().map(|l| l.weights.ncols())).collect()
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().unwrap().weights.ncols()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, input: &[T]) -> Result<Vec<T>, NetError> {
        let x = ArrayView2::from_shape((1, input.len()), input).expect("contiguous slice");
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    /// Row-wise evaluation of a `batch × input_len` matrix.
    pub fn forward_batch(&self, inputs: ArrayView2<T>) -> Result<Array2<T>, NetError> {
        self.check_input(inputs.ncols())?;
        let mut x = self.affine(0, inputs);
        for i in 1..self.layers.len() {
            relu(&mut x);
            x = self.affine(i, x.view());
        }
        Ok(x)
    }

    fn affine(&self, layer: usize, x: ArrayView2<T>) -> Array2<T> {
        let l = &self.layers[layer];
        let mut z = x.dot(&l.weights);
        z += &l.bias;
        z
    }

    fn check_input(&self, len: usize) -> Result<(), NetError> {
        if len != self.input_len() {
            return Err(NetError::InputSize { got: len, expected: self.input_len() });
        }
        Ok(())
    }

    fn forward_trace(&self, inputs: ArrayView2<T>) -> Activations<T> {
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(inputs.to_owned());
        for i in 0..self.layers.len() {
            let mut z = self.affine(i, values[i].view());
            if i + 1 < self.layers.len() {
                relu(&mut z);
            }
            values.push(z);
        }
        Activations { values }
    }

    /// Backpropagates `d_out` (gradient of the loss w.r.t. the outputs).
    fn backward(&self, acts: &Activations<T>, d_out: Array2<T>) -> GradientBuffer<T> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_out;
        for i in (0..self.layers.len()).rev() {
            let input = &acts.values[i];
            let weights = input.t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut prev = delta.dot(&self.layers[i].weights.t());
                prev.zip_mut_with(input, |d, &a| {
                    if a <= T::zero() {
                        *d = T::zero();
                    }
                });
                delta = prev;
            }
            grads.push(Layer { weights, bias });
        }
        grads.reverse();
        GradientBuffer { layers: grads }
    }

    /// Mean of `(target_k - out[k, select_k])²` over the batch and its
    /// gradient, with targets held constant.
    pub fn selected_mse(
        &self,
        inputs: ArrayView2<T>,
        select: &[usize],
        targets: &[T],
    ) -> Result<SelectedLoss<T>, NetError> {
        self.check_input(inputs.ncols())?;
        let n = inputs.nrows();
        if select.len() != n || targets.len() != n {
            return Err(NetError::BatchShape { inputs: n, labels: select.len().min(targets.len()) });
        }
        let outputs_len = self.output_len();
        if let Some(&index) = select.iter().find(|&&a| a >= outputs_len) {
            return Err(NetError::OutputIndex { index, outputs: outputs_len });
        }
        if n == 0 {
            return Ok(SelectedLoss { loss: T::zero(), grads: GradientBuffer::zeros_like(self), outputs: Vec::new() });
        }
        let acts = self.forward_trace(inputs);
        let out = acts.values.last().unwrap();
        let scale = T::lit(2.0) / T::from_usize(n).unwrap();
        let mut d_out = Array2::zeros(out.dim());
        let mut loss = T::zero();
        let mut outputs = Vec::with_capacity(n);
        for (row, (&a, &t)) in select.iter().zip(targets).enumerate() {
            let o = out[[row, a]];
            outputs.push(o);
            loss = loss + (t - o) * (t - o);
            d_out[[row, a]] = scale * (o - t);
        }
        let loss = loss / T::from_usize(n).unwrap();
        Ok(SelectedLoss { loss, grads: self.backward(&acts, d_out), outputs })
    }

    /// `θ ← θ − learning_rate · scale · grads`.
    pub fn apply_update(&mut self, grads: &GradientBuffer<T>, learning_rate: T, scale: T) -> Result<(), NetError> {
        if grads.layers.len() != self.layers.len() || !self.layers.iter().zip(&grads.layers).all(|(a, b)| a.same_shape(b)) {
            return Err(NetError::ShapeMismatch);
        }
        if !grads.is_finite() {
            return Err(NetError::NonFiniteGradient);
        }
        let step = learning_rate * scale;
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            l.weights.scaled_add(-step, &g.weights);
            l.bias.scaled_add(-step, &g.bias);
        }
        Ok(())
    }

    pub fn clone_params(&self) -> ParamSnapshot<T> {
        ParamSnapshot { layers: self.layers.clone() }
    }

    pub fn load_params(&mut self, snapshot: &ParamSnapshot<T>) -> Result<(), NetError> {
        if snapshot.layers.len() != self.layers.len()
            || !self.layers.iter().zip(&snapshot.layers).all(|(a, b)| a.same_shape(b))
        {
            return Err(NetError::ShapeMismatch);
        }
        self.layers.clone_from(&snapshot.layers);
        Ok(())
    }

    /// Pre-activations of every hidden unit, used to spot rectifier kinks.
    pub fn hidden_preactivations(&self, inputs: ArrayView2<T>) -> Result<Vec<Array2<T>>, NetError> {
        self.check_input(inputs.ncols())?;
        let mut out = Vec::new();
        let mut x = inputs.to_owned();
        for i in 0..self.layers.len() - 1 {
            let z = self.affine(i, x.view());
            out.push(z.clone());
            x = z;
            relu(&mut x);
        }
        Ok(out)
    }
}

fn relu<T: Scalar>(x: &mut Array2<T>) {
    x.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() });
}

fn batch_matrix<T: Scalar>(items: &[(Vec<T>, usize, T)]) -> Result<(Array2<T>, Vec<usize>, Vec<T>), NetError> {
    let width = items.first().map_or(0, |i| i.0.len());
    let mut data = Vec::with_capacity(items.len() * width);
    for (x, _, _) in items {
        if x.len() != width {
            return Err(NetError::InputSize { got: x.len(), expected: width });
        }
        data.extend_from_slice(x);
    }
    let inputs = Array2::from_shape_vec((items.len(), width), data).expect("rows checked");
    Ok((inputs, items.iter().map(|i| i.1).collect(), items.iter().map(|i| i.2).collect()))
}

/// One-step TD loss: mean `(target − Q(s, a))²` over `(input, action, target)`
/// items, with the semi-gradient that treats targets as constants.
pub fn loss_td<T: Scalar>(mlp: &Mlp<T>, batch: &[(Vec<T>, usize, T)]) -> Result<(T, GradientBuffer<T>), NetError> {
    if batch.is_empty() {
        return Ok((T::zero(), GradientBuffer::zeros_like(mlp)));
    }
    let (x, a, t) = batch_matrix(batch)?;
    let r = mlp.selected_mse(x.view(), &a, &t)?;
    Ok((r.loss, r.grads))
}

/// Symmetric loss: mean `(Q(s', a') − fixed)²` over `(partner input, partner
/// action, fixed target)` items; the gradient flows through the partner only.
pub fn loss_sym<T: Scalar>(mlp: &Mlp<T>, batch: &[(Vec<T>, usize, T)]) -> Result<(T, GradientBuffer<T>), NetError> {
    loss_td(mlp, batch)
}
