//! The prediction model: a sparse graph mining layer feeding a small
//! feed-forward network, with cross-entropy loss.
//!
//! The mining layer computes `h_i = sum_H beta_H * psi_H(G_i) + b` over the
//! active patterns, applies the activation, and the FFN maps the result to
//! class logits. [`forward`] also backpropagates the per-instance loss down
//! to `h`, producing the delta matrix every pattern gradient and pruning
//! bound is built from.

use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;

use crate::bitset::Bitset;
use crate::dfs_code::{graph_from_code, DfsCode};
use crate::error::{EinError, Result};
use crate::graph::{contains_subgraph, LabeledGraph};

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Activation {
    Sigmoid,
    LeakyRelu { slope: f64 },
}

/// Negative slope used when none is configured.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

impl Activation {
    pub fn leaky_relu() -> Self {
        Activation::LeakyRelu {
            slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    fn apply(&self, x: f64) -> f64 {
        match *self {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
        }
    }

    /// Derivative at pre-activation `x`.
    fn derivative(&self, x: f64) -> f64 {
        match *self {
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct AffineLayer {
    /// out x in.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// The feed-forward head: affine layers with the model activation between
/// them; the last layer emits raw class logits.
#[derive(Clone, Debug)]
pub struct Ffn {
    pub layers: Vec<AffineLayer>,
}

impl Ffn {
    /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    /// Hidden layers (depth > 1) keep width `k`.
    pub fn init(k: usize, n_classes: usize, depth: usize, rng: &mut impl Rng) -> Ffn {
        assert!(depth >= 1, "FFN needs at least one layer");
        let mut layers = Vec::with_capacity(depth);
        for l in 0..depth {
            let fan_in = k;
            let fan_out = if l + 1 == depth { n_classes } else { k };
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weight =
                Array2::from_shape_fn((fan_out, fan_in), |_| rng.gen_range(-bound..=bound));
            layers.push(AffineLayer {
                weight,
                bias: Array1::zeros(fan_out),
            });
        }
        Ffn { layers }
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("nonempty").weight.nrows()
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().expect("nonempty").weight.ncols()
    }
}

/// Everything the optimizer needs from one forward/backward pass.
#[derive(Clone, Debug)]
pub struct ForwardState {
    /// n x K mining-layer pre-activations.
    pub h: Array2<f64>,
    /// Input to each affine layer; `layer_inputs[0]` is the activated
    /// mining-layer output.
    pub layer_inputs: Vec<Array2<f64>>,
    /// Pre-activation output of each affine layer; the last one is the
    /// logit matrix.
    pub layer_pre: Vec<Array2<f64>>,
    /// d(total loss) / d(layer pre-activation), per layer.
    pub layer_dpre: Vec<Array2<f64>>,
    /// n x C softmax probabilities.
    pub probs: Array2<f64>,
    /// Total (summed) cross-entropy loss.
    pub loss: f64,
    /// n x K matrix of d(total loss) / dh.
    pub delta: Array2<f64>,
}

impl ForwardState {
    pub fn logits(&self) -> &Array2<f64> {
        self.layer_pre.last().expect("nonempty")
    }

    pub fn instance_count(&self) -> usize {
        self.h.nrows()
    }

    /// Instances whose argmax matches the label, as a fraction.
    pub fn accuracy(&self, labels: &[u32]) -> f64 {
        let correct = labels
            .iter()
            .enumerate()
            .filter(|&(i, &y)| argmax(self.probs.row(i).as_slice().unwrap()) == y as usize)
            .count();
        correct as f64 / labels.len().max(1) as f64
    }
}

/// First index attaining the maximum; ties resolve toward the lowest id.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Mining-layer pre-activations for `n` instances from active-group
/// supports and weights.
pub fn gml_preactivation(groups: &[(&Bitset, &[f64])], bias: &Array1<f64>, n: usize) -> Array2<f64> {
    let k = bias.len();
    let mut h = Array2::from_shape_fn((n, k), |(_, j)| bias[j]);
    for (support, beta) in groups {
        debug_assert_eq!(support.len(), n);
        debug_assert_eq!(beta.len(), k);
        for i in support.ones() {
            for (j, &b) in beta.iter().enumerate() {
                h[[i, j]] += b;
            }
        }
    }
    h
}

/// Full forward and backward pass over a batch.
///
/// `groups` are the active patterns' support bitsets (length n) with their
/// weight vectors; patterns outside the working set contribute nothing
/// since their weights are identically zero.
pub fn forward(
    groups: &[(&Bitset, &[f64])],
    bias: &Array1<f64>,
    ffn: &Ffn,
    activation: Activation,
    labels: &[u32],
) -> Result<ForwardState> {
    let n = labels.len();
    let n_classes = ffn.output_width();
    for &y in labels {
        if y as usize >= n_classes {
            return Err(EinError::Dataset(format!(
                "class label {y} outside the model's {n_classes} classes"
            )));
        }
    }

    let h = gml_preactivation(groups, bias, n);
    let mut layer_inputs = vec![h.mapv(|x| activation.apply(x))];
    let mut layer_pre = Vec::with_capacity(ffn.layers.len());
    for (l, layer) in ffn.layers.iter().enumerate() {
        let pre = layer_inputs[l].dot(&layer.weight.t()) + &layer.bias;
        if l + 1 < ffn.layers.len() {
            layer_inputs.push(pre.mapv(|x| activation.apply(x)));
        }
        layer_pre.push(pre);
    }
    let logits = layer_pre.last().expect("nonempty");

    let mut probs = Array2::zeros((n, n_classes));
    let mut loss = 0.0;
    for i in 0..n {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        loss += lse - row[labels[i] as usize];
        for c in 0..n_classes {
            probs[[i, c]] = (row[c] - lse).exp();
        }
    }
    if !loss.is_finite() {
        return Err(EinError::NonFinite(format!("loss is {loss}")));
    }

    // Backward pass down to h.
    let mut dlast = probs.clone();
    for (i, &y) in labels.iter().enumerate() {
        dlast[[i, y as usize]] -= 1.0;
    }
    let depth = ffn.layers.len();
    let mut layer_dpre = vec![Array2::zeros((0, 0)); depth];
    layer_dpre[depth - 1] = dlast;
    for l in (1..depth).rev() {
        let dx = layer_dpre[l].dot(&ffn.layers[l].weight);
        layer_dpre[l - 1] = &dx * &layer_pre[l - 1].mapv(|x| activation.derivative(x));
    }
    let dgml = layer_dpre[0].dot(&ffn.layers[0].weight);
    let delta = &dgml * &h.mapv(|x| activation.derivative(x));

    Ok(ForwardState {
        h,
        layer_inputs,
        layer_pre,
        layer_dpre,
        probs,
        loss,
        delta,
    })
}

/// Gradient of the total loss with respect to one pattern's weight group:
/// `(g_H)_k = sum_i delta_ik * psi_H(G_i)`.
pub fn grad_group(state: &ForwardState, support: &Bitset) -> Array1<f64> {
    let k = state.delta.ncols();
    let mut g = Array1::zeros(k);
    for i in support.ones() {
        for j in 0..k {
            g[j] += state.delta[[i, j]];
        }
    }
    g
}

/// Gradient with respect to the mining-layer bias: column sums of delta
/// (identical to [`grad_group`] with an all-ones support).
pub fn grad_bias(state: &ForwardState) -> Array1<f64> {
    state.delta.sum_axis(ndarray::Axis(0))
}

/// Per-layer FFN gradients, in layer order.
pub fn grad_ffn(state: &ForwardState) -> Vec<(Array2<f64>, Array1<f64>)> {
    state
        .layer_dpre
        .iter()
        .zip(&state.layer_inputs)
        .map(|(dpre, x)| (dpre.t().dot(x), dpre.sum_axis(ndarray::Axis(0))))
        .collect()
}

pub fn l2_norm(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A trained model: working-set patterns with their weight groups, the
/// mining-layer bias, the activation, the FFN head, and the class list.
/// The selected-subgraph set is recoverable as the nonzero groups.
#[derive(Clone, Debug)]
pub struct EinModel {
    pub active: Vec<(DfsCode, Vec<f64>)>,
    pub bias: Array1<f64>,
    pub activation: Activation,
    pub ffn: Ffn,
    pub classes: Vec<u32>,
}

impl EinModel {
    pub fn k(&self) -> usize {
        self.bias.len()
    }

    /// The selected subgraphs: patterns whose weight group is nonzero.
    pub fn selected(&self) -> Vec<(&DfsCode, &[f64])> {
        self.active
            .iter()
            .filter(|(_, beta)| beta.iter().any(|&b| b != 0.0))
            .map(|(code, beta)| (code, beta.as_slice()))
            .collect()
    }

    /// Materialized pattern graphs of the selected subgraphs, aligned with
    /// [`EinModel::selected`].
    pub fn selected_graphs(&self) -> Result<Vec<LabeledGraph>> {
        self.selected()
            .iter()
            .map(|(code, _)| graph_from_code(code))
            .collect()
    }
}

/// Occurrence bitsets of each pattern over `graphs` via the
/// subgraph-isomorphism test. Pairs are checked independently (and in
/// parallel when a rayon pool has threads), so the result does not depend
/// on scheduling.
pub fn support_matrix(patterns: &[LabeledGraph], graphs: &[LabeledGraph]) -> Vec<Bitset> {
    patterns
        .par_iter()
        .map(|p| {
            let mut bs = Bitset::new(graphs.len());
            for (i, g) in graphs.iter().enumerate() {
                if contains_subgraph(p, g) {
                    bs.set(i);
                }
            }
            bs
        })
        .collect()
}

/// Logits for a batch of graphs whose features were computed externally.
fn batch_probs(
    model: &EinModel,
    supports: &[Bitset],
    betas: &[&[f64]],
    n: usize,
) -> Result<Array2<f64>> {
    let groups: Vec<(&Bitset, &[f64])> = supports
        .iter()
        .zip(betas)
        .map(|(s, &b)| (s, b))
        .collect();
    let h = gml_preactivation(&groups, &model.bias, n);
    let mut x = h.mapv(|v| model.activation.apply(v));
    for (l, layer) in model.ffn.layers.iter().enumerate() {
        let pre = x.dot(&layer.weight.t()) + &layer.bias;
        x = if l + 1 < model.ffn.layers.len() {
            pre.mapv(|v| model.activation.apply(v))
        } else {
            pre
        };
    }
    let n_classes = model.ffn.output_width();
    let mut probs = Array2::zeros((n, n_classes));
    for i in 0..n {
        let row = x.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        if !lse.is_finite() {
            return Err(EinError::NonFinite("non-finite logits in predict".into()));
        }
        for c in 0..n_classes {
            probs[[i, c]] = (row[c] - lse).exp();
        }
    }
    Ok(probs)
}

/// Predicted class and probability vector for every graph. Features are
/// re-tested with the subgraph-isomorphism oracle for each selected
/// pattern; also returns the feature bitsets (one per selected pattern).
pub fn predict_batch(
    model: &EinModel,
    graphs: &[LabeledGraph],
) -> Result<(Vec<(u32, Vec<f64>)>, Vec<Bitset>)> {
    let selected = model.selected();
    let pattern_graphs = model.selected_graphs()?;
    let supports = support_matrix(&pattern_graphs, graphs);
    let betas: Vec<&[f64]> = selected.iter().map(|&(_, b)| b).collect();
    let probs = batch_probs(model, &supports, &betas, graphs.len())?;
    let out = (0..graphs.len())
        .map(|i| {
            let row: Vec<f64> = probs.row(i).to_vec();
            (argmax(&row) as u32, row)
        })
        .collect();
    Ok((out, supports))
}

/// Predicted class (ties toward the lowest class id) and probability vector
/// for a single graph.
pub fn predict(g: &LabeledGraph, model: &EinModel) -> Result<(u32, Vec<f64>)> {
    let (mut preds, _) = predict_batch(model, std::slice::from_ref(g))?;
    Ok(preds.remove(0))
}
