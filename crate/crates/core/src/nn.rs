//! Grouped fully convolutional network with exact reverse-mode gradients.
//!
//! Stage 1 convolves each of the 20 (manipulator, sub-cluster) channel sets
//! separately into 8 maps; the 5 results of a manipulator are concatenated
//! (40 maps) and stage 2 convolves each manipulator into 16 maps; the 4
//! results are concatenated (64 maps) and stage 3 produces the final 32 maps
//! `A`. Global average pooling gives `g`, and the head computes `z = W·g + b`
//! (followed by softmax for classification).
//!
//! Every convolution has kernel length 3, stride 1 and one zero of padding on
//! each side, so all feature maps keep the input length `l`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{
    ChannelLayout, OsatsScores, SkillLevel, GROUP_NAMES, N_CHANNELS, SUB_CLUSTER_NAMES,
};
use crate::matrix::Matrix;

pub const KERNEL_LEN: usize = 3;
pub const STAGE1_FILTERS: usize = 8;
pub const STAGE2_FILTERS: usize = 16;
pub const STAGE3_FILTERS: usize = 32;
const N_GROUPS: usize = 4;
const N_SUB_CLUSTERS: usize = 5;
const STAGE2_IN: usize = N_SUB_CLUSTERS * STAGE1_FILTERS;
const STAGE3_IN: usize = N_GROUPS * STAGE2_FILTERS;

/// Floor on the probability inside the cross-entropy logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    /// Three skill classes, softmax output.
    Classification,
    /// Six OSATS components, linear output.
    Regression,
}

impl HeadKind {
    pub fn n_outputs(self) -> usize {
        match self {
            HeadKind::Classification => 3,
            HeadKind::Regression => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HeadKind::Classification => "classification",
            HeadKind::Regression => "regression",
        }
    }

    /// Display names of the output neurons.
    pub fn output_names(self) -> Vec<&'static str> {
        match self {
            HeadKind::Classification => SkillLevel::ALL.iter().map(|s| s.name()).collect(),
            HeadKind::Regression => OsatsScores::COMPONENTS.to_vec(),
        }
    }
}

impl std::fmt::Display for HeadKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for HeadKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "classification" => Ok(HeadKind::Classification),
            "regression" => Ok(HeadKind::Regression),
            _ => Err(format!(
                "unknown head {s:?} (expected classification or regression)"
            )),
        }
    }
}

/// Training target for one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Skill(SkillLevel),
    Osats(OsatsScores),
}

impl Target {
    pub fn head_kind(&self) -> HeadKind {
        match self {
            Target::Skill(_) => HeadKind::Classification,
            Target::Osats(_) => HeadKind::Regression,
        }
    }
}

/// Kernels are stored `[out][in][tap]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv1dParams {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernels: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Conv1dParams {
    pub fn zeros(out_channels: usize, in_channels: usize) -> Self {
        Conv1dParams {
            out_channels,
            in_channels,
            kernels: vec![0.0; out_channels * in_channels * KERNEL_LEN],
            biases: vec![0.0; out_channels],
        }
    }

    pub fn glorot<R: Rng + ?Sized>(out_channels: usize, in_channels: usize, rng: &mut R) -> Self {
        let kernels = glorot_uniform_init(
            in_channels * KERNEL_LEN,
            out_channels * KERNEL_LEN,
            out_channels * in_channels * KERNEL_LEN,
            rng,
        );
        Conv1dParams {
            out_channels,
            in_channels,
            kernels,
            biases: vec![0.0; out_channels],
        }
    }

    #[inline]
    pub fn kernel(&self, o: usize, c: usize) -> &[f64] {
        let at = (o * self.in_channels + c) * KERNEL_LEN;
        &self.kernels[at..at + KERNEL_LEN]
    }

    pub fn n_params(&self) -> usize {
        self.kernels.len() + self.biases.len()
    }

    fn check_shape(&self, out_channels: usize, in_channels: usize, what: &str) -> Result<()> {
        if self.out_channels != out_channels
            || self.in_channels != in_channels
            || self.kernels.len() != out_channels * in_channels * KERNEL_LEN
            || self.biases.len() != out_channels
        {
            return Err(Error::ShapeMismatch(format!(
                "{what}: expected {out_channels}x{in_channels}x{KERNEL_LEN} conv"
            )));
        }
        Ok(())
    }
}

/// Samples `n` values i.i.d. from `U[-a, a]` with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform_init<R: Rng + ?Sized>(
    fan_in: usize,
    fan_out: usize,
    n: usize,
    rng: &mut R,
) -> Vec<f64> {
    assert!(fan_in >= 1 && fan_out >= 1, "fan counts must be positive");
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-a..=a)).collect()
}

/// Same-padded, stride-1 cross-correlation of a `channels × l` map.
pub fn conv1d_forward(input: &Matrix, params: &Conv1dParams) -> Result<Matrix> {
    if input.rows() != params.in_channels {
        return Err(Error::ChannelMismatch {
            expected: params.in_channels,
            actual: input.rows(),
        });
    }
    let l = input.cols();
    let mut out = Matrix::zeros(params.out_channels, l);
    if l == 0 {
        return Ok(out);
    }
    for o in 0..params.out_channels {
        let row = out.row_mut(o);
        row.fill(params.biases[o]);
        for c in 0..params.in_channels {
            let x = input.row(c);
            let k = params.kernel(o, c);
            // tap 0 reads t-1, tap 1 reads t, tap 2 reads t+1
            for (y, xv) in row[1..].iter_mut().zip(&x[..l - 1]) {
                *y += k[0] * xv;
            }
            for (y, xv) in row.iter_mut().zip(x) {
                *y += k[1] * xv;
            }
            for (y, xv) in row[..l - 1].iter_mut().zip(&x[1..]) {
                *y += k[2] * xv;
            }
        }
    }
    Ok(out)
}

/// Gradients of a convolution given the upstream gradient of its output.
pub(crate) struct ConvGrads {
    pub input: Option<Matrix>,
    pub kernels: Vec<f64>,
    pub biases: Vec<f64>,
}

pub(crate) fn conv1d_backward(
    input: &Matrix,
    params: &Conv1dParams,
    grad_out: &Matrix,
    want_input: bool,
) -> ConvGrads {
    let l = input.cols();
    let mut kernels = vec![0.0; params.kernels.len()];
    let mut biases = vec![0.0; params.out_channels];
    let mut grad_in = want_input.then(|| Matrix::zeros(params.in_channels, l));
    for (o, bias) in biases.iter_mut().enumerate() {
        let g = grad_out.row(o);
        *bias = g.iter().sum();
        for c in 0..params.in_channels {
            let x = input.row(c);
            let at = (o * params.in_channels + c) * KERNEL_LEN;
            kernels[at] = dot(&g[1..], &x[..l - 1]);
            kernels[at + 1] = dot(g, x);
            kernels[at + 2] = dot(&g[..l - 1], &x[1..]);
            if let Some(gi) = grad_in.as_mut() {
                let k = params.kernel(o, c);
                let dst = gi.row_mut(c);
                for (d, gv) in dst[..l - 1].iter_mut().zip(&g[1..]) {
                    *d += k[0] * gv;
                }
                for (d, gv) in dst.iter_mut().zip(g) {
                    *d += k[1] * gv;
                }
                for (d, gv) in dst[1..].iter_mut().zip(&g[..l - 1]) {
                    *d += k[2] * gv;
                }
            }
        }
    }
    ConvGrads {
        input: grad_in,
        kernels,
        biases,
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn relu(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    relu_in_place(&mut out);
    out
}

fn relu_in_place(x: &mut Matrix) {
    for v in x.as_mut_slice() {
        *v = v.max(0.0);
    }
}

/// Zeroes `grad` wherever the post-ReLU activation is not positive.
fn relu_backward(grad: &mut Matrix, activation: &Matrix) {
    for (g, a) in grad.as_mut_slice().iter_mut().zip(activation.as_slice()) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Per-channel mean over time.
pub fn gap(x: &Matrix) -> Vec<f64> {
    let l = x.cols() as f64;
    (0..x.rows())
        .map(|r| x.row(r).iter().sum::<f64>() / l)
        .collect()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn cross_entropy_loss(p: &[f64], label: SkillLevel) -> f64 {
    -p[label.index()].max(LOG_FLOOR).ln()
}

/// Mean squared error over the components.
pub fn mse_loss(y_hat: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(y_hat.len(), y.len());
    y_hat
        .iter()
        .zip(y)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        / y.len() as f64
}

/// All parameters of the grouped network plus its output head.
#[derive(Debug, Clone, PartialEq)]
pub struct FcnModel {
    pub head_kind: HeadKind,
    pub layout: ChannelLayout,
    /// One per (group, sub-cluster), group-major.
    pub layer1: Vec<Conv1dParams>,
    /// One per group.
    pub layer2: Vec<Conv1dParams>,
    pub layer3: Conv1dParams,
    /// `n_out × 32`, row-major.
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

impl FcnModel {
    /// All weights and biases zero.
    pub fn zeros(head_kind: HeadKind, layout: ChannelLayout) -> Result<Self> {
        Self::build(head_kind, layout, Conv1dParams::zeros, |n| vec![0.0; n])
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        head_kind: HeadKind,
        layout: ChannelLayout,
        rng: &mut R,
    ) -> Result<Self> {
        let n_out = head_kind.n_outputs();
        let rng = std::cell::RefCell::new(rng);
        Self::build(
            head_kind,
            layout,
            |out, inp| Conv1dParams::glorot(out, inp, &mut **rng.borrow_mut()),
            |n| glorot_uniform_init(STAGE3_FILTERS, n_out, n, &mut **rng.borrow_mut()),
        )
    }

    fn build(
        head_kind: HeadKind,
        layout: ChannelLayout,
        mut conv: impl FnMut(usize, usize) -> Conv1dParams,
        head: impl FnOnce(usize) -> Vec<f64>,
    ) -> Result<Self> {
        layout.validate()?;
        let layer1 = layout
            .sub_clusters()
            .map(|s| conv(STAGE1_FILTERS, s.len()))
            .collect();
        let layer2 = (0..N_GROUPS)
            .map(|_| conv(STAGE2_FILTERS, STAGE2_IN))
            .collect();
        let layer3 = conv(STAGE3_FILTERS, STAGE3_IN);
        let n_out = head_kind.n_outputs();
        Ok(FcnModel {
            head_kind,
            layout,
            layer1,
            layer2,
            layer3,
            head_w: head(n_out * STAGE3_FILTERS),
            head_b: vec![0.0; n_out],
        })
    }

    pub fn n_outputs(&self) -> usize {
        self.head_kind.n_outputs()
    }

    /// Checks every tensor shape against the architecture.
    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        if self.layer1.len() != N_GROUPS * N_SUB_CLUSTERS || self.layer2.len() != N_GROUPS {
            return Err(Error::ShapeMismatch("wrong number of convolutions".into()));
        }
        for (p, s) in self.layer1.iter().zip(self.layout.sub_clusters()) {
            p.check_shape(STAGE1_FILTERS, s.len(), "layer1")?;
        }
        for p in &self.layer2 {
            p.check_shape(STAGE2_FILTERS, STAGE2_IN, "layer2")?;
        }
        self.layer3
            .check_shape(STAGE3_FILTERS, STAGE3_IN, "layer3")?;
        let n_out = self.n_outputs();
        if self.head_w.len() != n_out * STAGE3_FILTERS || self.head_b.len() != n_out {
            return Err(Error::ShapeMismatch(format!(
                "head must be {n_out}x{STAGE3_FILTERS}"
            )));
        }
        if self
            .tensors()
            .iter()
            .any(|t| t.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::ShapeMismatch("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Parameter tensors in canonical order: for each stage-1 conv (kernel,
    /// bias), each stage-2 conv (kernel, bias), stage-3 (kernel, bias), head
    /// weight, head bias.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.n_tensors());
        for p in self
            .layer1
            .iter()
            .chain(&self.layer2)
            .chain(std::iter::once(&self.layer3))
        {
            out.push(p.kernels.as_slice());
            out.push(p.biases.as_slice());
        }
        out.push(&self.head_w);
        out.push(&self.head_b);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.n_tensors());
        for p in self
            .layer1
            .iter_mut()
            .chain(self.layer2.iter_mut())
            .chain(std::iter::once(&mut self.layer3))
        {
            out.push(p.kernels.as_mut_slice());
            out.push(p.biases.as_mut_slice());
        }
        out.push(&mut self.head_w);
        out.push(&mut self.head_b);
        out
    }

    pub fn n_tensors(&self) -> usize {
        2 * (self.layer1.len() + self.layer2.len() + 1) + 2
    }

    /// Names matching [`FcnModel::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_tensors());
        for g in GROUP_NAMES {
            for s in SUB_CLUSTER_NAMES {
                names.push(format!("layer1.{g}.{s}.kernel"));
                names.push(format!("layer1.{g}.{s}.bias"));
            }
        }
        for g in GROUP_NAMES {
            names.push(format!("layer2.{g}.kernel"));
            names.push(format!("layer2.{g}.bias"));
        }
        names.push("layer3.kernel".into());
        names.push("layer3.bias".into());
        names.push("head.weight".into());
        names.push("head.bias".into());
        names
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Runs the network on an `l × 76` (time-major) series.
    pub fn forward(&self, samples: &Matrix) -> Result<ForwardTrace> {
        if samples.cols() != N_CHANNELS {
            return Err(Error::ChannelMismatch {
                expected: N_CHANNELS,
                actual: samples.cols(),
            });
        }
        if samples.rows() < 3 {
            return Err(Error::LengthTooShort(samples.rows()));
        }
        let inputs: Vec<Matrix> = self
            .layout
            .sub_clusters()
            .map(|s| samples.select_columns_as_rows(s))
            .collect();
        let stage1 = inputs
            .iter()
            .zip(&self.layer1)
            .map(|(x, p)| conv1d_forward(x, p).map(|m| relu(&m)))
            .collect::<Result<Vec<_>>>()?;
        let group_inputs: Vec<Matrix> = stage1.chunks(N_SUB_CLUSTERS).map(Matrix::vstack).collect();
        let stage2 = group_inputs
            .iter()
            .zip(&self.layer2)
            .map(|(x, p)| conv1d_forward(x, p).map(|m| relu(&m)))
            .collect::<Result<Vec<_>>>()?;
        let merged = Matrix::vstack(&stage2);
        let mut activations = conv1d_forward(&merged, &self.layer3)?;
        relu_in_place(&mut activations);
        let pooled = gap(&activations);
        let z: Vec<f64> = self
            .head_w
            .chunks(STAGE3_FILTERS)
            .zip(&self.head_b)
            .map(|(w, b)| dot(w, &pooled) + b)
            .collect();
        let probabilities = match self.head_kind {
            HeadKind::Classification => Some(softmax(&z)),
            HeadKind::Regression => None,
        };
        Ok(ForwardTrace {
            inputs,
            stage1,
            group_inputs,
            stage2,
            merged,
            activations,
            pooled,
            z,
            probabilities,
        })
    }

    /// Data loss of a trace against its target (no regularization term).
    pub fn loss(&self, trace: &ForwardTrace, target: &Target) -> Result<f64> {
        match (self.head_kind, target, &trace.probabilities) {
            (HeadKind::Classification, Target::Skill(s), Some(p)) => Ok(cross_entropy_loss(p, *s)),
            (HeadKind::Regression, Target::Osats(o), None) => Ok(mse_loss(&trace.z, &o.to_array())),
            _ => Err(Error::HeadMismatch(self.head_kind.as_str())),
        }
    }

    /// Exact gradient of [`FcnModel::loss`] with respect to every tensor.
    pub fn backward(&self, trace: &ForwardTrace, target: &Target) -> Result<Gradients> {
        let dz: Vec<f64> = match (self.head_kind, target, &trace.probabilities) {
            (HeadKind::Classification, Target::Skill(s), Some(p)) => {
                let mut d = p.clone();
                d[s.index()] -= 1.0;
                d
            }
            (HeadKind::Regression, Target::Osats(o), None) => {
                let n = trace.z.len() as f64;
                trace
                    .z
                    .iter()
                    .zip(o.to_array())
                    .map(|(zv, y)| 2.0 * (zv - y) / n)
                    .collect()
            }
            _ => return Err(Error::HeadMismatch(self.head_kind.as_str())),
        };
        if trace.z.len() != self.n_outputs() || trace.activations.rows() != STAGE3_FILTERS {
            return Err(Error::TraceMismatch(
                "trace shape differs from model".into(),
            ));
        }

        let head_w: Vec<f64> = dz
            .iter()
            .flat_map(|d| trace.pooled.iter().map(move |g| d * g))
            .collect();
        let head_b = dz.clone();
        let l = trace.len();
        let mut d_act = Matrix::zeros(STAGE3_FILTERS, l);
        for k in 0..STAGE3_FILTERS {
            let dg: f64 = dz
                .iter()
                .enumerate()
                .map(|(c, d)| d * self.head_w[c * STAGE3_FILTERS + k])
                .sum();
            d_act.row_mut(k).fill(dg / l as f64);
        }
        relu_backward(&mut d_act, &trace.activations);

        let g3 = conv1d_backward(&trace.merged, &self.layer3, &d_act, true);
        let d_stage2 = g3
            .input
            .expect("input grad")
            .split_rows(&[STAGE2_FILTERS; N_GROUPS]);

        let mut layer2 = Vec::with_capacity(N_GROUPS);
        let mut d_stage1 = Vec::with_capacity(N_GROUPS * N_SUB_CLUSTERS);
        for (gi, mut d) in d_stage2.into_iter().enumerate() {
            relu_backward(&mut d, &trace.stage2[gi]);
            let g2 = conv1d_backward(&trace.group_inputs[gi], &self.layer2[gi], &d, true);
            d_stage1.extend(
                g2.input
                    .expect("input grad")
                    .split_rows(&[STAGE1_FILTERS; N_SUB_CLUSTERS]),
            );
            layer2.push((g2.kernels, g2.biases));
        }

        let mut tensors = Vec::with_capacity(self.n_tensors());
        for (i, mut d) in d_stage1.into_iter().enumerate() {
            relu_backward(&mut d, &trace.stage1[i]);
            let g1 = conv1d_backward(&trace.inputs[i], &self.layer1[i], &d, false);
            tensors.push(g1.kernels);
            tensors.push(g1.biases);
        }
        for (k, b) in layer2 {
            tensors.push(k);
            tensors.push(b);
        }
        tensors.push(g3.kernels);
        tensors.push(g3.biases);
        tensors.push(head_w);
        tensors.push(head_b);
        Ok(Gradients { tensors })
    }

    /// Index of the largest output (classification decision).
    pub fn predict_class(trace: &ForwardTrace) -> SkillLevel {
        let z = &trace.z;
        let best = (0..z.len()).fold(0, |b, i| if z[i] > z[b] { i } else { b });
        SkillLevel::from_index(best).expect("three classes")
    }
}

/// Closed-form parameter count of the architecture for a head kind.
pub fn expected_param_count(head_kind: HeadKind) -> usize {
    let stage1: usize = crate::kinematics::SUB_CLUSTER_SIZES
        .iter()
        .map(|&size| STAGE1_FILTERS * size * KERNEL_LEN + STAGE1_FILTERS)
        .sum::<usize>()
        * N_GROUPS;
    let stage2 = N_GROUPS * (STAGE2_FILTERS * STAGE2_IN * KERNEL_LEN + STAGE2_FILTERS);
    let stage3 = STAGE3_FILTERS * STAGE3_IN * KERNEL_LEN + STAGE3_FILTERS;
    let n_out = head_kind.n_outputs();
    stage1 + stage2 + stage3 + n_out * STAGE3_FILTERS + n_out
}

/// Every intermediate of one forward pass, as needed by backward and CAM.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// Channel-major input slice of each sub-cluster.
    pub inputs: Vec<Matrix>,
    /// Post-ReLU stage-1 outputs, one per sub-cluster (8 × l).
    pub stage1: Vec<Matrix>,
    /// Stage-1 outputs concatenated per group (40 × l).
    pub group_inputs: Vec<Matrix>,
    /// Post-ReLU stage-2 outputs, one per group (16 × l).
    pub stage2: Vec<Matrix>,
    /// Stage-2 outputs concatenated (64 × l).
    pub merged: Matrix,
    /// Final post-ReLU maps `A` (32 × l).
    pub activations: Matrix,
    /// Time-mean of each final map.
    pub pooled: Vec<f64>,
    /// Pre-activation outputs.
    pub z: Vec<f64>,
    /// Softmax of `z`, classification only.
    pub probabilities: Option<Vec<f64>>,
}

impl ForwardTrace {
    pub fn len(&self) -> usize {
        self.activations.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The network's output: probabilities for classification, `z` otherwise.
    pub fn output(&self) -> &[f64] {
        self.probabilities.as_deref().unwrap_or(&self.z)
    }
}

/// One gradient tensor per model tensor, in [`FcnModel::tensors`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &FcnModel) -> Self {
        Gradients {
            tensors: model.tensors().iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn is_congruent(&self, model: &FcnModel) -> bool {
        let shapes = model.tensors();
        self.tensors.len() == shapes.len()
            && self
                .tensors
                .iter()
                .zip(&shapes)
                .all(|(g, t)| g.len() == t.len())
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::default_channel_layout;
    use crate::rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut r = rng::seeded(seed);
        Matrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
    }

    fn random_conv(out: usize, inp: usize, seed: u64) -> Conv1dParams {
        let mut r = rng::seeded(seed);
        Conv1dParams {
            out_channels: out,
            in_channels: inp,
            kernels: (0..out * inp * 3)
                .map(|_| r.random_range(-1.0..1.0))
                .collect(),
            biases: (0..out).map(|_| r.random_range(-1.0..1.0)).collect(),
        }
    }

    /// Index-looped reference: explicit zero padding, no slicing tricks.
    fn naive_conv(input: &Matrix, p: &Conv1dParams) -> Matrix {
        let l = input.cols() as isize;
        Matrix::from_fn(p.out_channels, input.cols(), |o, t| {
            let mut acc = p.biases[o];
            for c in 0..p.in_channels {
                for d in -1isize..=1 {
                    let s = t as isize + d;
                    let x = if s < 0 || s >= l {
                        0.0
                    } else {
                        input.get(c, s as usize)
                    };
                    acc += p.kernels[(o * p.in_channels + c) * 3 + (d + 1) as usize] * x;
                }
            }
            acc
        })
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        let p = Conv1dParams {
            out_channels: 1,
            in_channels: 1,
            kernels: vec![0.0, 1.0, 0.0],
            biases: vec![0.0],
        };
        let x = random_matrix(1, 9, 1);
        assert_eq!(conv1d_forward(&x, &p).unwrap(), x);
    }

    #[test]
    fn zero_kernel_gives_bias() {
        let mut p = Conv1dParams::zeros(2, 3);
        p.biases = vec![0.5, -2.0];
        let out = conv1d_forward(&random_matrix(3, 6, 2), &p).unwrap();
        assert!(out.row(0).iter().all(|v| *v == 0.5));
        assert!(out.row(1).iter().all(|v| *v == -2.0));
    }

    #[test]
    fn conv_matches_naive_oracle() {
        let x = random_matrix(5, 11, 3);
        let p = random_conv(4, 5, 4);
        let fast = conv1d_forward(&x, &p).unwrap();
        let slow = naive_conv(&x, &p);
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn conv_channel_mismatch() {
        let p = Conv1dParams::zeros(2, 3);
        assert!(matches!(
            conv1d_forward(&Matrix::zeros(4, 5), &p),
            Err(Error::ChannelMismatch {
                expected: 3,
                actual: 4
            })
        ));
    }

    #[test]
    fn relu_cases() {
        let neg = Matrix::from_vec(1, 3, vec![-1.0, -0.5, -3.0]);
        assert!(relu(&neg).as_slice().iter().all(|v| *v == 0.0));
        let pos = Matrix::from_vec(1, 3, vec![1.0, 0.5, 3.0]);
        assert_eq!(relu(&pos), pos);
        let mixed = random_matrix(3, 7, 5);
        let r = relu(&mixed);
        for (a, b) in r.as_slice().iter().zip(mixed.as_slice()) {
            assert_eq!(*a, if *b > 0.0 { *b } else { 0.0 });
        }
    }

    #[test]
    fn gap_cases() {
        let m = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(gap(&m), vec![2.0, 5.0]);
        let col = Matrix::from_vec(3, 1, vec![0.25, -1.0, 7.0]);
        assert_eq!(gap(&col), vec![0.25, -1.0, 7.0]);
        let r = random_matrix(4, 13, 6);
        for (k, g) in gap(&r).iter().enumerate() {
            let mut s = 0.0;
            for t in 0..13 {
                s += r.get(k, t);
            }
            assert!((g - s / 13.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn losses() {
        assert_eq!(
            cross_entropy_loss(&[1.0, 0.0, 0.0], SkillLevel::Novice),
            0.0
        );
        let u = [1.0 / 3.0; 3];
        assert!((cross_entropy_loss(&u, SkillLevel::Expert) - 3f64.ln()).abs() < 1e-15);
        assert_eq!(
            cross_entropy_loss(&[0.0, 1.0, 0.0], SkillLevel::Novice),
            -LOG_FLOOR.ln()
        );
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(mse_loss(&y, &y), 0.0);
        assert_eq!(mse_loss(&[0.0; 6], &[1.0; 6]), 1.0);
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let z = [0.3, -1.2, 2.5];
        let a = softmax(&z);
        let b = softmax(&[z[0] + 700.0, z[1] + 700.0, z[2] + 700.0]);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_model_gives_uniform_probabilities() {
        let m = FcnModel::zeros(HeadKind::Classification, default_channel_layout()).unwrap();
        let t = m.forward(&Matrix::zeros(10, 76)).unwrap();
        assert_eq!(t.z, vec![0.0; 3]);
        assert_eq!(t.probabilities.unwrap(), vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn forward_preconditions() {
        let m = FcnModel::zeros(HeadKind::Regression, default_channel_layout()).unwrap();
        assert!(matches!(
            m.forward(&Matrix::zeros(2, 76)),
            Err(Error::LengthTooShort(2))
        ));
        assert!(matches!(
            m.forward(&Matrix::zeros(5, 75)),
            Err(Error::ChannelMismatch { .. })
        ));
    }

    #[test]
    fn param_count_closed_form() {
        for head in [HeadKind::Classification, HeadKind::Regression] {
            let m = FcnModel::zeros(head, default_channel_layout()).unwrap();
            let n_out = head.n_outputs();
            let expected = (8 * 76 * 3 + 20 * 8)
                + 4 * (16 * 40 * 3 + 16)
                + (32 * 64 * 3 + 32)
                + n_out * 32
                + n_out;
            assert_eq!(m.n_params(), expected);
            assert_eq!(expected_param_count(head), expected);
            assert_eq!(m.tensor_names().len(), m.tensors().len());
        }
    }

    #[test]
    fn glorot_bound_and_determinism() {
        let a = (6.0f64 / 33.0).sqrt();
        assert!((a - 0.4264).abs() < 1e-4);
        let draws = glorot_uniform_init(9, 24, 100_000, &mut rng::seeded(11));
        assert!(draws.iter().all(|v| v.abs() <= a));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() <= 3.0 * a / (3.0f64 * 1e5).sqrt());
        assert_eq!(
            draws,
            glorot_uniform_init(9, 24, 100_000, &mut rng::seeded(11))
        );

        let m = FcnModel::glorot(
            HeadKind::Classification,
            default_channel_layout(),
            &mut rng::seeded(1),
        )
        .unwrap();
        assert!(m.layer1.iter().all(|p| p.biases.iter().all(|b| *b == 0.0)));
        assert!(m.head_b.iter().all(|b| *b == 0.0));
        let bound1 = (6.0f64 / (9.0 * 3.0 + 8.0 * 3.0)).sqrt();
        assert!(m.layer1[3].kernels.iter().all(|v| v.abs() <= bound1));
    }

    #[test]
    fn backward_rejects_wrong_target() {
        let m = FcnModel::zeros(HeadKind::Regression, default_channel_layout()).unwrap();
        let t = m.forward(&Matrix::zeros(4, 76)).unwrap();
        assert!(matches!(
            m.backward(&t, &Target::Skill(SkillLevel::Expert)),
            Err(Error::HeadMismatch(_))
        ));
    }

    #[test]
    fn gradients_vanish_at_regression_optimum() {
        let m = FcnModel::glorot(
            HeadKind::Regression,
            default_channel_layout(),
            &mut rng::seeded(3),
        )
        .unwrap();
        let t = m.forward(&random_matrix(12, 76, 9)).unwrap();
        let y = OsatsScores::from_array(t.z.clone().try_into().unwrap());
        let g = m.backward(&t, &Target::Osats(y)).unwrap();
        assert!(g.is_congruent(&m));
        assert!(g.tensors.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn gradients_vanish_at_certain_classification() {
        let mut m = FcnModel::glorot(
            HeadKind::Classification,
            default_channel_layout(),
            &mut rng::seeded(4),
        )
        .unwrap();
        m.head_b = vec![0.0, 0.0, 1e4];
        let t = m.forward(&random_matrix(12, 76, 10)).unwrap();
        assert_eq!(t.probabilities.as_ref().unwrap()[2], 1.0);
        let g = m.backward(&t, &Target::Skill(SkillLevel::Expert)).unwrap();
        assert!(g.tensors.iter().flatten().all(|v| *v == 0.0));
    }
}
