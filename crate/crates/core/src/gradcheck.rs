//! Central finite-difference check of [`FcnModel::backward`].

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::Result;
use crate::kinematics::{default_channel_layout, OsatsScores, SkillLevel, N_CHANNELS};
use crate::matrix::Matrix;
use crate::nn::{FcnModel, ForwardTrace, HeadKind, Target};
use crate::rng;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Denominator floor of the relative error, so that entries whose true
/// gradient is zero are judged by absolute error.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// Smaller steps tried, in order, when the nominal step straddles a ReLU kink.
pub const FALLBACK_STEPS: [f64; 3] = [1e-6, 1e-7, 1e-8];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub len: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Entries evaluated with a fallback step.
    pub reduced_step: usize,
    /// Entries where every step straddled a kink; they do not enter the maxima.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub head: HeadKind,
    pub length: usize,
    pub step: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors
            .iter()
            .map(|t| t.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn skipped(&self) -> usize {
        self.tensors.iter().map(|t| t.skipped).sum()
    }

    /// First tensor whose error reaches `tolerance` or that has skipped entries.
    pub fn first_failure(&self, tolerance: f64) -> Option<&TensorCheck> {
        self.tensors
            .iter()
            .find(|t| t.max_rel_error.is_nan() || t.max_rel_error >= tolerance || t.skipped > 0)
    }
}

/// `|a - n| / max(|a|, |n|, RELATIVE_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// A Glorot-initialized model with small random biases, a standard-normal
/// trial of length `length`, and a random target, all from `seed`.
pub fn random_problem(
    head: HeadKind,
    seed: u64,
    length: usize,
) -> Result<(FcnModel, Matrix, Target)> {
    let mut r = rng::stream(seed, &[0x67c, head.n_outputs() as u64]);
    let mut model = FcnModel::glorot(head, default_channel_layout(), &mut r)?;
    let n_tensors = model.n_tensors();
    for (i, t) in model.tensors_mut().into_iter().enumerate() {
        // odd positions hold biases, except the head weight at n_tensors - 2
        if i % 2 == 1 {
            debug_assert!(i != n_tensors - 2);
            t.iter_mut().for_each(|b| *b = r.random_range(-0.1..0.1));
        }
    }
    let samples = Matrix::from_fn(length, N_CHANNELS, |_, _| StandardNormal.sample(&mut r));
    let target = match head {
        HeadKind::Classification => Target::Skill(SkillLevel::ALL[r.random_range(0..3)]),
        HeadKind::Regression => Target::Osats(OsatsScores::from_array(std::array::from_fn(|_| {
            StandardNormal.sample(&mut r)
        }))),
    };
    Ok((model, samples, target))
}

/// True when every ReLU unit has the same on/off state in both traces.
fn same_relu_pattern(a: &ForwardTrace, b: &ForwardTrace) -> bool {
    let maps = |t: &ForwardTrace| {
        t.stage1
            .iter()
            .chain(&t.stage2)
            .chain(std::iter::once(&t.activations))
            .flat_map(|m| m.as_slice().iter().map(|v| *v > 0.0))
            .collect::<Vec<bool>>()
    };
    maps(a) == maps(b)
}

/// Compares every analytic gradient entry against `(L(θ+h) - L(θ-h)) / 2h`.
///
/// The loss is only piecewise smooth in the parameters. When a ReLU unit
/// switches state between `θ-h` and `θ+h` the difference quotient mixes two
/// slopes, so that entry is retried with the [`FALLBACK_STEPS`]; an entry
/// that straddles a kink at every step is counted as skipped.
pub fn check_gradients(
    model: &FcnModel,
    samples: &Matrix,
    target: &Target,
    step: f64,
) -> Result<GradCheckReport> {
    let trace = model.forward(samples)?;
    let analytic = model.backward(&trace, target)?;
    let names = model.tensor_names();
    let mut probe = model.clone();
    let mut tensors = Vec::with_capacity(names.len());
    for (ti, name) in names.into_iter().enumerate() {
        let len = analytic.tensors[ti].len();
        let (mut max_rel, mut max_abs) = (0.0f64, 0.0f64);
        let (mut reduced_step, mut skipped) = (0, 0);
        for j in 0..len {
            let orig = probe.tensors()[ti][j];
            let mut numeric = None;
            for (attempt, h) in std::iter::once(step).chain(FALLBACK_STEPS).enumerate() {
                probe.tensors_mut()[ti][j] = orig + h;
                let plus = probe.forward(samples)?;
                probe.tensors_mut()[ti][j] = orig - h;
                let minus = probe.forward(samples)?;
                if same_relu_pattern(&plus, &trace) && same_relu_pattern(&minus, &trace) {
                    numeric = Some(
                        (probe.loss(&plus, target)? - probe.loss(&minus, target)?) / (2.0 * h),
                    );
                    reduced_step += usize::from(attempt > 0);
                    break;
                }
            }
            probe.tensors_mut()[ti][j] = orig;
            let Some(numeric) = numeric else {
                skipped += 1;
                continue;
            };
            let a = analytic.tensors[ti][j];
            max_rel = max_rel.max(relative_error(a, numeric));
            max_abs = max_abs.max((a - numeric).abs());
        }
        tensors.push(TensorCheck {
            name,
            len,
            max_rel_error: max_rel,
            max_abs_error: max_abs,
            reduced_step,
            skipped,
        });
    }
    Ok(GradCheckReport {
        head: model.head_kind,
        length: samples.rows(),
        step,
        tensors,
    })
}

/// Builds the seeded random problem for `head` and checks it.
pub fn run(head: HeadKind, seed: u64, length: usize) -> Result<GradCheckReport> {
    let (model, samples, target) = random_problem(head, seed, length)?;
    check_gradients(&model, &samples, &target, DEFAULT_STEP)
}
