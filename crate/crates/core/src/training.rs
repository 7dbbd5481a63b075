//! Adam training loop with validation checkpointing, and the model file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{
    apply_standardization, fit_standardization, ChannelLayout, KinematicTrial, StandardizationStats,
};
use crate::matrix::Matrix;
use crate::nn::{
    Conv1dParams, FcnModel, ForwardTrace, Gradients, HeadKind, Target, KERNEL_LEN, STAGE1_FILTERS,
    STAGE2_FILTERS, STAGE3_FILTERS,
};
use crate::rng;

/// Epochs without validation improvement before an early stop.
pub const EARLY_STOP_PATIENCE: usize = 100;
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon_adam: f64,
    pub l2_lambda: f64,
    pub max_epochs: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    pub standardize: bool,
    /// Stop after [`EARLY_STOP_PATIENCE`] epochs without improvement.
    pub early_stop: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon_adam: 1e-8,
            l2_lambda: 1e-5,
            max_epochs: 1000,
            validation_fraction: 0.1,
            seed: 0,
            standardize: true,
            early_stop: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon_adam > 0.0 && self.epsilon_adam.is_finite()) {
            return bad("epsilon_adam must be > 0");
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad("l2_lambda must be >= 0");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        if self.max_epochs < 1 {
            return bad("max_epochs must be >= 1");
        }
        Ok(())
    }
}

/// First and second moment estimates, congruent with the model tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(model: &FcnModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One Adam update of a flat parameter slice at step `t` (already
/// incremented). The L2 term `l2_lambda * θ` is added to the raw gradient.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    config: &TrainConfig,
) {
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(t as i32);
    let c2 = 1.0 - b2.powi(t as i32);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        let g = g + config.l2_lambda * *p;
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon_adam);
    }
}

pub fn adam_step(
    model: &mut FcnModel,
    grads: &Gradients,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    if !grads.is_congruent(model)
        || state.m.len() != grads.tensors.len()
        || state
            .m
            .iter()
            .zip(&grads.tensors)
            .any(|(m, g)| m.len() != g.len())
    {
        return Err(Error::ShapeMismatch(
            "gradients or optimizer state do not match the model".into(),
        ));
    }
    state.t += 1;
    let t = state.t;
    for (((p, g), m), v) in model
        .tensors_mut()
        .into_iter()
        .zip(&grads.tensors)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        adam_update(p, g, m, v, t, config);
    }
    Ok(())
}

/// Validation split of trial indices; both halves are returned sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    /// Whether the split was stratified by skill label.
    pub stratified: bool,
}

/// Random disjoint split with `max(1, round(fraction * n))` validation trials.
///
/// When every trial carries a skill label the split is stratified: each class
/// gets a quota proportional to its size (largest remainder), and every class
/// with at least two members contributes at least one validation trial when
/// the total allows it.
pub fn split_validation<R: Rng + ?Sized>(
    trials: &[KinematicTrial],
    fraction: f64,
    rng: &mut R,
) -> Result<Split> {
    let n = trials.len();
    if n < 2 {
        return Err(Error::TooFewTrials(n));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(
            "validation fraction must lie in (0, 1)".into(),
        ));
    }
    let n_val = ((fraction * n as f64).round() as usize).clamp(1, n - 1);

    let stratified = trials.iter().all(|t| t.skill.is_some());
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, t) in trials.iter().enumerate() {
        let key = if stratified {
            t.skill.map_or(0, |s| s.index())
        } else {
            0
        };
        classes.entry(key).or_default().push(i);
    }
    let mut members: Vec<Vec<usize>> = classes.into_values().collect();
    for m in &mut members {
        m.shuffle(rng);
    }

    let ideal: Vec<f64> = members.iter().map(|m| fraction * m.len() as f64).collect();
    let mut quota: Vec<usize> = members
        .iter()
        .zip(&ideal)
        .map(|(m, &q)| {
            let (lo, hi) = if m.len() >= 2 {
                (1, m.len() - 1)
            } else {
                (0, 0)
            };
            (q.floor() as usize).clamp(lo, hi)
        })
        .collect();
    let remainder = |quota: &[usize], c: usize| ideal[c] - quota[c] as f64;
    let mut total: usize = quota.iter().sum();
    let largest_remainder = |quota: &[usize], eligible: &dyn Fn(usize) -> bool| {
        (0..members.len())
            .filter(|&c| eligible(c))
            .max_by(|&a, &b| {
                remainder(quota, a)
                    .total_cmp(&remainder(quota, b))
                    .then(b.cmp(&a))
            })
    };
    while total < n_val {
        // prefer classes that keep at least one training member
        let pick = largest_remainder(&quota, &|c| quota[c] + 1 < members[c].len())
            .or_else(|| largest_remainder(&quota, &|c| quota[c] < members[c].len()))
            .expect("n_val < n");
        quota[pick] += 1;
        total += 1;
    }
    while total > n_val {
        let pick = (0..members.len())
            .filter(|&c| quota[c] > 0)
            .min_by(|&a, &b| {
                remainder(&quota, a)
                    .total_cmp(&remainder(&quota, b))
                    .then(a.cmp(&b))
            })
            .expect("total > 0");
        quota[pick] -= 1;
        total -= 1;
    }

    let mut train = Vec::with_capacity(n - n_val);
    let mut validation = Vec::with_capacity(n_val);
    for (m, q) in members.iter().zip(&quota) {
        validation.extend_from_slice(&m[..*q]);
        train.extend_from_slice(&m[*q..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok(Split {
        train,
        validation,
        stratified,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean data loss of the per-trial updates in this epoch.
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub head: HeadKind,
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch of the returned snapshot.
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    pub stratified: bool,
    /// True when `validation_fraction` was 0 and the training split doubled as
    /// the validation set.
    pub validation_on_train: bool,
    pub stopped_early: bool,
}

/// Result of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: FcnModel,
    pub history: TrainHistory,
    pub stats: StandardizationStats,
}

/// The target a trial provides for `head`, if any.
pub fn target_for(trial: &KinematicTrial, head: HeadKind) -> Option<Target> {
    match head {
        HeadKind::Classification => trial.skill.map(Target::Skill),
        HeadKind::Regression => trial.osats.map(Target::Osats),
    }
}

fn targets(trials: &[KinematicTrial], head: HeadKind) -> Result<Vec<Target>> {
    trials
        .iter()
        .map(|t| {
            target_for(t, head).ok_or_else(|| {
                let missing = match head {
                    HeadKind::Classification => "skill",
                    HeadKind::Regression => "OSATS",
                };
                Error::LabelMismatch(format!("trial {} has no {missing} label", t.trial_id))
            })
        })
        .collect()
}

/// Mean data loss of `model` over already-standardized trials.
pub fn mean_loss(model: &FcnModel, trials: &[KinematicTrial], targets: &[Target]) -> Result<f64> {
    let mut sum = 0.0;
    for (t, y) in trials.iter().zip(targets) {
        sum += model.loss(&model.forward(&t.samples)?, y)?;
    }
    Ok(sum / trials.len() as f64)
}

/// Forward pass on a raw trial using the model's standardization.
pub fn predict(
    model: &FcnModel,
    stats: &StandardizationStats,
    trial: &KinematicTrial,
) -> Result<ForwardTrace> {
    predict_samples(model, stats, &trial.samples)
}

/// [`predict`] on a bare `l × 76` series.
pub fn predict_samples(
    model: &FcnModel,
    stats: &StandardizationStats,
    samples: &Matrix,
) -> Result<ForwardTrace> {
    model.forward(&stats.apply_matrix(samples))
}

/// Trains a fresh model on `dataset`.
///
/// Glorot-initialized from `config.seed`; standardization is fitted on the
/// training split only; every epoch visits the training split in a fresh
/// random order with one Adam step per trial; the parameters with the lowest
/// validation loss seen after any epoch are returned.
pub fn train(dataset: &[KinematicTrial], head: HeadKind, config: &TrainConfig) -> Result<Trained> {
    train_with_layout(dataset, head, config, &ChannelLayout::default())
}

/// [`train`] with an explicit channel layout (e.g. a manifest override).
pub fn train_with_layout(
    dataset: &[KinematicTrial],
    head: HeadKind,
    config: &TrainConfig,
    layout: &ChannelLayout,
) -> Result<Trained> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let all_targets = targets(dataset, head)?;

    let mut split_rng = rng::stream(config.seed, &[2]);
    let split = if config.validation_fraction > 0.0 {
        split_validation(dataset, config.validation_fraction, &mut split_rng)?
    } else {
        Split {
            train: (0..dataset.len()).collect(),
            validation: Vec::new(),
            stratified: false,
        }
    };
    let validation_on_train = split.validation.is_empty();

    let train_raw: Vec<KinematicTrial> = split.train.iter().map(|&i| dataset[i].clone()).collect();
    let stats = if config.standardize {
        fit_standardization(&train_raw)?
    } else {
        StandardizationStats::identity()
    };
    let standardize = |idx: &[usize]| -> Vec<KinematicTrial> {
        idx.iter()
            .map(|&i| apply_standardization(&dataset[i], &stats))
            .collect()
    };
    let train_set = standardize(&split.train);
    let train_targets: Vec<Target> = split.train.iter().map(|&i| all_targets[i]).collect();
    let (val_set, val_targets) = if validation_on_train {
        (train_set.clone(), train_targets.clone())
    } else {
        (
            standardize(&split.validation),
            split.validation.iter().map(|&i| all_targets[i]).collect(),
        )
    };

    let mut model = FcnModel::glorot(head, layout.clone(), &mut rng::stream(config.seed, &[1]))?;
    let mut adam = AdamState::new(&model);
    let mut shuffle_rng = rng::stream(config.seed, &[3]);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut epochs = Vec::with_capacity(config.max_epochs.min(4096));
    let mut best = (model.clone(), 0usize, f64::INFINITY);
    let mut stopped_early = false;
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut train_loss = 0.0;
        for &i in &order {
            let trace = model.forward(&train_set[i].samples)?;
            train_loss += model.loss(&trace, &train_targets[i])?;
            let grads = model.backward(&trace, &train_targets[i])?;
            adam_step(&mut model, &grads, &mut adam, config)?;
        }
        train_loss /= order.len() as f64;
        let validation_loss = mean_loss(&model, &val_set, &val_targets)?;
        if !(train_loss.is_finite() && validation_loss.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss,
        });
        if validation_loss < best.2 {
            best = (model.clone(), epoch, validation_loss);
        }
        if config.early_stop && epoch - best.1 >= EARLY_STOP_PATIENCE {
            stopped_early = epoch < config.max_epochs;
            break;
        }
    }

    let (model, best_epoch, best_validation_loss) = best;
    let ids = |idx: &[usize]| idx.iter().map(|&i| dataset[i].trial_id.clone()).collect();
    let history = TrainHistory {
        head,
        config: config.clone(),
        epochs,
        best_epoch,
        best_validation_loss,
        train_ids: ids(&split.train),
        validation_ids: if validation_on_train {
            ids(&split.train)
        } else {
            ids(&split.validation)
        },
        stratified: split.stratified,
        validation_on_train,
        stopped_early,
    };
    Ok(Trained {
        model,
        history,
        stats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Architecture {
    kernel_length: usize,
    stride: usize,
    padding: String,
    filters: [usize; 3],
}

impl Architecture {
    fn current() -> Self {
        Architecture {
            kernel_length: KERNEL_LEN,
            stride: 1,
            padding: "same".into(),
            filters: [STAGE1_FILTERS, STAGE2_FILTERS, STAGE3_FILTERS],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelParams {
    layer1: Vec<Conv1dParams>,
    layer2: Vec<Conv1dParams>,
    layer3: Conv1dParams,
    head_w: Vec<f64>,
    head_b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    comment: String,
    architecture: Architecture,
    head: HeadKind,
    layout: ChannelLayout,
    params: ModelParams,
    standardization: StandardizationStats,
}

const MODEL_COMMENT: &str = "layer1: one conv per (group, sub-cluster) in layout order, group-major; \
layer2: one conv per group; each conv stores kernels row-major as [out][in][tap] with tap 0 reading t-1, \
and biases [out]; head_w is row-major [output][filter] (n_out x 32); head_b is [output]; \
standardization holds per-channel mean and std applied as (x - mean) / std before the network";

pub fn model_to_json(model: &FcnModel, stats: &StandardizationStats) -> String {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        comment: MODEL_COMMENT.into(),
        architecture: Architecture::current(),
        head: model.head_kind,
        layout: model.layout.clone(),
        params: ModelParams {
            layer1: model.layer1.clone(),
            layer2: model.layer2.clone(),
            layer3: model.layer3.clone(),
            head_w: model.head_w.clone(),
            head_b: model.head_b.clone(),
        },
        standardization: stats.clone(),
    };
    serde_json::to_string(&file).expect("model serializes") + "\n"
}

pub fn model_from_json(text: &str) -> Result<(FcnModel, StandardizationStats)> {
    let corrupt = |m: String| Error::CorruptModel(m);
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    match value.get("format_version") {
        None => return Err(corrupt("missing format_version".into())),
        Some(v) if v.as_u64() != Some(MODEL_FORMAT_VERSION as u64) => {
            return Err(Error::VersionMismatch {
                found: v.to_string(),
                expected: MODEL_FORMAT_VERSION,
            })
        }
        Some(_) => {}
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    if file.architecture != Architecture::current() {
        return Err(corrupt(
            "architecture descriptor does not match this build".into(),
        ));
    }
    let model = FcnModel {
        head_kind: file.head,
        layout: file.layout,
        layer1: file.params.layer1,
        layer2: file.params.layer2,
        layer3: file.params.layer3,
        head_w: file.params.head_w,
        head_b: file.params.head_b,
    };
    model.validate().map_err(|e| corrupt(e.to_string()))?;
    file.standardization
        .validate()
        .map_err(|e| corrupt(e.to_string()))?;
    Ok((model, file.standardization))
}

pub fn save_model(model: &FcnModel, stats: &StandardizationStats, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(model, stats)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<(FcnModel, StandardizationStats)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{default_channel_layout, SkillLevel, Task};
    use crate::matrix::Matrix;

    fn labeled(n_per_class: usize) -> Vec<KinematicTrial> {
        let mut v = Vec::new();
        for s in SkillLevel::ALL {
            for i in 0..n_per_class {
                v.push(KinematicTrial {
                    trial_id: format!("{s}{i}"),
                    subject_id: format!("{s}"),
                    task: Task::Suturing,
                    super_trial_index: i as u32 + 1,
                    samples: Matrix::zeros(3, 76),
                    sample_rate_hz: 30.0,
                    skill: Some(s),
                    osats: None,
                });
            }
        }
        v
    }

    #[test]
    fn defaults_match_reference_hyperparameters() {
        let c = TrainConfig::default();
        assert_eq!(
            (c.learning_rate, c.beta1, c.beta2, c.l2_lambda, c.max_epochs),
            (0.001, 0.9, 0.999, 1e-5, 1000)
        );
        assert_eq!((c.epsilon_adam, c.validation_fraction), (1e-8, 0.1));
        c.validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                beta1: 1.0,
                ..Default::default()
            },
            TrainConfig {
                validation_fraction: 1.0,
                ..Default::default()
            },
            TrainConfig {
                max_epochs: 0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn adam_single_scalar_step() {
        let cfg = TrainConfig {
            l2_lambda: 0.0,
            ..Default::default()
        };
        let (mut p, mut m, mut v) = ([0.0], [0.0], [0.0]);
        adam_update(&mut p, &[1.0], &mut m, &mut v, 1, &cfg);
        let expected = -0.001 * 1.0 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-18);
    }

    #[test]
    fn adam_two_steps_match_recurrence() {
        let cfg = TrainConfig::default();
        let g = 0.37;
        let (mut p, mut m, mut v) = ([0.5], [0.0], [0.0]);
        adam_update(&mut p, &[g], &mut m, &mut v, 1, &cfg);
        adam_update(&mut p, &[g], &mut m, &mut v, 2, &cfg);

        let (mut th, mut mm, mut vv) = (0.5f64, 0.0f64, 0.0f64);
        for t in 1..=2 {
            let ge = g + 1e-5 * th;
            mm = 0.9 * mm + 0.1 * ge;
            vv = 0.999 * vv + 0.001 * ge * ge;
            let mh = mm / (1.0 - 0.9f64.powi(t));
            let vh = vv / (1.0 - 0.999f64.powi(t));
            th -= 0.001 * mh / (vh.sqrt() + 1e-8);
        }
        assert!((p[0] - th).abs() <= 1e-15);
    }

    #[test]
    fn zero_gradient_adam_is_identity_without_l2() {
        let mut model = FcnModel::glorot(
            HeadKind::Classification,
            default_channel_layout(),
            &mut rng::seeded(2),
        )
        .unwrap();
        let before = model.clone();
        let mut state = AdamState::new(&model);
        let cfg = TrainConfig {
            l2_lambda: 0.0,
            ..Default::default()
        };
        let zero = Gradients::zeros_like(&model);
        adam_step(&mut model, &zero, &mut state, &cfg).unwrap();
        assert_eq!(model, before);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn adam_rejects_incongruent_gradients() {
        let mut model = FcnModel::zeros(HeadKind::Regression, default_channel_layout()).unwrap();
        let mut state = AdamState::new(&model);
        let mut g = Gradients::zeros_like(&model);
        g.tensors.pop();
        assert!(matches!(
            adam_step(&mut model, &g, &mut state, &TrainConfig::default()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn split_counts() {
        let ten: Vec<KinematicTrial> = labeled(4).into_iter().take(10).collect();
        let s = split_validation(&ten, 0.1, &mut rng::seeded(0)).unwrap();
        assert_eq!((s.train.len(), s.validation.len()), (9, 1));
        assert_eq!(s, split_validation(&ten, 0.1, &mut rng::seeded(0)).unwrap());

        let thirty = labeled(10);
        let s = split_validation(&thirty, 0.2, &mut rng::seeded(5)).unwrap();
        assert_eq!(s.validation.len(), 6);
        assert!(s.stratified);
        for c in SkillLevel::ALL {
            let k = s
                .validation
                .iter()
                .filter(|&&i| thirty[i].skill == Some(c))
                .count();
            assert_eq!(k, 2);
        }
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn split_needs_two_trials() {
        let one: Vec<KinematicTrial> = labeled(1).into_iter().take(1).collect();
        assert!(matches!(
            split_validation(&one, 0.5, &mut rng::seeded(0)),
            Err(Error::TooFewTrials(1))
        ));
    }

    #[test]
    fn train_checks_labels() {
        let data = labeled(2);
        assert!(matches!(
            train(&data, HeadKind::Regression, &TrainConfig::default()),
            Err(Error::LabelMismatch(_))
        ));
        assert!(matches!(
            train(&[], HeadKind::Classification, &TrainConfig::default()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn version_and_truncation_errors() {
        let model = FcnModel::zeros(HeadKind::Classification, default_channel_layout()).unwrap();
        let json = model_to_json(&model, &StandardizationStats::identity());
        assert!(matches!(
            model_from_json(&json[..json.len() / 2]),
            Err(Error::CorruptModel(_))
        ));
        let v0 = json.replacen("\"format_version\":1", "\"format_version\":\"0\"", 1);
        assert!(matches!(
            model_from_json(&v0),
            Err(Error::VersionMismatch { .. })
        ));
        let (back, stats) = model_from_json(&json).unwrap();
        assert_eq!(back, model);
        assert_eq!(stats, StandardizationStats::identity());
    }
}
