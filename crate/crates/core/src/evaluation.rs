//! Leave-one-super-trial-out evaluation and its metrics.
//!
//! Fold `i` holds out every trial whose super-trial index is the `i`-th
//! smallest distinct index. Within one repeat the test predictions of all
//! folds are pooled before computing micro accuracy, macro precision or
//! Spearman's ρ; the aggregate is the mean over repeats. Per-fold values are
//! reported alongside.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{ChannelLayout, KinematicTrial, OsatsScores, SkillLevel};
use crate::nn::{FcnModel, HeadKind};
use crate::rng::derive_seed;
use crate::training::{predict, train_with_layout, TrainConfig, Trained};

pub const MACRO_CONVENTION: &str =
    "mean per-class precision over classes present in predictions or truths; \
a class present in truths but never predicted contributes 0";
pub const POOLING: &str =
    "per repeat, test predictions are pooled across folds before computing metrics; \
the aggregate is the mean over repeats";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub held_out_super_trial: u32,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// Dataset positions of the training trials.
    #[serde(skip)]
    pub train_indices: Vec<usize>,
    #[serde(skip)]
    pub test_indices: Vec<usize>,
}

/// One fold per distinct super-trial index, ascending.
pub fn loso_folds(dataset: &[KinematicTrial]) -> Result<Vec<FoldSpec>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let indices: BTreeSet<u32> = dataset.iter().map(|t| t.super_trial_index).collect();
    if indices.len() < 2 {
        return Err(Error::SingleSuperTrial);
    }
    Ok(indices
        .into_iter()
        .map(|held_out| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..dataset.len()).partition(|&i| dataset[i].super_trial_index == held_out);
            let ids = |idx: &[usize]| idx.iter().map(|&i| dataset[i].trial_id.clone()).collect();
            FoldSpec {
                held_out_super_trial: held_out,
                train_ids: ids(&train),
                test_ids: ids(&test),
                train_indices: train,
                test_indices: test,
            }
        })
        .collect())
}

fn check_pair(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    if a == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Fraction of exact matches.
pub fn micro_accuracy<T: PartialEq>(predictions: &[T], truths: &[T]) -> Result<f64> {
    check_pair(predictions.len(), truths.len())?;
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / truths.len() as f64)
}

/// Unweighted mean of per-class precision `TP / (TP + FP)`; see
/// [`MACRO_CONVENTION`] for classes that are never predicted.
pub fn macro_precision(predictions: &[SkillLevel], truths: &[SkillLevel]) -> Result<f64> {
    check_pair(predictions.len(), truths.len())?;
    let mut sum = 0.0;
    let mut n_classes = 0;
    for c in SkillLevel::ALL {
        let predicted = predictions.iter().filter(|&&p| p == c).count();
        let present = truths.contains(&c);
        if predicted == 0 && !present {
            continue;
        }
        let tp = predictions
            .iter()
            .zip(truths)
            .filter(|(&p, &t)| p == c && t == c)
            .count();
        sum += if predicted == 0 {
            0.0
        } else {
            tp as f64 / predicted as f64
        };
        n_classes += 1;
    }
    Ok(sum / n_classes as f64)
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Spearman's ρ: Pearson correlation of average ranks. Returns 0 when either
/// input is constant.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooShort(x.len()));
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoSummary {
    pub per_component: [f64; 6],
    pub mean: f64,
}

/// Spearman's ρ per OSATS component (fixed order) and their mean.
pub fn regression_rho(pred: &[OsatsScores], truth: &[OsatsScores]) -> Result<RhoSummary> {
    check_pair(pred.len(), truth.len())?;
    let mut per_component = [0.0; 6];
    for (k, rho) in per_component.iter_mut().enumerate() {
        let p: Vec<f64> = pred.iter().map(|s| s.to_array()[k]).collect();
        let t: Vec<f64> = truth.iter().map(|s| s.to_array()[k]).collect();
        *rho = spearman_rho(&p, &t)?;
    }
    Ok(RhoSummary {
        mean: per_component.iter().sum::<f64>() / 6.0,
        per_component,
    })
}

/// A test-set prediction next to its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Prediction {
    Skill {
        trial_id: String,
        predicted: SkillLevel,
        truth: SkillLevel,
    },
    Osats {
        trial_id: String,
        predicted: OsatsScores,
        truth: OsatsScores,
    },
}

/// Classification (micro, macro) or regression (ρ) metrics of one
/// prediction set; fields that do not apply are `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub micro: Option<f64>,
    #[serde(rename = "macro")]
    pub macro_precision: Option<f64>,
    pub rho_mean: Option<f64>,
    pub rho_components: Option<[f64; 6]>,
}

impl Metrics {
    pub fn of(predictions: &[Prediction]) -> Result<Metrics> {
        let mut p_cls = Vec::new();
        let mut t_cls = Vec::new();
        let mut p_reg = Vec::new();
        let mut t_reg = Vec::new();
        for p in predictions {
            match p {
                Prediction::Skill {
                    predicted, truth, ..
                } => {
                    p_cls.push(*predicted);
                    t_cls.push(*truth);
                }
                Prediction::Osats {
                    predicted, truth, ..
                } => {
                    p_reg.push(*predicted);
                    t_reg.push(*truth);
                }
            }
        }
        let mut m = Metrics::default();
        if !p_cls.is_empty() {
            m.micro = Some(micro_accuracy(&p_cls, &t_cls)?);
            m.macro_precision = Some(macro_precision(&p_cls, &t_cls)?);
        }
        if p_reg.len() >= 2 {
            let rho = regression_rho(&p_reg, &t_reg)?;
            m.rho_mean = Some(rho.mean);
            m.rho_components = Some(rho.per_component);
        }
        Ok(m)
    }

    fn mean(all: &[Metrics]) -> Metrics {
        let avg = |f: &dyn Fn(&Metrics) -> Option<f64>| -> Option<f64> {
            let v: Option<Vec<f64>> = all.iter().map(f).collect();
            v.filter(|v| !v.is_empty())
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        };
        let rho_components = (0..6)
            .map(|k| avg(&|m: &Metrics| m.rho_components.map(|c| c[k])))
            .collect::<Option<Vec<f64>>>()
            .map(|v| std::array::from_fn(|k| v[k]));
        Metrics {
            micro: avg(&|m| m.micro),
            macro_precision: avg(&|m| m.macro_precision),
            rho_mean: avg(&|m| m.rho_mean),
            rho_components,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub repeat: usize,
    pub fold: usize,
    pub held_out_super_trial: u32,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub repeat: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub head: HeadKind,
    pub n_repeats: usize,
    pub config_echo: TrainConfig,
    pub macro_convention: String,
    pub pooling: String,
    pub folds: Vec<FoldReport>,
    pub repeats: Vec<RepeatReport>,
    pub aggregate: Metrics,
}

/// Everything produced by one (repeat, fold) training run.
#[derive(Debug, Clone)]
pub struct FoldRun {
    pub repeat: usize,
    pub fold: usize,
    pub spec: FoldSpec,
    pub seed: u64,
    pub predictions: Vec<Prediction>,
    pub trained: Trained,
}

#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    /// Worker threads for independent (repeat, fold) runs; 0 means all cores.
    pub jobs: usize,
    pub layout: ChannelLayout,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            jobs: 1,
            layout: ChannelLayout::default(),
        }
    }
}

/// Seed of repeat `r` derived from the master seed.
pub fn repeat_seed(master: u64, repeat: usize) -> u64 {
    derive_seed(master, &[repeat as u64])
}

/// Training seed of fold `f` in repeat `r`.
pub fn fold_seed(master: u64, repeat: usize, fold: usize) -> u64 {
    derive_seed(master, &[repeat as u64, fold as u64])
}

fn run_fold(
    dataset: &[KinematicTrial],
    head: HeadKind,
    config: &TrainConfig,
    layout: &ChannelLayout,
    repeat: usize,
    fold: usize,
    spec: &FoldSpec,
) -> Result<FoldRun> {
    let seed = fold_seed(config.seed, repeat, fold);
    let cfg = TrainConfig {
        seed,
        ..config.clone()
    };
    let train_set: Vec<KinematicTrial> = spec
        .train_indices
        .iter()
        .map(|&i| dataset[i].clone())
        .collect();
    let trained = train_with_layout(&train_set, head, &cfg, layout)?;
    let predictions = spec
        .test_indices
        .iter()
        .map(|&i| {
            let trial = &dataset[i];
            let trace = predict(&trained.model, &trained.stats, trial)?;
            let missing = || {
                Error::LabelMismatch(format!(
                    "test trial {} lacks a {head} label",
                    trial.trial_id
                ))
            };
            Ok(match head {
                HeadKind::Classification => Prediction::Skill {
                    trial_id: trial.trial_id.clone(),
                    predicted: FcnModel::predict_class(&trace),
                    truth: trial.skill.ok_or_else(missing)?,
                },
                HeadKind::Regression => Prediction::Osats {
                    trial_id: trial.trial_id.clone(),
                    predicted: OsatsScores::from_array(std::array::from_fn(|k| trace.z[k])),
                    truth: trial.osats.ok_or_else(missing)?,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldRun {
        repeat,
        fold,
        spec: spec.clone(),
        seed,
        predictions,
        trained,
    })
}

/// Runs the LOSO protocol `n_repeats` times and reports the metrics.
pub fn run_experiment(
    dataset: &[KinematicTrial],
    head: HeadKind,
    config: &TrainConfig,
    n_repeats: usize,
) -> Result<EvalReport> {
    run_experiment_detailed(
        dataset,
        head,
        config,
        n_repeats,
        &ExperimentOptions::default(),
    )
    .map(|(r, _)| r)
}

/// [`run_experiment`] that also returns every fold's trained model and
/// predictions, ordered by (repeat, fold).
pub fn run_experiment_detailed(
    dataset: &[KinematicTrial],
    head: HeadKind,
    config: &TrainConfig,
    n_repeats: usize,
    options: &ExperimentOptions,
) -> Result<(EvalReport, Vec<FoldRun>)> {
    if n_repeats < 1 {
        return Err(Error::InvalidConfig("n_repeats must be >= 1".into()));
    }
    config.validate()?;
    let folds = loso_folds(dataset)?;
    let keys: Vec<(usize, usize)> = (0..n_repeats)
        .flat_map(|r| (0..folds.len()).map(move |f| (r, f)))
        .collect();
    let job = |&(r, f): &(usize, usize)| {
        run_fold(dataset, head, config, &options.layout, r, f, &folds[f]).map_err(|e| Error::Fold {
            repeat: r,
            fold: f,
            source: Box::new(e),
        })
    };
    let runs: Vec<FoldRun> = if options.jobs == 1 {
        keys.iter().map(job).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        // collect() keeps key order, so the reduction below is order-independent
        pool.install(|| keys.par_iter().map(job).collect::<Result<_>>())?
    };

    let mut fold_reports = Vec::with_capacity(runs.len());
    for run in &runs {
        fold_reports.push(FoldReport {
            repeat: run.repeat,
            fold: run.fold,
            held_out_super_trial: run.spec.held_out_super_trial,
            seed: run.seed,
            n_train: run.spec.train_indices.len(),
            n_test: run.spec.test_indices.len(),
            best_epoch: run.trained.history.best_epoch,
            best_validation_loss: run.trained.history.best_validation_loss,
            metrics: Metrics::of(&run.predictions)?,
        });
    }
    let mut repeats = Vec::with_capacity(n_repeats);
    for r in 0..n_repeats {
        let pooled: Vec<Prediction> = runs
            .iter()
            .filter(|run| run.repeat == r)
            .flat_map(|run| run.predictions.iter().cloned())
            .collect();
        repeats.push(RepeatReport {
            repeat: r,
            seed: repeat_seed(config.seed, r),
            metrics: Metrics::of(&pooled)?,
        });
    }
    let aggregate = Metrics::mean(
        &repeats
            .iter()
            .map(|r| r.metrics.clone())
            .collect::<Vec<_>>(),
    );

    let tasks: BTreeSet<&str> = dataset.iter().map(|t| t.task.as_str()).collect();
    let task = tasks.into_iter().collect::<Vec<_>>().join("+");
    let report = EvalReport {
        task,
        head,
        n_repeats,
        config_echo: config.clone(),
        macro_convention: MACRO_CONVENTION.into(),
        pooling: POOLING.into(),
        folds: fold_reports,
        repeats,
        aggregate,
    };
    Ok((report, runs))
}
