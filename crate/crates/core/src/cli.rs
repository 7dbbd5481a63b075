//! `skilleval` command-line interface.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::cam::{compute_cam, export_cam, ExportFormat, NamedCam};
use crate::evaluation::{run_experiment_detailed, ExperimentOptions};
use crate::gradcheck::{self, DEFAULT_TOLERANCE};
use crate::kinematics::{
    load_manifest_file, parse_kinematics, synth_dataset, write_kinematics, DatasetManifest,
    KinematicTrial, ManifestEntry, SynthConfig, Task,
};
use crate::nn::HeadKind;
use crate::training::{load_model, predict, save_model, train_with_layout, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "skilleval",
    version,
    about = "Surgical skill assessment from robot kinematics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic dataset (kinematics files, manifest, motif metadata).
    Synth(SynthArgs),
    /// Train one model on a manifest's trials for a task.
    Train(TrainArgs),
    /// Leave-one-super-trial-out evaluation with repeated trainings.
    Eval(EvalArgs),
    /// Export class activation maps of a trained model for one trial.
    Cam(CamArgs),
    /// Compare analytic gradients with central finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trials per skill class and task.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub per_class: u64,
    /// Comma-separated tasks.
    #[arg(long, value_delimiter = ',', default_value = "Suturing")]
    pub tasks: Vec<Task>,
    #[arg(long, default_value_t = 64)]
    pub length_min: usize,
    #[arg(long, default_value_t = 128)]
    pub length_max: usize,
    /// Motif amplitude in noise standard deviations.
    #[arg(long, default_value_t = 3.0)]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TrainingFlags {
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    /// L2 regularization strength.
    #[arg(long, default_value_t = 1e-5)]
    pub l2: f64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    /// Feed raw (unstandardized) channels to the network.
    #[arg(long)]
    pub no_standardize: bool,
    /// Stop after 100 epochs without validation improvement.
    #[arg(long)]
    pub early_stop: bool,
}

impl TrainingFlags {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            l2_lambda: self.l2,
            max_epochs: self.epochs as usize,
            validation_fraction: self.val_fraction,
            seed: self.seed,
            standardize: !self.no_standardize,
            early_stop: self.early_stop,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub task: Task,
    #[arg(long)]
    pub head: HeadKind,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Training history file [default: <out>.history.json].
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub task: Task,
    #[arg(long)]
    pub head: HeadKind,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    /// Report file to write.
    #[arg(long)]
    pub report: PathBuf,
    /// Parallel training runs (0 = all cores).
    #[arg(long, env = "SKILLEVAL_JOBS", default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Args)]
pub struct CamArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Kinematics text file of the trial to explain.
    #[arg(long)]
    pub kinematics: PathBuf,
    /// `all` or comma-separated 0-based output indices.
    #[arg(long, default_value = "all")]
    pub outputs: String,
    #[arg(long, default_value = "csv")]
    pub format: ExportFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Length of the random trial.
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(3..))]
    pub length: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Cam(a) => cmd_cam(&a),
        Command::Gradcheck(a) => cmd_gradcheck(&a),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let kin_dir = a.out.join("kinematics");
    fs::create_dir_all(&kin_dir).with_context(|| format!("creating {}", kin_dir.display()))?;
    let mut entries = Vec::new();
    let mut motifs = Vec::new();
    for &task in &a.tasks {
        let cfg = SynthConfig {
            n_per_class: a.per_class as usize,
            length_range: (a.length_min, a.length_max),
            motif_amplitude: a.amplitude,
            task,
        };
        let data = synth_dataset(a.seed, &cfg)?;
        for t in &data.trials {
            let rel = PathBuf::from("kinematics").join(format!("{}.txt", t.trial_id));
            write_kinematics(&a.out.join(&rel), &t.samples)?;
            entries.push(ManifestEntry {
                task,
                subject_id: t.subject_id.clone(),
                super_trial_index: t.super_trial_index,
                kinematics_path: rel,
                skill: t.skill,
                osats: t.osats,
            });
        }
        motifs.extend(data.motifs);
    }
    let manifest_path = a.out.join("manifest.json");
    DatasetManifest {
        layout: None,
        trials: entries,
    }
    .write(&manifest_path)?;
    write_json(&a.out.join("motifs.json"), &motifs)?;
    println!("{}", manifest_path.display());
    Ok(())
}

fn load_task(manifest: &Path, task: Task) -> Result<(DatasetManifest, Vec<KinematicTrial>)> {
    let (m, trials) = load_manifest_file(manifest)?;
    let trials: Vec<KinematicTrial> = trials.into_iter().filter(|t| t.task == task).collect();
    if trials.is_empty() {
        bail!("manifest {} has no {task} trials", manifest.display());
    }
    Ok((m, trials))
}

fn default_history_path(model: &Path) -> PathBuf {
    let stem = model
        .file_stem()
        .map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned());
    model.with_file_name(format!("{stem}.history.json"))
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let (manifest, trials) = load_task(&a.manifest, a.task)?;
    let config = a.training.config();
    let trained = train_with_layout(&trials, a.head, &config, &manifest.layout())?;
    save_model(&trained.model, &trained.stats, &a.out)?;
    let history_path = a
        .history
        .clone()
        .unwrap_or_else(|| default_history_path(&a.out));
    write_json(&history_path, &trained.history)?;
    let h = &trained.history;
    println!(
        "trained {} on {} trials (lr={}, l2={}, epochs={}); best epoch {} with validation loss {:.6}",
        a.head,
        trials.len(),
        config.learning_rate,
        config.l2_lambda,
        config.max_epochs,
        h.best_epoch,
        h.best_validation_loss
    );
    println!("model: {}", a.out.display());
    println!("history: {}", history_path.display());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let (manifest, trials) = load_task(&a.manifest, a.task)?;
    let options = ExperimentOptions {
        jobs: a.jobs,
        layout: manifest.layout(),
    };
    let (report, _) = run_experiment_detailed(
        &trials,
        a.head,
        &a.training.config(),
        a.repeats as usize,
        &options,
    )?;
    write_json(&a.report, &report)?;
    let m = &report.aggregate;
    match a.head {
        HeadKind::Classification => println!(
            "{} micro {:.3} macro {:.3} ({} repeats)",
            report.task,
            m.micro.unwrap_or(f64::NAN),
            m.macro_precision.unwrap_or(f64::NAN),
            report.n_repeats
        ),
        HeadKind::Regression => {
            let comps = m
                .rho_components
                .map(|c| {
                    c.iter()
                        .map(|v| format!("{v:.3}"))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .unwrap_or_default();
            println!(
                "{} rho {:.3} [{comps}] ({} repeats)",
                report.task,
                m.rho_mean.unwrap_or(f64::NAN),
                report.n_repeats
            );
        }
    }
    println!("report: {}", a.report.display());
    Ok(())
}

/// Parses `all` or a comma-separated list of 0-based indices.
pub fn parse_outputs(spec: &str, n_out: usize) -> Result<Vec<usize>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok((0..n_out).collect());
    }
    spec.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<usize>()
                .with_context(|| format!("output index {s:?} is not a non-negative integer"))
        })
        .collect()
}

fn cmd_cam(a: &CamArgs) -> Result<()> {
    let (model, stats) = load_model(&a.model)?;
    let samples = parse_kinematics(&a.kinematics)?;
    let trial = KinematicTrial {
        trial_id: a
            .kinematics
            .file_stem()
            .map_or_else(|| "trial".into(), |s| s.to_string_lossy().into_owned()),
        subject_id: String::new(),
        task: Task::Suturing,
        super_trial_index: 1,
        samples,
        sample_rate_hz: crate::kinematics::DEFAULT_SAMPLE_RATE_HZ,
        skill: None,
        osats: None,
    };
    trial.validate()?;
    let outputs = parse_outputs(&a.outputs, model.n_outputs())?;
    let trace = predict(&model, &stats, &trial)?;
    let cams = outputs
        .iter()
        .map(|&i| compute_cam(&model, &trace, i))
        .collect::<crate::Result<Vec<_>>>()?;
    let names = model.head_kind.output_names();
    let named: Vec<NamedCam<'_>> = cams
        .iter()
        .map(|c| NamedCam {
            name: names[c.output_index],
            cam: c,
        })
        .collect();
    export_cam(&trial, &named, &model, &a.out, a.format)?;
    println!(
        "{} CAM output(s) for {} ({} samples): {}",
        named.len(),
        trial.trial_id,
        trial.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_gradcheck(a: &GradcheckArgs) -> Result<()> {
    let mut failure = None;
    for head in [HeadKind::Classification, HeadKind::Regression] {
        let report = gradcheck::run(head, a.seed, a.length as usize)?;
        for t in &report.tensors {
            println!(
                "{head:<14} {:<40} n={:<5} max_rel_err={:.3e} max_abs_err={:.3e} reduced_step={} skipped={}",
                t.name, t.len, t.max_rel_error, t.max_abs_error, t.reduced_step, t.skipped
            );
        }
        println!("{head}: max relative error {:.3e}", report.max_rel_error());
        if failure.is_none() {
            if let Some(t) = report.first_failure(DEFAULT_TOLERANCE) {
                failure = Some(format!(
                    "{head} {}: max relative error {:.3e} (skipped {}) exceeds {DEFAULT_TOLERANCE:e}",
                    t.name, t.max_rel_error, t.skipped
                ));
            }
        }
    }
    match failure {
        Some(msg) => bail!("gradient check failed: {msg}"),
        None => {
            println!("gradient check passed (tolerance {DEFAULT_TOLERANCE:e})");
            Ok(())
        }
    }
}
