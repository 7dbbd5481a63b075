//! Kinematic trials, channel layout, dataset manifests and standardization.
//!
//! A trial is an `l × 76` matrix recorded at 30 Hz: four manipulators
//! (master left/right, slave left/right) with 19 variables each. The network
//! consumes the channels through a [`ChannelLayout`] that groups them by
//! manipulator and then into five sub-clusters per manipulator.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

pub const N_CHANNELS: usize = 76;
pub const CHANNELS_PER_GROUP: usize = 19;
pub const SUB_CLUSTER_SIZES: [usize; 5] = [3, 3, 3, 9, 1];
pub const GROUP_NAMES: [&str; 4] = ["ML", "MR", "SL", "SR"];
pub const SUB_CLUSTER_NAMES: [&str; 5] = [
    "cartesian",
    "linear_velocity",
    "rotational_velocity",
    "rotation_matrix",
    "gripper",
];
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 30.0;
/// Lower bound applied to fitted standard deviations.
pub const STD_FLOOR: f64 = 1e-8;
pub const MIN_TRIAL_LENGTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SkillLevel {
    #[serde(rename = "N", alias = "novice", alias = "Novice")]
    Novice,
    #[serde(rename = "I", alias = "intermediate", alias = "Intermediate")]
    Intermediate,
    #[serde(rename = "E", alias = "expert", alias = "Expert")]
    Expert,
}

impl SkillLevel {
    pub const ALL: [SkillLevel; 3] = [
        SkillLevel::Novice,
        SkillLevel::Intermediate,
        SkillLevel::Expert,
    ];

    /// Output-neuron index of this class.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SkillLevel::Novice => "novice",
            SkillLevel::Intermediate => "intermediate",
            SkillLevel::Expert => "expert",
        }
    }
}

impl fmt::Display for SkillLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The six OSATS rating components, in output-neuron order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OsatsScores {
    pub respect_for_tissue: f64,
    pub suture_needle_handling: f64,
    pub time_and_motion: f64,
    pub flow_of_operation: f64,
    pub overall_performance: f64,
    pub quality_of_final_product: f64,
}

impl OsatsScores {
    pub const COMPONENTS: [&'static str; 6] = [
        "respect_for_tissue",
        "suture_needle_handling",
        "time_and_motion",
        "flow_of_operation",
        "overall_performance",
        "quality_of_final_product",
    ];

    pub fn from_array(v: [f64; 6]) -> Self {
        OsatsScores {
            respect_for_tissue: v[0],
            suture_needle_handling: v[1],
            time_and_motion: v[2],
            flow_of_operation: v[3],
            overall_performance: v[4],
            quality_of_final_product: v[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.respect_for_tissue,
            self.suture_needle_handling,
            self.time_and_motion,
            self.flow_of_operation,
            self.overall_performance,
            self.quality_of_final_product,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    #[serde(alias = "suturing")]
    Suturing,
    #[serde(
        rename = "Needle_Passing",
        alias = "NeedlePassing",
        alias = "needle_passing"
    )]
    NeedlePassing,
    #[serde(rename = "Knot_Tying", alias = "KnotTying", alias = "knot_tying")]
    KnotTying,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Suturing, Task::NeedlePassing, Task::KnotTying];

    /// Name as used in JIGSAWS file names.
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Suturing => "Suturing",
            Task::NeedlePassing => "Needle_Passing",
            Task::KnotTying => "Knot_Tying",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "suturing" => Ok(Task::Suturing),
            "needlepassing" => Ok(Task::NeedlePassing),
            "knottying" => Ok(Task::KnotTying),
            _ => Err(format!(
                "unknown task {s:?} (expected Suturing, Needle_Passing or Knot_Tying)"
            )),
        }
    }
}

/// One recorded performance of a task.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTrial {
    pub trial_id: String,
    pub subject_id: String,
    pub task: Task,
    /// Repetition number (1-based); the LOSO fold key.
    pub super_trial_index: u32,
    /// `l × 76`, time-major.
    pub samples: Matrix,
    pub sample_rate_hz: f64,
    pub skill: Option<SkillLevel>,
    pub osats: Option<OsatsScores>,
}

impl KinematicTrial {
    /// Checks the shape and value invariants (labels are not required).
    pub fn validate(&self) -> Result<()> {
        if self.samples.cols() != N_CHANNELS {
            return Err(Error::InvalidTrial(format!(
                "{}: expected {N_CHANNELS} channels, got {}",
                self.trial_id,
                self.samples.cols()
            )));
        }
        if self.samples.rows() < MIN_TRIAL_LENGTH {
            return Err(Error::LengthTooShort(self.samples.rows()));
        }
        if !self.samples.all_finite() {
            return Err(Error::InvalidTrial(format!(
                "{}: non-finite sample",
                self.trial_id
            )));
        }
        if self.super_trial_index < 1 {
            return Err(Error::InvalidTrial(format!(
                "{}: super_trial_index must be >= 1",
                self.trial_id
            )));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidTrial(format!(
                "{}: sample rate must be positive",
                self.trial_id
            )));
        }
        if let Some(o) = &self.osats {
            if !o.is_finite() {
                return Err(Error::InvalidTrial(format!(
                    "{}: non-finite OSATS score",
                    self.trial_id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.rows() == 0
    }

    pub fn is_labeled(&self) -> bool {
        self.skill.is_some() || self.osats.is_some()
    }
}

/// JIGSAWS-style identifier, e.g. `Suturing_B001`.
pub fn trial_id(task: Task, subject_id: &str, super_trial_index: u32) -> String {
    format!("{}_{}{:03}", task.as_str(), subject_id, super_trial_index)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelGroup {
    pub name: String,
    pub sub_clusters: Vec<Vec<usize>>,
}

/// Maps the 76 input channels onto 4 manipulator groups × 5 sub-clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelLayout {
    pub groups: Vec<ChannelGroup>,
}

impl Default for ChannelLayout {
    fn default() -> Self {
        default_channel_layout()
    }
}

/// Consecutive 19-channel blocks per manipulator, sub-clusters in the order
/// Cartesian position, linear velocity, rotational velocity, rotation matrix,
/// gripper.
pub fn default_channel_layout() -> ChannelLayout {
    let groups = GROUP_NAMES
        .iter()
        .enumerate()
        .map(|(g, name)| {
            let mut next = g * CHANNELS_PER_GROUP;
            let sub_clusters = SUB_CLUSTER_SIZES
                .iter()
                .map(|&n| {
                    let ids: Vec<usize> = (next..next + n).collect();
                    next += n;
                    ids
                })
                .collect();
            ChannelGroup {
                name: (*name).to_string(),
                sub_clusters,
            }
        })
        .collect();
    ChannelLayout { groups }
}

impl ChannelLayout {
    /// Column order of the JIGSAWS kinematics files: per manipulator, position
    /// (3), rotation matrix (9), linear velocity (3), rotational velocity (3),
    /// gripper (1).
    pub fn jigsaws_file_order() -> ChannelLayout {
        let groups = GROUP_NAMES
            .iter()
            .enumerate()
            .map(|(g, name)| {
                let b = g * CHANNELS_PER_GROUP;
                ChannelGroup {
                    name: (*name).to_string(),
                    sub_clusters: vec![
                        (b..b + 3).collect(),
                        (b + 12..b + 15).collect(),
                        (b + 15..b + 18).collect(),
                        (b + 3..b + 12).collect(),
                        vec![b + 18],
                    ],
                }
            })
            .collect();
        ChannelLayout { groups }
    }

    pub fn validate(&self) -> Result<()> {
        let names: Vec<&str> = self.groups.iter().map(|g| g.name.as_str()).collect();
        if names != GROUP_NAMES {
            return Err(Error::InvalidLayout(format!(
                "groups must be {GROUP_NAMES:?} in order, got {names:?}"
            )));
        }
        let mut seen = [false; N_CHANNELS];
        for g in &self.groups {
            let sizes: Vec<usize> = g.sub_clusters.iter().map(Vec::len).collect();
            if sizes != SUB_CLUSTER_SIZES {
                return Err(Error::InvalidLayout(format!(
                    "group {}: sub-cluster sizes must be {SUB_CLUSTER_SIZES:?}, got {sizes:?}",
                    g.name
                )));
            }
            for &c in g.sub_clusters.iter().flatten() {
                if c >= N_CHANNELS {
                    return Err(Error::InvalidLayout(format!("channel {c} out of range")));
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(Error::InvalidLayout(format!("channel {c} assigned twice")));
                }
            }
        }
        // 76 distinct in-range entries imply full coverage.
        Ok(())
    }

    /// `(group, sub_cluster)` holding `channel`, both 0-based.
    pub fn locate(&self, channel: usize) -> Option<(usize, usize)> {
        self.groups.iter().enumerate().find_map(|(gi, g)| {
            g.sub_clusters
                .iter()
                .position(|s| s.contains(&channel))
                .map(|si| (gi, si))
        })
    }

    /// Sub-clusters in (group, sub-cluster) order.
    pub fn sub_clusters(&self) -> impl Iterator<Item = &[usize]> {
        self.groups
            .iter()
            .flat_map(|g| g.sub_clusters.iter().map(Vec::as_slice))
    }

    /// Cartesian-position channels (first sub-cluster) of each group.
    pub fn cartesian_channels(&self) -> Vec<(String, [usize; 3])> {
        self.groups
            .iter()
            .map(|g| {
                let s = &g.sub_clusters[0];
                (g.name.clone(), [s[0], s[1], s[2]])
            })
            .collect()
    }
}

/// One trial reference inside a [`DatasetManifest`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub task: Task,
    pub subject_id: String,
    pub super_trial_index: u32,
    /// Resolved against the manifest's directory when relative.
    pub kinematics_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skill: Option<SkillLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub osats: Option<OsatsScores>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<ChannelLayout>,
    pub trials: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_path_buf(),
            source,
        })?;
        if let Some(layout) = &m.layout {
            layout.validate()?;
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn layout(&self) -> ChannelLayout {
        self.layout.clone().unwrap_or_default()
    }
}

/// Reads a kinematics text file: one timestamp per nonempty line, 76
/// whitespace-separated decimals per line.
pub fn parse_kinematics(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kinematics_str(&text, path)
}

/// Like [`parse_kinematics`] on in-memory text; `origin` labels errors.
pub fn parse_kinematics_str(text: &str, origin: &Path) -> Result<Matrix> {
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedRow {
            path: origin.to_path_buf(),
            line: line_no,
            reason,
        };
        let start = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| malformed(format!("unparsable number {tok:?}")))?;
            if !v.is_finite() {
                return Err(malformed(format!("non-finite value {tok:?}")));
            }
            data.push(v);
        }
        let n = data.len() - start;
        if n != N_CHANNELS {
            return Err(malformed(format!(
                "expected {N_CHANNELS} columns, found {n}"
            )));
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyFile(origin.to_path_buf()));
    }
    Ok(Matrix::from_vec(rows, N_CHANNELS, data))
}

/// Text form read by [`parse_kinematics_str`]; values carry 17 significant
/// digits so the round trip is exact.
pub fn format_kinematics(samples: &Matrix) -> String {
    let mut out = String::with_capacity(samples.rows() * samples.cols() * 24);
    for r in 0..samples.rows() {
        for (c, v) in samples.row(r).iter().enumerate() {
            if c > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_kinematics(path: &Path, samples: &Matrix) -> Result<()> {
    fs::write(path, format_kinematics(samples)).map_err(|e| Error::io(path, e))
}

/// Loads every manifest entry. Relative kinematics paths resolve against
/// `base_dir`.
pub fn load_dataset(manifest: &DatasetManifest, base_dir: &Path) -> Result<Vec<KinematicTrial>> {
    let mut keys = HashSet::new();
    for e in &manifest.trials {
        if !keys.insert((e.subject_id.as_str(), e.task, e.super_trial_index)) {
            return Err(Error::DuplicateTrial {
                subject_id: e.subject_id.clone(),
                task: e.task.to_string(),
                super_trial_index: e.super_trial_index,
            });
        }
    }
    manifest
        .trials
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let id = trial_id(e.task, &e.subject_id, e.super_trial_index);
            let tag = |source: Error| Error::Entry {
                index,
                trial_id: id.clone(),
                source: Box::new(source),
            };
            let path = if e.kinematics_path.is_absolute() {
                e.kinematics_path.clone()
            } else {
                base_dir.join(&e.kinematics_path)
            };
            let samples = parse_kinematics(&path).map_err(tag)?;
            let trial = KinematicTrial {
                trial_id: id.clone(),
                subject_id: e.subject_id.clone(),
                task: e.task,
                super_trial_index: e.super_trial_index,
                samples,
                sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
                skill: e.skill,
                osats: e.osats,
            };
            trial.validate().map_err(tag)?;
            if !trial.is_labeled() {
                return Err(tag(Error::InvalidTrial(
                    "entry has neither skill nor osats".into(),
                )));
            }
            Ok(trial)
        })
        .collect()
}

/// Reads a manifest file and loads its trials.
pub fn load_manifest_file(path: &Path) -> Result<(DatasetManifest, Vec<KinematicTrial>)> {
    let manifest = DatasetManifest::read(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let trials = load_dataset(&manifest, base)?;
    Ok((manifest, trials))
}

/// Per-channel z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    /// Mean 0, std 1 on every channel.
    pub fn identity() -> Self {
        StandardizationStats {
            mean: vec![0.0; N_CHANNELS],
            std: vec![1.0; N_CHANNELS],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != N_CHANNELS || self.std.len() != N_CHANNELS {
            return Err(Error::ShapeMismatch(format!(
                "standardization needs {N_CHANNELS} means and stds, got {} and {}",
                self.mean.len(),
                self.std.len()
            )));
        }
        if self.mean.iter().any(|m| !m.is_finite())
            || self.std.iter().any(|s| !s.is_finite() || *s < STD_FLOOR)
        {
            return Err(Error::ShapeMismatch(
                "standardization values out of range".into(),
            ));
        }
        Ok(())
    }

    pub fn apply_matrix(&self, samples: &Matrix) -> Matrix {
        let mut out = samples.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.mean[c]) / self.std[c];
            }
        }
        out
    }

    pub fn invert_matrix(&self, standardized: &Matrix) -> Matrix {
        let mut out = standardized.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = *v * self.std[c] + self.mean[c];
            }
        }
        out
    }
}

/// Pools every timestamp of every trial and computes per-channel mean and
/// population standard deviation (floored at [`STD_FLOOR`]).
pub fn fit_standardization(trials: &[KinematicTrial]) -> Result<StandardizationStats> {
    let n: usize = trials.iter().map(KinematicTrial::len).sum();
    if trials.is_empty() || n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut mean = vec![0.0; N_CHANNELS];
    for t in trials {
        for r in 0..t.samples.rows() {
            for (m, v) in mean.iter_mut().zip(t.samples.row(r)) {
                *m += v;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; N_CHANNELS];
    for t in trials {
        for r in 0..t.samples.rows() {
            for ((s, v), m) in var.iter_mut().zip(t.samples.row(r)).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
    }
    let std = var
        .into_iter()
        .map(|s| (s / n as f64).sqrt().max(STD_FLOOR))
        .collect();
    Ok(StandardizationStats { mean, std })
}

pub fn apply_standardization(
    trial: &KinematicTrial,
    stats: &StandardizationStats,
) -> KinematicTrial {
    KinematicTrial {
        samples: stats.apply_matrix(&trial.samples),
        ..trial.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_per_class: usize,
    /// Inclusive bounds on the trial length.
    pub length_range: (usize, usize),
    /// Peak motif amplitude in units of the noise standard deviation.
    pub motif_amplitude: f64,
    pub task: Task,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_per_class: 10,
            length_range: (64, 128),
            motif_amplitude: 3.0,
            task: Task::Suturing,
        }
    }
}

/// Where the generator planted the class motif in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifWindow {
    pub trial_id: String,
    /// First timestamp of the window.
    pub start: usize,
    /// One past the last timestamp.
    pub end: usize,
    pub channels: Vec<usize>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub trials: Vec<KinematicTrial>,
    pub motifs: Vec<MotifWindow>,
}

const SUPER_TRIALS_PER_SUBJECT: usize = 5;
const MOTIF_PERIOD: f64 = 8.0;

/// Labeled synthetic trials for desk-scale checks.
///
/// Every channel carries Gaussian noise under a per-channel scale and offset.
/// A trial of class `c` additionally carries a tapered sinusoid on the
/// position and velocity channels of manipulator group `c` (9 channels)
/// inside a random window covering a quarter of the trial. Each class has
/// `ceil(n_per_class / 5)` subjects with super-trials numbered 1..=5, so the
/// data splits into LOSO folds like the real corpus. OSATS targets grow with
/// the class index and with the trial's motif amplitude.
pub fn synth_dataset(seed: u64, config: &SynthConfig) -> Result<SynthDataset> {
    let (lo, hi) = config.length_range;
    if config.n_per_class < 1 {
        return Err(Error::InvalidConfig("n_per_class must be >= 1".into()));
    }
    if !(30 <= lo && lo <= hi && hi <= 2000) {
        return Err(Error::InvalidConfig(format!(
            "length_range ({lo}, {hi}) must satisfy 30 <= min <= max <= 2000"
        )));
    }
    if !(config.motif_amplitude.is_finite() && config.motif_amplitude >= 0.0) {
        return Err(Error::InvalidConfig(
            "motif_amplitude must be finite and >= 0".into(),
        ));
    }

    let layout = default_channel_layout();
    let mut rng = rng::stream(seed, &[0x5e1f, config.task as u64]);
    let scale: Vec<f64> = (0..N_CHANNELS)
        .map(|_| 10f64.powf(rng.random_range(-1.0..1.0)))
        .collect();
    let offset: Vec<f64> = (0..N_CHANNELS)
        .map(|_| rng.random_range(-5.0..5.0))
        .collect();

    let mut trials = Vec::with_capacity(3 * config.n_per_class);
    let mut motifs = Vec::with_capacity(3 * config.n_per_class);
    for skill in SkillLevel::ALL {
        let class = skill.index();
        // Position plus linear and rotational velocity of one manipulator.
        let channels: Vec<usize> = layout.groups[class].sub_clusters[..3].concat();
        for i in 0..config.n_per_class {
            let subject_id = format!(
                "{}{}",
                ["N", "I", "E"][class],
                i / SUPER_TRIALS_PER_SUBJECT + 1
            );
            let super_trial_index = (i % SUPER_TRIALS_PER_SUBJECT + 1) as u32;
            let id = trial_id(config.task, &subject_id, super_trial_index);

            let len = rng.random_range(lo..=hi);
            let width = (len / 4).max(8).min(len);
            let start = rng.random_range(0..=len - width);
            let ratio = rng.random_range(0.75..1.25);
            let amplitude = config.motif_amplitude * ratio;
            let phase = rng.random_range(0.0..std::f64::consts::TAU);

            let mut samples = Matrix::zeros(len, N_CHANNELS);
            for t in 0..len {
                for c in 0..N_CHANNELS {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    samples.set(t, c, z);
                }
            }
            for t in start..start + width {
                let u = (t - start) as f64 / (width - 1).max(1) as f64;
                let taper = (std::f64::consts::PI * u).sin();
                let wave =
                    (std::f64::consts::TAU * (t - start) as f64 / MOTIF_PERIOD + phase).sin();
                for &c in &channels {
                    let v = samples.get(t, c) + amplitude * taper * wave;
                    samples.set(t, c, v);
                }
            }
            for t in 0..len {
                for (c, v) in samples.row_mut(t).iter_mut().enumerate() {
                    *v = *v * scale[c] + offset[c];
                }
            }

            let base = 2.0 + 1.5 * class as f64 + (ratio - 1.0);
            let osats = OsatsScores::from_array(std::array::from_fn(|k| base + 0.1 * k as f64));
            motifs.push(MotifWindow {
                trial_id: id.clone(),
                start,
                end: start + width,
                channels: channels.clone(),
                amplitude,
            });
            trials.push(KinematicTrial {
                trial_id: id,
                subject_id,
                task: config.task,
                super_trial_index,
                samples,
                sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
                skill: Some(skill),
                osats: Some(osats),
            });
        }
    }
    Ok(SynthDataset { trials, motifs })
}
