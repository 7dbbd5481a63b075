//! Class activation maps.
//!
//! For output `c`, `M_c(t) = Σ_k W[c][k] · A_k(t)` over the 32 final feature
//! maps. Because the head sees the time-mean of `A`, the pre-activation output
//! satisfies `z_c = mean_t M_c(t) + b[c]`; the head bias never enters `M`.
//! Regression outputs are explained the same way, one OSATS component at a
//! time.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::KinematicTrial;
use crate::nn::{FcnModel, ForwardTrace, STAGE3_FILTERS};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CamResult {
    pub output_index: usize,
    /// Raw per-timestamp contribution `M_c(t)`.
    pub values: Vec<f64>,
    /// `values` min–max scaled to [0, 1]; all zeros when `values` is constant.
    pub normalized: Vec<f64>,
    /// `mean_t M_c(t) + b[c]`, which reproduces `z_c`.
    pub z_check: f64,
}

pub fn compute_cam(
    model: &FcnModel,
    trace: &ForwardTrace,
    output_index: usize,
) -> Result<CamResult> {
    let n_out = model.n_outputs();
    if output_index >= n_out {
        return Err(Error::IndexOutOfRange {
            index: output_index,
            n_out,
        });
    }
    let a = &trace.activations;
    if a.rows() != STAGE3_FILTERS || trace.z.len() != n_out || a.cols() == 0 {
        return Err(Error::TraceMismatch(format!(
            "expected {STAGE3_FILTERS} final maps and {n_out} outputs, got {} and {}",
            a.rows(),
            trace.z.len()
        )));
    }
    let w = &model.head_w[output_index * STAGE3_FILTERS..(output_index + 1) * STAGE3_FILTERS];
    let mut values = vec![0.0; a.cols()];
    for (k, wk) in w.iter().enumerate() {
        for (m, x) in values.iter_mut().zip(a.row(k)) {
            *m += wk * x;
        }
    }
    let z_check = values.iter().sum::<f64>() / values.len() as f64 + model.head_b[output_index];
    Ok(CamResult {
        output_index,
        normalized: normalize(&values),
        values,
        z_check,
    })
}

/// Min–max scaling to [0, 1]; a constant input maps to all zeros.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return vec![0.0; values.len()];
    }
    let span = hi - lo;
    values
        .iter()
        .map(|v| ((v - lo) / span).clamp(0.0, 1.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            _ => Err(format!("unknown format {s:?} (expected csv or json)")),
        }
    }
}

/// A CAM with the display name of its output neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedCam<'a> {
    pub name: &'a str,
    pub cam: &'a CamResult,
}

#[derive(Serialize)]
struct JsonOutput<'a> {
    name: &'a str,
    output_index: usize,
    z_check: f64,
    raw: &'a [f64],
    normalized: &'a [f64],
}

#[derive(Serialize)]
struct JsonTrajectory {
    group: String,
    channels: [usize; 3],
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

#[derive(Serialize)]
struct JsonExport<'a> {
    trial_id: &'a str,
    sample_rate_hz: f64,
    timestamp_index: Vec<usize>,
    time_seconds: Vec<f64>,
    outputs: Vec<JsonOutput<'a>>,
    trajectories: Vec<JsonTrajectory>,
}

fn check_lengths(trial: &KinematicTrial, cams: &[NamedCam<'_>]) -> Result<()> {
    for c in cams {
        if c.cam.values.len() != trial.len() || c.cam.normalized.len() != trial.len() {
            return Err(Error::LengthMismatch {
                left: trial.len(),
                right: c.cam.values.len(),
            });
        }
    }
    Ok(())
}

/// CSV with columns `timestamp_index, time_seconds`, then `<name>_raw,
/// <name>_norm` per output, then the Cartesian position channels of each
/// manipulator (`<group>_x, <group>_y, <group>_z`) taken from `trial` as given.
pub fn cam_csv(trial: &KinematicTrial, cams: &[NamedCam<'_>], model: &FcnModel) -> Result<String> {
    check_lengths(trial, cams)?;
    let cartesian = model.layout.cartesian_channels();
    let mut out = String::from("timestamp_index,time_seconds");
    for c in cams {
        write!(out, ",{0}_raw,{0}_norm", c.name).expect("string write");
    }
    for (g, _) in &cartesian {
        write!(out, ",{g}_x,{g}_y,{g}_z").expect("string write");
    }
    out.push('\n');
    for t in 0..trial.len() {
        write!(out, "{t},{:.16e}", t as f64 / trial.sample_rate_hz).expect("string write");
        for c in cams {
            write!(
                out,
                ",{:.16e},{:.16e}",
                c.cam.values[t], c.cam.normalized[t]
            )
            .expect("string write");
        }
        for (_, ch) in &cartesian {
            for &i in ch {
                write!(out, ",{:.16e}", trial.samples.get(t, i)).expect("string write");
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn cam_json(trial: &KinematicTrial, cams: &[NamedCam<'_>], model: &FcnModel) -> Result<String> {
    check_lengths(trial, cams)?;
    let l = trial.len();
    let column = |i: usize| {
        (0..l)
            .map(|t| trial.samples.get(t, i))
            .collect::<Vec<f64>>()
    };
    let doc = JsonExport {
        trial_id: &trial.trial_id,
        sample_rate_hz: trial.sample_rate_hz,
        timestamp_index: (0..l).collect(),
        time_seconds: (0..l).map(|t| t as f64 / trial.sample_rate_hz).collect(),
        outputs: cams
            .iter()
            .map(|c| JsonOutput {
                name: c.name,
                output_index: c.cam.output_index,
                z_check: c.cam.z_check,
                raw: &c.cam.values,
                normalized: &c.cam.normalized,
            })
            .collect(),
        trajectories: model
            .layout
            .cartesian_channels()
            .into_iter()
            .map(|(group, ch)| JsonTrajectory {
                group,
                channels: ch,
                x: column(ch[0]),
                y: column(ch[1]),
                z: column(ch[2]),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc).expect("export serializes") + "\n")
}

pub fn export_cam(
    trial: &KinematicTrial,
    cams: &[NamedCam<'_>],
    model: &FcnModel,
    path: &Path,
    format: ExportFormat,
) -> Result<()> {
    let text = match format {
        ExportFormat::Csv => cam_csv(trial, cams, model)?,
        ExportFormat::Json => cam_json(trial, cams, model)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
