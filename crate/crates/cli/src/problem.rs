//! Problem description files.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rootlocus::{ContinuationConfig, Error, LocusKind, LocusProblem, Plant};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    #[serde(default)]
    pub zeros: Vec<[f64; 2]>,
    pub poles: Vec<[f64; 2]>,
    pub gain: f64,
    /// Dead time; optional for the delay locus, where it is swept instead.
    #[serde(default)]
    pub delay: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocusSection {
    pub kind: LocusKind,
    pub sigma0: f64,
    pub lambda_max: f64,
}

/// Overrides for [`ContinuationConfig`]; absent fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationSection {
    pub h0: Option<f64>,
    pub kappa_nominal: Option<f64>,
    pub delta_nominal: Option<f64>,
    pub corrector_tol: Option<f64>,
    pub max_newton_iters: Option<usize>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub max_points: Option<usize>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub plant: PlantSection,
    pub locus: LocusSection,
    #[serde(default)]
    pub continuation: ContinuationSection,
}

fn to_complex(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

fn field_path(field: &str) -> &'static str {
    match field {
        "sigma0" => "locus.sigma0",
        "lambda_max" => "locus.lambda_max",
        "delay" => "plant.delay",
        "poles" => "plant.poles",
        "zeros" => "plant.zeros",
        "gain" => "plant.gain",
        _ => "plant",
    }
}

impl ProblemFile {
    /// Validates the description into a problem and a continuation config.
    pub fn build(&self) -> Result<(LocusProblem, ContinuationConfig), String> {
        let kind = self.locus.kind;
        let delay = match (kind, self.plant.delay) {
            (_, Some(h)) => h,
            (LocusKind::Delay, None) => 0.0,
            (LocusKind::Gain, None) => return Err("plant.delay: required for the gain locus".into()),
        };
        let plant = Plant::new(to_complex(&self.plant.zeros), to_complex(&self.plant.poles), self.plant.gain, delay)
            .map_err(|e| match e {
                Error::InvalidPlant(m) if m.starts_with("gain") => format!("plant.gain: {m}"),
                Error::InvalidPlant(m) if m.starts_with("delay") => format!("plant.delay: {m}"),
                other => format!("plant: {other}"),
            })?;
        let problem = LocusProblem::new(kind, self.locus.sigma0, self.locus.lambda_max, plant).map_err(|e| match e {
            Error::InvalidProblem { field, reason } => format!("{}: {reason}", field_path(field)),
            other => other.to_string(),
        })?;
        let c = &self.continuation;
        let d = ContinuationConfig::for_problem(&problem);
        let config = ContinuationConfig {
            h0: c.h0.unwrap_or(d.h0),
            kappa_nominal: c.kappa_nominal.unwrap_or(d.kappa_nominal),
            delta_nominal: c.delta_nominal.unwrap_or(d.delta_nominal),
            corrector_tol: c.corrector_tol.unwrap_or(d.corrector_tol),
            max_newton_iters: c.max_newton_iters.unwrap_or(d.max_newton_iters),
            h_min: c.h_min.unwrap_or(d.h_min),
            h_max: c.h_max.unwrap_or(d.h_max),
            max_points: c.max_points.unwrap_or(d.max_points),
            workers: c.workers.unwrap_or(d.workers),
        };
        config.validate().map_err(|e| format!("continuation: {e}"))?;
        Ok((problem, config))
    }
}

/// Parses and validates a problem given as JSON text.
pub fn parse_problem_str(text: &str, path: &Path) -> Result<(LocusProblem, ContinuationConfig), CliError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.build().map_err(|message| CliError::Validation { path: path.to_path_buf(), message })
}

pub fn parse_problem(path: &Path) -> Result<(LocusProblem, ContinuationConfig), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: PathBuf::from(path), source })?;
    parse_problem_str(&text, path)
}
