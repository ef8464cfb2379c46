//! Result files: JSON, CSV and plain text.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rootlocus::{CriticalKind, RootLocusResult, Termination};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const RESULT_FILE: &str = "result.json";
pub const CRITICAL_FILE: &str = "critical_points.csv";
pub const INDEX_FILE: &str = "trajectories.csv";
pub const INTERVALS_FILE: &str = "stability_intervals.txt";
pub const TRAJECTORY_DIR: &str = "trajectories";
pub const TRAJECTORY_HEADER: &str = "sigma,omega,lambda,residual";

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One trajectory as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFileRecord {
    pub id: usize,
    pub origin_kind: CriticalKind,
    pub termination: Termination,
    /// `(sigma, omega, lambda, residual)` per point.
    pub points: Vec<[f64; 4]>,
}

impl TrajectoryFileRecord {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRAJECTORY_HEADER);
        s.push('\n');
        for p in &self.points {
            let _ = writeln!(s, "{},{},{},{}", num(p[0]), num(p[1]), num(p[2]), num(p[3]));
        }
        s
    }

    pub fn parse_points(csv: &str) -> Result<Vec<[f64; 4]>, String> {
        let mut lines = csv.lines();
        match lines.next() {
            Some(h) if h.trim() == TRAJECTORY_HEADER => {}
            other => return Err(format!("expected header `{TRAJECTORY_HEADER}`, found {other:?}")),
        }
        lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let v: Vec<f64> = l
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| format!("line {}: {e}", i + 2))?;
                <[f64; 4]>::try_from(v).map_err(|v| format!("line {}: expected 4 columns, got {}", i + 2, v.len()))
            })
            .collect()
    }
}

pub fn records_from_result(result: &RootLocusResult) -> Vec<TrajectoryFileRecord> {
    result
        .trajectories
        .iter()
        .enumerate()
        .map(|(id, t)| TrajectoryFileRecord {
            id,
            origin_kind: result.critical_points[t.origin].kind,
            termination: t.termination,
            points: t.points.iter().map(|p| [p.sigma, p.omega, p.lambda, p.residual]).collect(),
        })
        .collect()
}

fn trajectory_file(id: usize) -> String {
    format!("trajectory_{id:04}.csv")
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Write { path: path.clone(), source })?;
    Ok(path)
}

/// Writes every result file into `out_dir`; returns the paths written.
pub fn emit_results(result: &RootLocusResult, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let tdir = out_dir.join(TRAJECTORY_DIR);
    fs::create_dir_all(&tdir).map_err(|source| CliError::Write { path: tdir.clone(), source })?;
    let mut written = Vec::new();

    let json = serde_json::to_string_pretty(result).expect("result serializes");
    written.push(write(out_dir.join(RESULT_FILE), &(json + "\n"))?);

    let mut cp = String::from("id,kind,sigma,omega,lambda,multiplicity\n");
    for (i, p) in result.critical_points.iter().enumerate() {
        let _ = writeln!(
            cp,
            "{i},{},{},{},{},{}",
            p.kind.as_str(),
            num(p.root.re),
            num(p.root.im),
            num(p.lambda),
            p.multiplicity
        );
    }
    written.push(write(out_dir.join(CRITICAL_FILE), &cp)?);

    let mut index = String::from("id,origin,origin_kind,termination,branch,points,file\n");
    for rec in records_from_result(result) {
        let t = &result.trajectories[rec.id];
        let file = trajectory_file(rec.id);
        let _ = writeln!(
            index,
            "{},{},{},{},{},{},{}/{}",
            rec.id,
            t.origin,
            rec.origin_kind.as_str(),
            rec.termination.as_str(),
            t.branch.map(|b| b.to_string()).unwrap_or_default(),
            rec.points.len(),
            TRAJECTORY_DIR,
            file
        );
        written.push(write(tdir.join(&file), &rec.to_csv())?);
    }
    written.push(write(out_dir.join(INDEX_FILE), &index)?);

    let mut iv = String::from("# lambda_lo lambda_hi\n");
    for note in &result.notes {
        let _ = writeln!(iv, "# {note}");
    }
    for (a, b) in &result.stability_intervals {
        let _ = writeln!(iv, "{} {}", num(*a), num(*b));
    }
    written.push(write(out_dir.join(INTERVALS_FILE), &iv)?);
    Ok(written)
}

fn read(path: PathBuf) -> Result<String, CliError> {
    fs::read_to_string(&path).map_err(|source| CliError::Read { path, source })
}

/// Reads `result.json` back.
pub fn read_result(out_dir: &Path) -> Result<RootLocusResult, CliError> {
    let path = out_dir.join(RESULT_FILE);
    let text = read(path.clone())?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse { path, line: e.line(), column: e.column(), message: e.to_string() })
}

fn parse_enum<T: for<'de> Deserialize<'de>>(s: &str) -> Option<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
}

/// Reads the trajectory index and every per-trajectory CSV.
pub fn read_trajectory_records(out_dir: &Path) -> Result<Vec<TrajectoryFileRecord>, CliError> {
    let index_path = out_dir.join(INDEX_FILE);
    let index = read(index_path.clone())?;
    let bad = |line: usize, message: String| CliError::Parse { path: index_path.clone(), line, column: 1, message };
    let mut out = Vec::new();
    for (i, line) in index.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(bad(i + 1, format!("expected 7 columns, got {}", cols.len())));
        }
        let id = cols[0].parse().map_err(|e| bad(i + 1, format!("id: {e}")))?;
        let origin_kind = parse_enum(cols[2]).ok_or_else(|| bad(i + 1, format!("unknown kind {}", cols[2])))?;
        let termination = parse_enum(cols[3]).ok_or_else(|| bad(i + 1, format!("unknown termination {}", cols[3])))?;
        let tpath = out_dir.join(cols[6]);
        let csv = read(tpath.clone())?;
        let points = TrajectoryFileRecord::parse_points(&csv)
            .map_err(|message| CliError::Parse { path: tpath, line: 0, column: 0, message })?;
        out.push(TrajectoryFileRecord { id, origin_kind, termination, points });
    }
    Ok(out)
}
