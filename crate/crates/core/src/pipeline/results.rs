//! Results and benchmark-pose text files.
//!
//! Results: `query_index,refined,reason,x,y,theta,inlier_ratio,elapsed_ms,coarse_x,coarse_y,coarse_theta`
//! with `nan` standing in for a missing pose. Benchmark: `query_index,x,y,theta`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{LocalisationOutput, Reason};
use crate::error::{Error, Result};
use crate::geometry::Pose2;

pub const RESULTS_HEADER: &str =
    "query_index,refined,reason,x,y,theta,inlier_ratio,elapsed_ms,coarse_x,coarse_y,coarse_theta";
pub const BENCHMARK_HEADER: &str = "query_index,x,y,theta";

fn pose_fields(p: Option<Pose2>) -> String {
    match p {
        Some(p) => format!("{:?},{:?},{:?}", p.x, p.y, p.theta),
        None => "nan,nan,nan".into(),
    }
}

pub fn format_results(outputs: &[LocalisationOutput]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for o in outputs {
        let _ = writeln!(
            s,
            "{},{},{},{},{:?},{:?},{}",
            o.query_index,
            o.refined,
            o.reason,
            pose_fields(o.pose),
            o.inlier_ratio,
            o.elapsed_ms,
            pose_fields(o.coarse_pose)
        );
    }
    s
}

pub fn write_results(path: impl AsRef<Path>, outputs: &[LocalisationOutput]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_results(outputs)).map_err(|e| Error::io(path, e))
}

fn header_check(text: &str, header: &str, err: impl Fn(usize, String) -> Error) -> Result<()> {
    let first = text.lines().next().unwrap_or("").trim();
    if first != header {
        return Err(err(1, format!("expected header {header:?}")));
    }
    Ok(())
}

fn parse_pose(fields: &[&str], err: &impl Fn(String) -> Error) -> Result<Option<Pose2>> {
    let vals: Vec<f64> = fields
        .iter()
        .map(|f| f.parse::<f64>().map_err(|_| err(format!("bad number {f:?}"))))
        .collect::<Result<_>>()?;
    if vals.iter().all(|v| v.is_nan()) {
        return Ok(None);
    }
    let p = Pose2::new(vals[0], vals[1], vals[2]);
    if !p.is_finite() {
        return Err(err("non-finite pose".into()));
    }
    Ok(Some(p))
}

/// Parses a results file. Deltas are not stored, so `delta` is `None`.
pub fn parse_results(text: &str) -> Result<Vec<LocalisationOutput>> {
    let mk = |line, msg| Error::Results { line, msg };
    header_check(text, RESULTS_HEADER, mk)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate().skip(1) {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Results { line, msg };
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 11 {
            return Err(err(format!("expected 11 fields, found {}", f.len())));
        }
        let query_index = f[0].parse().map_err(|_| err("bad query index".into()))?;
        let refined: bool = f[1].parse().map_err(|_| err("bad refined flag".into()))?;
        let reason: Reason = f[2].parse().map_err(err)?;
        if refined != (reason == Reason::Accepted) {
            return Err(err("refined flag disagrees with reason".into()));
        }
        let pose = parse_pose(&f[3..6], &err)?;
        let inlier_ratio: f64 = f[6].parse().map_err(|_| err("bad inlier ratio".into()))?;
        let elapsed_ms: f64 = f[7].parse().map_err(|_| err("bad elapsed time".into()))?;
        let coarse_pose = parse_pose(&f[8..11], &err)?;
        out.push(LocalisationOutput {
            query_index,
            pose,
            coarse_pose,
            refined,
            reason,
            inlier_ratio,
            delta: None,
            elapsed_ms,
        });
    }
    Ok(out)
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<LocalisationOutput>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results(&text)
}

pub fn format_benchmark(poses: &[Pose2]) -> String {
    let mut s = String::from(BENCHMARK_HEADER);
    s.push('\n');
    for (i, p) in poses.iter().enumerate() {
        let _ = writeln!(s, "{i},{:?},{:?},{:?}", p.x, p.y, p.theta);
    }
    s
}

pub fn write_benchmark(path: impl AsRef<Path>, poses: &[Pose2]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_benchmark(poses)).map_err(|e| Error::io(path, e))
}

/// Parses benchmark poses; records must be listed in query order starting at 0.
pub fn parse_benchmark(text: &str) -> Result<Vec<Pose2>> {
    let mk = |line, msg| Error::Benchmark { line, msg };
    header_check(text, BENCHMARK_HEADER, mk)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate().skip(1) {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Benchmark { line, msg };
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        let q: usize = f[0].parse().map_err(|_| err("bad query index".into()))?;
        if q != out.len() {
            return Err(err(format!("expected query index {}, found {q}", out.len())));
        }
        let pose = parse_pose(&f[1..4], &err)?.ok_or_else(|| err("missing pose".into()))?;
        out.push(pose);
    }
    Ok(out)
}

pub fn read_benchmark(path: impl AsRef<Path>) -> Result<Vec<Pose2>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_benchmark(&text)
}
