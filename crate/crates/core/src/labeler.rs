//! Self-supervised point labels for training the heat-map model.
//!
//! Each training pair (a query frame and its coarse reference) is matched on
//! a regular grid; matcher rejections become `unmatched`, and RANSAC splits
//! the rest into `inlier` and `outlier`. The exported text file is
//!
//! ```text
//! # frames=1 inlier=2 outlier=1 unmatched=1
//! 0,20,20,1
//! 0,60,20,1
//! 0,20,60,0
//! 0,60,60,-1
//! ```
//!
//! with fields `image_id,x,y,label_code`.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::homest::{ransac_homography, RansacConfig};
use crate::image::GrayImage;
use crate::matcher::{match_images, MatchConfig};
use crate::refdb::{lookup_ceiling, CoarseMatches, RefDatabase};
use crate::sampler::select_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Inlier,
    Outlier,
    Unmatched,
}

impl Label {
    pub fn code(self) -> i8 {
        match self {
            Label::Inlier => 1,
            Label::Outlier => 0,
            Label::Unmatched => -1,
        }
    }

    pub fn from_code(code: i8) -> Option<Self> {
        match code {
            1 => Some(Label::Inlier),
            0 => Some(Label::Outlier),
            -1 => Some(Label::Unmatched),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub x: usize,
    pub y: usize,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub image_id: u64,
    pub points: Vec<LabeledPoint>,
    /// False when too few matches survived to fit a homography.
    pub usable: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub inlier: usize,
    pub outlier: usize,
    pub unmatched: usize,
}

impl LabelCounts {
    pub fn total(&self) -> usize {
        self.inlier + self.outlier + self.unmatched
    }

    fn add(&mut self, label: Label) {
        match label {
            Label::Inlier => self.inlier += 1,
            Label::Outlier => self.outlier += 1,
            Label::Unmatched => self.unmatched += 1,
        }
    }
}

impl fmt::Display for LabelCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "inlier={} outlier={} unmatched={}", self.inlier, self.outlier, self.unmatched)
    }
}

impl LabeledFrame {
    pub fn counts(&self) -> LabelCounts {
        let mut c = LabelCounts::default();
        for p in &self.points {
            c.add(p.label);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelConfig {
    pub grid_points: usize,
    pub matching: MatchConfig,
    pub ransac: RansacConfig,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            grid_points: 24,
            matching: MatchConfig::default(),
            ransac: RansacConfig::default(),
        }
    }
}

/// Labels the grid points of `reference` by how they match into `query`.
pub fn label_pair(image_id: u64, reference: &GrayImage, query: &GrayImage, cfg: &LabelConfig) -> Result<LabeledFrame> {
    if reference.width() != query.width() || reference.height() != query.height() {
        return Err(Error::InvalidConfig("label pair images differ in size".into()));
    }
    cfg.matching.validate()?;
    let grid = select_grid(reference.width(), reference.height(), cfg.grid_points, cfg.matching.patch_radius())?;
    let flows = match_images(reference, query, &grid, &cfg.matching)?;
    let ransac = match ransac_homography(&flows, &cfg.ransac) {
        Ok(r) => Some(r),
        Err(Error::TooFewPoints { .. }) | Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let usable = ransac.is_some();
    let points = grid
        .iter()
        .zip(&flows)
        .enumerate()
        .map(|(i, (p, f))| {
            let label = match &ransac {
                _ if f.rejected => Label::Unmatched,
                None => Label::Unmatched,
                Some(r) if r.inlier_flags[i] => Label::Inlier,
                Some(_) => Label::Outlier,
            };
            LabeledPoint { x: p.x, y: p.y, label }
        })
        .collect();
    Ok(LabeledFrame { image_id, points, usable })
}

/// Labels every query against its coarse-matched reference. Frame ids are
/// query indices; each pair gets its own seed, `cfg.ransac.seed + index`.
/// Queries without a coarse match are skipped.
pub fn label_traverse(
    db: &RefDatabase,
    queries: &[GrayImage],
    coarse: &CoarseMatches,
    cfg: &LabelConfig,
) -> Result<Vec<LabeledFrame>> {
    let frames: Vec<Option<LabeledFrame>> = queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let Some(entry) = coarse.matched_timestamp(db, i).and_then(|t| lookup_ceiling(db, t).ok()) else {
                return Ok(None);
            };
            let pair_cfg = LabelConfig {
                ransac: RansacConfig {
                    seed: cfg.ransac.seed.wrapping_add(i as u64),
                    ..cfg.ransac
                },
                ..*cfg
            };
            label_pair(i as u64, &entry.image, q, &pair_cfg).map(Some)
        })
        .collect::<Result<_>>()?;
    Ok(frames.into_iter().flatten().collect())
}

pub fn total_counts(frames: &[LabeledFrame]) -> LabelCounts {
    let mut c = LabelCounts::default();
    for f in frames {
        for p in &f.points {
            c.add(p.label);
        }
    }
    c
}

pub fn format_labels(frames: &[LabeledFrame]) -> String {
    let mut s = format!("# frames={} {}\n", frames.len(), total_counts(frames));
    for f in frames {
        for p in &f.points {
            let _ = writeln!(s, "{},{},{},{}", f.image_id, p.x, p.y, p.label.code());
        }
    }
    s
}

pub fn export_labels(frames: &[LabeledFrame], path: impl AsRef<Path>) -> Result<()> {
    if frames.is_empty() {
        return Err(Error::InvalidConfig("no frames to export".into()));
    }
    let path = path.as_ref();
    fs::write(path, format_labels(frames)).map_err(|e| Error::io(path, e))
}

fn parse_header(line: &str) -> Result<(usize, LabelCounts)> {
    let err = |msg: &str| Error::Labels { line: 1, msg: msg.into() };
    let body = line.strip_prefix('#').ok_or_else(|| err("missing header"))?;
    let mut frames = None;
    let mut c = LabelCounts::default();
    let mut seen = 0;
    for kv in body.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| err("malformed header field"))?;
        let v: usize = v.parse().map_err(|_| err("bad header count"))?;
        match k {
            "frames" => frames = Some(v),
            "inlier" => c.inlier = v,
            "outlier" => c.outlier = v,
            "unmatched" => c.unmatched = v,
            _ => return Err(err("unknown header field")),
        }
        seen += 1;
    }
    match frames {
        Some(n) if seen == 4 => Ok((n, c)),
        _ => Err(err("header needs frames, inlier, outlier and unmatched")),
    }
}

/// Parses a label file, checking the header counts against the records.
/// Records of one frame must be contiguous.
pub fn parse_labels(text: &str) -> Result<Vec<LabeledFrame>> {
    let mut lines = text.lines();
    let (n_frames, declared) = parse_header(lines.next().unwrap_or("").trim())?;
    let mut frames: Vec<LabeledFrame> = Vec::new();
    for (idx, raw) in lines.enumerate() {
        let line = idx + 2;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Labels { line, msg };
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        let id: u64 = f[0].parse().map_err(|_| err("bad image id".into()))?;
        let x: usize = f[1].parse().map_err(|_| err("bad x".into()))?;
        let y: usize = f[2].parse().map_err(|_| err("bad y".into()))?;
        let label = f[3]
            .parse::<i8>()
            .ok()
            .and_then(Label::from_code)
            .ok_or_else(|| err(format!("bad label code {:?}", f[3])))?;
        let point = LabeledPoint { x, y, label };
        match frames.last_mut() {
            Some(fr) if fr.image_id == id => fr.points.push(point),
            _ => {
                if frames.iter().any(|fr| fr.image_id == id) {
                    return Err(err(format!("records of image {id} are not contiguous")));
                }
                frames.push(LabeledFrame { image_id: id, points: vec![point], usable: true });
            }
        }
    }
    for fr in &mut frames {
        fr.usable = fr.points.iter().any(|p| p.label != Label::Unmatched);
    }
    let found = total_counts(&frames);
    if frames.len() != n_frames || found != declared {
        return Err(Error::Labels {
            line: 1,
            msg: format!("header declares frames={n_frames} {declared}, records have frames={} {found}", frames.len()),
        });
    }
    Ok(frames)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<LabeledFrame>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}
