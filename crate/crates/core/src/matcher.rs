//! Pixel correspondence by exhaustive SAD template matching.
//!
//! For each reference sample point, an `l_patch` square around it is compared
//! against every candidate centre in an `l_sr` square window around the same
//! coordinates in the query. Candidates whose patch would leave the query are
//! skipped.

use nalgebra::Point2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::refdb::RefEntry;
use crate::sampler::SamplePoint;

/// Candidates within this Chebyshev distance of the best match are ignored
/// when looking for the runner-up.
pub const AMBIGUITY_EXCLUSION_RADIUS: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Patch side; even values are bumped to the next odd size.
    pub l_patch: usize,
    /// Search window side; offsets span `[-l_sr/2, l_sr/2]`.
    pub l_sr: usize,
    /// Reject when `best / runner_up` exceeds this.
    pub reject_ratio: f64,
    /// Reject when the mean absolute difference of the best match exceeds this.
    pub max_sad: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            l_patch: 41,
            l_sr: 40,
            reject_ratio: 0.8,
            max_sad: 40.0,
        }
    }
}

impl MatchConfig {
    pub fn patch_size(&self) -> usize {
        self.l_patch | 1
    }

    pub fn patch_radius(&self) -> usize {
        self.patch_size() / 2
    }

    pub fn search_radius(&self) -> usize {
        self.l_sr / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_size() < 3 {
            return Err(Error::InvalidConfig(format!("l_patch {} too small", self.l_patch)));
        }
        if self.l_sr == 0 {
            return Err(Error::InvalidConfig("l_sr must be at least 1".into()));
        }
        if !(self.reject_ratio > 0.0) || !(self.max_sad >= 0.0) {
            return Err(Error::InvalidConfig("rejection thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// One reference-to-query correspondence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowVector {
    pub ref_point: Point2<f64>,
    pub query_point: Point2<f64>,
    pub dx: f64,
    pub dy: f64,
    /// Mean absolute intensity difference over the patch.
    pub sad_score: f64,
    pub rejected: bool,
    pub inlier: bool,
}

impl FlowVector {
    pub fn new(ref_point: Point2<f64>, query_point: Point2<f64>) -> Self {
        Self {
            ref_point,
            query_point,
            dx: query_point.x - ref_point.x,
            dy: query_point.y - ref_point.y,
            sad_score: 0.0,
            rejected: false,
            inlier: false,
        }
    }
}

/// Sum of absolute differences between two equally sized rows.
#[inline]
fn row_sad(a: &[u8], b: &[u8]) -> u32 {
    a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y) as u32).sum()
}

fn patch_sad(
    reference: &GrayImage,
    (rx, ry): (usize, usize),
    query: &GrayImage,
    (qx, qy): (usize, usize),
    size: usize,
) -> u32 {
    let mut total = 0;
    for r in 0..size {
        let a = &reference.row(ry + r)[rx..rx + size];
        let b = &query.row(qy + r)[qx..qx + size];
        total += row_sad(a, b);
    }
    total
}

/// Finds the query pixel best matching reference point `p`.
pub fn match_point(
    reference: &GrayImage,
    query: &GrayImage,
    p: &SamplePoint,
    cfg: &MatchConfig,
) -> Result<FlowVector> {
    let size = cfg.patch_size();
    let half = size / 2;
    if p.x < half || p.y < half || p.x + half >= reference.width() || p.y + half >= reference.height() {
        return Err(Error::InvalidConfig(format!(
            "reference patch at ({}, {}) exceeds the {}x{} image",
            p.x,
            p.y,
            reference.width(),
            reference.height()
        )));
    }
    let radius = cfg.search_radius() as i64;
    let span = (2 * radius + 1) as usize;
    let mut surface = vec![u32::MAX; span * span];
    let mut best: Option<(i64, i64, u32)> = None;
    let (qw, qh) = (query.width() as i64, query.height() as i64);
    let h = half as i64;
    for dy in -radius..=radius {
        let cy = p.y as i64 + dy;
        if cy - h < 0 || cy + h >= qh {
            continue;
        }
        for dx in -radius..=radius {
            let cx = p.x as i64 + dx;
            if cx - h < 0 || cx + h >= qw {
                continue;
            }
            let sad = patch_sad(
                reference,
                (p.x - half, p.y - half),
                query,
                ((cx - h) as usize, (cy - h) as usize),
                size,
            );
            surface[((dy + radius) as usize) * span + (dx + radius) as usize] = sad;
            if best.is_none_or(|(_, _, b)| sad < b) {
                best = Some((dx, dy, sad));
            }
        }
    }
    let (bdx, bdy, best_sad) = best.ok_or_else(|| {
        Error::InvalidConfig(format!(
            "no search position fits a {size}px patch in the {}x{} query",
            query.width(),
            query.height()
        ))
    })?;

    let mut runner_up: Option<u32> = None;
    let excl = AMBIGUITY_EXCLUSION_RADIUS as i64;
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if (dx - bdx).abs() <= excl && (dy - bdy).abs() <= excl {
                continue;
            }
            let sad = surface[((dy + radius) as usize) * span + (dx + radius) as usize];
            if sad != u32::MAX && runner_up.is_none_or(|r| sad < r) {
                runner_up = Some(sad);
            }
        }
    }

    let area = (size * size) as f64;
    let score = best_sad as f64 / area;
    let ambiguous = match runner_up {
        Some(0) => true,
        Some(second) => best_sad as f64 / second as f64 > cfg.reject_ratio,
        None => false,
    };
    let ref_point = Point2::new(p.x as f64, p.y as f64);
    let query_point = Point2::new((p.x as i64 + bdx) as f64, (p.y as i64 + bdy) as f64);
    Ok(FlowVector {
        sad_score: score,
        rejected: ambiguous || score > cfg.max_sad,
        ..FlowVector::new(ref_point, query_point)
    })
}

/// Matches every point against `query`, in parallel; output order follows
/// `points`.
pub fn match_all(
    reference: &RefEntry,
    query: &GrayImage,
    points: &[SamplePoint],
    cfg: &MatchConfig,
) -> Result<Vec<FlowVector>> {
    match_images(&reference.image, query, points, cfg)
}

pub fn match_images(
    reference: &GrayImage,
    query: &GrayImage,
    points: &[SamplePoint],
    cfg: &MatchConfig,
) -> Result<Vec<FlowVector>> {
    points
        .par_iter()
        .map(|p| match_point(reference, query, p, cfg))
        .collect()
}
