//! One refinement per query: coarse match, ceiling lookup, sampling,
//! matching, homography, decomposition, acceptance filters.

mod config;
mod eval;
mod results;

pub use config::{parse_config, FilterConfig, PipelineConfig};
pub use eval::{evaluate, ErrorReport};
pub use results::{
    format_benchmark, format_results, parse_benchmark, parse_results, read_benchmark, read_results,
    write_benchmark, write_results, BENCHMARK_HEADER, RESULTS_HEADER,
};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Pose2;
use crate::homest::{
    decompose, estimate_scale, in_plane_motion, ransac_homography, select_physical, Intrinsics,
    PoseDelta, RansacResult,
};
use crate::image::GrayImage;
use crate::matcher::match_all;
use crate::refdb::{lookup_ceiling, neighbors, CoarseMatches, RefDatabase, RefEntry};
use crate::sampler::{select_greedy, select_grid, SamplePoint, SelectConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    Accepted,
    LowInliers,
    LargeDisplacement,
    MatcherFailure,
    NoCoarseMatch,
}

impl Reason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Reason::Accepted => "accepted",
            Reason::LowInliers => "low_inliers",
            Reason::LargeDisplacement => "large_displacement",
            Reason::MatcherFailure => "matcher_failure",
            Reason::NoCoarseMatch => "no_coarse_match",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Reason {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "accepted" => Reason::Accepted,
            "low_inliers" => Reason::LowInliers,
            "large_displacement" => Reason::LargeDisplacement,
            "matcher_failure" => Reason::MatcherFailure,
            "no_coarse_match" => Reason::NoCoarseMatch,
            other => return Err(format!("unknown reason {other:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalisationOutput {
    pub query_index: usize,
    /// Refined pose, or the coarse reference pose on fallback. `None` only
    /// when there was no coarse match at all.
    pub pose: Option<Pose2>,
    pub coarse_pose: Option<Pose2>,
    pub refined: bool,
    pub reason: Reason,
    pub inlier_ratio: f64,
    pub delta: Option<PoseDelta>,
    pub elapsed_ms: f64,
}

impl LocalisationOutput {
    fn fallback(query_index: usize, coarse: Option<Pose2>, reason: Reason, inlier_ratio: f64, delta: Option<PoseDelta>) -> Self {
        Self {
            query_index,
            pose: coarse,
            coarse_pose: coarse,
            refined: false,
            reason,
            inlier_ratio,
            delta,
            elapsed_ms: 0.0,
        }
    }
}

/// Applies the inlier and displacement filters to a scaled motion estimate.
///
/// Rejected refinements return `coarse_pose` untouched; accepted ones compose
/// the motion onto `reference_pose`.
pub fn decide(
    query_index: usize,
    coarse_pose: Pose2,
    reference_pose: Pose2,
    delta: PoseDelta,
    inlier_ratio: f64,
    filters: &FilterConfig,
) -> LocalisationOutput {
    let reason = if !(inlier_ratio >= filters.n_th) {
        Reason::LowInliers
    } else if !(delta.t_metres.x.abs() <= filters.d_th && delta.t_metres.y.abs() <= filters.d_th) {
        Reason::LargeDisplacement
    } else {
        Reason::Accepted
    };
    if reason != Reason::Accepted {
        return LocalisationOutput::fallback(query_index, Some(coarse_pose), reason, inlier_ratio, Some(delta));
    }
    LocalisationOutput {
        query_index,
        pose: Some(reference_pose.compose(delta.t_metres, delta.yaw)),
        coarse_pose: Some(coarse_pose),
        refined: true,
        reason,
        inlier_ratio,
        delta: Some(delta),
        elapsed_ms: 0.0,
    }
}

/// Homography result for one reference image.
#[derive(Debug, Clone)]
pub struct ReferenceFit<'a> {
    pub entry: &'a RefEntry,
    pub points: Vec<SamplePoint>,
    pub ransac: RansacResult,
    /// Query motion in the reference camera frame (pixels only).
    pub delta: PoseDelta,
}

/// Sample points for a reference: greedy on its heat map when present,
/// otherwise the regular grid.
pub fn sample_points(entry: &RefEntry, cfg: &PipelineConfig) -> Result<Vec<SamplePoint>> {
    let margin = cfg.matching.patch_radius();
    match &entry.heatmap {
        Some(hm) => select_greedy(hm, &SelectConfig { margin, ..cfg.select }),
        None => select_grid(entry.image.width(), entry.image.height(), cfg.grid_points, margin),
    }
}

/// Matches, fits and decomposes one reference-query pair.
pub fn fit_reference<'a>(entry: &'a RefEntry, query: &GrayImage, cfg: &PipelineConfig) -> Result<ReferenceFit<'a>> {
    if query.width() != entry.image.width() || query.height() != entry.image.height() {
        return Err(Error::InvalidConfig(format!(
            "query is {}x{} but reference {} is {}x{}",
            query.width(),
            query.height(),
            entry.id,
            entry.image.width(),
            entry.image.height()
        )));
    }
    let points = sample_points(entry, cfg)?;
    let mut flows = match_all(entry, query, &points, &cfg.matching)?;
    let ransac = ransac_homography(&flows, &cfg.ransac)?;
    ransac.mark(&mut flows);
    // query -> reference: the query camera's motion expressed in the reference frame
    let query_to_ref = ransac.model.inverse();
    let k = cfg
        .intrinsics
        .unwrap_or_else(|| Intrinsics::uncalibrated(query.width(), query.height()));
    let delta = decompose(&query_to_ref, &k)
        .and_then(|c| select_physical(&c))
        .unwrap_or_else(|_| in_plane_motion(&query_to_ref, &k));
    Ok(ReferenceFit {
        entry,
        points,
        ransac,
        delta,
    })
}

/// Refines one query against its coarse reference and up to `k_refs - 1`
/// temporal neighbours. Never fails: problems become fallback outputs.
pub fn refine_one(
    db: &RefDatabase,
    query: &GrayImage,
    coarse_ref: &RefEntry,
    cfg: &PipelineConfig,
    query_index: usize,
) -> LocalisationOutput {
    let coarse_pose = coarse_ref.pose;
    let Ok(default_scale) = cfg.resolve_scale(db) else {
        return LocalisationOutput::fallback(query_index, Some(coarse_pose), Reason::MatcherFailure, 0.0, None);
    };
    let refs = neighbors(db, coarse_ref, cfg.k_refs.max(1));
    let fits: Vec<ReferenceFit> = refs
        .iter()
        .filter_map(|e| fit_reference(e, query, cfg).ok())
        .collect();
    // highest inlier ratio provides the pose; ties keep temporal order
    let Some(primary) = fits
        .iter()
        .reduce(|best, f| if f.ransac.inlier_ratio > best.ransac.inlier_ratio { f } else { best })
    else {
        return LocalisationOutput::fallback(query_index, Some(coarse_pose), Reason::MatcherFailure, 0.0, None);
    };

    let scale = if cfg.k_refs > 1 {
        let usable: Vec<(PoseDelta, Pose2)> = fits
            .iter()
            .filter(|f| f.ransac.inlier_ratio >= cfg.filters.n_th)
            .map(|f| (f.delta, f.entry.pose))
            .collect();
        estimate_scale(&usable, default_scale).metres_per_pixel
    } else {
        default_scale
    };
    let delta = primary.delta.with_scale(scale);
    decide(query_index, coarse_pose, primary.entry.pose, delta, primary.ransac.inlier_ratio, &cfg.filters)
}

/// Refines every query independently (in parallel); output order follows
/// `queries`. `elapsed_ms` covers coarse lookup through the decision.
pub fn refine_traverse(
    db: &RefDatabase,
    queries: &[GrayImage],
    coarse: &CoarseMatches,
    cfg: &PipelineConfig,
) -> Vec<LocalisationOutput> {
    queries
        .par_iter()
        .enumerate()
        .map(|(i, query)| {
            let start = Instant::now();
            let mut out = match coarse
                .matched_timestamp(db, i)
                .and_then(|t| lookup_ceiling(db, t).ok())
            {
                Some(entry) => refine_one(db, query, entry, cfg, i),
                None => LocalisationOutput::fallback(i, None, Reason::NoCoarseMatch, 0.0, None),
            };
            out.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homest::Homography;
    use nalgebra::Vector2;

    fn delta_with(tx: f64, ty: f64) -> PoseDelta {
        PoseDelta {
            t_metres: Vector2::new(tx, ty),
            ..in_plane_motion(&Homography::identity(), &Intrinsics::identity())
        }
    }

    #[test]
    fn low_inliers_fall_back() {
        let coarse = Pose2::new(3.0, 4.0, 0.5);
        let out = decide(0, coarse, coarse, delta_with(0.1, 0.1), 0.5, &FilterConfig::default());
        assert!(!out.refined);
        assert_eq!(out.reason, Reason::LowInliers);
        assert_eq!(out.pose, Some(coarse));
    }

    #[test]
    fn large_displacement_falls_back() {
        let coarse = Pose2::new(3.0, 4.0, 0.5);
        let out = decide(0, coarse, coarse, delta_with(2.5, 0.1), 0.9, &FilterConfig::default());
        assert_eq!(out.reason, Reason::LargeDisplacement);
        assert_eq!(out.pose, Some(coarse));
        let out = decide(0, coarse, coarse, delta_with(0.0, -2.5), 0.9, &FilterConfig::default());
        assert_eq!(out.reason, Reason::LargeDisplacement);
    }

    #[test]
    fn accepted_composes_onto_reference() {
        let reference = Pose2::new(1.0, 1.0, std::f64::consts::FRAC_PI_2);
        let mut d = delta_with(1.0, 0.0);
        d.yaw = 0.1;
        let out = decide(0, reference, reference, d, 0.9, &FilterConfig::default());
        assert!(out.refined);
        let p = out.pose.unwrap();
        assert!((p.x - 1.0).abs() < 1e-12 && (p.y - 2.0).abs() < 1e-12);
        assert!((p.theta - (std::f64::consts::FRAC_PI_2 + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn reason_strings_round_trip() {
        for r in [Reason::Accepted, Reason::LowInliers, Reason::LargeDisplacement, Reason::MatcherFailure, Reason::NoCoarseMatch] {
            assert_eq!(r.as_str().parse::<Reason>().unwrap(), r);
        }
        assert!("nope".parse::<Reason>().is_err());
    }
}
