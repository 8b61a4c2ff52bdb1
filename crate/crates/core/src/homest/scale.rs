use super::PoseDelta;
use crate::geometry::Pose2;

/// Pairs whose map-frame pixel translations differ by less than this are
/// too ill-conditioned to contribute a scale estimate.
pub const MIN_PIXEL_BASELINE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleSource {
    Configured,
    MultiReference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEstimate {
    pub metres_per_pixel: f64,
    pub source: ScaleSource,
}

/// Metres-per-pixel from several references matched to the same query.
///
/// Each reference places the query at `pose + s * R(theta) * t_pixels`, so
/// for every reference pair `s = |p_i - p_j| / |R_i t_i - R_j t_j|`. Returns
/// the median over usable pairs, or `default_scale` when none qualify.
pub fn estimate_scale(observations: &[(PoseDelta, Pose2)], default_scale: f64) -> ScaleEstimate {
    let fallback = ScaleEstimate {
        metres_per_pixel: default_scale,
        source: ScaleSource::Configured,
    };
    let mut ratios = Vec::new();
    for (i, (di, pi)) in observations.iter().enumerate() {
        for (dj, pj) in &observations[i + 1..] {
            let metric = (pi.position() - pj.position()).norm();
            let pixel = (pi.rotation() * di.t_pixels - pj.rotation() * dj.t_pixels).norm();
            if metric > 1e-9 && pixel >= MIN_PIXEL_BASELINE {
                ratios.push(metric / pixel);
            }
        }
    }
    if ratios.is_empty() {
        return fallback;
    }
    ratios.sort_by(f64::total_cmp);
    let mid = ratios.len() / 2;
    let median = if ratios.len() % 2 == 1 {
        ratios[mid]
    } else {
        0.5 * (ratios[mid - 1] + ratios[mid])
    };
    ScaleEstimate {
        metres_per_pixel: median,
        source: ScaleSource::MultiReference,
    }
}
