use super::LocalisationOutput;
use crate::error::{Error, Result};
use crate::geometry::Pose2;

/// Position-error statistics over the frames kept by the exclusion rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub frames_total: usize,
    pub frames_evaluated: usize,
    /// Frames without a coarse pose or whose coarse error exceeds the radius.
    pub frames_excluded: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    /// Mean error of the unrefined coarse poses on the same frames.
    pub mean_coarse: f64,
    pub acceptance_rate: f64,
    pub mean_refined: Option<f64>,
    pub mean_fallback: Option<f64>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Compares outputs with benchmark poses, position by position.
pub fn evaluate(outputs: &[LocalisationOutput], benchmark: &[Pose2], exclusion_radius: f64) -> Result<ErrorReport> {
    if outputs.len() != benchmark.len() {
        return Err(Error::LengthMismatch(outputs.len(), benchmark.len()));
    }
    let mut errors = Vec::new();
    let mut coarse_errors = Vec::new();
    let mut refined = Vec::new();
    let mut fallback = Vec::new();
    for (o, truth) in outputs.iter().zip(benchmark) {
        let (Some(pose), Some(coarse)) = (o.pose, o.coarse_pose) else { continue };
        let coarse_error = coarse.distance(truth);
        if !(coarse_error <= exclusion_radius) {
            continue;
        }
        let e = pose.distance(truth);
        errors.push(e);
        coarse_errors.push(coarse_error);
        if o.refined {
            refined.push(e);
        } else {
            fallback.push(e);
        }
    }
    let n = errors.len();
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let median = match n {
        0 => 0.0,
        _ if n % 2 == 1 => sorted[n / 2],
        _ => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    };
    Ok(ErrorReport {
        frames_total: outputs.len(),
        frames_evaluated: n,
        frames_excluded: outputs.len() - n,
        mean: mean(&errors).unwrap_or(0.0),
        median,
        max: sorted.last().copied().unwrap_or(0.0),
        mean_coarse: mean(&coarse_errors).unwrap_or(0.0),
        acceptance_rate: if n == 0 { 0.0 } else { refined.len() as f64 / n as f64 },
        mean_refined: mean(&refined),
        mean_fallback: mean(&fallback),
    })
}
