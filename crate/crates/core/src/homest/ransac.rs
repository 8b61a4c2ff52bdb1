use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{dlt, dlt_points, Homography};
use crate::error::{Error, Result};
use crate::matcher::FlowVector;

/// RANSAC runs only when more than this many unrejected flows are available;
/// otherwise every unrejected flow feeds a single DLT fit.
pub const RANSAC_MIN_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    /// Symmetric transfer error threshold in pixels.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Early-exit confidence for the adaptive iteration count.
    pub confidence: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            epsilon: 3.0,
            max_iters: 500,
            confidence: 0.99,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub model: Homography,
    /// One flag per input flow; rejected flows are never inliers.
    pub inlier_flags: Vec<bool>,
    /// Flagged count over the total number of input flows.
    pub inlier_ratio: f64,
}

impl RansacResult {
    pub fn inlier_count(&self) -> usize {
        self.inlier_flags.iter().filter(|&&f| f).count()
    }

    /// Copies the flags onto the flows' `inlier` field.
    pub fn mark(&self, flows: &mut [FlowVector]) {
        for (f, &flag) in flows.iter_mut().zip(&self.inlier_flags) {
            f.inlier = flag;
        }
    }
}

fn adaptive_iterations(inliers: usize, total: usize, confidence: f64) -> usize {
    let w = inliers as f64 / total as f64;
    let p_good = w.powi(4);
    if p_good >= 1.0 {
        return 1;
    }
    if p_good <= 0.0 {
        return usize::MAX;
    }
    let n = (1.0 - confidence).ln() / (1.0 - p_good).ln();
    if n.is_finite() { n.ceil().max(1.0) as usize } else { usize::MAX }
}

struct Consensus {
    flags: Vec<bool>,
    count: usize,
    error_sum: f64,
}

fn consensus(model: &Homography, flows: &[FlowVector], candidates: &[usize], epsilon: f64) -> Consensus {
    let mut flags = vec![false; flows.len()];
    let mut count = 0;
    let mut error_sum = 0.0;
    for &i in candidates {
        let e = model.transfer_error(&flows[i].ref_point, &flows[i].query_point);
        if e <= epsilon {
            flags[i] = true;
            count += 1;
            error_sum += e;
        }
    }
    Consensus { flags, count, error_sum }
}

fn better(a: &Consensus, b: &Consensus) -> bool {
    a.count > b.count || (a.count == b.count && a.error_sum < b.error_sum)
}

/// Robust homography fit over the unrejected flows.
///
/// With more than [`RANSAC_MIN_POINTS`] unrejected flows this is standard
/// RANSAC on minimal 4-point samples followed by a DLT refit on the consensus
/// set. With fewer, all unrejected flows are fitted directly and flagged as
/// inliers. Deterministic for a fixed seed.
pub fn ransac_homography(flows: &[FlowVector], cfg: &RansacConfig) -> Result<RansacResult> {
    let usable: Vec<usize> = (0..flows.len()).filter(|&i| !flows[i].rejected).collect();
    if usable.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: usable.len() });
    }
    let total = flows.len() as f64;

    if usable.len() <= RANSAC_MIN_POINTS {
        let subset: Vec<FlowVector> = usable.iter().map(|&i| flows[i]).collect();
        let model = dlt(&subset)?;
        let mut flags = vec![false; flows.len()];
        for &i in &usable {
            flags[i] = true;
        }
        return Ok(RansacResult {
            model,
            inlier_flags: flags,
            inlier_ratio: usable.len() as f64 / total,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Homography, Consensus)> = None;
    let mut needed = cfg.max_iters;
    let mut iter = 0;
    while iter < needed.min(cfg.max_iters) {
        iter += 1;
        let pick = rand::seq::index::sample(&mut rng, usable.len(), 4);
        let sample: Vec<FlowVector> = pick.iter().map(|k| flows[usable[k]]).collect();
        let Ok(model) = dlt(&sample) else { continue };
        let c = consensus(&model, flows, &usable, cfg.epsilon);
        if best.as_ref().is_none_or(|(_, b)| better(&c, b)) {
            needed = adaptive_iterations(c.count, usable.len(), cfg.confidence);
            best = Some((model, c));
        }
    }
    let (mut model, mut cons) = best.ok_or(Error::NoConsensus(0))?;
    if cons.count < 4 {
        return Err(Error::NoConsensus(cons.count));
    }

    // refit on the consensus set until it stops growing
    for _ in 0..5 {
        let (src, dst): (Vec<_>, Vec<_>) = cons
            .flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| (flows[i].ref_point, flows[i].query_point))
            .unzip();
        let Ok(refit) = dlt_points(&src, &dst) else { break };
        let c = consensus(&refit, flows, &usable, cfg.epsilon);
        if c.count < cons.count {
            break;
        }
        let unchanged = c.flags == cons.flags;
        model = refit;
        cons = c;
        if unchanged {
            break;
        }
    }

    Ok(RansacResult {
        model,
        inlier_ratio: cons.count as f64 / total,
        inlier_flags: cons.flags,
    })
}
