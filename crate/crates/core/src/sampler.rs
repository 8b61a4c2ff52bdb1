//! Sample-point selection on reference images.
//!
//! Two strategies: greedy picking from a quality heat map with multiplicative
//! neighbourhood suppression, and a regular-grid baseline.

use crate::error::{Error, Result};
use crate::heatmap::HeatMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub x: usize,
    pub y: usize,
    /// Working heat-map value at selection time (1.0 for grid points).
    pub quality: f32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectConfig {
    pub n_points: usize,
    /// Factor applied to the neighbourhood of each pick.
    pub rho: f32,
    /// Side length of the suppressed square.
    pub l_n: usize,
    /// Minimum distance from the image border.
    pub margin: usize,
}

impl SelectConfig {
    /// Checks the ranges the pipeline relies on (`n_points >= 4` so a
    /// homography is determined).
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 4 {
            return Err(Error::InvalidConfig(format!(
                "n_points must be at least 4, got {}",
                self.n_points
            )));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidConfig(format!("rho must be in (0, 1), got {}", self.rho)));
        }
        if self.l_n == 0 {
            return Err(Error::InvalidConfig("l_n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Inclusive index range of the suppression square along one axis.
fn square_span(center: usize, side: usize, len: usize) -> (usize, usize) {
    let lo = center.saturating_sub(side / 2);
    let hi = (center + (side - 1 - side / 2)).min(len - 1);
    (lo, hi)
}

fn suppress_values(values: &mut [f32], width: usize, height: usize, x: usize, y: usize, rho: f32, l_n: usize) {
    let (x0, x1) = square_span(x, l_n, width);
    let (y0, y1) = square_span(y, l_n, height);
    for row in y0..=y1 {
        for v in &mut values[row * width + x0..=row * width + x1] {
            *v *= rho;
        }
    }
}

/// Multiplies the `l_n x l_n` square at `at` by `rho`, clipped at the borders.
///
/// The square spans `[c - l_n/2, c - l_n/2 + l_n - 1]` on each axis.
pub fn suppress(hm: &HeatMap, at: &SamplePoint, rho: f32, l_n: usize) -> Result<HeatMap> {
    if at.x >= hm.width() || at.y >= hm.height() {
        return Err(Error::OutOfRange {
            index: at.y * hm.width() + at.x,
            len: hm.values().len(),
        });
    }
    let mut out = hm.clone();
    if l_n > 0 {
        let (w, h) = (out.width(), out.height());
        suppress_values(out.values_mut(), w, h, at.x, at.y, rho, l_n);
    }
    Ok(out)
}

/// Greedy selection: repeatedly take the highest working value inside the
/// margin-inset region (row-major tie-break, previously chosen pixels
/// excluded), then suppress its neighbourhood.
pub fn select_greedy(hm: &HeatMap, cfg: &SelectConfig) -> Result<Vec<SamplePoint>> {
    let (w, h) = (hm.width(), hm.height());
    let m = cfg.margin;
    if w < 2 * m + 1 || h < 2 * m + 1 {
        return Err(Error::InvalidConfig(format!(
            "valid region empty: {w}x{h} heat map with margin {m}"
        )));
    }
    let (x_lo, x_hi) = (m, w - 1 - m);
    let (y_lo, y_hi) = (m, h - 1 - m);
    let region = (x_hi - x_lo + 1) * (y_hi - y_lo + 1);
    let wanted = cfg.n_points.min(region);

    let mut working = hm.values().to_vec();
    let mut taken = vec![false; w * h];
    let mut points = Vec::with_capacity(wanted);
    while points.len() < wanted {
        let mut best: Option<(usize, usize, f32)> = None;
        for y in y_lo..=y_hi {
            let row = &working[y * w..(y + 1) * w];
            for x in x_lo..=x_hi {
                if taken[y * w + x] {
                    continue;
                }
                let v = row[x];
                if best.is_none_or(|(_, _, b)| v > b) {
                    best = Some((x, y, v));
                }
            }
        }
        let Some((x, y, quality)) = best else { break };
        taken[y * w + x] = true;
        points.push(SamplePoint { x, y, quality });
        suppress_values(&mut working, w, h, x, y, cfg.rho, cfg.l_n);
    }
    Ok(points)
}

/// Grid shape for `n` points: `cols = ceil(sqrt(n))`, `rows = ceil(n / cols)`.
pub fn grid_shape(n: usize) -> (usize, usize) {
    if n == 0 {
        return (0, 0);
    }
    let mut cols = (n as f64).sqrt().ceil() as usize;
    while cols * cols < n {
        cols += 1;
    }
    while cols > 1 && (cols - 1) * (cols - 1) >= n {
        cols -= 1;
    }
    let rows = n.div_ceil(cols);
    (rows, cols)
}

/// Regular grid of `n_points` cell centres inside the margin-inset region,
/// truncated row-major when the grid has spare cells.
pub fn select_grid(width: usize, height: usize, n_points: usize, margin: usize) -> Result<Vec<SamplePoint>> {
    if n_points == 0 {
        return Ok(Vec::new());
    }
    let (rows, cols) = grid_shape(n_points);
    let inner_w = width.saturating_sub(2 * margin);
    let inner_h = height.saturating_sub(2 * margin);
    if inner_w < cols || inner_h < rows {
        return Err(Error::InvalidConfig(format!(
            "{width}x{height} with margin {margin} cannot hold a {rows}x{cols} grid"
        )));
    }
    let axis = |i: usize, count: usize, inner: usize| -> usize {
        // cell centre in the continuous span [margin - 0.5, margin + inner - 0.5]
        let pos = margin as f64 - 0.5 + (i as f64 + 0.5) * inner as f64 / count as f64;
        (pos.round() as usize).clamp(margin, margin + inner - 1)
    };
    let mut points = Vec::with_capacity(n_points);
    'outer: for r in 0..rows {
        for c in 0..cols {
            if points.len() == n_points {
                break 'outer;
            }
            points.push(SamplePoint {
                x: axis(c, cols, inner_w),
                y: axis(r, rows, inner_h),
                quality: 1.0,
            });
        }
    }
    Ok(points)
}
