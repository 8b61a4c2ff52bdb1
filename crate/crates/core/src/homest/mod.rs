//! Homography estimation, decomposition into planar motion, and recovery of
//! the pixel-to-metre scaling constant.

mod decompose;
mod dlt;
mod ransac;
mod scale;

pub use decompose::{decompose, euler_zyx, in_plane_motion, select_physical, Intrinsics, PoseDelta};
pub use dlt::{dlt, dlt_points};
pub use ransac::{ransac_homography, RansacConfig, RansacResult, RANSAC_MIN_POINTS};
pub use scale::{estimate_scale, ScaleEstimate, ScaleSource, MIN_PIXEL_BASELINE};

use nalgebra::{Matrix3, Point2, Vector3};

use crate::error::{Error, Result};

/// Homographies whose condition number exceeds this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// A 3x3 projective transform `x' ~ H x` together with its inverse.
///
/// Stored with `h[2][2] = 1` when `|h[2][2]| > 1e-6`, otherwise scaled to
/// Frobenius norm `sqrt(3)` with `h[2][2] >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    h: Matrix3<f64>,
    h_inv: Matrix3<f64>,
}

fn normalize(m: Matrix3<f64>) -> Matrix3<f64> {
    let h22 = m[(2, 2)];
    if h22.abs() > 1e-6 {
        return m / h22;
    }
    let mut out = m * (3f64.sqrt() / m.norm());
    let sign_ref = if h22 != 0.0 {
        h22
    } else {
        // sign of the largest entry, first in row-major order on ties
        out.transpose().iter().copied().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a })
    };
    if sign_ref < 0.0 {
        out = -out;
    }
    out
}

impl Homography {
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite homography".into()));
        }
        if m.norm() == 0.0 {
            return Err(Error::Degenerate("zero homography".into()));
        }
        let h = normalize(m);
        let sv = h.singular_values();
        let (max, min) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
        if !(min > 0.0) || max / min > MAX_CONDITION {
            return Err(Error::Degenerate("homography is rank deficient".into()));
        }
        let h_inv = h
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("homography is not invertible".into()))?;
        Ok(Self { h, h_inv })
    }

    pub fn identity() -> Self {
        Self {
            h: Matrix3::identity(),
            h_inv: Matrix3::identity(),
        }
    }

    /// Pure pixel translation.
    pub fn translation(tx: f64, ty: f64) -> Self {
        Self::from_matrix(Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0))
            .expect("translation is always invertible")
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.h
    }

    pub fn inverse(&self) -> Homography {
        Homography::from_matrix(self.h_inv).unwrap_or(Homography {
            h: self.h_inv,
            h_inv: self.h,
        })
    }

    fn project(m: &Matrix3<f64>, p: &Point2<f64>) -> Option<Point2<f64>> {
        let v = m * Vector3::new(p.x, p.y, 1.0);
        if v.z.abs() < 1e-12 {
            return None;
        }
        Some(Point2::new(v.x / v.z, v.y / v.z))
    }

    pub fn apply(&self, p: &Point2<f64>) -> Option<Point2<f64>> {
        Self::project(&self.h, p)
    }

    pub fn apply_inverse(&self, p: &Point2<f64>) -> Option<Point2<f64>> {
        Self::project(&self.h_inv, p)
    }

    /// Symmetric transfer error `sqrt(d(dst, H src)^2 + d(src, H^-1 dst)^2)`
    /// in pixels; infinite when either point maps to infinity.
    pub fn transfer_error(&self, src: &Point2<f64>, dst: &Point2<f64>) -> f64 {
        match (self.apply(src), self.apply_inverse(dst)) {
            (Some(fwd), Some(bwd)) => {
                ((fwd - dst).norm_squared() + (bwd - src).norm_squared()).sqrt()
            }
            _ => f64::INFINITY,
        }
    }

    pub fn compose(&self, other: &Homography) -> Result<Homography> {
        Homography::from_matrix(self.h * other.h)
    }
}
