//! Decomposition of a plane-induced homography into candidate motions.
//!
//! For two views of a plane, `H = K (R + t n^T / d) K^-1` where a point `X`
//! in the source camera frame maps to `R X + t` in the destination frame and
//! the plane satisfies `n . X = d`. Euler angles follow Z-Y-X
//! (`R = Rz(yaw) Ry(pitch) Rx(roll)`) with the camera z-axis toward the
//! ceiling and x along the image columns.

use nalgebra::{Matrix3, Point2, Rotation3, Vector2, Vector3, SVD};

use super::Homography;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !cx.is_finite() || !cy.is_finite() || !fx.is_finite() || !fy.is_finite() {
            return Err(Error::InvalidConfig(format!("bad intrinsics fx={fx} fy={fy}")));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    pub fn identity() -> Self {
        Self { fx: 1.0, fy: 1.0, cx: 0.0, cy: 0.0 }
    }

    /// Unit focal length with the principal point at the image centre; used
    /// when no calibration is available.
    pub fn uncalibrated(width: usize, height: usize) -> Self {
        Self {
            fx: 1.0,
            fy: 1.0,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    pub fn principal_point(&self) -> Point2<f64> {
        Point2::new(self.cx, self.cy)
    }
}

/// A motion hypothesis, in the source camera frame of the homography.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseDelta {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    /// Planar translation in pixels, aligned with the source image axes.
    pub t_pixels: Vector2<f64>,
    /// `t_pixels` scaled to metres; zero until a scale is applied.
    pub t_metres: Vector2<f64>,
    pub rotation: Rotation3<f64>,
    /// Translation over plane distance.
    pub t_over_depth: Vector3<f64>,
    /// Plane normal in the source frame.
    pub normal: Vector3<f64>,
}

impl PoseDelta {
    fn from_parts(rotation: Rotation3<f64>, t_over_depth: Vector3<f64>, normal: Vector3<f64>, k: &Intrinsics) -> Self {
        let (yaw, pitch, roll) = euler_zyx(&rotation);
        Self {
            yaw,
            pitch,
            roll,
            t_pixels: Vector2::new(k.fx * t_over_depth.x, k.fy * t_over_depth.y),
            t_metres: Vector2::zeros(),
            rotation,
            t_over_depth,
            normal,
        }
    }

    pub fn tilt(&self) -> f64 {
        self.pitch.abs() + self.roll.abs()
    }

    pub fn with_scale(mut self, metres_per_pixel: f64) -> Self {
        self.t_metres = self.t_pixels * metres_per_pixel;
        self
    }
}

/// `(yaw, pitch, roll)` with `R = Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn euler_zyx(r: &Rotation3<f64>) -> (f64, f64, f64) {
    let m = r.matrix();
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    (yaw, pitch, roll)
}

fn nearest_rotation(m: &Matrix3<f64>) -> Rotation3<f64> {
    let svd = SVD::new(*m, true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut d = Matrix3::identity();
        d[(2, 2)] = -1.0;
        r = u * d * v_t;
    }
    Rotation3::from_matrix_unchecked(r)
}

/// Candidate `(R, t/d, n)` solutions of `H`, restricted to planes in front
/// of the camera (`n_z > 0`).
///
/// Uses the SVD construction of Ma, Soatto, Kosecka and Sastry. A homography
/// with coincident singular values (pure rotation) yields one candidate with
/// zero translation.
pub fn decompose(h: &Homography, k: &Intrinsics) -> Result<Vec<PoseDelta>> {
    let mut hc = k.inverse_matrix() * h.matrix() * k.matrix();
    let sv = hc.singular_values();
    let mut sorted = [sv[0], sv[1], sv[2]];
    sorted.sort_by(|a, b| b.total_cmp(a));
    if !(sorted[1] > 0.0) {
        return Err(Error::Degenerate("calibrated homography is singular".into()));
    }
    hc /= sorted[1];
    if hc.determinant() < 0.0 {
        hc = -hc;
    }

    let svd = SVD::new(hc, true, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Degenerate("SVD failed".into()))?;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s1 = svd.singular_values[order[0]];
    let s3 = svd.singular_values[order[2]];
    let v1: Vector3<f64> = v_t.row(order[0]).transpose();
    let v2: Vector3<f64> = v_t.row(order[1]).transpose();
    let v3: Vector3<f64> = v_t.row(order[2]).transpose();

    let (s1_sq, s3_sq) = (s1 * s1, s3 * s3);
    if s1_sq - s3_sq < 1e-12 {
        let r = nearest_rotation(&hc);
        return Ok(vec![PoseDelta::from_parts(r, Vector3::zeros(), Vector3::z(), k)]);
    }

    let denom = (s1_sq - s3_sq).sqrt();
    let a = (1.0 - s3_sq).max(0.0).sqrt();
    let b = (s1_sq - 1.0).max(0.0).sqrt();
    let u1 = (a * v1 + b * v3) / denom;
    let u2 = (a * v1 - b * v3) / denom;

    let mut out = Vec::with_capacity(4);
    for u in [u1, u2] {
        let basis = Matrix3::from_columns(&[v2, u, v2.cross(&u)]);
        let hv2 = hc * v2;
        let hu = hc * u;
        let image = Matrix3::from_columns(&[hv2, hu, hv2.cross(&hu)]);
        let r = nearest_rotation(&(image * basis.transpose()));
        let n = v2.cross(&u);
        let t = (hc - r.matrix()) * n;
        for sign in [1.0, -1.0] {
            let (n_s, t_s) = (n * sign, t * sign);
            if n_s.z > 0.0 {
                out.push(PoseDelta::from_parts(r, t_s, n_s, k));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Degenerate("no solution with the plane in front of the camera".into()));
    }
    Ok(out)
}

/// In-plane motion read directly off `H` assuming negligible pitch and roll:
/// yaw from the rotation block, translation from where the principal point
/// maps.
pub fn in_plane_motion(h: &Homography, k: &Intrinsics) -> PoseDelta {
    let hc = k.inverse_matrix() * h.matrix() * k.matrix();
    let hc = if hc[(2, 2)].abs() > 1e-12 { hc / hc[(2, 2)] } else { hc };
    let yaw = (hc[(1, 0)] - hc[(0, 1)]).atan2(hc[(0, 0)] + hc[(1, 1)]);
    let c = k.principal_point();
    let moved = h.apply(&c).unwrap_or(c);
    let t_pixels = moved - c;
    PoseDelta {
        yaw,
        pitch: 0.0,
        roll: 0.0,
        t_pixels,
        t_metres: Vector2::zeros(),
        rotation: Rotation3::from_axis_angle(&Vector3::z_axis(), yaw),
        t_over_depth: Vector3::new(t_pixels.x / k.fx, t_pixels.y / k.fy, 0.0),
        normal: Vector3::z(),
    }
}

/// The candidate with the least `|pitch| + |roll|`, ties to the smaller `|yaw|`.
pub fn select_physical(candidates: &[PoseDelta]) -> Result<PoseDelta> {
    candidates
        .iter()
        .copied()
        .min_by(|a, b| a.tilt().total_cmp(&b.tilt()).then(a.yaw.abs().total_cmp(&b.yaw.abs())))
        .ok_or_else(|| Error::Degenerate("no decomposition candidates".into()))
}
