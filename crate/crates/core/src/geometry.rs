//! Planar poses in the map frame.

use std::f64::consts::PI;

use nalgebra::{Rotation2, Vector2};

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Vehicle pose in the map frame: position in metres, heading in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn rotation(&self) -> Rotation2<f64> {
        Rotation2::new(self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// Applies a motion expressed in this pose's body frame.
    pub fn compose(&self, body_translation: Vector2<f64>, yaw: f64) -> Pose2 {
        let t = self.rotation() * body_translation;
        Pose2::new(self.x + t.x, self.y + t.y, self.theta + yaw)
    }

    /// Inverse of [`Pose2::compose`]: recovers the pose that `compose` was
    /// applied to.
    pub fn decompose_from(&self, body_translation: Vector2<f64>, yaw: f64) -> Pose2 {
        let base_theta = self.theta - yaw;
        let t = Rotation2::new(base_theta) * body_translation;
        Pose2::new(self.x - t.x, self.y - t.y, base_theta)
    }

    /// Motion of `other` expressed in this pose's body frame.
    pub fn relative(&self, other: &Pose2) -> (Vector2<f64>, f64) {
        let d = other.position() - self.position();
        (
            self.rotation().inverse() * d,
            normalize_angle(other.theta - self.theta),
        )
    }

    pub fn distance(&self, other: &Pose2) -> f64 {
        (self.position() - other.position()).norm()
    }
}
