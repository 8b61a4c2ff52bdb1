use nalgebra::{DMatrix, Matrix3, Point2};

use super::Homography;
use crate::error::{Error, Result};
use crate::matcher::FlowVector;

/// Similarity taking the points to zero mean and mean distance sqrt(2).
fn hartley_transform(points: &[Point2<f64>]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
    let (cx, cy) = (sx / n, sy / n);
    let mean_dist = points
        .iter()
        .map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if !(mean_dist > 1e-12) || !mean_dist.is_finite() {
        return Err(Error::Degenerate("coincident points".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn apply(t: &Matrix3<f64>, p: &Point2<f64>) -> Point2<f64> {
    Point2::new(t[(0, 0)] * p.x + t[(0, 2)], t[(1, 1)] * p.y + t[(1, 2)])
}

/// Twice the signed area of a triangle.
fn cross(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn has_collinear_triple(points: &[Point2<f64>]) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if cross(&points[i], &points[j], &points[k]).abs() < 1e-9 {
                    return true;
                }
            }
        }
    }
    false
}

/// Normalized DLT for `dst ~ H src`.
///
/// Both point sets are Hartley-normalized, the `2n x 9` system is solved for
/// its smallest right singular vector, and the result is denormalized.
pub fn dlt_points(src: &[Point2<f64>], dst: &[Point2<f64>]) -> Result<Homography> {
    let n = src.len();
    if dst.len() != n {
        return Err(Error::LengthMismatch(n, dst.len()));
    }
    if n < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: n });
    }
    let t_src = hartley_transform(src)?;
    let t_dst = hartley_transform(dst)?;
    let src_n: Vec<_> = src.iter().map(|p| apply(&t_src, p)).collect();
    let dst_n: Vec<_> = dst.iter().map(|p| apply(&t_dst, p)).collect();
    if n == 4 && (has_collinear_triple(&src_n) || has_collinear_triple(&dst_n)) {
        return Err(Error::Degenerate("three collinear points".into()));
    }

    // pad with zero rows so the SVD yields all nine right singular vectors
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (p, q)) in src_n.iter().zip(&dst_n).enumerate() {
        let (x, y, u, v) = (p.x, p.y, q.x, q.y);
        let r0 = 2 * i;
        a[(r0, 0)] = -x;
        a[(r0, 1)] = -y;
        a[(r0, 2)] = -1.0;
        a[(r0, 6)] = u * x;
        a[(r0, 7)] = u * y;
        a[(r0, 8)] = u;
        let r1 = r0 + 1;
        a[(r1, 3)] = -x;
        a[(r1, 4)] = -y;
        a[(r1, 5)] = -1.0;
        a[(r1, 6)] = v * x;
        a[(r1, 7)] = v * y;
        a[(r1, 8)] = v;
    }
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Degenerate("SVD did not converge".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let largest = svd.singular_values[order[0]];
    let second_smallest = svd.singular_values[order[7]];
    if !(second_smallest > 1e-9 * largest) {
        return Err(Error::Degenerate("correspondences do not determine a unique homography".into()));
    }
    let h = v_t.row(order[8]);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let t_dst_inv = t_dst
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("normalization not invertible".into()))?;
    Homography::from_matrix(t_dst_inv * hn * t_src)
}

/// DLT over flow vectors, mapping reference points onto query points.
pub fn dlt(flows: &[FlowVector]) -> Result<Homography> {
    let src: Vec<_> = flows.iter().map(|f| f.ref_point).collect();
    let dst: Vec<_> = flows.iter().map(|f| f.query_point).collect();
    dlt_points(&src, &dst)
}
