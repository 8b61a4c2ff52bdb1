mod common;

use ceilmatch::homest::{
    decompose, dlt_points, estimate_scale, in_plane_motion, ransac_homography, select_physical, Homography,
    Intrinsics, PoseDelta, RansacConfig, ScaleSource,
};
use ceilmatch::matcher::{match_point, FlowVector, MatchConfig};
use ceilmatch::refdb::{best_match, lookup_ceiling, neighbors, ConfusionMatrix, RefDatabase, RefEntry};
use ceilmatch::sampler::{grid_shape, select_greedy, select_grid, suppress, SamplePoint, SelectConfig};
use ceilmatch::{GrayImage, HeatMap, Pose2};
use common::*;
use nalgebra::{Matrix3, Point2, Rotation3, Vector2, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn db_with_times(times: &[f64]) -> RefDatabase {
    let img = GrayImage::filled(2, 2, 0).unwrap();
    let entries = times
        .iter()
        .enumerate()
        .map(|(i, &t)| RefEntry::new(i as u64, t, img.clone(), Pose2::new(0.0, 0.0, 0.0), None).unwrap())
        .collect();
    RefDatabase::new(entries).unwrap()
}

proptest! {
    #[test]
    fn lookup_matches_linear_scan(times in proptest::collection::vec(0u8..40, 1..30), t in -5.0f64..45.0) {
        // small integer timestamps so ties and duplicates are common
        let times: Vec<f64> = times.iter().map(|&v| v as f64 * 0.5).collect();
        let db = db_with_times(&times);
        let got = lookup_ceiling(&db, t).unwrap();
        let mut want = &db.entries()[0];
        for e in db.entries() {
            let (de, dw) = ((e.timestamp - t).abs(), (want.timestamp - t).abs());
            if de < dw {
                want = e;
            }
        }
        prop_assert_eq!(got.id, want.id);
    }

    #[test]
    fn neighbors_match_sorted_scan(times in proptest::collection::vec(0u8..20, 1..20), c in 0usize..20, k in 1usize..8) {
        let times: Vec<f64> = times.iter().map(|&v| v as f64).collect();
        let db = db_with_times(&times);
        let center = &db.entries()[c % db.len()];
        let got: Vec<u64> = neighbors(&db, center, k).iter().map(|e| e.id).collect();
        prop_assert_eq!(got.len(), k.min(db.len()));
        prop_assert_eq!(got[0], center.id);
        let mut rest: Vec<(f64, usize)> = db
            .entries()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.id != center.id)
            .map(|(i, e)| ((e.timestamp - center.timestamp).abs(), i))
            .collect();
        rest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let want: Vec<u64> = rest.iter().take(k - 1).map(|&(_, i)| db.entries()[i].id).collect();
        prop_assert_eq!(&got[1..], &want[..]);
    }

    #[test]
    fn best_match_is_first_argmax(rows in 1usize..5, cols in 1usize..7, vals in proptest::collection::vec(0u8..4, 35)) {
        let scores: Vec<f64> = vals[..rows * cols].iter().map(|&v| v as f64).collect();
        let cm = ConfusionMatrix::new(rows, cols, scores.clone()).unwrap();
        for r in 0..rows {
            let row = &scores[r * cols..(r + 1) * cols];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let want = row.iter().position(|&v| v == max).unwrap();
            prop_assert_eq!(best_match(&cm, r).unwrap(), want);
        }
        prop_assert!(best_match(&cm, rows).is_err());
    }

    #[test]
    fn greedy_equals_replay(
        w in 3usize..40, h in 3usize..40, n in 1usize..20, rho in 0.05f32..0.95, l_n in 1usize..10,
        seed in any::<u64>(), quantise in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f32> = (0..w * h)
            .map(|_| {
                let v: f32 = rand::Rng::random(&mut rng);
                if quantise { (v * 3.0).floor() / 3.0 } else { v }
            })
            .collect();
        let margin = (seed as usize) % (w.min(h) / 2 + 1);
        prop_assume!(w > 2 * margin && h > 2 * margin);
        let hm = HeatMap::new(w, h, values.clone()).unwrap();
        let got: Vec<(usize, usize)> = select_greedy(&hm, &SelectConfig { n_points: n, rho, l_n, margin })
            .unwrap()
            .iter()
            .map(|p| (p.x, p.y))
            .collect();
        prop_assert_eq!(got, greedy_replay(&values, w, h, n, rho, l_n, margin));
        // the input map is untouched
        prop_assert_eq!(hm.values(), &values[..]);
    }

    #[test]
    fn suppress_touches_only_the_square(w in 1usize..30, h in 1usize..30, x in 0usize..30, y in 0usize..30, l_n in 1usize..12) {
        let (x, y) = (x % w, y % h);
        let hm = HeatMap::from_fn(w, h, |i, j| ((i * 31 + j * 17) % 97) as f32 / 96.0).unwrap();
        let out = suppress(&hm, &SamplePoint { x, y, quality: 0.0 }, 0.5, l_n).unwrap();
        let lo = |c: usize| c as i64 - (l_n / 2) as i64;
        for j in 0..h {
            for i in 0..w {
                let inside = (i as i64) >= lo(x) && (i as i64) < lo(x) + l_n as i64
                    && (j as i64) >= lo(y) && (j as i64) < lo(y) + l_n as i64;
                let (a, b) = (hm.get(i, j), out.get(i, j));
                if inside {
                    prop_assert_eq!(b, a * 0.5);
                } else {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }

    #[test]
    fn grid_points_are_distinct_and_inside(w in 10usize..200, h in 10usize..200, n in 1usize..40, margin in 0usize..5) {
        if let Ok(pts) = select_grid(w, h, n, margin) {
            prop_assert_eq!(pts.len(), n);
            for p in &pts {
                prop_assert!(p.x >= margin && p.x + margin < w && p.y >= margin && p.y + margin < h);
            }
            let mut uniq: Vec<(usize, usize)> = pts.iter().map(|p| (p.x, p.y)).collect();
            uniq.sort();
            uniq.dedup();
            prop_assert_eq!(uniq.len(), n);
        }
    }

    #[test]
    fn matcher_matches_oracle(seed in any::<u64>(), half in 1usize..6, l_sr in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = textured_image(&mut rng, 40, 36);
        let q = textured_image(&mut rng, 40, 36);
        let patch = 2 * half + 1;
        let x = half + (seed as usize) % (40 - 2 * half);
        let y = half + (seed as usize / 7) % (36 - 2 * half);
        let cfg = MatchConfig { l_patch: patch, l_sr, ..MatchConfig::default() };
        let got = match_point(&r, &q, &SamplePoint { x, y, quality: 1.0 }, &cfg).unwrap();
        let (dx, dy, _) = brute_force_match(&r, &q, x, y, patch, l_sr).unwrap();
        prop_assert_eq!((got.dx, got.dy), (dx as f64, dy as f64));
    }

    #[test]
    fn dlt_is_projectively_invariant(seed in any::<u64>(), k in 0.1f64..10.0, n in 4usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_camera_homography(&mut rng);
        let src = general_position_points(&mut rng, n, 640.0, 480.0, 20.0);
        let dst: Vec<Point2<f64>> = src.iter().map(|p| apply(&h, p)).collect();
        let scaled = |v: &[Point2<f64>]| v.iter().map(|p| Point2::new(p.x * k, p.y * k)).collect::<Vec<_>>();
        let base = dlt_points(&src, &dst).unwrap();
        let fit = dlt_points(&scaled(&src), &scaled(&dst)).unwrap();
        // the fit on scaled data is S H S^-1
        let s = Matrix3::new(k, 0.0, 0.0, 0.0, k, 0.0, 0.0, 0.0, 1.0);
        let conj = s * base.matrix() * s.try_inverse().unwrap();
        for (a, b) in scaled(&src).iter().zip(&scaled(&dst)) {
            prop_assert!(symmetric_error(fit.matrix(), a, b) < 1e-6 * k.max(1.0));
            prop_assert!((apply(&conj, a) - apply(fit.matrix(), a)).norm() < 1e-6 * k.max(1.0));
        }
    }

    #[test]
    fn ransac_inliers_are_within_epsilon(seed in any::<u64>(), n in 11usize..30, outliers in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_camera_homography(&mut rng);
        let src = general_position_points(&mut rng, n, 640.0, 480.0, 5.0);
        let outliers = outliers.min(n - 8);
        let flows: Vec<FlowVector> = src
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = if i < outliers { Vector2::new(25.0 + i as f64, -30.0) } else { Vector2::zeros() };
                FlowVector::new(*p, apply(&h, p) + d)
            })
            .collect();
        let cfg = RansacConfig { seed, ..RansacConfig::default() };
        let r = ransac_homography(&flows, &cfg).unwrap();
        for (f, &flag) in flows.iter().zip(&r.inlier_flags) {
            if flag {
                prop_assert!(r.model.transfer_error(&f.ref_point, &f.query_point) <= cfg.epsilon);
            }
        }
        // every exact correspondence is kept
        prop_assert!(r.inlier_flags[outliers..].iter().all(|&f| f));
        prop_assert_eq!(r.inlier_ratio, r.inlier_count() as f64 / n as f64);
        // deterministic per seed
        prop_assert_eq!(ransac_homography(&flows, &cfg).unwrap(), r);
    }

    #[test]
    fn decompose_contains_generating_motion(
        yaw in -3.1f64..3.1, pitch in -0.087f64..0.087, roll in -0.087f64..0.087,
        tx in -0.8f64..0.8, ty in -0.8f64..0.8, tz in -0.1f64..0.1,
    ) {
        let k = Intrinsics::new(450.0, 450.0, 320.0, 240.0).unwrap();
        let r = Rotation3::from_euler_angles(roll, pitch, yaw);
        let t = Vector3::new(tx, ty, tz);
        prop_assume!(t.norm() > 1e-3);
        let h = Homography::from_matrix(k.matrix() * (r.matrix() + t * Vector3::z().transpose()) * k.inverse_matrix()).unwrap();
        let cands = decompose(&h, &k).unwrap();
        prop_assert!(cands.iter().any(|c| (c.rotation.matrix() - r.matrix()).abs().max() < 1e-6
            && (c.t_over_depth - t).norm() < 1e-6
            && (c.normal - Vector3::z()).norm() < 1e-6));
        let chosen = select_physical(&cands).unwrap();
        prop_assert!(cands.iter().all(|c| chosen.tilt() <= c.tilt()));
    }

    #[test]
    fn scale_is_order_invariant(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = in_plane_motion(&Homography::identity(), &Intrinsics::identity());
        let obs: Vec<(PoseDelta, Pose2)> = (0..n)
            .map(|_| {
                let pose = Pose2::new(
                    rand::Rng::random_range(&mut rng, -5.0..5.0),
                    rand::Rng::random_range(&mut rng, -5.0..5.0),
                    rand::Rng::random_range(&mut rng, -3.0..3.0),
                );
                let t = Vector2::new(rand::Rng::random_range(&mut rng, -50.0..50.0), rand::Rng::random_range(&mut rng, -50.0..50.0));
                (PoseDelta { t_pixels: t, ..base }, pose)
            })
            .collect();
        let a = estimate_scale(&obs, 0.1);
        let mut rev = obs.clone();
        rev.reverse();
        rev.rotate_left(seed as usize % n);
        prop_assert_eq!(estimate_scale(&rev, 0.1), a);
    }
}

#[test]
fn grid_shapes() {
    assert_eq!(grid_shape(12), (3, 4));
    assert_eq!(grid_shape(24), (5, 5));
    assert_eq!(grid_shape(4), (2, 2));
    assert_eq!(grid_shape(5), (2, 3));
    let pts = select_grid(640, 480, 24, 20).unwrap();
    assert_eq!(pts.len(), 24);
    // truncated row-major: the last row holds four points
    let last_row = pts.iter().filter(|p| p.y == pts[23].y).count();
    assert_eq!(last_row, 4);
}

#[test]
fn greedy_returns_isolated_maxima() {
    let peaks = [(8usize, 8usize, 0.9f32), (30, 10, 0.7), (12, 30, 0.8), (33, 33, 0.6)];
    let hm = HeatMap::from_fn(42, 42, |x, y| {
        peaks.iter().find(|p| p.0 == x && p.1 == y).map_or(0.0, |p| p.2)
    })
    .unwrap();
    let pts = select_greedy(&hm, &SelectConfig { n_points: 4, rho: 0.5, l_n: 10, margin: 2 }).unwrap();
    let got: Vec<(usize, usize)> = pts.iter().map(|p| (p.x, p.y)).collect();
    assert_eq!(got, vec![(8, 8), (12, 30), (30, 10), (33, 33)]);
}

#[test]
fn scale_from_two_constructed_references() {
    let base = in_plane_motion(&Homography::identity(), &Intrinsics::identity());
    let a = (PoseDelta { t_pixels: Vector2::new(60.0, 0.0), ..base }, Pose2::new(0.0, 0.0, 0.0));
    let b = (PoseDelta { t_pixels: Vector2::new(-40.0, 0.0), ..base }, Pose2::new(1.0, 0.0, 0.0));
    let est = estimate_scale(&[a, b], 0.5);
    assert!((est.metres_per_pixel - 0.01).abs() < 1e-12);
    assert_eq!(est.source, ScaleSource::MultiReference);
    let single = estimate_scale(&[a], 0.5);
    assert_eq!((single.metres_per_pixel, single.source), (0.5, ScaleSource::Configured));
}
