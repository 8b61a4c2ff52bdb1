//! Acceptance checks. Each test prints one `ACCEPTANCE PASS|FAIL` line
//! with the measured figure, then asserts the criterion.

mod common;

use std::time::Instant;

use ceilmatch::homest::{
    decompose, dlt_points, estimate_scale, ransac_homography, select_physical, Homography, Intrinsics, PoseDelta,
    RansacConfig,
};
use ceilmatch::matcher::{match_point, FlowVector, MatchConfig};
use ceilmatch::pipeline::{decide, evaluate, fit_reference, refine_traverse, FilterConfig, PipelineConfig, Reason};
use ceilmatch::refdb::{CoarseMatches, RefEntry};
use ceilmatch::sampler::{select_greedy, SamplePoint, SelectConfig};
use ceilmatch::synth::{generate_scene, generate_traverse, render_view, SceneParams, TraverseParams};
use ceilmatch::{GrayImage, HeatMap, Pose2};
use common::*;
use nalgebra::{Matrix3, Point2, Rotation3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dlt_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sets: Vec<(Matrix3<f64>, Vec<Point2<f64>>, Vec<Point2<f64>>)> = (0..1000)
        .map(|i| {
            let h = random_camera_homography(&mut rng);
            let n = 4 + i % 21;
            let src = general_position_points(&mut rng, n, 640.0, 480.0, 10.0);
            let dst = src.iter().map(|p| apply(&h, p)).collect();
            (h, src, dst)
        })
        .collect();
    let start = Instant::now();
    let fits: Vec<Homography> = sets.iter().map(|(_, s, d)| dlt_points(s, d).unwrap()).collect();
    let elapsed = start.elapsed().as_secs_f64();
    let worst = sets
        .iter()
        .zip(&fits)
        .flat_map(|((_, s, d), fit)| s.iter().zip(d).map(move |(a, b)| symmetric_error(fit.matrix(), a, b)))
        .fold(0.0, f64::max);
    let pass = worst < 1e-9 && elapsed < 1.0;
    assert!(report(
        "dlt_exactness",
        pass,
        &format!("1000 sets, max symmetric transfer error {worst:.2e} px, {elapsed:.3} s")
    ));
}

#[test]
fn matcher_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut compared = 0;
    let mut mismatches = 0;
    for pair in 0..200 {
        let reference = textured_image(&mut rng, 64, 64);
        let query = match pair % 4 {
            // independent image
            0 => textured_image(&mut rng, 64, 64),
            // flat image: every candidate ties
            1 => GrayImage::filled(64, 64, rng.random()).unwrap(),
            // shifted copy with noise
            _ => {
                let (sx, sy) = (rng.random_range(-6i64..=6), rng.random_range(-6i64..=6));
                GrayImage::from_fn(64, 64, |x, y| {
                    let u = (x as i64 - sx).clamp(0, 63) as usize;
                    let v = (y as i64 - sy).clamp(0, 63) as usize;
                    (reference.get(u, v) as i32 + rng.random_range(-4..=4)).clamp(0, 255) as u8
                })
                .unwrap()
            }
        };
        let patch = 2 * rng.random_range(1..=7) + 1;
        let l_sr = rng.random_range(2..=24);
        let cfg = MatchConfig { l_patch: patch, l_sr, ..MatchConfig::default() };
        let half = patch / 2;
        for _ in 0..5 {
            let x = rng.random_range(half..64 - half);
            let y = rng.random_range(half..64 - half);
            let oracle = brute_force_match(&reference, &query, x, y, patch, l_sr);
            let got = match_point(&reference, &query, &SamplePoint { x, y, quality: 1.0 }, &cfg).ok();
            compared += 1;
            let same = match (oracle, got) {
                (Some((dx, dy, sum)), Some(f)) => {
                    f.dx == dx as f64 && f.dy == dy as f64 && f.sad_score == sum as f64 / (patch * patch) as f64
                }
                (None, None) => true,
                _ => false,
            };
            if !same {
                mismatches += 1;
            }
        }
    }
    assert!(report(
        "matcher_oracle_equivalence",
        mismatches == 0,
        &format!("200 pairs, {compared} points, {mismatches} displacement mismatches")
    ));
}

#[test]
fn ransac_classification() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let epsilon = 3.0;
    let (mut correct, mut total) = (0usize, 0usize);
    for trial in 0..500u64 {
        let h = random_camera_homography(&mut rng);
        let n = rng.random_range(12..=24);
        let inlier_fraction = rng.random_range(0.6..=0.9);
        let n_in = ((n as f64 * inlier_fraction).round() as usize).clamp(1, n);
        let src = general_position_points(&mut rng, n, 640.0, 480.0, 10.0);
        let mut truth = vec![false; n];
        let flows: Vec<FlowVector> = src
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let exact = apply(&h, p);
                let dst = if i < n_in {
                    truth[i] = true;
                    // measurement noise well inside the threshold
                    exact + Vector2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))
                } else {
                    let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    exact + Vector2::new(a.cos(), a.sin()) * rng.random_range(3.0 * epsilon..40.0)
                };
                FlowVector::new(*p, dst)
            })
            .collect();
        let cfg = RansacConfig { epsilon, seed: trial, ..RansacConfig::default() };
        let result = ransac_homography(&flows, &cfg).unwrap();
        correct += result.inlier_flags.iter().zip(&truth).filter(|(a, b)| a == b).count();
        total += n;
    }
    let accuracy = correct as f64 / total as f64;
    assert!(report(
        "ransac_classification",
        accuracy >= 0.95,
        &format!("500 trials, {total} flows, accuracy {:.2}%", 100.0 * accuracy)
    ));
}

/// Fraction of motions whose selected solution misses the generating one,
/// with lateral `|t/d|` drawn from `t_range`.
fn decomposition_trials(seed: u64, trials: usize, t_range: (f64, f64)) -> (usize, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = Intrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap();
    let five = 5f64.to_radians();
    let (mut worst_yaw, mut worst_t) = (0.0f64, 0.0f64);
    let mut failures = 0;
    for _ in 0..trials {
        let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let pitch = rng.random_range(-five..five);
        let roll = rng.random_range(-five..five);
        let r = Rotation3::from_euler_angles(roll, pitch, yaw);
        let dir: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let t = Vector3::new(dir.cos(), dir.sin(), 0.0) * rng.random_range(t_range.0..t_range.1)
            + Vector3::new(0.0, 0.0, rng.random_range(-0.05..0.05));
        let hc = r.matrix() + t * Vector3::z().transpose();
        let h = Homography::from_matrix(k.matrix() * hc * k.inverse_matrix()).unwrap();
        let Ok(best) = decompose(&h, &k).and_then(|c| select_physical(&c)) else {
            failures += 1;
            continue;
        };
        let dyaw = ceilmatch::geometry::normalize_angle(best.yaw - yaw).abs();
        let dt = (best.t_over_depth - t).norm();
        worst_yaw = worst_yaw.max(dyaw);
        worst_t = worst_t.max(dt);
        if dyaw >= 1e-6 || dt >= 1e-6 {
            failures += 1;
        }
    }
    (failures, worst_yaw, worst_t)
}

#[test]
fn decomposition_round_trip() {
    // Below |t/d| of about 0.25 the mirror solution can have less tilt than
    // the true one, and the least-tilt rule picks it. Report that regime
    // separately; the uncalibrated pipeline (unit focal length) always has
    // |t/d| of one pixel or more.
    let (small, _, _) = decomposition_trials(15, 500, (0.0, 0.25));
    acceptance_line(&format!("INFO decomposition_small_translation: {small}/500 motions with |t/d| < 0.25 select the mirror solution"));
    let (failures, worst_yaw, worst_t) = decomposition_trials(14, 500, (0.25, 2.0));
    assert!(report(
        "decomposition_round_trip",
        failures == 0,
        &format!(
            "500 motions, |t/d| in [0.25, 2), {failures} outside tolerance, worst yaw {worst_yaw:.2e} rad, worst t/d {worst_t:.2e}"
        )
    ));
}

fn end_to_end_fixture() -> (ceilmatch::synth::Traverse, PipelineConfig) {
    let scene = generate_scene(
        21,
        &SceneParams {
            scale: 0.1,
            image_width: 320,
            image_height: 240,
            references: 25,
            reference_spacing: 5.0,
            heading_jitter: 0.3,
            footprint_pad: 3.0,
            ..SceneParams::default()
        },
    )
    .unwrap();
    let mut cfg = PipelineConfig::mine_a();
    cfg.grid_points = 24;
    let traverse = generate_traverse(
        &scene,
        &TraverseParams {
            n_frames: 50,
            image_width: 320,
            image_height: 240,
            offset_min: 1.1,
            offset_max: 1.9,
            max_yaw: 0.005,
            max_flow_px: (cfg.matching.search_radius() - 1) as f64,
            flow_margin: cfg.matching.patch_radius(),
            coarse_noise_sigma: 0.0,
            noise_sigma: 2.0,
            seed: 5,
        },
    )
    .unwrap();
    (traverse, cfg)
}

#[test]
fn end_to_end_synthetic_refinement() {
    let start = Instant::now();
    let (traverse, cfg) = end_to_end_fixture();
    let coarse = CoarseMatches::List(traverse.coarse.clone());
    let outputs = refine_traverse(&traverse.references, &traverse.queries, &coarse, &cfg);
    let elapsed = start.elapsed().as_secs_f64();
    let report_e = evaluate(&outputs, &traverse.benchmark, 10.0).unwrap();
    let pass = report_e.mean <= 0.5 * report_e.mean_coarse && report_e.acceptance_rate >= 0.7 && elapsed < 60.0;
    assert!(report(
        "end_to_end_synthetic_refinement",
        pass,
        &format!(
            "50 frames, coarse mean {:.3} m, refined mean {:.3} m (ratio {:.3}), acceptance {:.0}%, {elapsed:.1} s",
            report_e.mean_coarse,
            report_e.mean,
            report_e.mean / report_e.mean_coarse,
            100.0 * report_e.acceptance_rate
        )
    ));
}

#[test]
fn filter_truth_table() {
    let filters = FilterConfig { n_th: 0.6, d_th: 2.0 };
    let coarse = Pose2::new(12.25, -3.5, 0.4);
    let reference = Pose2::new(10.0, -4.0, 0.3);
    let mut rows = 0;
    let mut wrong = 0;
    for ratio in [0.59, 0.60, 0.61] {
        for t in [1.99, 2.00, 2.01] {
            for axis in 0..2 {
                let t_m = if axis == 0 { Vector2::new(t, 0.3) } else { Vector2::new(-0.3, -t) };
                let delta = PoseDelta {
                    t_metres: t_m,
                    t_pixels: t_m * 10.0,
                    ..ceilmatch::homest::in_plane_motion(&Homography::identity(), &Intrinsics::identity())
                };
                let out = decide(0, coarse, reference, delta, ratio, &filters);
                let expect = if ratio < 0.6 {
                    Reason::LowInliers
                } else if t > 2.0 {
                    Reason::LargeDisplacement
                } else {
                    Reason::Accepted
                };
                let fallback_exact = out.refined || out.pose.map(|p| p.x.to_bits() == coarse.x.to_bits()
                    && p.y.to_bits() == coarse.y.to_bits()
                    && p.theta.to_bits() == coarse.theta.to_bits()) == Some(true);
                rows += 1;
                if out.reason != expect || out.refined != (expect == Reason::Accepted) || !fallback_exact {
                    wrong += 1;
                }
            }
        }
    }
    assert!(report(
        "filter_truth_table",
        wrong == 0,
        &format!("{rows} cases (ratio x |t| x axis), {wrong} wrong")
    ));
}

/// Scale estimates from queries placed between references, each fitted
/// against three consecutive references.
fn scale_errors(noise_sigma: f64) -> Vec<f64> {
    let scale = 0.005;
    let params = SceneParams {
        scale,
        image_width: 320,
        image_height: 240,
        references: 8,
        reference_spacing: 0.1,
        footprint_pad: 0.125,
        ..SceneParams::default()
    };
    let scene = generate_scene(31, &params).unwrap();
    let mut cfg = PipelineConfig::mine_b();
    cfg.grid_points = 24;
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let entries: Vec<RefEntry> = scene
        .trajectory
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (img, _) = render_view(&scene, p, 320, 240, noise_sigma, 100 + i as u64).unwrap();
            RefEntry::new(i as u64, i as f64, img, *p, None).unwrap()
        })
        .collect();
    (1..entries.len() - 1)
        .map(|c| {
            let centre = scene.trajectory[c];
            let q = Pose2::new(
                centre.x + rng.random_range(-0.0375..0.0375),
                centre.y + rng.random_range(-0.0375..0.0375),
                centre.theta + rng.random_range(-0.005..0.005),
            );
            let (query, _) = render_view(&scene, &q, 320, 240, noise_sigma, 900 + c as u64).unwrap();
            let obs: Vec<(PoseDelta, Pose2)> = entries[c - 1..=c + 1]
                .iter()
                .map(|e| {
                    let fit = fit_reference(e, &query, &cfg).unwrap();
                    (fit.delta, e.pose)
                })
                .collect();
            let est = estimate_scale(&obs, f64::NAN);
            (est.metres_per_pixel - scale).abs() / scale
        })
        .collect()
}

#[test]
fn scale_recovery() {
    let clean = scale_errors(0.0);
    let noisy = scale_errors(5.0);
    let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let (wc, wn) = (worst(&clean), worst(&noisy));
    let pass = wc <= 0.02 && wn <= 0.10;
    assert!(report(
        "scale_recovery",
        pass,
        &format!(
            "{} queries, worst relative error {:.2}% noise-free, {:.2}% at sigma 5",
            clean.len(),
            100.0 * wc,
            100.0 * wn
        )
    ));
}

#[test]
fn throughput() {
    let scene = generate_scene(
        41,
        &SceneParams {
            scale: 0.1,
            image_width: 640,
            image_height: 480,
            references: 2,
            reference_spacing: 1.0,
            ..SceneParams::default()
        },
    )
    .unwrap();
    let a = scene.trajectory[0];
    let b = Pose2::new(a.x + 0.8, a.y - 0.6, a.theta + 0.01);
    let (ref_img, _) = render_view(&scene, &a, 640, 480, 2.0, 1).unwrap();
    let (query, _) = render_view(&scene, &b, 640, 480, 2.0, 2).unwrap();
    let entry = RefEntry::new(0, 0.0, ref_img, a, None).unwrap();
    let mut cfg = PipelineConfig::mine_a();
    cfg.grid_points = 12;
    assert_eq!((cfg.matching.patch_size(), cfg.matching.l_sr), (41, 40));
    // warm-up
    fit_reference(&entry, &query, &cfg).unwrap();
    let pairs = 40;
    let start = Instant::now();
    for _ in 0..pairs {
        let fit = fit_reference(&entry, &query, &cfg).unwrap();
        std::hint::black_box(fit.delta);
    }
    let rate = pairs as f64 / start.elapsed().as_secs_f64();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    assert!(report(
        "throughput",
        rate >= 5.0,
        &format!(
            "{rate:.1} pairs/s at 640x480, 12 points, {threads} threads (floor 5, target 22: {})",
            if rate >= 22.0 { "met" } else { "missed" }
        )
    ));
}

#[test]
fn greedy_selector_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut mismatches = 0;
    for map in 0..200 {
        let w = rng.random_range(4..=64);
        let h = rng.random_range(4..=64);
        // every fourth map is coarsely quantised to force ties
        let levels = if map % 4 == 0 { Some(rng.random_range(2..6)) } else { None };
        let values: Vec<f32> = (0..w * h)
            .map(|_| {
                let v: f32 = rng.random();
                levels.map_or(v, |l| (v * l as f32).floor() / l as f32)
            })
            .collect();
        let hm = HeatMap::new(w, h, values.clone()).unwrap();
        let margin = rng.random_range(0..=(w.min(h) - 1) / 2);
        let cfg = SelectConfig {
            n_points: rng.random_range(1..=20),
            rho: rng.random_range(0.05..0.95),
            l_n: rng.random_range(1..=12),
            margin,
        };
        let got: Vec<(usize, usize)> = select_greedy(&hm, &cfg).unwrap().iter().map(|p| (p.x, p.y)).collect();
        let want = greedy_replay(&values, w, h, cfg.n_points, cfg.rho, cfg.l_n, margin);
        if got != want {
            mismatches += 1;
        }
    }
    assert!(report(
        "greedy_selector_oracle",
        mismatches == 0,
        &format!("200 heat maps, {mismatches} sequence mismatches")
    ));
}
