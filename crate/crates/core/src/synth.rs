//! Synthetic ceiling scenes with exact ground truth.
//!
//! The ceiling is a textured plane at a fixed distance above an upward-facing
//! camera. A view at pose `(x, y, theta)` sees the texel
//! `(x, y) / scale + R(theta) (p - c)` at pixel `p`, where `c` is the image
//! centre, so every planar pixel follows a known similarity. Distractors are
//! textured discs hanging below the ceiling: being closer to the camera they
//! appear magnified and move faster than the ceiling, which breaks the
//! single-plane model the same way real 3D structure does.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Point2, Rotation2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Pose2;
use crate::homest::Homography;
use crate::image::GrayImage;
use crate::pipeline::write_benchmark;
use crate::refdb::{format_match_list, RefDatabase, RefEntry};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    /// Metres per pixel on the ceiling plane.
    pub scale: f64,
    /// Camera-to-ceiling distance in metres.
    pub ceiling_height: f64,
    /// Intended camera size; sets the texture margin around the path.
    pub image_width: usize,
    pub image_height: usize,
    pub references: usize,
    /// Metres between consecutive reference poses along the path.
    pub reference_spacing: f64,
    /// Reference headings are drawn uniformly from `[-j, j]` radians.
    pub heading_jitter: f64,
    /// Extra texture margin, in metres, for query poses off the path.
    pub footprint_pad: f64,
    pub distractors: usize,
    /// Fraction of the ceiling area shadowed by distractor discs.
    pub distractor_fraction: f64,
    /// Apparent size ratio of distractors to the ceiling (> 1).
    pub distractor_magnification: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            scale: 0.1,
            ceiling_height: 4.0,
            image_width: 320,
            image_height: 240,
            references: 10,
            reference_spacing: 5.0,
            heading_jitter: 0.0,
            footprint_pad: 3.0,
            distractors: 0,
            distractor_fraction: 0.0,
            distractor_magnification: 1.6,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad("scale must be positive");
        }
        if !(self.ceiling_height > 0.0) {
            return bad("ceiling height must be positive");
        }
        if self.image_width < 2 || self.image_height < 2 {
            return bad("image must be at least 2x2");
        }
        if self.references == 0 {
            return bad("at least one reference is needed");
        }
        if !(self.reference_spacing >= 0.0) || !(self.footprint_pad >= 0.0) || !(self.heading_jitter >= 0.0) {
            return bad("spacing, pad and jitter must be non-negative");
        }
        if !(0.0..0.9).contains(&self.distractor_fraction) {
            return bad("distractor fraction must be in [0, 0.9)");
        }
        if self.distractors > 0 && !(self.distractor_magnification > 1.0) {
            return bad("distractor magnification must exceed 1");
        }
        Ok(())
    }
}

/// A disc below the ceiling, in map metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distractor {
    pub centre: Vector2<f64>,
    pub radius: f64,
    /// Where the disc's centre lands in the object texture.
    pub texture_offset: Vector2<f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub ceiling_texture: GrayImage,
    /// Shared texture for all distractor discs.
    pub object_texture: GrayImage,
    pub plane_depth: f64,
    pub scale: f64,
    pub magnification: f64,
    pub distractors: Vec<Distractor>,
    /// Reference poses along the path.
    pub trajectory: Vec<Pose2>,
}

const OBJECT_TEXTURE_SIZE: usize = 512;

fn smoothstep(t: f32) -> f32 {
    t * t * (3.0 - 2.0 * t)
}

/// Multi-octave value noise, roughly zero mean.
fn value_noise(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let mut out = vec![0.0f32; width * height];
    for &(cell, amp) in &[(96usize, 1.0f32), (48, 0.8), (24, 0.65), (12, 0.5), (6, 0.4), (3, 0.3)] {
        let gw = width / cell + 2;
        let gh = height / cell + 2;
        let lattice: Vec<f32> = (0..gw * gh).map(|_| rng.random::<f32>() - 0.5).collect();
        out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
            let gy = y as f32 / cell as f32;
            let iy = gy as usize;
            let ty = smoothstep(gy - iy as f32);
            for (x, v) in row.iter_mut().enumerate() {
                let gx = x as f32 / cell as f32;
                let ix = gx as usize;
                let tx = smoothstep(gx - ix as f32);
                let l = |i: usize, j: usize| lattice[j * gw + i];
                let top = l(ix, iy) + (l(ix + 1, iy) - l(ix, iy)) * tx;
                let bottom = l(ix, iy + 1) + (l(ix + 1, iy + 1) - l(ix, iy + 1)) * tx;
                *v += amp * (top + (bottom - top) * ty);
            }
        });
    }
    out
}

fn draw_segment(buf: &mut [f32], width: usize, a: Vector2<f32>, b: Vector2<f32>, half_width: f32, value: f32) {
    let height = buf.len() / width;
    let pad = half_width + 1.0;
    let x0 = (a.x.min(b.x) - pad).max(0.0) as usize;
    let x1 = ((a.x.max(b.x) + pad) as usize).min(width - 1);
    let y0 = (a.y.min(b.y) - pad).max(0.0) as usize;
    let y1 = ((a.y.max(b.y) + pad) as usize).min(height - 1);
    let ab = b - a;
    let len2 = ab.norm_squared().max(1e-6);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = Vector2::new(x as f32, y as f32);
            let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
            let d = (p - (a + ab * t)).norm();
            // soft edge one texel wide
            let w = (half_width + 0.5 - d).clamp(0.0, 1.0);
            if w > 0.0 {
                let v = &mut buf[y * width + x];
                *v += (value - *v) * w;
            }
        }
    }
}

fn draw_blob(buf: &mut [f32], width: usize, c: Vector2<f32>, sigma: f32, gain: f32) {
    let height = buf.len() / width;
    let r = 3.0 * sigma;
    let x0 = (c.x - r).max(0.0) as usize;
    let x1 = ((c.x + r) as usize).min(width - 1);
    let y0 = (c.y - r).max(0.0) as usize;
    let y1 = ((c.y + r) as usize).min(height - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d2 = (x as f32 - c.x).powi(2) + (y as f32 - c.y).powi(2);
            buf[y * width + x] += gain * (-d2 / (2.0 * sigma * sigma)).exp();
        }
    }
}

/// Noise plus pipe-like lines and light-like blobs, stretched to 8 bits.
fn ceiling_like_texture(width: usize, height: usize, rng: &mut ChaCha8Rng) -> GrayImage {
    let mut buf = value_noise(width, height, rng);
    let area = (width * height) as f32;
    let n_lines = (area / 40_000.0).ceil() as usize;
    for _ in 0..n_lines {
        let a = Vector2::new(rng.random::<f32>() * width as f32, rng.random::<f32>() * height as f32);
        let angle = rng.random::<f32>() * std::f32::consts::TAU;
        let len = rng.random_range(40.0..300.0f32);
        let b = a + Vector2::new(angle.cos(), angle.sin()) * len;
        let value = if rng.random::<bool>() { 1.4 } else { -1.4 };
        draw_segment(&mut buf, width, a, b, rng.random_range(0.8..3.0), value);
    }
    let n_blobs = (area / 25_000.0).ceil() as usize;
    for _ in 0..n_blobs {
        let c = Vector2::new(rng.random::<f32>() * width as f32, rng.random::<f32>() * height as f32);
        draw_blob(&mut buf, width, c, rng.random_range(2.0..8.0), 1.5);
    }
    let (lo, hi) = buf
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = (hi - lo).max(1e-6);
    let pixels = buf.iter().map(|&v| (10.0 + 235.0 * (v - lo) / span).round() as u8).collect();
    GrayImage::new(width, height, pixels).expect("texture dimensions are consistent")
}

/// Half the image diagonal, in pixels: the largest distance from the
/// centre that any rotation of the view can reach.
fn view_radius(width: usize, height: usize) -> f64 {
    0.5 * ((width * width + height * height) as f64).sqrt()
}

/// Builds a scene. Deterministic per seed.
pub fn generate_scene(seed: u64, params: &SceneParams) -> Result<SyntheticScene> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = params.scale;
    let margin_px = view_radius(params.image_width, params.image_height) + params.footprint_pad / s + 2.0;
    let path_px = (params.references - 1) as f64 * params.reference_spacing / s;
    let tex_w = (path_px + 2.0 * margin_px).ceil() as usize;
    let tex_h = (2.0 * margin_px).ceil() as usize;
    if tex_w.saturating_mul(tex_h) > 200_000_000 {
        return Err(Error::InvalidConfig(format!("texture {tex_w}x{tex_h} is too large")));
    }
    let ceiling_texture = ceiling_like_texture(tex_w, tex_h, &mut rng);
    let object_texture = ceiling_like_texture(OBJECT_TEXTURE_SIZE, OBJECT_TEXTURE_SIZE, &mut rng);

    let trajectory = (0..params.references)
        .map(|i| {
            let x = (margin_px + i as f64 * params.reference_spacing / s) * s;
            let y = 0.5 * tex_h as f64 * s;
            let theta = params.heading_jitter * (2.0 * rng.random::<f64>() - 1.0);
            Pose2::new(x, y, theta)
        })
        .collect();

    let mut distractors = Vec::with_capacity(params.distractors);
    if params.distractors > 0 && params.distractor_fraction > 0.0 {
        let (w_m, h_m) = (tex_w as f64 * s, tex_h as f64 * s);
        let radius = (params.distractor_fraction * w_m * h_m / (params.distractors as f64 * std::f64::consts::PI)).sqrt();
        // keep the disc texture (seen at one texel per pixel) inside the object texture
        let tex_radius = radius * params.distractor_magnification / s;
        if tex_radius * 2.0 + 4.0 > OBJECT_TEXTURE_SIZE as f64 {
            return Err(Error::InvalidConfig("distractors are too large; use more of them".into()));
        }
        let attempts = params.distractors * 200;
        for _ in 0..attempts {
            if distractors.len() == params.distractors {
                break;
            }
            let centre = Vector2::new(rng.random::<f64>() * w_m, rng.random::<f64>() * h_m);
            if distractors
                .iter()
                .any(|d: &Distractor| (d.centre - centre).norm() < d.radius + radius)
            {
                continue;
            }
            let lo = tex_radius + 1.0;
            let hi = OBJECT_TEXTURE_SIZE as f64 - 2.0 - tex_radius;
            let texture_offset = Vector2::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi));
            distractors.push(Distractor { centre, radius, texture_offset });
        }
    }

    Ok(SyntheticScene {
        ceiling_texture,
        object_texture,
        plane_depth: params.ceiling_height,
        scale: s,
        magnification: params.distractor_magnification,
        distractors,
        trajectory,
    })
}

fn image_centre(width: usize, height: usize) -> Vector2<f64> {
    Vector2::new((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0)
}

/// Image-to-texture similarity of the ceiling plane for a view.
pub fn view_homography(scene: &SyntheticScene, pose: &Pose2, width: usize, height: usize) -> Homography {
    let r = pose.rotation();
    let t = pose.position() / scene.scale - r * image_centre(width, height);
    let m = r.matrix();
    let h = Matrix3::new(m[(0, 0)], m[(0, 1)], t.x, m[(1, 0)], m[(1, 1)], t.y, 0.0, 0.0, 1.0);
    Homography::from_matrix(h).expect("similarity is invertible")
}

/// Ground-truth ceiling flow from a reference view to a query view.
pub fn relative_homography(scene: &SyntheticScene, reference: &Pose2, query: &Pose2, width: usize, height: usize) -> Homography {
    let a_r = view_homography(scene, reference, width, height);
    let a_q = view_homography(scene, query, width, height);
    a_q.inverse().compose(&a_r).expect("product of similarities is invertible")
}

/// True when every pixel of the view lands inside the ceiling texture.
pub fn within_footprint(scene: &SyntheticScene, pose: &Pose2, width: usize, height: usize) -> bool {
    let h = view_homography(scene, pose, width, height);
    let max_x = (scene.ceiling_texture.width() - 1) as f64;
    let max_y = (scene.ceiling_texture.height() - 1) as f64;
    let (w, hh) = ((width - 1) as f64, (height - 1) as f64);
    [(0.0, 0.0), (w, 0.0), (0.0, hh), (w, hh)].iter().all(|&(x, y)| {
        h.apply(&Point2::new(x, y))
            .is_some_and(|p| p.x >= 0.0 && p.y >= 0.0 && p.x <= max_x && p.y <= max_y)
    })
}

struct ViewGeometry<'a> {
    scene: &'a SyntheticScene,
    rot: Rotation2<f64>,
    pos: Vector2<f64>,
    centre: Vector2<f64>,
    near: Vec<Distractor>,
}

impl<'a> ViewGeometry<'a> {
    fn new(scene: &'a SyntheticScene, pose: &Pose2, width: usize, height: usize) -> Self {
        let reach = view_radius(width, height) * scene.scale / scene.magnification.max(1.0);
        let near = scene
            .distractors
            .iter()
            .filter(|d| (d.centre - pose.position()).norm() <= reach + d.radius)
            .copied()
            .collect();
        Self {
            scene,
            rot: pose.rotation(),
            pos: pose.position(),
            centre: image_centre(width, height),
            near,
        }
    }

    /// Object-texture position if a distractor covers pixel `(x, y)`.
    fn distractor_at(&self, x: usize, y: usize) -> Option<Vector2<f64>> {
        if self.near.is_empty() {
            return None;
        }
        let d = self.rot * (Vector2::new(x as f64, y as f64) - self.centre);
        let on_disc_plane = self.pos + d * (self.scene.scale / self.scene.magnification);
        self.near.iter().find_map(|disc| {
            let rel = on_disc_plane - disc.centre;
            (rel.norm() <= disc.radius)
                .then(|| disc.texture_offset + rel * (self.scene.magnification / self.scene.scale))
        })
    }

    fn ceiling_at(&self, x: usize, y: usize) -> Vector2<f64> {
        self.pos / self.scene.scale + self.rot * (Vector2::new(x as f64, y as f64) - self.centre)
    }
}

/// Renders an upward view at `pose`, returning the image and its
/// image-to-texture homography for the ceiling plane. Distractor pixels do
/// not follow that homography. Noise is zero-mean Gaussian, clipped to
/// `[0, 255]`, seeded by `noise_seed`.
pub fn render_view(
    scene: &SyntheticScene,
    pose: &Pose2,
    width: usize,
    height: usize,
    noise_sigma: f64,
    noise_seed: u64,
) -> Result<(GrayImage, Homography)> {
    if width < 2 || height < 2 {
        return Err(Error::InvalidConfig("image must be at least 2x2".into()));
    }
    if !within_footprint(scene, pose, width, height) {
        return Err(Error::OutsideFootprint);
    }
    let geom = ViewGeometry::new(scene, pose, width, height);
    let mut values = vec![0.0f64; width * height];
    values.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, v) in row.iter_mut().enumerate() {
            *v = match geom.distractor_at(x, y) {
                Some(u) => scene.object_texture.sample_bilinear(u.x, u.y),
                None => {
                    let u = geom.ceiling_at(x, y);
                    scene.ceiling_texture.sample_bilinear(u.x, u.y)
                }
            }
            .unwrap_or(0.0);
        }
    });
    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        for v in &mut values {
            *v += normal.sample(&mut rng);
        }
    }
    let pixels = values.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    let image = GrayImage::new(width, height, pixels)?;
    Ok((image, view_homography(scene, pose, width, height)))
}

/// Per-pixel flags, row-major: true where a distractor hides the ceiling.
pub fn distractor_mask(scene: &SyntheticScene, pose: &Pose2, width: usize, height: usize) -> Vec<bool> {
    let geom = ViewGeometry::new(scene, pose, width, height);
    (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|(x, y)| geom.distractor_at(x, y).is_some())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraverseParams {
    pub n_frames: usize,
    pub image_width: usize,
    pub image_height: usize,
    /// Query offsets from their reference are drawn uniformly in
    /// `[offset_min, offset_max]` metres, in a uniform direction.
    pub offset_min: f64,
    pub offset_max: f64,
    /// Query heading perturbation bound, radians.
    pub max_yaw: f64,
    /// Upper bound on the ceiling flow of any reference pixel at least
    /// `flow_margin` pixels from the border.
    pub max_flow_px: f64,
    pub flow_margin: usize,
    /// Positional noise (metres) applied before picking the coarse match.
    pub coarse_noise_sigma: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for TraverseParams {
    fn default() -> Self {
        Self {
            n_frames: 50,
            image_width: 320,
            image_height: 240,
            offset_min: 1.0,
            offset_max: 2.0,
            max_yaw: 0.01,
            max_flow_px: 19.0,
            flow_margin: 20,
            coarse_noise_sigma: 0.0,
            noise_sigma: 2.0,
            seed: 1,
        }
    }
}

/// A generated traverse held in memory.
#[derive(Debug, Clone)]
pub struct Traverse {
    pub references: RefDatabase,
    pub queries: Vec<GrayImage>,
    /// Ground-truth query poses, in query order.
    pub benchmark: Vec<Pose2>,
    /// `(query_index, reference timestamp)` from the emulated coarse localiser.
    pub coarse: Vec<(usize, f64)>,
    /// Index of the reference each query was perturbed from.
    pub origin: Vec<usize>,
}

/// Largest ceiling flow over the margin-inset reference region.
pub fn max_ceiling_flow(flow: &Homography, width: usize, height: usize, margin: usize) -> f64 {
    let lo_x = margin.min(width - 1) as f64;
    let lo_y = margin.min(height - 1) as f64;
    let hi_x = width.saturating_sub(margin + 1).max(margin) as f64;
    let hi_y = height.saturating_sub(margin + 1).max(margin) as f64;
    // the flow is affine here, so the extremes sit at the corners
    [(lo_x, lo_y), (hi_x, lo_y), (lo_x, hi_y), (hi_x, hi_y)]
        .iter()
        .map(|&(x, y)| {
            let p = Point2::new(x, y);
            flow.apply(&p).map_or(f64::INFINITY, |q| (q - p).norm())
        })
        .fold(0.0, f64::max)
}

/// Renders references along the scene path and perturbed queries, and
/// emulates the coarse localiser by picking the reference nearest to each
/// noise-corrupted query position.
pub fn generate_traverse(scene: &SyntheticScene, params: &TraverseParams) -> Result<Traverse> {
    if params.n_frames == 0 {
        return Err(Error::InvalidConfig("n_frames must be at least 1".into()));
    }
    if !(params.offset_min >= 0.0 && params.offset_max >= params.offset_min) {
        return Err(Error::InvalidConfig("bad offset range".into()));
    }
    let (w, h) = (params.image_width, params.image_height);
    let n_refs = scene.trajectory.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut benchmark = Vec::with_capacity(params.n_frames);
    let mut origin = Vec::with_capacity(params.n_frames);
    for i in 0..params.n_frames {
        let j = i * n_refs / params.n_frames;
        let reference = scene.trajectory[j];
        let mut found = None;
        for _ in 0..10_000 {
            let dist = rng.random_range(params.offset_min..=params.offset_max);
            let angle = rng.random::<f64>() * std::f64::consts::TAU;
            let yaw = params.max_yaw * (2.0 * rng.random::<f64>() - 1.0);
            let q = Pose2::new(
                reference.x + dist * angle.cos(),
                reference.y + dist * angle.sin(),
                reference.theta + yaw,
            );
            if !within_footprint(scene, &q, w, h) {
                continue;
            }
            let flow = relative_homography(scene, &reference, &q, w, h);
            if max_ceiling_flow(&flow, w, h, params.flow_margin) <= params.max_flow_px {
                found = Some(q);
                break;
            }
        }
        let q = found.ok_or_else(|| {
            Error::InvalidConfig(format!("no query offset for frame {i} satisfies the flow cap"))
        })?;
        benchmark.push(q);
        origin.push(j);
    }

    let coarse_noise = Normal::new(0.0, params.coarse_noise_sigma.max(0.0))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let coarse = benchmark
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let noisy = q.position() + Vector2::new(coarse_noise.sample(&mut rng), coarse_noise.sample(&mut rng));
            let nearest = scene
                .trajectory
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    (a.1.position() - noisy)
                        .norm()
                        .total_cmp(&(b.1.position() - noisy).norm())
                })
                .map(|(k, _)| k)
                .expect("trajectory is non-empty");
            (i, nearest as f64)
        })
        .collect();

    let ref_images = scene
        .trajectory
        .par_iter()
        .enumerate()
        .map(|(k, p)| render_view(scene, p, w, h, params.noise_sigma, params.seed ^ (0x5eed_0000 + k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let entries = ref_images
        .into_iter()
        .zip(&scene.trajectory)
        .enumerate()
        .map(|(k, ((img, _), pose))| RefEntry::new(k as u64, k as f64, img, *pose, None))
        .collect::<Result<Vec<_>>>()?;
    let mut references = RefDatabase::new(entries)?;
    references.default_scale = Some(scene.scale);
    references.ceiling_height = Some(scene.plane_depth);

    let queries = benchmark
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            render_view(scene, p, w, h, params.noise_sigma, params.seed ^ (0x9e37_0000_0000 + i as u64)).map(|r| r.0)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Traverse {
        references,
        queries,
        benchmark,
        coarse,
        origin,
    })
}

/// File names written by [`write_traverse`], relative to its directory.
pub const REFERENCE_MANIFEST: &str = "references/manifest.csv";
pub const QUERY_MANIFEST: &str = "queries/manifest.csv";
pub const COARSE_FILE: &str = "coarse.csv";
pub const BENCHMARK_FILE: &str = "benchmark.csv";

#[derive(Debug, Clone)]
pub struct TraversePaths {
    pub references: PathBuf,
    pub queries: PathBuf,
    pub coarse: PathBuf,
    pub benchmark: PathBuf,
}

/// Writes the four traverse artifacts under `dir`. Query poses in the query
/// manifest are zero; the truth lives only in the benchmark file.
pub fn write_traverse(traverse: &Traverse, dir: impl AsRef<Path>) -> Result<TraversePaths> {
    let dir = dir.as_ref();
    let paths = TraversePaths {
        references: dir.join(REFERENCE_MANIFEST),
        queries: dir.join(QUERY_MANIFEST),
        coarse: dir.join(COARSE_FILE),
        benchmark: dir.join(BENCHMARK_FILE),
    };
    for p in [&paths.references, &paths.queries] {
        let parent = p.parent().expect("manifest paths have a parent");
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    traverse.references.save(&paths.references)?;
    let query_entries = traverse
        .queries
        .iter()
        .enumerate()
        .map(|(i, img)| RefEntry::new(i as u64, i as f64, img.clone(), Pose2::new(0.0, 0.0, 0.0), None))
        .collect::<Result<Vec<_>>>()?;
    RefDatabase::new(query_entries)?.save(&paths.queries)?;
    fs::write(&paths.coarse, format_match_list(&traverse.coarse)).map_err(|e| Error::io(&paths.coarse, e))?;
    write_benchmark(&paths.benchmark, &traverse.benchmark)?;
    Ok(paths)
}
