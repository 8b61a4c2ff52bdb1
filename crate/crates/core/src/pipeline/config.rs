//! `key = value` configuration files.
//!
//! Every key is optional and overrides the Mine-A preset; `preset = mine_b`
//! may appear first to start from the other deployed parameter set. Unknown
//! keys are errors. `#` starts a comment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::homest::{Intrinsics, RansacConfig};
use crate::matcher::MatchConfig;
use crate::refdb::RefDatabase;
use crate::sampler::SelectConfig;

/// Acceptance filters applied to each refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Minimum inlier fraction.
    pub n_th: f64,
    /// Maximum accepted |x| or |y| displacement in metres.
    pub d_th: f64,
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_th > 0.0 && self.n_th <= 1.0) {
            return Err(Error::InvalidConfig(format!("n_th must be in (0, 1], got {}", self.n_th)));
        }
        if !(self.d_th > 0.0 && self.d_th.is_finite()) {
            return Err(Error::InvalidConfig(format!("d_th must be positive, got {}", self.d_th)));
        }
        Ok(())
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { n_th: 0.6, d_th: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub matching: MatchConfig,
    /// Greedy selection settings; the margin is always the patch radius.
    pub select: SelectConfig,
    /// Point count when a reference has no heat map.
    pub grid_points: usize,
    pub filters: FilterConfig,
    pub ransac: RansacConfig,
    /// References (nearest in time, including the coarse match) per query.
    pub k_refs: usize,
    /// Overrides the database's default scale.
    pub metres_per_pixel: Option<f64>,
    pub intrinsics: Option<Intrinsics>,
}

impl PipelineConfig {
    pub fn mine_a() -> Self {
        let matching = MatchConfig {
            l_patch: 40,
            l_sr: 40,
            ..MatchConfig::default()
        };
        Self {
            matching,
            select: SelectConfig {
                n_points: 12,
                rho: 0.5,
                l_n: 10,
                margin: matching.patch_radius(),
            },
            grid_points: 24,
            filters: FilterConfig::default(),
            ransac: RansacConfig::default(),
            k_refs: 1,
            metres_per_pixel: None,
            intrinsics: None,
        }
    }

    pub fn mine_b() -> Self {
        let mut cfg = Self::mine_a();
        cfg.matching.l_patch = 60;
        cfg.matching.l_sr = 70;
        cfg.select.l_n = 20;
        cfg.select.margin = cfg.matching.patch_radius();
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.matching.validate()?;
        self.select.validate()?;
        self.filters.validate()?;
        if self.grid_points < 4 {
            return Err(Error::InvalidConfig("grid_points must be at least 4".into()));
        }
        if self.k_refs == 0 {
            return Err(Error::InvalidConfig("k_refs must be at least 1".into()));
        }
        if !(self.ransac.epsilon > 0.0) || self.ransac.max_iters == 0 {
            return Err(Error::InvalidConfig("bad RANSAC settings".into()));
        }
        if !(self.ransac.confidence > 0.0 && self.ransac.confidence < 1.0) {
            return Err(Error::InvalidConfig("ransac_confidence must be in (0, 1)".into()));
        }
        if let Some(s) = self.metres_per_pixel {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig("metres_per_pixel must be positive".into()));
            }
        }
        Ok(())
    }

    /// Configured scale, falling back to the database's.
    pub fn resolve_scale(&self, db: &RefDatabase) -> Result<f64> {
        self.metres_per_pixel
            .or(db.default_scale)
            .ok_or_else(|| Error::InvalidConfig("no metres_per_pixel in config or database".into()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_config(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let m = &self.matching;
        let _ = writeln!(s, "l_patch = {}", m.l_patch);
        let _ = writeln!(s, "l_sr = {}", m.l_sr);
        let _ = writeln!(s, "reject_ratio = {:?}", m.reject_ratio);
        let _ = writeln!(s, "max_sad = {:?}", m.max_sad);
        let _ = writeln!(s, "n_points = {}", self.select.n_points);
        let _ = writeln!(s, "rho = {:?}", self.select.rho);
        let _ = writeln!(s, "l_n = {}", self.select.l_n);
        let _ = writeln!(s, "grid_points = {}", self.grid_points);
        let _ = writeln!(s, "n_th = {:?}", self.filters.n_th);
        let _ = writeln!(s, "d_th = {:?}", self.filters.d_th);
        let _ = writeln!(s, "ransac_epsilon = {:?}", self.ransac.epsilon);
        let _ = writeln!(s, "ransac_max_iters = {}", self.ransac.max_iters);
        let _ = writeln!(s, "ransac_confidence = {:?}", self.ransac.confidence);
        let _ = writeln!(s, "ransac_seed = {}", self.ransac.seed);
        let _ = writeln!(s, "k_refs = {}", self.k_refs);
        if let Some(v) = self.metres_per_pixel {
            let _ = writeln!(s, "metres_per_pixel = {v:?}");
        }
        if let Some(k) = &self.intrinsics {
            let _ = writeln!(s, "fx = {:?}\nfy = {:?}\ncx = {:?}\ncy = {:?}", k.fx, k.fy, k.cx, k.cy);
        }
        s
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::mine_a()
    }
}

fn value<T: std::str::FromStr>(raw: &str, key: &str, line: usize) -> Result<T> {
    raw.parse().map_err(|_| Error::Config {
        line,
        msg: format!("bad value {raw:?} for {key}"),
    })
}

fn fraction(raw: &str, key: &str, line: usize) -> Result<f64> {
    match raw.strip_suffix('%') {
        Some(pct) => Ok(value::<f64>(pct.trim(), key, line)? / 100.0),
        None => value(raw, key, line),
    }
}

pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::mine_a();
    let mut intrinsics: [Option<f64>; 4] = [None; 4];
    let mut any_key = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, val) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            msg: "expected `key = value`".into(),
        })?;
        let (key, val) = (key.trim(), val.trim());
        match key {
            "preset" => {
                if any_key {
                    return Err(Error::Config { line, msg: "preset must come first".into() });
                }
                cfg = match val {
                    "mine_a" => PipelineConfig::mine_a(),
                    "mine_b" => PipelineConfig::mine_b(),
                    other => return Err(Error::Config { line, msg: format!("unknown preset {other:?}") }),
                };
            }
            "l_patch" => cfg.matching.l_patch = value(val, key, line)?,
            "l_sr" => cfg.matching.l_sr = value(val, key, line)?,
            "reject_ratio" => cfg.matching.reject_ratio = value(val, key, line)?,
            "max_sad" => cfg.matching.max_sad = value(val, key, line)?,
            "n_points" => cfg.select.n_points = value(val, key, line)?,
            "rho" => cfg.select.rho = value(val, key, line)?,
            "l_n" => cfg.select.l_n = value(val, key, line)?,
            "grid_points" => cfg.grid_points = value(val, key, line)?,
            "n_th" => cfg.filters.n_th = fraction(val, key, line)?,
            "d_th" => cfg.filters.d_th = value(val, key, line)?,
            "ransac_epsilon" => cfg.ransac.epsilon = value(val, key, line)?,
            "ransac_max_iters" => cfg.ransac.max_iters = value(val, key, line)?,
            "ransac_confidence" => cfg.ransac.confidence = fraction(val, key, line)?,
            "ransac_seed" => cfg.ransac.seed = value(val, key, line)?,
            "k_refs" => cfg.k_refs = value(val, key, line)?,
            "metres_per_pixel" => cfg.metres_per_pixel = Some(value(val, key, line)?),
            "fx" => intrinsics[0] = Some(value(val, key, line)?),
            "fy" => intrinsics[1] = Some(value(val, key, line)?),
            "cx" => intrinsics[2] = Some(value(val, key, line)?),
            "cy" => intrinsics[3] = Some(value(val, key, line)?),
            other => return Err(Error::Config { line, msg: format!("unknown key {other:?}") }),
        }
        any_key = true;
    }
    cfg.select.margin = cfg.matching.patch_radius();
    cfg.intrinsics = match intrinsics {
        [Some(fx), Some(fy), Some(cx), Some(cy)] => Some(Intrinsics::new(fx, fy, cx, cy)?),
        [None, None, None, None] => None,
        _ => return Err(Error::InvalidConfig("intrinsics need all of fx, fy, cx, cy".into())),
    };
    cfg.validate()?;
    Ok(cfg)
}
