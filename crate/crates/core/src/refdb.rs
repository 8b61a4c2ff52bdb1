//! Reference image database, manifests and coarse-match inputs.
//!
//! A manifest is a text file with one header line followed by one record per
//! entry:
//!
//! ```text
//! id,timestamp,image_path,x,y,theta,heatmap_path
//! 0,0.0,img/0000.pgm,0.0,0.0,0.0,
//! 1,0.5,img/0001.pgm,1.0,0.0,0.0,hm/0001.luhm
//! ```
//!
//! Relative paths resolve against the manifest's directory. Lines starting
//! with `#!` before the header carry database-level settings
//! (`default_scale`, `ceiling_height`); other `#` lines are comments.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Pose2;
use crate::heatmap::HeatMap;
use crate::image::GrayImage;

pub const MANIFEST_HEADER: &str = "id,timestamp,image_path,x,y,theta,heatmap_path";

/// One parsed manifest line, before any file is touched.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub id: u64,
    pub timestamp: f64,
    pub image_path: String,
    pub pose: Pose2,
    pub heatmap_path: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub default_scale: Option<f64>,
    pub ceiling_height: Option<f64>,
    pub records: Vec<ManifestRecord>,
}

fn parse_f64(field: &str, what: &str, line: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Manifest {
        line,
        msg: format!("bad {what} {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Manifest {
            line,
            msg: format!("non-finite {what}"),
        });
    }
    Ok(v)
}

/// Parses manifest text. Line numbers in errors are 1-based.
pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let mut manifest = Manifest::default();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(directive) = trimmed.strip_prefix("#!") {
            if seen_header {
                return Err(Error::Manifest {
                    line,
                    msg: "settings must precede the header".into(),
                });
            }
            let (key, value) = directive.split_once('=').ok_or_else(|| Error::Manifest {
                line,
                msg: "expected `#! key = value`".into(),
            })?;
            let value = parse_f64(value.trim(), key.trim(), line)?;
            if value <= 0.0 {
                return Err(Error::Manifest {
                    line,
                    msg: format!("{} must be positive", key.trim()),
                });
            }
            match key.trim() {
                "default_scale" => manifest.default_scale = Some(value),
                "ceiling_height" => manifest.ceiling_height = Some(value),
                other => {
                    return Err(Error::Manifest {
                        line,
                        msg: format!("unknown setting {other:?}"),
                    })
                }
            }
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        if !seen_header {
            let normalized: String = trimmed.chars().filter(|c| !c.is_whitespace()).collect();
            if normalized != MANIFEST_HEADER {
                return Err(Error::Manifest {
                    line,
                    msg: format!("expected header {MANIFEST_HEADER:?}"),
                });
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(Error::Manifest {
                line,
                msg: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let id: u64 = fields[0].parse().map_err(|_| Error::Manifest {
            line,
            msg: format!("bad id {:?}", fields[0]),
        })?;
        let timestamp = parse_f64(fields[1], "timestamp", line)?;
        if fields[2].is_empty() {
            return Err(Error::Manifest {
                line,
                msg: "empty image path".into(),
            });
        }
        let x = parse_f64(fields[3], "x", line)?;
        let y = parse_f64(fields[4], "y", line)?;
        let theta = parse_f64(fields[5], "theta", line)?;
        manifest.records.push(ManifestRecord {
            id,
            timestamp,
            image_path: fields[2].to_string(),
            pose: Pose2::new(x, y, theta),
            heatmap_path: (!fields[6].is_empty()).then(|| fields[6].to_string()),
        });
    }
    if !seen_header {
        return Err(Error::Manifest {
            line: 0,
            msg: "missing header".into(),
        });
    }
    Ok(manifest)
}

/// Renders a manifest. Floats use Rust's shortest round-trip formatting.
pub fn format_manifest(manifest: &Manifest) -> String {
    let mut out = String::new();
    if let Some(s) = manifest.default_scale {
        let _ = writeln!(out, "#! default_scale = {s:?}");
    }
    if let Some(h) = manifest.ceiling_height {
        let _ = writeln!(out, "#! ceiling_height = {h:?}");
    }
    out.push_str(MANIFEST_HEADER);
    out.push('\n');
    for r in &manifest.records {
        let _ = writeln!(
            out,
            "{},{:?},{},{:?},{:?},{:?},{}",
            r.id,
            r.timestamp,
            r.image_path,
            r.pose.x,
            r.pose.y,
            r.pose.theta,
            r.heatmap_path.as_deref().unwrap_or("")
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct RefEntry {
    pub id: u64,
    pub timestamp: f64,
    pub image: GrayImage,
    pub pose: Pose2,
    pub heatmap: Option<HeatMap>,
}

impl RefEntry {
    pub fn new(
        id: u64,
        timestamp: f64,
        image: GrayImage,
        pose: Pose2,
        heatmap: Option<HeatMap>,
    ) -> Result<Self> {
        if !timestamp.is_finite() {
            return Err(Error::Entry {
                id,
                msg: "non-finite timestamp".into(),
            });
        }
        if !pose.is_finite() {
            return Err(Error::Entry {
                id,
                msg: "non-finite pose".into(),
            });
        }
        if let Some(hm) = &heatmap {
            if hm.width() != image.width() || hm.height() != image.height() {
                return Err(Error::Entry {
                    id,
                    msg: format!(
                        "heat map is {}x{} but image is {}x{}",
                        hm.width(),
                        hm.height(),
                        image.width(),
                        image.height()
                    ),
                });
            }
        }
        Ok(Self {
            id,
            timestamp,
            image,
            pose,
            heatmap,
        })
    }
}

/// Immutable, timestamp-ordered collection of reference entries.
#[derive(Debug, Clone)]
pub struct RefDatabase {
    entries: Vec<RefEntry>,
    pub ceiling_height: Option<f64>,
    pub default_scale: Option<f64>,
}

impl RefDatabase {
    /// Sorts entries by timestamp (stable) and checks id uniqueness.
    pub fn new(mut entries: Vec<RefEntry>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !ids.insert(e.id) {
                return Err(Error::Entry {
                    id: e.id,
                    msg: "duplicate id".into(),
                });
            }
        }
        entries.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Ok(Self {
            entries,
            ceiling_height: None,
            default_scale: None,
        })
    }

    pub fn entries(&self) -> &[RefEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&RefEntry> {
        self.entries.get(index)
    }

    pub fn position_of(&self, id: u64) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }

    /// Writes every image (and heat map) next to the manifest under
    /// `images/` and `heatmaps/`, then the manifest itself.
    pub fn save(&self, manifest_path: impl AsRef<Path>) -> Result<()> {
        let manifest_path = manifest_path.as_ref();
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let img_dir = base.join("images");
        fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
        let mut manifest = Manifest {
            default_scale: self.default_scale,
            ceiling_height: self.ceiling_height,
            records: Vec::with_capacity(self.entries.len()),
        };
        for e in &self.entries {
            let image_rel = format!("images/{:06}.pgm", e.id);
            e.image.write_pgm(base.join(&image_rel))?;
            let heatmap_rel = match &e.heatmap {
                Some(hm) => {
                    let hm_dir = base.join("heatmaps");
                    fs::create_dir_all(&hm_dir).map_err(|err| Error::io(&hm_dir, err))?;
                    let rel = format!("heatmaps/{:06}.luhm", e.id);
                    hm.write(base.join(&rel))?;
                    Some(rel)
                }
                None => None,
            };
            manifest.records.push(ManifestRecord {
                id: e.id,
                timestamp: e.timestamp,
                image_path: image_rel,
                pose: e.pose,
                heatmap_path: heatmap_rel,
            });
        }
        fs::write(manifest_path, format_manifest(&manifest))
            .map_err(|e| Error::io(manifest_path, e))
    }
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads and validates a database from a manifest file.
pub fn load_database(manifest_path: impl AsRef<Path>) -> Result<RefDatabase> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest = parse_manifest(&text)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let entry_err = |id: u64, e: Error| Error::Entry {
        id,
        msg: e.to_string(),
    };
    let mut entries = Vec::with_capacity(manifest.records.len());
    for r in manifest.records {
        let image = GrayImage::read_pgm(resolve(base, &r.image_path)).map_err(|e| entry_err(r.id, e))?;
        let heatmap = match &r.heatmap_path {
            Some(p) => Some(HeatMap::read(resolve(base, p)).map_err(|e| entry_err(r.id, e))?),
            None => None,
        };
        entries.push(RefEntry::new(r.id, r.timestamp, image, r.pose, heatmap)?);
    }
    let mut db = RefDatabase::new(entries)?;
    db.default_scale = manifest.default_scale;
    db.ceiling_height = manifest.ceiling_height;
    Ok(db)
}

/// Entry taken closest in time to `timestamp`; ties go to the earlier entry.
pub fn lookup_ceiling(db: &RefDatabase, timestamp: f64) -> Result<&RefEntry> {
    let entries = db.entries();
    if entries.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    // first entry with t >= timestamp
    let upper = entries.partition_point(|e| e.timestamp < timestamp);
    let mut best = upper.min(entries.len() - 1);
    if upper > 0 {
        // the earliest entry sharing the previous timestamp
        let prev_t = entries[upper - 1].timestamp;
        let prev = entries.partition_point(|e| e.timestamp < prev_t);
        let d_prev = (timestamp - prev_t).abs();
        let d_next = if upper < entries.len() {
            (entries[upper].timestamp - timestamp).abs()
        } else {
            f64::INFINITY
        };
        if d_prev <= d_next {
            best = prev;
        }
    }
    Ok(&entries[best])
}

/// Up to `k` entries nearest in time to `center` (included first), ordered by
/// time distance with ties broken by database order.
pub fn neighbors<'a>(db: &'a RefDatabase, center: &RefEntry, k: usize) -> Vec<&'a RefEntry> {
    let mut ranked: Vec<(usize, &RefEntry)> = db.entries().iter().enumerate().collect();
    ranked.sort_by(|(ia, a), (ib, b)| {
        let da = (a.timestamp - center.timestamp).abs();
        let db_ = (b.timestamp - center.timestamp).abs();
        da.total_cmp(&db_)
            .then((a.id != center.id).cmp(&(b.id != center.id)))
            .then(ia.cmp(ib))
    });
    ranked.into_iter().take(k).map(|(_, e)| e).collect()
}

/// Query-by-reference similarity scores from the coarse localiser.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    rows: usize,
    cols: usize,
    scores: Vec<f64>,
}

impl ConfusionMatrix {
    pub fn new(rows: usize, cols: usize, scores: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Coarse(format!("empty matrix {rows}x{cols}")));
        }
        if rows.checked_mul(cols) != Some(scores.len()) {
            return Err(Error::Coarse(format!(
                "{} scores for {rows}x{cols}",
                scores.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Coarse("non-finite score".into()));
        }
        Ok(Self { rows, cols, scores })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.scores[r * self.cols..(r + 1) * self.cols]
    }
}

/// Column with the highest score in row `query_index`; ties go to the
/// smallest column.
pub fn best_match(cm: &ConfusionMatrix, query_index: usize) -> Result<usize> {
    if query_index >= cm.rows {
        return Err(Error::OutOfRange {
            index: query_index,
            len: cm.rows,
        });
    }
    let row = cm.row(query_index);
    let mut best = 0;
    for (j, &s) in row.iter().enumerate().skip(1) {
        if s > row[best] {
            best = j;
        }
    }
    Ok(best)
}

pub fn parse_confusion_matrix(text: &str) -> Result<ConfusionMatrix> {
    let mut tokens = text.split_whitespace();
    let mut dim = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Coarse(format!("missing {what}")))?
            .parse()
            .map_err(|_| Error::Coarse(format!("bad {what}")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Coarse("dimensions overflow".into()))?;
    let mut scores = Vec::with_capacity(expected.min(1 << 20));
    for tok in tokens {
        scores.push(
            tok.parse::<f64>()
                .map_err(|_| Error::Coarse(format!("bad score {tok:?}")))?,
        );
    }
    ConfusionMatrix::new(rows, cols, scores)
}

pub fn format_confusion_matrix(cm: &ConfusionMatrix) -> String {
    let mut out = format!("{} {}\n", cm.rows, cm.cols);
    for r in 0..cm.rows {
        let row: Vec<String> = cm.row(r).iter().map(|s| format!("{s:?}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Coarse localiser output: either a full confusion matrix or a list of
/// `(query_index, matched_reference_timestamp)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub enum CoarseMatches {
    Matrix(ConfusionMatrix),
    List(Vec<(usize, f64)>),
}

impl CoarseMatches {
    /// Timestamp of the reference matched to `query_index`, if any. Matrix
    /// columns index `db` entries in timestamp order.
    pub fn matched_timestamp(&self, db: &RefDatabase, query_index: usize) -> Option<f64> {
        match self {
            CoarseMatches::Matrix(cm) => {
                let col = best_match(cm, query_index).ok()?;
                db.get(col).map(|e| e.timestamp)
            }
            CoarseMatches::List(list) => list
                .iter()
                .find(|(q, _)| *q == query_index)
                .map(|&(_, t)| t),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_coarse(&text)
    }
}

/// Auto-detects the format: a comma on the first data line means match list.
pub fn parse_coarse(text: &str) -> Result<CoarseMatches> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .ok_or_else(|| Error::Coarse("empty file".into()))?;
    if first.contains(',') {
        parse_match_list(text).map(CoarseMatches::List)
    } else {
        parse_confusion_matrix(text).map(CoarseMatches::Matrix)
    }
}

pub fn parse_match_list(text: &str) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (q, t) = l
            .split_once(',')
            .ok_or_else(|| Error::Coarse(format!("line {}: expected `query,timestamp`", idx + 1)))?;
        let q: usize = q
            .trim()
            .parse()
            .map_err(|_| Error::Coarse(format!("line {}: bad query index", idx + 1)))?;
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::Coarse(format!("line {}: bad timestamp", idx + 1)))?;
        if !t.is_finite() {
            return Err(Error::Coarse(format!("line {}: non-finite timestamp", idx + 1)));
        }
        out.push((q, t));
    }
    Ok(out)
}

pub fn format_match_list(list: &[(usize, f64)]) -> String {
    let mut out = String::from("# query_index,matched_reference_timestamp\n");
    for (q, t) in list {
        let _ = writeln!(out, "{q},{t:?}");
    }
    out
}
