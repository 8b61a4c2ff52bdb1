//! Per-pixel sample-quality heat maps and the `LUHM` binary format.
//!
//! Layout: the four magic bytes `LUHM`, little-endian `u32` width and height,
//! then `width * height` little-endian `f32` values in `[0, 1]`, row-major.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const LUHM_MAGIC: &[u8; 4] = b"LUHM";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl HeatMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::HeatMap(format!("zero dimension {width}x{height}")));
        }
        if width.checked_mul(height) != Some(values.len()) {
            return Err(Error::HeatMap(format!(
                "{} values for {width}x{height}",
                values.len()
            )));
        }
        if let Some(i) = values
            .iter()
            .position(|v| !(v.is_finite() && (0.0..=1.0).contains(v)))
        {
            return Err(Error::HeatMap(format!(
                "value {} at index {i} outside [0, 1]",
                values[i]
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        parse_luhm(&bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, encode_luhm(self)).map_err(|e| Error::io(path, e))
    }
}

pub fn encode_luhm(map: &HeatMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * map.values.len());
    out.extend_from_slice(LUHM_MAGIC);
    out.extend_from_slice(&(map.width as u32).to_le_bytes());
    out.extend_from_slice(&(map.height as u32).to_le_bytes());
    for v in &map.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn parse_luhm(bytes: &[u8]) -> Result<HeatMap> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != LUHM_MAGIC {
        return Err(Error::HeatMap("missing LUHM header".into()));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::HeatMap("dimensions overflow".into()))?;
    if body.len() != expected {
        return Err(Error::HeatMap(format!(
            "payload is {} bytes, expected {expected} for {width}x{height}",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    HeatMap::new(width, height, values)
}
