//! Feature-map data model and the on-disk formats used by every other module.
//!
//! FMAP layout (all little-endian):
//!
//! ```text
//! offset  size        field
//! 0       4           magic  b"FMAP"
//! 4       4           channels  u32
//! 8       4           height    u32
//! 12      4           width     u32
//! 16      4*C*H*W     f32 payload, channel-major then row-major
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

pub const FMAP_MAGIC: &[u8; 4] = b"FMAP";
pub const FMAP_HEADER_LEN: usize = 16;

/// Tolerance on the per-pixel class-probability sum of a [`ProbMap`].
pub const PROB_SUM_TOL: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("bad magic: expected \"FMAP\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("header truncated: {len} bytes, need {FMAP_HEADER_LEN}")]
    TruncatedHeader { len: usize },
    #[error("dimension overflow: {channels}x{height}x{width} does not fit in memory")]
    DimensionOverflow { channels: u64, height: u64, width: u64 },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("trailing bytes: {extra} bytes after payload")]
    TrailingBytes { extra: usize },
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f32 },
    #[error("zero dimension: {channels}x{height}x{width}")]
    ZeroDimension { channels: usize, height: usize, width: usize },
    #[error("data length {len} does not match {channels}x{height}x{width}")]
    LengthMismatch { len: usize, channels: usize, height: usize, width: usize },
    #[error("pixel {pixel}: class probabilities sum to {sum}, expected 1")]
    NotNormalized { pixel: usize, sum: f64 },
    #[error("probability {value} at index {index} outside [0, 1]")]
    ProbabilityRange { index: usize, value: f32 },
    #[error("label {label} at pixel {pixel} is not below class count {classes}")]
    LabelOutOfRange { pixel: usize, label: u32, classes: usize },
    #[error("value {value} at index {index} is not a class index")]
    NotALabel { index: usize, value: f32 },
    #[error("unsupported image format: {0}")]
    UnsupportedImage(String),
    #[error("malformed image header: {0}")]
    MalformedHeader(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = TensorError> = std::result::Result<T, E>;

/// A `C×H×W` array of finite `f32` activations stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(channels, height, width, data.len())?;
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(TensorError::NonFinite { index, value });
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        check_dims(channels, height, width, channels * height * width)?;
        Ok(Self { channels, height, width, data: vec![0.0; channels * height * width] })
    }

    /// Builds a map by evaluating `f(channel, row, col)` at every entry.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for r in 0..height {
                for col in 0..width {
                    data.push(f(c, r, col));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    /// Stacks single- or multi-channel maps of identical spatial size along the channel axis.
    pub fn concat_channels(maps: &[FeatureMap]) -> Result<Self> {
        let first = maps.first().ok_or(TensorError::ZeroDimension {
            channels: 0,
            height: 0,
            width: 0,
        })?;
        let (height, width) = (first.height, first.width);
        let mut data = Vec::new();
        let mut channels = 0;
        for m in maps {
            if m.height != height || m.width != width {
                return Err(TensorError::LengthMismatch {
                    len: m.data.len(),
                    channels: m.channels,
                    height,
                    width,
                });
            }
            channels += m.channels;
            data.extend_from_slice(&m.data);
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.pixels();
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn get(&self, c: usize, row: usize, col: usize) -> f32 {
        self.data[(c * self.height + row) * self.width + col]
    }

    /// Applies `f` entry-wise. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Self> {
        Self::new(self.channels, self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Shape string in `CxHxW` form, as written to manifests.
    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.channels, self.height, self.width)
    }

    /// Serializes to the FMAP byte layout.
    pub fn to_fmap_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FMAP_HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(FMAP_MAGIC);
        for d in [self.channels, self.height, self.width] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_fmap_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < FMAP_HEADER_LEN {
            if bytes.len() >= 4 && &bytes[..4] != FMAP_MAGIC {
                return Err(TensorError::BadMagic { found: bytes[..4].try_into().unwrap() });
            }
            return Err(TensorError::TruncatedHeader { len: bytes.len() });
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if &magic != FMAP_MAGIC {
            return Err(TensorError::BadMagic { found: magic });
        }
        let dim = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let (c, h, w) = (dim(0), dim(1), dim(2));
        let overflow = || TensorError::DimensionOverflow {
            channels: c as u64,
            height: h as u64,
            width: w as u64,
        };
        let count = (c as usize)
            .checked_mul(h as usize)
            .and_then(|n| n.checked_mul(w as usize))
            .ok_or_else(overflow)?;
        let expected = count.checked_mul(4).ok_or_else(overflow)?;
        let payload = &bytes[FMAP_HEADER_LEN..];
        if payload.len() < expected {
            return Err(TensorError::TruncatedPayload { expected, found: payload.len() });
        }
        if payload.len() > expected {
            return Err(TensorError::TrailingBytes { extra: payload.len() - expected });
        }
        let data = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Self::new(c as usize, h as usize, w as usize, data)
    }
}

fn check_dims(channels: usize, height: usize, width: usize, len: usize) -> Result<()> {
    if channels == 0 || height == 0 || width == 0 {
        return Err(TensorError::ZeroDimension { channels, height, width });
    }
    if u32::try_from(channels).is_err() || u32::try_from(height).is_err() || u32::try_from(width).is_err() {
        return Err(TensorError::DimensionOverflow {
            channels: channels as u64,
            height: height as u64,
            width: width as u64,
        });
    }
    let expected = channels
        .checked_mul(height)
        .and_then(|n| n.checked_mul(width))
        .ok_or(TensorError::DimensionOverflow {
            channels: channels as u64,
            height: height as u64,
            width: width as u64,
        })?;
    if expected != len {
        return Err(TensorError::LengthMismatch { len, channels, height, width });
    }
    Ok(())
}

pub fn read_fmap(path: impl AsRef<Path>) -> Result<FeatureMap> {
    let bytes = fs::read(path)?;
    FeatureMap::from_fmap_bytes(&bytes)
}

pub fn write_fmap(map: &FeatureMap, path: impl AsRef<Path>) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&map.to_fmap_bytes())?;
    Ok(())
}

/// Per-pixel class probabilities, `classes×H×W`, class-major like [`FeatureMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    classes: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ProbMap {
    pub fn new(classes: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        let map = FeatureMap::new(classes, height, width, data)?;
        Self::from_feature_map(map)
    }

    /// Reinterprets a feature map whose channels hold class probabilities.
    pub fn from_feature_map(map: FeatureMap) -> Result<Self> {
        let (classes, height, width) = map.shape();
        let plane = height * width;
        if let Some((index, &value)) =
            map.data.iter().enumerate().find(|(_, &v)| !(0.0..=1.0).contains(&v))
        {
            return Err(TensorError::ProbabilityRange { index, value });
        }
        for pixel in 0..plane {
            let sum: f64 = (0..classes).map(|c| map.data[c * plane + pixel] as f64).sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(TensorError::NotNormalized { pixel, sum });
            }
        }
        Ok(Self { classes, height, width, data: map.data })
    }

    /// Per-pixel softmax over the channel axis.
    pub fn softmax(map: &FeatureMap) -> Self {
        let (classes, height, width) = map.shape();
        let plane = height * width;
        let mut data = vec![0.0f32; map.data.len()];
        for pixel in 0..plane {
            let max = (0..classes)
                .map(|c| map.data[c * plane + pixel] as f64)
                .fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> =
                (0..classes).map(|c| (map.data[c * plane + pixel] as f64 - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            for (c, e) in exps.iter().enumerate() {
                data[c * plane + pixel] = (e / z) as f32;
            }
        }
        Self { classes, height, width, data }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn prob(&self, class: usize, pixel: usize) -> f32 {
        self.data[class * self.pixels() + pixel]
    }

    /// Index of the most probable class at each pixel (lowest index on ties).
    pub fn argmax(&self) -> Vec<u32> {
        (0..self.pixels())
            .map(|p| {
                let mut best = 0;
                for c in 1..self.classes {
                    if self.prob(c, p) > self.prob(best, p) {
                        best = c;
                    }
                }
                best as u32
            })
            .collect()
    }

    pub fn to_feature_map(&self) -> FeatureMap {
        FeatureMap {
            channels: self.classes,
            height: self.height,
            width: self.width,
            data: self.data.clone(),
        }
    }
}

/// Per-pixel class indices; pixels equal to `ignore_index` are excluded from losses.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    data: Vec<u32>,
    ignore_index: u32,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, data: Vec<u32>, ignore_index: u32) -> Result<Self> {
        check_dims(1, height, width, data.len())?;
        Ok(Self { height, width, data, ignore_index })
    }

    /// Reads labels from a single-channel map holding integral class indices.
    pub fn from_feature_map(map: &FeatureMap, ignore_index: u32) -> Result<Self> {
        if map.channels() != 1 {
            return Err(TensorError::LengthMismatch {
                len: map.data.len(),
                channels: 1,
                height: map.height,
                width: map.width,
            });
        }
        let mut data = Vec::with_capacity(map.data.len());
        for (index, &v) in map.data.iter().enumerate() {
            if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f32 {
                return Err(TensorError::NotALabel { index, value: v });
            }
            data.push(v as u32);
        }
        Self::new(map.height, map.width, data, ignore_index)
    }

    /// Checks every non-ignored label against a class count.
    pub fn validate(&self, classes: usize) -> Result<()> {
        for (pixel, &label) in self.data.iter().enumerate() {
            if label != self.ignore_index && label as usize >= classes {
                return Err(TensorError::LabelOutOfRange { pixel, label, classes });
            }
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn ignore_index(&self) -> u32 {
        self.ignore_index
    }

    pub fn to_feature_map(&self) -> FeatureMap {
        FeatureMap {
            channels: 1,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&l| l as f32).collect(),
        }
    }
}

/// Reads a binary 8-bit PGM (`P5`) or PPM (`P6`) into a map scaled to `[0, 1]`.
pub fn read_image(path: impl AsRef<Path>) -> Result<FeatureMap> {
    let bytes = fs::read(path)?;
    decode_pnm(&bytes)
}

pub fn decode_pnm(bytes: &[u8]) -> Result<FeatureMap> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some(other) => {
            return Err(TensorError::UnsupportedImage(format!(
                "magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(TensorError::MalformedHeader("file shorter than magic".into())),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        *field = next_header_int(bytes, &mut pos)?;
        if *field == 0 {
            return Err(TensorError::MalformedHeader(format!("header field {i} is zero")));
        }
    }
    let [width, height, maxval] = fields;
    if maxval > 255 {
        return Err(TensorError::UnsupportedImage(format!("maxval {maxval} is not 8-bit")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(TensorError::MalformedHeader("missing raster separator".into())),
    }
    let count = channels * width * height;
    let raster = &bytes[pos..];
    if raster.len() < count {
        return Err(TensorError::TruncatedPayload { expected: count, found: raster.len() });
    }
    let plane = width * height;
    let mut data = vec![0.0f32; count];
    for (i, &b) in raster[..count].iter().enumerate() {
        let (pixel, c) = (i / channels, i % channels);
        data[c * plane + pixel] = b as f32 / 255.0;
    }
    FeatureMap::new(channels, height, width, data)
}

fn next_header_int(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(TensorError::MalformedHeader("header ended early".into())),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(TensorError::MalformedHeader(format!("expected integer at byte {start}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .unwrap()
        .parse()
        .map_err(|e| TensorError::MalformedHeader(format!("{e}")))
}
