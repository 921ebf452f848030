//! Contourlet decomposition: a Laplacian pyramid for scale, a directional
//! filter bank for orientation, iterated on the running low-pass image.
//!
//! The directional filter bank works in the frequency domain. Each channel
//! is transformed with a 2D FFT, multiplied by `2^m` angular wedge masks and
//! transformed back, so the bands stay at full resolution. Wedge masks sum to
//! one at every frequency bin, which makes the bands an exact additive split
//! of their input.

use std::f64::consts::{FRAC_PI_4, PI};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::tensor::{FeatureMap, TensorError};

/// Burt–Adelson binomial kernel, used separably for analysis and synthesis.
pub const BINOMIAL_5: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Width of the raised-cosine transition across wedge edges, in frequency bins.
pub const WEDGE_TRANSITION_BINS: f64 = 4.0;

pub const DEFAULT_LEVELS_M: [usize; 2] = [4, 3];
pub const DEFAULT_FACTOR: usize = 2;

#[derive(Debug, Error)]
pub enum ContourletError {
    #[error("spatial size {height}x{width} is smaller than downsampling factor {p}")]
    TooSmall { height: usize, width: usize, p: usize },
    #[error("downsampling factor must be at least 2, got {0}")]
    InvalidFactor(usize),
    #[error("directional tree depth must be at least 1, got {0}")]
    InvalidDepth(usize),
    #[error("directional filter bank needs at least 2x2 input, got {height}x{width}")]
    Degenerate { height: usize, width: usize },
    #[error("no decomposition levels requested")]
    NoLevels,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T, E = ContourletError> = std::result::Result<T, E>;

/// One Laplacian pyramid step: decimated low-pass plus full-resolution residual.
#[derive(Debug, Clone, PartialEq)]
pub struct LpPair {
    pub low: FeatureMap,
    pub high: FeatureMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalSubbands {
    pub m: usize,
    pub bands: Vec<FeatureMap>,
}

impl DirectionalSubbands {
    /// Element-wise sum of all bands; equals the decomposed input.
    pub fn sum(&self) -> FeatureMap {
        let first = &self.bands[0];
        let mut acc = vec![0.0f64; first.data().len()];
        for band in &self.bands {
            for (a, &v) in acc.iter_mut().zip(band.data()) {
                *a += v as f64;
            }
        }
        let (c, h, w) = first.shape();
        FeatureMap::new(c, h, w, acc.into_iter().map(|v| v as f32).collect())
            .expect("sum of finite bands is finite")
    }

    /// Indices of the bands carrying vertical detail (first half of the bank).
    pub fn vertical_group(&self) -> std::ops::Range<usize> {
        0..self.bands.len() / 2
    }

    pub fn horizontal_group(&self) -> std::ops::Range<usize> {
        self.bands.len() / 2..self.bands.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourletLevel {
    pub lp: LpPair,
    pub bands: DirectionalSubbands,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourletSet {
    pub levels: Vec<ContourletLevel>,
    pub levels_m: Vec<usize>,
    pub p: usize,
}

impl ContourletSet {
    /// Inverts the whole decomposition: sums each level's bands back into its
    /// high-pass and chains the pyramid reconstruction from the coarsest level.
    pub fn reconstruct(&self) -> Result<FeatureMap> {
        let mut running = self
            .levels
            .last()
            .map(|l| l.lp.low.clone())
            .ok_or(ContourletError::NoLevels)?;
        for level in self.levels.iter().rev() {
            let pair = LpPair { low: running, high: level.bands.sum() };
            running = lp_reconstruct(&pair, self.p)?;
        }
        Ok(running)
    }

    /// Bands of every level, level-major.
    pub fn band_levels(&self) -> Vec<&[FeatureMap]> {
        self.levels.iter().map(|l| l.bands.bands.as_slice()).collect()
    }
}

fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Separable 5-tap filtering of one `h×w` plane, reflect-101 borders, scaled by `gain²`.
fn filter_plane(plane: &[f64], h: usize, w: usize, gain: f64) -> Vec<f64> {
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (k, &wt) in BINOMIAL_5.iter().enumerate() {
                acc += wt * plane[r * w + reflect(c as isize + k as isize - 2, w)];
            }
            tmp[r * w + c] = acc * gain;
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (k, &wt) in BINOMIAL_5.iter().enumerate() {
                acc += wt * tmp[reflect(r as isize + k as isize - 2, h) * w + c];
            }
            out[r * w + c] = acc * gain;
        }
    }
    out
}

fn check_factor(p: usize) -> Result<()> {
    if p < 2 {
        return Err(ContourletError::InvalidFactor(p));
    }
    Ok(())
}

/// Zero-insertion upsampling of `low` by `p`, synthesis filtering with gain `p`
/// per dimension, then a centered crop to `h×w`.
fn predict(low: &FeatureMap, h: usize, w: usize, p: usize) -> Vec<f32> {
    let (channels, lh, lw) = low.shape();
    let (uh, uw) = (lh * p, lw * p);
    let (off_r, off_c) = ((uh - h) / 2, (uw - w) / 2);
    let mut out = Vec::with_capacity(channels * h * w);
    for c in 0..channels {
        let src = low.channel(c);
        let mut up = vec![0.0f64; uh * uw];
        for r in 0..lh {
            for col in 0..lw {
                up[(r * p) * uw + col * p] = src[r * lw + col] as f64;
            }
        }
        let filtered = filter_plane(&up, uh, uw, p as f64);
        for r in 0..h {
            for col in 0..w {
                out.push(filtered[(r + off_r) * uw + col + off_c] as f32);
            }
        }
    }
    out
}

pub fn lp_decompose(x: &FeatureMap, p: usize) -> Result<LpPair> {
    check_factor(p)?;
    let (channels, h, w) = x.shape();
    if h < p || w < p {
        return Err(ContourletError::TooSmall { height: h, width: w, p });
    }
    let (lh, lw) = (h.div_ceil(p), w.div_ceil(p));
    let mut low = Vec::with_capacity(channels * lh * lw);
    for c in 0..channels {
        let plane: Vec<f64> = x.channel(c).iter().map(|&v| v as f64).collect();
        let blurred = filter_plane(&plane, h, w, 1.0);
        for r in 0..lh {
            for col in 0..lw {
                low.push(blurred[(r * p) * w + col * p] as f32);
            }
        }
    }
    let low = FeatureMap::new(channels, lh, lw, low)?;
    let pred = predict(&low, h, w, p);
    let high: Vec<f32> = x.data().iter().zip(&pred).map(|(&v, &q)| v - q).collect();
    let high = FeatureMap::new(channels, h, w, high)?;
    Ok(LpPair { low, high })
}

pub fn lp_reconstruct(pair: &LpPair, p: usize) -> Result<FeatureMap> {
    check_factor(p)?;
    let (channels, h, w) = pair.high.shape();
    let expected = (channels, h.div_ceil(p), w.div_ceil(p));
    if pair.low.shape() != expected {
        return Err(ContourletError::ShapeMismatch(format!(
            "low-pass is {}, expected {}x{}x{} for high-pass {}",
            pair.low.shape_string(),
            expected.0,
            expected.1,
            expected.2,
            pair.high.shape_string()
        )));
    }
    let pred = predict(&pair.low, h, w, p);
    let data = pred.iter().zip(pair.high.data()).map(|(&q, &v)| q + v).collect();
    Ok(FeatureMap::new(channels, h, w, data)?)
}

/// Signed frequency of FFT bin `k` for a length-`n` axis.
fn signed_freq(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

fn raised_cosine(t: f64) -> f64 {
    0.5 - 0.5 * (PI * t.clamp(0.0, 1.0)).cos()
}

/// Wedge masks for an `h×w` spectrum, band-major, bins in FFT order.
///
/// Wedge `b` covers frequency orientations `[-π/4 + bπ/2^m, -π/4 + (b+1)π/2^m)`
/// modulo π, so the first `2^(m-1)` wedges hug the horizontal-frequency axis
/// (vertical stripes) and the rest hug the vertical-frequency axis. Each bin
/// carries weight for at most two neighbouring wedges and the weights sum to 1.
/// The DC bin belongs entirely to band 0.
pub fn wedge_masks(h: usize, w: usize, m: usize) -> Result<Vec<Vec<f64>>> {
    if m < 1 {
        return Err(ContourletError::InvalidDepth(m));
    }
    if h < 2 || w < 2 {
        return Err(ContourletError::Degenerate { height: h, width: w });
    }
    let n_bands = 1usize << m;
    let wedge = PI / n_bands as f64;
    let scale = h.max(w) as f64;
    let mut masks = vec![vec![0.0; h * w]; n_bands];
    for ky in 0..h {
        for kx in 0..w {
            let idx = ky * w + kx;
            // normalized frequency, expressed in bins of the longer axis
            let fy = signed_freq(ky, h) / h as f64 * scale;
            let fx = signed_freq(kx, w) / w as f64 * scale;
            let radius = fx.hypot(fy);
            if radius == 0.0 {
                masks[0][idx] = 1.0;
                continue;
            }
            let orientation = (fy.atan2(fx) + FRAC_PI_4).rem_euclid(PI);
            let q = orientation / wedge;
            let band = (q.floor() as usize).min(n_bands - 1);
            let frac = q - band as f64;
            let (neighbour, edge_angle) = if frac < 0.5 {
                ((band + n_bands - 1) % n_bands, frac * wedge)
            } else {
                ((band + 1) % n_bands, (1.0 - frac) * wedge)
            };
            let distance = radius * edge_angle.sin();
            let own = raised_cosine(0.5 + distance / WEDGE_TRANSITION_BINS);
            masks[band][idx] += own;
            masks[neighbour][idx] += 1.0 - own;
        }
    }
    Ok(masks)
}

/// In-place 2D FFT over an `h×w` row-major buffer. The inverse is unnormalized.
pub(crate) struct Fft2 {
    row_fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    col_fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    row_inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    col_inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    h: usize,
    w: usize,
}

impl Fft2 {
    pub(crate) fn new(h: usize, w: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            row_fwd: planner.plan_fft_forward(w),
            col_fwd: planner.plan_fft_forward(h),
            row_inv: planner.plan_fft_inverse(w),
            col_inv: planner.plan_fft_inverse(h),
            h,
            w,
        }
    }

    fn run(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        for r in buf.chunks_exact_mut(self.w) {
            row.process(r);
        }
        let mut column = vec![Complex::new(0.0, 0.0); self.h];
        for c in 0..self.w {
            for r in 0..self.h {
                column[r] = buf[r * self.w + c];
            }
            col.process(&mut column);
            for r in 0..self.h {
                buf[r * self.w + c] = column[r];
            }
        }
    }

    pub(crate) fn forward(&self, buf: &mut [Complex<f64>]) {
        self.run(buf, false);
    }

    pub(crate) fn inverse(&self, buf: &mut [Complex<f64>]) {
        self.run(buf, true);
        let norm = 1.0 / (self.h * self.w) as f64;
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }
}

pub fn dfb_decompose(high: &FeatureMap, m: usize) -> Result<DirectionalSubbands> {
    let (channels, h, w) = high.shape();
    let masks = wedge_masks(h, w, m)?;
    let fft = Fft2::new(h, w);
    let mut bands: Vec<Vec<f32>> = vec![Vec::with_capacity(channels * h * w); masks.len()];
    let mut work = vec![Complex::new(0.0, 0.0); h * w];
    for c in 0..channels {
        let mut spectrum: Vec<Complex<f64>> =
            high.channel(c).iter().map(|&v| Complex::new(v as f64, 0.0)).collect();
        fft.forward(&mut spectrum);
        for (mask, out) in masks.iter().zip(bands.iter_mut()) {
            for ((dst, &s), &g) in work.iter_mut().zip(&spectrum).zip(mask) {
                *dst = s * g;
            }
            fft.inverse(&mut work);
            out.extend(work.iter().map(|z| z.re as f32));
        }
    }
    let bands = bands
        .into_iter()
        .map(|data| FeatureMap::new(channels, h, w, data))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DirectionalSubbands { m, bands })
}

/// Mask-weighted spectral energy per band, `Σ_c Σ_f M_b(f)|X_c(f)|² / (H·W)`.
///
/// The weights sum to one per bin, so by Parseval the band energies add up to
/// the spatial energy `Σ x²` of the input.
pub fn band_spectral_energies(high: &FeatureMap, m: usize) -> Result<Vec<f64>> {
    let (channels, h, w) = high.shape();
    let masks = wedge_masks(h, w, m)?;
    let fft = Fft2::new(h, w);
    let mut energies = vec![0.0; masks.len()];
    for c in 0..channels {
        let mut spectrum: Vec<Complex<f64>> =
            high.channel(c).iter().map(|&v| Complex::new(v as f64, 0.0)).collect();
        fft.forward(&mut spectrum);
        for (mask, e) in masks.iter().zip(energies.iter_mut()) {
            *e += spectrum.iter().zip(mask).map(|(s, g)| g * s.norm_sqr()).sum::<f64>();
        }
    }
    let norm = (h * w) as f64;
    Ok(energies.into_iter().map(|e| e / norm).collect())
}

pub fn cdm_forward(x: &FeatureMap, levels_m: &[usize], p: usize) -> Result<ContourletSet> {
    if levels_m.is_empty() {
        return Err(ContourletError::NoLevels);
    }
    let mut levels = Vec::with_capacity(levels_m.len());
    let mut running = x.clone();
    for &m in levels_m {
        let lp = lp_decompose(&running, p)?;
        let bands = dfb_decompose(&lp.high, m)?;
        running = lp.low.clone();
        levels.push(ContourletLevel { lp, bands });
    }
    Ok(ContourletSet { levels, levels_m: levels_m.to_vec(), p })
}

/// Bilinear resize with half-pixel centers and edge clamping.
pub fn resize_bilinear(map: &FeatureMap, out_h: usize, out_w: usize) -> Result<FeatureMap> {
    let (channels, h, w) = map.shape();
    if (h, w) == (out_h, out_w) {
        return Ok(map.clone());
    }
    let axis = |dst: usize, src_len: usize, dst_len: usize| {
        let pos = ((dst as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5).max(0.0);
        let i0 = (pos.floor() as usize).min(src_len - 1);
        let i1 = (i0 + 1).min(src_len - 1);
        (i0, i1, pos - i0 as f64)
    };
    let rows: Vec<_> = (0..out_h).map(|r| axis(r, h, out_h)).collect();
    let cols: Vec<_> = (0..out_w).map(|c| axis(c, w, out_w)).collect();
    let mut data = Vec::with_capacity(channels * out_h * out_w);
    for c in 0..channels {
        let plane = map.channel(c);
        for &(r0, r1, fr) in &rows {
            for &(c0, c1, fc) in &cols {
                let at = |r: usize, cc: usize| plane[r * w + cc] as f64;
                let top = at(r0, c0) * (1.0 - fc) + at(r0, c1) * fc;
                let bottom = at(r1, c0) * (1.0 - fc) + at(r1, c1) * fc;
                data.push((top * (1.0 - fr) + bottom * fr) as f32);
            }
        }
    }
    Ok(FeatureMap::new(channels, out_h, out_w, data)?)
}

/// Concatenates bands along the channel axis, level-major then band-minor,
/// after resizing every band to the spatial size of the first level.
pub fn flatten_band_levels(levels: &[&[FeatureMap]]) -> Result<FeatureMap> {
    let first = levels
        .first()
        .and_then(|l| l.first())
        .ok_or(ContourletError::NoLevels)?;
    let (h, w) = (first.height(), first.width());
    let mut resized = Vec::new();
    for level in levels {
        for band in level.iter() {
            resized.push(resize_bilinear(band, h, w)?);
        }
    }
    Ok(FeatureMap::concat_channels(&resized)?)
}

/// Structural texture descriptor: all bandpass directional subbands stacked.
pub fn flatten_structural(cs: &ContourletSet) -> Result<FeatureMap> {
    flatten_band_levels(&cs.band_levels())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> FeatureMap {
        FeatureMap::from_fn(1, h, w, |_, r, c| (r * w + c) as f32 / (h * w) as f32).unwrap()
    }

    /// Direct (non-separable) reference for the decimated low-pass.
    fn reference_low(x: &FeatureMap, p: usize) -> Vec<f32> {
        let (_, h, w) = x.shape();
        let mut out = Vec::new();
        for r in (0..h).step_by(p) {
            for c in (0..w).step_by(p) {
                let mut acc = 0.0f64;
                for dr in -2isize..=2 {
                    for dc in -2isize..=2 {
                        let rr = reflect(r as isize + dr, h);
                        let cc = reflect(c as isize + dc, w);
                        acc += BINOMIAL_5[(dr + 2) as usize]
                            * BINOMIAL_5[(dc + 2) as usize]
                            * x.get(0, rr, cc) as f64;
                    }
                }
                out.push(acc as f32);
            }
        }
        out
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(6, 5), 2);
        assert_eq!(reflect(-3, 2), 1);
        assert_eq!(reflect(7, 1), 0);
    }

    #[test]
    fn constant_has_zero_residual() {
        for &(h, w) in &[(8, 8), (7, 9), (2, 2), (5, 3)] {
            let x = FeatureMap::from_fn(2, h, w, |_, _, _| 0.75).unwrap();
            let pair = lp_decompose(&x, 2).unwrap();
            assert!(pair.high.data().iter().all(|v| v.abs() < 1e-5), "{h}x{w}");
            assert!(pair.low.data().iter().all(|v| (v - 0.75).abs() < 1e-6));
        }
    }

    #[test]
    fn ramp_shapes_and_reference_low() {
        let x = ramp(8, 8);
        let pair = lp_decompose(&x, 2).unwrap();
        assert_eq!(pair.low.shape(), (1, 4, 4));
        assert_eq!(pair.high.shape(), (1, 8, 8));
        for (a, b) in pair.low.data().iter().zip(reference_low(&x, 2)) {
            assert!((a - b).abs() < 1e-6);
        }
        let back = lp_reconstruct(&pair, 2).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn odd_sizes_use_ceil_division() {
        let x = ramp(9, 5);
        let pair = lp_decompose(&x, 2).unwrap();
        assert_eq!(pair.low.shape(), (1, 5, 3));
        let x = ramp(7, 7);
        let pair = lp_decompose(&x, 3).unwrap();
        assert_eq!(pair.low.shape(), (1, 3, 3));
        let back = lp_reconstruct(&pair, 3).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn reconstruct_dc_and_zero() {
        let low = FeatureMap::from_fn(1, 4, 4, |_, _, _| 2.5).unwrap();
        let high = FeatureMap::zeros(1, 8, 8).unwrap();
        let out = lp_reconstruct(&LpPair { low, high }, 2).unwrap();
        assert!(out.data().iter().all(|v| (v - 2.5).abs() < 1e-6));

        let pair = LpPair {
            low: FeatureMap::zeros(1, 4, 4).unwrap(),
            high: FeatureMap::zeros(1, 8, 8).unwrap(),
        };
        assert!(lp_reconstruct(&pair, 2).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lp_errors() {
        let x = ramp(1, 8);
        assert!(matches!(lp_decompose(&x, 2), Err(ContourletError::TooSmall { .. })));
        assert!(matches!(lp_decompose(&ramp(4, 4), 1), Err(ContourletError::InvalidFactor(1))));
        let pair = LpPair { low: ramp(3, 4), high: ramp(8, 8) };
        assert!(matches!(lp_reconstruct(&pair, 2), Err(ContourletError::ShapeMismatch(_))));
    }

    #[test]
    fn masks_partition_unity() {
        for m in 1..=4 {
            for &(h, w) in &[(16, 16), (9, 12), (2, 2)] {
                let masks = wedge_masks(h, w, m).unwrap();
                assert_eq!(masks.len(), 1 << m);
                for i in 0..h * w {
                    let s: f64 = masks.iter().map(|mk| mk[i]).sum();
                    assert!((s - 1.0).abs() < 1e-12);
                    assert!(masks.iter().all(|mk| (0.0..=1.0).contains(&mk[i])));
                }
            }
        }
    }

    #[test]
    fn three_level_tree_gives_eight_bands() {
        let h = ramp(16, 16);
        let sb = dfb_decompose(&h, 3).unwrap();
        assert_eq!(sb.bands.len(), 8);
        assert_eq!(sb.vertical_group(), 0..4);
        let sum = sb.sum();
        for (a, b) in sum.data().iter().zip(h.data()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn dfb_errors() {
        assert!(matches!(dfb_decompose(&ramp(8, 8), 0), Err(ContourletError::InvalidDepth(0))));
        assert!(matches!(dfb_decompose(&ramp(1, 8), 2), Err(ContourletError::Degenerate { .. })));
    }

    #[test]
    fn vertical_stripes_land_in_first_half() {
        let x = FeatureMap::from_fn(1, 32, 32, |_, _, c| {
            (2.0 * std::f32::consts::PI * 4.0 * c as f32 / 32.0).sin()
        })
        .unwrap();
        for m in 1..=4 {
            let sb = dfb_decompose(&x, m).unwrap();
            let energy: Vec<f64> = sb
                .bands
                .iter()
                .map(|b| b.data().iter().map(|&v| (v as f64).powi(2)).sum())
                .collect();
            let vertical: f64 = energy[sb.vertical_group()].iter().sum();
            let total: f64 = energy.iter().sum();
            assert!(vertical / total > 0.99, "m={m}: {}", vertical / total);
        }
    }

    #[test]
    fn spectral_energies_follow_parseval() {
        let x = FeatureMap::from_fn(2, 12, 10, |c, r, col| ((c + 1) * r * 7 + col * 3) as f32 % 5.0)
            .unwrap();
        let e = band_spectral_energies(&x, 2).unwrap();
        let total: f64 = x.data().iter().map(|&v| (v as f64).powi(2)).sum();
        assert!((e.iter().sum::<f64>() - total).abs() < 1e-9 * total);
    }

    #[test]
    fn cdm_shapes() {
        let x = ramp(64, 64);
        let cs = cdm_forward(&x, &[4, 3], 2).unwrap();
        assert_eq!(cs.levels.len(), 2);
        assert_eq!(cs.levels[0].bands.bands.len(), 16);
        assert_eq!(cs.levels[0].bands.bands[0].shape(), (1, 64, 64));
        assert_eq!(cs.levels[1].bands.bands.len(), 8);
        assert_eq!(cs.levels[1].bands.bands[0].shape(), (1, 32, 32));
        assert_eq!(cs.levels[1].lp.low.shape(), (1, 16, 16));
        // level 2 consumes level 1's low-pass
        assert_eq!(lp_decompose(&cs.levels[0].lp.low, 2).unwrap(), cs.levels[1].lp);

        let flat = flatten_structural(&cs).unwrap();
        assert_eq!(flat.shape(), (24, 64, 64));

        let single = cdm_forward(&x, &[1], 2).unwrap();
        assert_eq!(single.levels[0].bands.bands.len(), 2);
        assert_eq!(flatten_structural(&single).unwrap().shape(), (2, 64, 64));
        assert!(matches!(cdm_forward(&x, &[], 2), Err(ContourletError::NoLevels)));
        assert!(cdm_forward(&ramp(4, 4), &[1, 1, 1], 2).is_err());
    }

    #[test]
    fn bilinear_resize_preserves_constants() {
        let x = FeatureMap::from_fn(1, 3, 5, |_, _, _| 1.5).unwrap();
        let y = resize_bilinear(&x, 7, 11).unwrap();
        assert_eq!(y.shape(), (1, 7, 11));
        assert!(y.data().iter().all(|v| (v - 1.5).abs() < 1e-6));
    }
}
