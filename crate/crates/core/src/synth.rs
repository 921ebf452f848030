//! Synthetic teacher/student feature pairs and brute-force reference
//! computations.
//!
//! The oracles here deliberately share no code with the modules they check:
//! they take plain slices and recompute everything with direct loops.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::{FeatureMap, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Constant(f32),
    /// Even channels ramp along the width, odd channels along the height.
    Ramp,
    /// `0.5 + 0.5·sin(...)` stripes; `angle_deg = 90` gives vertical stripes,
    /// `0` horizontal ones. Channel `c` is phase-shifted by `c·π/2`.
    Grating { angle_deg: f64, cycles: f64 },
    /// Each pixel draws one of two centers, then every channel adds uniform jitter.
    Bimodal { low: f32, high: f32, spread: f32 },
    /// Standard normal entries.
    Noise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub pattern: Pattern,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Standard deviation of the Gaussian noise added to the student copy.
    pub sigma: f32,
    pub seed: u64,
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}

pub fn generate_teacher(spec: &SynthSpec) -> Result<FeatureMap> {
    let (c, h, w) = (spec.channels, spec.height, spec.width);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.pattern {
        Pattern::Constant(v) => FeatureMap::from_fn(c, h, w, |_, _, _| v),
        Pattern::Ramp => FeatureMap::from_fn(c, h, w, |ch, r, col| {
            let (i, n) = if ch % 2 == 0 { (col, w) } else { (r, h) };
            if n > 1 { i as f32 / (n - 1) as f32 } else { 0.0 }
        }),
        Pattern::Grating { angle_deg, cycles } => {
            let theta = angle_deg.to_radians();
            let (along_w, along_h) = (snap(theta.sin()), snap(theta.cos()));
            FeatureMap::from_fn(c, h, w, |ch, r, col| {
                let phase = 2.0 * PI * cycles * (col as f64 * along_w / w as f64 - r as f64 * along_h / h as f64);
                (0.5 + 0.5 * (phase + ch as f64 * PI / 2.0).sin()) as f32
            })
        }
        Pattern::Bimodal { low, high, spread } => {
            let picks: Vec<bool> = (0..h * w).map(|_| rng.random_bool(0.5)).collect();
            let mut data = Vec::with_capacity(c * h * w);
            for _ in 0..c {
                for &hi in &picks {
                    let centre = if hi { high } else { low };
                    data.push(centre + spread * (2.0 * rng.random::<f32>() - 1.0));
                }
            }
            FeatureMap::new(c, h, w, data)
        }
        Pattern::Noise => {
            let data = (0..c * h * w)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z as f32
                })
                .collect();
            FeatureMap::new(c, h, w, data)
        }
    }
}

/// Teacher pattern plus a student copy with seeded Gaussian noise of scale `sigma`.
///
/// The noise stream is independent of the pattern stream and of `sigma`, so
/// increasing `sigma` scales one fixed noise realization.
pub fn generate_pair(spec: &SynthSpec) -> Result<(FeatureMap, FeatureMap)> {
    let teacher = generate_teacher(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let data = teacher
        .data()
        .iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + spec.sigma * z as f32
        })
        .collect();
    let (c, h, w) = teacher.shape();
    let student = FeatureMap::new(c, h, w, data)?;
    Ok((teacher, student))
}

/// Per-level counts by direct per-pixel evaluation of the triangular
/// quantization rule, restricted to the nearest level at or below and the
/// nearest level above each value.
pub fn oracle_histogram(values: &[f64], levels: &[f64], widths: &[f64]) -> Vec<f64> {
    let mut counts = vec![0.0; levels.len()];
    for &s in values {
        let mut below: Option<usize> = None;
        let mut above: Option<usize> = None;
        for (n, &l) in levels.iter().enumerate() {
            // only the first of several equal levels can fire
            if levels[..n].contains(&l) {
                continue;
            }
            if l <= s {
                if below.is_none_or(|b| l > levels[b]) {
                    below = Some(n);
                }
            } else if above.is_none_or(|a| l < levels[a]) {
                above = Some(n);
            }
        }
        for n in [below, above].into_iter().flatten() {
            let d = levels[n] - s;
            if d >= -0.5 / widths[n] && d < 0.5 / widths[n] {
                counts[n] += 1.0 - d.abs();
            }
        }
    }
    counts
}

/// Naive `O((HW)²)` DFT energy per band mask: `Σ_c Σ_f M_b(f)|X_c(f)|² / (H·W)`.
pub fn oracle_dft_energy(map: &FeatureMap, masks: &[Vec<f64>]) -> Vec<f64> {
    let (channels, h, w) = map.shape();
    let row_tw: Vec<(f64, f64)> = (0..h)
        .map(|k| {
            let a = -2.0 * PI * k as f64 / h as f64;
            (a.cos(), a.sin())
        })
        .collect();
    let col_tw: Vec<(f64, f64)> = (0..w)
        .map(|k| {
            let a = -2.0 * PI * k as f64 / w as f64;
            (a.cos(), a.sin())
        })
        .collect();
    let mut energies = vec![0.0; masks.len()];
    for c in 0..channels {
        for ky in 0..h {
            for kx in 0..w {
                let (mut re, mut im) = (0.0, 0.0);
                for r in 0..h {
                    let (ar, ai) = row_tw[(ky * r) % h];
                    for col in 0..w {
                        let (br, bi) = col_tw[(kx * col) % w];
                        let x = map.get(c, r, col) as f64;
                        re += x * (ar * br - ai * bi);
                        im += x * (ar * bi + ai * br);
                    }
                }
                let power = re * re + im * im;
                for (e, mask) in energies.iter_mut().zip(masks) {
                    *e += mask[ky * w + kx] * power;
                }
            }
        }
    }
    let norm = (h * w) as f64;
    energies.into_iter().map(|e| e / norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(pattern: Pattern, sigma: f32) -> SynthSpec {
        SynthSpec { pattern, channels: 2, height: 8, width: 6, sigma, seed: 11 }
    }

    #[test]
    fn zero_sigma_copies_teacher() {
        let (t, s) = generate_pair(&spec(Pattern::Noise, 0.0)).unwrap();
        assert_eq!(t, s);
    }

    #[test]
    fn vertical_grating_is_constant_down_columns() {
        let s = SynthSpec {
            pattern: Pattern::Grating { angle_deg: 90.0, cycles: 2.0 },
            channels: 1,
            height: 16,
            width: 16,
            sigma: 0.0,
            seed: 0,
        };
        let t = generate_teacher(&s).unwrap();
        for r in 1..16 {
            for c in 0..16 {
                assert_eq!(t.get(0, r, c), t.get(0, 0, c));
            }
        }
        assert!((0..16).any(|c| (t.get(0, 0, c) - t.get(0, 0, 0)).abs() > 0.4));
    }

    #[test]
    fn fixed_seed_reproduces_bytes() {
        for p in [Pattern::Noise, Pattern::Bimodal { low: -0.5, high: 0.5, spread: 0.1 }, Pattern::Ramp] {
            let a = generate_pair(&spec(p.clone(), 0.3)).unwrap();
            let b = generate_pair(&spec(p, 0.3)).unwrap();
            assert_eq!(a.0.to_fmap_bytes(), b.0.to_fmap_bytes());
            assert_eq!(a.1.to_fmap_bytes(), b.1.to_fmap_bytes());
        }
    }

    #[test]
    fn noise_scales_linearly_with_sigma() {
        let (t, a) = generate_pair(&spec(Pattern::Ramp, 0.1)).unwrap();
        let (_, b) = generate_pair(&spec(Pattern::Ramp, 0.2)).unwrap();
        for ((&x, &y), &z) in t.data().iter().zip(a.data()).zip(b.data()) {
            assert!(((z - x) - 2.0 * (y - x)).abs() < 1e-5);
        }
    }

    #[test]
    fn histogram_trivia() {
        // value at a level center contributes exactly 1 to that level
        assert_eq!(oracle_histogram(&[0.5], &[0.25, 0.5, 0.75, 1.0], &[4.0; 4]), vec![0.0, 1.0, 0.0, 0.0]);
        // outside every window contributes nothing
        assert_eq!(oracle_histogram(&[0.0], &[0.5, 1.0], &[4.0; 2]), vec![0.0, 0.0]);
    }

    #[test]
    fn dft_energy_of_constant_is_dc_only() {
        let m = FeatureMap::from_fn(1, 4, 4, |_, _, _| 2.0).unwrap();
        let mut dc = vec![0.0; 16];
        dc[0] = 1.0;
        let rest: Vec<f64> = dc.iter().map(|v| 1.0 - v).collect();
        let e = oracle_dft_energy(&m, &[dc, rest]);
        assert!((e[0] - 64.0).abs() < 1e-9);
        assert!(e[1].abs() < 1e-9);
    }
}
