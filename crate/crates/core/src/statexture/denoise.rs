use super::quant::EncodingMatrix;
use super::{Result, StatError};

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(StatError::InvalidConfig(format!("theta must lie in (0, 1], got {theta}")))
    }
}

/// Clips every count above `θ·max` and spreads the clipped mass evenly over all levels.
pub fn denoise_counts(counts: &[f64], theta: f64) -> Result<Vec<f64>> {
    check_theta(theta)?;
    if counts.is_empty() {
        return Ok(Vec::new());
    }
    let clip = theta * counts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let extra: f64 = counts.iter().map(|&c| (c - clip).max(0.0)).sum();
    let share = extra / counts.len() as f64;
    Ok(counts
        .iter()
        .map(|&c| if c > clip { clip + share } else { c + share })
        .collect())
}

/// Applies [`denoise_counts`] and rescales each row of the encoding to its new count.
///
/// Rows with a zero count receive the additive share as a uniform per-pixel offset.
pub fn denoise(e: &EncodingMatrix, theta: f64) -> Result<EncodingMatrix> {
    let new_counts = denoise_counts(&e.counts, theta)?;
    let p = e.n_pixels;
    let mut values = e.values.clone();
    if p > 0 {
        for (n, row) in values.chunks_exact_mut(p).enumerate() {
            let old = e.counts[n];
            if old > 0.0 {
                let gain = new_counts[n] / old;
                row.iter_mut().for_each(|v| *v *= gain);
            } else {
                let offset = new_counts[n] / p as f64;
                row.iter_mut().for_each(|v| *v += offset);
            }
        }
    }
    let counts = if p > 0 {
        values.chunks_exact(p).map(|row| row.iter().sum()).collect()
    } else {
        new_counts
    };
    Ok(EncodingMatrix { n_levels: e.n_levels, n_pixels: p, values, counts, denoised: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statexture::{quantize, uniform_levels};
    use proptest::prelude::*;

    #[test]
    fn hand_case() {
        let out = denoise_counts(&[10.0, 2.0, 2.0, 2.0], 0.5).unwrap();
        assert_eq!(out, vec![6.25, 3.25, 3.25, 3.25]);
    }

    #[test]
    fn flat_counts_unchanged_at_theta_one() {
        let out = denoise_counts(&[3.0; 5], 1.0).unwrap();
        assert_eq!(out, vec![3.0; 5]);
    }

    #[test]
    fn rejects_theta_outside_unit_interval() {
        assert!(denoise_counts(&[1.0], 0.0).is_err());
        assert!(denoise_counts(&[1.0], 1.5).is_err());
    }

    #[test]
    fn matrix_rows_track_counts() {
        let values: Vec<f64> = (0..100).map(|i| if i < 80 { 0.5 } else { i as f64 / 100.0 }).collect();
        let levels = uniform_levels(&values, 8).unwrap();
        let e = quantize(&values, &levels);
        let d = denoise(&e, 0.9).unwrap();
        let expected = denoise_counts(&e.counts, 0.9).unwrap();
        for (n, (a, b)) in d.counts.iter().zip(&expected).enumerate() {
            assert!((a - b).abs() < 1e-9, "row {n}");
            let row_sum: f64 = d.row(n).iter().sum();
            assert!((row_sum - a).abs() < 1e-9);
        }
        assert!(d.denoised);
        assert!((d.total() - e.total()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn mass_is_conserved(counts in prop::collection::vec(0.0f64..1000.0, 1..60), theta in 0.05f64..=1.0) {
            let out = denoise_counts(&counts, theta).unwrap();
            let before: f64 = counts.iter().sum();
            let after: f64 = out.iter().sum();
            prop_assert!((before - after).abs() < 1e-4);
        }

        #[test]
        fn peaks_clip_to_ceiling(counts in prop::collection::vec(0.0f64..1000.0, 1..60), theta in 0.05f64..=1.0) {
            let out = denoise_counts(&counts, theta).unwrap();
            let max = counts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let clip = theta * max;
            let extra: f64 = counts.iter().map(|&c| (c - clip).max(0.0)).sum();
            let share = extra / counts.len() as f64;
            for (c, o) in counts.iter().zip(&out) {
                if *c > clip {
                    prop_assert!(o - share <= clip + 1e-6);
                }
            }
        }
    }
}
