use crate::tensor::FeatureMap;

use super::sampler::RegionProposal;

/// Per-pixel cosine similarity against the spatial mean channel vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl SimilarityMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), height * width, "similarity map size");
        Self { height, width, values }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Values inside a region, row-major.
    pub fn region_values(&self, region: &RegionProposal) -> Vec<f64> {
        let mut out = Vec::with_capacity(region.height * region.width);
        for r in region.top..region.top + region.height {
            let row = &self.values[r * self.width..(r + 1) * self.width];
            out.extend_from_slice(&row[region.left..region.left + region.width]);
        }
        out
    }
}

pub fn self_similarity(a: &FeatureMap) -> SimilarityMap {
    let (channels, h, w) = a.shape();
    let plane = h * w;
    let mean: Vec<f64> = (0..channels)
        .map(|c| a.channel(c).iter().map(|&v| v as f64).sum::<f64>() / plane as f64)
        .collect();
    let mean_norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
    let values = (0..plane)
        .map(|i| {
            let mut dot = 0.0;
            let mut norm = 0.0;
            for (c, g) in mean.iter().enumerate() {
                let v = a.data()[c * plane + i] as f64;
                dot += v * g;
                norm += v * v;
            }
            let denom = norm.sqrt() * mean_norm;
            if denom == 0.0 {
                0.0
            } else {
                (dot / denom).clamp(-1.0, 1.0)
            }
        })
        .collect();
    SimilarityMap::new(h, w, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pixels_are_fully_similar() {
        let a = FeatureMap::from_fn(3, 4, 4, |c, _, _| c as f32 + 0.5).unwrap();
        let s = self_similarity(&a);
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn orthogonal_pixel_scores_zero() {
        // mean vector is (1, 0); the middle pixel (0, 1) is orthogonal to it
        let a = FeatureMap::new(2, 1, 3, vec![1.5, 0.0, 1.5, 0.0, 1.0, -1.0]).unwrap();
        let s = self_similarity(&a);
        assert!(s.values[1].abs() < 1e-12);
    }

    #[test]
    fn two_axis_pixels_give_cos_45() {
        let a = FeatureMap::new(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let s = self_similarity(&a);
        for v in s.values {
            assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_vectors_map_to_zero() {
        let a = FeatureMap::new(2, 1, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let s = self_similarity(&a);
        assert_eq!(s.values[0], 0.0);
        let z = FeatureMap::zeros(2, 2, 2).unwrap();
        assert!(self_similarity(&z).values.iter().all(|&v| v == 0.0));
    }
}
