use crate::tensor::FeatureMap;

use super::denoise::denoise;
use super::graph::{graph_enhance, DESCRIPTOR_WIDTH};
use super::quant::{heuristic_levels, quantize, QuantLevels};
use super::sampler::{sample_regions, RegionProposal, SampleSet, SamplerConfig};
use super::similarity::self_similarity;
use super::{Result, StatError};

#[derive(Debug, Clone, PartialEq)]
pub struct StatConfig {
    /// Number of quantization levels (N).
    pub n_levels: usize,
    /// Share of the levels given to the sparse group.
    pub alpha: f64,
    /// Count-ratio threshold separating sparse from dense levels; `None` means `1/(2N)`.
    pub delta: Option<f64>,
    /// Peak clip ratio.
    pub theta: f64,
    pub iterations: usize,
    /// Softmax temperature of the level graph.
    pub tau: f64,
    pub sampler: SamplerConfig,
}

impl Default for StatConfig {
    fn default() -> Self {
        Self {
            n_levels: 50,
            alpha: 0.3,
            delta: None,
            theta: 0.9,
            iterations: 1,
            tau: 0.1,
            sampler: SamplerConfig::default(),
        }
    }
}

impl StatConfig {
    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(1.0 / (2.0 * self.n_levels as f64))
    }
}

/// Descriptor of one sampled region, stored as `f32` to match the FMAP payload.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDescriptor {
    pub region: RegionProposal,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f32>,
}

impl RegionDescriptor {
    /// The descriptor as a `1×rows×cols` feature map.
    pub fn to_feature_map(&self) -> FeatureMap {
        FeatureMap::new(1, self.rows, self.cols, self.values.clone()).expect("finite descriptor")
    }
}

/// Statistical texture of a feature map over a fixed set of sampled regions.
#[derive(Debug, Clone, PartialEq)]
pub struct StatTexture {
    pub sampling: SampleSet,
    pub descriptors: Vec<RegionDescriptor>,
}

/// Intermediate quantities of one region, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionTrace {
    pub levels: QuantLevels,
    pub raw_counts: Vec<f64>,
    pub denoised_counts: Vec<f64>,
    pub unquantized: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatExtraction {
    pub texture: StatTexture,
    pub traces: Vec<RegionTrace>,
}

/// Full statistical branch. Pass the teacher's `SampleSet` to evaluate a
/// student on the same regions; with `None` a fresh one is drawn.
pub fn extract_statistical(
    a: &FeatureMap,
    cfg: &StatConfig,
    sampling: Option<&SampleSet>,
) -> Result<StatExtraction> {
    let similarity = self_similarity(a);
    let sampling = match sampling {
        Some(set) => {
            if (set.height, set.width) != (a.height(), a.width()) {
                return Err(StatError::DimensionMismatch(format!(
                    "sample set drawn on {}x{}, feature map is {}x{}",
                    set.height,
                    set.width,
                    a.height(),
                    a.width()
                )));
            }
            set.clone()
        }
        None => sample_regions(&similarity, &cfg.sampler)?,
    };
    let delta = cfg.delta();
    let mut descriptors = Vec::with_capacity(sampling.m_total);
    let mut traces = Vec::with_capacity(sampling.m_total);
    for point in sampling.points() {
        let values = similarity.region_values(&point.region);
        let levels = heuristic_levels(&values, cfg.n_levels, cfg.alpha, delta, cfg.iterations)?;
        let encoding = quantize(&values, &levels);
        let denoised = denoise(&encoding, cfg.theta)?;
        let descriptor = graph_enhance(&denoised, &levels, cfg.tau);
        descriptors.push(RegionDescriptor {
            region: point.region.clone(),
            rows: descriptor.rows,
            cols: DESCRIPTOR_WIDTH,
            values: descriptor.values.iter().map(|&v| v as f32).collect(),
        });
        traces.push(RegionTrace {
            unquantized: encoding.unquantized(),
            raw_counts: encoding.counts,
            denoised_counts: denoised.counts,
            levels,
        });
    }
    Ok(StatExtraction { texture: StatTexture { sampling, descriptors }, traces })
}
