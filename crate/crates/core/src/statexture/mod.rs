//! Statistical texture: self-similarity, anchor-based importance sampling,
//! adaptive quantization, intensity-limited denoising and graph enhancement.

mod denoise;
mod extract;
mod graph;
mod quant;
mod sampler;
mod similarity;

use thiserror::Error;

use crate::tensor::TensorError;

pub use denoise::{denoise, denoise_counts};
pub use extract::{extract_statistical, RegionDescriptor, RegionTrace, StatConfig, StatExtraction, StatTexture};
pub use graph::{graph_enhance, Descriptor, DESCRIPTOR_WIDTH, LIFT_BIAS, LIFT_WEIGHTS};
pub use quant::{heuristic_levels, quantize, uniform_levels, EncodingMatrix, GroupSplit, QuantLevels};
pub use sampler::{sample_regions, RegionProposal, SampleSet, SampledPoint, SamplerConfig};
pub use similarity::{self_similarity, SimilarityMap};

#[derive(Debug, Error)]
pub enum StatError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{requested} candidate points requested but the map has only {available} pixels")]
    TooManyCandidates { requested: usize, available: usize },
    #[error("empty input values")]
    EmptyInput,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sample set parse error on line {line}: {message}")]
    ParseSampleSet { line: usize, message: String },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T, E = StatError> = std::result::Result<T, E>;
