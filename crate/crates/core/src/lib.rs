//! Texture knowledge extraction and distillation losses for `C×H×W` feature maps.
//!
//! - [`tensor`]: feature, probability and label maps; FMAP and PGM/PPM IO.
//! - [`contourlet`]: Laplacian pyramid, directional filter bank and their
//!   iteration into a structural texture descriptor.
//! - [`statexture`]: importance-sampled, adaptively quantized and denoised
//!   intensity statistics enhanced over a level graph.
//! - [`loss`]: the structural, statistical, response, adversarial and
//!   segmentation terms and their weighted total.
//! - [`synth`]: synthetic teacher/student pairs and independent reference
//!   implementations used by the test suites.

pub mod contourlet;
pub mod loss;
pub mod statexture;
pub mod synth;
pub mod tensor;

pub use tensor::{FeatureMap, LabelMap, ProbMap};
