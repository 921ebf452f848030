//! Distillation objective: structural and statistical texture mimicry, pixel-wise
//! response KL, an adversarial score and plain cross-entropy, combined as
//!
//! ```text
//! total = l_seg + λ1·l_str + λ2·l_sta + λ3·l_re − λ4·l_adv
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::statexture::StatTexture;
use crate::tensor::{FeatureMap, LabelMap, ProbMap};

/// Lower clamp on probabilities inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

pub const DEFAULT_DISCRIMINATOR_SEED: u64 = 0x5eed_d15c;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("sampling mismatch: student descriptors were not computed on the teacher's sample set")]
    SamplingMismatch,
    #[error("every pixel carries the ignore label")]
    AllIgnored,
    #[error("label {label} at pixel {pixel} is not below class count {classes}")]
    InvalidLabel { pixel: usize, label: u32, classes: usize },
    #[error("discriminator failed: {0}")]
    Discriminator(String),
    #[error("invalid loss weight {name} = {value}")]
    InvalidWeight { name: &'static str, value: f64 },
    #[error("loss term {name} is not finite: {value}")]
    NonFinite { name: &'static str, value: f64 },
}

pub type Result<T, E = LossError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub structural: f64,
    pub statistical: f64,
    pub response: f64,
    pub adversarial: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { structural: 0.9, statistical: 1.15, response: 5.0, adversarial: 0.01 }
    }
}

impl LossWeights {
    pub fn new(structural: f64, statistical: f64, response: f64, adversarial: f64) -> Result<Self> {
        let w = Self { structural, statistical, response, adversarial };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("lambda1", self.structural),
            ("lambda2", self.statistical),
            ("lambda3", self.response),
            ("lambda4", self.adversarial),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(LossError::InvalidWeight { name, value });
            }
        }
        Ok(())
    }
}

/// Unweighted loss terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub seg: f64,
    pub structural: f64,
    pub statistical: f64,
    pub response: f64,
    pub adversarial: f64,
}

/// Sizes the terms were evaluated over; zero where a term was not evaluated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossSupport {
    pub structural_shape: Option<(usize, usize, usize)>,
    pub statistical_regions: usize,
    pub response_pixels: usize,
    pub segmentation_pixels: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub l_seg: f64,
    pub l_str: f64,
    pub l_sta: f64,
    pub l_re: f64,
    pub l_adv: f64,
    pub total: f64,
    pub weights: LossWeights,
    pub support: LossSupport,
}

impl LossReport {
    /// Flat `key=value` block with the stable keys
    /// `l_seg`, `l_str`, `l_sta`, `l_re`, `l_adv`, `total`.
    pub fn to_key_value(&self) -> String {
        [
            ("l_seg", self.l_seg),
            ("l_str", self.l_str),
            ("l_sta", self.l_sta),
            ("l_re", self.l_re),
            ("l_adv", self.l_adv),
            ("total", self.total),
        ]
        .iter()
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect()
    }
}

fn same_shape(what: &str, a: (usize, usize, usize), b: (usize, usize, usize)) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(LossError::ShapeMismatch(format!(
            "{what}: teacher {}x{}x{} vs student {}x{}x{}",
            a.0, a.1, a.2, b.0, b.1, b.2
        )))
    }
}

/// Squared error summed over every entry, divided by the pixel count `H·W`.
pub fn loss_structural(t: &FeatureMap, s: &FeatureMap) -> Result<f64> {
    same_shape("structural texture", t.shape(), s.shape())?;
    let sum: f64 = t
        .data()
        .iter()
        .zip(s.data())
        .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
        .sum();
    Ok(sum / t.pixels() as f64)
}

/// Mean squared descriptor difference per region, averaged over regions.
pub fn loss_statistical(t: &StatTexture, s: &StatTexture) -> Result<f64> {
    if t.sampling != s.sampling {
        return Err(LossError::SamplingMismatch);
    }
    if t.descriptors.len() != s.descriptors.len() {
        return Err(LossError::ShapeMismatch(format!(
            "statistical texture: {} teacher regions vs {} student regions",
            t.descriptors.len(),
            s.descriptors.len()
        )));
    }
    if t.descriptors.is_empty() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (i, (a, b)) in t.descriptors.iter().zip(&s.descriptors).enumerate() {
        same_shape(&format!("region {i} descriptor"), (1, a.rows, a.cols), (1, b.rows, b.cols))?;
        let sq: f64 = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
            .sum();
        acc += sq / a.values.len() as f64;
    }
    Ok(acc / t.descriptors.len() as f64)
}

/// Pixel-averaged `KL(t ‖ s)` over the class axis.
pub fn loss_response(t: &ProbMap, s: &ProbMap) -> Result<f64> {
    same_shape(
        "response",
        (t.classes(), t.height(), t.width()),
        (s.classes(), s.height(), s.width()),
    )?;
    let kl: f64 = t
        .data()
        .iter()
        .zip(s.data())
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| {
            let p = p as f64;
            p * (p / (q as f64).max(PROB_FLOOR)).ln()
        })
        .sum();
    Ok(kl / t.pixels() as f64)
}

/// Scores a segmentation map conditioned on its input image.
pub trait Discriminator {
    fn score(&self, seg: &ProbMap, image: &FeatureMap) -> Result<f64>;
}

impl<F> Discriminator for F
where
    F: Fn(&ProbMap, &FeatureMap) -> Result<f64>,
{
    fn score(&self, seg: &ProbMap, image: &FeatureMap) -> Result<f64> {
        self(seg, image)
    }
}

/// Untrained stand-in: the pixel mean of a fixed Gaussian projection of the
/// channel-concatenated segmentation and image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionDiscriminator {
    pub seed: u64,
}

impl Default for ProjectionDiscriminator {
    fn default() -> Self {
        Self { seed: DEFAULT_DISCRIMINATOR_SEED }
    }
}

impl ProjectionDiscriminator {
    pub fn weights(&self, channels: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let scale = 1.0 / (channels as f64).sqrt();
        (0..channels)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect()
    }
}

impl Discriminator for ProjectionDiscriminator {
    fn score(&self, seg: &ProbMap, image: &FeatureMap) -> Result<f64> {
        if (seg.height(), seg.width()) != (image.height(), image.width()) {
            return Err(LossError::Discriminator(format!(
                "segmentation is {}x{} but image is {}x{}",
                seg.height(),
                seg.width(),
                image.height(),
                image.width()
            )));
        }
        let plane = seg.pixels();
        let weights = self.weights(seg.classes() + image.channels());
        let channel_sums = seg
            .data()
            .chunks_exact(plane)
            .chain(image.data().chunks_exact(plane))
            .map(|ch| ch.iter().map(|&v| v as f64).sum::<f64>());
        let total: f64 = weights.iter().zip(channel_sums).map(|(w, s)| w * s).sum();
        Ok(total / plane as f64)
    }
}

pub fn loss_adversarial(seg: &ProbMap, image: &FeatureMap, d: &dyn Discriminator) -> Result<f64> {
    d.score(seg, image)
}

/// Mean `−ln p[y]` over pixels whose label is not the ignore index.
pub fn loss_segmentation(p: &ProbMap, y: &LabelMap) -> Result<f64> {
    if (p.height(), p.width()) != (y.height(), y.width()) {
        return Err(LossError::ShapeMismatch(format!(
            "segmentation: probabilities {}x{} vs labels {}x{}",
            p.height(),
            p.width(),
            y.height(),
            y.width()
        )));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (pixel, &label) in y.data().iter().enumerate() {
        if label == y.ignore_index() {
            continue;
        }
        if label as usize >= p.classes() {
            return Err(LossError::InvalidLabel { pixel, label, classes: p.classes() });
        }
        sum -= (p.prob(label as usize, pixel) as f64).max(PROB_FLOOR).ln();
        used += 1;
    }
    if used == 0 {
        return Err(LossError::AllIgnored);
    }
    Ok(sum / used as f64)
}

pub fn loss_total(parts: LossParts, weights: LossWeights) -> Result<LossReport> {
    weights.validate()?;
    for (name, value) in [
        ("l_seg", parts.seg),
        ("l_str", parts.structural),
        ("l_sta", parts.statistical),
        ("l_re", parts.response),
        ("l_adv", parts.adversarial),
    ] {
        if !value.is_finite() {
            return Err(LossError::NonFinite { name, value });
        }
    }
    let total = parts.seg + weights.structural * parts.structural
        + weights.statistical * parts.statistical
        + weights.response * parts.response
        - weights.adversarial * parts.adversarial;
    Ok(LossReport {
        l_seg: parts.seg,
        l_str: parts.structural,
        l_sta: parts.statistical,
        l_re: parts.response,
        l_adv: parts.adversarial,
        total,
        weights,
        support: LossSupport::default(),
    })
}
