use std::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::similarity::SimilarityMap;
use super::{Result, StatError};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Number of points to keep (M).
    pub m_total: usize,
    /// Over-generation factor; `k·M` candidates are drawn.
    pub k: usize,
    /// Fraction of M chosen by importance score.
    pub beta: f64,
    /// Anchor base sizes as fractions of `min(H, W)`.
    pub anchor_scales: Vec<f64>,
    /// Anchor aspect ratios, height over width.
    pub aspect_ratios: Vec<f64>,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            m_total: 16,
            k: 3,
            beta: 0.75,
            anchor_scales: vec![0.05, 0.1, 0.2],
            aspect_ratios: vec![0.5, 1.0, 2.0],
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(StatError::InvalidConfig(msg));
        if self.k < 2 {
            return bad(format!("k must be greater than 1, got {}", self.k));
        }
        if self.m_total == 0 {
            return bad("M must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1], got {}", self.beta));
        }
        if self.anchor_scales.is_empty() || self.anchor_scales.iter().any(|&s| s.is_nan() || s <= 0.0 || !s.is_finite()) {
            return bad(format!("anchor scales must be positive, got {:?}", self.anchor_scales));
        }
        if self.aspect_ratios.is_empty() || self.aspect_ratios.iter().any(|&r| r.is_nan() || r <= 0.0 || !r.is_finite()) {
            return bad(format!("aspect ratios must be positive, got {:?}", self.aspect_ratios));
        }
        Ok(())
    }

    pub fn importance_count(&self) -> usize {
        (self.beta * self.m_total as f64).floor() as usize
    }
}

/// An anchor rectangle around a candidate point, clamped to the map.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionProposal {
    pub center: (usize, usize),
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
    /// Population standard deviation of the similarity values inside.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledPoint {
    /// Linear pixel index, `row * W + col`.
    pub index: usize,
    pub region: RegionProposal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    pub m_total: usize,
    pub candidates: usize,
    pub importance: Vec<SampledPoint>,
    pub coverage: Vec<SampledPoint>,
}

impl SampleSet {
    /// All selected points, importance first, in selection order.
    pub fn points(&self) -> impl Iterator<Item = &SampledPoint> {
        self.importance.iter().chain(&self.coverage)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "sampleset 1").unwrap();
        writeln!(out, "seed {}", self.seed).unwrap();
        writeln!(out, "size {} {}", self.height, self.width).unwrap();
        writeln!(out, "m_total {}", self.m_total).unwrap();
        writeln!(out, "candidates {}", self.candidates).unwrap();
        for (kind, list) in [("importance", &self.importance), ("coverage", &self.coverage)] {
            for p in list {
                let r = &p.region;
                writeln!(
                    out,
                    "{kind} {} {} {} {} {} {}",
                    p.index, r.top, r.left, r.height, r.width, r.score
                )
                .unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut set = SampleSet {
            height: 0,
            width: 0,
            seed: 0,
            m_total: 0,
            candidates: 0,
            importance: Vec::new(),
            coverage: Vec::new(),
        };
        let mut saw_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| StatError::ParseSampleSet { line, message };
            let fields: Vec<&str> = raw.split_whitespace().collect();
            let Some((&key, rest)) = fields.split_first() else { continue };
            let num = |s: &str| s.parse::<u64>().map_err(|e| err(format!("{s:?}: {e}")));
            let want = |n: usize| {
                if rest.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("{key} expects {n} fields, found {}", rest.len())))
                }
            };
            match key {
                "sampleset" => {
                    want(1)?;
                    if rest[0] != "1" {
                        return Err(err(format!("unsupported version {}", rest[0])));
                    }
                    saw_header = true;
                }
                "seed" => {
                    want(1)?;
                    set.seed = num(rest[0])?;
                }
                "size" => {
                    want(2)?;
                    set.height = num(rest[0])? as usize;
                    set.width = num(rest[1])? as usize;
                }
                "m_total" => {
                    want(1)?;
                    set.m_total = num(rest[0])? as usize;
                }
                "candidates" => {
                    want(1)?;
                    set.candidates = num(rest[0])? as usize;
                }
                "importance" | "coverage" => {
                    want(6)?;
                    let index = num(rest[0])? as usize;
                    if set.width == 0 {
                        return Err(err("point listed before size".into()));
                    }
                    let score: f64 = rest[5].parse().map_err(|e| err(format!("{:?}: {e}", rest[5])))?;
                    let region = RegionProposal {
                        center: (index / set.width, index % set.width),
                        top: num(rest[1])? as usize,
                        left: num(rest[2])? as usize,
                        height: num(rest[3])? as usize,
                        width: num(rest[4])? as usize,
                        score,
                    };
                    if region.height == 0
                        || region.width == 0
                        || region.top + region.height > set.height
                        || region.left + region.width > set.width
                        || index >= set.height * set.width
                    {
                        return Err(err("point or region outside the map".into()));
                    }
                    let point = SampledPoint { index, region };
                    if key == "importance" {
                        set.importance.push(point);
                    } else {
                        set.coverage.push(point);
                    }
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        if !saw_header {
            return Err(StatError::ParseSampleSet { line: 1, message: "missing header".into() });
        }
        if set.importance.len() + set.coverage.len() != set.m_total {
            return Err(StatError::ParseSampleSet {
                line: 0,
                message: format!(
                    "m_total {} but {} points listed",
                    set.m_total,
                    set.importance.len() + set.coverage.len()
                ),
            });
        }
        Ok(set)
    }
}

fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    var.sqrt()
}

fn clamp_span(center: usize, extent: usize, limit: usize) -> (usize, usize) {
    let start = center as i64 - (extent / 2) as i64;
    let end = start + extent as i64;
    let lo = start.max(0) as usize;
    let hi = (end.min(limit as i64)) as usize;
    (lo, hi - lo)
}

/// Best-scoring anchor at a point; ties keep the first anchor in scale-major order.
fn best_anchor(s: &SimilarityMap, index: usize, cfg: &SamplerConfig) -> RegionProposal {
    let (row, col) = (index / s.width, index % s.width);
    let base = s.height.min(s.width) as f64;
    let mut best: Option<RegionProposal> = None;
    for &scale in &cfg.anchor_scales {
        for &ratio in &cfg.aspect_ratios {
            let size = scale * base;
            let ah = ((size * ratio.sqrt()).round() as usize).max(1);
            let aw = ((size / ratio.sqrt()).round() as usize).max(1);
            let (top, height) = clamp_span(row, ah, s.height);
            let (left, width) = clamp_span(col, aw, s.width);
            let values = (top..top + height)
                .flat_map(|r| (left..left + width).map(move |c| (r, c)))
                .map(|(r, c)| s.at(r, c));
            let score = population_std(values);
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(RegionProposal { center: (row, col), top, left, height, width, score });
            }
        }
    }
    best.expect("at least one anchor")
}

/// Over-generates `k·M` uniform candidates, keeps the `⌊βM⌋` with the most
/// varied anchor region and fills the rest uniformly from the remainder.
pub fn sample_regions(s: &SimilarityMap, cfg: &SamplerConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let pixels = s.height * s.width;
    let requested = cfg.k.saturating_mul(cfg.m_total);
    if requested > pixels {
        return Err(StatError::TooManyCandidates { requested, available: pixels });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let candidates = index::sample(&mut rng, pixels, requested).into_vec();
    let scored: Vec<SampledPoint> = candidates
        .iter()
        .map(|&index| SampledPoint { index, region: best_anchor(s, index, cfg) })
        .collect();

    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        scored[b]
            .region
            .score
            .total_cmp(&scored[a].region.score)
            .then(scored[a].index.cmp(&scored[b].index))
    });
    let n_importance = cfg.importance_count();
    let mut taken = vec![false; scored.len()];
    let importance: Vec<SampledPoint> = order[..n_importance]
        .iter()
        .map(|&i| {
            taken[i] = true;
            scored[i].clone()
        })
        .collect();
    let rest: Vec<usize> = (0..scored.len()).filter(|&i| !taken[i]).collect();
    let coverage = index::sample(&mut rng, rest.len(), cfg.m_total - n_importance)
        .into_iter()
        .map(|j| scored[rest[j]].clone())
        .collect();

    Ok(SampleSet {
        height: s.height,
        width: s.width,
        seed: cfg.seed,
        m_total: cfg.m_total,
        candidates: requested,
        importance,
        coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn noisy_map(h: usize, w: usize) -> SimilarityMap {
        let values = (0..h * w).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect();
        SimilarityMap::new(h, w, values)
    }

    #[test]
    fn counts_follow_definitions() {
        let s = noisy_map(16, 16);
        let cfg = SamplerConfig { k: 3, m_total: 8, beta: 0.5, seed: 9, ..Default::default() };
        let set = sample_regions(&s, &cfg).unwrap();
        assert_eq!(set.candidates, 24);
        assert_eq!(set.importance.len(), 4);
        assert_eq!(set.coverage.len(), 4);
        let unique: HashSet<_> = set.points().map(|p| p.index).collect();
        assert_eq!(unique.len(), 8);
    }

    #[test]
    fn importance_sorted_by_score() {
        let s = noisy_map(20, 20);
        let cfg = SamplerConfig { seed: 3, ..Default::default() };
        let set = sample_regions(&s, &cfg).unwrap();
        for pair in set.importance.windows(2) {
            assert!(pair[0].region.score >= pair[1].region.score);
        }
        let min_imp = set.importance.iter().map(|p| p.region.score).fold(f64::INFINITY, f64::min);
        assert!(set.coverage.iter().all(|p| p.region.score <= min_imp));
    }

    #[test]
    fn constant_map_degenerates_to_index_order() {
        let s = SimilarityMap::new(10, 10, vec![0.3; 100]);
        let cfg = SamplerConfig { k: 3, m_total: 8, beta: 0.5, seed: 1, ..Default::default() };
        let set = sample_regions(&s, &cfg).unwrap();
        assert_eq!(set.importance.len() + set.coverage.len(), 8);
        assert!(set.points().all(|p| p.region.score == 0.0));
        let idx: Vec<usize> = set.importance.iter().map(|p| p.index).collect();
        let mut sorted = idx.clone();
        sorted.sort();
        assert_eq!(idx, sorted);
    }

    #[test]
    fn regions_stay_inside_map() {
        let s = noisy_map(9, 13);
        let cfg = SamplerConfig {
            anchor_scales: vec![0.5, 1.5],
            seed: 4,
            m_total: 10,
            ..Default::default()
        };
        let set = sample_regions(&s, &cfg).unwrap();
        for p in set.points() {
            let r = &p.region;
            assert!(r.top + r.height <= 9 && r.left + r.width <= 13);
            assert!(r.height > 0 && r.width > 0 && r.score >= 0.0);
            assert!((r.top..r.top + r.height).contains(&r.center.0));
            assert!((r.left..r.left + r.width).contains(&r.center.1));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let s = noisy_map(4, 4);
        let too_many = SamplerConfig { k: 3, m_total: 6, ..Default::default() };
        assert!(matches!(
            sample_regions(&s, &too_many),
            Err(StatError::TooManyCandidates { requested: 18, available: 16 })
        ));
        for cfg in [
            SamplerConfig { k: 1, ..Default::default() },
            SamplerConfig { beta: 1.5, ..Default::default() },
            SamplerConfig { m_total: 0, ..Default::default() },
            SamplerConfig { aspect_ratios: vec![], ..Default::default() },
        ] {
            assert!(matches!(sample_regions(&s, &cfg), Err(StatError::InvalidConfig(_))));
        }
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        let s = noisy_map(32, 32);
        let a = sample_regions(&s, &SamplerConfig { seed: 5, ..Default::default() }).unwrap();
        let b = sample_regions(&s, &SamplerConfig { seed: 5, ..Default::default() }).unwrap();
        let c = sample_regions(&s, &SamplerConfig { seed: 6, ..Default::default() }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.coverage, c.coverage);
    }

    #[test]
    fn text_round_trip() {
        let s = noisy_map(24, 17);
        let set = sample_regions(&s, &SamplerConfig { seed: 77, ..Default::default() }).unwrap();
        let text = set.to_text();
        let back = SampleSet::from_text(&text).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn text_parse_errors() {
        assert!(SampleSet::from_text("seed 1\n").is_err());
        let bad = "sampleset 1\nsize 4 4\nm_total 1\nimportance 3 0 0 9 1 0.5\n";
        assert!(matches!(SampleSet::from_text(bad), Err(StatError::ParseSampleSet { line: 4, .. })));
        let count = "sampleset 1\nsize 4 4\nm_total 2\nimportance 3 0 0 1 1 0.5\n";
        assert!(SampleSet::from_text(count).is_err());
    }
}
