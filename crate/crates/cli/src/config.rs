use std::fmt;
use std::path::Path;
use std::str::FromStr;

use texkd::loss::LossWeights;
use texkd::statexture::{SamplerConfig, StatConfig};

use crate::error::CliError;

/// Every tunable of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_levels: usize,
    pub alpha: f64,
    pub theta: f64,
    /// `None` resolves to `1/(2N)`.
    pub delta: Option<f64>,
    pub levels_m: Vec<usize>,
    pub p: usize,
    pub m_total: usize,
    pub k: usize,
    pub beta: f64,
    pub tau: f64,
    pub iterations: usize,
    pub anchor_scales: Vec<f64>,
    pub aspect_ratios: Vec<f64>,
    pub lambda: LossWeights,
    pub ignore_index: u32,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sampler = SamplerConfig::default();
        Self {
            n_levels: 50,
            alpha: 0.3,
            theta: 0.9,
            delta: None,
            levels_m: vec![4, 3],
            p: 2,
            m_total: sampler.m_total,
            k: sampler.k,
            beta: sampler.beta,
            tau: 0.1,
            iterations: 1,
            anchor_scales: sampler.anchor_scales,
            aspect_ratios: sampler.aspect_ratios,
            lambda: LossWeights::default(),
            ignore_index: 255,
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    value.split(',').map(|v| parse(key, v)).collect()
}

fn check(ok: bool, key: &str, msg: impl fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key}: {msg}")))
    }
}

impl RunConfig {
    /// Sets one field from its textual form. Domain checks happen in [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "n_levels" => self.n_levels = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "theta" => self.theta = parse(key, value)?,
            "delta" => {
                self.delta = if value.trim() == "auto" { None } else { Some(parse(key, value)?) }
            }
            "levels_m" => self.levels_m = parse_list(key, value)?,
            "p" => self.p = parse(key, value)?,
            "m_total" => self.m_total = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "iterations" => self.iterations = parse(key, value)?,
            "anchor_scales" => self.anchor_scales = parse_list(key, value)?,
            "aspect_ratios" => self.aspect_ratios = parse_list(key, value)?,
            "lambda1" => self.lambda.structural = parse(key, value)?,
            "lambda2" => self.lambda.statistical = parse(key, value)?,
            "lambda3" => self.lambda.response = parse(key, value)?,
            "lambda4" => self.lambda.adversarial = parse(key, value)?,
            "ignore_index" => self.ignore_index = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(CliError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {}: expected `key = value`, got {raw:?}", i + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Config(format!("config line {}: {}", i + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check(self.n_levels >= 2, "n_levels", format!("must be at least 2, got {}", self.n_levels))?;
        check(self.alpha > 0.0 && self.alpha < 1.0, "alpha", format!("must lie in (0, 1), got {}", self.alpha))?;
        check(self.theta > 0.0 && self.theta <= 1.0, "theta", format!("must lie in (0, 1], got {}", self.theta))?;
        if let Some(d) = self.delta {
            check(d > 0.0 && d < 1.0, "delta", format!("must lie in (0, 1), got {d}"))?;
        }
        check(!self.levels_m.is_empty(), "levels_m", "must list at least one level")?;
        for &m in &self.levels_m {
            check((1..=8).contains(&m), "levels_m", format!("depths must lie in 1..=8, got {m}"))?;
        }
        check(self.p >= 2, "p", format!("must be at least 2, got {}", self.p))?;
        check(self.m_total >= 1, "m_total", "must be at least 1")?;
        check(self.k >= 2, "k", format!("must be at least 2, got {}", self.k))?;
        check((0.0..=1.0).contains(&self.beta), "beta", format!("must lie in [0, 1], got {}", self.beta))?;
        check(self.tau > 0.0 && self.tau.is_finite(), "tau", format!("must be positive, got {}", self.tau))?;
        check(self.iterations >= 1, "iterations", "must be at least 1")?;
        check(!self.anchor_scales.is_empty(), "anchor_scales", "must list at least one scale")?;
        for &s in &self.anchor_scales {
            check(s > 0.0 && s <= 1.0, "anchor_scales", format!("scales must lie in (0, 1], got {s}"))?;
        }
        check(!self.aspect_ratios.is_empty(), "aspect_ratios", "must list at least one ratio")?;
        for &r in &self.aspect_ratios {
            check(r > 0.0 && r.is_finite(), "aspect_ratios", format!("ratios must be positive, got {r}"))?;
        }
        for (key, v) in [
            ("lambda1", self.lambda.structural),
            ("lambda2", self.lambda.statistical),
            ("lambda3", self.lambda.response),
            ("lambda4", self.lambda.adversarial),
        ] {
            check(v >= 0.0 && v.is_finite(), key, format!("must be a non-negative number, got {v}"))?;
        }
        Ok(())
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            m_total: self.m_total,
            k: self.k,
            beta: self.beta,
            anchor_scales: self.anchor_scales.clone(),
            aspect_ratios: self.aspect_ratios.clone(),
            seed: self.seed,
        }
    }

    pub fn stat(&self) -> StatConfig {
        StatConfig {
            n_levels: self.n_levels,
            alpha: self.alpha,
            delta: self.delta,
            theta: self.theta,
            iterations: self.iterations,
            tau: self.tau,
            sampler: self.sampler(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!((c.n_levels, c.alpha, c.theta), (50, 0.3, 0.9));
        assert_eq!(c.stat().delta(), 0.01);
        assert_eq!(c.levels_m, vec![4, 3]);
        assert_eq!((c.m_total, c.k, c.beta, c.tau), (16, 3, 0.75, 0.1));
        assert_eq!(c.lambda, LossWeights::new(0.9, 1.15, 5.0, 0.01).unwrap());
    }

    #[test]
    fn text_overrides_and_comments() {
        let mut c = RunConfig::default();
        c.apply_text("# tuned\nn_levels = 16\n\nlevels_m = 2,1  # short\nlambda3=2\ndelta = auto\n").unwrap();
        assert_eq!(c.n_levels, 16);
        assert_eq!(c.levels_m, vec![2, 1]);
        assert_eq!(c.lambda.response, 2.0);
        assert_eq!(c.delta, None);
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = RunConfig::default();
        let e = c.apply_text("alpha = 1.5").and_then(|_| c.validate()).unwrap_err();
        assert!(e.message().starts_with("alpha:"), "{}", e.message());

        let e = RunConfig::default().set("beta", "lots").unwrap_err();
        assert!(e.message().starts_with("beta:"));

        let e = RunConfig::default().apply_text("seed").unwrap_err();
        assert!(e.message().contains("line 1"));

        let e = RunConfig::default().set("gamma", "1").unwrap_err();
        assert!(e.message().contains("gamma"));

        let c = RunConfig { k: 1, ..RunConfig::default() };
        assert!(c.validate().unwrap_err().message().starts_with("k:"));
    }
}
