//! The subcommands, as library functions so they can be driven from tests.
//!
//! An artifact directory holds any of:
//!
//! | file | content |
//! |------|---------|
//! | `L{level}_B{band}.fmap` | directional subband, level from 1, band from 0 |
//! | `manifest.txt` | shapes and reconstruction residual of the decomposition |
//! | `sampleset.txt` | sampled points and their regions |
//! | `region_{i}.fmap` | `1×N×8` statistical descriptor of region `i` |
//! | `histogram.txt` | per-region levels and counts before and after denoising |
//! | `probs.fmap` | class probabilities |
//! | `labels.fmap` | ground-truth labels, one channel |
//! | `image.fmap` | image the discriminator conditions on |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use texkd::contourlet::{cdm_forward, flatten_band_levels, flatten_structural, ContourletSet};
use texkd::loss::{
    loss_adversarial, loss_response, loss_segmentation, loss_statistical, loss_structural, loss_total,
    LossParts, LossReport, LossSupport, ProjectionDiscriminator,
};
use texkd::statexture::{extract_statistical, RegionDescriptor, SampleSet, StatExtraction, StatTexture};
use texkd::synth::{generate_pair, SynthSpec};
use texkd::{FeatureMap, LabelMap, ProbMap};

use crate::config::RunConfig;
use crate::error::CliError;

type Result<T, E = CliError> = std::result::Result<T, E>;

pub const MANIFEST: &str = "manifest.txt";
pub const SAMPLESET: &str = "sampleset.txt";
pub const HISTOGRAM: &str = "histogram.txt";
pub const PROBS: &str = "probs.fmap";
pub const LABELS: &str = "labels.fmap";
pub const IMAGE: &str = "image.fmap";

pub fn band_file_name(level: usize, band: usize) -> String {
    format!("L{level}_B{band}.fmap")
}

pub fn region_file_name(i: usize) -> String {
    format!("region_{i}.fmap")
}

pub fn load_fmap(path: &Path) -> Result<FeatureMap> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    FeatureMap::from_fmap_bytes(&bytes).map_err(|e| CliError::from(e).context(&path.display().to_string()))
}

fn save(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn save_fmap(path: &Path, map: &FeatureMap) -> Result<()> {
    save(path, &map.to_fmap_bytes())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Contourlet decomposition of one input plus its reconstruction error.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub input_shape: String,
    pub set: ContourletSet,
    pub residual_max: f64,
    pub residual_norm: f64,
}

pub fn decompose(x: &FeatureMap, cfg: &RunConfig) -> Result<Decomposition> {
    let set = cdm_forward(x, &cfg.levels_m, cfg.p)?;
    let back = set.reconstruct()?;
    let (mut max, mut sq) = (0.0f64, 0.0f64);
    for (&a, &b) in x.data().iter().zip(back.data()) {
        let d = (a as f64 - b as f64).abs();
        max = max.max(d);
        sq += d * d;
    }
    Ok(Decomposition { input_shape: x.shape_string(), set, residual_max: max, residual_norm: sq.sqrt() })
}

impl Decomposition {
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        writeln!(out, "input={}", self.input_shape).unwrap();
        writeln!(out, "levels_m={}", join(&self.set.levels_m)).unwrap();
        writeln!(out, "p={}", self.set.p).unwrap();
        if let Some(last) = self.set.levels.last() {
            writeln!(out, "low={}", last.lp.low.shape_string()).unwrap();
        }
        for (l, level) in self.set.levels.iter().enumerate() {
            for (b, band) in level.bands.bands.iter().enumerate() {
                writeln!(out, "{}={}", band_file_name(l + 1, b), band.shape_string()).unwrap();
            }
        }
        writeln!(out, "residual_max={}", self.residual_max).unwrap();
        writeln!(out, "residual_norm={}", self.residual_norm).unwrap();
        out
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        ensure_dir(dir)?;
        let mut written = Vec::new();
        for (l, level) in self.set.levels.iter().enumerate() {
            for (b, band) in level.bands.bands.iter().enumerate() {
                let path = dir.join(band_file_name(l + 1, b));
                save_fmap(&path, band)?;
                written.push(path);
            }
        }
        let path = dir.join(MANIFEST);
        save(&path, self.manifest().as_bytes())?;
        written.push(path);
        Ok(written)
    }
}

pub fn histogram_report(ex: &StatExtraction) -> String {
    let mut out = String::new();
    writeln!(out, "regions={}", ex.traces.len()).unwrap();
    for (i, (trace, desc)) in ex.traces.iter().zip(&ex.texture.descriptors).enumerate() {
        let r = &desc.region;
        let before: f64 = trace.raw_counts.iter().sum();
        let after: f64 = trace.denoised_counts.iter().sum();
        writeln!(out, "region{i}.box={},{},{},{}", r.top, r.left, r.height, r.width).unwrap();
        writeln!(out, "region{i}.fallback={}", trace.levels.fallback).unwrap();
        writeln!(out, "region{i}.unquantized={}", trace.unquantized).unwrap();
        writeln!(out, "region{i}.levels={}", join(&trace.levels.levels)).unwrap();
        writeln!(out, "region{i}.counts_before={}", join(&trace.raw_counts)).unwrap();
        writeln!(out, "region{i}.counts_after={}", join(&trace.denoised_counts)).unwrap();
        writeln!(out, "region{i}.sum_before={before}").unwrap();
        writeln!(out, "region{i}.sum_after={after}").unwrap();
    }
    out
}

pub fn write_stats(ex: &StatExtraction, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let path = dir.join(SAMPLESET);
    save(&path, ex.texture.sampling.to_text().as_bytes())?;
    written.push(path);
    for (i, d) in ex.texture.descriptors.iter().enumerate() {
        let path = dir.join(region_file_name(i));
        save_fmap(&path, &d.to_feature_map())?;
        written.push(path);
    }
    let path = dir.join(HISTOGRAM);
    save(&path, histogram_report(ex).as_bytes())?;
    written.push(path);
    Ok(written)
}

pub fn load_sampleset(path: &Path) -> Result<SampleSet> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    SampleSet::from_text(&text).map_err(|e| CliError::from(e).context(&path.display().to_string()))
}

pub fn cmd_decompose(input: &Path, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let x = load_fmap(input)?;
    decompose(&x, cfg)?.write(out)
}

pub fn cmd_stats(input: &Path, cfg: &RunConfig, sampleset: Option<&Path>, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let x = load_fmap(input)?;
    let set = sampleset.map(load_sampleset).transpose()?;
    let ex = extract_statistical(&x, &cfg.stat(), set.as_ref()).map_err(|e| CliError::from(e).context("stats"))?;
    write_stats(&ex, out)
}

/// Whatever loss inputs one side of the comparison provides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossInputs {
    pub structural: Option<FeatureMap>,
    pub statistical: Option<StatTexture>,
    pub probs: Option<ProbMap>,
    pub labels: Option<LabelMap>,
    pub image: Option<FeatureMap>,
}

fn parse_band_name(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix('L')?.strip_suffix(".fmap")?;
    let (l, b) = rest.split_once("_B")?;
    Some((l.parse().ok()?, b.parse().ok()?))
}

fn load_bands(dir: &Path) -> Result<Option<FeatureMap>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut found: BTreeMap<usize, BTreeMap<usize, PathBuf>> = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        if let Some((l, b)) = entry.file_name().to_str().and_then(parse_band_name) {
            found.entry(l).or_default().insert(b, entry.path());
        }
    }
    if found.is_empty() {
        return Ok(None);
    }
    let mut levels = Vec::with_capacity(found.len());
    for (i, (l, bands)) in found.into_iter().enumerate() {
        if l != i + 1 {
            return Err(CliError::Data(format!("{}: subband level {} missing", dir.display(), i + 1)));
        }
        let count = bands.len();
        if !count.is_power_of_two() || count < 2 || bands.keys().copied().ne(0..count) {
            return Err(CliError::Data(format!(
                "{}: level {l} subbands are not numbered 0..2^m",
                dir.display()
            )));
        }
        levels.push(bands.values().map(|p| load_fmap(p)).collect::<Result<Vec<_>>>()?);
    }
    let refs: Vec<&[FeatureMap]> = levels.iter().map(Vec::as_slice).collect();
    Ok(Some(flatten_band_levels(&refs)?))
}

fn load_statistical(dir: &Path) -> Result<Option<StatTexture>> {
    let path = dir.join(SAMPLESET);
    if !path.exists() {
        return Ok(None);
    }
    let sampling = load_sampleset(&path)?;
    let descriptors = sampling
        .points()
        .enumerate()
        .map(|(i, point)| {
            let map = load_fmap(&dir.join(region_file_name(i)))?;
            if map.channels() != 1 {
                return Err(CliError::Data(format!("{}: descriptor {i} has {} channels", dir.display(), map.channels())));
            }
            Ok(RegionDescriptor {
                region: point.region.clone(),
                rows: map.height(),
                cols: map.width(),
                values: map.into_data(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(StatTexture { sampling, descriptors }))
}

fn load_optional(path: PathBuf) -> Result<Option<FeatureMap>> {
    if path.exists() {
        load_fmap(&path).map(Some)
    } else {
        Ok(None)
    }
}

impl LossInputs {
    pub fn load(dir: &Path, cfg: &RunConfig) -> Result<Self> {
        if !dir.is_dir() {
            return Err(CliError::NotFound(dir.display().to_string()));
        }
        let probs = load_optional(dir.join(PROBS))?
            .map(ProbMap::from_feature_map)
            .transpose()
            .map_err(|e| CliError::from(e).context(PROBS))?;
        let labels = load_optional(dir.join(LABELS))?
            .map(|m| LabelMap::from_feature_map(&m, cfg.ignore_index))
            .transpose()
            .map_err(|e| CliError::from(e).context(LABELS))?;
        Ok(Self {
            structural: load_bands(dir)?,
            statistical: load_statistical(dir)?,
            probs,
            labels,
            image: load_optional(dir.join(IMAGE))?,
        })
    }
}

/// Loss report plus the names of terms left at zero for lack of inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutcome {
    pub report: LossReport,
    pub skipped: Vec<&'static str>,
}

impl LossOutcome {
    pub fn to_text(&self) -> String {
        format!("{}skipped={}\n", self.report.to_key_value(), self.skipped.join(","))
    }
}

/// Evaluates every term both sides have inputs for. Labels and the image are
/// taken from the student side when present, otherwise from the teacher side.
pub fn compute_losses(t: &LossInputs, s: &LossInputs, cfg: &RunConfig) -> Result<LossOutcome> {
    let mut parts = LossParts::default();
    let mut support = LossSupport::default();
    let mut skipped = Vec::new();

    match (&t.structural, &s.structural) {
        (Some(a), Some(b)) => {
            parts.structural = loss_structural(a, b).map_err(|e| CliError::from(e).context("l_str"))?;
            support.structural_shape = Some(a.shape());
        }
        _ => skipped.push("l_str"),
    }
    match (&t.statistical, &s.statistical) {
        (Some(a), Some(b)) => {
            parts.statistical = loss_statistical(a, b).map_err(|e| CliError::from(e).context("l_sta"))?;
            support.statistical_regions = a.descriptors.len();
        }
        _ => skipped.push("l_sta"),
    }
    match (&t.probs, &s.probs) {
        (Some(a), Some(b)) => {
            parts.response = loss_response(a, b).map_err(|e| CliError::from(e).context("l_re"))?;
            support.response_pixels = a.pixels();
        }
        _ => skipped.push("l_re"),
    }
    let labels = s.labels.as_ref().or(t.labels.as_ref());
    match (&s.probs, labels) {
        (Some(p), Some(y)) => {
            parts.seg = loss_segmentation(p, y).map_err(|e| CliError::from(e).context("l_seg"))?;
            support.segmentation_pixels = y.data().iter().filter(|&&v| v != y.ignore_index()).count();
        }
        _ => skipped.push("l_seg"),
    }
    let image = s.image.as_ref().or(t.image.as_ref());
    match (&s.probs, image) {
        (Some(p), Some(img)) => {
            let d = ProjectionDiscriminator { seed: cfg.seed };
            parts.adversarial = loss_adversarial(p, img, &d).map_err(|e| CliError::from(e).context("l_adv"))?;
        }
        _ => skipped.push("l_adv"),
    }

    let mut report = loss_total(parts, cfg.lambda)?;
    report.support = support;
    Ok(LossOutcome { report, skipped })
}

pub fn cmd_loss(teacher: &Path, student: &Path, cfg: &RunConfig) -> Result<LossOutcome> {
    cfg.validate()?;
    let t = LossInputs::load(teacher, cfg)?;
    let s = LossInputs::load(student, cfg)?;
    compute_losses(&t, &s, cfg)
}

/// Everything the pipeline derives from one feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub decomposition: Decomposition,
    pub structural: FeatureMap,
    pub stats: StatExtraction,
    pub probs: ProbMap,
    pub labels: LabelMap,
    pub image: FeatureMap,
}

impl Artifacts {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = self.decomposition.write(dir)?;
        written.extend(write_stats(&self.stats, dir)?);
        for (name, map) in [
            (PROBS, self.probs.to_feature_map()),
            (LABELS, self.labels.to_feature_map()),
            (IMAGE, self.image.clone()),
        ] {
            let path = dir.join(name);
            save_fmap(&path, &map)?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn loss_inputs(&self) -> LossInputs {
        LossInputs {
            structural: Some(self.structural.clone()),
            statistical: Some(self.stats.texture.clone()),
            probs: Some(self.probs.clone()),
            labels: Some(self.labels.clone()),
            image: Some(self.image.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub teacher: Artifacts,
    pub student: Artifacts,
    pub outcome: LossOutcome,
}

/// Runs both branches on both maps. The student is evaluated on the teacher's
/// sample set; probabilities are the channel softmax of each map, labels the
/// teacher's argmax and the discriminator image the teacher map.
pub fn run_pipeline(teacher: &FeatureMap, student: &FeatureMap, cfg: &RunConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    if teacher.shape() != student.shape() {
        return Err(CliError::Data(format!(
            "teacher is {} but student is {}",
            teacher.shape_string(),
            student.shape_string()
        )));
    }
    let stat = cfg.stat();
    let t_probs = ProbMap::softmax(teacher);
    let labels = LabelMap::new(teacher.height(), teacher.width(), t_probs.argmax(), cfg.ignore_index)?;

    let t_dec = decompose(teacher, cfg).map_err(|e| e.context("teacher decomposition"))?;
    let t_stats = extract_statistical(teacher, &stat, None).map_err(|e| CliError::from(e).context("teacher stats"))?;
    let s_dec = decompose(student, cfg).map_err(|e| e.context("student decomposition"))?;
    let s_stats = extract_statistical(student, &stat, Some(&t_stats.texture.sampling))
        .map_err(|e| CliError::from(e).context("student stats"))?;

    let t = Artifacts {
        structural: flatten_structural(&t_dec.set)?,
        decomposition: t_dec,
        stats: t_stats,
        probs: t_probs,
        labels: labels.clone(),
        image: teacher.clone(),
    };
    let s = Artifacts {
        structural: flatten_structural(&s_dec.set)?,
        decomposition: s_dec,
        stats: s_stats,
        probs: ProbMap::softmax(student),
        labels,
        image: teacher.clone(),
    };
    let outcome = compute_losses(&t.loss_inputs(), &s.loss_inputs(), cfg)?;
    Ok(PipelineRun { teacher: t, student: s, outcome })
}

/// Pipeline over two FMAP files; with `out`, artifacts land in `out/teacher`
/// and `out/student`, ready for [`cmd_loss`].
pub fn cmd_pipeline(teacher: &Path, student: &Path, cfg: &RunConfig, out: Option<&Path>) -> Result<LossOutcome> {
    cfg.validate()?;
    let t = load_fmap(teacher)?;
    let s = load_fmap(student)?;
    let run = run_pipeline(&t, &s, cfg)?;
    if let Some(dir) = out {
        run.teacher.write(&dir.join("teacher"))?;
        run.student.write(&dir.join("student"))?;
    }
    Ok(run.outcome)
}

/// Writes `teacher.fmap` and `student.fmap` into `out`.
pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> Result<[PathBuf; 2]> {
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(CliError::Config(format!("sigma: must be non-negative, got {}", spec.sigma)));
    }
    if spec.channels == 0 || spec.height == 0 || spec.width == 0 {
        return Err(CliError::Config("dims: channels, height and width must be positive".into()));
    }
    let (t, s) = generate_pair(spec)?;
    ensure_dir(out)?;
    let paths = [out.join("teacher.fmap"), out.join("student.fmap")];
    save_fmap(&paths[0], &t)?;
    save_fmap(&paths[1], &s)?;
    Ok(paths)
}
