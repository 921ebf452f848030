use super::{Result, StatError};

/// Record of the sparse/dense split made by [`heuristic_levels`].
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSplit {
    /// Source levels whose count ratio fell below the threshold.
    pub sparse_sources: usize,
    pub dense_sources: usize,
    /// Levels allotted to each group after re-quantization.
    pub sparse_levels: usize,
    pub dense_levels: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantLevels {
    /// Ascending quantization levels.
    pub levels: Vec<f64>,
    /// Per-level count used in place of N in the quantization window `±0.5/W`.
    pub peak_widths: Vec<f64>,
    pub split: Option<GroupSplit>,
    /// Set when heuristic initialization gave up and returned uniform levels.
    pub fallback: bool,
}

impl QuantLevels {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// `N×P` soft assignment of pixels to quantization levels, row-major by level.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMatrix {
    pub n_levels: usize,
    pub n_pixels: usize,
    pub values: Vec<f64>,
    /// Row sums of `values`.
    pub counts: Vec<f64>,
    /// Denoised matrices are rescaled row-wise, so entries may leave `[0, 1]`
    /// and zero rows gain a uniform offset.
    pub denoised: bool,
}

impl EncodingMatrix {
    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.n_pixels..(n + 1) * self.n_pixels]
    }

    pub fn column(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_levels).map(move |n| self.values[n * self.n_pixels + i])
    }

    /// Pixels whose column is entirely zero, i.e. quantized to no level.
    pub fn unquantized(&self) -> usize {
        (0..self.n_pixels).filter(|&i| self.column(i).all(|v| v == 0.0)).count()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

fn value_range(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(StatError::EmptyInput);
    }
    Ok(values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
}

/// `L_n = (max − min)/N · n + min` for `n = 1..=N`.
pub fn uniform_levels(values: &[f64], n: usize) -> Result<QuantLevels> {
    if n == 0 {
        return Err(StatError::InvalidConfig("level count must be at least 1".into()));
    }
    let (lo, hi) = value_range(values)?;
    let step = (hi - lo) / n as f64;
    Ok(QuantLevels {
        levels: (1..=n).map(|i| step * i as f64 + lo).collect(),
        peak_widths: vec![n as f64; n],
        split: None,
        fallback: false,
    })
}

/// Encodes each value against its two bracketing levels.
///
/// Level `n` fires with weight `1 − |L_n − s|` when
/// `−0.5/W_n ≤ L_n − s < 0.5/W_n`, but only if it is the nearest level at or
/// below `s` or the nearest level above it. Repeated levels collapse onto
/// their first occurrence.
pub fn quantize(values: &[f64], levels: &QuantLevels) -> EncodingMatrix {
    let n = levels.len();
    let p = values.len();
    let active: Vec<usize> = (0..n)
        .filter(|&i| i == 0 || levels.levels[i] > levels.levels[i - 1])
        .collect();
    let mut out = vec![0.0; n * p];
    for (i, &s) in values.iter().enumerate() {
        let split = active.partition_point(|&a| levels.levels[a] <= s);
        let lower = split.checked_sub(1).map(|j| active[j]);
        let upper = active.get(split).copied();
        for level in [lower, upper].into_iter().flatten() {
            let diff = levels.levels[level] - s;
            let half = 0.5 / levels.peak_widths[level];
            if -half <= diff && diff < half {
                out[level * p + i] = 1.0 - diff.abs();
            }
        }
    }
    let counts = if p == 0 {
        vec![0.0; n]
    } else {
        out.chunks_exact(p).map(|row| row.iter().sum()).collect()
    };
    EncodingMatrix { n_levels: n, n_pixels: p, values: out, counts, denoised: false }
}

/// Value interval owned by each level: halfway to its neighbours, mirrored at the ends.
fn level_cells(levels: &[f64]) -> Vec<(f64, f64)> {
    let k = levels.len();
    (0..k)
        .map(|i| {
            let lo = if i > 0 {
                0.5 * (levels[i - 1] + levels[i])
            } else if k > 1 {
                levels[0] - 0.5 * (levels[1] - levels[0])
            } else {
                levels[0]
            };
            let hi = if i + 1 < k {
                0.5 * (levels[i] + levels[i + 1])
            } else if k > 1 {
                levels[k - 1] + 0.5 * (levels[k - 1] - levels[k - 2])
            } else {
                levels[0]
            };
            (lo, hi)
        })
        .collect()
}

/// Spreads `k` levels uniformly over the union of `cells`, measured by length.
///
/// Positions follow the same end-inclusive convention as [`uniform_levels`].
/// A contiguous run of cells therefore yields plain uniform levels over the
/// range it spans.
fn requantize(cells: &[(f64, f64)], k: usize) -> Vec<f64> {
    let total: f64 = cells.iter().map(|(lo, hi)| hi - lo).sum();
    if total <= 0.0 {
        let centre = cells.iter().map(|(lo, hi)| 0.5 * (lo + hi)).sum::<f64>() / cells.len() as f64;
        return vec![centre; k];
    }
    let mut out = Vec::with_capacity(k);
    let mut cell = 0;
    let mut consumed = 0.0;
    for j in 1..=k {
        let target = total * j as f64 / k as f64;
        while cell + 1 < cells.len() && consumed + (cells[cell].1 - cells[cell].0) < target {
            consumed += cells[cell].1 - cells[cell].0;
            cell += 1;
        }
        let (lo, hi) = cells[cell];
        out.push((lo + (target - consumed)).min(hi));
    }
    out
}

/// Adaptive level initialization.
///
/// Over-quantizes into `2N` uniform levels, splits them by count ratio at `δ`
/// into a sparse and a dense group, then re-quantizes the value span of the
/// sparse group into `round(αN)` levels and the dense group into the rest.
/// Each new level widens its quantization window to its group's level count.
/// The split is repeated `iterations` times on the current levels.
pub fn heuristic_levels(
    values: &[f64],
    n: usize,
    alpha: f64,
    delta: f64,
    iterations: usize,
) -> Result<QuantLevels> {
    if n < 2 {
        return Err(StatError::InvalidConfig(format!("heuristic init needs N >= 2, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatError::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if delta.is_nan() || delta <= 0.0 || !delta.is_finite() {
        return Err(StatError::InvalidConfig(format!("delta must be positive, got {delta}")));
    }
    if iterations == 0 {
        return Err(StatError::InvalidConfig("iterations must be at least 1".into()));
    }
    let (lo, hi) = value_range(values)?;
    let fallback = || -> Result<QuantLevels> {
        let mut levels = uniform_levels(values, n)?;
        levels.fallback = true;
        Ok(levels)
    };
    if lo == hi {
        return fallback();
    }

    let n_sparse = ((alpha * n as f64).round() as usize).clamp(1, n - 1);
    let n_dense = n - n_sparse;
    let mut current = uniform_levels(values, 2 * n)?;
    for _ in 0..iterations {
        let encoding = quantize(values, &current);
        let total = encoding.total();
        if total <= 0.0 {
            return fallback();
        }
        let cells = level_cells(&current.levels);
        let (sparse, dense): (Vec<usize>, Vec<usize>) =
            (0..current.len()).partition(|&i| encoding.counts[i] / total < delta);
        if sparse.is_empty() || dense.is_empty() {
            return fallback();
        }
        let pick = |group: &[usize]| group.iter().map(|&i| cells[i]).collect::<Vec<_>>();
        let mut merged: Vec<(f64, f64)> = requantize(&pick(&sparse), n_sparse)
            .into_iter()
            .map(|l| (l, n_sparse as f64))
            .chain(requantize(&pick(&dense), n_dense).into_iter().map(|l| (l, n_dense as f64)))
            .collect();
        merged.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        current = QuantLevels {
            levels: merged.iter().map(|m| m.0).collect(),
            peak_widths: merged.iter().map(|m| m.1).collect(),
            split: Some(GroupSplit {
                sparse_sources: sparse.len(),
                dense_sources: dense.len(),
                sparse_levels: n_sparse,
                dense_levels: n_dense,
            }),
            fallback: false,
        };
    }
    Ok(current)
}
