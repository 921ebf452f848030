use super::quant::{EncodingMatrix, QuantLevels};

pub const DESCRIPTOR_WIDTH: usize = 8;

/// Orthonormal-column lift from the 2-d node features to the descriptor width.
/// Generated once from a seeded Gaussian draw followed by QR; kept fixed.
pub const LIFT_WEIGHTS: [[f64; 2]; DESCRIPTOR_WIDTH] = [
    [0.26118551436301196, 0.12867910876147223],
    [0.455036891194063, -0.15631804068185645],
    [0.02809162407488119, -0.4771036704061163],
    [-0.4549983739825059, -0.21510049133894504],
    [0.017647543687382628, -0.4499367362216813],
    [-0.1656565442878079, -0.43328826352658417],
    [0.09194635294868553, 0.4941275792094771],
    [-0.6933276547097641, 0.2253139431756841],
];

pub const LIFT_BIAS: [f64; DESCRIPTOR_WIDTH] = [
    0.017642473046864,
    -0.056533338944261595,
    -0.00909554071450786,
    -0.055931058860292794,
    0.03720854673740993,
    -0.03499663066896996,
    -0.010980165566296317,
    0.10410762560375308,
];

/// Row-major `rows × DESCRIPTOR_WIDTH` level descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub rows: usize,
    pub values: Vec<f64>,
}

impl Descriptor {
    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * DESCRIPTOR_WIDTH..(n + 1) * DESCRIPTOR_WIDTH]
    }
}

/// Row-stochastic affinity between levels, `softmax_m(−|L_n − L_m| / τ)`.
pub fn level_adjacency(levels: &[f64], tau: f64) -> Vec<f64> {
    let n = levels.len();
    let mut adj = vec![0.0; n * n];
    for (i, row) in adj.chunks_exact_mut(n.max(1)).enumerate() {
        // the diagonal logit is 0, the row maximum
        for (j, a) in row.iter_mut().enumerate() {
            *a = (-(levels[i] - levels[j]).abs() / tau).exp();
        }
        let z: f64 = row.iter().sum();
        row.iter_mut().for_each(|a| *a /= z);
    }
    adj
}

/// One propagation step over the level graph followed by a fixed affine lift.
///
/// Node features are `[L_n, count_n / Σ count]`.
pub fn graph_enhance(e: &EncodingMatrix, levels: &QuantLevels, tau: f64) -> Descriptor {
    let n = levels.len();
    let total = e.total();
    let nodes: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let share = if total > 0.0 { e.counts[i] / total } else { 0.0 };
            [levels.levels[i], share]
        })
        .collect();
    let adj = level_adjacency(&levels.levels, tau);
    let mut values = Vec::with_capacity(n * DESCRIPTOR_WIDTH);
    for i in 0..n {
        let mut prop = [0.0; 2];
        for (j, node) in nodes.iter().enumerate() {
            let a = adj[i * n + j];
            prop[0] += a * node[0];
            prop[1] += a * node[1];
        }
        for (w, b) in LIFT_WEIGHTS.iter().zip(LIFT_BIAS) {
            values.push(w[0] * prop[0] + w[1] * prop[1] + b);
        }
    }
    Descriptor { rows: n, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statexture::{quantize, uniform_levels};

    #[test]
    fn lift_columns_are_orthonormal() {
        let dot = |a: usize, b: usize| LIFT_WEIGHTS.iter().map(|r| r[a] * r[b]).sum::<f64>();
        assert!((dot(0, 0) - 1.0).abs() < 1e-12);
        assert!((dot(1, 1) - 1.0).abs() < 1e-12);
        assert!(dot(0, 1).abs() < 1e-12);
    }

    #[test]
    fn adjacency_rows_sum_to_one() {
        let levels = [0.1, 0.15, 0.4, 0.9, 0.91];
        let adj = level_adjacency(&levels, 0.1);
        for row in adj.chunks_exact(5) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn single_node_is_identity_propagation() {
        let values = [0.4, 0.4];
        let levels = uniform_levels(&values, 1).unwrap();
        let e = quantize(&values, &levels);
        assert_eq!(level_adjacency(&levels.levels, 0.1), vec![1.0]);
        let d = graph_enhance(&e, &levels, 0.1);
        assert_eq!(d.rows, 1);
        for (k, (w, b)) in LIFT_WEIGHTS.iter().zip(LIFT_BIAS).enumerate() {
            let expected = w[0] * 0.4 + w[1] * 1.0 + b;
            assert!((d.values[k] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn swapping_identical_nodes_permutes_rows() {
        let levels = QuantLevels {
            levels: vec![0.2, 0.5, 0.5, 0.8],
            peak_widths: vec![4.0; 4],
            split: None,
            fallback: false,
        };
        let e = EncodingMatrix {
            n_levels: 4,
            n_pixels: 1,
            values: vec![1.0, 2.0, 2.0, 3.0],
            counts: vec![1.0, 2.0, 2.0, 3.0],
            denoised: false,
        };
        let d = graph_enhance(&e, &levels, 0.1);
        let mut swapped = e.clone();
        swapped.counts.swap(1, 2);
        swapped.values.swap(1, 2);
        let ds = graph_enhance(&swapped, &levels, 0.1);
        assert_eq!(d.row(1), ds.row(2));
        assert_eq!(d.row(2), ds.row(1));
        assert_eq!(d.row(0), ds.row(0));
    }
}
