//! Training-set rebalancing by shape rarity.
//!
//! Both methods first remove similarity (Procrustes to the generalized mean)
//! and run PCA on the aligned, flattened shapes. GDB oversamples by the
//! Mahalanobis distance in the leading `K` components; PDB flattens the
//! histogram of first-component projections.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::{mean_shape, procrustes_align, Shape};

const GPA_ITERS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BalanceMethod {
    Gdb,
    Pdb,
}

impl BalanceMethod {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Gdb => "gdb",
            Self::Pdb => "pdb",
        }
    }
}

/// How many principal components GDB keeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ComponentPolicy {
    Fixed(usize),
    /// Smallest `K` whose components explain at least `fraction` of the
    /// variance, capped at `max`.
    Variance { fraction: f64, max: usize },
}

impl Default for ComponentPolicy {
    fn default() -> Self {
        Self::Variance {
            fraction: 0.95,
            max: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GdbParams {
    pub components: ComponentPolicy,
    pub alpha: f64,
    pub max_count: usize,
}

impl Default for GdbParams {
    fn default() -> Self {
        Self {
            components: ComponentPolicy::default(),
            alpha: 1.0,
            max_count: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdbParams {
    pub bins: usize,
    pub max_count: usize,
}

impl Default for PdbParams {
    fn default() -> Self {
        Self {
            bins: 9,
            max_count: 8,
        }
    }
}

/// Per-sample statistic (Mahalanobis distance or first-PC projection) and
/// duplication count.
#[derive(Clone, Debug, PartialEq)]
pub struct BalanceReport {
    pub method: BalanceMethod,
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
    /// Components actually used.
    pub components: usize,
}

/// Principal components of similarity-aligned shapes.
#[derive(Clone, Debug)]
pub struct ShapePca {
    /// `n × 2N` aligned, flattened shapes.
    pub aligned: DMatrix<f64>,
    pub mean: Vec<f64>,
    /// Descending eigenvalues of the sample covariance (divisor `n − 1`).
    pub variances: Vec<f64>,
    /// Unit eigenvectors as columns, matching `variances`.
    pub axes: DMatrix<f64>,
}

impl ShapePca {
    pub fn fit(shapes: &[Shape]) -> Result<Self> {
        if shapes.len() < 2 {
            return Err(Error::Usage("shape PCA needs at least two shapes".into()));
        }
        let reference = mean_shape(shapes, GPA_ITERS)?;
        let dim = 2 * reference.len();
        let n = shapes.len();
        let mut aligned = DMatrix::zeros(n, dim);
        for (r, s) in shapes.iter().enumerate() {
            let a = procrustes_align(s, &reference)?.aligned;
            for (c, v) in a.flat().into_iter().enumerate() {
                aligned[(r, c)] = v;
            }
        }
        let mean: Vec<f64> = (0..dim).map(|c| aligned.column(c).mean()).collect();
        let mut centered = aligned.clone();
        for c in 0..dim {
            centered.column_mut(c).add_scalar_mut(-mean[c]);
        }
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let variances = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let axes = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self {
            aligned,
            mean,
            variances,
            axes,
        })
    }

    /// Components with non-negligible variance.
    pub fn rank(&self) -> usize {
        let top = self.variances.first().copied().unwrap_or(0.0);
        if top <= 1e-20 {
            return 0;
        }
        self.variances.iter().take_while(|&&v| v > 1e-10 * top).count()
    }

    pub fn choose_components(&self, policy: ComponentPolicy) -> usize {
        let rank = self.rank();
        let k = match policy {
            ComponentPolicy::Fixed(k) => k,
            ComponentPolicy::Variance { fraction, max } => {
                let total: f64 = self.variances.iter().sum();
                let mut acc = 0.0;
                let mut k = 0;
                for v in &self.variances {
                    if total <= 0.0 || acc >= fraction * total {
                        break;
                    }
                    acc += v;
                    k += 1;
                }
                k.min(max)
            }
        };
        if k > rank {
            log::warn!("requested {k} shape components but the data has rank {rank}; using {rank}");
        }
        k.min(rank)
    }

    /// Raw (unstandardized) scores on component `c` for every shape.
    pub fn scores(&self, c: usize) -> Vec<f64> {
        (0..self.aligned.nrows())
            .map(|r| {
                (0..self.mean.len())
                    .map(|j| (self.aligned[(r, j)] - self.mean[j]) * self.axes[(j, c)])
                    .sum()
            })
            .collect()
    }
}

/// Mahalanobis distances in the leading `k` components: the norm of the
/// standardized scores.
pub fn mahalanobis_distances(pca: &ShapePca, k: usize) -> Vec<f64> {
    let n = pca.aligned.nrows();
    let mut sq = vec![0.0; n];
    for c in 0..k {
        let sd = pca.variances[c].sqrt();
        for (acc, s) in sq.iter_mut().zip(pca.scores(c)) {
            *acc += (s / sd).powi(2);
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

/// Generalized data balancing: `count = clamp(round(α · d / mean d), 1, max)`.
pub fn gdb_weights(shapes: &[Shape], params: GdbParams) -> Result<BalanceReport> {
    let pca = ShapePca::fit(shapes)?;
    let k = pca.choose_components(params.components);
    let values = mahalanobis_distances(&pca, k);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let counts = values
        .iter()
        .map(|&d| {
            if mean > 0.0 {
                ((params.alpha * d / mean).round() as usize).clamp(1, params.max_count.max(1))
            } else {
                1
            }
        })
        .collect();
    Ok(BalanceReport {
        method: BalanceMethod::Gdb,
        values,
        counts,
        components: k,
    })
}

/// Pose-based balancing: histogram of first-component projections over
/// `bins` equal-width bins; `count = min(round(max_bin / own_bin), max)`.
pub fn pdb_weights(shapes: &[Shape], params: PdbParams) -> Result<BalanceReport> {
    if params.bins == 0 {
        return Err(Error::config("PDB needs at least one bin"));
    }
    let pca = ShapePca::fit(shapes)?;
    let (values, components) = if pca.rank() == 0 {
        (vec![0.0; shapes.len()], 0)
    } else {
        (pca.scores(0), 1)
    };
    let counts = histogram_counts(&values, params.bins, params.max_count);
    Ok(BalanceReport {
        method: BalanceMethod::Pdb,
        values,
        counts,
        components,
    })
}

/// Duplication counts flattening the histogram of `values`.
pub fn histogram_counts(values: &[f64], bins: usize, max_count: usize) -> Vec<usize> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let bin_of = |v: f64| {
        if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        }
    };
    let mut hist = vec![0usize; bins];
    for &v in values {
        hist[bin_of(v)] += 1;
    }
    let top = hist.iter().copied().max().unwrap_or(0) as f64;
    values
        .iter()
        .map(|&v| ((top / hist[bin_of(v)] as f64).round() as usize).clamp(1, max_count.max(1)))
        .collect()
}

/// Expands sample indices by their duplication counts.
pub fn expand_indices(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat_n(i, c))
        .collect()
}
