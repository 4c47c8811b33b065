//! Labeled samples, centering and per-group empirical moments.
//!
//! Covariances use the biased `1/N_a` normalization, so that the second
//! moment `M_a = Σ_a + μ_a μ_aᵀ` equals `(1/N_a) Σ_{i ∈ I_a} x_i x_iᵀ` exactly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SortedEigen, Vector};

/// Column means below this magnitude count as zero for the centered flag.
pub const CENTER_TOL: f64 = 1e-9;

/// Columns whose population standard deviation falls outside
/// `(MIN_COLUMN_STD, MAX_COLUMN_STD)` are dropped by [`degenerate_columns`].
pub const MIN_COLUMN_STD: f64 = 1e-5;
pub const MAX_COLUMN_STD: f64 = 1000.0;

/// Feature rows with a group label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    labels: Vec<usize>,
    groups: usize,
    centered: bool,
    center: Vector,
}

impl Dataset {
    /// Labels must cover `0..m` with every group nonempty.
    pub fn new(x: Matrix, labels: Vec<usize>) -> Result<Self> {
        Self::with_groups(x, labels, None)
    }

    /// Like [`Dataset::new`] but with an explicit group count, so subsets
    /// keep the label space of their parent.
    pub fn with_groups(x: Matrix, labels: Vec<usize>, groups: Option<usize>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                what: "labels",
                expected: x.nrows(),
                found: labels.len(),
            });
        }
        let max_label = labels.iter().copied().max().unwrap_or(0);
        let groups = groups.unwrap_or(max_label + 1);
        if max_label >= groups {
            return Err(Error::DimensionMismatch {
                what: "group label range",
                expected: groups,
                found: max_label + 1,
            });
        }
        let mut counts = vec![0usize; groups];
        for &a in &labels {
            counts[a] += 1;
        }
        if let Some(group) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyGroup { group });
        }
        let d = x.ncols();
        Ok(Self {
            x,
            labels,
            groups,
            centered: false,
            center: Vector::zeros(d),
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// The vector subtracted by [`Dataset::center`]; zero before centering.
    pub fn center_vector(&self) -> &Vector {
        &self.center
    }

    pub fn group_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.groups];
        for &a in &self.labels {
            counts[a] += 1;
        }
        counts
    }

    pub fn column_means(&self) -> Vector {
        let n = self.len() as f64;
        Vector::from_iterator(self.dim(), self.x.column_iter().map(|c| c.sum() / n))
    }

    /// Subtract `center`, or the dataset's own column means when `None`.
    ///
    /// Supplying a vector is how a test split gets the training center.
    pub fn center(&self, center: Option<&Vector>) -> Result<Self> {
        let shift = match center {
            Some(c) if c.len() != self.dim() => {
                return Err(Error::DimensionMismatch {
                    what: "center",
                    expected: self.dim(),
                    found: c.len(),
                })
            }
            Some(c) => c.clone(),
            None => self.column_means(),
        };
        let mut x = self.x.clone();
        for mut row in x.row_iter_mut() {
            for (v, s) in row.iter_mut().zip(shift.iter()) {
                *v -= s;
            }
        }
        Ok(Self {
            x,
            labels: self.labels.clone(),
            groups: self.groups,
            centered: true,
            center: &self.center + shift,
        })
    }

    /// Rows at `indices`, keeping the group label space and centering state.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut x = Matrix::zeros(indices.len(), d);
        let mut labels = Vec::with_capacity(indices.len());
        for (r, &i) in indices.iter().enumerate() {
            x.set_row(r, &self.x.row(i));
            labels.push(self.labels[i]);
        }
        let mut out = Self::with_groups(x, labels, Some(self.groups))?;
        out.centered = self.centered;
        out.center = self.center.clone();
        Ok(out)
    }

    /// Keep only the listed feature columns.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let x = self.x.select_columns(columns);
        let center = Vector::from_iterator(columns.len(), columns.iter().map(|&c| self.center[c]));
        Ok(Self {
            x,
            labels: self.labels.clone(),
            groups: self.groups,
            centered: self.centered,
            center,
        })
    }

    /// Every column mean within [`CENTER_TOL`] of zero.
    pub fn has_zero_mean(&self) -> bool {
        self.column_means().amax() <= CENTER_TOL
    }
}

/// Indices of columns whose population standard deviation is at most
/// `MIN_COLUMN_STD` or at least `MAX_COLUMN_STD`.
pub fn degenerate_columns(x: &Matrix) -> Vec<usize> {
    let n = x.nrows() as f64;
    x.column_iter()
        .enumerate()
        .filter(|(_, col)| {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = libm::sqrt(var);
            std <= MIN_COLUMN_STD || std >= MAX_COLUMN_STD
        })
        .map(|(j, _)| j)
        .collect()
}

/// Per-group empirical moments.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMoments {
    pub proportions: Vec<f64>,
    pub means: Vec<Vector>,
    pub covariances: Vec<Matrix>,
    pub second_moments: Vec<Matrix>,
    pub counts: Vec<usize>,
}

impl GroupMoments {
    /// Exact sample moments of a centered dataset.
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        if !ds.is_centered() {
            return Err(Error::NotCentered);
        }
        let d = ds.dim();
        let m = ds.groups();
        let counts = ds.group_counts();
        let mut sums = vec![Vector::zeros(d); m];
        let mut outer = vec![Matrix::zeros(d, d); m];
        for (row, &a) in ds.features().row_iter().zip(ds.labels()) {
            let x = row.transpose();
            sums[a] += &x;
            outer[a].ger(1.0, &x, &x, 1.0);
        }
        let n = ds.len() as f64;
        let mut proportions = Vec::with_capacity(m);
        let mut means = Vec::with_capacity(m);
        let mut covariances = Vec::with_capacity(m);
        let mut second_moments = Vec::with_capacity(m);
        for a in 0..m {
            if counts[a] == 0 {
                return Err(Error::EmptyGroup { group: a });
            }
            let na = counts[a] as f64;
            let mean = &sums[a] / na;
            let second = &outer[a] / na;
            let second = (&second + second.transpose()) * 0.5;
            let cov = &second - &mean * mean.transpose();
            proportions.push(na / n);
            means.push(mean);
            covariances.push(cov);
            second_moments.push(second);
        }
        Ok(Self {
            proportions,
            means,
            covariances,
            second_moments,
            counts,
        })
    }

    /// Zero-mean moments given directly by their second moment matrices.
    pub fn from_second_moments(
        proportions: Vec<f64>,
        second_moments: Vec<Matrix>,
        counts: Vec<usize>,
    ) -> Result<Self> {
        let d = second_moments.first().map(|m| m.nrows()).unwrap_or(0);
        let means = vec![Vector::zeros(d); second_moments.len()];
        Self::from_parts(proportions, means, second_moments, counts)
    }

    /// Moments from means and covariances; the second moments are derived.
    pub fn from_parts(
        proportions: Vec<f64>,
        means: Vec<Vector>,
        covariances: Vec<Matrix>,
        counts: Vec<usize>,
    ) -> Result<Self> {
        let m = proportions.len();
        if m < 2 {
            return Err(Error::TooFewGroups { found: m });
        }
        for (what, len) in [
            ("means", means.len()),
            ("covariances", covariances.len()),
            ("counts", counts.len()),
        ] {
            if len != m {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: m,
                    found: len,
                });
            }
        }
        let total: f64 = proportions.iter().sum();
        if proportions.iter().any(|&p| !(p > 0.0 && p <= 1.0)) || libm::fabs(total - 1.0) > 1e-12 {
            return Err(Error::InvalidConfig("group proportions must lie in (0,1] and sum to 1"));
        }
        let d = covariances[0].nrows();
        let mut second_moments = Vec::with_capacity(m);
        for (mu, cov) in means.iter().zip(&covariances) {
            if cov.nrows() != d || cov.ncols() != d || mu.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "moment dimension",
                    expected: d,
                    found: cov.nrows(),
                });
            }
            check_psd(cov)?;
            second_moments.push(cov + mu * mu.transpose());
        }
        Ok(Self {
            proportions,
            means,
            covariances,
            second_moments,
            counts,
        })
    }

    pub fn groups(&self) -> usize {
        self.proportions.len()
    }

    pub fn dim(&self) -> usize {
        self.second_moments[0].nrows()
    }

    /// `Σ_a p_a M_a`, the second moment of the pooled data.
    pub fn pooled_second_moment(&self) -> Matrix {
        self.proportions
            .iter()
            .zip(&self.second_moments)
            .fold(Matrix::zeros(self.dim(), self.dim()), |acc, (p, m)| acc + m * *p)
    }
}

/// Symmetric PSD within `1e-9`, scaled by the matrix magnitude.
pub(crate) fn check_psd(m: &Matrix) -> Result<()> {
    let scale = 1.0_f64.max(m.amax());
    if !crate::linalg::is_symmetric(m, 1e-9 * scale) {
        return Err(Error::NotSymmetric);
    }
    let min = SortedEigen::new(m).min();
    if min < -1e-9 * scale {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}
