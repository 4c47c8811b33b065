//! Reconstruction losses, group fairness measures, nominal PCA and the
//! rank test for the existence of an exactly fair projection.

use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{fix_column_signs, is_symmetric, orthonormality_residual, Matrix, SortedEigen, Vector};
use crate::manifold::StiefelPoint;

/// Relative eigenvalue cutoff for the numerical rank in [`fair_projection_test`].
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Provenance {
    RobustFair,
    NominalPca,
    External,
}

/// A `d × k` orthonormal basis of the retained subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    v: Matrix,
    pub provenance: Provenance,
}

impl Projection {
    pub fn new(v: Matrix, provenance: Provenance) -> Result<Self> {
        let residual = orthonormality_residual(&v);
        if residual > 1e-10 {
            return Err(Error::NotOrthonormal { residual });
        }
        Ok(Self { v, provenance })
    }

    /// The orthogonal complement of a solver point `U`.
    pub fn from_complement(u: &StiefelPoint, provenance: Provenance) -> Result<Self> {
        let d = u.dim();
        let k = d - u.rank();
        if k == 0 {
            return Err(Error::InvalidConfig("complement is empty"));
        }
        let residual = Matrix::identity(d, d) - u.projector();
        let eig = SortedEigen::new(&residual);
        let mut v = eig.vectors.columns(d - k, k).into_owned();
        // Flush eigenvectors back onto the exact complement before the check.
        v = &residual * v;
        let gram = v.transpose() * &v;
        let inv_sqrt = SortedEigen::new(&gram).map(|s| 1.0 / libm::sqrt(s));
        let mut v = v * inv_sqrt;
        fix_column_signs(&mut v);
        Self::new(v, provenance)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn k(&self) -> usize {
        self.v.ncols()
    }

    pub fn projector(&self) -> Matrix {
        &self.v * self.v.transpose()
    }

    /// `U` with `UUᵀ + VVᵀ = I`.
    pub fn complement(&self) -> Result<StiefelPoint> {
        let d = self.dim();
        let p = d - self.k();
        if p == 0 {
            return Err(Error::InvalidConfig("projection has no complement"));
        }
        let eig = SortedEigen::new(&self.projector());
        StiefelPoint::new(eig.vectors.columns(0, p).into_owned())
    }
}

/// `‖x − VVᵀx‖²`.
pub fn reconstruction_loss(v: &Projection, x: &Vector) -> Result<f64> {
    if x.len() != v.dim() {
        return Err(Error::DimensionMismatch {
            what: "sample",
            expected: v.dim(),
            found: x.len(),
        });
    }
    let coords = v.v.transpose() * x;
    Ok((x - &v.v * coords).norm_squared())
}

/// Top-`k` eigenvectors of a second moment, descending, each with its
/// largest-magnitude entry positive.
pub fn nominal_pca(second_moment: &Matrix, k: usize) -> Result<Projection> {
    let d = second_moment.nrows();
    if !second_moment.is_square() {
        return Err(Error::NotSymmetric);
    }
    if k == 0 || k >= d {
        return Err(Error::InvalidConfig("k must satisfy 1 <= k < d"));
    }
    let eig = SortedEigen::new(second_moment);
    let mut v = Matrix::zeros(d, k);
    for j in 0..k {
        v.set_column(j, &eig.vectors.column(d - 1 - j));
    }
    fix_column_signs(&mut v);
    Projection::new(v, Provenance::NominalPca)
}

/// Average and per-group reconstruction errors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FairnessReport {
    pub are: f64,
    pub group_errors: Vec<f64>,
    /// Largest pairwise gap between group errors.
    pub abdiff: f64,
    /// Same as `abdiff`: `|E[ℓ|A=0] − E[ℓ|A=1]|` for two groups, the maximum
    /// pairwise gap otherwise.
    pub unfairness: f64,
}

impl FairnessReport {
    pub fn from_group_errors(are: f64, group_errors: Vec<f64>) -> Self {
        let abdiff = max_pairwise_gap(&group_errors);
        Self {
            are,
            group_errors,
            abdiff,
            unfairness: abdiff,
        }
    }

    /// `ARE + ABDiff`, the model selection score.
    pub fn score(&self) -> f64 {
        self.are + self.abdiff
    }
}

pub fn max_pairwise_gap(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Per-sample losses aggregated over the whole dataset and per group.
pub fn evaluate(v: &Projection, ds: &Dataset) -> Result<FairnessReport> {
    if ds.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            what: "dataset",
            expected: v.dim(),
            found: ds.dim(),
        });
    }
    let m = ds.groups();
    let mut sums = alloc::vec![0.0; m];
    let mut counts = alloc::vec![0usize; m];
    let mut total = 0.0;
    for (row, &a) in ds.features().row_iter().zip(ds.labels()) {
        let loss = reconstruction_loss(v, &row.transpose())?;
        sums[a] += loss;
        counts[a] += 1;
        total += loss;
    }
    if let Some(group) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyGroup { group });
    }
    let group_errors = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    Ok(FairnessReport::from_group_errors(total / ds.len() as f64, group_errors))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairTest {
    pub exists: bool,
    pub rank: usize,
    pub projection: Option<Projection>,
}

/// Whether some `d × k` projection equalizes the conditional errors of two
/// groups whose second moments differ by `s`, i.e. `rank(s) ≤ k`.
///
/// When it exists the projection keeps the `k` eigenvectors of largest
/// `|σ|`, so its complement spans eigenvectors of (numerically) zero
/// eigenvalues and `⟨I − VVᵀ, S⟩ = 0`.
pub fn fair_projection_test(s: &Matrix, k: usize) -> Result<FairTest> {
    let d = s.nrows();
    if !s.is_square() || !is_symmetric(s, 1e-9) {
        return Err(Error::NotSymmetric);
    }
    if k == 0 || k >= d {
        return Err(Error::InvalidConfig("k must satisfy 1 <= k < d"));
    }
    let eig = SortedEigen::new(s);
    let scale = eig.values.iter().map(|v| libm::fabs(*v)).fold(0.0, f64::max);
    let rank = eig
        .values
        .iter()
        .filter(|v| libm::fabs(**v) > RANK_TOL * scale)
        .count();
    if rank > k {
        return Ok(FairTest {
            exists: false,
            rank,
            projection: None,
        });
    }
    let v = if scale == 0.0 {
        Matrix::identity(d, d).columns(0, k).into_owned()
    } else {
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| {
            libm::fabs(eig.values[j])
                .partial_cmp(&libm::fabs(eig.values[i]))
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });
        let mut v = Matrix::zeros(d, k);
        for (dst, &src) in order.iter().take(k).enumerate() {
            v.set_column(dst, &eig.vectors.column(src));
        }
        fix_column_signs(&mut v);
        v
    };
    Ok(FairTest {
        exists: true,
        rank,
        projection: Some(Projection::new(v, Provenance::External)?),
    })
}
