//! Stiefel manifold `{U ∈ R^{d×p} : UᵀU = I_p}` primitives.
//!
//! Only two retractions are provided: the Q-factor of `U + Δ` and the polar
//! factor `(U + Δ)(I + ΔᵀΔ)^{-1/2}`. Tangent vectors at `U` satisfy
//! `ΔᵀU + UᵀΔ = 0`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{orthonormality_residual, Matrix, SortedEigen};

/// Points closer than this to the manifold are accepted as-is.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Points up to this residual are repaired with one polar pass.
pub const REPAIR_TOL: f64 = 1e-6;
/// Tolerance on `ΔᵀU + UᵀΔ` for tangent vectors.
pub const TANGENT_TOL: f64 = 1e-8;

/// A `d × p` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    u: Matrix,
}

impl StiefelPoint {
    pub fn new(u: Matrix) -> Result<Self> {
        if u.ncols() == 0 || u.ncols() > u.nrows() {
            return Err(Error::DimensionMismatch {
                what: "Stiefel columns",
                expected: u.nrows(),
                found: u.ncols(),
            });
        }
        let residual = orthonormality_residual(&u);
        if residual <= ORTHONORMAL_TOL {
            Ok(Self { u })
        } else if residual <= REPAIR_TOL {
            Ok(Self { u: polar_factor(&u) })
        } else {
            Err(Error::NotOrthonormal { residual })
        }
    }

    pub(crate) fn from_trusted(u: Matrix) -> Self {
        Self { u }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.u
    }

    pub fn into_matrix(self) -> Matrix {
        self.u
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// Number of columns `p`.
    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn residual(&self) -> f64 {
        orthonormality_residual(&self.u)
    }

    /// Orthogonal projector `UUᵀ`.
    pub fn projector(&self) -> Matrix {
        &self.u * self.u.transpose()
    }
}

/// A matrix in the tangent space of some Stiefel point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    delta: Matrix,
}

impl TangentVector {
    pub(crate) fn from_trusted(delta: Matrix) -> Self {
        Self { delta }
    }

    /// Wrap `delta` after checking it is tangent at `base`.
    pub fn at(base: &StiefelPoint, delta: Matrix) -> Result<Self> {
        check_shape(base, &delta)?;
        if tangency_residual(base, &delta) > TANGENT_TOL * (1.0 + delta.norm()) {
            return Err(Error::InvalidConfig("matrix is not tangent at the base point"));
        }
        Ok(Self { delta })
    }

    pub fn zeros_at(base: &StiefelPoint) -> Self {
        Self {
            delta: Matrix::zeros(base.dim(), base.rank()),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.delta
    }

    pub fn into_matrix(self) -> Matrix {
        self.delta
    }

    pub fn norm(&self) -> f64 {
        self.delta.norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            delta: &self.delta * s,
        }
    }
}

/// `‖ΔᵀU + UᵀΔ‖_F`.
pub fn tangency_residual(base: &StiefelPoint, delta: &Matrix) -> f64 {
    let utd = base.u.transpose() * delta;
    (&utd + utd.transpose()).norm()
}

fn check_shape(base: &StiefelPoint, m: &Matrix) -> Result<()> {
    if m.shape() != base.u.shape() {
        return Err(Error::DimensionMismatch {
            what: "tangent shape",
            expected: base.u.len(),
            found: m.len(),
        });
    }
    Ok(())
}

/// Random point: Q-factor of a Gaussian `d × p` matrix, seeded.
pub fn random_point(d: usize, p: usize, seed: u64) -> Result<StiefelPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_point_with(d, p, &mut rng)
}

pub fn random_point_with<R: RngCore>(d: usize, p: usize, rng: &mut R) -> Result<StiefelPoint> {
    if p == 0 || p > d {
        return Err(Error::DimensionMismatch {
            what: "Stiefel columns",
            expected: d,
            found: p,
        });
    }
    let g = Matrix::from_fn(d, p, |_, _| StandardNormal.sample(rng));
    q_factor(g).map(StiefelPoint::from_trusted)
}

/// Orthogonal projection onto the tangent space at `base`:
/// `(I − UUᵀ)D + ½U(UᵀD − DᵀU)`.
pub fn project_tangent(base: &StiefelPoint, d: &Matrix) -> Result<TangentVector> {
    check_shape(base, d)?;
    let u = &base.u;
    let utd = u.transpose() * d;
    let normal = d - u * &utd;
    let skew = (&utd - utd.transpose()) * 0.5;
    Ok(TangentVector {
        delta: normal + u * skew,
    })
}

/// Thin Q-factor with a nonnegative diagonal in R.
fn q_factor(a: Matrix) -> Result<Matrix> {
    let p = a.ncols();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        let rjj = r[(j, j)];
        if libm::fabs(rjj) <= 1e-12 * scale {
            return Err(Error::RankDeficient);
        }
        if rjj < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// `A (AᵀA)^{-1/2}` for full-column-rank `A`.
fn polar_factor(a: &Matrix) -> Matrix {
    let gram = a.transpose() * a;
    let inv_sqrt = SortedEigen::new(&gram).map(|v| 1.0 / libm::sqrt(v));
    a * inv_sqrt
}

/// `qf(U + Δ)`.
pub fn retract_qf(base: &StiefelPoint, delta: &TangentVector) -> Result<StiefelPoint> {
    check_shape(base, &delta.delta)?;
    q_factor(&base.u + &delta.delta).map(StiefelPoint::from_trusted)
}

/// `(U + Δ)(I + ΔᵀΔ)^{-1/2}` via the eigendecomposition of the `p × p` Gram matrix.
pub fn retract_polar(base: &StiefelPoint, delta: &TangentVector) -> Result<StiefelPoint> {
    check_shape(base, &delta.delta)?;
    let p = base.rank();
    let gram = Matrix::identity(p, p) + delta.delta.transpose() * &delta.delta;
    let inv_sqrt = SortedEigen::new(&gram).map(|v| 1.0 / libm::sqrt(v));
    // Rounding drift off the manifold compounds over iterations unless repaired.
    StiefelPoint::new((&base.u + &delta.delta) * inv_sqrt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Retraction {
    Qf,
    #[default]
    Polar,
}

impl Retraction {
    pub fn retract(self, base: &StiefelPoint, delta: &TangentVector) -> Result<StiefelPoint> {
        match self {
            Retraction::Qf => retract_qf(base, delta),
            Retraction::Polar => retract_polar(base, delta),
        }
    }
}
