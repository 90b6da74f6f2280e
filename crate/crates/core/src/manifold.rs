//! Primitives on the compact real Stiefel manifold
//! `St(p, n) = { S in R^{n x p} : S^T S = I_p }`.
//!
//! Points are stored as dense `n x p` matrices. The tangent space at `S` is
//! `{ D : sym(S^T D) = 0 }` and the orthogonal projection onto it is
//! `P(X, S) = X - S sym(S^T X)`. Steps are mapped back to the manifold with
//! the polar retraction `S + tD -> (S + tD)((S + tD)^T (S + tD))^{-1/2}`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Membership tolerance for `S^T S = I`.
pub const ORTH_TOL: f64 = 1e-10;

/// Tolerance used when checking algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// One agent's state: an `n x p` matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct StiefelPoint {
    mat: DMatrix<f64>,
}

/// A tangent vector, stored as its `n x p` ambient representation.
///
/// The base point is not stored; the vector is tangent at whatever point it
/// was projected onto. Use [`TangentVector::is_tangent_at`] to check.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    mat: DMatrix<f64>,
}

/// Outcome of [`validate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validation {
    pub is_orthonormal: bool,
    /// `max |M^T M - I|` entrywise.
    pub deviation: f64,
}

pub fn check_dims(n: usize, p: usize) -> Result<()> {
    if p < 1 || p >= n {
        return Err(Error::Dimension { n, p });
    }
    Ok(())
}

pub(crate) fn check_same_shape(expected: &DMatrix<f64>, got: &DMatrix<f64>) -> Result<()> {
    if expected.shape() != got.shape() {
        return Err(Error::Mismatch {
            expected: expected.shape(),
            got: got.shape(),
        });
    }
    Ok(())
}

pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn skew(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

/// Frobenius inner product `tr(A^T B)`.
pub fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Checks whether `m` has orthonormal columns to within `tol`.
pub fn validate(m: &DMatrix<f64>, tol: f64) -> Result<Validation> {
    check_dims(m.nrows(), m.ncols())?;
    let deviation = orthonormality_defect(m);
    Ok(Validation {
        is_orthonormal: deviation <= tol,
        deviation,
    })
}

pub(crate) fn orthonormality_defect(m: &DMatrix<f64>) -> f64 {
    let p = m.ncols();
    let gram = m.tr_mul(m);
    max_abs(&(gram - DMatrix::<f64>::identity(p, p)))
}

impl StiefelPoint {
    /// Wraps `mat`, checking dimensions and orthonormality at [`ORTH_TOL`].
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(mat, ORTH_TOL)
    }

    pub fn with_tolerance(mat: DMatrix<f64>, tol: f64) -> Result<Self> {
        let v = validate(&mat, tol)?;
        if !v.is_orthonormal {
            return Err(Error::NotOrthonormal {
                deviation: v.deviation,
                tol,
            });
        }
        Ok(Self { mat })
    }

    /// Caller guarantees orthonormality (e.g. fresh output of a retraction).
    pub(crate) fn from_matrix_unchecked(mat: DMatrix<f64>) -> Self {
        Self { mat }
    }

    /// `[I_p; 0]`.
    pub fn identity_prefix(n: usize, p: usize) -> Result<Self> {
        check_dims(n, p)?;
        Ok(Self {
            mat: DMatrix::identity(n, p),
        })
    }

    /// Point of `St(1, 2)` at angle `theta`: `(cos theta, sin theta)`.
    pub fn from_angle(theta: f64) -> Self {
        Self {
            mat: DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()]),
        }
    }

    /// Unit column vector in `St(1, n)`; `v` is normalized.
    pub fn from_unit_vector(v: &[f64]) -> Result<Self> {
        let m = DMatrix::from_column_slice(v.len(), 1, v);
        let norm = m.norm();
        if norm == 0.0 {
            return Err(Error::NotOrthonormal {
                deviation: 1.0,
                tol: ORTH_TOL,
            });
        }
        Self::new(m / norm)
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn p(&self) -> usize {
        self.mat.ncols()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.mat.shape()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn inner(&self, other: &StiefelPoint) -> f64 {
        self.mat.dot(&other.mat)
    }

    /// Left action `R S` of an orthogonal `n x n` matrix.
    pub fn rotate(&self, r: &DMatrix<f64>) -> Result<Self> {
        if r.nrows() != self.n() || r.ncols() != self.n() {
            return Err(Error::Mismatch {
                expected: (self.n(), self.n()),
                got: r.shape(),
            });
        }
        Self::new(r * &self.mat)
    }
}

impl TangentVector {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub(crate) fn from_matrix(mat: DMatrix<f64>) -> Self {
        Self { mat }
    }

    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    /// `max |sym(S^T D)| <= tol`.
    pub fn is_tangent_at(&self, base: &StiefelPoint, tol: f64) -> bool {
        self.mat.shape() == base.dims() && max_abs(&sym(&base.mat.tr_mul(&self.mat))) <= tol
    }
}

/// `X - S sym(S^T X)` without shape checks.
pub(crate) fn project_raw(x: &DMatrix<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    x - s * sym(&s.tr_mul(x))
}

/// Orthogonal projection of `x` onto the tangent space at `s`.
pub fn project_tangent(x: &DMatrix<f64>, s: &StiefelPoint) -> Result<TangentVector> {
    check_same_shape(&s.mat, x)?;
    Ok(TangentVector::from_matrix(project_raw(x, &s.mat)))
}

/// The two-term form `S skew(S^T X) + (I - S S^T) X` of the same projection.
pub fn project_tangent_split(x: &DMatrix<f64>, s: &StiefelPoint) -> Result<TangentVector> {
    check_same_shape(&s.mat, x)?;
    let st_x = s.mat.tr_mul(x);
    let normal_free = x - &s.mat * &st_x;
    Ok(TangentVector::from_matrix(
        &s.mat * skew(&st_x) + normal_free,
    ))
}

/// Polar factor `A (A^T A)^{-1/2}`, the closest matrix with orthonormal
/// columns to a full-rank `A`.
pub fn polar_factor(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    polar_factor_with_step(a, 1.0)
}

fn polar_factor_with_step(a: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>> {
    let gram = a.tr_mul(a);
    let eig = gram.symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let min_ev = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !min_ev.is_finite() || min_ev <= 1e-24 || min_ev <= max_ev * 1e-28 {
        return Err(Error::RankDeficient {
            sigma_min: min_ev.max(0.0).sqrt(),
            step,
        });
    }
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let q = &eig.eigenvectors;
    let g_inv_sqrt = q * DMatrix::from_diagonal(&inv_sqrt) * q.transpose();
    Ok(a * g_inv_sqrt)
}

/// Polar retraction of the step `t * delta` taken from `s`.
pub fn retract(s: &StiefelPoint, delta: &TangentVector, t: f64) -> Result<StiefelPoint> {
    check_same_shape(&s.mat, &delta.mat)?;
    retract_raw(&s.mat, &delta.mat, t).map(StiefelPoint::from_matrix_unchecked)
}

pub(crate) fn retract_raw(s: &DMatrix<f64>, delta: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if t == 0.0 {
        return Ok(s.clone());
    }
    let a = s + delta * t;
    polar_factor_with_step(&a, t)
}

/// Haar-distributed sample: QR of an `n x p` standard Gaussian matrix with
/// the signs of `diag(R)` moved into `Q` so the factorization is unique.
pub fn random_stiefel<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<StiefelPoint> {
    check_dims(n, p)?;
    let g = DMatrix::<f64>::from_fn(n, p, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(StiefelPoint::from_matrix_unchecked(q))
}

/// Frobenius distance `||S1 - S2||`.
pub fn chordal_distance(a: &StiefelPoint, b: &StiefelPoint) -> Result<f64> {
    check_same_shape(&a.mat, &b.mat)?;
    Ok(chordal_raw(&a.mat, &b.mat))
}

/// `sqrt(2p - 2<S1, S2>)`, clamped at zero.
pub(crate) fn chordal_raw(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm()
}
