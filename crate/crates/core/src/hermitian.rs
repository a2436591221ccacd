//! Complex Hermitian matrices and the few kernels the estimators need:
//! inversion through a Cholesky factor, trace powers and eigenvalues.
//!
//! Every constructor and every product that should be Hermitian is passed
//! through [`HermitianMatrix::from_matrix`] (or the unchecked internal
//! re-symmetrization) so that floating-point drift never leaks an
//! asymmetric matrix into downstream code.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`HermitianMatrix::from_matrix`].
pub const ASYMMETRY_TOLERANCE: f64 = 1e-9;

/// A p x p complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: DMatrix<Complex64>,
}

/// Where the values in a [`TraceSet`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Computed exactly from a known matrix.
    Oracle,
    /// Estimated from a multitaper spectral matrix.
    Estimated,
}

/// The four trace functionals tr{S}, tr{S^2}, tr{S^-1}, tr{S^-2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    pub tr_s: f64,
    pub tr_s2: f64,
    pub tr_sinv: f64,
    pub tr_sinv2: f64,
    pub provenance: Provenance,
}

impl TraceSet {
    pub fn oracle(tr_s: f64, tr_s2: f64, tr_sinv: f64, tr_sinv2: f64) -> Self {
        Self {
            tr_s,
            tr_s2,
            tr_sinv,
            tr_sinv2,
            provenance: Provenance::Oracle,
        }
    }

    /// `p tr{S^2} >= tr^2{S}` and `p tr{S^-2} >= tr^2{S^-1}`, with a small
    /// relative slack for rounding.
    pub fn satisfies_cauchy_schwarz(&self, p: usize) -> bool {
        let p = p as f64;
        let slack = 1e-12;
        p * self.tr_s2 >= self.tr_s * self.tr_s * (1.0 - slack)
            && p * self.tr_sinv2 >= self.tr_sinv * self.tr_sinv * (1.0 - slack)
    }

    pub(crate) fn all_positive_finite(&self) -> bool {
        [self.tr_s, self.tr_s2, self.tr_sinv, self.tr_sinv2]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl HermitianMatrix {
    /// Validates and re-symmetrizes a square complex matrix.
    ///
    /// Returns the Hermitian part `(A + A^H)/2` when the relative asymmetry
    /// `max|a_jk - conj(a_kj)| / max|a_jk|` is at most [`ASYMMETRY_TOLERANCE`].
    pub fn from_matrix(raw: DMatrix<Complex64>) -> Result<Self> {
        if raw.nrows() != raw.ncols() {
            return Err(Error::NonSquare {
                rows: raw.nrows(),
                cols: raw.ncols(),
            });
        }
        let scale = max_abs(&raw);
        let p = raw.nrows();
        let mut worst = 0.0_f64;
        for j in 0..p {
            for k in j..p {
                let d = (raw[(j, k)] - raw[(k, j)].conj()).norm();
                worst = worst.max(d);
            }
        }
        let asymmetry = if scale > 0.0 { worst / scale } else { 0.0 };
        if !asymmetry.is_finite() || asymmetry > ASYMMETRY_TOLERANCE {
            return Err(Error::TooAsymmetric { asymmetry });
        }
        Ok(Self::symmetrized(raw))
    }

    /// Row-major convenience constructor.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let p = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::NonSquare {
                rows: p,
                cols: bad.len(),
            });
        }
        let m = DMatrix::from_fn(p, p, |j, k| rows[j][k]);
        Self::from_matrix(m)
    }

    /// Builds from a real symmetric matrix.
    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn identity(p: usize) -> Self {
        Self {
            inner: DMatrix::identity(p, p),
        }
    }

    pub fn scaled_identity(p: usize, c: f64) -> Self {
        Self {
            inner: DMatrix::from_diagonal_element(p, p, Complex64::new(c, 0.0)),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let p = diag.len();
        let mut inner = DMatrix::zeros(p, p);
        for (j, d) in diag.iter().enumerate() {
            inner[(j, j)] = Complex64::new(*d, 0.0);
        }
        Self { inner }
    }

    /// Hermitian part without the tolerance check; for products that are
    /// Hermitian in exact arithmetic.
    pub(crate) fn symmetrized(mut m: DMatrix<Complex64>) -> Self {
        let p = m.nrows();
        for j in 0..p {
            m[(j, j)] = Complex64::new(m[(j, j)].re, 0.0);
            for k in (j + 1)..p {
                let avg = (m[(j, k)] + m[(k, j)].conj()) * 0.5;
                m[(j, k)] = avg;
                m[(k, j)] = avg.conj();
            }
        }
        Self { inner: m }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.inner[(j, k)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.inner
    }

    /// Real diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.inner[(j, j)].re).collect()
    }

    /// Lower Cholesky factor `L` with `L L^H = self`.
    pub fn cholesky_factor(&self) -> Result<DMatrix<Complex64>> {
        self.cholesky().map(|c| c.l())
    }

    fn cholesky(&self) -> Result<Cholesky<Complex64, nalgebra::Dyn>> {
        if self.inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = Cholesky::new(self.inner.clone()).ok_or(Error::NotPositiveDefinite)?;
        // The complex square root never fails, so a non-positive pivot shows
        // up as a non-real or zero diagonal entry of the factor.
        let l = chol.l_dirty();
        let pivots_ok = (0..self.dim()).all(|j| {
            let d = l[(j, j)];
            d.re.is_finite() && d.re > 0.0 && d.im.abs() <= 1e-12 * d.re
        });
        if !pivots_ok {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(chol)
    }

    /// Inverse through the Cholesky factor, re-symmetrized.
    pub fn invert(&self) -> Result<Self> {
        let inv = self.cholesky()?.inverse();
        if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self::symmetrized(inv))
    }

    /// tr{A}.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|j| self.inner[(j, j)].re).sum()
    }

    /// tr{A^2} = sum |a_jk|^2 for Hermitian A.
    pub fn trace_of_square(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Exact trace functionals of a positive definite matrix.
    pub fn trace_powers(&self) -> Result<TraceSet> {
        let inv = self.invert()?;
        let t = TraceSet::oracle(
            self.trace(),
            self.trace_of_square(),
            inv.trace(),
            inv.trace_of_square(),
        );
        if !t.all_positive_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(t)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.inner.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `alpha * self + beta * I`.
    pub fn affine(&self, alpha: f64, beta: f64) -> Self {
        let mut m = self.inner.map(|z| z * alpha);
        for j in 0..self.dim() {
            m[(j, j)] += Complex64::new(beta, 0.0);
        }
        Self::symmetrized(m)
    }

    /// `c * self`.
    pub fn scale(&self, c: f64) -> Self {
        self.affine(c, 0.0)
    }

    /// `D A D` for a real diagonal `D`.
    pub fn congruence_diagonal(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.dim() {
            return Err(Error::DimensionMismatch(d.len(), self.dim()));
        }
        let m = DMatrix::from_fn(self.dim(), self.dim(), |j, k| self.inner[(j, k)] * (d[j] * d[k]));
        Ok(Self::symmetrized(m))
    }

    /// Plain matrix product; the result is generally not Hermitian.
    pub fn product(&self, other: &Self) -> DMatrix<Complex64> {
        &self.inner * &other.inner
    }

    /// Largest elementwise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.inner - &other.inner)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.inner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn accepts_hermitian_input() {
        let m = HermitianMatrix::from_rows(&[vec![c(2., 0.), c(1., 1.)], vec![c(1., -1.), c(3., 0.)]])
            .unwrap();
        assert_eq!(m.get(0, 1), c(1., 1.));
        assert_eq!(m.get(1, 0), c(1., -1.));
        assert_eq!(m.dim(), 2);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let err = HermitianMatrix::from_rows(&[vec![c(1., 0.), c(5., 0.)], vec![c(0., 0.), c(1., 0.)]])
            .unwrap_err();
        assert!(matches!(err, Error::TooAsymmetric { .. }));
    }

    #[test]
    fn rejects_non_square() {
        let err = HermitianMatrix::from_matrix(DMatrix::zeros(2, 3)).unwrap_err();
        assert_eq!(err, Error::NonSquare { rows: 2, cols: 3 });
        let err = HermitianMatrix::from_rows(&[vec![c(1., 0.)], vec![c(1., 0.), c(1., 0.)]]).unwrap_err();
        assert!(matches!(err, Error::NonSquare { .. }));
    }

    #[test]
    fn zeroes_tiny_diagonal_imaginary_part() {
        let m = HermitianMatrix::from_rows(&[vec![c(1., 1e-15), c(0., 0.)], vec![c(0., 0.), c(2., 0.)]])
            .unwrap();
        assert_eq!(m.get(0, 0).im, 0.0);
        assert_eq!(m.get(0, 0).re, 1.0);
    }

    #[test]
    fn inverts_diagonal_and_identity() {
        let d = HermitianMatrix::from_real_diagonal(&[1., 2.]);
        let inv = d.invert().unwrap();
        assert_relative_eq!(inv.get(0, 0).re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(inv.get(1, 1).re, 0.5, epsilon = 1e-15);
        let i4 = HermitianMatrix::identity(4);
        assert!(i4.invert().unwrap().max_abs_diff(&i4) < 1e-15);
    }

    #[test]
    fn inverts_two_by_two_closed_form() {
        let m = HermitianMatrix::from_real(&DMatrix::from_row_slice(2, 2, &[2., 1., 1., 2.])).unwrap();
        let inv = m.invert().unwrap();
        let expected =
            HermitianMatrix::from_real(&DMatrix::from_row_slice(2, 2, &[2. / 3., -1. / 3., -1. / 3., 2. / 3.]))
                .unwrap();
        assert!(inv.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn invert_rejects_singular_and_indefinite() {
        let zero = HermitianMatrix::from_matrix(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(zero.invert().unwrap_err(), Error::NotPositiveDefinite);
        let indef = HermitianMatrix::from_real_diagonal(&[1., -1.]);
        assert_eq!(indef.invert().unwrap_err(), Error::NotPositiveDefinite);
        assert_eq!(indef.trace_powers().unwrap_err(), Error::NotPositiveDefinite);
    }

    #[test]
    fn trace_powers_examples() {
        let t = HermitianMatrix::from_real_diagonal(&[1., 2.]).trace_powers().unwrap();
        assert_relative_eq!(t.tr_s, 3.0);
        assert_relative_eq!(t.tr_s2, 5.0);
        assert_relative_eq!(t.tr_sinv, 1.5);
        assert_relative_eq!(t.tr_sinv2, 1.25);
        assert_eq!(t.provenance, Provenance::Oracle);

        let (cc, p) = (2.5, 4);
        let t = HermitianMatrix::scaled_identity(p, cc).trace_powers().unwrap();
        assert_relative_eq!(t.tr_s, cc * 4.0, max_relative = 1e-14);
        assert_relative_eq!(t.tr_s2, cc * cc * 4.0, max_relative = 1e-14);
        assert_relative_eq!(t.tr_sinv, 4.0 / cc, max_relative = 1e-14);
        assert_relative_eq!(t.tr_sinv2, 4.0 / (cc * cc), max_relative = 1e-14);

        // eigenvalues {1, 3}
        let m = HermitianMatrix::from_real(&DMatrix::from_row_slice(2, 2, &[2., 1., 1., 2.])).unwrap();
        let t = m.trace_powers().unwrap();
        assert_relative_eq!(t.tr_s, 4.0, max_relative = 1e-14);
        assert_relative_eq!(t.tr_s2, 10.0, max_relative = 1e-14);
        assert_relative_eq!(t.tr_sinv, 4.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(t.tr_sinv2, 10.0 / 9.0, max_relative = 1e-14);
    }

    #[test]
    fn eigenvalues_sorted() {
        let m = HermitianMatrix::from_real(&DMatrix::from_row_slice(2, 2, &[2., 1., 1., 2.])).unwrap();
        let ev = m.eigenvalues();
        assert_relative_eq!(ev[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(ev[1], 3.0, epsilon = 1e-12);
    }
}
