//! Kernels shared by the ADMM iterations: the cached regularized
//! least-squares solve and the complex l1 proximal operator.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::C64;

/// Cholesky factor of `mu * A_hat^H A_hat + beta * I` for one sensor's
/// current active set.
#[derive(Debug, Clone)]
pub struct LocalSolveCache {
    active: Vec<usize>,
    chol: Cholesky<C64, Dyn>,
}

fn check_weights(mu: f64, beta: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter("mu must be positive and finite".into()));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter("beta must be positive and finite".into()));
    }
    Ok(())
}

/// Factorizes `mu * A_hat^H A_hat + beta * I`. The cache is tagged with the
/// identity active set `0..A_hat.ncols()`.
pub fn factorize(a_hat: &DMatrix<C64>, mu: f64, beta: f64) -> Result<LocalSolveCache> {
    check_weights(mu, beta)?;
    if a_hat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("reduced operator"));
    }
    let gram = a_hat.ad_mul(a_hat);
    factorize_gram(&gram, (0..a_hat.ncols()).collect(), mu, beta)
}

/// Same system built from a precomputed Gram matrix restricted to `active`.
pub fn factorize_gram(gram: &DMatrix<C64>, active: Vec<usize>, mu: f64, beta: f64) -> Result<LocalSolveCache> {
    check_weights(mu, beta)?;
    let n = gram.nrows();
    if gram.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: gram.ncols() });
    }
    if active.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: active.len() });
    }
    if gram.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("gram matrix"));
    }
    let mut system = gram * C64::new(mu, 0.0);
    for i in 0..n {
        system[(i, i)] += C64::new(beta, 0.0);
    }
    let chol = Cholesky::new(system).ok_or(Error::NotPositiveDefinite)?;
    Ok(LocalSolveCache { active, chol })
}

/// Extracts the rows and columns of `gram` listed in `active` (sorted).
pub fn restrict_gram(gram: &DMatrix<C64>, active: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(active.len(), active.len(), |r, c| gram[(active[r], active[c])])
}

impl LocalSolveCache {
    /// Active indices this factorization was built for.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn is_valid_for(&self, active: &[usize]) -> bool {
        self.active == active
    }

    /// The factored system matrix `L L^H`.
    pub fn system(&self) -> DMatrix<C64> {
        let l = self.chol.l();
        &l * l.adjoint()
    }
}

/// `(mu A_hat^H A_hat + beta I)^{-1} rhs`.
pub fn solve_local(cache: &LocalSolveCache, rhs: &[C64]) -> Result<Vec<C64>> {
    if rhs.len() != cache.len() {
        return Err(Error::DimensionMismatch { expected: cache.len(), actual: rhs.len() });
    }
    let b = DVector::from_column_slice(rhs);
    Ok(cache.chol.solve(&b).data.into())
}

/// Complex soft-thresholding: shrinks each magnitude by `kappa`, keeps phase.
pub fn soft_threshold(v: &[C64], kappa: f64) -> Result<Vec<C64>> {
    if !(kappa >= 0.0) {
        return Err(Error::InvalidParameter("threshold must be nonnegative".into()));
    }
    Ok(v.iter().map(|&z| shrink(z, kappa)).collect())
}

#[inline]
pub(crate) fn shrink(z: C64, kappa: f64) -> C64 {
    let mag = z.norm();
    if mag == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let gain = (1.0 - kappa / mag).max(0.0);
    z * gain
}
