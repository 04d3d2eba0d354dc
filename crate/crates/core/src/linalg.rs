//! SVD contract, the exponential rank surrogate and weighted singular value
//! thresholding.
//!
//! The surrogate is `phi(x) = 1 - exp(-x / gamma)`; summed over the singular
//! values of a matrix it gives the gamma-norm, a smooth nonconvex stand-in
//! for rank. Its derivative is positive and decreasing, so weights taken at
//! nonincreasing singular values come out nondecreasing, which is exactly
//! the ordering WSVT needs to be a global minimizer.

use nalgebra::{Cholesky, DMatrix, SVD};

use crate::error::{Error, Result};

/// Relative cutoff below which a singular value counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Thin SVD `m = U diag(sigma) V^T` with `sigma` sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        scaled_product(&self.u, &self.sigma, &self.v)
    }
}

/// `U diag(s) V^T` without materializing the diagonal.
fn scaled_product(u: &DMatrix<f64>, s: &[f64], v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut us = u.clone();
    for (mut col, &scale) in us.column_iter_mut().zip(s) {
        col *= scale;
    }
    us * v.transpose()
}

fn ensure_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("svd input"))
    }
}

pub fn svd(m: &DMatrix<f64>) -> Result<SvdFactors> {
    ensure_finite(m)?;
    let t = m.nrows().min(m.ncols());
    if t == 0 {
        return Ok(SvdFactors {
            u: DMatrix::zeros(m.nrows(), 0),
            sigma: Vec::new(),
            v: DMatrix::zeros(m.ncols(), 0),
        });
    }
    let dec = SVD::new(m.clone(), true, true);
    let u = dec.u.ok_or(Error::Solve("svd did not return U"))?;
    let v_t = dec.v_t.ok_or(Error::Solve("svd did not return V"))?;
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let sigma = order.iter().map(|&i| dec.singular_values[i].max(0.0)).collect();
    let u = DMatrix::from_fn(m.nrows(), t, |r, c| u[(r, order[c])]);
    let v = DMatrix::from_fn(m.ncols(), t, |r, c| v_t[(order[c], r)]);
    Ok(SvdFactors { u, sigma, v })
}

/// Singular values only, sorted nonincreasing.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    ensure_finite(m)?;
    if m.nrows().min(m.ncols()) == 0 {
        return Ok(Vec::new());
    }
    let mut s: Vec<f64> = m.singular_values().iter().map(|x| x.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Count of singular values above `RANK_TOLERANCE * sigma_max`.
pub fn numerical_rank(sigma: &[f64]) -> usize {
    let max = sigma.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")))
    }
}

pub fn phi(x: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(-(-x / gamma).exp_m1())
}

pub fn grad_phi(x: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok((-x / gamma).exp() / gamma)
}

/// `sum_t phi(sigma_t(m), gamma)`. Singular values at or below
/// `RANK_TOLERANCE * sigma_max` count as zero.
pub fn gamma_norm(m: &DMatrix<f64>, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let s = singular_values(m)?;
    let floor = RANK_TOLERANCE * s.first().copied().unwrap_or(0.0);
    Ok(s.iter()
        .filter(|&&x| x > floor)
        .map(|&x| -(-x / gamma).exp_m1())
        .sum())
}

/// Per-singular-value shrinkage amounts, nonnegative and nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {w} is not a finite nonnegative value")));
        }
        if let Some(i) = weights.windows(2).position(|p| p[1] < p[0]) {
            return Err(Error::InvalidWeights(format!(
                "weights decrease at position {} ({} > {})",
                i + 1,
                weights[i],
                weights[i + 1]
            )));
        }
        Ok(WeightVector(weights))
    }

    pub fn zeros(len: usize) -> Self {
        WeightVector(vec![0.0; len])
    }

    /// `scale * grad_phi(sigma_i, gamma)` for nonincreasing `sigma`.
    pub fn from_gradient(sigma: &[f64], gamma: f64, scale: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidWeights(format!("scale {scale} is not finite and nonnegative")));
        }
        let weights = sigma
            .iter()
            .map(|&s| scale * (-s / gamma).exp() / gamma)
            .collect();
        let w = WeightVector::new(weights)?;
        debug_assert!(w.0.windows(2).all(|p| p[0] <= p[1]));
        Ok(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Weighted singular value thresholding: `U max(Sigma - diag(w), 0) V^T`.
///
/// For nondecreasing weights this is a global minimizer of
/// `sum_i w_i sigma_i(Z) + 0.5 * ||Z - P||_F^2`.
pub fn wsvt(p: &DMatrix<f64>, weights: &WeightVector) -> Result<DMatrix<f64>> {
    let t = p.nrows().min(p.ncols());
    if weights.len() != t {
        return Err(Error::InvalidWeights(format!(
            "expected {t} weights for a {}x{} matrix, got {}",
            p.nrows(),
            p.ncols(),
            weights.len()
        )));
    }
    let f = svd(p)?;
    let shrunk: Vec<f64> = f
        .sigma
        .iter()
        .zip(weights.as_slice())
        .map(|(&s, &w)| (s - w).max(0.0))
        .collect();
    Ok(scaled_product(&f.u, &shrunk, &f.v))
}

/// `sum_i w_i sigma_i(z) + 0.5 * ||z - p||_F^2`, the objective WSVT minimizes.
pub fn wsvt_objective(z: &DMatrix<f64>, p: &DMatrix<f64>, weights: &WeightVector) -> Result<f64> {
    let s = singular_values(z)?;
    let penalty: f64 = s.iter().zip(weights.as_slice()).map(|(s, w)| s * w).sum();
    Ok(penalty + 0.5 * (z - p).norm_squared())
}

/// Solves `g x = rhs` for symmetric positive definite `g`.
pub fn solve_spd(g: DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(g).ok_or(Error::Solve("system matrix is not positive definite"))?;
    Ok(chol.solve(rhs))
}
