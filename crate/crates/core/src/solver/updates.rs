//! Closed-form block updates of one sweep.
//!
//! Each function returns the new value of its block and leaves the state
//! untouched; [`super::sweep`] decides the order in which results are
//! written back. Functions that read a block "after" another one (e.g.
//! `update_x` reading the new `Z`) expect the caller to have stored it.

use nalgebra::DMatrix;

use super::config::LratmConfig;
use super::state::SolverState;
use crate::error::{Error, Result};
use crate::linalg::{singular_values, solve_spd, wsvt, WeightVector};
use crate::tensor::{fold, DenseTensor, ModeMatrix, ObservationMask};

/// WSVT step shared by the `Z` and `J` updates: threshold `target` with
/// weights `penalty / rho * grad_phi(sigma_i(previous), gamma)`.
fn thresholded(
    target: DMatrix<f64>,
    previous: &DMatrix<f64>,
    penalty: f64,
    rho: f64,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    if penalty == 0.0 {
        return Ok(target);
    }
    let sigma = singular_values(previous)?;
    let weights = WeightVector::from_gradient(&sigma, gamma, penalty / rho)?;
    wsvt(&target, &weights)
}

/// `Z_n <- WSVT(X_n + Gamma^X_n / rho_n, tau_n / rho_n * grad_phi(sigma(Z_n)))`.
pub fn update_z(state: &SolverState, n: usize, config: &LratmConfig) -> Result<DMatrix<f64>> {
    let rho = config.rho[n];
    let p = &state.x[n] + &state.gamma_x[n] / rho;
    thresholded(p, &state.z[n], config.tau[n], rho, config.gamma_x)
}

/// Solves `(alpha A^T A + 2 rho I) X = alpha A^T Y_(n) + rho (X^k + Z - Gamma^X / rho)`.
///
/// Reads `state.z[n]` as the freshly updated `Z`.
pub fn update_x(
    state: &SolverState,
    n: usize,
    y_unfold: &DMatrix<f64>,
    config: &LratmConfig,
) -> Result<DMatrix<f64>> {
    let (alpha, rho) = (config.alpha[n], config.rho[n]);
    let a = &state.a[n];
    let r = a.ncols();
    let gram = a.tr_mul(a) * alpha + DMatrix::identity(r, r) * (2.0 * rho);
    let rhs = a.tr_mul(y_unfold) * alpha + (&state.x[n] + &state.z[n]) * rho - &state.gamma_x[n];
    ensure_finite(&rhs, "X update")?;
    solve_spd(gram, &rhs)
}

pub fn update_gamma_x(state: &SolverState, n: usize) -> DMatrix<f64> {
    &state.gamma_x[n] + (&state.x[n] - &state.z[n])
}

/// `J_n <- WSVT(A_n + Gamma^A_n / rho_n, lambda_n / rho_n * grad_phi(sigma(J_n)))`.
pub fn update_j(state: &SolverState, n: usize, config: &LratmConfig) -> Result<DMatrix<f64>> {
    let rho = config.rho[n];
    let q = &state.a[n] + &state.gamma_a[n] / rho;
    thresholded(q, &state.j[n], config.lambda[n], rho, config.gamma_a)
}

/// Solves `A (alpha X X^T + 2 rho I) = alpha Y_(n) X^T + rho (J - Gamma^A / rho + A^k)`.
///
/// Reads `state.x[n]` and `state.j[n]` as the freshly updated blocks.
pub fn update_a(
    state: &SolverState,
    n: usize,
    y_unfold: &DMatrix<f64>,
    config: &LratmConfig,
) -> Result<DMatrix<f64>> {
    let (alpha, rho) = (config.alpha[n], config.rho[n]);
    let x = &state.x[n];
    let r = x.nrows();
    let gram = x * x.transpose() * alpha + DMatrix::identity(r, r) * (2.0 * rho);
    let rhs = y_unfold * x.transpose() * alpha + (&state.j[n] + &state.a[n]) * rho - &state.gamma_a[n];
    ensure_finite(&rhs, "A update")?;
    // gram is symmetric, so A gram = rhs  <=>  gram A^T = rhs^T
    Ok(solve_spd(gram, &rhs.transpose())?.transpose())
}

pub fn update_gamma_a(state: &SolverState, n: usize) -> DMatrix<f64> {
    &state.gamma_a[n] + (&state.a[n] - &state.j[n])
}

/// `sum_n alpha_n fold_n(A_n X_n)`, accumulated in mode order.
pub fn factor_average(state: &SolverState, config: &LratmConfig) -> Result<DenseTensor> {
    let shape = state.y.shape();
    let mut acc = vec![0.0; state.y.len()];
    for n in 0..state.ndim() {
        let low_rank = fold(
            &ModeMatrix {
                mode: n,
                matrix: &state.a[n] * &state.x[n],
            },
            shape,
        )?;
        for (dst, v) in acc.iter_mut().zip(low_rank.data()) {
            *dst += config.alpha[n] * v;
        }
    }
    DenseTensor::new(shape.to_vec(), acc)
}

/// Unobserved entries become `(sum_n alpha_n fold_n(A_n X_n) + rho Y^k) / (1 + rho)`
/// with `rho` the mean of the per-mode weights; observed entries are copied
/// from `observed`.
pub fn update_y(
    state: &SolverState,
    observed: &DenseTensor,
    mask: &ObservationMask,
    config: &LratmConfig,
) -> Result<DenseTensor> {
    let rho = config.rho_mean();
    let mut avg = factor_average(state, config)?;
    let prev = state.y.data();
    let fixed = observed.data();
    for (k, v) in avg.data_mut().iter_mut().enumerate() {
        *v = if mask.is_observed(k) {
            fixed[k]
        } else {
            (*v + rho * prev[k]) / (1.0 + rho)
        };
    }
    Ok(avg)
}

fn ensure_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
