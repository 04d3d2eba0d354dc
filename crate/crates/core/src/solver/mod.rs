//! Tensor completion by parallel matrix factorization of every mode
//! unfolding, with a gamma-norm penalty on both factors.
//!
//! The model minimizes
//!
//! ```text
//! sum_n  alpha_n/2 ||Y_(n) - A_n X_n||_F^2 + tau_n ||X_n||_gamma + lambda_n ||A_n||_gamma
//! ```
//!
//! subject to `Y` agreeing with the observations on the mask. One sweep
//! cycles through proximal block updates: per mode `Z -> X -> J -> A`
//! (the penalties are split off via `X = Z`, `A = J` and handled by WSVT),
//! then `Y`, then the multipliers.

mod config;
mod state;
mod synth;
pub mod updates;

use std::time::Instant;

pub use config::{InitScheme, LratmConfig};
pub use state::{init_state, SolverState};
pub use synth::{estimate_ranks, synth_lowrank};

use crate::error::Result;
use crate::linalg::gamma_norm;
use crate::tensor::{ensure_same_shape, frobenius_norm, project, unfold, DenseTensor, ObservationMask};
use updates::{update_a, update_gamma_a, update_gamma_x, update_j, update_x, update_y, update_z};

/// Objective value at `state`. `config` must be resolved for the state's shape.
pub fn objective(state: &SolverState, config: &LratmConfig) -> Result<f64> {
    let mut total = 0.0;
    for n in 0..state.ndim() {
        let y = unfold(&state.y, n)?.matrix;
        let residual = y - &state.a[n] * &state.x[n];
        total += 0.5 * config.alpha[n] * residual.norm_squared();
        if config.tau[n] != 0.0 {
            total += config.tau[n] * gamma_norm(&state.x[n], config.gamma_x)?;
        }
        if config.lambda[n] != 0.0 {
            total += config.lambda[n] * gamma_norm(&state.a[n], config.gamma_a)?;
        }
    }
    Ok(total)
}

/// `||new - old||_F / max(||old||_F, 1e-12)`.
pub fn relative_change(new: &DenseTensor, old: &DenseTensor) -> f64 {
    let diff: f64 = new
        .data()
        .iter()
        .zip(old.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    diff.sqrt() / frobenius_norm(old).max(1e-12)
}

/// One full pass of block updates. Appends one entry to each history.
pub fn sweep(
    state: &mut SolverState,
    observed: &DenseTensor,
    mask: &ObservationMask,
    config: &LratmConfig,
) -> Result<()> {
    for n in 0..state.ndim() {
        let y_unfold = unfold(&state.y, n)?.matrix;
        state.z[n] = update_z(state, n, config)?;
        state.x[n] = update_x(state, n, &y_unfold, config)?;
        state.j[n] = update_j(state, n, config)?;
        state.a[n] = update_a(state, n, &y_unfold, config)?;
    }
    let y_new = update_y(state, observed, mask, config)?;
    let change = relative_change(&y_new, &state.y);
    state.y = y_new;
    if !config.freeze_multipliers {
        for n in 0..state.ndim() {
            state.gamma_x[n] = update_gamma_x(state, n);
            state.gamma_a[n] = update_gamma_a(state, n);
        }
    }
    state.iter += 1;
    let obj = objective(state, config)?;
    state.objective_history.push(obj);
    state.y_change_history.push(change);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub tensor: DenseTensor,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the initial iterate, before any sweep.
    pub initial_objective: f64,
    pub objective_history: Vec<f64>,
    pub y_change_history: Vec<f64>,
}

pub fn solve(observed: &DenseTensor, mask: &ObservationMask, config: &LratmConfig) -> Result<CompletionResult> {
    solve_with_observer(observed, mask, config, |_, _| {})
}

/// Like [`solve`], calling `observer` after every sweep with the state and
/// the wall time spent so far.
pub fn solve_with_observer(
    observed: &DenseTensor,
    mask: &ObservationMask,
    config: &LratmConfig,
    mut observer: impl FnMut(&SolverState, f64),
) -> Result<CompletionResult> {
    ensure_same_shape(observed.shape(), mask.shape())?;
    let config = config.resolve(observed.shape())?;
    let observed = project(observed, mask)?;
    let start = Instant::now();
    let mut state = init_state(&observed, &config)?;
    let initial_objective = objective(&state, &config)?;
    let mut converged = false;
    while state.iter < config.max_iter {
        sweep(&mut state, &observed, mask, &config)?;
        observer(&state, start.elapsed().as_secs_f64());
        if state.y_change_history.last().is_some_and(|&c| c < config.tol) {
            converged = true;
            break;
        }
    }
    Ok(CompletionResult {
        tensor: state.y,
        iterations: state.iter,
        converged,
        initial_objective,
        objective_history: state.objective_history,
        y_change_history: state.y_change_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{fold, relative_error, sample_mask, ModeMatrix};
    use nalgebra::DMatrix;

    fn exact_state(t: &DenseTensor, ranks: &[usize]) -> SolverState {
        let cfg = LratmConfig::default().with_ranks(ranks.to_vec()).resolve(t.shape()).unwrap();
        init_state(t, &cfg).unwrap()
    }

    #[test]
    fn objective_zero_at_exact_factors() {
        let t = synth_lowrank(&[6, 5, 4], &[2, 2, 2], 3).unwrap();
        let mut cfg = LratmConfig::default().with_ranks(vec![2]).resolve(t.shape()).unwrap();
        cfg.tau = vec![0.0; 3];
        cfg.lambda = vec![0.0; 3];
        let s = exact_state(&t, &[2, 2, 2]);
        assert!(objective(&s, &cfg).unwrap() < 1e-24);
    }

    #[test]
    fn objective_with_zero_factors() {
        let t = synth_lowrank(&[6, 5, 4], &[2, 2, 2], 4).unwrap();
        let mut cfg = LratmConfig::default().with_ranks(vec![2]).resolve(t.shape()).unwrap();
        cfg.tau = vec![0.0; 3];
        cfg.lambda = vec![0.0; 3];
        let mut s = exact_state(&t, &[2, 2, 2]);
        s.a.iter_mut().for_each(|m| m.fill(0.0));
        s.x.iter_mut().for_each(|m| m.fill(0.0));
        let want = 0.5 * frobenius_norm(&t).powi(2);
        assert!((objective(&s, &cfg).unwrap() - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn spectral_init_exact_at_true_rank() {
        let t = synth_lowrank(&[8, 7, 6], &[3, 2, 2], 9).unwrap();
        let s = exact_state(&t, &[3, 2, 2]);
        for n in 0..3 {
            let r = unfold(&t, n).unwrap().matrix - &s.a[n] * &s.x[n];
            assert!(r.norm() <= 1e-8 * frobenius_norm(&t));
            assert_eq!(s.z[n], s.x[n]);
            assert_eq!(s.j[n], s.a[n]);
            assert_eq!(s.gamma_x[n], DMatrix::zeros(s.x[n].nrows(), s.x[n].ncols()));
        }
    }

    #[test]
    fn random_init_is_seeded() {
        let t = synth_lowrank(&[5, 5, 5], &[2, 2, 2], 1).unwrap();
        let mut cfg = LratmConfig::default().with_ranks(vec![2]).resolve(t.shape()).unwrap();
        cfg.init = InitScheme::Random;
        cfg.seed = 77;
        let a = init_state(&t, &cfg).unwrap();
        let b = init_state(&t, &cfg).unwrap();
        assert_eq!(a, b);
        cfg.seed = 78;
        assert_ne!(a, init_state(&t, &cfg).unwrap());
        for n in 0..3 {
            assert_eq!(a.z[n], a.x[n]);
            assert_eq!(a.j[n], a.a[n]);
        }
    }

    #[test]
    fn sweep_fixed_point_without_penalties() {
        let t = synth_lowrank(&[6, 5, 4], &[2, 2, 2], 5).unwrap();
        let mut cfg = LratmConfig::default().with_ranks(vec![2]).resolve(t.shape()).unwrap();
        cfg.tau = vec![0.0; 3];
        cfg.lambda = vec![0.0; 3];
        let mask = ObservationMask::full(t.shape()).unwrap();
        let mut s = exact_state(&t, &[2, 2, 2]);
        let before = s.clone();
        sweep(&mut s, &t, &mask, &cfg).unwrap();
        assert_eq!(s.iter, 1);
        assert_eq!(s.objective_history.len(), 1);
        assert_eq!(s.y_change_history.len(), 1);
        for n in 0..3 {
            assert!((&s.a[n] - &before.a[n]).abs().max() < 1e-10);
            assert!((&s.x[n] - &before.x[n]).abs().max() < 1e-10);
            assert!((&s.z[n] - &before.z[n]).abs().max() < 1e-10);
            assert!((&s.j[n] - &before.j[n]).abs().max() < 1e-10);
            assert!(s.gamma_x[n].abs().max() < 1e-10);
            assert!(s.gamma_a[n].abs().max() < 1e-10);
        }
        assert!(relative_error(&s.y, &before.y).unwrap() < 1e-10);
    }

    #[test]
    fn sweep_keeps_observations_and_grows_history() {
        let t = synth_lowrank(&[7, 6, 5], &[2, 2, 2], 6).unwrap();
        let mask = sample_mask(t.shape(), 0.4, 2).unwrap();
        let f = project(&t, &mask).unwrap();
        let cfg = LratmConfig::default().with_ranks(vec![2]).resolve(t.shape()).unwrap();
        let mut s = init_state(&f, &cfg).unwrap();
        for k in 1..=3 {
            sweep(&mut s, &f, &mask, &cfg).unwrap();
            assert_eq!(project(&s.y, &mask).unwrap(), f);
            assert_eq!(s.objective_history.len(), k);
            assert_eq!(s.y_change_history.len(), k);
        }
    }

    #[test]
    fn full_observation_converges_immediately() {
        let t = synth_lowrank(&[6, 6, 6], &[2, 2, 2], 8).unwrap();
        let mask = ObservationMask::full(t.shape()).unwrap();
        let cfg = LratmConfig::default().with_ranks(vec![2]);
        let out = solve(&t, &mask, &cfg).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 2);
        assert_eq!(out.tensor, t);
        assert_eq!(out.objective_history.len(), out.iterations);
    }

    #[test]
    fn empty_mask_returns_zero_tensor() {
        let shape = [5, 4, 3];
        let t = synth_lowrank(&shape, &[1, 1, 1], 8).unwrap();
        let mask = ObservationMask::empty(&shape).unwrap();
        let cfg = LratmConfig::default().with_ranks(vec![1]);
        let out = solve(&t, &mask, &cfg).unwrap();
        assert_eq!(out.tensor, DenseTensor::zeros(&shape).unwrap());
    }

    #[test]
    fn solve_is_deterministic() {
        let t = synth_lowrank(&[8, 8, 8], &[2, 2, 2], 2).unwrap();
        let mask = sample_mask(t.shape(), 0.3, 5).unwrap();
        let mut cfg = LratmConfig::default().with_ranks(vec![2]);
        cfg.max_iter = 15;
        let a = solve(&t, &mask, &cfg).unwrap();
        let b = solve(&t, &mask, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn factor_average_matches_fold() {
        let t = synth_lowrank(&[4, 3, 5], &[2, 2, 2], 2).unwrap();
        let cfg = LratmConfig::default().with_ranks(vec![2]).resolve(t.shape()).unwrap();
        let s = init_state(&t, &cfg).unwrap();
        let avg = updates::factor_average(&s, &cfg).unwrap();
        let mut want = DenseTensor::zeros(t.shape()).unwrap();
        for n in 0..3 {
            let f = fold(&ModeMatrix { mode: n, matrix: &s.a[n] * &s.x[n] }, t.shape()).unwrap();
            want = want.zip_with(&f, |a, b| a + b / 3.0).unwrap();
        }
        assert!(relative_error(&avg, &want).unwrap() < 1e-14);
    }
}
