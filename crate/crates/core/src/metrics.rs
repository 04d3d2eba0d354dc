//! Picture quality indices between a reference and a completed 3-way tensor.
//!
//! PSNR and SSIM are computed on every frontal slice `t[:, :, k]` and
//! averaged. ERGAS treats frontal slices as bands with a resolution ratio
//! of 1. SAM is the mean angle between corresponding mode-3 fibers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{ensure_same_shape, DenseTensor};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn ensure_same_dims(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "slices are {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// PSNR in dB; `f64::INFINITY` when the slices are identical.
pub fn psnr_slice(reference: &DMatrix<f64>, est: &DMatrix<f64>, peak: f64) -> Result<f64> {
    ensure_same_dims(reference, est)?;
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!("peak must be positive, got {peak}")));
    }
    let mse = (reference - est).norm_squared() / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Normalized 11x11 Gaussian window with standard deviation 1.5.
pub fn gaussian_window() -> DMatrix<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let w = DMatrix::from_fn(SSIM_WINDOW, SSIM_WINDOW, |i, j| {
        let (di, dj) = (i as f64 - half, j as f64 - half);
        (-(di * di + dj * dj) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
    });
    let total = w.sum();
    w / total
}

/// Mean SSIM over all fully contained 11x11 windows.
pub fn ssim_slice(reference: &DMatrix<f64>, est: &DMatrix<f64>, peak: f64) -> Result<f64> {
    ensure_same_dims(reference, est)?;
    let (rows, cols) = reference.shape();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::Dimension(format!(
            "SSIM needs slices of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {rows}x{cols}"
        )));
    }
    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let w = gaussian_window();
    let mut total = 0.0;
    let mut count = 0usize;
    for c0 in 0..=cols - SSIM_WINDOW {
        for r0 in 0..=rows - SSIM_WINDOW {
            let x = reference.view((r0, c0), (SSIM_WINDOW, SSIM_WINDOW));
            let y = est.view((r0, c0), (SSIM_WINDOW, SSIM_WINDOW));
            let mu_x = w.component_mul(&x).sum();
            let mu_y = w.component_mul(&y).sum();
            let (mut var_x, mut var_y, mut cov) = (0.0, 0.0, 0.0);
            for ((&wk, &xk), &yk) in w.iter().zip(x.iter()).zip(y.iter()) {
                let (dx, dy) = (xk - mu_x, yk - mu_y);
                var_x += wk * dx * dx;
                var_y += wk * dy * dy;
                cov += wk * dx * dy;
            }
            let num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2);
            let den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// ERGAS over frontal slices: `100 sqrt(mean_b MSE_b / mu_b^2)`.
pub fn ergas(reference: &DenseTensor, est: &DenseTensor) -> Result<f64> {
    ensure_same_shape(reference.shape(), est.shape())?;
    let depth = three_way(reference)?;
    let mut acc = 0.0;
    for b in 0..depth {
        let r = reference.frontal_slice(b)?;
        let e = est.frontal_slice(b)?;
        let mean = r.mean();
        if mean == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "reference slice {} has zero mean",
                b + 1
            )));
        }
        let mse = (&r - &e).norm_squared() / r.len() as f64;
        acc += mse / (mean * mean);
    }
    Ok(100.0 * (acc / depth as f64).sqrt())
}

/// Angle between two vectors in radians; 0 when either has zero norm.
fn spectral_angle(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    // 2 atan2(|u - v|, |u + v|) on the unit vectors stays accurate near 0 and pi
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Mean spectral angle between mode-3 fibers, in degrees.
pub fn sam_mean(reference: &DenseTensor, est: &DenseTensor) -> Result<f64> {
    ensure_same_shape(reference.shape(), est.shape())?;
    let depth = three_way(reference)?;
    let plane = reference.shape()[0] * reference.shape()[1];
    let (rd, ed) = (reference.data(), est.data());
    let mut r = vec![0.0; depth];
    let mut e = vec![0.0; depth];
    let mut total = 0.0;
    for p in 0..plane {
        for k in 0..depth {
            r[k] = rd[p + plane * k];
            e[k] = ed[p + plane * k];
        }
        total += spectral_angle(&r, &e);
    }
    Ok((total / plane as f64).to_degrees())
}

fn three_way(t: &DenseTensor) -> Result<usize> {
    if t.ndim() != 3 {
        return Err(Error::Dimension(format!(
            "quality indices need a 3-way tensor, got {} modes",
            t.ndim()
        )));
    }
    Ok(t.shape()[2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub per_slice_psnr: Vec<f64>,
    pub per_slice_ssim: Vec<f64>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub ergas: f64,
    pub sam_mean_degrees: f64,
}

/// Mean of the finite PSNR values; infinite only when every slice is exact.
fn mean_psnr(values: &[f64]) -> f64 {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    }
}

/// All indices for a 3-way pair, with the peak taken as the maximum entry of
/// the reference.
pub fn report(reference: &DenseTensor, est: &DenseTensor) -> Result<QualityReport> {
    ensure_same_shape(reference.shape(), est.shape())?;
    let depth = three_way(reference)?;
    let peak = reference.max_value();
    let mut per_slice_psnr = Vec::with_capacity(depth);
    let mut per_slice_ssim = Vec::with_capacity(depth);
    for k in 0..depth {
        let r = reference.frontal_slice(k)?;
        let e = est.frontal_slice(k)?;
        per_slice_psnr.push(psnr_slice(&r, &e, peak)?);
        per_slice_ssim.push(ssim_slice(&r, &e, peak)?);
    }
    Ok(QualityReport {
        mean_psnr: mean_psnr(&per_slice_psnr),
        mean_ssim: per_slice_ssim.iter().sum::<f64>() / depth as f64,
        ergas: ergas(reference, est)?,
        sam_mean_degrees: sam_mean(reference, est)?,
        per_slice_psnr,
        per_slice_ssim,
    })
}
