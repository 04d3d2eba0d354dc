use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{mode_product, DenseTensor};

/// Per-mode rank guess: `max(1, round(fraction * min(I_n, prod_{j != n} I_j)))`.
pub fn estimate_ranks(t: &DenseTensor, fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rank fraction {fraction} must lie in (0, 1)"
        )));
    }
    let total = t.len();
    Ok(t.shape()
        .iter()
        .map(|&extent| {
            let limit = extent.min(total / extent);
            ((fraction * limit as f64).round() as usize).max(1)
        })
        .collect())
}

/// Random tensor of multilinear rank at most `ranks`: a standard normal core
/// multiplied along every mode by a random orthonormal-column factor.
pub fn synth_lowrank(shape: &[usize], ranks: &[usize], seed: u64) -> Result<DenseTensor> {
    if ranks.len() != shape.len() {
        return Err(Error::InvalidArgument(format!(
            "{} ranks given for a {}-way shape",
            ranks.len(),
            shape.len()
        )));
    }
    if let Some((n, (&r, &i))) = ranks.iter().zip(shape).enumerate().find(|(_, (&r, &i))| r == 0 || r > i) {
        return Err(Error::InvalidArgument(format!(
            "rank {r} for mode {} must lie in 1..={i}",
            n + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = DenseTensor::from_fn(ranks, |_| rng.sample(StandardNormal))?;
    for (mode, (&extent, &r)) in shape.iter().zip(ranks).enumerate() {
        let gaussian = DMatrix::from_fn(extent, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let factor = gaussian.qr().q();
        t = mode_product(&t, &factor, mode)?;
    }
    Ok(t)
}
