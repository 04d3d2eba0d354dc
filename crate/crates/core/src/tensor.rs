//! Dense N-way tensors, observation masks and the mode-n unfolding algebra.
//!
//! Storage is lexicographic with the first index varying fastest, so the
//! linear offset of `(i_1, ..., i_N)` is `i_1 + I_1 * (i_2 + I_2 * (...))`.
//! Modes are 0-based in the API.
//!
//! The mode-n unfolding is an `I_n x prod_{j != n} I_j` matrix whose column
//! `j` is the mode-n fiber whose remaining indices sit at lexicographic
//! position `j` (earlier indices fastest).

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidShape("a tensor needs at least one mode".into()));
    }
    let mut total: usize = 1;
    for (n, &extent) in shape.iter().enumerate() {
        if extent == 0 {
            return Err(Error::InvalidShape(format!("extent of mode {} is zero", n + 1)));
        }
        total = total
            .checked_mul(extent)
            .ok_or_else(|| Error::InvalidShape("element count overflows".into()))?;
    }
    Ok(total)
}

/// Formats a shape as `I1xI2x...`.
pub fn shape_to_string(shape: &[usize]) -> String {
    shape
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let total = check_shape(&shape)?;
        if data.len() != total {
            return Err(Error::Dimension(format!(
                "shape {} holds {} elements but {} were given",
                shape_to_string(&shape),
                total,
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let total = check_shape(shape)?;
        Ok(DenseTensor {
            shape: shape.to_vec(),
            data: vec![0.0; total],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index (0-based), in
    /// storage order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let total = check_shape(shape)?;
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(total);
        for _ in 0..total {
            data.push(f(&idx));
            for (i, &extent) in idx.iter_mut().zip(shape) {
                *i += 1;
                if *i < extent {
                    break;
                }
                *i = 0;
            }
        }
        Ok(DenseTensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter()
            .zip(&self.shape)
            .rev()
            .fold(0, |acc, (&i, &extent)| acc * extent + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Elementwise combination of two same-shape tensors.
    pub fn zip_with(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<DenseTensor> {
        ensure_same_shape(&self.shape, &other.shape)?;
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Frontal slice `t[:, :, k]` of a 3-way tensor as an `I1 x I2` matrix.
    pub fn frontal_slice(&self, k: usize) -> Result<DMatrix<f64>> {
        if self.ndim() != 3 {
            return Err(Error::Dimension(format!(
                "frontal slices need a 3-way tensor, got {} modes",
                self.ndim()
            )));
        }
        let (rows, cols, depth) = (self.shape[0], self.shape[1], self.shape[2]);
        if k >= depth {
            return Err(Error::Dimension(format!("slice {k} out of range (depth {depth})")));
        }
        let start = k * rows * cols;
        Ok(DMatrix::from_column_slice(
            rows,
            cols,
            &self.data[start..start + rows * cols],
        ))
    }
}

pub(crate) fn ensure_same_shape(a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!(
            "shapes {} and {} differ",
            shape_to_string(a),
            shape_to_string(b)
        )));
    }
    Ok(())
}

/// The observed index set, stored densely in the tensor's storage order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    shape: Vec<usize>,
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn new(shape: Vec<usize>, observed: Vec<bool>) -> Result<Self> {
        let total = check_shape(&shape)?;
        if observed.len() != total {
            return Err(Error::Dimension(format!(
                "mask shape {} holds {} cells but {} flags were given",
                shape_to_string(&shape),
                total,
                observed.len()
            )));
        }
        Ok(ObservationMask { shape, observed })
    }

    pub fn full(shape: &[usize]) -> Result<Self> {
        let total = check_shape(shape)?;
        Ok(ObservationMask {
            shape: shape.to_vec(),
            observed: vec![true; total],
        })
    }

    pub fn empty(shape: &[usize]) -> Result<Self> {
        let total = check_shape(shape)?;
        Ok(ObservationMask {
            shape: shape.to_vec(),
            observed: vec![false; total],
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn is_observed(&self, offset: usize) -> bool {
        self.observed[offset]
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn sampling_rate(&self) -> f64 {
        self.count() as f64 / self.len() as f64
    }

    pub fn complement(&self) -> ObservationMask {
        ObservationMask {
            shape: self.shape.clone(),
            observed: self.observed.iter().map(|&o| !o).collect(),
        }
    }
}

/// A mode-n unfolding together with the mode it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMatrix {
    pub mode: usize,
    pub matrix: DMatrix<f64>,
}

fn check_mode(shape: &[usize], mode: usize) -> Result<()> {
    if mode >= shape.len() {
        return Err(Error::ModeOutOfRange {
            mode: mode + 1,
            ndim: shape.len(),
        });
    }
    Ok(())
}

/// `(prod of extents before mode, extent, prod of extents after mode)`.
fn mode_split(shape: &[usize], mode: usize) -> (usize, usize, usize) {
    let left = shape[..mode].iter().product();
    let right = shape[mode + 1..].iter().product();
    (left, shape[mode], right)
}

pub fn inner_product(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    ensure_same_shape(&a.shape, &b.shape)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

pub fn frobenius_norm(a: &DenseTensor) -> f64 {
    a.data.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn unfold(a: &DenseTensor, mode: usize) -> Result<ModeMatrix> {
    check_mode(&a.shape, mode)?;
    let (left, extent, right) = mode_split(&a.shape, mode);
    let cols = left * right;
    let mut out = DMatrix::<f64>::zeros(extent, cols);
    let dst = out.as_mut_slice();
    for r in 0..right {
        for i in 0..extent {
            let src = &a.data[left * (i + extent * r)..left * (i + extent * r + 1)];
            for (l, &v) in src.iter().enumerate() {
                dst[i + extent * (l + left * r)] = v;
            }
        }
    }
    Ok(ModeMatrix { mode, matrix: out })
}

pub fn fold(m: &ModeMatrix, shape: &[usize]) -> Result<DenseTensor> {
    check_shape(shape)?;
    check_mode(shape, m.mode)?;
    let (left, extent, right) = mode_split(shape, m.mode);
    if m.matrix.nrows() != extent || m.matrix.ncols() != left * right {
        return Err(Error::Dimension(format!(
            "a {}x{} matrix cannot fold along mode {} into {}",
            m.matrix.nrows(),
            m.matrix.ncols(),
            m.mode + 1,
            shape_to_string(shape)
        )));
    }
    let src = m.matrix.as_slice();
    let mut data = vec![0.0; left * extent * right];
    for r in 0..right {
        for i in 0..extent {
            let dst = &mut data[left * (i + extent * r)..left * (i + extent * r + 1)];
            for (l, v) in dst.iter_mut().enumerate() {
                *v = src[i + extent * (l + left * r)];
            }
        }
    }
    Ok(DenseTensor {
        shape: shape.to_vec(),
        data,
    })
}

/// Mode-n product `a x_n m`: every mode-n fiber is multiplied by `m`.
pub fn mode_product(a: &DenseTensor, m: &DMatrix<f64>, mode: usize) -> Result<DenseTensor> {
    check_mode(&a.shape, mode)?;
    if m.ncols() != a.shape[mode] {
        return Err(Error::Dimension(format!(
            "mode-{} product needs {} columns, matrix has {}",
            mode + 1,
            a.shape[mode],
            m.ncols()
        )));
    }
    let unfolded = unfold(a, mode)?;
    let mut shape = a.shape.clone();
    shape[mode] = m.nrows();
    fold(
        &ModeMatrix {
            mode,
            matrix: m * unfolded.matrix,
        },
        &shape,
    )
}

/// Keeps observed entries and zeros out the rest.
pub fn project(a: &DenseTensor, mask: &ObservationMask) -> Result<DenseTensor> {
    ensure_same_shape(&a.shape, &mask.shape)?;
    Ok(DenseTensor {
        shape: a.shape.clone(),
        data: a
            .data
            .iter()
            .zip(&mask.observed)
            .map(|(&x, &o)| if o { x } else { 0.0 })
            .collect(),
    })
}

/// Keeps unobserved entries and zeros out the observed ones.
pub fn project_complement(a: &DenseTensor, mask: &ObservationMask) -> Result<DenseTensor> {
    ensure_same_shape(&a.shape, &mask.shape)?;
    Ok(DenseTensor {
        shape: a.shape.clone(),
        data: a
            .data
            .iter()
            .zip(&mask.observed)
            .map(|(&x, &o)| if o { 0.0 } else { x })
            .collect(),
    })
}

/// Observes exactly `round(sr * total)` cells drawn uniformly without
/// replacement. Deterministic for a given seed.
pub fn sample_mask(shape: &[usize], sr: f64, seed: u64) -> Result<ObservationMask> {
    if !(0.0..=1.0).contains(&sr) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate {sr} outside [0, 1]"
        )));
    }
    let total = check_shape(shape)?;
    let amount = ((sr * total as f64).round() as usize).min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = vec![false; total];
    for i in index::sample(&mut rng, total, amount) {
        observed[i] = true;
    }
    Ok(ObservationMask {
        shape: shape.to_vec(),
        observed,
    })
}

pub fn relative_error(est: &DenseTensor, reference: &DenseTensor) -> Result<f64> {
    ensure_same_shape(&est.shape, &reference.shape)?;
    let denom = frobenius_norm(reference);
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff: f64 = est
        .data
        .iter()
        .zip(&reference.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(diff.sqrt() / denom)
}
