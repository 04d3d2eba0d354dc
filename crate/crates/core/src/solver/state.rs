use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{InitScheme, LratmConfig};
use crate::error::{Error, Result};
use crate::linalg::svd;
use crate::tensor::{unfold, DenseTensor};

/// The full iterate of the block scheme. Index `n` of every list is mode `n`.
///
/// `a[n]` is `I_n x r_n`, `x[n]` is `r_n x s_n` with `s_n = prod_{j != n} I_j`.
/// `z`/`gamma_x` mirror `x`; `j`/`gamma_a` mirror `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub y: DenseTensor,
    pub a: Vec<DMatrix<f64>>,
    pub x: Vec<DMatrix<f64>>,
    pub z: Vec<DMatrix<f64>>,
    pub j: Vec<DMatrix<f64>>,
    pub gamma_x: Vec<DMatrix<f64>>,
    pub gamma_a: Vec<DMatrix<f64>>,
    pub iter: usize,
    pub objective_history: Vec<f64>,
    pub y_change_history: Vec<f64>,
}

impl SolverState {
    /// State built from explicit factors: `Z = X`, `J = A`, zero multipliers.
    pub fn from_factors(y: DenseTensor, a: Vec<DMatrix<f64>>, x: Vec<DMatrix<f64>>) -> Result<Self> {
        let state = SolverState {
            z: x.clone(),
            j: a.clone(),
            gamma_x: x.iter().map(|m| DMatrix::zeros(m.nrows(), m.ncols())).collect(),
            gamma_a: a.iter().map(|m| DMatrix::zeros(m.nrows(), m.ncols())).collect(),
            y,
            a,
            x,
            iter: 0,
            objective_history: Vec::new(),
            y_change_history: Vec::new(),
        };
        state.check_dimensions()?;
        Ok(state)
    }

    pub fn ndim(&self) -> usize {
        self.y.ndim()
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let shape = self.y.shape();
        let total = self.y.len();
        let n = shape.len();
        let lists = [&self.a, &self.x, &self.z, &self.j, &self.gamma_x, &self.gamma_a];
        if lists.iter().any(|l| l.len() != n) {
            return Err(Error::Dimension(format!("state needs {n} matrices per block")));
        }
        for mode in 0..n {
            let (rows, cols) = (shape[mode], total / shape[mode]);
            let r = self.a[mode].ncols();
            let expect = |m: &DMatrix<f64>, shape: (usize, usize), what: &str| -> Result<()> {
                if m.shape() != shape {
                    return Err(Error::Dimension(format!(
                        "{what} for mode {} is {}x{}, expected {}x{}",
                        mode + 1,
                        m.nrows(),
                        m.ncols(),
                        shape.0,
                        shape.1
                    )));
                }
                Ok(())
            };
            expect(&self.a[mode], (rows, r), "A")?;
            expect(&self.j[mode], (rows, r), "J")?;
            expect(&self.gamma_a[mode], (rows, r), "multiplier of A")?;
            expect(&self.x[mode], (r, cols), "X")?;
            expect(&self.z[mode], (r, cols), "Z")?;
            expect(&self.gamma_x[mode], (r, cols), "multiplier of X")?;
        }
        Ok(())
    }
}

/// Initial iterate. `observed` must already be zero outside the mask and
/// `config` must be resolved for its shape.
pub fn init_state(observed: &DenseTensor, config: &LratmConfig) -> Result<SolverState> {
    let shape = observed.shape();
    let total = observed.len();
    let mut a = Vec::with_capacity(shape.len());
    let mut x = Vec::with_capacity(shape.len());
    match config.init {
        InitScheme::Spectral => {
            for (mode, &r) in config.ranks.iter().enumerate() {
                let f = svd(&unfold(observed, mode)?.matrix)?;
                let root: Vec<f64> = f.sigma[..r].iter().map(|s| s.sqrt()).collect();
                let mut left = f.u.columns(0, r).into_owned();
                let mut right = f.v.columns(0, r).transpose();
                for (k, &s) in root.iter().enumerate() {
                    left.column_mut(k).scale_mut(s);
                    right.row_mut(k).scale_mut(s);
                }
                a.push(left);
                x.push(right);
            }
        }
        InitScheme::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            for (mode, &r) in config.ranks.iter().enumerate() {
                let scale = 1.0 / (r as f64).sqrt();
                let mut draw = |rows, cols| {
                    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
                };
                a.push(draw(shape[mode], r));
                x.push(draw(r, total / shape[mode]));
            }
        }
    }
    SolverState::from_factors(observed.clone(), a, x)
}
