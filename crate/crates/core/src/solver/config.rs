use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// Truncated SVD of each unfolding of the zero-filled observations.
    Spectral,
    /// Seeded i.i.d. normal factors scaled by `1/sqrt(r_n)`.
    Random,
}

impl FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(InitScheme::Spectral),
            "random" => Ok(InitScheme::Random),
            other => Err(Error::InvalidConfig(format!(
                "unknown init scheme `{other}` (expected spectral or random)"
            ))),
        }
    }
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitScheme::Spectral => "spectral",
            InitScheme::Random => "random",
        })
    }
}

/// Solver hyperparameters.
///
/// Per-mode lists may hold a single value, which [`LratmConfig::resolve`]
/// broadcasts to every mode. An empty `alpha` means uniform weights `1/N`;
/// an empty `ranks` must be filled in before solving.
#[derive(Debug, Clone, PartialEq)]
pub struct LratmConfig {
    pub ranks: Vec<usize>,
    pub alpha: Vec<f64>,
    pub tau: Vec<f64>,
    pub lambda: Vec<f64>,
    pub gamma_x: f64,
    pub gamma_a: f64,
    pub rho: Vec<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub init: InitScheme,
    pub seed: u64,
    /// Keep both multiplier sets at zero. Together with `tau = lambda = 0`
    /// this is the Tmac baseline.
    pub freeze_multipliers: bool,
}

pub const DEFAULT_TAU: f64 = 0.01;
pub const DEFAULT_LAMBDA: f64 = 0.01;
pub const DEFAULT_GAMMA_X: f64 = 0.1;
pub const DEFAULT_GAMMA_A: f64 = 2.5;
/// The multiplier ascent step is fixed at 1, so with `Z = prox(X + Gamma / rho)`
/// the multipliers scale by roughly `1 - 1/rho` per sweep. `rho = 1` makes that
/// the usual ALM step; below 1/2 the multipliers grow without bound.
pub const DEFAULT_RHO: f64 = 1.0;
pub const RHO_STABLE_MIN: f64 = 0.5;
pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 500;

impl Default for LratmConfig {
    fn default() -> Self {
        LratmConfig {
            ranks: Vec::new(),
            alpha: Vec::new(),
            tau: vec![DEFAULT_TAU],
            lambda: vec![DEFAULT_LAMBDA],
            gamma_x: DEFAULT_GAMMA_X,
            gamma_a: DEFAULT_GAMMA_A,
            rho: vec![DEFAULT_RHO],
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            init: InitScheme::Spectral,
            seed: 0,
            freeze_multipliers: false,
        }
    }
}

fn broadcast<T: Copy>(name: &str, values: &[T], n: usize) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        len if len == n => Ok(values.to_vec()),
        len => Err(Error::InvalidConfig(format!(
            "`{name}` has {len} entries but the tensor has {n} modes"
        ))),
    }
}

impl LratmConfig {
    pub fn with_ranks(mut self, ranks: Vec<usize>) -> Self {
        self.ranks = ranks;
        self
    }

    /// The Tmac configuration: both penalties off and multipliers frozen.
    pub fn tmac(mut self) -> Self {
        self.tau = vec![0.0];
        self.lambda = vec![0.0];
        self.freeze_multipliers = true;
        self
    }

    /// Checks every invariant that does not depend on the tensor shape.
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: &[f64]| -> Result<()> {
            match v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                Some(x) => Err(Error::InvalidConfig(format!("`{name}` entry {x} must be finite and >= 0"))),
                None => Ok(()),
            }
        };
        nonneg("alpha", &self.alpha)?;
        nonneg("tau", &self.tau)?;
        nonneg("lambda", &self.lambda)?;
        if !self.alpha.is_empty() {
            let sum: f64 = self.alpha.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConfig(format!("`alpha` sums to {sum}, expected 1")));
            }
        }
        if let Some(r) = self.rho.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidConfig(format!("`rho` entry {r} must be > 0")));
        }
        if self.rho.is_empty() || self.tau.is_empty() || self.lambda.is_empty() {
            return Err(Error::InvalidConfig("`rho`, `tau` and `lambda` need at least one entry".into()));
        }
        for (name, g) in [("gamma_X", self.gamma_x), ("gamma_A", self.gamma_a)] {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidConfig(format!("`{name}` must be > 0, got {g}")));
            }
        }
        if self.ranks.contains(&0) {
            return Err(Error::InvalidConfig("ranks must be >= 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("`max_iter` must be >= 1".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("`tol` must be > 0, got {}", self.tol)));
        }
        Ok(())
    }

    /// Expands broadcast lists for `shape`, fills uniform `alpha` and clamps
    /// infeasible ranks.
    pub fn resolve(&self, shape: &[usize]) -> Result<LratmConfig> {
        self.validate()?;
        let n = shape.len();
        if self.ranks.is_empty() {
            return Err(Error::InvalidConfig("no ranks given".into()));
        }
        let total: usize = shape.iter().product();
        let mut ranks = broadcast("ranks", &self.ranks, n)?;
        for (mode, r) in ranks.iter_mut().enumerate() {
            let limit = shape[mode].min(total / shape[mode]);
            if *r > limit {
                warn!("rank {} for mode {} exceeds {}; clamping", r, mode + 1, limit);
                *r = limit;
            }
        }
        let alpha = if self.alpha.is_empty() {
            vec![1.0 / n as f64; n]
        } else if self.alpha.len() == n {
            self.alpha.clone()
        } else {
            return Err(Error::InvalidConfig(format!(
                "`alpha` has {} entries but the tensor has {n} modes",
                self.alpha.len()
            )));
        };
        let resolved = LratmConfig {
            ranks,
            alpha,
            tau: broadcast("tau", &self.tau, n)?,
            lambda: broadcast("lambda", &self.lambda, n)?,
            rho: broadcast("rho", &self.rho, n)?,
            ..self.clone()
        };
        resolved.validate()?;
        if !resolved.freeze_multipliers && resolved.rho.iter().any(|&r| r < RHO_STABLE_MIN) {
            warn!("rho below {RHO_STABLE_MIN} with active multipliers usually diverges");
        }
        Ok(resolved)
    }

    /// Scalar proximal weight for the Y block: the mean of the per-mode `rho`.
    pub fn rho_mean(&self) -> f64 {
        self.rho.iter().sum::<f64>() / self.rho.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = LratmConfig::default();
        assert_eq!(c.tau, vec![0.01]);
        assert_eq!(c.lambda, vec![0.01]);
        assert_eq!(c.gamma_x, 0.1);
        assert_eq!(c.gamma_a, 2.5);
        assert_eq!(c.rho, vec![1.0]);
        assert_eq!(c.tol, 1e-5);
        assert_eq!(c.max_iter, 500);
        assert_eq!(c.init, InitScheme::Spectral);
        c.validate().unwrap();
    }

    #[test]
    fn resolve_broadcasts_and_fills_alpha() {
        let c = LratmConfig::default().with_ranks(vec![2]).resolve(&[5, 6, 7]).unwrap();
        assert_eq!(c.ranks, vec![2, 2, 2]);
        assert_eq!(c.tau.len(), 3);
        assert!((c.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn resolve_clamps_ranks() {
        let c = LratmConfig::default().with_ranks(vec![9, 1, 1]).resolve(&[4, 2, 2]).unwrap();
        assert_eq!(c.ranks, vec![4, 1, 1]);
    }

    #[test]
    fn invalid_configs() {
        let mut c = LratmConfig::default().with_ranks(vec![1]);
        c.alpha = vec![0.5, 0.5, 0.5];
        assert!(c.validate().is_err());
        let c = LratmConfig::default();
        assert!(c.resolve(&[3, 3]).is_err());
        let c = LratmConfig::default().with_ranks(vec![1, 1]);
        assert!(c.resolve(&[3, 3, 3]).is_err());
        let mut c = LratmConfig::default().with_ranks(vec![1]);
        c.rho = vec![0.0];
        assert!(c.validate().is_err());
        let mut c = LratmConfig::default().with_ranks(vec![1]);
        c.gamma_a = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn tmac_turns_penalties_off() {
        let c = LratmConfig::default().tmac();
        assert_eq!(c.tau, vec![0.0]);
        assert_eq!(c.lambda, vec![0.0]);
        assert!(c.freeze_multipliers);
    }
}
