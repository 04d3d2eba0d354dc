//! Low-rank tensor completion by parallel matrix factorization with a double
//! gamma-norm penalty on the factors, plus the pieces needed to run
//! completion experiments: dense tensors and masks, WSVT, quality indices
//! and file formats.

pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use solver::{solve, CompletionResult, InitScheme, LratmConfig, SolverState};
pub use tensor::{DenseTensor, ModeMatrix, ObservationMask};
