//! Completes a synthetic low-rank tensor with LRATM and with the Tmac
//! baseline and prints the relative errors.
//!
//! Usage: cargo run --release -p lratm --example recovery -- [size] [rank] [sr] [seed] [rho] [max_iter]

use std::time::Instant;

use lratm::solver::synth_lowrank;
use lratm::tensor::{project, relative_error, sample_mask};
use lratm::{solve, LratmConfig};

fn main() -> lratm::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let size: usize = arg(0, "40").parse().expect("size");
    let rank: usize = arg(1, "3").parse().expect("rank");
    let sr: f64 = arg(2, "0.3").parse().expect("sr");
    let seed: u64 = arg(3, "1").parse().expect("seed");
    let rho: f64 = arg(4, "1").parse().expect("rho");
    let max_iter: usize = arg(5, "500").parse().expect("max_iter");

    let shape = [size; 3];
    let truth = synth_lowrank(&shape, &[rank; 3], seed)?;
    let mask = sample_mask(&shape, sr, seed)?;
    let observed = project(&truth, &mask)?;

    for (name, cfg) in [
        ("lratm", LratmConfig::default().with_ranks(vec![rank])),
        ("tmac", LratmConfig::default().with_ranks(vec![rank]).tmac()),
    ] {
        let cfg = LratmConfig { rho: vec![rho], max_iter, ..cfg };
        let start = Instant::now();
        let out = solve(&observed, &mask, &cfg)?;
        println!(
            "{name:6} rel_err {:.3e}  iterations {:4}  converged {}  objective {:.4e} -> {:.4e}  {:.2}s",
            relative_error(&out.tensor, &truth)?,
            out.iterations,
            out.converged,
            out.initial_objective,
            out.objective_history.last().copied().unwrap_or(f64::NAN),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
