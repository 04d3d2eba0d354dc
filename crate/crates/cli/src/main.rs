use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, LevelFilter};

use lratm::io::{self, RunLogRow, SweepRow};
use lratm::solver::{estimate_ranks, solve_with_observer, synth_lowrank};
use lratm::tensor::{relative_error, sample_mask, shape_to_string};
use lratm::{metrics, CompletionResult, DenseTensor, LratmConfig, ObservationMask};

/// Fraction of singular values kept by the rank heuristic when no ranks are configured.
const DEFAULT_RANK_FRACTION: f64 = 0.005;

#[derive(Parser)]
#[command(name = "lratm", version, about = "Low-rank tensor completion experiments")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random tensor of given multilinear rank.
    Synth {
        #[arg(long, value_parser = parse_shape)]
        shape: Shape,
        #[arg(long, value_delimiter = ',')]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a uniformly random observation mask.
    Mask {
        #[arg(long, value_parser = parse_shape)]
        shape: Shape,
        /// Sampling rate in [0, 1].
        #[arg(long)]
        sr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Complete a partially observed tensor.
    Complete {
        #[command(flatten)]
        input: SolveInput,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: PathBuf,
        /// Run a baseline model instead of LRATM. Only `tmac` is known.
        #[arg(long, value_parser = ["tmac"])]
        baseline: Option<String>,
    },
    /// Compare an estimate against a reference and write a quality report.
    Metrics {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print per-mode ranks from the singular value heuristic.
    EstimateRank {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RANK_FRACTION)]
        fraction: f64,
    },
    /// Complete once per `gamma_A` value and summarize.
    Sweep {
        #[command(flatten)]
        input: SolveInput,
        #[arg(long, value_delimiter = ',', required = true)]
        gamma_list: Vec<f64>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Ground truth; without it the metric columns of the summary are NaN.
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveInput {
    #[arg(long)]
    observed: PathBuf,
    /// TNSR mask file, or a text list of 1-based observed indices.
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// `I1xI2x...`
#[derive(Clone)]
struct Shape(Vec<usize>);

fn parse_shape(s: &str) -> Result<Shape, String> {
    s.split('x')
        .map(|d| match d.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("bad extent `{d}` in shape `{s}`")),
            Ok(v) => Ok(v),
        })
        .collect::<Result<_, _>>()
        .map(Shape)
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

struct Problem {
    observed: DenseTensor,
    mask: ObservationMask,
    config: LratmConfig,
}

fn read_mask_for(path: &Path, shape: &[usize]) -> CliResult<ObservationMask> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if bytes.starts_with(&io::MAGIC) {
        Ok(io::decode_mask(&bytes)?)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| format!("{}: neither a TNSR mask nor text", path.display()))?;
        Ok(io::parse_index_list(&text, shape)?)
    }
}

fn load_problem(input: &SolveInput) -> CliResult<Problem> {
    let observed = io::read_tensor(&input.observed)?;
    let mask = read_mask_for(&input.mask, observed.shape())?;
    let mut config = match &input.config {
        Some(path) => io::read_config(path)?,
        None => LratmConfig::default(),
    };
    if config.ranks.is_empty() {
        config.ranks = estimate_ranks(&observed, DEFAULT_RANK_FRACTION)?;
        info!("no ranks configured, estimated {:?}", config.ranks);
    }
    Ok(Problem { observed, mask, config })
}

fn run(problem: &Problem, config: &LratmConfig, log_path: &Path) -> CliResult<CompletionResult> {
    let mut rows = Vec::new();
    let result = solve_with_observer(&problem.observed, &problem.mask, config, |state, elapsed| {
        rows.push(RunLogRow {
            iter: state.iter,
            objective: *state.objective_history.last().unwrap_or(&f64::NAN),
            y_rel_change: *state.y_change_history.last().unwrap_or(&f64::NAN),
            elapsed_seconds: elapsed,
        });
    })?;
    io::write_log(log_path, &rows)?;
    info!(
        "{} iterations, {}",
        result.iterations,
        if result.converged { "converged" } else { "stopped at max_iter" }
    );
    Ok(result)
}

fn stop_code(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn execute(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Synth { shape, ranks, seed, out } => {
            let t = synth_lowrank(&shape.0, &ranks, seed)?;
            io::write_tensor(&out, &t)?;
            info!("wrote {} tensor to {}", shape_to_string(&shape.0), out.display());
        }
        Command::Mask { shape, sr, seed, out } => {
            let mask = sample_mask(&shape.0, sr, seed)?;
            io::write_mask(&out, &mask)?;
            info!("{} of {} entries observed", mask.count(), mask.len());
        }
        Command::Complete { input, out, log, baseline } => {
            let problem = load_problem(&input)?;
            let config = match baseline {
                Some(_) => problem.config.clone().tmac(),
                None => problem.config.clone(),
            };
            let result = run(&problem, &config, &log)?;
            io::write_tensor(&out, &result.tensor)?;
            return Ok(stop_code(result.converged));
        }
        Command::Metrics { reference, est, out } => {
            let reference = io::read_tensor(&reference)?;
            let est = io::read_tensor(&est)?;
            let report = metrics::report(&reference, &est)?;
            io::write_report(&out, &report)?;
            println!(
                "psnr {:.4} ssim {:.4} ergas {:.4} sam {:.4}",
                report.mean_psnr, report.mean_ssim, report.ergas, report.sam_mean_degrees
            );
        }
        Command::EstimateRank { tensor, fraction } => {
            let t = io::read_tensor(&tensor)?;
            let ranks = estimate_ranks(&t, fraction)?;
            println!("{}", ranks.iter().map(usize::to_string).collect::<Vec<_>>().join(","));
        }
        Command::Sweep { input, gamma_list, out_dir, reference } => {
            let problem = load_problem(&input)?;
            let reference = reference.map(io::read_tensor).transpose()?;
            fs::create_dir_all(&out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
            let mut rows = Vec::with_capacity(gamma_list.len());
            let mut all_converged = true;
            for gamma in gamma_list {
                let config = LratmConfig { gamma_a: gamma, ..problem.config.clone() };
                let stem = format!("gamma_{gamma}");
                let result = run(&problem, &config, &out_dir.join(format!("{stem}_log.csv")))?;
                io::write_tensor(out_dir.join(format!("{stem}.tnsr")), &result.tensor)?;
                all_converged &= result.converged;
                let mut row = SweepRow {
                    gamma,
                    mean_psnr: f64::NAN,
                    mean_ssim: f64::NAN,
                    rel_err: f64::NAN,
                    iterations: result.iterations,
                };
                if let Some(reference) = &reference {
                    let report = metrics::report(reference, &result.tensor)?;
                    io::write_report(out_dir.join(format!("{stem}_report.csv")), &report)?;
                    row.mean_psnr = report.mean_psnr;
                    row.mean_ssim = report.mean_ssim;
                    row.rel_err = relative_error(&result.tensor, reference)?;
                }
                info!("gamma_A {gamma}: {} iterations", row.iterations);
                rows.push(row);
            }
            io::write_sweep_summary(out_dir.join("summary.csv"), &rows)?;
            return Ok(stop_code(all_converged));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share exit code 1 with I/O errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
