//! `aqrm`: batch front end for the Rabi-model spacing library.
//!
//! Every numeric option can also be supplied through an environment
//! variable with the `RABI_` prefix. Flags win over the environment, which
//! wins over the built-in defaults.

mod commands;
mod failure;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "aqrm", version, about = "Level spacings of the (asymmetric) quantum Rabi model")]
struct Cli {
    /// Worker threads for parallel sweeps (0 uses every core)
    #[arg(long, global = true, env = "RABI_JOBS", default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Coupling strength g (> 0)
    #[arg(long, env = "RABI_G", allow_negative_numbers = true)]
    pub g: f64,
    /// Level splitting Δ (> 0)
    #[arg(long, env = "RABI_DELTA", allow_negative_numbers = true)]
    pub delta: f64,
    /// Bias ε; the spectrum depends on |ε| only
    #[arg(long, env = "RABI_EPSILON", default_value_t = 0.0, allow_negative_numbers = true)]
    pub epsilon: f64,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SolverArgs {
    /// Number K of certified levels (per parity sector for parity runs)
    #[arg(long, env = "RABI_LEVELS", default_value_t = 1000)]
    pub levels: usize,
    /// Certification tolerance on each level
    #[arg(long, env = "RABI_TOL", default_value_t = 1e-8)]
    pub tol: f64,
    /// Largest Fock truncation tried before giving up
    #[arg(long, env = "RABI_N_MAX", default_value_t = 65536)]
    pub n_max: usize,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output file; standard output when omitted
    #[arg(long, env = "RABI_OUT")]
    pub out: Option<PathBuf>,
}

/// Which part of the spectrum a command works on.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// all levels of the full Hamiltonian
    Full,
    /// the + parity sector (ε = 0 only)
    Plus,
    /// the − parity sector (ε = 0 only)
    Minus,
    /// both sectors merged with parity labels (ε = 0 only)
    Merged,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectorSign {
    Plus,
    Minus,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapTarget {
    Plus,
    Minus,
    /// the full spectrum at the given --epsilon
    Full,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certified lowest levels.
    ///
    /// Output: CSV `index,eigenvalue,parity,converged`.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t = Sector::Full)]
        parity: Sector,
        /// Shift every level by +g²
        #[arg(long)]
        renormalize: bool,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Nearest-neighbour gaps of the certified spectrum.
    ///
    /// Output: CSV `n,gap,type`; type is empty unless --parity merged.
    Spacing {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t = Sector::Full)]
        parity: Sector,
        /// Drop gaps with index below this
        #[arg(long, env = "RABI_NMIN", default_value_t = 1)]
        nmin: usize,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Normalized gap histogram on a uniform partition of [0, alpha-max].
    ///
    /// Output: CSV `bin_left,bin_right,density`.
    Density {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t = Sector::Full)]
        parity: Sector,
        #[arg(long, env = "RABI_NMIN", default_value_t = 1)]
        nmin: usize,
        /// Number of bins
        #[arg(long, env = "RABI_BINS", default_value_t = 100)]
        bins: usize,
        /// Upper end of the partition
        #[arg(long, default_value_t = 1.0)]
        alpha_max: f64,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Normalized cumulative gap count h(α).
    ///
    /// Output: CSV `alpha,h`.
    Cdf {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t = Sector::Full)]
        parity: Sector,
        #[arg(long, env = "RABI_NMIN", default_value_t = 1)]
        nmin: usize,
        /// Comma-separated evaluation points
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Spectra and gap densities over a grid of biases.
    ///
    /// Output: CSV `epsilon,index,eigenvalue` (levels shifted by +g² unless
    /// --raw); --density-out adds CSV `epsilon,bin_left,bin_right,density`.
    SweepEps {
        #[arg(long, env = "RABI_G", allow_negative_numbers = true)]
        g: f64,
        #[arg(long, env = "RABI_DELTA", allow_negative_numbers = true)]
        delta: f64,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, allow_negative_numbers = true)]
        eps_from: f64,
        #[arg(long, allow_negative_numbers = true)]
        eps_to: f64,
        #[arg(long)]
        eps_step: f64,
        /// Report unshifted eigenvalues
        #[arg(long)]
        raw: bool,
        #[arg(long, env = "RABI_NMIN", default_value_t = 1)]
        nmin: usize,
        #[arg(long, env = "RABI_BINS", default_value_t = 100)]
        bins: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha_max: f64,
        /// Also write per-bias gap densities here
        #[arg(long)]
        density_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Largest gap α₀ over a (g, Δ) grid.
    ///
    /// Output: CSV `g,delta,alpha0`. Points that fail to certify every level
    /// keep the value from their certified prefix and are reported on stderr.
    Alpha0Map {
        /// Comma-separated couplings
        #[arg(long, value_delimiter = ',', required = true)]
        g_grid: Vec<f64>,
        /// Comma-separated level splittings
        #[arg(long, value_delimiter = ',', required = true)]
        delta_grid: Vec<f64>,
        #[arg(long, value_enum, default_value_t = MapTarget::Plus)]
        parity: MapTarget,
        /// Bias used with --parity full
        #[arg(long, env = "RABI_EPSILON", default_value_t = 0.0, allow_negative_numbers = true)]
        epsilon: f64,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Parity-type proportions d, r and D_η of the symmetric model.
    ///
    /// Output: CSV `n,d,r,d_eta` (empty fields where undefined).
    Proportions {
        #[arg(long, env = "RABI_G", allow_negative_numbers = true)]
        g: f64,
        #[arg(long, env = "RABI_DELTA", allow_negative_numbers = true)]
        delta: f64,
        #[command(flatten)]
        solver: SolverArgs,
        /// Window half-width η for D_η
        #[arg(long, default_value_t = 0.25)]
        eta: f64,
        /// Comma-separated prefix lengths N; log-spaced when omitted
        #[arg(long, value_delimiter = ',')]
        points: Vec<usize>,
        /// Number of log-spaced prefix lengths
        #[arg(long, default_value_t = 20)]
        n_points: usize,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Zero curves of the constraint polynomial p_ℓ over a coupling range.
    ///
    /// Output: CSV `g,curve_id,renormalized_x`, or `g,curve_id,x` with
    /// --unrenormalized. Window bounds are always in renormalized units.
    ConstraintCurves {
        #[arg(long)]
        ell: usize,
        #[arg(long, env = "RABI_DELTA", allow_negative_numbers = true)]
        delta: f64,
        #[arg(long)]
        g_from: f64,
        #[arg(long)]
        g_to: f64,
        #[arg(long)]
        g_step: f64,
        #[arg(long, allow_negative_numbers = true)]
        x_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        x_max: Option<f64>,
        /// Report the root x itself instead of x + g²
        #[arg(long)]
        unrenormalized: bool,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Peaks, periods and envelope fits of one parity sector's gaps.
    ///
    /// Output: JSON report; --peaks-out writes CSV `n,gap` and
    /// --periods-out writes CSV `index,n,period`.
    Envelope {
        #[arg(long, env = "RABI_G", allow_negative_numbers = true)]
        g: f64,
        #[arg(long, env = "RABI_DELTA", allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, value_enum)]
        parity: SectorSign,
        #[arg(long)]
        n_from: usize,
        #[arg(long)]
        n_to: usize,
        /// Evaluate levels from the crossover index on asymptotically
        #[arg(long)]
        use_asymptotic: bool,
        #[arg(long, default_value_t = 10_000)]
        crossover: usize,
        /// Only gaps at or above this value take part in peak finding
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        #[arg(long, env = "RABI_TOL", default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, env = "RABI_N_MAX", default_value_t = 262_144)]
        n_max: usize,
        #[arg(long)]
        peaks_out: Option<PathBuf>,
        #[arg(long)]
        periods_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Certified levels of one parity sector against the asymptotic formula.
    ///
    /// Output: CSV `n,computed,asymptotic,diff`.
    CompareAsymptotic {
        #[arg(long, env = "RABI_G", allow_negative_numbers = true)]
        g: f64,
        #[arg(long, env = "RABI_DELTA", allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, value_enum)]
        parity: SectorSign,
        #[arg(long, default_value_t = 1)]
        n_from: usize,
        #[arg(long)]
        n_to: usize,
        #[arg(long, env = "RABI_TOL", default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, env = "RABI_N_MAX", default_value_t = 65536)]
        n_max: usize,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Arctan fit of a proportion series.
    ///
    /// Input: CSV with columns `n` and `d` (as written by `proportions`).
    /// Output: JSON fit report.
    FitProportion {
        #[arg(long = "in")]
        input: PathBuf,
        /// Add 95% parameter intervals
        #[arg(long)]
        intervals: bool,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Predicted gap measure, cumulative constants and containment interval.
    ///
    /// Output: JSON.
    Predict {
        #[arg(long, env = "RABI_EPSILON", allow_negative_numbers = true)]
        epsilon: f64,
        #[command(flatten)]
        out: OutArgs,
    },

    /// Machine-readable description of every subcommand's output.
    ///
    /// Output: JSON.
    Schema {
        #[command(flatten)]
        out: OutArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return Failure::usage(e.to_string().trim_end()).report();
        }
    };
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
        {
            return Failure::usage(format!("cannot size worker pool: {e}")).report();
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
