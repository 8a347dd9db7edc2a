use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "timoshenko",
    version,
    about = "Damped Timoshenko beam: spectra, simulations and diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Second-order generator of the full system
    L,
    /// Second-order generator without the zero-order shear term in the rotation equation
    L1,
    /// Upwind transport operator with full coupling
    S1c,
    /// Upwind transport operator with diagonal damping only
    S1c0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulationArg {
    SecondOrder,
    SecondOrderL1,
    Riemann,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Beam configuration file (`key=value` lines)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override or add a configuration entry, e.g. `--set EI=4` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Write the result here instead of standard output
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Output format (each command has its own default)
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Initial data: `mode:K` (u = sin(K pi x / l)) or `file:PATH` (CSV with columns x,u,u2,v,v2)
    #[arg(long, default_value = "mode:1")]
    pub init: String,

    #[arg(long, value_enum, default_value = "second-order")]
    pub formulation: FormulationArg,

    /// Final time (falls back to `t_final` in the config)
    #[arg(long)]
    pub t_final: Option<f64>,

    /// Maximal step size (default 0.9 h / max wave speed)
    #[arg(long)]
    pub dt: Option<f64>,

    /// Cell count (falls back to `n` in the config, then 200)
    #[arg(long)]
    pub n: Option<usize>,

    /// Times at which to store full states, comma separated
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Vec<f64>,

    /// Directory for snapshot files `snapshot_NNN.csv` with columns x,u,u2,v,v2
    #[arg(long, value_name = "DIR")]
    pub snapshot_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discrete spectrum of a generator (CSV `re,im,kind`)
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "l")]
        kind: Kind,
        /// Cell count (falls back to `n` in the config, then 100)
        #[arg(long)]
        n: Option<usize>,
    },
    /// Closed-form spectrum of the diagonally damped transport operator (CSV `branch,k,re,im`)
    AnalyticSpectrum {
        #[command(flatten)]
        common: Common,
        /// Largest |k| per branch
        #[arg(long, default_value_t = 10)]
        kmax: usize,
    },
    /// Time integration; CSV `t,E` or a JSON summary
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Energy decay summary `{E0, ET, t_half, monotone}`, optionally swept over modes
    Decay {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        /// Mode indices to sweep (overrides --init), comma separated
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
    },
    /// Round-trip errors of the Riemann transform on random states
    Roundtrip {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cell count (falls back to `n` in the config, then 100)
        #[arg(long)]
        n: Option<usize>,
    },
    /// Unique-continuation rank test on a subinterval
    UcCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
        /// Endpoints `B0 B1` of the subinterval, as coordinates in `[0, l]`
        #[arg(long, num_args = 2, value_names = ["B0", "B1"], required = true)]
        interval: Vec<f64>,
        /// Collocation points
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Residual of the closed-form resolvent against the upwind operator
    ResolventCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        lambda_re: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lambda_im: f64,
        /// Cell counts, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = [200, 400])]
        n: Vec<usize>,
        /// Constant data `p,phi_hat,q,psi`
        #[arg(long, value_delimiter = ',', num_args = 1, default_values_t = [1.0, 0.0, 0.0, 0.0], allow_hyphen_values = true)]
        data: Vec<f64>,
    },
    /// Growth-bound estimate `min_t log‖e^{tA}‖ / t` in the energy norm
    GrowthBound {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "l")]
        kind: Kind,
        /// Cell count (at most 200; falls back to `n` in the config, then 50)
        #[arg(long)]
        n: Option<usize>,
        /// Sample times, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 5.0, 20.0, 100.0])]
        times: Vec<f64>,
    },
    /// Distance of high-frequency discrete eigenvalues to the vertical lines (CSV `n,line,max_distance`)
    Accumulation {
        #[command(flatten)]
        common: Common,
        /// Cell counts, comma separated and increasing
        #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200])]
        n: Vec<usize>,
    },
    /// Discrepancy between transformed second-order and Riemann trajectories under refinement
    Conjugacy {
        #[command(flatten)]
        common: Common,
        /// Cell counts, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = [100, 200, 400])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 5.0)]
        t_final: f64,
        /// Mode index of the initial displacement
        #[arg(long, default_value_t = 1)]
        mode: usize,
    },
}
