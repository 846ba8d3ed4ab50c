use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use onion_core::experiments::RescaleConvention;
use onion_core::systems::SystemKind;

#[derive(Debug, Parser)]
#[command(name = "onion", version, about = "Metric-space geometry of two-electron quantum dots in a magnetic field")]
pub struct Cli {
    /// `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "ONION_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one state and check its conservation integrals.
    Solve(SolveArgs),
    /// Energies E(m, ω₀) and ground-state level crossings.
    Phase(PhaseArgs),
    /// Distances of a ground-state family from its reference member.
    Sweep(SweepArgs),
    /// Angular band extremes per |m| shell.
    Bands(BandsArgs),
    /// Run the invariant suite; prints JSON lines.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SystemOpts {
    /// hooke | isi
    #[arg(long)]
    pub system: Option<SystemKind>,
    /// Cyclotron frequency ω_c.
    #[arg(long)]
    pub omegac: Option<f64>,
    /// Inverse-square strength α (ISI only).
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RangeOpts {
    #[arg(long)]
    pub omega0_min: Option<f64>,
    #[arg(long)]
    pub omega0_max: Option<f64>,
    #[arg(long)]
    pub omega0_step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub system: SystemOpts,
    /// Confinement frequency ω₀.
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Total angular momentum.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "auto_m")]
    pub m: Option<i32>,
    /// Pick the ground-state m (the default when --m is absent).
    #[arg(long)]
    pub auto_m: bool,
    /// Write r, ρ, j_φ and the relative profile to this CSV.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Radial nodes of the observable grid.
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub system: SystemOpts,
    #[command(flatten)]
    pub range: RangeOpts,
    #[arg(long, allow_negative_numbers = true)]
    pub m_min: Option<i32>,
    #[arg(long, allow_negative_numbers = true)]
    pub m_max: Option<i32>,
    /// Energy table (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Crossing table (default: next to --out, or stdout).
    #[arg(long)]
    pub crossings: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyOpts {
    #[command(flatten)]
    pub system: SystemOpts,
    #[command(flatten)]
    pub range: RangeOpts,
    /// Reference ω₀ (inserted into the sweep if absent).
    #[arg(long)]
    pub omega0_ref: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// pair-max | family-max
    #[arg(long)]
    pub rescale: Option<RescaleConvention>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub family: FamilyOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BandsArgs {
    #[command(flatten)]
    pub family: FamilyOpts,
    #[arg(long, allow_negative_numbers = true)]
    pub m_min: Option<i32>,
    #[arg(long, allow_negative_numbers = true)]
    pub m_max: Option<i32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script plotting the band table.
    #[arg(long)]
    pub plot_script: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Skip the Monte-Carlo oracles.
    #[arg(long)]
    pub quick: bool,
    /// Scale every relative profile by √(1 + x) to inject a normalization error.
    #[arg(long)]
    pub inject_norm_error: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Samples per Monte-Carlo estimate.
    #[arg(long)]
    pub mc_samples: Option<usize>,
}
