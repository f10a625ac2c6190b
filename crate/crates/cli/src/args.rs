use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "sta-forge", version, about = "Design fast expansion, transport and spin-rotation protocols")]
pub struct Cli {
    /// Directory for trajectory CSVs and JSON reports
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// JSON file supplying defaults for any flag
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output samples per trajectory [default: 2001]
    #[arg(long, global = true, value_name = "N")]
    pub points: Option<usize>,
    /// Accepted for scripts; nothing here draws random numbers
    #[arg(long, global = true)]
    pub seedless: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expansion of a harmonic trap
    Expansion(ExpansionArgs),
    /// Transport of a particle in a moving harmonic trap
    Transport(TransportArgs),
    /// Rotation of a dissipative spin-1/2
    Spin(SpinArgs),
    /// Scalar results over a one- or two-parameter grid
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionMethodArg {
    Quintic,
    CubicOpt,
    Bang3,
    Bang2,
    OctEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    /// Closest cubic to the energy-optimal profile
    Fit,
    /// Lowest mean energy
    Energy,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExpansionArgs {
    /// [default: quintic]
    #[arg(long, value_enum)]
    pub method: Option<ExpansionMethodArg>,
    /// γ² = ω₀/ω_f [default: √5]
    #[arg(long)]
    pub gamma_sq: Option<f64>,
    /// ω_f²/ω₀², an alternative to --gamma-sq
    #[arg(long)]
    pub omega_f_sq_ratio: Option<f64>,
    /// Normalized final time ω₀t_f [default: 4]; fixed by the frequencies for bang methods
    #[arg(long)]
    pub sf: Option<f64>,
    /// First bang frequency over ω₀ (bang3) [default: 1]
    #[arg(long)]
    pub w1: Option<f64>,
    /// Second bang frequency over ω₀ (bang3) [default: 1]
    #[arg(long)]
    pub w2: Option<f64>,
    /// What cubic-opt minimizes [default: fit]
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportMethodArg {
    P5,
    P7Opt,
    P19,
    Hyp,
    OctEnergy,
    TimeOptimal,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TransportArgs {
    /// [default: p5]
    #[arg(long, value_enum)]
    pub method: Option<TransportMethodArg>,
    /// Trap angular frequency in rad/s [default: 2π·50]
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Duration in s [default: 0.022]
    #[arg(long)]
    pub tf: Option<f64>,
    /// Distance in m [default: 1]
    #[arg(long)]
    pub d: Option<f64>,
    /// Particle mass in kg [default: 1]
    #[arg(long)]
    pub mass: Option<f64>,
    /// Displacement bound for time-optimal; sets the duration
    #[arg(long)]
    pub delta: Option<f64>,
    /// Hyperbolic parameter a₁; optimized with a₂ when both are absent
    #[arg(long)]
    pub a1: Option<f64>,
    /// Hyperbolic parameter a₂
    #[arg(long)]
    pub a2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinCaseArg {
    /// Rotation to the equator
    Pi2,
    /// Full flip
    Flip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinMethodArg {
    Oct,
    P2,
    P3,
    P9,
    Tanh,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SpinArgs {
    /// [default: pi2]
    #[arg(long, value_enum)]
    pub case: Option<SpinCaseArg>,
    /// Target spin length
    #[arg(long)]
    pub rf: Option<f64>,
    /// [default: oct]
    #[arg(long, value_enum)]
    pub method: Option<SpinMethodArg>,
    /// Final time in units of 1/R [default: the optimal-control time]
    #[arg(long)]
    pub tf: Option<f64>,
    /// Cubic coefficient for p3 [default: 0.1]
    #[arg(long)]
    pub a3: Option<f64>,
    /// Width for tanh; optimized when absent
    #[arg(long)]
    pub a5: Option<f64>,
    /// Angular offset of the optimal trajectory from the poles [default: 1e-3]
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemArg {
    Expansion,
    Transport,
    Spin,
}

impl SystemArg {
    pub fn name(self) -> &'static str {
        match self {
            Self::Expansion => "expansion",
            Self::Transport => "transport",
            Self::Spin => "spin",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub system: Option<SystemArg>,
    /// First grid axis as NAME=FROM:TO:N, NAME being a flag of the system
    #[arg(long, value_name = "NAME=FROM:TO:N")]
    pub x: Option<String>,
    /// Optional second axis
    #[arg(long, value_name = "NAME=FROM:TO:N")]
    pub y: Option<String>,
    /// Comma-separated methods [default: the system default]
    #[arg(long)]
    pub methods: Option<String>,
    /// Reported scalar to tabulate [default: mean_energy, normalized_potential or energy]
    #[arg(long)]
    pub scalar: Option<String>,
    /// Fixed KEY=VALUE flag for every point; repeatable
    #[arg(long, value_name = "KEY=VALUE")]
    pub set: Option<Vec<String>>,
}
