use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qlna_core::response::Grid;
use qlna_core::EvaluationMode;

#[derive(Parser, Debug)]
#[command(name = "qlna", version, about = "Two-oscillator quantum model of a common-source LNA")]
pub struct Cli {
    /// Worker threads for sweeps (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Every derived circuit constant as CSV
    Derive(DeriveArgs),
    /// Oscillator frequencies and impedances
    Modes(CommonArgs),
    /// First-order state mixing and level table
    Perturb(PerturbArgs),
    /// Photon numbers over an (omega_in, g_m) grid
    SweepPhotons(SweepArgs),
    /// Noise figure over an (omega_in, g_m) grid
    SweepNf(SweepArgs),
    /// Run the invariant suite
    Validate(CommonArgs),
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::Derive(_) => "derive",
            Command::Modes(_) => "modes",
            Command::Perturb(_) => "perturb",
            Command::SweepPhotons(_) => "sweep-photons",
            Command::SweepNf(_) => "sweep-nf",
            Command::Validate(_) => "validate",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Parameter file (key = value lines)
    #[arg(long, env = "QLNA_CONFIG")]
    pub config: PathBuf,

    #[arg(long, value_enum, default_value_t = ModeArg::Consistent)]
    pub mode: ModeArg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Literal,
    Consistent,
}

impl From<ModeArg> for EvaluationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Literal => EvaluationMode::Literal,
            ModeArg::Consistent => EvaluationMode::Consistent,
        }
    }
}

#[derive(Args, Debug)]
pub struct DeriveArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Output CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Full,
    SecondMode,
}

#[derive(Args, Debug)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[arg(long, default_value_t = 0)]
    pub j1: usize,

    #[arg(long, default_value_t = 0)]
    pub j2: usize,

    /// Fock levels per mode (default: fock_dim from the config)
    #[arg(long)]
    pub dim: Option<usize>,

    /// Which basis states the correction may populate
    #[arg(long, value_enum, default_value_t = ScopeArg::Full)]
    pub scope: ScopeArg,

    /// Perturbation strength used for the exact levels
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,

    /// Use the Hermitian parts of H0 and Hp
    #[arg(long)]
    pub hermitized: bool,

    /// Amplitude CSV; the level table goes next to it as <stem>.spectrum.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_steps(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n < 2 {
        return Err("steps must be >= 2".into());
    }
    Ok(n)
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Lowest drive frequency (rad/s)
    #[arg(long)]
    pub win_min: Option<f64>,
    /// Highest drive frequency (rad/s)
    #[arg(long)]
    pub win_max: Option<f64>,
    #[arg(long, value_parser = parse_steps)]
    pub win_steps: Option<usize>,

    /// Lowest transconductance (S)
    #[arg(long)]
    pub gm_min: Option<f64>,
    /// Highest transconductance (S)
    #[arg(long)]
    pub gm_max: Option<f64>,
    #[arg(long, value_parser = parse_steps)]
    pub gm_steps: Option<usize>,

    /// Add thermal photons at the configured temperature
    #[arg(long)]
    pub thermal: bool,

    /// Output CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SweepArgs {
    pub fn grid(&self) -> Grid {
        let d = Grid::default();
        Grid {
            win_min: self.win_min.unwrap_or(d.win_min),
            win_max: self.win_max.unwrap_or(d.win_max),
            win_steps: self.win_steps.unwrap_or(d.win_steps),
            gm_min: self.gm_min.unwrap_or(d.gm_min),
            gm_max: self.gm_max.unwrap_or(d.gm_max),
            gm_steps: self.gm_steps.unwrap_or(d.gm_steps),
        }
    }
}
