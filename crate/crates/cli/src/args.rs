use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use slowlight_core::wavepacket::DelayMethod;
use slowlight_core::GroupVelocityModel;

#[derive(Parser, Debug)]
#[command(name = "slowlight", version, about = "Slow-light single-photon simulation toolkit")]
pub struct Cli {
    /// Config file (.json or .toml). Without it, slowlight.toml or
    /// slowlight.json in $SLOWLIGHT_CONFIG_DIR is used when present.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Sweep the complex index, group velocity and transmission over detuning.
    Index(IndexArgs),
    /// Photon delay versus cell temperature.
    DelayCurve(DelayCurveArgs),
    /// Fit the strength scale to measured delays.
    Calibrate(CalibrateArgs),
    /// Propagate a photon envelope through the heated cell.
    Propagate(PropagateArgs),
    /// Delay between two envelope or histogram files.
    Delay(DelayArgs),
    /// Monte Carlo of the photon generation sequence.
    Source(SourceArgs),
    /// Conversion efficiency, noise and SNR versus pump power.
    Qfc(QfcArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Index(_) => "index",
            Command::DelayCurve(_) => "delay-curve",
            Command::Calibrate(_) => "calibrate",
            Command::Propagate(_) => "propagate",
            Command::Delay(_) => "delay",
            Command::Source(_) => "source",
            Command::Qfc(_) => "qfc",
            Command::Replay(_) => "replay",
        }
    }

    pub fn out_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            Command::Index(a) => Some(&mut a.out),
            Command::DelayCurve(a) => Some(&mut a.out),
            Command::Calibrate(a) => Some(&mut a.out),
            Command::Propagate(a) => Some(&mut a.out),
            Command::Delay(a) => Some(&mut a.out),
            Command::Source(a) => Some(&mut a.out),
            Command::Qfc(a) => Some(&mut a.out),
            Command::Replay(_) => None,
        }
    }
}

/// How the resonance strength is scaled.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StrengthArgs {
    /// Calibration JSON written by `calibrate`.
    #[arg(long, conflicts_with_all = ["scale", "uncalibrated"])]
    pub calibration: Option<PathBuf>,
    /// Multiplier on the first-principles resonance strength.
    #[arg(long, conflicts_with = "uncalibrated")]
    pub scale: Option<f64>,
    /// Use the first-principles strength (scale 1).
    #[arg(long)]
    pub uncalibrated: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityModelArg {
    DispersiveOnly,
    Full,
}

impl From<VelocityModelArg> for GroupVelocityModel {
    fn from(v: VelocityModelArg) -> Self {
        match v {
            VelocityModelArg::DispersiveOnly => GroupVelocityModel::DispersiveOnly,
            VelocityModelArg::Full => GroupVelocityModel::Full,
        }
    }
}

/// Cell settings that override the config file.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellArgs {
    /// Cell length (m).
    #[arg(long)]
    pub length_m: Option<f64>,
    /// Carrier detuning from peak transmission (Hz).
    #[arg(long, allow_hyphen_values = true)]
    pub detuning_hz: Option<f64>,
    #[arg(long, value_enum)]
    pub velocity_model: Option<VelocityModelArg>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexArgs {
    /// Lower end of the detuning sweep (Hz).
    #[arg(long, allow_hyphen_values = true)]
    pub delta_min_hz: f64,
    /// Upper end of the detuning sweep (Hz).
    #[arg(long, allow_hyphen_values = true)]
    pub delta_max_hz: f64,
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
    /// Cell temperature (K).
    #[arg(long)]
    pub temp: f64,
    #[command(flatten)]
    pub strength: StrengthArgs,
    #[command(flatten)]
    pub cell: CellArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayCurveArgs {
    /// Comma-separated temperatures (K).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["t_min", "t_max"])]
    pub temps: Option<Vec<f64>>,
    /// Start of a temperature grid (K).
    #[arg(long, requires = "t_max")]
    pub t_min: Option<f64>,
    /// End of the grid, inclusive (K).
    #[arg(long, requires = "t_min")]
    pub t_max: Option<f64>,
    /// Grid step (K).
    #[arg(long, default_value_t = 1.0)]
    pub t_step: f64,
    /// `temperature_K,delay_ns` file; residuals are written next to the curve.
    #[arg(long)]
    pub observations: Option<PathBuf>,
    #[command(flatten)]
    pub strength: StrengthArgs,
    #[command(flatten)]
    pub cell: CellArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateArgs {
    /// `temperature_K,delay_ns` file.
    #[arg(long)]
    pub observations: PathBuf,
    #[command(flatten)]
    pub cell: CellArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagateArgs {
    /// Envelope or histogram file.
    #[arg(long, conflicts_with = "source_sim", required_unless_present = "source_sim")]
    pub envelope: Option<PathBuf>,
    /// Use a histogram from a fresh source simulation as input.
    #[arg(long)]
    pub source_sim: bool,
    /// Cell temperature (K).
    #[arg(long)]
    pub temp: f64,
    #[command(flatten)]
    pub strength: StrengthArgs,
    #[command(flatten)]
    pub cell: CellArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayArgs {
    /// Trace measured without delay.
    #[arg(long)]
    pub reference: PathBuf,
    /// Trace measured through the cell.
    #[arg(long)]
    pub delayed: PathBuf,
    /// xcorr, centroid or peak.
    #[arg(long, default_value = "xcorr", value_parser = parse_method)]
    pub method: DelayMethod,
    /// Subtract each trace's median sample before estimating.
    #[arg(long)]
    pub subtract_background: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_method(s: &str) -> Result<DelayMethod, String> {
    s.parse().map_err(|e: slowlight_core::Error| e.to_string())
}

/// Monte Carlo settings that override the config file.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunArgs {
    /// Master seed; block k uses stream k of this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of independent blocks of cycles.
    #[arg(long)]
    pub blocks: Option<u64>,
    /// Worker threads; 0 uses one per core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Histogram bin width (s).
    #[arg(long)]
    pub bin_width_s: Option<f64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Event stream CSV; the histogram goes to `<stem>.hist.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfcArgs {
    /// Parameter JSON replacing the config file's `qfc` section.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// `pump_W,noise_cps` measurements to fit the noise polynomial to.
    #[arg(long)]
    pub noise_points: Option<PathBuf>,
    /// Degree of the fitted noise polynomial.
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    /// Rescale the noise so that the peak SNR equals this value.
    #[arg(long)]
    pub target_snr: Option<f64>,
    /// Photons per second entering the converter.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Put the vapour cell in the beam path.
    #[arg(long)]
    pub cell: bool,
    /// Number of pump powers in the sweep over [0, 2·p_opt].
    #[arg(long, default_value_t = 201)]
    pub sweep: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written next to an earlier output.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded locations.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
