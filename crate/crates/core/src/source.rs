//! Monte Carlo model of the trapped-ion single-photon sequence: state
//! preparation, a short extraction pulse, spontaneous decay into either the
//! ground state (blue photon, ends the cycle) or back to the metastable
//! state (red photon, re-pumped while the pulse is still on), followed by
//! detection thinning.
//!
//! Randomness: block `b` of a run with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `b`. Blocks are
//! independent, so the event stream does not depend on how blocks are spread
//! over worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavepacket::ArrivalHistogram;

/// Timings and probabilities of one photon-generation cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSequenceConfig {
    /// State preparation into the metastable level (s).
    pub prep_duration: f64,
    /// Extraction pulse length (s).
    pub extract_duration: f64,
    /// Dead time after the extraction pulse (s).
    pub post_extract_delay: f64,
    /// Doppler cooling at the end of each cycle (s).
    pub cooling_duration: f64,
    /// All-beams-off gap between preparation and extraction (s).
    pub guard_off: f64,
    pub cycles_per_block: u64,
    /// Extended cooling after each block (s).
    pub block_cooling: f64,
    /// Probability that a decay goes to the ground state (blue photon).
    pub branch_to_ground: f64,
    /// Excitation probability per pumping attempt. Not a measured value.
    pub p_excite: f64,
    /// Excited-state lifetime (s). Not a measured value.
    pub emission_lifetime: f64,
    pub collection_eff: f64,
    pub conversion_eff: f64,
    pub cell_transmission: f64,
    pub detector_eff: f64,
}

impl Default for PulseSequenceConfig {
    fn default() -> Self {
        Self {
            prep_duration: 1e-6,
            extract_duration: 20e-9,
            post_extract_delay: 940e-9,
            cooling_duration: 500e-9,
            guard_off: 40e-9,
            cycles_per_block: 10_000,
            block_cooling: 1e-3,
            branch_to_ground: 0.75,
            p_excite: 0.9,
            emission_lifetime: 8e-9,
            collection_eff: 0.35,
            conversion_eff: 0.177,
            cell_transmission: 1.0,
            detector_eff: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceWarning {
    /// The lifetime is long enough that most emissions fall after the window.
    SevereTruncation { lifetime: f64, window: f64 },
}

impl PulseSequenceConfig {
    pub fn validate(&self) -> Result<Vec<SourceWarning>> {
        let durations = [
            ("prep_duration", self.prep_duration),
            ("extract_duration", self.extract_duration),
            ("post_extract_delay", self.post_extract_delay),
            ("cooling_duration", self.cooling_duration),
            ("guard_off", self.guard_off),
            ("block_cooling", self.block_cooling),
            ("emission_lifetime", self.emission_lifetime),
        ];
        for (name, v) in durations {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} = {v} must be a positive duration")));
            }
        }
        let probabilities = [
            ("branch_to_ground", self.branch_to_ground),
            ("p_excite", self.p_excite),
            ("collection_eff", self.collection_eff),
            ("conversion_eff", self.conversion_eff),
            ("cell_transmission", self.cell_transmission),
            ("detector_eff", self.detector_eff),
        ];
        for (name, v) in probabilities {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} must lie in [0, 1]")));
            }
        }
        if self.cycles_per_block == 0 {
            return Err(Error::invalid("cycles_per_block must be at least 1"));
        }
        let mut warnings = Vec::new();
        if self.emission_lifetime >= 10.0 * self.measurement_window() {
            warnings.push(SourceWarning::SevereTruncation {
                lifetime: self.emission_lifetime,
                window: self.measurement_window(),
            });
        }
        Ok(warnings)
    }

    /// Duration of one cycle, without block cooling.
    pub fn cycle_duration(&self) -> f64 {
        self.prep_duration
            + self.guard_off
            + self.extract_duration
            + self.post_extract_delay
            + self.cooling_duration
            + self.guard_off
    }

    /// Time from the extraction TTL to the end of photon collection.
    pub fn measurement_window(&self) -> f64 {
        self.extract_duration + self.post_extract_delay
    }

    /// Offset of the extraction TTL from the start of its cycle.
    pub fn ttl_offset(&self) -> f64 {
        self.prep_duration + self.guard_off
    }

    /// Probability that an emitted blue photon is registered.
    pub fn detection_eff(&self) -> f64 {
        self.collection_eff * self.conversion_eff * self.cell_transmission * self.detector_eff
    }

    /// Absolute time (s) of the extraction TTL of `cycle`.
    pub fn ttl_time(&self, cycle: u64) -> f64 {
        let block = cycle / self.cycles_per_block;
        let within = cycle % self.cycles_per_block;
        let block_len = self.cycles_per_block as f64 * self.cycle_duration() + self.block_cooling;
        block as f64 * block_len + within as f64 * self.cycle_duration() + self.ttl_offset()
    }
}

/// Cycle repetition rate (Hz) with block cooling spread over its cycles.
pub fn repetition_rate(config: &PulseSequenceConfig) -> f64 {
    1.0 / (config.cycle_duration() + config.block_cooling / config.cycles_per_block as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhotonKind {
    #[serde(rename = "blue-493")]
    Blue,
    #[serde(rename = "red-650")]
    Red,
}

impl PhotonKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhotonKind::Blue => "blue-493",
            PhotonKind::Red => "red-650",
        }
    }
}

impl std::str::FromStr for PhotonKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blue-493" => Ok(PhotonKind::Blue),
            "red-650" => Ok(PhotonKind::Red),
            other => Err(Error::invalid(format!("unknown photon kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionEvent {
    pub cycle: u64,
    /// Absolute emission time (s).
    pub time: f64,
    pub kind: PhotonKind,
    pub detected: bool,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub events: Vec<EmissionEvent>,
    pub cycles: u64,
    pub warnings: Vec<SourceWarning>,
}

impl Simulation {
    pub fn detected_blue(&self) -> u64 {
        self.events
            .iter()
            .filter(|e| e.kind == PhotonKind::Blue && e.detected)
            .count() as u64
    }
}

/// Runs `n_blocks` blocks on the current rayon pool.
pub fn simulate(config: &PulseSequenceConfig, n_blocks: u64, seed: u64) -> Result<Simulation> {
    let warnings = check_run(config, n_blocks)?;
    let per_block: Vec<Vec<EmissionEvent>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| simulate_block(config, b, seed))
        .collect();
    Ok(assemble(config, n_blocks, per_block, warnings))
}

/// As [`simulate`], on a dedicated pool of `workers` threads.
pub fn simulate_with_workers(
    config: &PulseSequenceConfig,
    n_blocks: u64,
    seed: u64,
    workers: usize,
) -> Result<Simulation> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| simulate(config, n_blocks, seed))
}

fn check_run(config: &PulseSequenceConfig, n_blocks: u64) -> Result<Vec<SourceWarning>> {
    if n_blocks == 0 {
        return Err(Error::invalid("n_blocks must be at least 1"));
    }
    config.validate()
}

fn assemble(
    config: &PulseSequenceConfig,
    n_blocks: u64,
    per_block: Vec<Vec<EmissionEvent>>,
    warnings: Vec<SourceWarning>,
) -> Simulation {
    Simulation {
        events: per_block.into_iter().flatten().collect(),
        cycles: n_blocks * config.cycles_per_block,
        warnings,
    }
}

/// Events of block `block` of a run seeded with `seed`.
pub fn simulate_block(config: &PulseSequenceConfig, block: u64, seed: u64) -> Vec<EmissionEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let decay = Exp::new(1.0 / config.emission_lifetime).expect("validated lifetime");
    let window = config.measurement_window();
    let eff = config.detection_eff();
    let first = block * config.cycles_per_block;
    let mut events = Vec::new();

    for cycle in first..first + config.cycles_per_block {
        let ttl = config.ttl_time(cycle);
        // pumping attempt at t = 0, then again at every red decay inside the pulse
        let mut t = 0.0;
        loop {
            if rng.gen::<f64>() >= config.p_excite {
                break;
            }
            let emitted = t + decay.sample(&mut rng);
            if rng.gen::<f64>() < config.branch_to_ground {
                if emitted < window {
                    events.push(EmissionEvent {
                        cycle,
                        time: ttl + emitted,
                        kind: PhotonKind::Blue,
                        detected: rng.gen::<f64>() < eff,
                    });
                }
                break;
            }
            if emitted < window {
                events.push(EmissionEvent {
                    cycle,
                    time: ttl + emitted,
                    kind: PhotonKind::Red,
                    detected: false,
                });
            }
            if emitted >= config.extract_duration {
                break;
            }
            t = emitted;
        }
    }
    events
}

/// Histogram of detected blue arrival times relative to each cycle's
/// extraction TTL. A run without detections yields an all-zero histogram.
pub fn bin_events(
    events: &[EmissionEvent],
    config: &PulseSequenceConfig,
    bin_width: f64,
) -> Result<ArrivalHistogram> {
    let mut hist = ArrivalHistogram::new(bin_width, Vec::new(), 0.0)?;
    let bin_fs = hist.bin_width_ps as i64 * 1000;
    let window_fs = (config.measurement_window() * 1e15).round() as i64;
    let n_bins = ((window_fs + bin_fs - 1) / bin_fs).max(1) as usize;
    hist.counts = vec![0; n_bins];
    for e in events.iter().filter(|e| e.kind == PhotonKind::Blue && e.detected) {
        // integer femtoseconds keep bin edges exact
        let rel_fs = ((e.time - config.ttl_time(e.cycle)) * 1e15).round() as i64;
        let k = rel_fs.div_euclid(bin_fs);
        if k < 0 || k as usize >= n_bins {
            return Err(Error::invalid(format!(
                "event of cycle {} at {:e} s lies outside the measurement window",
                e.cycle, e.time
            )));
        }
        hist.counts[k as usize] += 1;
    }
    Ok(hist)
}
