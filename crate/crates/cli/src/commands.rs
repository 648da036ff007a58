use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;
use slowlight_core::io::{self, fmt_f64};
use slowlight_core::qfc::{self, SnrObservation};
use slowlight_core::source::{self, PulseSequenceConfig, Simulation};
use slowlight_core::wavepacket::{
    self, broadening_ratio, extract_delay, DelayMethod, DelayOptions, PropagationOptions, TemporalEnvelope,
};
use slowlight_core::{
    complex_index, group_velocity_with, transmission, CalibrationResult, QfcParams, SimConfig,
};

use crate::args::*;
use crate::{in_file, CliError, Outcome};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    in_file(path, std::fs::read_to_string(path).map_err(Into::into))
}

/// Folds flag overrides and referenced input files into the config and the
/// command, so that the recorded pair reruns without touching those inputs.
pub(crate) fn resolve(mut command: Command, mut config: SimConfig) -> Result<(Command, SimConfig), CliError> {
    match &mut command {
        Command::Index(a) => {
            apply_cell(&mut a.cell, &mut config);
            resolve_strength(&mut a.strength)?;
        }
        Command::DelayCurve(a) => {
            apply_cell(&mut a.cell, &mut config);
            resolve_strength(&mut a.strength)?;
        }
        Command::Calibrate(a) => apply_cell(&mut a.cell, &mut config),
        Command::Propagate(a) => {
            apply_cell(&mut a.cell, &mut config);
            apply_run(&mut a.run, &mut config);
            resolve_strength(&mut a.strength)?;
        }
        Command::Source(a) => apply_run(&mut a.run, &mut config),
        Command::Qfc(a) => resolve_qfc(a, &mut config)?,
        Command::Delay(_) | Command::Replay(_) => {}
    }
    Ok((command, config))
}

fn apply_cell(cell: &mut CellArgs, config: &mut SimConfig) {
    let c = std::mem::take(cell);
    if let Some(v) = c.length_m {
        config.cell.length_m = v;
    }
    if let Some(v) = c.detuning_hz {
        config.cell.detuning_hz = v;
    }
    if let Some(v) = c.velocity_model {
        config.cell.velocity_model = v.into();
    }
}

fn apply_run(run: &mut RunArgs, config: &mut SimConfig) {
    let r = std::mem::take(run);
    if let Some(v) = r.seed {
        config.run.seed = v;
    }
    if let Some(v) = r.blocks {
        config.run.blocks = v;
    }
    if let Some(v) = r.workers {
        config.run.workers = v;
    }
    if let Some(v) = r.bin_width_s {
        config.run.bin_width_s = v;
    }
}

fn resolve_strength(s: &mut StrengthArgs) -> Result<(), CliError> {
    let scale = if let Some(path) = &s.calibration {
        let cal: CalibrationResult = serde_json::from_str(&read_file(path)?).map_err(|e| CliError::File {
            path: path.clone(),
            source: slowlight_core::Error::Format {
                line: e.line(),
                message: e.to_string(),
            },
        })?;
        cal.scale
    } else if let Some(v) = s.scale {
        v
    } else if s.uncalibrated {
        1.0
    } else {
        return Err(usage("pass --calibration FILE, --scale S or --uncalibrated"));
    };
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(usage(format!("strength scale {scale} must be positive")));
    }
    *s = StrengthArgs {
        calibration: None,
        scale: Some(scale),
        uncalibrated: false,
    };
    Ok(())
}

fn resolve_qfc(a: &mut QfcArgs, config: &mut SimConfig) -> Result<(), CliError> {
    if let Some(path) = a.params.take() {
        config.qfc = serde_json::from_str::<QfcParams>(&read_file(&path)?).map_err(|e| CliError::File {
            path: path.clone(),
            source: slowlight_core::Error::Format {
                line: e.line(),
                message: e.to_string(),
            },
        })?;
    }
    if let Some(r) = a.rate.take() {
        config.run.qfc_input_rate_hz = r;
    }
    if std::mem::take(&mut a.cell) {
        config.qfc.cell_inserted = true;
    }
    if let Some(path) = a.noise_points.take() {
        let pts = in_file(&path, io::read_noise_points(read_file(&path)?.as_bytes()))?;
        config.qfc.noise = in_file(&path, qfc::fit_noise(&pts, a.degree))?;
    }
    if let Some(target) = a.target_snr.take() {
        let obs = [SnrObservation {
            signal_factor: 1.0,
            snr: target,
            sigma: 1.0,
        }];
        config.qfc = qfc::calibrate_noise_scale(&config.qfc, config.run.qfc_input_rate_hz, &obs)?.params;
    }
    Ok(())
}

pub(crate) fn dispatch(command: &Command, config: &SimConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Index(a) => index(a, config),
        Command::DelayCurve(a) => delay_curve(a, config),
        Command::Calibrate(a) => calibrate(a, config),
        Command::Propagate(a) => propagate(a, config),
        Command::Delay(a) => delay(a),
        Command::Source(a) => source(a, config),
        Command::Qfc(a) => qfc_sweep(a, config),
        Command::Replay(_) => unreachable!("replay is handled before dispatch"),
    }
}

fn scale_of(s: &StrengthArgs) -> f64 {
    s.scale.expect("strength resolved before dispatch")
}

fn index(a: &IndexArgs, config: &SimConfig) -> Result<Outcome, CliError> {
    if a.points < 2 {
        return Err(usage(format!("--points must be at least 2, got {}", a.points)));
    }
    if !(a.delta_max_hz > a.delta_min_hz) {
        return Err(usage("--delta-max-hz must exceed --delta-min-hz"));
    }
    let model = config.delay_model()?;
    let d = model.doublet;
    let medium = model.medium(a.temp, scale_of(&a.strength))?;
    let lo = slowlight_core::constants::hz_to_rad(a.delta_min_hz);
    let hi = slowlight_core::constants::hz_to_rad(a.delta_max_hz);
    let mut csv = String::from("delta_rad_s,n_real,n_imag,group_velocity_m_s,transmission\n");
    let mut anomalous = 0usize;
    for i in 0..a.points {
        let delta = if i + 1 == a.points {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (a.points - 1) as f64
        };
        let n = complex_index(delta, &d, medium.strength);
        let vg = match group_velocity_with(delta, &d, medium.strength, model.velocity_model) {
            Ok(v) => fmt_f64(v),
            Err(_) => {
                anomalous += 1;
                String::new()
            }
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(delta),
            fmt_f64(n.re),
            fmt_f64(n.im),
            vg,
            fmt_f64(transmission(delta, &d, &medium))
        );
    }
    Ok(Outcome {
        files: vec![(a.out.clone(), csv.into_bytes())],
        summary: json!({
            "rows": a.points,
            "strength_rad_s": medium.strength,
            "number_density_m3": medium.number_density,
            "rows_without_group_velocity": anomalous,
        }),
        seed: None,
    })
}

fn temperatures(a: &DelayCurveArgs) -> Result<Vec<f64>, CliError> {
    if let Some(t) = &a.temps {
        if t.is_empty() {
            return Err(usage("--temps is empty"));
        }
        return Ok(t.clone());
    }
    let (Some(lo), Some(hi)) = (a.t_min, a.t_max) else {
        return Err(usage("pass --temps or --t-min/--t-max"));
    };
    if !(a.t_step > 0.0) || !(hi >= lo) {
        return Err(usage("need --t-step > 0 and --t-max >= --t-min"));
    }
    let steps = ((hi - lo) / a.t_step).round();
    if ((lo + steps * a.t_step) - hi).abs() > 1e-9 * hi.abs().max(1.0) {
        return Err(usage("--t-max - --t-min must be a whole number of --t-step"));
    }
    Ok((0..=steps as usize).map(|i| lo + i as f64 * a.t_step).collect())
}

fn delay_curve(a: &DelayCurveArgs, config: &SimConfig) -> Result<Outcome, CliError> {
    let model = config.delay_model()?;
    let scale = scale_of(&a.strength);
    let temps = temperatures(a)?;
    let mut csv = String::from("temperature_K,delay_ns\n");
    let mut delays = Vec::with_capacity(temps.len());
    for &t in &temps {
        let d = model.delay(t, scale)?;
        let _ = writeln!(csv, "{},{}", fmt_f64(t), fmt_f64(d * 1e9));
        delays.push(d);
    }
    let mut files = vec![(a.out.clone(), csv.into_bytes())];
    let mut residual_summary = serde_json::Value::Null;
    if let Some(path) = &a.observations {
        let obs = in_file(path, io::read_observations(read_file(path)?.as_bytes()))?;
        let mut res = String::from("temperature_K,observed_delay_ns,model_delay_ns,residual_ns\n");
        let mut rms = 0.0;
        for o in &obs {
            let m = model.delay(o.temperature, scale)?;
            let r = o.delay - m;
            rms += r * r;
            let _ = writeln!(
                res,
                "{},{},{},{}",
                fmt_f64(o.temperature),
                fmt_f64(o.delay * 1e9),
                fmt_f64(m * 1e9),
                fmt_f64(r * 1e9)
            );
        }
        residual_summary = json!({ "rms_ns": (rms / obs.len() as f64).sqrt() * 1e9 });
        files.push((a.out.with_extension("residuals.csv"), res.into_bytes()));
    }
    let monotone = delays.windows(2).all(|w| w[1] > w[0]);
    Ok(Outcome {
        files,
        summary: json!({
            "scale": scale,
            "rows": temps.len(),
            "strictly_increasing": monotone,
            "residuals": residual_summary,
        }),
        seed: None,
    })
}

fn calibrate(a: &CalibrateArgs, config: &SimConfig) -> Result<Outcome, CliError> {
    let model = config.delay_model()?;
    let obs = in_file(&a.observations, io::read_observations(read_file(&a.observations)?.as_bytes()))?;
    let cal = slowlight_core::calibrate_scale(&obs, &model)?;
    let mut text = serde_json::to_vec_pretty(&cal).expect("calibration serialises");
    text.push(b'\n');
    Ok(Outcome {
        files: vec![(a.out.clone(), text)],
        summary: json!({ "scale": cal.scale, "observations": obs.len() }),
        seed: None,
    })
}

/// Envelope or histogram file, as an envelope.
pub(crate) fn read_trace(path: &Path) -> Result<TemporalEnvelope, CliError> {
    let text = read_file(path)?;
    let is_histogram = text
        .lines()
        .take_while(|l| l.trim_start().starts_with('#'))
        .any(|l| l.trim_start().trim_start_matches('#').trim() == "kind: histogram");
    if is_histogram {
        let h = in_file(path, io::read_histogram(text.as_bytes()))?;
        Ok(in_file(path, wavepacket::histogram_to_envelope(&h))?)
    } else {
        Ok(in_file(path, io::read_envelope(text.as_bytes()))?)
    }
}

fn run_source(config: &SimConfig) -> Result<Simulation, CliError> {
    let r = &config.run;
    let sim = if r.workers == 0 {
        source::simulate(&config.source, r.blocks, r.seed)?
    } else {
        source::simulate_with_workers(&config.source, r.blocks, r.seed, r.workers)?
    };
    for w in &sim.warnings {
        eprintln!("warning: {w:?}");
    }
    Ok(sim)
}

fn propagate(a: &PropagateArgs, config: &SimConfig) -> Result<Outcome, CliError> {
    let model = config.delay_model()?;
    let (input, seed) = match &a.envelope {
        Some(path) => (read_trace(path)?, None),
        None => {
            let sim = run_source(config)?;
            let h = source::bin_events(&sim.events, &config.source, config.run.bin_width_s)?;
            (wavepacket::histogram_to_envelope(&h)?, Some(config.run.seed))
        }
    };
    let medium = model.medium(a.temp, scale_of(&a.strength))?;
    let opts = PropagationOptions {
        velocity_model: model.velocity_model,
        ..Default::default()
    };
    let out = wavepacket::propagate_with(&input, &medium, &model.doublet, model.detuning, &opts)?;
    for w in &out.warnings {
        eprintln!("warning: {w:?}");
    }
    let mut text = Vec::new();
    io::write_envelope(&mut text, &out.envelope)?;
    let centroid = extract_delay(&input, &out.envelope, DelayOptions::method(DelayMethod::Centroid)).ok();
    let xcorr = extract_delay(&input, &out.envelope, DelayOptions::method(DelayMethod::Xcorr)).ok();
    Ok(Outcome {
        files: vec![(a.out.clone(), text)],
        summary: json!({
            "temperature_K": a.temp,
            "strength_rad_s": medium.strength,
            "predicted_delay_s": out.predicted_delay,
            "centroid_delay_s": centroid,
            "xcorr_delay_s": xcorr,
            "fwhm_ratio": broadening_ratio(&input, &out.envelope).ok(),
            "bandwidth_rad_s": out.bandwidth,
            "transmission": transmission(model.detuning, &model.doublet, &medium),
            "warnings": out.warnings.iter().map(|w| format!("{w:?}")).collect::<Vec<_>>(),
        }),
        seed,
    })
}

fn delay(a: &DelayArgs) -> Result<Outcome, CliError> {
    let reference = read_trace(&a.reference)?;
    let delayed = read_trace(&a.delayed)?;
    let opts = DelayOptions {
        method: a.method,
        subtract_background: a.subtract_background,
    };
    let d = extract_delay(&reference, &delayed, opts)?;
    let method = serde_json::to_value(a.method).expect("method serialises");
    let csv = format!("method,delay_ns\n{},{}\n", method.as_str().unwrap_or("?"), fmt_f64(d * 1e9));
    Ok(Outcome {
        files: vec![(a.out.clone(), csv.into_bytes())],
        summary: json!({ "delay_s": d }),
        seed: None,
    })
}

fn hist_path(out: &Path) -> PathBuf {
    out.with_extension("hist.csv")
}

fn source(a: &SourceArgs, config: &SimConfig) -> Result<Outcome, CliError> {
    let sim = run_source(config)?;
    let c: &PulseSequenceConfig = &config.source;
    let h = source::bin_events(&sim.events, c, config.run.bin_width_s)?;
    let mut events = Vec::new();
    io::write_events(&mut events, &sim.events)?;
    let mut hist = Vec::new();
    io::write_histogram(&mut hist, &h)?;
    let blue = sim.events.iter().filter(|e| e.kind == source::PhotonKind::Blue).count();
    let detected = sim.detected_blue();
    Ok(Outcome {
        files: vec![(a.out.clone(), events), (hist_path(&a.out), hist)],
        summary: json!({
            "cycles": sim.cycles,
            "blue_emitted": blue,
            "red_emitted": sim.events.len() - blue,
            "blue_detected": detected,
            "detected_fraction": detected as f64 / sim.cycles as f64,
            "repetition_rate_hz": source::repetition_rate(c),
            "warnings": sim.warnings.iter().map(|w| format!("{w:?}")).collect::<Vec<_>>(),
        }),
        seed: Some(config.run.seed),
    })
}

fn qfc_sweep(a: &QfcArgs, config: &SimConfig) -> Result<Outcome, CliError> {
    if a.sweep < 2 {
        return Err(usage("--sweep needs at least 2 points"));
    }
    let p = &config.qfc;
    let rate = config.run.qfc_input_rate_hz;
    let best = qfc::optimize_pump(p, rate)?;
    let hi = 2.0 * p.p_opt;
    let mut csv = String::from("pump_W,efficiency,noise_cps,snr\n");
    let mut grid_best = (0.0, f64::NEG_INFINITY);
    for i in 0..a.sweep {
        let pump = hi * i as f64 / (a.sweep - 1) as f64;
        let s = qfc::snr(pump, rate, p)?;
        if s > grid_best.1 {
            grid_best = (pump, s);
        }
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_f64(pump),
            fmt_f64(qfc::conversion_efficiency(pump, p)?),
            fmt_f64(qfc::noise_rate(pump, p)?),
            fmt_f64(s)
        );
    }
    Ok(Outcome {
        files: vec![(a.out.clone(), csv.into_bytes())],
        summary: json!({
            "optimum_pump_W": best.pump,
            "optimum_snr": best.snr,
            "sweep_peak_pump_W": grid_best.0,
            "sweep_peak_snr": grid_best.1,
            "grid_step_W": hi / (a.sweep - 1) as f64,
            "noise": p.noise,
        }),
        seed: None,
    })
}
