use proptest::prelude::*;
use slowlight_core::wavepacket::*;
use slowlight_core::*;

/// Strength scale that puts the 395 K delay at 13.5 ns for the default model.
fn calibrated() -> (DelayModel, f64) {
    let model = DelayModel::default();
    let obs = [
        DelayObservation { temperature: 296.0, delay: 0.0 },
        DelayObservation { temperature: 395.0, delay: 13.5e-9 },
    ];
    let s = calibrate_scale(&obs, &model).unwrap().scale;
    (model, s)
}

fn photon(dt: f64) -> TemporalEnvelope {
    TemporalEnvelope::photon(8e-9, 2e-9, 20e-9, dt, 200e-9).unwrap().normalized().unwrap()
}

fn max(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

/// Linear interpolation of `env` at time `t` (zero outside).
fn sample_at(env: &TemporalEnvelope, t: f64) -> f64 {
    let x = (t - env.t_start) / env.dt;
    if x < 0.0 || x >= (env.len() - 1) as f64 {
        return 0.0;
    }
    let i = x.floor() as usize;
    let f = x - i as f64;
    env.samples[i] * (1.0 - f) + env.samples[i + 1] * f
}

#[test]
fn empty_cell_is_identity() {
    let (model, _) = calibrated();
    let env = photon(128e-12);
    let out = propagate(&env, &MediumState::vacuum(0.075), &model.doublet, 0.0).unwrap().envelope;
    let peak = max(&env.samples);
    for (i, v) in out.samples.iter().enumerate() {
        let want = env.samples.get(i).copied().unwrap_or(0.0);
        assert!((v - want).abs() <= 1e-10 * peak, "sample {i}: {v} vs {want}");
    }
}

#[test]
fn centroid_shift_matches_group_delay() {
    let (model, s) = calibrated();
    let m = model.medium(395.0, s).unwrap();
    let env = photon(128e-12);
    let p = propagate(&env, &m, &model.doublet, 0.0).unwrap();
    assert!(p.warnings.is_empty(), "{:?}", p.warnings);
    // bandwidth ≈ 2π·20 MHz
    assert!((p.bandwidth / (2.0 * std::f64::consts::PI) - 20e6).abs() < 2e6);
    let gd = group_delay(&m, &model.doublet, 0.0).unwrap();
    let c = extract_delay(&env, &p.envelope, DelayOptions::method(DelayMethod::Centroid)).unwrap();
    assert!((c / gd - 1.0).abs() < 0.02, "centroid {c:e} vs {gd:e}");
    let x = extract_delay(&env, &p.envelope, DelayOptions::default()).unwrap();
    assert!((x - gd).abs() <= (0.02 * gd).max(env.dt / 2.0), "xcorr {x:e} vs {gd:e}");
}

#[test]
fn hot_and_cold_shapes_overlap_once_delay_is_removed() {
    let (model, s) = calibrated();
    let env = photon(128e-12);
    let cold = propagate(&env, &model.medium(296.0, s).unwrap(), &model.doublet, 0.0).unwrap().envelope;
    let hot = propagate(&env, &model.medium(395.0, s).unwrap(), &model.doublet, 0.0).unwrap().envelope;
    let shift = extract_delay(&cold, &hot, DelayOptions::default()).unwrap();
    let peak = max(&cold.samples);
    for (i, v) in cold.samples.iter().enumerate().take(env.len()) {
        let h = sample_at(&hot, cold.time(i) + shift);
        assert!((h - v).abs() < 0.03 * peak, "sample {i}: {h} vs {v}");
    }
}

#[test]
fn narrowband_photon_is_not_broadened() {
    let (model, s) = calibrated();
    let env = photon(128e-12);
    let out = propagate(&env, &model.medium(395.0, s).unwrap(), &model.doublet, 0.0).unwrap();
    let r = broadening_ratio(&env, &out.envelope).unwrap();
    assert!((r - 1.0).abs() <= 0.01, "ratio {r}");
}

#[test]
fn broadband_pulse_is_broadened() {
    let (model, s) = calibrated();
    let d = model.doublet;
    // Gaussian with spectral FWHM ω_s/5: Δt·Δω = 4 ln 2
    let fwhm = 4.0 * std::f64::consts::LN_2 / (d.omega_s() / 5.0);
    let env = TemporalEnvelope::gaussian(fwhm, 10e-9, 16e-12, 60e-9).unwrap().normalized().unwrap();
    let out = propagate(&env, &model.medium(395.0, s).unwrap(), &d, 0.0).unwrap();
    assert!(out
        .warnings
        .iter()
        .any(|w| matches!(w, PropagationWarning::NotNarrowband { .. })));
    let r = broadening_ratio(&env, &out.envelope).unwrap();
    assert!(r > 1.01, "ratio {r}");
}

#[test]
fn energy_follows_carrier_absorption() {
    let (model, s) = calibrated();
    let m = model.medium(395.0, s).unwrap();
    // spectral width well below γ
    let env = TemporalEnvelope::gaussian(150e-9, 400e-9, 1e-9, 1000e-9).unwrap();
    let out = propagate(&env, &m, &model.doublet, 0.0).unwrap().envelope;
    let ratio = out.area() / env.area();
    let t = transmission(0.0, &model.doublet, &m);
    assert!((ratio / t - 1.0).abs() < 0.01, "{ratio} vs {t}");
    assert!(t < 0.9);
}

#[test]
fn raw_propagation_is_linear() {
    let (model, s) = calibrated();
    let m = model.medium(380.0, s).unwrap();
    let env = TemporalEnvelope::photon(8e-9, 2e-9, 20e-9, 256e-12, 150e-9).unwrap();
    let a = propagate(&env, &m, &model.doublet, 0.0).unwrap().envelope;
    let b = propagate(&env.scaled(3.0), &m, &model.doublet, 0.0).unwrap().envelope;
    let peak = max(&a.samples);
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((3.0 * x - y).abs() < 1e-12 * peak);
    }
}

#[test]
fn two_half_cells_equal_one_cell() {
    let (model, s) = calibrated();
    let full = model.medium(395.0, s).unwrap();
    let half = MediumState {
        length: full.length / 2.0,
        ..full
    };
    let env = photon(128e-12);
    let once = propagate(&env, &full, &model.doublet, 0.0).unwrap().envelope;
    let first = propagate(&env, &half, &model.doublet, 0.0).unwrap().envelope;
    let twice = propagate(&first, &half, &model.doublet, 0.0).unwrap().envelope;
    let d1 = extract_delay(&env, &once, DelayOptions::default()).unwrap();
    let d2 = extract_delay(&env, &twice, DelayOptions::default()).unwrap();
    assert!((d2 / d1 - 1.0).abs() < 0.005, "{d1:e} vs {d2:e}");
    let peak = max(&once.samples);
    for (i, v) in once.samples.iter().enumerate() {
        assert!((twice.samples[i] - v).abs() < 0.01 * peak);
    }
}

#[test]
fn short_output_window_is_a_grid_error() {
    let (model, s) = calibrated();
    let env = photon(512e-12);
    let opts = PropagationOptions {
        output_len: Some(env.len().next_power_of_two()),
        ..PropagationOptions::default()
    };
    let err = propagate_with(&env, &model.medium(395.0, s).unwrap(), &model.doublet, 0.0, &opts);
    assert!(matches!(err, Err(Error::Grid(_))));
    let opts = PropagationOptions {
        output_len: Some(1000),
        ..PropagationOptions::default()
    };
    let err = propagate_with(&env, &MediumState::vacuum(0.075), &model.doublet, 0.0, &opts);
    assert!(matches!(err, Err(Error::Grid(_))));
}

#[test]
fn full_model_adds_vacuum_term_only() {
    let (model, s) = calibrated();
    let m = model.medium(395.0, s).unwrap();
    let env = photon(256e-12);
    let opts = PropagationOptions {
        velocity_model: GroupVelocityModel::Full,
        ..PropagationOptions::default()
    };
    let p = propagate_with(&env, &m, &model.doublet, 0.0, &opts).unwrap();
    let gd = group_delay_with(&m, &model.doublet, 0.0, GroupVelocityModel::Full).unwrap();
    assert!((p.predicted_delay - gd).abs() < 1e-12 * gd);
    let c = extract_delay(&env, &p.envelope, DelayOptions::method(DelayMethod::Centroid)).unwrap();
    assert!((c / gd - 1.0).abs() < 0.02);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn propagation_commutes_with_time_shifts(shift in 1usize..60, temperature in 320.0f64..420.0) {
        let (model, s) = calibrated();
        let m = model.medium(temperature, s).unwrap();
        let env = TemporalEnvelope::photon(8e-9, 2e-9, 20e-9, 256e-12, 120e-9).unwrap();
        let mut padded = vec![0.0; shift];
        padded.extend_from_slice(&env.samples);
        let moved = TemporalEnvelope::new(padded, env.dt, env.t_start).unwrap();
        let opts = PropagationOptions { output_len: Some(4096), ..Default::default() };
        let a = propagate_with(&env, &m, &model.doublet, 0.0, &opts).unwrap().envelope;
        let b = propagate_with(&moved, &m, &model.doublet, 0.0, &opts).unwrap().envelope;
        let d = extract_delay(&a, &b, DelayOptions::default()).unwrap();
        prop_assert!((d - shift as f64 * env.dt).abs() < env.dt / 100.0, "{} vs {}", d, shift as f64 * env.dt);
    }
}
