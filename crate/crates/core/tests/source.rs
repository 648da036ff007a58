use proptest::prelude::*;
use slowlight_core::source::{bin_events, simulate, PhotonKind, PulseSequenceConfig};
use slowlight_core::wavepacket::DEFAULT_BIN_WIDTH;

/// Probability that a cycle yields a blue photon inside the window, from a
/// discrete-time chain at step `h`. A red decay in `[j·h, (j+1)·h)` re-pumps
/// at `(j+1)·h`, so the chain converges from below as `h` shrinks.
fn blue_probability(c: &PulseSequenceConfig, h: f64) -> f64 {
    let pulse = (c.extract_duration / h).round() as usize;
    let window = c.measurement_window();
    let tau = c.emission_lifetime;
    let (pe, ps) = (c.p_excite, c.branch_to_ground);
    let mut attempt = vec![0.0; pulse + 1];
    attempt[0] = 1.0;
    let mut p_blue = 0.0;
    for k in 0..pulse {
        let q = attempt[k];
        let t0 = k as f64 * h;
        p_blue += q * pe * ps * (1.0 - (-(window - t0) / tau).exp());
        for j in k..pulse {
            let lo = (j - k) as f64 * h;
            let p_bin = (-lo / tau).exp() - (-(lo + h) / tau).exp();
            attempt[j + 1] += q * pe * (1.0 - ps) * p_bin;
        }
    }
    p_blue
}

#[test]
fn oracle_converges_from_below() {
    let c = PulseSequenceConfig::default();
    let p1 = blue_probability(&c, 1e-9);
    let p2 = blue_probability(&c, 0.02e-9);
    let p3 = blue_probability(&c, 0.01e-9);
    assert!(p1 < p2 && p2 < p3);
    assert!(p3 - p2 < 1e-4, "{p2} {p3}");
}

#[test]
fn detected_fraction_matches_markov_chain() {
    let c = PulseSequenceConfig::default();
    let sim = simulate(&c, 100, 2024).unwrap();
    assert_eq!(sim.cycles, 1_000_000);
    let p = blue_probability(&c, 0.01e-9) * c.detection_eff();
    let n = sim.cycles as f64;
    let expected = n * p;
    let sigma = (n * p * (1.0 - p)).sqrt();
    let got = sim.detected_blue() as f64;
    assert!((got - expected).abs() < 3.0 * sigma, "got {got}, expected {expected} ± {sigma}");
}

#[test]
fn emitted_blue_fraction_matches_markov_chain() {
    let c = PulseSequenceConfig::default();
    let sim = simulate(&c, 30, 11).unwrap();
    let p = blue_probability(&c, 0.01e-9);
    let n = sim.cycles as f64;
    let blue = sim.events.iter().filter(|e| e.kind == PhotonKind::Blue).count() as f64;
    let sigma = (n * p * (1.0 - p)).sqrt();
    assert!((blue - n * p).abs() < 3.0 * sigma, "{blue} vs {}", n * p);
}

#[test]
fn tail_decays_with_emission_lifetime() {
    let c = PulseSequenceConfig {
        collection_eff: 1.0,
        conversion_eff: 1.0,
        ..Default::default()
    };
    let sim = simulate(&c, 120, 3).unwrap();
    let hist = bin_events(&sim.events, &c, DEFAULT_BIN_WIDTH).unwrap();
    // after the pulse the arrival density is a pure exponential; fit its log
    // over 25..75 ns by weighted least squares
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, &n) in hist.counts.iter().enumerate() {
        let t = hist.bin_center(k);
        if !(25e-9..75e-9).contains(&t) || n == 0 {
            continue;
        }
        let (w, y) = (n as f64, (n as f64).ln());
        sw += w;
        sx += w * t;
        sy += w * y;
        sxx += w * t * t;
        sxy += w * t * y;
    }
    let slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    let rate = -slope;
    assert!((rate * c.emission_lifetime - 1.0).abs() < 0.02, "fitted lifetime {}", 1.0 / rate);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn at_most_one_blue_per_cycle_and_events_in_window(
        pe in 0.0f64..=1.0,
        ps in 0.0f64..=1.0,
        tau in 1e-9f64..50e-9,
        seed in any::<u64>(),
    ) {
        let c = PulseSequenceConfig {
            p_excite: pe,
            branch_to_ground: ps,
            emission_lifetime: tau,
            cycles_per_block: 300,
            ..Default::default()
        };
        let sim = simulate(&c, 2, seed).unwrap();
        let mut blue_per_cycle = vec![0u32; sim.cycles as usize];
        for e in &sim.events {
            let rel = e.time - c.ttl_time(e.cycle);
            prop_assert!(rel >= 0.0 && rel < c.measurement_window());
            if e.kind == PhotonKind::Blue {
                blue_per_cycle[e.cycle as usize] += 1;
            } else {
                prop_assert!(!e.detected);
            }
        }
        prop_assert!(blue_per_cycle.iter().all(|&n| n <= 1));
        let hist = bin_events(&sim.events, &c, DEFAULT_BIN_WIDTH).unwrap();
        prop_assert_eq!(hist.total(), sim.detected_blue());
    }
}
