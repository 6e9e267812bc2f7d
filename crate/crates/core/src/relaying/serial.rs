use num_complex::Complex64;
use rand::Rng;

use super::{count_bit_errors, random_bits, Scenario, TrialOutcome, TrialTrace};
use crate::channel::{complex_gaussian, path_loss, transmit, HopChannel};
use crate::modem::ImBlock;
use crate::relaying::Protocol;

/// Decode-and-forward chain (also the point-to-point link when `L = 1`).
///
/// Every receiver detects the block it hears and re-modulates its own
/// decision, so a wrong relay decision reaches the destination.
pub fn run_serial_df_trial<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> TrialOutcome {
    df_trial(scenario, rng).0
}

pub fn run_serial_df_trial_traced<R: Rng + ?Sized>(
    scenario: &Scenario,
    rng: &mut R,
) -> (TrialOutcome, TrialTrace) {
    df_trial(scenario, rng)
}

/// Amplify-and-forward chain with variable or fixed per-subcarrier gain.
pub fn run_serial_af_trial<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> TrialOutcome {
    af_trial(scenario, rng).0
}

pub fn run_serial_af_trial_traced<R: Rng + ?Sized>(
    scenario: &Scenario,
    rng: &mut R,
) -> (TrialOutcome, TrialTrace) {
    af_trial(scenario, rng)
}

fn sample_hops<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Vec<HopChannel> {
    scenario
        .hop_distances()
        .iter()
        .map(|&d| scenario.sample_hop(rng, d))
        .collect()
}

pub(super) fn df_trial<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> (TrialOutcome, TrialTrace) {
    let cfg = scenario.config();
    let modem = scenario.modem();
    let bits = random_bits(rng, modem.bits_per_block());
    let source = modem.map_bits(&bits, cfg.pt).expect("bit count matches modem");
    let hops = sample_hops(scenario, rng);
    let noise_var = vec![cfg.noise_var; cfg.subcarriers];

    let mut hop_block_errors = Vec::with_capacity(hops.len());
    let mut current: ImBlock = source.clone();
    for hop in &hops {
        let y = transmit(&current.amplitudes, hop, scenario.noise(), rng);
        let det = modem
            .ml_detect(&y, hop.gains(), &noise_var, cfg.pt)
            .expect("validated detector inputs");
        hop_block_errors.push(det.sap_index != current.sap_index || det.labels != current.labels);
        current = modem
            .block(det.sap_index, det.labels, cfg.pt)
            .expect("detector returns legitimate blocks");
    }

    let received = modem.demap(current.sap_index, &current.labels).expect("legitimate block");
    let bit_errors = count_bit_errors(&bits, &received);

    let worst_snr = modem
        .table()
        .pattern(source.sap_index)
        .iter()
        .flat_map(|&n| hops.iter().map(move |h| h.power(n as usize)))
        .map(|p| scenario.link_snr(p))
        .fold(f64::INFINITY, f64::min);

    let outcome = TrialOutcome {
        bits_sent: bits.len() as u32,
        bit_errors,
        block_error: bit_errors > 0,
        outage: worst_snr < cfg.outage_threshold,
        channel_uses: cfg.channel_uses() as u32,
        overlay: None,
    };
    let trace = TrialTrace {
        sap_index: source.sap_index,
        links: hops,
        route: Vec::new(),
        hop_block_errors,
    };
    (outcome, trace)
}

/// Squared gain of the relay that follows hop `hop_index` (0-based).
///
/// The relay cannot tell active from idle subcarriers, so it spreads `Pt`
/// evenly (`Pt/N` each) and normalizes by the power it would see on an
/// active subcarrier. Variable gain uses the instantaneous cascade
/// `(c, v)` (signal gain, accumulated noise); fixed gain uses the mean
/// received power, `(Pt/K)·d^(−α) + σ²` after the first hop and
/// `(Pt/N)·d^(−α) + σ²` after a hop driven by another relay.
fn relay_gain_sq(scenario: &Scenario, hop_index: usize, cascade: Complex64, noise_acc: f64) -> f64 {
    let cfg = scenario.config();
    let per_active = cfg.pt / cfg.active as f64;
    let per_subcarrier = cfg.pt / cfg.subcarriers as f64;
    let received = match cfg.protocol {
        Protocol::AmplifyVariableGain => per_active * cascade.norm_sqr() + noise_acc,
        Protocol::AmplifyFixedGain => {
            let loss = path_loss(scenario.hop_distances()[hop_index], cfg.alpha);
            let tx = if hop_index == 0 { per_active } else { per_subcarrier };
            tx * loss + cfg.noise_var
        }
        Protocol::DecodeForward => unreachable!("AF gain requested for a DF scenario"),
    };
    per_subcarrier / received
}

pub(super) fn af_trial<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> (TrialOutcome, TrialTrace) {
    let cfg = scenario.config();
    let modem = scenario.modem();
    let n = cfg.subcarriers;
    let bits = random_bits(rng, modem.bits_per_block());
    let source = modem.map_bits(&bits, cfg.pt).expect("bit count matches modem");
    let hops = sample_hops(scenario, rng);

    // signal[n] = cascade[n]·x[n] + accumulated noise of variance noise_acc[n]
    let mut signal = source.amplitudes.clone();
    let mut cascade = vec![Complex64::new(1.0, 0.0); n];
    let mut noise_acc = vec![0.0; n];
    for (l, hop) in hops.iter().enumerate() {
        if l > 0 {
            for i in 0..n {
                let g2 = relay_gain_sq(scenario, l - 1, cascade[i], noise_acc[i]);
                let g = g2.sqrt();
                signal[i] *= g;
                cascade[i] *= g;
                noise_acc[i] *= g2;
            }
        }
        for i in 0..n {
            let h = hop.gains()[i];
            signal[i] = h * signal[i] + complex_gaussian(rng, cfg.noise_var);
            cascade[i] *= h;
            noise_acc[i] = h.norm_sqr() * noise_acc[i] + cfg.noise_var;
        }
    }

    let det = modem
        .ml_detect(&signal, &cascade, &noise_acc, cfg.pt)
        .expect("validated detector inputs");
    let received = modem.demap(det.sap_index, &det.labels).expect("legitimate block");
    let bit_errors = count_bit_errors(&bits, &received);

    let per_active = cfg.pt / cfg.active as f64;
    let worst_snr = modem
        .table()
        .pattern(source.sap_index)
        .iter()
        .map(|&i| per_active * cascade[i as usize].norm_sqr() / noise_acc[i as usize])
        .fold(f64::INFINITY, f64::min);

    let outcome = TrialOutcome {
        bits_sent: bits.len() as u32,
        bit_errors,
        block_error: bit_errors > 0,
        outage: worst_snr < cfg.outage_threshold,
        channel_uses: cfg.channel_uses() as u32,
        overlay: None,
    };
    let trace = TrialTrace {
        sap_index: source.sap_index,
        links: hops,
        route: Vec::new(),
        hop_block_errors: vec![det.sap_index != source.sap_index || det.labels != source.labels],
    };
    (outcome, trace)
}
