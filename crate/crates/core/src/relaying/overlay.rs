//! Dual-hop overlay cognitive radio.
//!
//! Phase 1: the primary transmitter (PT) sends `K` PSK symbols on
//! subcarriers `0..K`, heard by the primary receiver (PR) and the secondary
//! transmitter (ST). Phase 2: ST re-modulates its decision of those symbols
//! as an OFDM-IM block whose activation pattern carries `p1` secondary bits;
//! PR and the secondary receiver (SR) both hear it.
//!
//! Geometry: PT→PR spans `d_sd`; PT→ST, ST→PR and ST→SR span `d_sd/2`.

use num_complex::Complex64;
use rand::Rng;

use super::{count_bit_errors, random_bits, OverlayOutcome, Scenario, TrialOutcome, TrialTrace};
use crate::channel::transmit;
use crate::modem::{argmin, SubcarrierScores};

pub fn run_cr_overlay_trial<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> TrialOutcome {
    trial(scenario, rng).0
}

pub fn run_cr_overlay_trial_traced<R: Rng + ?Sized>(
    scenario: &Scenario,
    rng: &mut R,
) -> (TrialOutcome, TrialTrace) {
    trial(scenario, rng)
}

/// Labels → bits, `bits_per_symbol` big-endian bits per label.
fn label_bits(labels: &[usize], bits_per_symbol: usize) -> Vec<bool> {
    labels
        .iter()
        .flat_map(|&l| (0..bits_per_symbol).rev().map(move |i| (l >> i) & 1 == 1))
        .collect()
}

pub(super) fn trial<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> (TrialOutcome, TrialTrace) {
    let cfg = scenario.config();
    let modem = scenario.modem();
    let psk = modem.constellation();
    let (n, k) = (cfg.subcarriers, cfg.active);
    let bps = psk.bits_per_symbol();
    let amp = modem.active_amplitude(cfg.pt);
    let half = scenario.hop_distances()[0];

    let primary_bits = random_bits(rng, k * bps);
    let secondary_bits = random_bits(rng, modem.index_bits());
    let primary_labels: Vec<usize> = primary_bits
        .chunks(bps)
        .map(|c| c.iter().fold(0, |acc, &b| (acc << 1) | b as usize))
        .collect();

    let pt_pr = scenario.sample_hop(rng, cfg.d_sd);
    let pt_st = scenario.sample_hop(rng, half);
    let st_pr = scenario.sample_hop(rng, half);
    let st_sr = scenario.sample_hop(rng, half);

    let mut phase1 = vec![Complex64::new(0.0, 0.0); n];
    for (x, &l) in phase1.iter_mut().zip(&primary_labels) {
        *x = psk.point(l) * amp;
    }
    let noise_var = vec![cfg.noise_var; n];

    // Phase 1 at PR and ST; only subcarriers 0..K carry primary symbols.
    let y_pr1 = transmit(&phase1, &pt_pr, scenario.noise(), rng);
    let y_st = transmit(&phase1, &pt_st, scenario.noise(), rng);

    let mut st_scores = SubcarrierScores::new(k, psk.order());
    st_scores.accumulate(&y_st[..k], &pt_st.gains()[..k], &noise_var[..k], amp, psk);
    let (_, st_labels) = st_scores.best_per_subcarrier();

    let sap = secondary_bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize);
    let st_block = modem.block(sap, st_labels.clone(), cfg.pt).expect("legitimate block");

    // Phase 2 at PR and SR.
    let y_pr2 = transmit(&st_block.amplitudes, &st_pr, scenario.noise(), rng);
    let y_sr = transmit(&st_block.amplitudes, &st_sr, scenario.noise(), rng);

    let mut pr1 = SubcarrierScores::new(k, psk.order());
    pr1.accumulate(&y_pr1[..k], &pt_pr.gains()[..k], &noise_var[..k], amp, psk);
    let mut pr2 = SubcarrierScores::new(n, psk.order());
    pr2.accumulate(&y_pr2, st_pr.gains(), &noise_var, amp, psk);

    // Joint two-phase ML over (pattern, symbols); the pattern is discarded.
    let joint_labels = {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut combined = vec![0.0; psk.order()];
        for pattern in modem.table().patterns() {
            let mut total = 0.0;
            let mut labels = Vec::with_capacity(k);
            for (slot, &pos) in pattern.iter().enumerate() {
                for ((c, a), b) in combined.iter_mut().zip(pr1.row(slot)).zip(pr2.row(pos as usize)) {
                    *c = a + b;
                }
                let (m, d) = argmin(&combined);
                total += d;
                labels.push(m);
            }
            if best.as_ref().is_none_or(|b| total < b.0) {
                best = Some((total, labels));
            }
        }
        best.expect("table is never empty").1
    };
    let direct_labels: Vec<usize> = (0..k).map(|slot| argmin(pr1.row(slot)).0).collect();

    let sr = modem
        .ml_detect(&y_sr, st_sr.gains(), &noise_var, cfg.pt)
        .expect("validated detector inputs");
    let sr_bits = modem.demap(sr.sap_index, &sr.labels).expect("legitimate block");

    let primary_bit_errors = count_bit_errors(&primary_bits, &label_bits(&joint_labels, bps));
    let primary_bit_errors_direct = count_bit_errors(&primary_bits, &label_bits(&direct_labels, bps));
    let secondary_bit_errors = count_bit_errors(&secondary_bits, &sr_bits[..modem.index_bits()]);

    // Per primary symbol: the better of the direct link and the relayed path.
    let pattern = modem.table().pattern(sap);
    let worst_snr = (0..k)
        .map(|slot| {
            let pos = pattern[slot] as usize;
            let direct = scenario.link_snr(pt_pr.power(slot));
            let relayed = scenario.link_snr(pt_st.power(slot).min(st_pr.power(pos)));
            direct.max(relayed)
        })
        .fold(f64::INFINITY, f64::min);

    let overlay = OverlayOutcome {
        primary_bits: primary_bits.len() as u32,
        primary_bit_errors,
        primary_block_error: primary_bit_errors > 0,
        primary_bit_errors_direct,
        secondary_bits: secondary_bits.len() as u32,
        secondary_bit_errors,
        secondary_block_error: secondary_bit_errors > 0,
    };
    let bit_errors = primary_bit_errors + secondary_bit_errors;
    let outcome = TrialOutcome {
        bits_sent: overlay.primary_bits + overlay.secondary_bits,
        bit_errors,
        block_error: bit_errors > 0,
        outage: worst_snr < cfg.outage_threshold,
        channel_uses: cfg.channel_uses() as u32,
        overlay: Some(overlay),
    };
    let st_error = st_labels != primary_labels;
    let trace = TrialTrace {
        sap_index: sap,
        links: vec![pt_pr, pt_st, st_pr, st_sr],
        route: Vec::new(),
        hop_block_errors: vec![st_error, primary_bit_errors > 0, sr.sap_index != sap],
    };
    (outcome, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaying::ScenarioConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_both_users_error_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for (n, k, m) in [(4, 2, 2), (6, 3, 4), (4, 4, 2)] {
            let sc = Scenario::new(ScenarioConfig {
                noise_var: 1e-20,
                subcarriers: n,
                active: k,
                psk_order: m,
                ..ScenarioConfig::cr_overlay()
            })
            .unwrap();
            for _ in 0..2000 {
                let out = sc.run_trial(&mut rng);
                let o = out.overlay.unwrap();
                assert_eq!((o.primary_bit_errors, o.secondary_bit_errors, o.primary_bit_errors_direct), (0, 0, 0));
                assert_eq!(out.bits_sent as usize, k * m.trailing_zeros() as usize + sc.modem().index_bits());
            }
        }
    }

    #[test]
    fn label_bits_big_endian() {
        assert_eq!(label_bits(&[2, 1], 2), vec![true, false, false, true]);
    }
}
