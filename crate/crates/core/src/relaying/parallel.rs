//! Dual-hop relaying over `T` parallel DF relays with relay selection.

use num_complex::Complex64;
use rand::Rng;

use super::{count_bit_errors, random_bits, Scenario, SelectionScheme, TrialOutcome, TrialTrace};
use crate::channel::{complex_gaussian, transmit, HopChannel};
use crate::modem::ImBlock;

/// Index of the largest value; ties keep the lowest index.
fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn row_min(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Partial relay selection: best worst-subcarrier first-hop power.
pub fn select_relay_prs(first_hop: &[HopChannel]) -> usize {
    argmax(first_hop.iter().map(|h| h.powers().fold(f64::INFINITY, f64::min)))
}

/// `e2e[t][n] = min(|g1_t[n]|², |g2_t[n]|²)`.
pub fn end_to_end_powers(first_hop: &[HopChannel], second_hop: &[HopChannel]) -> Vec<Vec<f64>> {
    first_hop
        .iter()
        .zip(second_hop)
        .map(|(a, b)| a.powers().zip(b.powers()).map(|(x, y)| x.min(y)).collect())
        .collect()
}

/// Bulk selection: one relay maximizing its worst end-to-end subcarrier.
pub fn select_relay_bulk(e2e: &[Vec<f64>]) -> usize {
    argmax(e2e.iter().map(|row| row_min(row)))
}

/// Per-subcarrier selection: the best end-to-end relay on each subcarrier.
pub fn select_relays_ps(e2e: &[Vec<f64>]) -> Vec<usize> {
    let n = e2e.first().map_or(0, Vec::len);
    (0..n).map(|i| argmax(e2e.iter().map(|row| row[i]))).collect()
}

/// One dual-hop trial through the relay(s) picked by the configured scheme.
///
/// Each selected relay decodes the whole block from its own first-hop
/// observation and re-modulates its decision; subcarrier `n` at the
/// destination is served by the relay routed to `n`.
pub fn run_parallel_trial<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> TrialOutcome {
    trial(scenario, rng).0
}

pub fn run_parallel_trial_traced<R: Rng + ?Sized>(
    scenario: &Scenario,
    rng: &mut R,
) -> (TrialOutcome, TrialTrace) {
    trial(scenario, rng)
}

pub(super) fn trial<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> (TrialOutcome, TrialTrace) {
    let cfg = scenario.config();
    let modem = scenario.modem();
    let n = cfg.subcarriers;
    let t = cfg.relays;
    let bits = random_bits(rng, modem.bits_per_block());
    let source = modem.map_bits(&bits, cfg.pt).expect("bit count matches modem");

    let [d1, d2] = [scenario.hop_distances()[0], scenario.hop_distances()[1]];
    let (first, second): (Vec<HopChannel>, Vec<HopChannel>) = (0..t)
        .map(|_| (scenario.sample_hop(rng, d1), scenario.sample_hop(rng, d2)))
        .unzip();

    let route = match cfg.selection {
        SelectionScheme::None => vec![0; n],
        SelectionScheme::Partial => vec![select_relay_prs(&first); n],
        SelectionScheme::Bulk => vec![select_relay_bulk(&end_to_end_powers(&first, &second)); n],
        SelectionScheme::PerSubcarrier => select_relays_ps(&end_to_end_powers(&first, &second)),
    };

    let noise_var = vec![cfg.noise_var; n];
    let mut forwarded: Vec<Option<ImBlock>> = vec![None; t];
    let mut hop_block_errors = Vec::new();
    for relay in 0..t {
        if !route.contains(&relay) {
            continue;
        }
        let y = transmit(&source.amplitudes, &first[relay], scenario.noise(), rng);
        let det = modem
            .ml_detect(&y, first[relay].gains(), &noise_var, cfg.pt)
            .expect("validated detector inputs");
        hop_block_errors.push(det.sap_index != source.sap_index || det.labels != source.labels);
        forwarded[relay] = Some(modem.block(det.sap_index, det.labels, cfg.pt).expect("legitimate block"));
    }

    let mut y = Vec::with_capacity(n);
    let mut gain = Vec::with_capacity(n);
    for (i, &relay) in route.iter().enumerate() {
        let g = second[relay].gains()[i];
        let x: Complex64 = forwarded[relay].as_ref().expect("routed relay decoded").amplitudes[i];
        y.push(g * x + complex_gaussian(rng, cfg.noise_var));
        gain.push(g);
    }
    let det = modem.ml_detect(&y, &gain, &noise_var, cfg.pt).expect("validated detector inputs");
    hop_block_errors.push(det.sap_index != source.sap_index || det.labels != source.labels);
    let received = modem.demap(det.sap_index, &det.labels).expect("legitimate block");
    let bit_errors = count_bit_errors(&bits, &received);

    let worst_snr = modem
        .table()
        .pattern(source.sap_index)
        .iter()
        .map(|&i| {
            let i = i as usize;
            let r = route[i];
            scenario.link_snr(first[r].power(i).min(second[r].power(i)))
        })
        .fold(f64::INFINITY, f64::min);

    let outcome = TrialOutcome {
        bits_sent: bits.len() as u32,
        bit_errors,
        block_error: bit_errors > 0,
        outage: worst_snr < cfg.outage_threshold,
        channel_uses: cfg.channel_uses() as u32,
        overlay: None,
    };
    let mut links = first;
    links.extend(second);
    let trace = TrialTrace {
        sap_index: source.sap_index,
        links,
        route,
        hop_block_errors,
    };
    (outcome, trace)
}
