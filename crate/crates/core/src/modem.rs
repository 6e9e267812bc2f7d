//! OFDM-IM block modem for a single group of `N` subcarriers.
//!
//! A block carries `p1 + K·log2(M)` bits. The first `p1` bits (big-endian)
//! pick a subcarrier activation pattern (SAP) from a look-up table holding the
//! lexicographically first `2^p1` K-subsets of `0..N`; the remaining bits are
//! Gray-labelled M-PSK symbols placed on the active subcarriers in ascending
//! position order. Each active subcarrier carries power `Pt/K`.
//!
//! Detection is joint maximum likelihood over every (pattern, symbol tuple)
//! candidate using a noise-whitened Euclidean metric, so one detector serves
//! links with uniform noise and amplified links with per-subcarrier noise.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest `N` accepted by [`SapTable::new`].
pub const MAX_SUBCARRIERS: usize = 32;

/// Largest table (in patterns) that will be materialized.
pub const MAX_PATTERNS: usize = 1 << 20;

/// Binomial coefficient in `u128`, exact for every `n <= MAX_SUBCARRIERS`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Look-up table of legitimate subcarrier activation patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SapTable {
    n_subcarriers: usize,
    n_active: usize,
    index_bits: usize,
    // `len() * n_active` positions, pattern-major, ascending within a pattern.
    positions: Vec<u8>,
}

impl SapTable {
    pub fn new(n_subcarriers: usize, n_active: usize) -> Result<Self> {
        if n_active == 0 || n_active > n_subcarriers || n_subcarriers > MAX_SUBCARRIERS {
            return Err(Error::param(format!(
                "need 1 <= K <= N <= {MAX_SUBCARRIERS}, got N = {n_subcarriers}, K = {n_active}"
            )));
        }
        let combos = binomial(n_subcarriers, n_active);
        let index_bits = (u128::BITS - 1 - combos.leading_zeros()) as usize;
        let count = 1usize
            .checked_shl(index_bits as u32)
            .filter(|&c| c <= MAX_PATTERNS)
            .ok_or_else(|| {
                Error::param(format!(
                    "look-up table for N = {n_subcarriers}, K = {n_active} needs 2^{index_bits} patterns"
                ))
            })?;

        let mut positions = Vec::with_capacity(count * n_active);
        let mut combo: Vec<usize> = (0..n_active).collect();
        for _ in 0..count {
            positions.extend(combo.iter().map(|&p| p as u8));
            // Advance to the next K-subset in lexicographic order.
            let mut i = n_active;
            while i > 0 && combo[i - 1] == n_subcarriers - n_active + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..n_active {
                combo[j] = combo[j - 1] + 1;
            }
        }

        Ok(SapTable {
            n_subcarriers,
            n_active,
            index_bits,
            positions,
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    /// Number of bits carried by the pattern index, `floor(log2(C(N, K)))`.
    pub fn index_bits(&self) -> usize {
        self.index_bits
    }

    pub fn len(&self) -> usize {
        1 << self.index_bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Active positions of pattern `index`, ascending.
    ///
    /// Panics if `index >= self.len()`.
    pub fn pattern(&self, index: usize) -> &[u8] {
        &self.positions[index * self.n_active..(index + 1) * self.n_active]
    }

    pub fn patterns(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.positions.chunks_exact(self.n_active)
    }

    /// Bit mask of pattern `index` (bit `n` set when subcarrier `n` is active).
    pub fn mask(&self, index: usize) -> u32 {
        self.pattern(index).iter().fold(0, |m, &p| m | (1 << p))
    }
}

/// Unit-energy M-PSK with reflected Gray labels.
///
/// The point at phase `2πk/M` carries label `k ^ (k >> 1)`; points are stored
/// indexed by label.
#[derive(Debug, Clone, PartialEq)]
pub struct PskConstellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

impl PskConstellation {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() || order > 1 << 16 {
            return Err(Error::param(format!(
                "PSK order must be a power of two in [2, 65536], got {order}"
            )));
        }
        let mut points = vec![Complex64::new(0.0, 0.0); order];
        for k in 0..order {
            let phase = 2.0 * PI * k as f64 / order as f64;
            let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
            points[k ^ (k >> 1)] = Complex64::new(snap(phase.cos()), snap(phase.sin()));
        }
        Ok(PskConstellation {
            order,
            bits_per_symbol: order.trailing_zeros() as usize,
            points,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Label of `point` if it lies within `1e-9` of a constellation point.
    pub fn label_of(&self, point: Complex64) -> Option<usize> {
        self.points.iter().position(|p| (p - point).norm() < 1e-9)
    }
}

/// One frequency-domain OFDM-IM block.
#[derive(Debug, Clone, PartialEq)]
pub struct ImBlock {
    pub sap_index: usize,
    /// Symbol labels in ascending active-position order.
    pub labels: Vec<usize>,
    /// Length-`N` subcarrier amplitudes, nonzero exactly on the active set.
    pub amplitudes: Vec<Complex64>,
}

impl ImBlock {
    pub fn symbols(&self, constellation: &PskConstellation) -> Vec<Complex64> {
        self.labels.iter().map(|&l| constellation.point(l)).collect()
    }
}

/// Outcome of [`ImModem::ml_detect`].
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub sap_index: usize,
    pub labels: Vec<usize>,
    /// Whitened metric of the winning candidate.
    pub metric: f64,
}

/// A SAP table paired with a PSK constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct ImModem {
    table: SapTable,
    constellation: PskConstellation,
}

impl ImModem {
    pub fn new(n_subcarriers: usize, n_active: usize, psk_order: usize) -> Result<Self> {
        Ok(ImModem {
            table: SapTable::new(n_subcarriers, n_active)?,
            constellation: PskConstellation::new(psk_order)?,
        })
    }

    pub fn table(&self) -> &SapTable {
        &self.table
    }

    pub fn constellation(&self) -> &PskConstellation {
        &self.constellation
    }

    pub fn n_subcarriers(&self) -> usize {
        self.table.n_subcarriers
    }

    pub fn n_active(&self) -> usize {
        self.table.n_active
    }

    pub fn index_bits(&self) -> usize {
        self.table.index_bits
    }

    pub fn symbol_bits(&self) -> usize {
        self.table.n_active * self.constellation.bits_per_symbol
    }

    /// Bits per block, `p1 + K·log2(M)`.
    pub fn bits_per_block(&self) -> usize {
        self.index_bits() + self.symbol_bits()
    }

    /// Amplitude of one active subcarrier for per-block power `pt`.
    pub fn active_amplitude(&self, pt: f64) -> f64 {
        (pt / self.n_active() as f64).sqrt()
    }

    pub fn map_bits(&self, bits: &[bool], pt: f64) -> Result<ImBlock> {
        if bits.len() != self.bits_per_block() {
            return Err(Error::param(format!(
                "expected {} bits, got {}",
                self.bits_per_block(),
                bits.len()
            )));
        }
        let (index_bits, symbol_bits) = bits.split_at(self.index_bits());
        let sap_index = bits_to_uint(index_bits);
        let labels = symbol_bits
            .chunks(self.constellation.bits_per_symbol)
            .map(bits_to_uint)
            .collect();
        self.block(sap_index, labels, pt)
    }

    /// Builds the block for an already-decided pattern and label tuple.
    pub fn block(&self, sap_index: usize, labels: Vec<usize>, pt: f64) -> Result<ImBlock> {
        self.check_decision(sap_index, &labels)?;
        let amp = self.active_amplitude(pt);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.n_subcarriers()];
        for (&pos, &label) in self.table.pattern(sap_index).iter().zip(&labels) {
            amplitudes[pos as usize] = self.constellation.point(label) * amp;
        }
        Ok(ImBlock {
            sap_index,
            labels,
            amplitudes,
        })
    }

    pub fn demap(&self, sap_index: usize, labels: &[usize]) -> Result<Vec<bool>> {
        self.check_decision(sap_index, labels)?;
        let mut bits = Vec::with_capacity(self.bits_per_block());
        push_uint_bits(&mut bits, sap_index, self.index_bits());
        for &label in labels {
            push_uint_bits(&mut bits, label, self.constellation.bits_per_symbol);
        }
        Ok(bits)
    }

    fn check_decision(&self, sap_index: usize, labels: &[usize]) -> Result<()> {
        if sap_index >= self.table.len() {
            return Err(Error::param(format!(
                "SAP index {sap_index} outside table of {} patterns",
                self.table.len()
            )));
        }
        if labels.len() != self.n_active() {
            return Err(Error::param(format!(
                "expected {} symbols, got {}",
                self.n_active(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.constellation.order) {
            return Err(Error::param(format!("symbol label {bad} outside {}-PSK", self.constellation.order)));
        }
        Ok(())
    }

    /// Joint ML detection of (pattern, symbols).
    ///
    /// Minimizes `Σ_n |y[n] − g[n]·x[n]|² / noise_var[n]` over all legitimate
    /// blocks `x` of power `pt`. The metric separates over subcarriers, so the
    /// best label on each subcarrier is found once and every pattern is scored
    /// by summing its active subcarriers; this is the exhaustive argmin, not an
    /// approximation. Ties go to the lowest pattern index, then the lowest labels.
    pub fn ml_detect(
        &self,
        received: &[Complex64],
        gain: &[Complex64],
        noise_var: &[f64],
        pt: f64,
    ) -> Result<Detection> {
        let n = self.n_subcarriers();
        if received.len() != n || gain.len() != n || noise_var.len() != n {
            return Err(Error::param(format!(
                "detector inputs must all have length {n}"
            )));
        }
        if let Some(v) = noise_var.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::param(format!("noise variance must be positive, got {v}")));
        }
        let mut scores = SubcarrierScores::new(n, self.constellation.order);
        scores.accumulate(received, gain, noise_var, self.active_amplitude(pt), &self.constellation);
        let (best_delta, best_label) = scores.best_per_subcarrier();
        let (sap_index, delta) = self.best_pattern(|pos| best_delta[pos]);
        let labels = self
            .table
            .pattern(sap_index)
            .iter()
            .map(|&p| best_label[p as usize])
            .collect();
        Ok(Detection {
            sap_index,
            labels,
            metric: scores.base + delta,
        })
    }

    /// Pattern minimizing the sum of `cost(position)` over its active set.
    pub(crate) fn best_pattern(&self, cost: impl Fn(usize) -> f64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, pattern) in self.table.patterns().enumerate() {
            let total: f64 = pattern.iter().map(|&p| cost(p as usize)).sum();
            if total < best.1 {
                best = (i, total);
            }
        }
        best
    }
}

/// Per-subcarrier, per-label metric increments relative to "inactive".
///
/// `delta[n][m] = (|y − g·a·s_m|² − |y|²) / σ²` and `base = Σ |y|² / σ²`, so a
/// candidate's full metric is `base + Σ_{n active} delta[n][label_n]`.
#[derive(Debug, Clone)]
pub(crate) struct SubcarrierScores {
    order: usize,
    pub(crate) base: f64,
    pub(crate) delta: Vec<f64>,
}

impl SubcarrierScores {
    pub(crate) fn new(n_subcarriers: usize, order: usize) -> Self {
        SubcarrierScores {
            order,
            base: 0.0,
            delta: vec![0.0; n_subcarriers * order],
        }
    }

    pub(crate) fn accumulate(
        &mut self,
        received: &[Complex64],
        gain: &[Complex64],
        noise_var: &[f64],
        amplitude: f64,
        constellation: &PskConstellation,
    ) {
        for (n, ((&y, &g), &var)) in received.iter().zip(gain).zip(noise_var).enumerate() {
            let ga = g * amplitude;
            let inv = 1.0 / var;
            self.base += y.norm_sqr() * inv;
            let energy = ga.norm_sqr();
            let cross = y.conj() * ga;
            let row = &mut self.delta[n * self.order..(n + 1) * self.order];
            for (d, s) in row.iter_mut().zip(constellation.points()) {
                *d += (energy - 2.0 * (cross * s).re) * inv;
            }
        }
    }

    pub(crate) fn row(&self, n: usize) -> &[f64] {
        &self.delta[n * self.order..(n + 1) * self.order]
    }

    pub(crate) fn best_per_subcarrier(&self) -> (Vec<f64>, Vec<usize>) {
        self.delta
            .chunks_exact(self.order)
            .map(|row| argmin(row))
            .map(|(m, d)| (d, m))
            .unzip()
    }
}

/// First index of the minimum.
pub(crate) fn argmin(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

fn bits_to_uint(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

fn push_uint_bits(out: &mut Vec<bool>, value: usize, width: usize) {
    out.extend((0..width).rev().map(|i| (value >> i) & 1 == 1));
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn all_bits(width: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1usize << width).map(move |v| {
            let mut out = Vec::new();
            push_uint_bits(&mut out, v, width);
            out
        })
    }

    /// Exhaustive whitened-metric search over every candidate, in tie-break order.
    fn brute_force_detect(
        modem: &ImModem,
        y: &[Complex64],
        g: &[Complex64],
        var: &[f64],
        pt: f64,
    ) -> (usize, Vec<usize>, f64) {
        let k = modem.n_active();
        let m = modem.constellation().order();
        let mut best: Option<(usize, Vec<usize>, f64)> = None;
        for sap in 0..modem.table().len() {
            for combo in 0..m.pow(k as u32) {
                // Most significant digit first gives lexicographic label order.
                let labels: Vec<usize> = (0..k).rev().map(|i| (combo / m.pow(i as u32)) % m).collect();
                let x = modem.block(sap, labels.clone(), pt).unwrap().amplitudes;
                let metric: f64 = (0..y.len())
                    .map(|n| (y[n] - g[n] * x[n]).norm_sqr() / var[n])
                    .sum();
                if best.as_ref().is_none_or(|b| metric < b.2) {
                    best = Some((sap, labels, metric));
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn table_4_choose_2() {
        let t = SapTable::new(4, 2).unwrap();
        assert_eq!(t.index_bits(), 2);
        let pats: Vec<&[u8]> = t.patterns().collect();
        assert_eq!(pats, vec![&[0, 1][..], &[0, 2], &[0, 3], &[1, 2]]);
    }

    #[test]
    fn table_plain_ofdm() {
        let t = SapTable::new(4, 4).unwrap();
        assert_eq!(t.index_bits(), 0);
        assert_eq!(t.len(), 1);
        assert_eq!(t.pattern(0), &[0, 1, 2, 3]);
    }

    #[test]
    fn table_8_choose_2() {
        let t = SapTable::new(8, 2).unwrap();
        assert_eq!(t.index_bits(), 4);
        assert_eq!(t.len(), 16);
    }

    #[test]
    fn table_rejects_bad_bounds() {
        assert!(SapTable::new(4, 0).is_err());
        assert!(SapTable::new(4, 5).is_err());
        assert!(SapTable::new(33, 1).is_err());
        // C(32, 16) would need 2^29 patterns.
        assert!(SapTable::new(32, 16).is_err());
        assert!(SapTable::new(32, 1).is_ok());
    }

    #[test]
    fn table_invariants_small_n() {
        for n in 1..=8 {
            for k in 1..=n {
                let t = SapTable::new(n, k).unwrap();
                let combos = binomial(n, k);
                assert_eq!(1u128 << t.index_bits() <= combos, true);
                assert!(combos < 1u128 << (t.index_bits() + 1));
                let masks: Vec<u32> = (0..t.len()).map(|i| t.mask(i)).collect();
                for &m in &masks {
                    assert_eq!(m.count_ones() as usize, k);
                    assert!(m < 1 << n);
                }
                let mut sorted = masks.clone();
                sorted.dedup();
                assert_eq!(sorted.len(), t.len(), "N={n} K={k}");
                // Lexicographic order of the position tuples.
                let pats: Vec<&[u8]> = t.patterns().collect();
                assert!(pats.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn psk_gray_and_unit_magnitude() {
        for m in [2usize, 4, 8, 16, 64] {
            let psk = PskConstellation::new(m).unwrap();
            for (label, p) in psk.points().iter().enumerate() {
                assert!((p.norm() - 1.0).abs() < 1e-12);
                assert_eq!(psk.label_of(*p), Some(label));
            }
            // Neighbours on the circle differ in one label bit.
            for k in 0..m {
                let a = k ^ (k >> 1);
                let b = ((k + 1) % m) ^ (((k + 1) % m) >> 1);
                assert_eq!((a ^ b).count_ones(), 1);
            }
        }
        let bpsk = PskConstellation::new(2).unwrap();
        assert_eq!(bpsk.point(0), c(1.0, 0.0));
        assert_eq!(bpsk.point(1), c(-1.0, 0.0));
        assert!(PskConstellation::new(3).is_err());
        assert!(PskConstellation::new(1).is_err());
    }

    #[test]
    fn map_all_zero_bits() {
        let modem = ImModem::new(4, 2, 2).unwrap();
        let block = modem.map_bits(&[false; 4], 2.0).unwrap();
        assert_eq!(block.sap_index, 0);
        assert_eq!(block.symbols(modem.constellation()), vec![c(1.0, 0.0); 2]);
        assert_eq!(block.amplitudes, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn map_all_one_bits() {
        let modem = ImModem::new(4, 2, 2).unwrap();
        let block = modem.map_bits(&[true; 4], 2.0).unwrap();
        assert_eq!(block.sap_index, 3);
        assert_eq!(block.symbols(modem.constellation()), vec![c(-1.0, 0.0); 2]);
        assert_eq!(block.amplitudes, vec![c(0.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn map_rejects_wrong_length() {
        let modem = ImModem::new(4, 2, 2).unwrap();
        assert!(matches!(modem.map_bits(&[true; 3], 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn demap_examples() {
        let modem = ImModem::new(4, 2, 2).unwrap();
        assert_eq!(modem.demap(0, &[0, 0]).unwrap(), vec![false; 4]);
        let minus = modem.constellation().label_of(c(-1.0, 0.0)).unwrap();
        assert_eq!(modem.demap(3, &[minus, minus]).unwrap(), vec![true; 4]);
        assert!(modem.demap(4, &[0, 0]).is_err());
        assert!(modem.demap(0, &[0, 2]).is_err());
    }

    #[test]
    fn bijective_exhaustive_small() {
        for n in 1..=8 {
            for k in 1..=n {
                for m in [2usize, 4] {
                    let modem = ImModem::new(n, k, m).unwrap();
                    if modem.bits_per_block() > 14 {
                        continue;
                    }
                    for bits in all_bits(modem.bits_per_block()) {
                        let block = modem.map_bits(&bits, 1.0).unwrap();
                        assert_eq!(modem.demap(block.sap_index, &block.labels).unwrap(), bits);
                    }
                }
            }
        }
    }

    #[test]
    fn detect_two_subcarrier_example() {
        let modem = ImModem::new(2, 1, 2).unwrap();
        let d = modem
            .ml_detect(&[c(1.0, 0.0), c(0.0, 0.0)], &[c(1.0, 0.0); 2], &[1.0; 2], 1.0)
            .unwrap();
        assert_eq!(modem.table().pattern(d.sap_index), &[0]);
        assert_eq!(modem.constellation().point(d.labels[0]), c(1.0, 0.0));
        assert!(d.metric.abs() < 1e-12);
    }

    #[test]
    fn detect_rejects_nonpositive_noise() {
        let modem = ImModem::new(4, 2, 2).unwrap();
        let y = [c(0.0, 0.0); 4];
        assert!(modem.ml_detect(&y, &y, &[1.0, 0.0, 1.0, 1.0], 1.0).is_err());
        assert!(modem.ml_detect(&y, &y, &[1.0, -1.0, 1.0, 1.0], 1.0).is_err());
        assert!(modem.ml_detect(&y, &y, &[1.0, f64::NAN, 1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn detect_noiseless_exhaustive() {
        let modem = ImModem::new(4, 2, 2).unwrap();
        let g = [c(0.3, -1.1), c(-0.7, 0.2), c(0.05, 0.9), c(1.4, 1.4)];
        for bits in all_bits(4) {
            let block = modem.map_bits(&bits, 3.0).unwrap();
            let y: Vec<_> = g.iter().zip(&block.amplitudes).map(|(g, x)| g * x).collect();
            let d = modem.ml_detect(&y, &g, &[1.0; 4], 3.0).unwrap();
            assert_eq!((d.sap_index, d.labels), (block.sap_index, block.labels));
        }
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        // With zero observation and zero gain every candidate scores the same.
        let modem = ImModem::new(4, 2, 4).unwrap();
        let zero = [c(0.0, 0.0); 4];
        let d = modem.ml_detect(&zero, &zero, &[1.0; 4], 1.0).unwrap();
        assert_eq!((d.sap_index, d.labels), (0, vec![0, 0]));
    }

    fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| c(a, b)), len)
    }

    proptest! {
        #[test]
        fn separable_search_matches_brute_force(
            y in complex_vec(5),
            g in complex_vec(5),
            var in prop::collection::vec(0.1f64..3.0, 5),
            m in prop::sample::select(vec![2usize, 4]),
            pt in 0.5f64..8.0,
        ) {
            let modem = ImModem::new(5, 2, m).unwrap();
            let d = modem.ml_detect(&y, &g, &var, pt).unwrap();
            let (sap, labels, metric) = brute_force_detect(&modem, &y, &g, &var, pt);
            prop_assert_eq!(d.sap_index, sap);
            prop_assert_eq!(d.labels, labels);
            prop_assert!((d.metric - metric).abs() < 1e-9 * (1.0 + metric));
        }

        #[test]
        fn uniform_noise_vector_matches_scalar_metric(
            y in complex_vec(4),
            g in complex_vec(4),
            sigma2 in 0.05f64..4.0,
        ) {
            // Whitened metric with equal entries vs. the plain Euclidean metric.
            let modem = ImModem::new(4, 2, 2).unwrap();
            let d = modem.ml_detect(&y, &g, &[sigma2; 4], 2.0).unwrap();
            let (sap, labels, _) = brute_force_detect(&modem, &y, &g, &[1.0; 4], 2.0);
            prop_assert_eq!((d.sap_index, d.labels), (sap, labels));
        }

        #[test]
        fn decision_is_scale_invariant(
            y in complex_vec(4),
            g in complex_vec(4),
            var in prop::collection::vec(0.1f64..3.0, 4),
            scale in (0.2f64..5.0, 0.0f64..6.28),
        ) {
            let modem = ImModem::new(4, 2, 4).unwrap();
            let s = Complex64::from_polar(scale.0, scale.1);
            let ys: Vec<_> = y.iter().map(|v| v * s).collect();
            let gs: Vec<_> = g.iter().map(|v| v * s).collect();
            let vs: Vec<_> = var.iter().map(|v| v * s.norm_sqr()).collect();
            let a = modem.ml_detect(&y, &g, &var, 1.0).unwrap();
            let b = modem.ml_detect(&ys, &gs, &vs, 1.0).unwrap();
            prop_assert_eq!((a.sap_index, a.labels), (b.sap_index, b.labels));
        }

        #[test]
        fn block_power_and_support(bits in prop::collection::vec(any::<bool>(), 2 + 3 * 3), pt in 0.1f64..100.0) {
            // N = 5, K = 3, 8-PSK: p1 = floor(log2 10) = 3 index bits.
            let modem = ImModem::new(5, 3, 8).unwrap();
            let mut bits = bits;
            bits.push(false);
            let block = modem.map_bits(&bits, pt).unwrap();
            let power: f64 = block.amplitudes.iter().map(|a| a.norm_sqr()).sum();
            prop_assert!((power - pt).abs() < 1e-9 * pt);
            let mask = modem.table().mask(block.sap_index);
            for (n, a) in block.amplitudes.iter().enumerate() {
                prop_assert_eq!(a.norm() > 0.0, mask >> n & 1 == 1);
            }
            prop_assert_eq!(modem.demap(block.sap_index, &block.labels).unwrap(), bits);
        }

        #[test]
        fn detected_metric_never_exceeds_truth(
            bits in prop::collection::vec(any::<bool>(), 4),
            g in complex_vec(4),
            noise in complex_vec(4),
        ) {
            let modem = ImModem::new(4, 2, 2).unwrap();
            let block = modem.map_bits(&bits, 2.0).unwrap();
            let y: Vec<_> = (0..4).map(|n| g[n] * block.amplitudes[n] + noise[n]).collect();
            let truth: f64 = (0..4).map(|n| (y[n] - g[n] * block.amplitudes[n]).norm_sqr()).sum();
            let d = modem.ml_detect(&y, &g, &[1.0; 4], 2.0).unwrap();
            prop_assert!(d.metric <= truth + 1e-9);
        }
    }
}
