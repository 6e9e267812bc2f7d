//! Integer trial counters and the summaries derived from them.
//!
//! Accumulators hold only integer counts, so merging per-worker accumulators
//! in any order gives bit-identical summaries.

use crate::error::{Error, Result};
use crate::relaying::TrialOutcome;

/// 95% normal-approximation quantile.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OverlayCounters {
    pub primary_bits: u64,
    pub primary_bit_errors: u64,
    pub primary_block_errors: u64,
    pub primary_bit_errors_direct: u64,
    pub secondary_bits: u64,
    pub secondary_bit_errors: u64,
    pub secondary_block_errors: u64,
}

impl OverlayCounters {
    fn add(&mut self, other: &OverlayCounters) {
        self.primary_bits += other.primary_bits;
        self.primary_bit_errors += other.primary_bit_errors;
        self.primary_block_errors += other.primary_block_errors;
        self.primary_bit_errors_direct += other.primary_bit_errors_direct;
        self.secondary_bits += other.secondary_bits;
        self.secondary_bit_errors += other.secondary_bit_errors;
        self.secondary_block_errors += other.secondary_block_errors;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricAccumulator {
    pub trials: u64,
    pub block_errors: u64,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub outages: u64,
    pub channel_uses_per_trial: u32,
    /// Bits per block `p`.
    pub bits_per_block: u32,
    pub overlay: Option<OverlayCounters>,
}

impl MetricAccumulator {
    pub fn new(channel_uses_per_trial: u32, bits_per_block: u32, overlay: bool) -> Self {
        MetricAccumulator {
            trials: 0,
            block_errors: 0,
            bit_errors: 0,
            bits_total: 0,
            outages: 0,
            channel_uses_per_trial,
            bits_per_block,
            overlay: overlay.then(OverlayCounters::default),
        }
    }

    pub fn update(&mut self, outcome: &TrialOutcome) -> Result<()> {
        if outcome.channel_uses != self.channel_uses_per_trial {
            return Err(Error::Consistency(format!(
                "outcome used {} channel uses, accumulator expects {}",
                outcome.channel_uses, self.channel_uses_per_trial
            )));
        }
        if outcome.bit_errors > outcome.bits_sent {
            return Err(Error::Consistency(format!(
                "{} bit errors out of {} bits",
                outcome.bit_errors, outcome.bits_sent
            )));
        }
        match (&mut self.overlay, &outcome.overlay) {
            (Some(acc), Some(o)) => acc.add(&OverlayCounters {
                primary_bits: o.primary_bits.into(),
                primary_bit_errors: o.primary_bit_errors.into(),
                primary_block_errors: o.primary_block_error.into(),
                primary_bit_errors_direct: o.primary_bit_errors_direct.into(),
                secondary_bits: o.secondary_bits.into(),
                secondary_bit_errors: o.secondary_bit_errors.into(),
                secondary_block_errors: o.secondary_block_error.into(),
            }),
            (None, None) => {}
            _ => {
                return Err(Error::Consistency(
                    "overlay detail present on only one of outcome and accumulator".into(),
                ))
            }
        }
        self.trials += 1;
        self.block_errors += u64::from(outcome.block_error);
        self.bit_errors += u64::from(outcome.bit_errors);
        self.bits_total += u64::from(outcome.bits_sent);
        self.outages += u64::from(outcome.outage);
        Ok(())
    }

    /// Componentwise sum of two accumulators of the same experiment.
    pub fn merge(mut self, other: &MetricAccumulator) -> Result<Self> {
        if self.channel_uses_per_trial != other.channel_uses_per_trial
            || self.bits_per_block != other.bits_per_block
            || self.overlay.is_some() != other.overlay.is_some()
        {
            return Err(Error::Consistency(
                "cannot merge accumulators from different experiments".into(),
            ));
        }
        self.trials += other.trials;
        self.block_errors += other.block_errors;
        self.bit_errors += other.bit_errors;
        self.bits_total += other.bits_total;
        self.outages += other.outages;
        if let (Some(a), Some(b)) = (&mut self.overlay, &other.overlay) {
            a.add(b);
        }
        Ok(self)
    }

    pub fn summarize(&self) -> Result<MetricSummary> {
        if self.trials == 0 {
            return Err(Error::EmptyAccumulator);
        }
        let n = self.trials;
        let bler = Proportion::new(self.block_errors, n, n);
        let ber = Proportion::new(self.bit_errors, self.bits_total, n);
        let op = Proportion::new(self.outages, n, n);
        let throughput =
            f64::from(self.bits_per_block) * (1.0 - bler.estimate) / f64::from(self.channel_uses_per_trial);
        let overlay = self.overlay.map(|o| OverlaySummary {
            primary_ber: Proportion::new(o.primary_bit_errors, o.primary_bits, n),
            primary_ber_direct: Proportion::new(o.primary_bit_errors_direct, o.primary_bits, n),
            secondary_ber: Proportion::new(o.secondary_bit_errors, o.secondary_bits, n),
            primary_bler: Proportion::new(o.primary_block_errors, n, n),
            secondary_bler: Proportion::new(o.secondary_block_errors, n, n),
        });
        Ok(MetricSummary {
            trials: n,
            bler,
            ber,
            op,
            throughput,
            overlay,
        })
    }
}

/// A ratio estimate with its 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub estimate: f64,
    pub ci95: f64,
}

impl Proportion {
    /// `hits/total`, with half-width `1.96·sqrt(p(1−p)/trials)`.
    fn new(hits: u64, total: u64, trials: u64) -> Self {
        let p = if total == 0 { 0.0 } else { hits as f64 / total as f64 };
        Proportion {
            estimate: p,
            ci95: Z95 * (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    pub fn lower(&self) -> f64 {
        self.estimate - self.ci95
    }

    pub fn upper(&self) -> f64 {
        self.estimate + self.ci95
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlaySummary {
    pub primary_ber: Proportion,
    /// Primary BER of phase-1-only detection at the PR.
    pub primary_ber_direct: Proportion,
    pub secondary_ber: Proportion,
    pub primary_bler: Proportion,
    pub secondary_bler: Proportion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub trials: u64,
    pub bler: Proportion,
    pub ber: Proportion,
    pub op: Proportion,
    /// Goodput in bits per channel use, `p·(1 − BLER)/channel_uses`.
    pub throughput: f64,
    pub overlay: Option<OverlaySummary>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaying::OverlayOutcome;
    use proptest::prelude::*;

    fn outcome(bits: u32, errors: u32, outage: bool) -> TrialOutcome {
        TrialOutcome {
            bits_sent: bits,
            bit_errors: errors,
            block_error: errors > 0,
            outage,
            channel_uses: 8,
            overlay: None,
        }
    }

    #[test]
    fn single_clean_update() {
        let mut acc = MetricAccumulator::new(8, 4, false);
        acc.update(&outcome(4, 0, false)).unwrap();
        assert_eq!((acc.trials, acc.block_errors), (1, 0));
    }

    #[test]
    fn ber_from_one_outcome() {
        let mut acc = MetricAccumulator::new(8, 4, false);
        acc.update(&outcome(4, 2, false)).unwrap();
        assert_eq!(acc.summarize().unwrap().ber.estimate, 0.5);
    }

    #[test]
    fn update_rejects_mismatch() {
        let mut acc = MetricAccumulator::new(4, 4, false);
        assert!(matches!(acc.update(&outcome(4, 0, false)), Err(Error::Consistency(_))));
        let mut acc = MetricAccumulator::new(8, 4, true);
        assert!(acc.update(&outcome(4, 0, false)).is_err());
        let mut acc = MetricAccumulator::new(8, 4, false);
        let with_overlay = TrialOutcome { overlay: Some(OverlayOutcome::default()), ..outcome(4, 0, false) };
        assert!(acc.update(&with_overlay).is_err());
    }

    #[test]
    fn merge_rejects_other_experiment() {
        let a = MetricAccumulator::new(8, 4, false);
        assert!(a.clone().merge(&MetricAccumulator::new(4, 4, false)).is_err());
        assert!(a.clone().merge(&MetricAccumulator::new(8, 6, false)).is_err());
        assert!(a.merge(&MetricAccumulator::new(8, 4, true)).is_err());
    }

    #[test]
    fn empty_summary_is_an_error() {
        assert_eq!(MetricAccumulator::new(4, 4, false).summarize(), Err(Error::EmptyAccumulator));
    }

    fn throughput_for(channel_uses: u32, trials: u64, block_errors: u64) -> f64 {
        let acc = MetricAccumulator {
            trials,
            block_errors,
            bit_errors: block_errors,
            bits_total: 4 * trials,
            outages: 0,
            channel_uses_per_trial: channel_uses,
            bits_per_block: 4,
            overlay: None,
        };
        acc.summarize().unwrap().throughput
    }

    #[test]
    fn throughput_examples() {
        assert_eq!(throughput_for(8, 10, 0), 0.5);
        assert_eq!(throughput_for(4, 10, 0), 1.0);
        assert_eq!(throughput_for(8, 4, 1), 0.375);
    }

    #[test]
    fn ci_halves_when_trials_quadruple() {
        let ci = |trials: u64| {
            let acc = MetricAccumulator {
                trials,
                block_errors: trials / 4,
                bit_errors: 0,
                bits_total: trials,
                outages: 0,
                channel_uses_per_trial: 4,
                bits_per_block: 4,
                overlay: None,
            };
            acc.summarize().unwrap().bler.ci95
        };
        assert!((ci(1000) / ci(4000) - 2.0).abs() < 1e-12);
        assert!((ci(1000) - 1.96 * (0.25f64 * 0.75 / 1000.0).sqrt()).abs() < 1e-15);
    }

    fn arb_outcome() -> impl Strategy<Value = TrialOutcome> {
        (1u32..9, any::<bool>(), any::<u8>()).prop_map(|(bits, outage, e)| {
            let errors = u32::from(e) % (bits + 1);
            TrialOutcome {
                bits_sent: bits,
                bit_errors: errors,
                block_error: errors > 0,
                outage,
                channel_uses: 8,
                overlay: None,
            }
        })
    }

    fn fold(outcomes: &[TrialOutcome]) -> MetricAccumulator {
        let mut acc = MetricAccumulator::new(8, 4, false);
        for o in outcomes {
            acc.update(o).unwrap();
        }
        acc
    }

    proptest! {
        #[test]
        fn merge_tree_equals_sequential(
            outcomes in prop::collection::vec(arb_outcome(), 1..60),
            cut1 in 0usize..60,
            cut2 in 0usize..60,
        ) {
            let sequential = fold(&outcomes);
            let (a, b) = (cut1.min(outcomes.len()), cut2.min(outcomes.len()));
            let (lo, hi) = (a.min(b), a.max(b));
            let x = fold(&outcomes[..lo]);
            let y = fold(&outcomes[lo..hi]);
            let z = fold(&outcomes[hi..]);
            let left = x.clone().merge(&y).unwrap().merge(&z).unwrap();
            let right = x.clone().merge(&y.clone().merge(&z).unwrap()).unwrap();
            let swapped = z.merge(&y).unwrap().merge(&x).unwrap();
            prop_assert_eq!(&left, &sequential);
            prop_assert_eq!(&right, &sequential);
            prop_assert_eq!(&swapped, &sequential);
            prop_assert_eq!(sequential.clone().merge(&MetricAccumulator::new(8, 4, false)).unwrap(), sequential.clone());

            let mut reversed = outcomes.clone();
            reversed.reverse();
            prop_assert_eq!(fold(&reversed), sequential.clone());

            let s = sequential.summarize().unwrap();
            prop_assert!(s.throughput >= 0.0 && s.throughput <= 4.0 / 8.0);
            for p in [s.bler, s.ber, s.op] {
                prop_assert!((0.0..=1.0).contains(&p.estimate));
            }
        }
    }
}
