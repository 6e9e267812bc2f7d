//! End-to-end trials for every supported network structure.
//!
//! A [`Scenario`] is a validated [`ScenarioConfig`] together with its modem
//! and hop geometry. [`Scenario::run_trial`] draws one source block, pushes
//! it through the configured relays and returns a [`TrialOutcome`]; the
//! `*_traced` variants additionally return the channel realizations so that
//! tests can recompute derived quantities independently.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::channel::{HopChannel, NoiseModel};
use crate::error::{Error, Result};
use crate::modem::ImModem;

mod overlay;
mod parallel;
mod serial;

pub use overlay::{run_cr_overlay_trial, run_cr_overlay_trial_traced};
pub use parallel::{
    end_to_end_powers, run_parallel_trial, run_parallel_trial_traced, select_relay_bulk,
    select_relay_prs, select_relays_ps,
};
pub use serial::{
    run_serial_af_trial, run_serial_af_trial_traced, run_serial_df_trial,
    run_serial_df_trial_traced,
};

/// Network structure between source and destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    /// Direct link, no relays.
    PointToPoint,
    /// `L − 1` relays in series.
    Serial,
    /// Dual-hop with `T` relays in parallel.
    Parallel,
    /// Dual-hop overlay cognitive radio: the secondary transmitter relays
    /// primary symbols and piggybacks its own bits on the activation pattern.
    CrOverlay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    DecodeForward,
    AmplifyVariableGain,
    AmplifyFixedGain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionScheme {
    /// Always relay 0.
    None,
    /// Partial selection from first-hop channels only.
    Partial,
    /// One relay for all subcarriers, by worst end-to-end subcarrier.
    Bulk,
    /// Best end-to-end relay chosen independently on every subcarrier.
    PerSubcarrier,
}

macro_rules! named_enum {
    ($ty:ty, $what:literal, [$(($variant:path, $name:literal)),+ $(,)?]) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self {
                    $($variant => $name,)+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(Error::param(format!(concat!("unknown ", $what, " `{}`"), other))),
                }
            }
        }
    };
}

named_enum!(Structure, "structure", [
    (Structure::PointToPoint, "p2p"),
    (Structure::Serial, "serial"),
    (Structure::Parallel, "parallel"),
    (Structure::CrOverlay, "cr"),
]);

named_enum!(Protocol, "protocol", [
    (Protocol::DecodeForward, "df"),
    (Protocol::AmplifyVariableGain, "af-vg"),
    (Protocol::AmplifyFixedGain, "af-fg"),
]);

named_enum!(SelectionScheme, "relay-selection scheme", [
    (SelectionScheme::None, "none"),
    (SelectionScheme::Partial, "prs"),
    (SelectionScheme::Bulk, "bulk"),
    (SelectionScheme::PerSubcarrier, "ps"),
]);

/// Every parameter of one experiment at a single transmit power.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub structure: Structure,
    pub protocol: Protocol,
    pub selection: SelectionScheme,
    /// Number of hops `L`.
    pub hops: usize,
    /// Relays per hop `T`.
    pub relays: usize,
    pub subcarriers: usize,
    pub active: usize,
    pub psk_order: usize,
    /// Per-block transmit power of every transmitting node (linear, in units of the noise power).
    pub pt: f64,
    pub alpha: f64,
    /// Source–destination distance in meters.
    pub d_sd: f64,
    pub noise_var: f64,
    pub outage_threshold: f64,
}

impl Default for ScenarioConfig {
    /// Point-to-point link with the case-study topology and modem (N = 4, K = 2, BPSK).
    fn default() -> Self {
        ScenarioConfig {
            structure: Structure::PointToPoint,
            protocol: Protocol::DecodeForward,
            selection: SelectionScheme::None,
            hops: 1,
            relays: 1,
            subcarriers: 4,
            active: 2,
            psk_order: 2,
            pt: 1.0,
            alpha: 2.0,
            d_sd: 10.0,
            noise_var: 1.0,
            outage_threshold: 1.0,
        }
    }
}

impl ScenarioConfig {
    pub fn serial(hops: usize, protocol: Protocol) -> Self {
        ScenarioConfig {
            structure: if hops == 1 { Structure::PointToPoint } else { Structure::Serial },
            protocol,
            hops,
            ..Default::default()
        }
    }

    pub fn parallel(relays: usize, selection: SelectionScheme) -> Self {
        ScenarioConfig {
            structure: Structure::Parallel,
            selection,
            hops: 2,
            relays,
            ..Default::default()
        }
    }

    pub fn cr_overlay() -> Self {
        ScenarioConfig {
            structure: Structure::CrOverlay,
            hops: 2,
            relays: 1,
            ..Default::default()
        }
    }

    /// Sets `pt` from `10·log10(Pt/σ²)`.
    pub fn with_pt_db(mut self, pt_db: f64) -> Self {
        self.pt = self.noise_var * 10f64.powf(pt_db / 10.0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        use Structure::*;
        let fail = |msg: String| Err(Error::Parameter(msg));
        match self.structure {
            PointToPoint if self.hops != 1 => return fail(format!("p2p needs L = 1, got {}", self.hops)),
            Serial if self.hops < 2 => return fail(format!("serial needs L >= 2, got {}", self.hops)),
            Parallel | CrOverlay if self.hops != 2 => {
                return fail(format!("{} needs L = 2, got {}", self.structure, self.hops))
            }
            Parallel if self.relays == 0 => return fail("parallel needs T >= 1".into()),
            CrOverlay if self.relays != 1 => return fail(format!("cr needs T = 1, got {}", self.relays)),
            _ => {}
        }
        if self.selection != SelectionScheme::None && self.structure != Parallel {
            return fail(format!("relay selection `{}` needs the parallel structure", self.selection));
        }
        if self.protocol != Protocol::DecodeForward && self.structure != Serial {
            return fail(format!("protocol `{}` is only supported on the serial structure", self.protocol));
        }
        for (name, v) in [
            ("pt", self.pt),
            ("d_sd", self.d_sd),
            ("noise_var", self.noise_var),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return fail(format!("alpha must be non-negative, got {}", self.alpha));
        }
        if !self.outage_threshold.is_finite() || self.outage_threshold < 0.0 {
            return fail(format!("outage threshold must be non-negative, got {}", self.outage_threshold));
        }
        Ok(())
    }

    /// Time slots × subcarriers consumed by one end-to-end block.
    pub fn channel_uses(&self) -> usize {
        match self.structure {
            Structure::PointToPoint | Structure::Serial => self.hops * self.subcarriers,
            Structure::Parallel | Structure::CrOverlay => 2 * self.subcarriers,
        }
    }
}

/// Hop lengths in meters along the source–destination line.
///
/// Serial and point-to-point chains split `d_sd` into `L` equal segments;
/// parallel and overlay structures place every relay at the midpoint.
pub fn node_positions(config: &ScenarioConfig) -> Vec<f64> {
    match config.structure {
        Structure::PointToPoint | Structure::Serial => {
            vec![config.d_sd / config.hops as f64; config.hops]
        }
        Structure::Parallel | Structure::CrOverlay => vec![config.d_sd / 2.0; 2],
    }
}

/// Result of one end-to-end block transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOutcome {
    pub bits_sent: u32,
    pub bit_errors: u32,
    pub block_error: bool,
    pub outage: bool,
    pub channel_uses: u32,
    /// Per-user detail for the overlay structure.
    pub overlay: Option<OverlayOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OverlayOutcome {
    pub primary_bits: u32,
    pub primary_bit_errors: u32,
    pub primary_block_error: bool,
    /// Primary errors when the PR ignores the secondary transmitter's phase.
    pub primary_bit_errors_direct: u32,
    pub secondary_bits: u32,
    pub secondary_bit_errors: u32,
    pub secondary_block_error: bool,
}

/// Channel realizations and decisions behind a [`TrialOutcome`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    /// Pattern of the block whose active subcarriers define outage: the
    /// source's for relay chains, the secondary transmitter's for overlay.
    pub sap_index: usize,
    /// Serial: hop order. Parallel: `T` first-hop links then `T` second-hop
    /// links. Overlay: PT→PR, PT→ST, ST→PR, ST→SR.
    pub links: Vec<HopChannel>,
    /// Parallel: serving relay per subcarrier. Empty otherwise.
    pub route: Vec<usize>,
    /// Whether each detecting node (relays in order, then the destination)
    /// decided differently from what it was sent.
    pub hop_block_errors: Vec<bool>,
}

/// A validated configuration ready to run trials.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    modem: ImModem,
    hop_distances: Vec<f64>,
    noise: NoiseModel,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let modem = ImModem::new(config.subcarriers, config.active, config.psk_order)?;
        let noise = NoiseModel::new(config.noise_var)?;
        let hop_distances = node_positions(&config);
        Ok(Scenario {
            config,
            modem,
            hop_distances,
            noise,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn modem(&self) -> &ImModem {
        &self.modem
    }

    pub fn hop_distances(&self) -> &[f64] {
        &self.hop_distances
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    /// Bits carried per end-to-end trial (both users for overlay).
    pub fn bits_per_block(&self) -> usize {
        self.modem.bits_per_block()
    }

    pub fn run_trial<R: Rng + ?Sized>(&self, rng: &mut R) -> TrialOutcome {
        self.run_trial_traced(rng).0
    }

    pub fn run_trial_traced<R: Rng + ?Sized>(&self, rng: &mut R) -> (TrialOutcome, TrialTrace) {
        match (self.config.structure, self.config.protocol) {
            (Structure::PointToPoint | Structure::Serial, Protocol::DecodeForward) => {
                serial::df_trial(self, rng)
            }
            (Structure::Serial, _) => serial::af_trial(self, rng),
            (Structure::Parallel, _) => parallel::trial(self, rng),
            (Structure::CrOverlay, _) => overlay::trial(self, rng),
            (Structure::PointToPoint, _) => unreachable!("rejected by validate"),
        }
    }

    /// Per-subcarrier SNR `(Pt/K)·|g|²/σ²` of a DF link.
    pub(crate) fn link_snr(&self, power: f64) -> f64 {
        self.config.pt / self.config.active as f64 * power / self.config.noise_var
    }

    pub(crate) fn sample_hop<R: Rng + ?Sized>(&self, rng: &mut R, distance: f64) -> HopChannel {
        HopChannel::sample(rng, self.config.subcarriers, distance, self.config.alpha)
            .expect("distances are validated positive")
    }
}

/// Uniform random bits, drawn 64 at a time.
pub(crate) fn random_bits<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<bool> {
    let mut bits = Vec::with_capacity(count);
    while bits.len() < count {
        let word: u64 = rng.random();
        let take = (count - bits.len()).min(64);
        bits.extend((0..take).map(|i| (word >> i) & 1 == 1));
    }
    bits
}

pub(crate) fn count_bit_errors(a: &[bool], b: &[bool]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}
