//! Seeded Monte Carlo sweeps over transmit power.
//!
//! Trial `j` of grid point `i` always draws from the stream returned by
//! [`trial_rng`]`(seed, i, j)`, a ChaCha8 generator keyed by the master seed
//! whose 64-bit stream id encodes `(i, j)`. Trials are therefore independent
//! of scheduling, and a sweep gives the same counters for every worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{MetricAccumulator, MetricSummary};
use crate::relaying::{Scenario, ScenarioConfig};

const TRIAL_BITS: u32 = 40;
const CHUNK: u64 = 2048;

/// Generator for trial `trial` of grid point `point`.
///
/// Panics if `trial >= 2^40` or `point >= 2^24`.
pub fn trial_rng(master_seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    assert!(trial < 1 << TRIAL_BITS && point < 1 << (64 - TRIAL_BITS), "stream id overflow");
    let mut rng = ChaCha8Rng::from_seed(expand_seed(master_seed));
    rng.set_stream((point << TRIAL_BITS) | trial);
    rng
}

/// SplitMix64 expansion of a 64-bit seed into a 256-bit key.
fn expand_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        chunk.copy_from_slice(&(z ^ (z >> 31)).to_le_bytes());
    }
    key
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Experiment definition; its `pt` is replaced at every grid point.
    pub config: ScenarioConfig,
    /// Transmit powers `10·log10(Pt/σ²)`, strictly ascending.
    pub pt_grid_db: Vec<f64>,
    pub trials_per_point: u64,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.pt_grid_db.is_empty() {
            return Err(Error::param("transmit-power grid is empty"));
        }
        if self.pt_grid_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("transmit-power grid has a non-finite entry"));
        }
        if !self.pt_grid_db.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::param("transmit-power grid must be strictly ascending"));
        }
        if self.trials_per_point == 0 {
            return Err(Error::param("need at least one trial per point"));
        }
        if self.trials_per_point > 1 << TRIAL_BITS {
            return Err(Error::param("too many trials per point"));
        }
        self.config.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub pt_db: f64,
    pub counters: MetricAccumulator,
    pub summary: MetricSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn pt_grid_db(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.pt_db).collect()
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::param("worker count must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))
}

/// Runs `trials` trials of `scenario` as grid point `point` of a sweep.
pub fn run_point(
    scenario: &Scenario,
    point: u64,
    trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<MetricAccumulator> {
    pool(workers)?.install(|| accumulate_point(scenario, point, trials, master_seed))
}

fn accumulate_point(scenario: &Scenario, point: u64, trials: u64, master_seed: u64) -> Result<MetricAccumulator> {
    let empty = MetricAccumulator::new(
        scenario.config().channel_uses() as u32,
        scenario.bits_per_block() as u32,
        scenario.config().structure == crate::relaying::Structure::CrOverlay,
    );
    (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc = empty.clone();
            for trial in chunk * CHUNK..((chunk + 1) * CHUNK).min(trials) {
                let mut rng = trial_rng(master_seed, point, trial);
                acc.update(&scenario.run_trial(&mut rng))?;
            }
            Ok(acc)
        })
        .try_reduce(|| empty.clone(), |a, b| a.merge(&b))
}

pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    spec.validate()?;
    let pool = pool(workers)?;
    let points = spec
        .pt_grid_db
        .iter()
        .enumerate()
        .map(|(i, &pt_db)| {
            let scenario = Scenario::new(spec.config.clone().with_pt_db(pt_db))?;
            let counters = pool.install(|| {
                accumulate_point(&scenario, i as u64, spec.trials_per_point, spec.master_seed)
            })?;
            let summary = counters.summarize()?;
            Ok(SweepPoint { pt_db, counters, summary })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityEstimate {
    /// Least-squares slope of `−log10(BLER)` against `Pt_dB/10`.
    pub order: f64,
    pub points_used: Vec<f64>,
    /// Grid points inside the window skipped for having zero block errors.
    pub excluded_zero_error: Vec<f64>,
}

/// Fits the BLER decay slope over grid points with `low <= Pt_dB <= high`.
pub fn estimate_diversity_order(result: &SweepResult, window_db: (f64, f64)) -> Result<DiversityEstimate> {
    let (low, high) = window_db;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for p in result.points.iter().filter(|p| p.pt_db >= low && p.pt_db <= high) {
        let bler = p.summary.bler.estimate;
        if bler > 0.0 {
            xs.push(p.pt_db);
            ys.push(-bler.log10());
        } else {
            log::warn!("excluding {} dB from diversity fit: no block errors observed", p.pt_db);
            excluded.push(p.pt_db);
        }
    }
    if xs.len() < 2 {
        return Err(Error::Estimation(format!(
            "need two grid points with block errors in [{low}, {high}] dB, found {} ({} excluded for zero errors)",
            xs.len(),
            excluded.len()
        )));
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().map(|x| x / 10.0).sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let (sxy, sxx) = xs.iter().zip(&ys).fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        let dx = x / 10.0 - xbar;
        (sxy + dx * (y - ybar), sxx + dx * dx)
    });
    Ok(DiversityEstimate {
        order: sxy / sxx,
        points_used: xs,
        excluded_zero_error: excluded,
    })
}
