//! Slot-by-slot Monte-Carlo simulation of both broadcast protocols.
//!
//! Every slot redraws the positions of all nodes that take part (high mobility), draws
//! an independent `Exp(1)` fading power per receiver and applies the threshold test
//! against the serving transmitter: the source at the origin, or in cooperative mode
//! the nearest already-reached node. Concurrent transmissions are not treated as
//! interference.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::NetworkConfig;
use crate::error::{Error, Result};
use crate::point_process::{nearest_distance, sample_bpp_into, PointSet};
use crate::special_fn::NeumaierSum;

/// Default cap on slots per trial.
pub const SLOT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    NonCooperative,
    Cooperative,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 2] = [ProtocolKind::NonCooperative, ProtocolKind::Cooperative];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::NonCooperative => "non-cooperative",
            ProtocolKind::Cooperative => "cooperative",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "non-cooperative" | "noncooperative" | "noncoop" | "nc" => Ok(ProtocolKind::NonCooperative),
            "cooperative" | "coop" | "c" => Ok(ProtocolKind::Cooperative),
            other => Err(Error::Validation(format!("unknown protocol '{other}'"))),
        }
    }
}

/// Outcome of one broadcast.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// New successes in each slot; sums to `N`, last entry is positive.
    pub per_slot_successes: Vec<u32>,
}

impl TrialRecord {
    pub fn slots_used(&self) -> usize {
        self.per_slot_successes.len()
    }
}

/// Aggregate of a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub n_trials: usize,
    pub mean_k: f64,
    pub std_err: f64,
    pub ci95: (f64, f64),
    /// `empirical_pmf[i]` is the fraction of trials that needed `i + 1` slots.
    pub empirical_pmf: Vec<f64>,
    pub seed: u64,
}

/// RNG for trial `index` of a batch: the master seed keys the generator and the trial
/// index selects an independent ChaCha stream.
pub fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn run_trial<R: Rng + ?Sized>(cfg: &NetworkConfig, protocol: ProtocolKind, rng: &mut R) -> Result<TrialRecord> {
    run_trial_capped(cfg, protocol, rng, SLOT_CAP)
}

pub fn run_trial_capped<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    protocol: ProtocolKind,
    rng: &mut R,
    slot_cap: u64,
) -> Result<TrialRecord> {
    let n = cfg.n_nodes();
    let theta = cfg.threshold();
    let alpha = cfg.path_loss_exponent();
    let window = cfg.window();
    let d = cfg.dims() as usize;

    let mut receiver = [0.0f64; 3];
    let origin = [0.0f64; 3];
    let mut relays = PointSet::new(cfg.dims());
    let mut reached = 0u32;
    let mut per_slot = Vec::new();

    while reached < n {
        if per_slot.len() as u64 >= slot_cap {
            return Err(Error::SlotCapExceeded(slot_cap));
        }
        // the source transmits until someone holds the message; after that, in
        // cooperative mode, only reached nodes do
        let relaying = protocol == ProtocolKind::Cooperative && reached > 0;
        if relaying {
            sample_bpp_into(&mut relays, reached as usize, &window, rng);
        }
        let mut successes = 0;
        for _ in 0..(n - reached) {
            window.sample_point(rng, &mut receiver[..d]);
            let r = if relaying {
                nearest_distance(&receiver[..d], &relays)?
            } else {
                receiver[..d].iter().zip(&origin).map(|(x, o)| (x - o) * (x - o)).sum::<f64>().sqrt()
            };
            let fading: f64 = rng.sample(Exp1);
            if fading / (1.0 + r.powf(alpha)) >= theta {
                successes += 1;
            }
        }
        per_slot.push(successes);
        reached += successes;
    }
    Ok(TrialRecord { per_slot_successes: per_slot })
}

/// Runs `n_trials` trials in parallel; trial `i` always uses [`trial_rng`]`(seed, i)`.
pub fn run_batch_records(
    cfg: &NetworkConfig,
    protocol: ProtocolKind,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    if n_trials < 1 {
        return Err(Error::domain("a batch needs at least one trial"));
    }
    (0..n_trials)
        .into_par_iter()
        .map(|i| {
            run_trial(cfg, protocol, &mut trial_rng(seed, i)).map_err(|e| Error::Trial {
                index: i,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn run_batch(cfg: &NetworkConfig, protocol: ProtocolKind, n_trials: usize, seed: u64) -> Result<SimSummary> {
    let records = run_batch_records(cfg, protocol, n_trials, seed)?;
    Ok(summarize(&records, seed))
}

/// Order-preserving aggregation; the result depends only on the record sequence.
pub fn summarize(records: &[TrialRecord], seed: u64) -> SimSummary {
    let n = records.len();
    let ks: Vec<f64> = records.iter().map(|r| r.slots_used() as f64).collect();
    let mean = ks.iter().copied().collect::<NeumaierSum>().total() / n as f64;
    let var = if n > 1 {
        ks.iter().map(|k| (k - mean) * (k - mean)).collect::<NeumaierSum>().total() / (n - 1) as f64
    } else {
        0.0
    };
    let std_err = (var / n as f64).sqrt();
    let max_k = records.iter().map(TrialRecord::slots_used).max().unwrap_or(0);
    let mut counts = vec![0usize; max_k];
    for r in records {
        counts[r.slots_used() - 1] += 1;
    }
    SimSummary {
        n_trials: n,
        mean_k: mean,
        std_err,
        ci95: (mean - 1.96 * std_err, mean + 1.96 * std_err),
        empirical_pmf: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        seed,
    }
}

/// `N = ceil(rho pi R^2)`, treating values within 1e-9 (relative) of an integer as that integer.
pub fn nodes_for_density(rho: f64, radius: f64) -> u32 {
    let v = rho * std::f64::consts::PI * radius * radius;
    let nearest = v.round();
    let n = if (v - nearest).abs() <= 1e-9 * v.max(1.0) { nearest } else { v.ceil() };
    (n as u32).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityPoint {
    pub rho: f64,
    pub radius: f64,
    pub n_nodes: u32,
    pub summary: SimSummary,
}

/// One batch per radius with the node count set by the density; the template supplies
/// everything else (including the SNR). Planar windows only.
pub fn run_density_sweep(
    rho: f64,
    radius_grid: &[f64],
    template: &NetworkConfig,
    protocol: ProtocolKind,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<DensityPoint>> {
    if template.dims() != 2 {
        return Err(Error::domain("density sweeps are defined for planar (d = 2) cells"));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::domain(format!("density must be positive, got {rho}")));
    }
    radius_grid
        .iter()
        .map(|&radius| {
            let n_nodes = nodes_for_density(rho, radius);
            let cfg = template.with_radius(radius)?.with_nodes(n_nodes)?;
            let summary = run_batch(&cfg, protocol, n_trials, seed)?;
            Ok(DensityPoint { rho, radius, n_nodes, summary })
        })
        .collect()
}
