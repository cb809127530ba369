//! Broadcast latency distributions.
//!
//! The number of reached nodes `T` after each slot is a Markov chain on `0..=N`,
//! absorbing at `N`: a slot's outcome depends only on how many nodes are still
//! waiting and (for cooperation) how many already transmit. Three routes compute the
//! latency law from the per-state [`StageDistribution`]s:
//!
//! - [`latency_pmf_enumeration`]: explicit sum over every outcome sequence
//!   `(S_1, ..., S_k)`, products accumulated in log domain. Exponential cost, used as
//!   the reference for small instances.
//! - [`latency_pmf_markov`] / [`expected_latency`]: forward propagation of the state
//!   distribution, `O(N^2)` per slot.
//! - [`expected_latency_absorption`]: back-substitution of the absorption-time
//!   equations, exact mean with no truncation.

use serde::{Deserialize, Serialize};

use crate::channel::{stage_success_pmf_coop, stage_success_pmf_noncoop, NetworkConfig};
use crate::error::{Error, Result};
use crate::simulator::ProtocolKind;
use crate::special_fn::{composition_count, ln_binomial_pmf, NeumaierSum};

/// Maximum number of outcome sequences [`latency_pmf_enumeration`] will visit.
pub const ENUMERATION_BUDGET: u64 = 5_000_000;

/// Operation count above which [`estimate_enumeration_cost`] reports enumeration as infeasible.
pub const ENUMERATION_OPS_BUDGET: f64 = 1e9;

pub const DEFAULT_TAIL_TOL: f64 = 1e-9;

/// Hard cap on the truncation point used by [`expected_latency`].
pub const K_PRIME_CAP: usize = 10_000;

/// Probabilities of `s = 0..=n_receivers` new successes in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct StageDistribution {
    probs: Vec<f64>,
}

impl StageDistribution {
    /// `Binomial(n, p_success)`; the failure probability is passed separately so it is
    /// not recomputed as `1 - p_success`.
    pub fn binomial(n: u32, p_success: f64, p_failure: f64) -> Self {
        let probs = (0..=n)
            .map(|s| ln_binomial_pmf(u64::from(n), u64::from(s), p_success, p_failure).exp())
            .collect();
        Self { probs }
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("stage distribution cannot be empty"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::domain("stage probabilities must lie in [0, 1]"));
        }
        let total: NeumaierSum = probs.iter().copied().collect();
        if (total.total() - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "stage probabilities sum to {}, not 1",
                total.total()
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_receivers(&self) -> u32 {
        (self.probs.len() - 1) as u32
    }

    /// Probability of at least one new success, summed rather than taken as `1 - P(0)`.
    pub fn progress_prob(&self) -> f64 {
        self.probs[1..].iter().copied().collect::<NeumaierSum>().total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Enumeration,
    MarkovDp,
}

/// Truncated latency law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyResult {
    /// `pmf[i] = P(K = i + 1)` for `i < k_prime`.
    pub pmf: Vec<f64>,
    /// `sum k P(K = k)` over the retained range.
    pub expected_k: f64,
    pub k_prime: usize,
    /// `P(K > k_prime)`.
    pub tail_mass: f64,
    pub method: Method,
}

impl LatencyResult {
    /// `P(K = k)`, zero outside `1..=k_prime`.
    pub fn prob(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.pmf.get(k - 1).copied().unwrap_or(0.0)
        }
    }
}

/// Per-state slot outcome laws: `rows[t]` is the distribution of new successes when
/// `t` nodes are already reached.
#[derive(Debug, Clone)]
pub struct TransitionModel {
    n_nodes: u32,
    rows: Vec<StageDistribution>,
}

impl TransitionModel {
    pub fn new(cfg: &NetworkConfig, protocol: ProtocolKind) -> Result<Self> {
        let n = cfg.n_nodes();
        let rows = (0..n)
            .map(|t| match protocol {
                ProtocolKind::NonCooperative => stage_success_pmf_noncoop(n - t, cfg),
                ProtocolKind::Cooperative => stage_success_pmf_coop(n - t, t, cfg),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_nodes: n, rows })
    }

    pub fn n_nodes(&self) -> u32 {
        self.n_nodes
    }

    pub fn row(&self, reached: u32) -> &StageDistribution {
        &self.rows[reached as usize]
    }

    /// Smallest per-slot probability of making progress over all transient states.
    pub fn min_progress_prob(&self) -> f64 {
        self.rows
            .iter()
            .map(StageDistribution::progress_prob)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Forward pass over the transient states `0..N`.
struct ForwardChain<'a> {
    model: &'a TransitionModel,
    dist: Vec<f64>,
}

impl<'a> ForwardChain<'a> {
    fn new(model: &'a TransitionModel) -> Self {
        let mut dist = vec![0.0; model.n_nodes as usize];
        dist[0] = 1.0;
        Self { model, dist }
    }

    /// Advances one slot and returns the mass absorbed in it.
    fn step(&mut self) -> f64 {
        let n = self.model.n_nodes as usize;
        let mut next = vec![NeumaierSum::default(); n + 1];
        for (t, &mass) in self.dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (s, &p) in self.model.rows[t].probs.iter().enumerate() {
                next[t + s].add(mass * p);
            }
        }
        for (slot, acc) in self.dist.iter_mut().zip(&next) {
            *slot = acc.total();
        }
        next[n].total()
    }

    fn transient_mass(&self) -> f64 {
        self.dist.iter().copied().collect::<NeumaierSum>().total()
    }
}

/// `P(K = k)` by summing over every outcome sequence that first reaches all nodes in slot `k`.
pub fn latency_pmf_enumeration(cfg: &NetworkConfig, protocol: ProtocolKind, k: usize) -> Result<f64> {
    latency_pmf_enumeration_with_budget(cfg, protocol, k, ENUMERATION_BUDGET)
}

pub fn latency_pmf_enumeration_with_budget(
    cfg: &NetworkConfig,
    protocol: ProtocolKind,
    k: usize,
    budget: u64,
) -> Result<f64> {
    let model = TransitionModel::new(cfg, protocol)?;
    let ln_rows = ln_rows(&model);
    enumerate_k(&model, &ln_rows, k, budget)
}

fn ln_rows(model: &TransitionModel) -> Vec<Vec<f64>> {
    model
        .rows
        .iter()
        .map(|r| r.probs.iter().map(|p| p.ln()).collect())
        .collect()
}

fn enumerate_k(model: &TransitionModel, ln_rows: &[Vec<f64>], k: usize, budget: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::domain("slot index k must be at least 1"));
    }
    let n = model.n_nodes;
    let required = composition_count(u64::from(n), k as u64)?.as_f64();
    if required > budget as f64 {
        return Err(Error::EnumerationBudget { required, budget });
    }

    // stages 1..k-1 may add any count that keeps the total below n; stage k finishes
    fn walk(stage: usize, k: usize, reached: u32, n: u32, log_p: f64, ln_rows: &[Vec<f64>], acc: &mut NeumaierSum) {
        let row = &ln_rows[reached as usize];
        if stage == k {
            acc.add((log_p + row[(n - reached) as usize]).exp());
            return;
        }
        for s in 0..(n - reached) {
            let lp = log_p + row[s as usize];
            if lp == f64::NEG_INFINITY {
                continue;
            }
            walk(stage + 1, k, reached + s, n, lp, ln_rows, acc);
        }
    }

    let mut acc = NeumaierSum::default();
    walk(1, k, 0, n, 0.0, ln_rows, &mut acc);
    Ok(acc.total())
}

/// Enumeration for every `k` in `1..=k_prime`, packaged like the forward pass.
pub fn latency_distribution_enumeration(
    cfg: &NetworkConfig,
    protocol: ProtocolKind,
    k_prime: usize,
) -> Result<LatencyResult> {
    if k_prime < 1 {
        return Err(Error::domain("k_prime must be at least 1"));
    }
    let model = TransitionModel::new(cfg, protocol)?;
    let ln_rows = ln_rows(&model);
    let pmf = (1..=k_prime)
        .map(|k| enumerate_k(&model, &ln_rows, k, ENUMERATION_BUDGET))
        .collect::<Result<Vec<_>>>()?;
    let expected: NeumaierSum = pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).collect();
    let retained: NeumaierSum = pmf.iter().copied().collect();
    Ok(LatencyResult {
        expected_k: expected.total(),
        k_prime,
        tail_mass: (1.0 - retained.total()).max(0.0),
        pmf,
        method: Method::Enumeration,
    })
}

/// Forward Markov pass for a fixed truncation `k_prime`.
pub fn latency_pmf_markov(cfg: &NetworkConfig, protocol: ProtocolKind, k_prime: usize) -> Result<LatencyResult> {
    if k_prime < 1 {
        return Err(Error::domain("k_prime must be at least 1"));
    }
    let model = TransitionModel::new(cfg, protocol)?;
    let mut chain = ForwardChain::new(&model);
    let pmf: Vec<f64> = (0..k_prime).map(|_| chain.step()).collect();
    let expected: NeumaierSum = pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).collect();
    Ok(LatencyResult {
        expected_k: expected.total(),
        k_prime,
        tail_mass: chain.transient_mass().max(0.0),
        pmf,
        method: Method::MarkovDp,
    })
}

/// Expected latency with the truncation point grown until both the leftover mass and
/// a bound on its contribution to the mean fall below `tail_tol` (the latter relative
/// to the mean).
///
/// The contribution of `K > K'` is bounded by `P(K > K') (K' + N / p_min)`, where
/// `p_min` is the smallest per-slot progress probability over transient states.
pub fn expected_latency(cfg: &NetworkConfig, protocol: ProtocolKind, tail_tol: f64) -> Result<LatencyResult> {
    expected_latency_capped(cfg, protocol, tail_tol, K_PRIME_CAP)
}

pub fn expected_latency_capped(
    cfg: &NetworkConfig,
    protocol: ProtocolKind,
    tail_tol: f64,
    cap: usize,
) -> Result<LatencyResult> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::domain(format!("tail tolerance must be in (0, 1), got {tail_tol}")));
    }
    let model = TransitionModel::new(cfg, protocol)?;
    let p_min = model.min_progress_prob();
    if !(p_min > 0.0) {
        return Err(Error::NonConvergence(
            "per-slot success probability underflows to zero".into(),
        ));
    }
    let residual_slots = f64::from(model.n_nodes) / p_min;
    let mut chain = ForwardChain::new(&model);
    let mut pmf = Vec::new();
    let mut expected = NeumaierSum::default();
    loop {
        let k = pmf.len() + 1;
        let p = chain.step();
        pmf.push(p);
        expected.add(k as f64 * p);
        let tail = chain.transient_mass().max(0.0);
        let mean = expected.total();
        if tail < tail_tol && tail * (k as f64 + residual_slots) < tail_tol * mean {
            return Ok(LatencyResult {
                pmf,
                expected_k: mean,
                k_prime: k,
                tail_mass: tail,
                method: Method::MarkovDp,
            });
        }
        if k >= cap {
            return Err(Error::NonConvergence(format!(
                "tail mass {tail:e} after {k} slots (cap {cap})"
            )));
        }
    }
}

/// Exact mean absorption time from the empty state:
/// `E_t = (1 + sum_{s>=1} P(s|t) E_{t+s}) / (1 - P(0|t))`, `E_N = 0`.
pub fn expected_latency_absorption(cfg: &NetworkConfig, protocol: ProtocolKind) -> Result<f64> {
    let model = TransitionModel::new(cfg, protocol)?;
    let n = model.n_nodes as usize;
    let mut e = vec![0.0; n + 1];
    for t in (0..n).rev() {
        let row = &model.rows[t];
        let progress = row.progress_prob();
        if !(progress > 0.0) {
            return Err(Error::NonConvergence(format!(
                "no progress possible from state {t}"
            )));
        }
        let mut acc = NeumaierSum::default();
        acc.add(1.0);
        for (s, &p) in row.probs.iter().enumerate().skip(1) {
            acc.add(p * e[t + s]);
        }
        e[t] = acc.total() / progress;
    }
    Ok(e[0])
}

/// Operation count `sum_{k=1}^{K'} X^k C(N, k)` for evaluating the mean by enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostEstimate {
    pub operations: f64,
    /// Set when the sum left the `f64` range; `operations` is then `+inf`.
    pub overflow: bool,
}

impl CostEstimate {
    pub fn feasible(&self) -> bool {
        !self.overflow && self.operations <= ENUMERATION_OPS_BUDGET
    }
}

pub fn estimate_enumeration_cost(n_nodes: u64, k_prime: u64, ops_per_eval: u64) -> Result<CostEstimate> {
    if n_nodes < 1 || k_prime < 1 || ops_per_eval < 1 {
        return Err(Error::domain("cost estimate needs positive N, K' and X"));
    }
    let x = ops_per_eval as f64;
    let mut total = NeumaierSum::default();
    for k in 1..=k_prime {
        let term = x.powf(k as f64) * composition_count(n_nodes, k)?.as_f64();
        total.add(term);
        if !total.total().is_finite() {
            return Ok(CostEstimate { operations: f64::INFINITY, overflow: true });
        }
    }
    Ok(CostEstimate { operations: total.total(), overflow: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{cdf_z, ccdf_z};
    use proptest::prelude::*;

    const BOTH: [ProtocolKind; 2] = [ProtocolKind::NonCooperative, ProtocolKind::Cooperative];

    fn cfg(n: u32, radius: f64, snr_db: f64) -> NetworkConfig {
        NetworkConfig::with_snr_db(n, radius, 2, 2.0, 1.0, snr_db).unwrap()
    }

    #[test]
    fn stage_distribution_validation() {
        assert!(StageDistribution::from_probs(vec![]).is_err());
        assert!(StageDistribution::from_probs(vec![0.5, 0.6]).is_err());
        assert!(StageDistribution::from_probs(vec![-0.1, 1.1]).is_err());
        let d = StageDistribution::from_probs(vec![0.25, 0.75]).unwrap();
        assert_eq!(d.n_receivers(), 1);
        assert_eq!(d.progress_prob(), 0.75);
    }

    #[test]
    fn single_node_single_slot() {
        let c = cfg(1, 2.0, 5.0);
        let q = cdf_z(c.threshold(), &c).unwrap();
        for p in BOTH {
            let v = latency_pmf_enumeration(&c, p, 1).unwrap();
            assert!((v - (1.0 - q)).abs() < 1e-14);
        }
    }

    #[test]
    fn two_nodes_hand_expansion() {
        let c = cfg(2, 2.0, 5.0);
        let q = cdf_z(c.threshold(), &c).unwrap();
        let p = 1.0 - q;
        let k1 = latency_pmf_enumeration(&c, ProtocolKind::NonCooperative, 1).unwrap();
        assert!((k1 - p * p).abs() < 1e-14);
        // (S1, S2) in {(0, 2), (1, 1)}
        let k2 = latency_pmf_enumeration(&c, ProtocolKind::NonCooperative, 2).unwrap();
        let hand = q * q * p * p + 2.0 * p * q * p;
        assert!((k2 - hand).abs() < 1e-14, "{k2} vs {hand}");
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let c = cfg(10, 2.0, 5.0);
        let r = latency_pmf_enumeration_with_budget(&c, ProtocolKind::NonCooperative, 12, 1000);
        assert!(matches!(r, Err(Error::EnumerationBudget { .. })));
        assert!(latency_pmf_enumeration(&c, ProtocolKind::NonCooperative, 0).is_err());
    }

    #[test]
    fn markov_matches_enumeration() {
        for &(radius, snr) in &[(1.0, 0.0), (2.0, 5.0), (3.0, 12.0)] {
            for n in 1..=4 {
                for p in BOTH {
                    let c = cfg(n, radius, snr);
                    let dp = latency_pmf_markov(&c, p, 6).unwrap();
                    for k in 1..=6 {
                        let e = latency_pmf_enumeration(&c, p, k).unwrap();
                        assert!((dp.prob(k) - e).abs() < 1e-10, "N={n} k={k} {p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn geometric_single_node() {
        let c = cfg(1, 2.0, 5.0);
        let p = ccdf_z(c.threshold(), &c).unwrap();
        for proto in BOTH {
            let r = expected_latency(&c, proto, 1e-12).unwrap();
            assert!((r.expected_k - 1.0 / p).abs() < 1e-9);
            for k in 1..10 {
                let g = (1.0 - p).powi(k as i32 - 1) * p;
                assert!((r.prob(k) - g).abs() < 1e-14);
            }
            let abs = expected_latency_absorption(&c, proto).unwrap();
            assert!((abs - 1.0 / p).abs() < 1e-12);
        }
    }

    #[test]
    fn half_failure_gives_mean_two() {
        // find theta with F_Z(theta) = 0.5 by bisection
        let base = cfg(1, 2.0, 0.0);
        let (mut lo, mut hi) = (1e-6, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf_z(mid, &base).unwrap() < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c = base.with_threshold(0.5 * (lo + hi)).unwrap();
        let r = expected_latency(&c, ProtocolKind::NonCooperative, 1e-12).unwrap();
        assert!((r.expected_k - 2.0).abs() < 1e-9);
        for k in 1..20 {
            assert!((r.prob(k) - 0.5f64.powi(k as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_meets_tolerance() {
        let c = cfg(5, 3.0, 0.0);
        for proto in BOTH {
            let r = expected_latency(&c, proto, DEFAULT_TAIL_TOL).unwrap();
            assert!(r.tail_mass < DEFAULT_TAIL_TOL);
            assert_eq!(r.pmf.len(), r.k_prime);
            let exact = expected_latency_absorption(&c, proto).unwrap();
            assert!((r.expected_k - exact).abs() < 1e-8 * exact, "{} vs {exact}", r.expected_k);
            assert!(r.expected_k >= 1.0);
        }
    }

    #[test]
    fn tail_shrinks_with_k_prime() {
        let c = cfg(4, 2.0, 3.0);
        let mut prev = 1.0;
        for k in [1, 5, 10, 20, 40] {
            let r = latency_pmf_markov(&c, ProtocolKind::Cooperative, k).unwrap();
            let total: f64 = r.pmf.iter().sum::<f64>() + r.tail_mass;
            assert!((total - 1.0).abs() < 1e-12);
            assert!(r.tail_mass <= prev);
            prev = r.tail_mass;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn degenerate_config_is_reported() {
        let c = cfg(3, 3.0, 0.0).with_threshold(1e6).unwrap();
        assert!(matches!(
            expected_latency(&c, ProtocolKind::NonCooperative, 1e-9),
            Err(Error::NonConvergence(_))
        ));
        assert!(matches!(
            expected_latency_absorption(&c, ProtocolKind::NonCooperative),
            Err(Error::NonConvergence(_))
        ));
        // reachable but too slow for the cap
        let c = cfg(3, 3.0, 0.0).with_threshold(8.0).unwrap();
        assert!(matches!(
            expected_latency_capped(&c, ProtocolKind::NonCooperative, 1e-9, 50),
            Err(Error::NonConvergence(_))
        ));
    }

    #[test]
    fn first_slot_is_protocol_independent() {
        let c = cfg(5, 2.0, 4.0);
        let a = TransitionModel::new(&c, ProtocolKind::NonCooperative).unwrap();
        let b = TransitionModel::new(&c, ProtocolKind::Cooperative).unwrap();
        assert_eq!(a.row(0), b.row(0));
    }

    #[test]
    fn monotone_and_cooperation_helps() {
        for &radius in &[1.0, 2.0, 3.0] {
            for n in 1..=6 {
                let mut prev = [f64::INFINITY; 2];
                for snr in (0..=20).step_by(2) {
                    let c = cfg(n, radius, f64::from(snr));
                    let nc = expected_latency_absorption(&c, ProtocolKind::NonCooperative).unwrap();
                    let co = expected_latency_absorption(&c, ProtocolKind::Cooperative).unwrap();
                    assert!(co <= nc + 1e-12, "R={radius} N={n} snr={snr}");
                    assert!(nc <= prev[0] + 1e-12 && co <= prev[1] + 1e-12);
                    prev = [nc, co];
                    // extra nodes also relay, so only the non-cooperative mean is monotone in N
                    if n > 1 {
                        let smaller = c.with_nodes(n - 1).unwrap();
                        for proto in [ProtocolKind::NonCooperative] {
                            let lo = expected_latency_absorption(&smaller, proto).unwrap();
                            let hi = expected_latency_absorption(&c, proto).unwrap();
                            assert!(lo <= hi + 1e-12, "R={radius} N={n} snr={snr} {proto:?} {lo} {hi}");
                        }
                    }
                    if radius > 1.0 {
                        let inner = c.with_radius(radius - 1.0).unwrap();
                        for proto in BOTH {
                            let lo = expected_latency_absorption(&inner, proto).unwrap();
                            let hi = expected_latency_absorption(&c, proto).unwrap();
                            assert!(lo <= hi + 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cost_examples() {
        let c = estimate_enumeration_cost(1, 1, 10).unwrap();
        assert_eq!(c.operations, 10.0);
        assert_eq!(estimate_enumeration_cost(3, 2, 2).unwrap().operations, 14.0);
        assert_eq!(estimate_enumeration_cost(5, 3, 4).unwrap().operations, 1044.0);
        let big = estimate_enumeration_cost(10, 25, 50).unwrap();
        assert!(big.operations.is_finite());
        assert!(!big.feasible());
        let huge = estimate_enumeration_cost(1000, 400, 1_000_000).unwrap();
        assert!(huge.overflow && huge.operations.is_infinite());
        assert!(estimate_enumeration_cost(0, 1, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn enumeration_equals_forward_pass(
            n in 1u32..=4,
            radius in 0.5f64..3.5,
            snr in -2.0f64..20.0,
            coop in any::<bool>(),
        ) {
            let proto = if coop { ProtocolKind::Cooperative } else { ProtocolKind::NonCooperative };
            let c = cfg(n, radius, snr);
            let dp = latency_pmf_markov(&c, proto, 6).unwrap();
            for k in 1..=6 {
                let e = latency_pmf_enumeration(&c, proto, k).unwrap();
                prop_assert!((dp.prob(k) - e).abs() < 1e-10);
            }
        }

        #[test]
        fn forward_pass_is_normalised(n in 1u32..=12, radius in 0.5f64..3.5, snr in 0.0f64..20.0) {
            let c = cfg(n, radius, snr);
            let r = expected_latency(&c, ProtocolKind::Cooperative, 1e-10).unwrap();
            let total: f64 = r.pmf.iter().sum::<f64>() + r.tail_mass;
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(r.pmf.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}
