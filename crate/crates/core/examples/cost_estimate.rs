//! How fast brute-force enumeration blows up compared with the Markov-chain route.

use std::time::Instant;

use broadcast_latency::latency::{estimate_enumeration_cost, expected_latency, ENUMERATION_OPS_BUDGET};
use broadcast_latency::{NetworkConfig, ProtocolKind};

fn main() -> broadcast_latency::Result<()> {
    println!("budget: {ENUMERATION_OPS_BUDGET:e} operations");
    let (k_prime, ops_per_eval) = (10, 4);
    println!("K' = {k_prime}, {ops_per_eval} operations per probability");
    for n in [2u32, 5, 10, 15, 30] {
        let est = estimate_enumeration_cost(u64::from(n), k_prime, ops_per_eval)?;
        let cfg = NetworkConfig::with_snr_db(n, 2.0, 2, 2.0, 1.0, 3.0)?;
        let start = Instant::now();
        let res = expected_latency(&cfg, ProtocolKind::Cooperative, 1e-9)?;
        println!(
            "N={n:<3} enumeration {:>10.3e} ops (feasible: {:<5})  markov: E[K]={:.3} in {:?}",
            est.operations,
            est.feasible(),
            res.expected_k,
            start.elapsed()
        );
    }
    Ok(())
}
