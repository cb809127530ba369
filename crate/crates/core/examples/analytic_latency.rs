//! Expected broadcast latency from the Markov-chain model, both protocols.
//!
//! cargo run --example analytic_latency -- [nodes] [radius] [snr_db]

use broadcast_latency::latency::{expected_latency, DEFAULT_TAIL_TOL};
use broadcast_latency::{NetworkConfig, ProtocolKind};

fn main() -> broadcast_latency::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let nodes = args.first().map_or(5, |&n| n as u32);
    let radius = args.get(1).copied().unwrap_or(2.0);
    let snr_db = args.get(2).copied().unwrap_or(5.0);

    let cfg = NetworkConfig::with_snr_db(nodes, radius, 2, 2.0, 1.0, snr_db)?;
    println!("N={nodes} R={radius} SNR={snr_db} dB, threshold {:.4}", cfg.threshold());
    for proto in ProtocolKind::ALL {
        let res = expected_latency(&cfg, proto, DEFAULT_TAIL_TOL)?;
        println!("{proto:>16}: E[K] = {:.4} (K' = {}, tail {:.1e})", res.expected_k, res.k_prime, res.tail_mass);
        let head: Vec<String> = res.pmf.iter().take(6).map(|p| format!("{p:.4}")).collect();
        println!("{:>16}  P(K=1..6) = [{}]", "", head.join(", "));
    }
    Ok(())
}
