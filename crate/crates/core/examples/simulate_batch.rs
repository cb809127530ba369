//! Monte-Carlo batch with a fixed seed; prints the summary and the empirical pmf.

use broadcast_latency::simulator::run_batch;
use broadcast_latency::{NetworkConfig, ProtocolKind};

fn main() -> broadcast_latency::Result<()> {
    let cfg = NetworkConfig::with_snr_db(5, 2.0, 2, 2.0, 1.0, 5.0)?;
    for proto in ProtocolKind::ALL {
        let s = run_batch(&cfg, proto, 10_000, 42)?;
        println!(
            "{proto}: mean {:.3} +- {:.3}, 95% CI [{:.3}, {:.3}]",
            s.mean_k, s.std_err, s.ci95.0, s.ci95.1
        );
        for (k, p) in s.empirical_pmf.iter().enumerate().take(8) {
            println!("  K={:<2} {:.4} {}", k + 1, p, "#".repeat((p * 60.0) as usize));
        }
    }
    Ok(())
}
