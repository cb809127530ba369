//! Analytic vs simulated latency over an SNR sweep at three cell radii.

use broadcast_latency::latency::expected_latency;
use broadcast_latency::simulator::run_batch;
use broadcast_latency::{NetworkConfig, ProtocolKind};

fn main() -> broadcast_latency::Result<()> {
    println!("{:>4} {:>6} {:>16} {:>9} {:>9} {:>7}", "R", "SNR", "protocol", "analytic", "simulated", "se");
    for radius in [1.0, 2.0, 3.0] {
        for snr in (0..=20).step_by(4) {
            let cfg = NetworkConfig::with_snr_db(5, radius, 2, 2.0, 1.0, f64::from(snr))?;
            for proto in ProtocolKind::ALL {
                let a = expected_latency(&cfg, proto, 1e-9)?.expected_k;
                let s = run_batch(&cfg, proto, 1000, 7)?;
                println!("{radius:>4} {snr:>6} {proto:>16} {a:>9.3} {:>9.3} {:>7.3}", s.mean_k, s.std_err);
            }
        }
    }
    Ok(())
}
