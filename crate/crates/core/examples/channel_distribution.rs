//! Link-level quantities: the compound fading/path-loss CDF and the success
//! probability with T cooperating transmitters.

use broadcast_latency::channel::{cdf_z, coop_success_prob, coop_success_prob_quadrature};
use broadcast_latency::NetworkConfig;

fn main() -> broadcast_latency::Result<()> {
    let cfg = NetworkConfig::with_snr_db(1, 2.0, 2, 2.0, 1.0, 5.0)?;
    println!("F_Z(theta) at R=2, alpha=2:");
    for theta in [0.01, 0.1, 0.3, 1.0, 3.0] {
        println!("  theta={theta:<5} {:.6}", cdf_z(theta, &cfg)?);
    }
    let theta = cfg.threshold();
    println!("success with T transmitters (theta = {theta:.4}):");
    for t in [1, 2, 4, 8, 16, 32] {
        println!(
            "  T={t:<3} {:.10}  (quadrature {:.10})",
            coop_success_prob(t, &cfg)?,
            coop_success_prob_quadrature(t, &cfg)?
        );
    }
    Ok(())
}
