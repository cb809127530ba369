//! Simulated latency surface over cell radius and node density at 5 dB.

use broadcast_latency::simulator::run_density_sweep;
use broadcast_latency::{NetworkConfig, ProtocolKind};

fn main() -> broadcast_latency::Result<()> {
    let radii = [1.0, 1.5, 2.0, 2.5, 3.0];
    let template = NetworkConfig::with_snr_db(1, 1.0, 2, 2.0, 1.0, 5.0)?;
    for proto in ProtocolKind::ALL {
        println!("{proto}");
        print!("{:>6}", "rho\\R");
        for r in radii {
            print!("{r:>9}");
        }
        println!();
        for rho in [0.25, 0.5, 1.0, 2.0] {
            print!("{rho:>6}");
            for p in run_density_sweep(rho, &radii, &template, proto, 1000, 3)? {
                print!("{:>5.2}({:>2})", p.summary.mean_k, p.n_nodes);
            }
            println!();
        }
    }
    Ok(())
}
