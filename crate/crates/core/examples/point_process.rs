//! Uniform points in a disk and the distance from the centre to the nearest one,
//! sampled against the exact law.

use broadcast_latency::point_process::{nearest_distance, nn_ccdf, sample_bpp, DiskWindow};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> broadcast_latency::Result<()> {
    let window = DiskWindow::new(2.0, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = 4;
    let n = 100_000;
    let dists: Vec<f64> = (0..n)
        .map(|_| nearest_distance(&[0.0, 0.0], &sample_bpp(t, &window, &mut rng)).expect("points"))
        .collect();
    println!("nearest of {t} points in a disk of radius 2:");
    for r in [0.25, 0.5, 1.0, 1.5] {
        let empirical = dists.iter().filter(|&&d| d > r).count() as f64 / n as f64;
        println!("  P(r1 > {r:<4}) exact {:.4}  sampled {empirical:.4}", nn_ccdf(r, 1, t as u32, &window)?);
    }
    Ok(())
}
