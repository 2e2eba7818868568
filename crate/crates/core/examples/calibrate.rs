//! Measures the overfitting bias of the known- and unknown-features attacks
//! and expresses it in units of the bound shapes `√(k/(mn))` and
//! `k/(n ln m)`.
//!
//! cargo run --release -p hamming-overfit --example calibrate [trials]

use std::time::Instant;

use hamming_overfit::harness::{run_sweep, AttackId, ExperimentConfig};

fn main() {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let small = [
        (10_000, 10, 11),
        (10_000, 10, 51),
        (10_000, 10, 501),
        (2000, 4, 20),
        (1000, 2, 5),
    ];
    let large = [(2000, 4, 200), (2000, 4, 400), (1000, 3, 100), (5000, 10, 400)];
    println!("attack,n,m,k,trials,mean,se,bias_over_shape,seconds");
    for (attacks, points, small_shape) in [
        ([AttackId::Small, AttackId::SmallUnknown], &small[..], true),
        ([AttackId::Large, AttackId::LargeUnknown], &large[..], false),
    ] {
        for &(n, m, k) in points {
            for attack in attacks {
                let cfg = ExperimentConfig::new(attack, n, m, k, trials, 20_240_601);
                let clock = Instant::now();
                let g = &run_sweep(&cfg).expect("sweep").summary.grid[0];
                let shape = if small_shape {
                    (k as f64 / (m as f64 * n as f64)).sqrt()
                } else {
                    k as f64 / (n as f64 * (m as f64).ln())
                };
                let bias = g.mean - 1.0 / m as f64;
                println!(
                    "{attack},{n},{m},{k},{trials},{:.6},{:.2e},{:.4},{:.1}",
                    g.mean,
                    g.se,
                    bias / shape,
                    clock.elapsed().as_secs_f64()
                );
            }
        }
    }
}
