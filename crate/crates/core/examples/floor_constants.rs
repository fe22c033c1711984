//! Prints the derivative-floor constants table: half the smallest ratio
//! `floor / jet_norm` seen over random polynomials of each degree.

use kakeya_lab::sublevel::floor_ratio_minimum;

fn main() {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let mut running = f64::INFINITY;
    for d in 0..=20 {
        let m = floor_ratio_minimum(d, samples, 2024);
        running = running.min(0.5 * m);
        println!("{d:>2}  min ratio {m:.6e}  table {running:.4e}");
    }
}
