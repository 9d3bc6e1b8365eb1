//! Times the exhaustive solver on a random instance: `cargo run --release --example bench_exhaustive -- 24`.

use qcqo::qubo::{Exhaustive, QuboInstance, QuboSolver};
use rand::{Rng, SeedableRng};
use std::time::Instant;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(24);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let entries: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let q = QuboInstance::from_row_major(n, &entries).unwrap();
    let start = Instant::now();
    let r = Exhaustive::default().solve(&q, 0).unwrap();
    println!("n={n} energy={} in {:?}", r.energy, start.elapsed());
}
