//! Writes a synthetic curl-free field table (gradient of a random smooth
//! potential plus noise) for `lcgp real-experiment`.
//!
//! cargo run --release -p lcgp --example stand_in_field -- OUT.csv [ROWS] [SEED]

use std::path::PathBuf;

use lcgp::experiment::{write_field_csv, CurlFreeField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "stand_in_field.csv".into()));
    let rows: usize = args.next().map_or(2000, |s| s.parse().expect("ROWS must be an integer"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("SEED must be an integer"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = CurlFreeField::random(3, 50, 0.3, &mut rng);
    let (x, y) = field.sample(&[[0.0, 1.0]; 3], rows, 0.05, &mut rng);
    write_field_csv(&out, &x, &y).expect("write failed");
    println!("wrote {rows} rows to {}", out.display());
}
