//! The search's inner-loop economics: evaluating a swap move by
//! rescanning only the affected row pairs instead of the whole double
//! sum, and checking the incremental deltas against full recomputes
//! along a random walk.
//!
//! Run with `cargo run --example incremental_deltas`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use udesign::{assemble, neighbor, wd_delta_swap, wd_squared, AugmentSpec, BlockingScheme};

fn main() -> udesign::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join("example2_d0.txt");
    let d0 = udesign::io::read_design(&path)?;
    let spec = AugmentSpec::new(&d0, 6, 2, BlockingScheme::None)?;

    // any balanced starting block works; walk from a deterministic one
    let d1: Vec<Vec<u32>> = (0..6).map(|i| vec![(i % 3) as u32; 10]).collect();
    let d2: Vec<Vec<u32>> = (0..6).map(|i| vec![1 + (i % 2) as u32; 2]).collect();
    let mut current = assemble(&spec, &d1, &d2)?;

    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut wd = wd_squared(current.full()).value;
    println!("start WD {wd:.8}");

    let mut worst_gap = 0.0f64;
    for step in 1..=2000 {
        let (next, mv) = neighbor(&current, &mut rng);
        let delta = wd_delta_swap(&current, mv.column, mv.row_a, mv.row_b)?;
        let recomputed = wd_squared(next.full()).value;
        worst_gap = worst_gap.max(((wd + delta) - recomputed).abs());
        // plain descent: keep improvements only
        if delta < 0.0 {
            current = next;
            wd += delta;
        }
        if step % 500 == 0 {
            println!("step {step:>4}: WD {wd:.8}");
        }
    }
    println!("worst |incremental - recomputed| over the walk: {worst_gap:.3e}");
    println!("final WD {:.8} (exact recompute {:.8})", wd, wd_squared(current.full()).value);
    Ok(())
}
