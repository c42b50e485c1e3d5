//! Augment with blocking factors that separate the experimental stages:
//! the one-factor scheme (built from the plain optimum plus an indicator
//! column) and the two-factor scheme (searched with its fixed columns in
//! place).
//!
//! Run with `cargo run --release --example blocking_factors`.

use std::path::PathBuf;
use udesign::{augment_one_block, augment_two_block, AugmentSpec, BlockingScheme, TaConfig};

fn main() -> udesign::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join("example2_d0.txt");
    let d0 = udesign::io::read_design(&path)?;
    let cfg = TaConfig {
        restarts: 10,
        seed: 5,
        ..TaConfig::default()
    };

    let spec = AugmentSpec::new(&d0, 6, 1, BlockingScheme::OneFactor)?;
    let one = augment_one_block(&spec, &cfg)?;
    println!(
        "one blocking factor : WD {:.4} vs bound {:.4}, achieved {}",
        one.best_wd.value, one.bound.value, one.achieved
    );

    let spec = AugmentSpec::new(&d0, 6, 1, BlockingScheme::TwoFactorB)?;
    let two = augment_two_block(&spec, &cfg)?;
    println!(
        "two blocking factors: WD {:.4} vs bound {:.4}, efficiency {:.4}",
        two.best_wd.value,
        two.bound.value,
        two.efficiency.wd().map(|e| e.ratio).unwrap_or(f64::NAN)
    );

    // the two fixed columns: stage indicator, then the half-split that
    // keeps the pair distinguishable
    let full = two.best.full();
    let cols = full.columns();
    println!("\nlast two columns of the two-block design:");
    for row in full.rows() {
        println!("  {} {}", row[cols - 2], row[cols - 1]);
    }
    Ok(())
}
