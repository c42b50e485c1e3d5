//! Construct a near-uniform column augmentation with the
//! threshold-accepting search: six extra runs and one additional
//! three-level factor for the shipped 6-run design.
//!
//! Run with `cargo run --release --example augment_search`.

use std::path::PathBuf;
use udesign::{ta_augment, AugmentSpec, BlockingScheme, TaConfig};

fn main() -> udesign::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join("example2_d0.txt");
    let d0 = udesign::io::read_design(&path)?;
    let spec = AugmentSpec::new(&d0, 6, 1, BlockingScheme::None)?;
    let cfg = TaConfig {
        restarts: 20,
        seed: 42,
        ..TaConfig::default()
    };

    let result = ta_augment(&spec, &cfg)?;
    println!(
        "best WD {:.6} vs bound {:.6} -> achieved: {}",
        result.best_wd.value, result.bound.value, result.achieved
    );
    for entry in &result.efficiency.entries {
        println!(
            "{:?} efficiency: {:.4} (optimal: {})",
            entry.kind, entry.ratio, entry.optimal
        );
    }
    println!("{} incremental evaluations over {} restarts", result.evaluations, cfg.restarts);

    let achieved_restarts = result.traces.iter().filter(|t| t.achieved).count();
    println!("restarts that hit the bound: {achieved_restarts}");

    println!("\nbest augmented design:");
    print!("{}", udesign::io::design_to_string(result.best.full()));
    Ok(())
}
