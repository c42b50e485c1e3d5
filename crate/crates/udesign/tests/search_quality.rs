//! Production-budget quality checks for the two-block search path (the
//! plain path is exercised by the acceptance suite).

use std::path::PathBuf;
use udesign::{augment_two_block, AugmentSpec, BlockingScheme, TaConfig};

fn load(name: &str) -> udesign::Design {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name);
    udesign::io::read_design(&path).unwrap()
}

#[test]
fn two_block_search_matches_published_quality() {
    let d0 = load("example2_d0.txt");
    let spec = AugmentSpec::new(&d0, 6, 1, BlockingScheme::TwoFactorB).unwrap();
    let cfg = TaConfig {
        restarts: 20,
        seed: 1,
        ..TaConfig::default()
    };
    let result = augment_two_block(&spec, &cfg).unwrap();
    assert!(
        result.best_wd.value <= 16.3443 + 1e-3,
        "three-level two-block search found {}",
        result.best_wd.value
    );

    let d0 = load("example1_d0.txt");
    let spec = AugmentSpec::new(&d0, 6, 0, BlockingScheme::TwoFactorB).unwrap();
    let cfg = TaConfig {
        restarts: 30,
        seed: 3,
        ..TaConfig::default()
    };
    let result = augment_two_block(&spec, &cfg).unwrap();
    let eff = result.efficiency.wd().unwrap().ratio;
    assert!(
        eff >= 0.983,
        "mixed two-block search efficiency {eff} (WD {})",
        result.best_wd.value
    );
}
