//! Tabulate the analytical lower bounds for augmenting the two shipped
//! initial designs: WD bounds for the plain and two-block layouts plus
//! the E(f_NOD) bound, across a grid of follow-up sizes and additional
//! factor counts.
//!
//! Run with `cargo run --example bounds_table`.

use std::path::PathBuf;
use udesign::bounds::{select_fnod_bound, select_wd_bound};
use udesign::{e_fnod, wd_squared, AugmentSpec, BlockingScheme};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn main() -> udesign::Result<()> {
    for (name, n1_grid) in [
        ("example2_d0.txt", vec![6]),
        ("example1_d0.txt", vec![6, 12]),
    ] {
        let d0 = udesign::io::read_design(fixture(name))?;
        let wd0 = wd_squared(&d0).value;
        let ef0 = e_fnod(&d0)?;
        println!(
            "\ninitial {name}: {} runs, WD {:.4}, E(f_NOD) {:.4}",
            d0.runs(),
            wd0,
            ef0
        );
        println!("{:>4} {:>3} {:>12} {:>12} {:>12}", "n1", "r", "LBW", "LBW(2-block)", "LBf");
        for &n1 in &n1_grid {
            for r in 0..=4usize {
                let plain = AugmentSpec::new(&d0, n1, r, BlockingScheme::None)?;
                let lbw = select_wd_bound(&plain, wd0)?.value;
                let lbf = select_fnod_bound(&plain, ef0)?.value;
                let blocked = AugmentSpec::new(&d0, n1, r, BlockingScheme::TwoFactorB)?;
                let lbw_b = select_wd_bound(&blocked, wd0)?.value;
                println!("{n1:>4} {r:>3} {lbw:>12.4} {lbw_b:>12.4} {lbf:>12.4}");
            }
        }
    }
    Ok(())
}
