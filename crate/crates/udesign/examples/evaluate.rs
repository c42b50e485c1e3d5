//! Evaluate a design file: balance check, squared wrap-around L2
//! discrepancy, and average non-orthogonality by both computation
//! routes.
//!
//! Run with `cargo run --example evaluate [path/to/design.txt]`.

use std::path::PathBuf;
use udesign::{e_fnod, e_fnod_from_coincidences, validate_u_type, wd_squared};

fn main() -> udesign::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures")
            .join("example2_d0.txt")
    });
    let design = udesign::io::read_design(&path)?;
    println!(
        "{}: {} runs x {} columns, levels {:?}",
        path.display(),
        design.runs(),
        design.columns(),
        design.levels()
    );

    let balance = validate_u_type(&design);
    if balance.balanced {
        println!("balanced: every column hits each level equally often");
    } else {
        println!("NOT balanced; offending columns: {:?}", balance.offending_columns());
        for column in &balance.columns {
            if !column.balanced {
                println!("  column {}: histogram {:?}", column.column + 1, column.histogram);
            }
        }
    }

    let wd = wd_squared(&design);
    println!("squared WD          : {:.10} ({:.4})", wd.value, wd.value);

    if design.columns() >= 2 {
        let by_pairs = e_fnod(&design)?;
        let by_rows = e_fnod_from_coincidences(&design)?;
        println!("E(f_NOD), pair path : {by_pairs:.10}");
        println!("E(f_NOD), row path  : {by_rows:.10}");
    }
    Ok(())
}
