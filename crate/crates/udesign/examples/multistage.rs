//! Multi-stage augmentation: score the shipped fixed follow-up blocks
//! against the stage bounds, then run a fresh stage-by-stage search
//! with a stage-indicator blocking factor.
//!
//! Run with `cargo run --release --example multistage`.

use std::path::PathBuf;
use udesign::search::evaluate_stages;
use udesign::{multistage_augment, MultiStagePlan, TaConfig};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn main() -> udesign::Result<()> {
    let d0 = udesign::io::read_design(fixture("example1_d0.txt"))?;

    // score the three shipped 6-run follow-up blocks as fixed inputs
    let blocks: Vec<_> = (1..=3)
        .map(|s| udesign::io::read_design(fixture(&format!("example1_stage{s}.txt"))))
        .collect::<udesign::Result<Vec<_>>>()?
        .into_iter()
        .map(|d| d.rows().to_vec())
        .collect();
    println!("shipped follow-up blocks:");
    for eval in evaluate_stages(&d0, &blocks)? {
        println!(
            "  {} stages: WD {:.4}, bound {:.4}, efficiency {:.4}",
            eval.stages, eval.wd.value, eval.bound.value, eval.efficiency.ratio
        );
    }

    // search three new stages of six runs each, tagging stages with a
    // blocking factor taking levels 0..3
    let plan = MultiStagePlan {
        stage_runs: vec![6, 6, 6],
        r: 0,
        blocking: true,
    };
    let cfg = TaConfig {
        restarts: 8,
        outer: 60,
        inner: 800,
        seed: 7,
        ..TaConfig::default()
    };
    let result = multistage_augment(&d0, &plan, &cfg)?;
    println!("\nsearched stages:");
    for stage in &result.stages {
        println!(
            "  stage {}: +{} runs, WD {:.4}, efficiency {}",
            stage.stage,
            stage.added_runs,
            stage.wd.value,
            stage
                .efficiency
                .map(|e| format!("{:.4}", e.ratio))
                .unwrap_or_else(|| "-".into())
        );
    }
    let blocked = result.blocked.expect("blocking requested");
    println!(
        "final design: {} runs x {} columns (last column tags the stage)",
        blocked.runs(),
        blocked.columns()
    );
    Ok(())
}
