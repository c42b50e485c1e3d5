use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;
use udesign::bounds;
use udesign::design::{AugmentSpec, BlockingScheme, Design};
use udesign::error::{Error, Result};
use udesign::fnod;
use udesign::io;
use udesign::search::{self, MultiStagePlan, TaConfig};
use udesign::wd::wd_squared;

/// Evaluate, bound, and construct mixed-level column augmented designs
/// under the wrap-around L2 discrepancy.
#[derive(Parser)]
#[command(name = "udesign", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum BlockArg {
    #[default]
    None,
    One,
    #[value(name = "twoB", alias = "twob")]
    TwoB,
}

impl From<BlockArg> for BlockingScheme {
    fn from(value: BlockArg) -> Self {
        match value {
            BlockArg::None => BlockingScheme::None,
            BlockArg::One => BlockingScheme::OneFactor,
            BlockArg::TwoB => BlockingScheme::TwoFactorB,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print WD and E(f_NOD) of a design file.
    Eval {
        design: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the analytical lower bounds for an augmentation problem.
    Bound {
        #[arg(long)]
        initial: PathBuf,
        #[arg(long)]
        n1: usize,
        #[arg(long, default_value_t = 0)]
        r: usize,
        #[arg(long, value_enum, default_value_t = BlockArg::None)]
        block: BlockArg,
        /// Permit n1 > n (bounds are then outside their derivation
        /// assumptions).
        #[arg(long)]
        allow_n1_above_n: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search a near-uniform augmentation with threshold accepting.
    Augment {
        #[arg(long)]
        initial: PathBuf,
        #[arg(long)]
        n1: usize,
        #[arg(long, default_value_t = 0)]
        r: usize,
        #[arg(long, value_enum, default_value_t = BlockArg::None)]
        block: BlockArg,
        /// RNG seed; falls back to UDESIGN_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Outer,inner iteration counts, e.g. 100,2000.
        #[arg(long)]
        iters: Option<String>,
        /// Write the best design here (text format).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        allow_n1_above_n: bool,
        /// Draw one swap in the initial block and one in the additional
        /// block per step.
        #[arg(long)]
        dual_swap: bool,
    },
    /// Stage-by-stage augmentation; each stage treats everything built
    /// so far as its initial design.
    Multistage {
        #[arg(long)]
        initial: PathBuf,
        /// Comma-separated added-run counts, e.g. 6,6,6.
        #[arg(long)]
        stages: String,
        #[arg(long, default_value_t = 0)]
        r: usize,
        #[arg(long, value_enum, default_value_t = BlockArg::None)]
        block: BlockArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        iters: Option<String>,
        /// Write the final stacked design here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Efficiency of a given augmented design against its bounds.
    Efficiency {
        #[arg(long)]
        initial: PathBuf,
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_value_t = 0)]
        r: usize,
        #[arg(long, value_enum, default_value_t = BlockArg::None)]
        block: BlockArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

fn seed_from(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("UDESIGN_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn parse_iters(spec: &Option<String>) -> Result<Option<(usize, usize)>> {
    match spec {
        None => Ok(None),
        Some(text) => {
            let parts: Vec<_> = text.split(',').collect();
            let bad = || Error::Domain(format!("--iters expects OUTER,INNER (got {text:?})"));
            if parts.len() != 2 {
                return Err(bad());
            }
            let outer: usize = parts[0].trim().parse().map_err(|_| bad())?;
            let inner: usize = parts[1].trim().parse().map_err(|_| bad())?;
            if outer == 0 || inner == 0 {
                return Err(bad());
            }
            Ok(Some((outer, inner)))
        }
    }
}

fn config(
    seed: Option<u64>,
    restarts: Option<usize>,
    iters: &Option<String>,
    dual_swap: bool,
) -> Result<TaConfig> {
    let mut cfg = TaConfig {
        seed: seed_from(seed),
        dual_swap,
        ..TaConfig::default()
    };
    if let Some(r) = restarts {
        if r == 0 {
            return Err(Error::Domain("--restarts must be positive".into()));
        }
        cfg.restarts = r;
    }
    if let Some((outer, inner)) = parse_iters(iters)? {
        cfg.outer = outer;
        cfg.inner = inner;
    }
    Ok(cfg)
}

fn input_digest(path: &Path) -> Result<serde_json::Value> {
    let bytes = std::fs::read(path)?;
    Ok(json!({
        "path": path.display().to_string(),
        "fnv1a": io::digest(&bytes),
    }))
}

fn wd_json(wd: &udesign::WdValue) -> serde_json::Value {
    json!({
        "value": wd.value,
        "display": format!("{:.4}", wd.value),
        "runs": wd.runs,
        "columns": wd.columns,
    })
}

fn bound_json(report: &bounds::BoundReport) -> serde_json::Value {
    let mut value = serde_json::to_value(report).expect("bound serializes");
    if let Some(map) = value.as_object_mut() {
        map.insert("display".into(), json!(format!("{:.4}", report.value)));
    }
    value
}

fn emit(report: serde_json::Value, out: &Option<PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn report_frame(
    command: &str,
    inputs: Vec<serde_json::Value>,
    started: Instant,
) -> serde_json::Value {
    json!({
        "schema": 1,
        "command": command,
        "inputs": inputs,
        "wall_ms": started.elapsed().as_millis() as u64,
    })
}

fn merge(mut frame: serde_json::Value, body: serde_json::Value) -> serde_json::Value {
    let (Some(frame_map), Some(body_map)) = (frame.as_object_mut(), body.as_object()) else {
        return body;
    };
    for (k, v) in body_map {
        frame_map.insert(k.clone(), v.clone());
    }
    frame
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Eval { design, out } => {
            let started = Instant::now();
            let d = io::read_design(&design)?;
            let wd = wd_squared(&d);
            let balance = udesign::validate_u_type(&d);
            let efnod = if d.columns() >= 2 {
                Some(fnod::e_fnod(&d)?)
            } else {
                None
            };
            let body = json!({
                "runs": d.runs(),
                "columns": d.columns(),
                "levels": d.levels(),
                "balanced": balance.balanced,
                "unbalanced_columns": balance.offending_columns(),
                "wd_squared": wd_json(&wd),
                "e_fnod": efnod,
                "e_fnod_display": efnod.map(|v| format!("{v:.4}")),
            });
            emit(
                merge(report_frame("eval", vec![input_digest(&design)?], started), body),
                &out,
            )
        }
        Command::Bound {
            initial,
            n1,
            r,
            block,
            allow_n1_above_n,
            out,
        } => {
            let started = Instant::now();
            let d0 = io::read_design(&initial)?;
            let mut spec = AugmentSpec::new(&d0, n1, r, block.into())?;
            if allow_n1_above_n {
                spec = spec.allow_n1_above_n();
            }
            udesign::check_augment_compatibility(&spec)?;
            let wd0 = wd_squared(spec.initial());
            let wd_bound = bounds::select_wd_bound(&spec, wd0.value)?;
            let efnod0 = fnod::e_fnod(spec.initial())?;
            let fnod_bound = bounds::select_fnod_bound(&spec, efnod0)?;
            let body = json!({
                "n": spec.n(),
                "n1": spec.n1(),
                "m1": spec.class().m1,
                "m2": spec.class().m2,
                "r": spec.class().r,
                "outside_derivation_assumptions": spec.n1() > spec.n(),
                "wd_initial": wd_json(&wd0),
                "e_fnod_initial": efnod0,
                "wd_bound": bound_json(&wd_bound),
                "e_fnod_bound": bound_json(&fnod_bound),
            });
            emit(
                merge(report_frame("bound", vec![input_digest(&initial)?], started), body),
                &out,
            )
        }
        Command::Augment {
            initial,
            n1,
            r,
            block,
            seed,
            restarts,
            iters,
            out,
            allow_n1_above_n,
            dual_swap,
        } => {
            let started = Instant::now();
            let d0 = io::read_design(&initial)?;
            let mut spec = AugmentSpec::new(&d0, n1, r, block.into())?;
            if allow_n1_above_n {
                spec = spec.allow_n1_above_n();
            }
            let cfg = config(seed, restarts, &iters, dual_swap)?;
            let result = match block {
                BlockArg::None => search::ta_augment(&spec, &cfg)?,
                BlockArg::One => search::augment_one_block(&spec, &cfg)?,
                BlockArg::TwoB => search::augment_two_block(&spec, &cfg)?,
            };
            if let Some(path) = &out {
                io::write_design(result.best.full(), path)?;
            }
            let body = json!({
                "seed": result.seed,
                "restarts": cfg.restarts,
                "iters": [cfg.outer, cfg.inner],
                "achieved": result.achieved,
                "evaluations": result.evaluations,
                "wd_best": wd_json(&result.best_wd),
                "wd_bound": bound_json(&result.bound),
                "e_fnod_bound": bound_json(&result.fnod_bound),
                "efficiency": result.efficiency,
                "traces": result.traces,
                "design_file": out.as_ref().map(|p| p.display().to_string()),
            });
            emit(
                merge(report_frame("augment", vec![input_digest(&initial)?], started), body),
                &None,
            )
        }
        Command::Multistage {
            initial,
            stages,
            r,
            block,
            seed,
            restarts,
            iters,
            out,
        } => {
            let started = Instant::now();
            if block == BlockArg::TwoB {
                return Err(Error::Domain("multistage supports --block none|one".into()));
            }
            let d0 = io::read_design(&initial)?;
            let stage_runs: Vec<usize> = stages
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| {
                        Error::Domain(format!(
                            "--stages expects comma-separated run counts (got {stages:?})"
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            let plan = MultiStagePlan {
                stage_runs,
                r,
                blocking: block == BlockArg::One,
            };
            let cfg = config(seed, restarts, &iters, false)?;
            let result = search::multistage_augment(&d0, &plan, &cfg)?;
            if let Some(path) = &out {
                let design = result.blocked.as_ref().unwrap_or(&result.design);
                io::write_design(design, path)?;
            }
            let stages_json: Vec<_> = result
                .stages
                .iter()
                .map(|s| {
                    json!({
                        "stage": s.stage,
                        "added_runs": s.added_runs,
                        "overflow": s.overflow,
                        "wd": wd_json(&s.wd),
                        "bound": s.bound.as_ref().map(bound_json),
                        "efficiency": s.efficiency,
                        "achieved": s.achieved,
                        "evaluations": s.evaluations,
                    })
                })
                .collect();
            let body = json!({
                "seed": result.seed,
                "stages": stages_json,
                "total_runs": result.design.runs(),
                "blocked": result.blocked.is_some(),
                "design_file": out.as_ref().map(|p| p.display().to_string()),
            });
            emit(
                merge(
                    report_frame("multistage", vec![input_digest(&initial)?], started),
                    body,
                ),
                &None,
            )
        }
        Command::Efficiency {
            initial,
            design,
            r,
            block,
            out,
        } => {
            let started = Instant::now();
            let d0 = io::read_design(&initial)?;
            let full = io::read_design(&design)?;
            let report = efficiency_report(&d0, &full, r, block.into())?;
            emit(
                merge(
                    report_frame(
                        "efficiency",
                        vec![input_digest(&initial)?, input_digest(&design)?],
                        started,
                    ),
                    report,
                ),
                &out,
            )
        }
    }
}

/// Validates that `full` is `d0` augmented with `r` additional factors
/// and the given blocking scheme, then scores it against the bounds.
fn efficiency_report(
    d0: &Design,
    full: &Design,
    r: usize,
    blocking: BlockingScheme,
) -> Result<serde_json::Value> {
    let n = d0.runs();
    let blocks = blocking.column_count();
    if full.runs() <= n {
        return Err(Error::Incompatible(format!(
            "design has {} runs but the initial design has {}",
            full.runs(),
            n
        )));
    }
    let n1 = full.runs() - n;
    if full.columns() != d0.columns() + r + blocks {
        return Err(Error::Incompatible(format!(
            "design has {} columns; expected {} + {r} additional + {blocks} blocking",
            full.columns(),
            d0.columns(),
        )));
    }
    let m = d0.columns();
    for (i, (row, d0_row)) in full.rows()[..n].iter().zip(d0.rows()).enumerate() {
        if row[..m] != d0_row[..] {
            return Err(Error::Incompatible(format!(
                "initial block mismatch at run {}",
                i + 1
            )));
        }
        if row[m..].iter().any(|&x| x != 0) {
            return Err(Error::Incompatible(format!(
                "additional/blocking entries of initial run {} are not all zero",
                i + 1
            )));
        }
    }
    let mut spec = AugmentSpec::new(d0, n1, r, blocking)?;
    if n1 > n {
        spec = spec.allow_n1_above_n();
    }
    let wd0 = wd_squared(spec.initial());
    let efnod0 = fnod::e_fnod(spec.initial())?;
    let wd_bound = bounds::select_wd_bound(&spec, wd0.value)?;
    let fnod_bound = bounds::select_fnod_bound(&spec, efnod0)?;
    let wd_full = wd_squared(full);
    let efnod_full = fnod::e_fnod(full)?;
    let wd_eff = fnod::efficiency(&wd_bound, wd_full.value)?;
    let fnod_eff = fnod::efficiency(&fnod_bound, efnod_full)?;
    Ok(json!({
        "n": n,
        "n1": n1,
        "r": r,
        "wd": wd_json(&wd_full),
        "e_fnod": efnod_full,
        "wd_bound": bound_json(&wd_bound),
        "e_fnod_bound": bound_json(&fnod_bound),
        "efficiency": fnod::EfficiencyReport { entries: vec![wd_eff, fnod_eff] },
        "outside_derivation_assumptions": n1 > n,
    }))
}
