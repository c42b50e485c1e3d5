//! Threshold-accepting construction of near-uniform column augmented
//! designs.
//!
//! One restart runs the accept-if-worsening-below-threshold chain over
//! the follow-up block: a move swaps two entries of one follow-up column
//! (preserving balance by construction), the threshold schedule decays
//! linearly from a probe-calibrated start to zero, and the chain stops
//! early when the WD matches the applicable analytical bound. Restarts
//! run in parallel on independent RNG streams derived from one seed;
//! merging is deterministic (lowest WD, ties to the lowest restart
//! index).

use crate::bounds::{self, BoundReport};
use crate::design::{
    assemble, AugmentSpec, AugmentedDesign, BlockingScheme, D2Mode, Design, Matrix,
};
use crate::error::{Error, Result};
use crate::fnod::{self, bound_achieved, Efficiency, EfficiencyReport};
use crate::wd::{delta_swap_unchecked, wd_squared, WdValue};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Threshold-accepting budget and reproducibility knobs.
#[derive(Debug, Clone)]
pub struct TaConfig {
    /// Outer sweeps; one threshold per sweep.
    pub outer: usize,
    /// Moves per sweep.
    pub inner: usize,
    /// Probe moves used to calibrate the starting threshold.
    pub probes: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Relative tolerance for declaring the bound achieved.
    pub achievement_rtol: f64,
    /// Draw one swap in the initial-factor block and one in the
    /// additional block per step instead of a single swap.
    pub dual_swap: bool,
}

impl Default for TaConfig {
    fn default() -> Self {
        TaConfig {
            outer: 100,
            inner: 2000,
            probes: 1000,
            restarts: 10,
            seed: 0,
            achievement_rtol: fnod::ACHIEVEMENT_RTOL,
            dual_swap: false,
        }
    }
}

/// One swap move: a column and two follow-up rows (absolute indices).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Move {
    pub column: usize,
    pub row_a: usize,
    pub row_b: usize,
}

/// Best WD seen after each outer sweep of one restart.
#[derive(Debug, Clone, Serialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub best_by_sweep: Vec<f64>,
    pub achieved: bool,
}

/// Outcome of a search: the best design, its exact WD, the matching
/// bounds and efficiencies, and per-restart traces.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: AugmentedDesign,
    pub best_wd: WdValue,
    pub bound: BoundReport,
    pub fnod_bound: BoundReport,
    pub efficiency: EfficiencyReport,
    pub achieved: bool,
    pub evaluations: u64,
    pub seed: u64,
    pub traces: Vec<RestartTrace>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    splitmix64(seed ^ (restart as u64).wrapping_mul(0xA24BAED4963EE407))
}

/// Mutable search state: a full matrix whose first `base_rows` rows and
/// whose non-factor columns are fixed.
#[derive(Clone)]
struct State {
    design: Design,
    base_rows: usize,
    /// Initial-factor columns (swappable).
    m: usize,
    /// Additional-factor columns (swappable).
    r: usize,
    d2_mode: D2Mode,
}

impl State {
    fn added_rows(&self) -> usize {
        self.design.runs() - self.base_rows
    }

    /// Overwrites the follow-up factor entries with a fresh balanced
    /// random draw.
    fn randomize(&mut self, rng: &mut ChaCha8Rng) {
        let n_add = self.added_rows();
        for k in 0..self.m {
            let q = self.design.levels()[k];
            let mut column: Vec<u32> = (0..n_add).map(|i| (i as u32) % q).collect();
            column.shuffle(rng);
            for (i, v) in column.into_iter().enumerate() {
                self.design.set_entry(self.base_rows + i, k, v);
            }
        }
        for c in 0..self.r {
            let mut column = d2_multiset(n_add, self.d2_mode);
            column.shuffle(rng);
            for (i, v) in column.into_iter().enumerate() {
                self.design.set_entry(self.base_rows + i, self.m + c, v);
            }
        }
    }

    fn propose(&self, rng: &mut ChaCha8Rng) -> Move {
        let column = rng.gen_range(0..self.m + self.r);
        self.propose_in(rng, column, column + 1)
    }

    fn propose_in(&self, rng: &mut ChaCha8Rng, col_lo: usize, col_hi: usize) -> Move {
        let column = if col_hi - col_lo == 1 {
            col_lo
        } else {
            rng.gen_range(col_lo..col_hi)
        };
        let n_add = self.added_rows();
        let row_a = self.base_rows + rng.gen_range(0..n_add);
        let mut row_b = self.base_rows + rng.gen_range(0..n_add);
        while row_b == row_a {
            row_b = self.base_rows + rng.gen_range(0..n_add);
        }
        Move { column, row_a, row_b }
    }

    fn delta(&self, mv: &Move) -> f64 {
        delta_swap_unchecked(&self.design, mv.column, mv.row_a, mv.row_b)
    }

    fn apply(&mut self, mv: &Move) {
        self.design.swap_entries(mv.column, mv.row_a, mv.row_b);
    }
}

/// Balanced value multiset for one additional column of `n_add` rows.
fn d2_multiset(n_add: usize, mode: D2Mode) -> Vec<u32> {
    match mode {
        D2Mode::BalancedOneTwo => (0..n_add).map(|i| 1 + (i as u32) % 2).collect(),
        D2Mode::Overflow => {
            let base = n_add / 3;
            let extra = n_add % 3;
            let mut column = Vec::with_capacity(n_add);
            for level in 0..3u32 {
                let count = base + usize::from((level as usize) < extra);
                column.extend(std::iter::repeat_n(level, count));
            }
            column
        }
    }
}

/// One probe or chain step: draw move(s) per the configured neighborhood
/// and return (delta, moves). Dual mode tentatively applies the first
/// move to evaluate the second; the state is restored before returning.
fn probe_delta(state: &mut State, cfg: &TaConfig, rng: &mut ChaCha8Rng) -> (f64, [Option<Move>; 2]) {
    if cfg.dual_swap && state.r > 0 {
        let first = state.propose_in(rng, 0, state.m);
        let second = state.propose_in(rng, state.m, state.m + state.r);
        let d1 = state.delta(&first);
        state.apply(&first);
        let d2 = state.delta(&second);
        state.apply(&first); // restore
        (d1 + d2, [Some(first), Some(second)])
    } else {
        let mv = state.propose(rng);
        (state.delta(&mv), [Some(mv), None])
    }
}

fn apply_moves(state: &mut State, moves: &[Option<Move>; 2]) {
    for mv in moves.iter().flatten() {
        state.apply(mv);
    }
}

fn thresholds(state: &mut State, cfg: &TaConfig, rng: &mut ChaCha8Rng) -> (Vec<f64>, u64) {
    let mut positives: Vec<f64> = Vec::new();
    let mut evaluations = 0u64;
    for _ in 0..cfg.probes {
        let (delta, _) = probe_delta(state, cfg, rng);
        evaluations += 1;
        if delta > 0.0 {
            positives.push(delta);
        }
    }
    let t1 = if positives.is_empty() {
        0.0
    } else {
        positives.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = ((0.05 * positives.len() as f64).ceil() as usize).max(1);
        positives[rank - 1]
    };
    let schedule = if cfg.outer <= 1 {
        vec![0.0; cfg.outer.max(1)]
    } else {
        (0..cfg.outer)
            .map(|i| (cfg.outer - 1 - i) as f64 / (cfg.outer - 1) as f64 * t1)
            .collect()
    };
    (schedule, evaluations)
}

/// Probe-calibrated threshold schedule for a design: the 5th percentile
/// of the positive probe deltas, decaying linearly to zero.
pub fn threshold_schedule(
    aug: &AugmentedDesign,
    cfg: &TaConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mut state = state_from_augmented(aug);
    thresholds(&mut state, cfg, rng).0
}

/// Uniformly random neighbor of an augmented design: one swap of two
/// follow-up entries in one factor column. Returns the neighbor and the
/// move that produced it.
pub fn neighbor(aug: &AugmentedDesign, rng: &mut ChaCha8Rng) -> (AugmentedDesign, Move) {
    let state = state_from_augmented(aug);
    let mv = state.propose(rng);
    let mut next = aug.clone();
    next.apply_swap(mv.column, mv.row_a, mv.row_b)
        .expect("proposed move is legal by construction");
    (next, mv)
}

fn state_from_augmented(aug: &AugmentedDesign) -> State {
    let class = aug.spec().class();
    State {
        design: aug.full().clone(),
        base_rows: aug.n(),
        m: class.m(),
        r: class.r,
        d2_mode: aug.spec().d2_mode(),
    }
}

struct ChainOutcome {
    design: Design,
    wd: f64,
    achieved: bool,
    evaluations: u64,
    trace: Vec<f64>,
}

/// Accepted moves between exact recomputations of the running WD value,
/// to cap incremental-float drift.
const RESYNC_INTERVAL: u64 = 100_000;

fn run_chain(template: &State, bound: f64, cfg: &TaConfig, seed: u64) -> ChainOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = template.clone();
    state.randomize(&mut rng);
    let mut wd = wd_squared(&state.design).value;
    let mut evaluations = 1u64;
    let (schedule, probe_evals) = thresholds(&mut state, cfg, &mut rng);
    evaluations += probe_evals;

    let mut best = state.design.clone();
    let mut best_wd = wd;
    let mut achieved = false;
    let mut accepted = 0u64;
    let mut trace = Vec::with_capacity(cfg.outer);

    'sweeps: for &threshold in &schedule {
        for _ in 0..cfg.inner {
            if bound_achieved(wd, bound, cfg.achievement_rtol) {
                wd = wd_squared(&state.design).value;
                evaluations += 1;
                if bound_achieved(wd, bound, cfg.achievement_rtol) {
                    if wd < best_wd {
                        best = state.design.clone();
                    }
                    achieved = true;
                    break 'sweeps;
                }
            }
            let (delta, moves) = probe_delta(&mut state, cfg, &mut rng);
            evaluations += 1;
            if delta <= threshold {
                apply_moves(&mut state, &moves);
                wd += delta;
                accepted += 1;
                if accepted.is_multiple_of(RESYNC_INTERVAL) {
                    wd = wd_squared(&state.design).value;
                }
                if wd < best_wd {
                    best = state.design.clone();
                    best_wd = wd;
                }
            }
        }
        trace.push(best_wd);
    }

    let wd_exact = wd_squared(&best).value;
    ChainOutcome {
        design: best,
        wd: wd_exact,
        achieved: achieved || bound_achieved(wd_exact, bound, cfg.achievement_rtol),
        evaluations,
        trace,
    }
}

fn run_restarts(template: &State, bound: f64, cfg: &TaConfig) -> (ChainOutcome, u64, Vec<RestartTrace>) {
    let outcomes: Vec<ChainOutcome> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|k| run_chain(template, bound, cfg, restart_seed(cfg.seed, k)))
        .collect();
    let mut best_index = 0;
    for (k, outcome) in outcomes.iter().enumerate() {
        if outcome.wd < outcomes[best_index].wd {
            best_index = k;
        }
    }
    let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    let traces = outcomes
        .iter()
        .enumerate()
        .map(|(k, o)| RestartTrace {
            restart: k,
            best_by_sweep: o.trace.clone(),
            achieved: o.achieved,
        })
        .collect();
    let best = outcomes.into_iter().nth(best_index).expect("non-empty");
    (best, evaluations, traces)
}

fn follow_up_blocks(design: &Design, base_rows: usize, m: usize, r: usize) -> (Matrix, Matrix) {
    let d1 = design.rows()[base_rows..]
        .iter()
        .map(|row| row[..m].to_vec())
        .collect();
    let d2 = design.rows()[base_rows..]
        .iter()
        .map(|row| row[m..m + r].to_vec())
        .collect();
    (d1, d2)
}

fn finish_search(
    spec: &AugmentSpec,
    outcome: ChainOutcome,
    bound: BoundReport,
    fnod_bound: BoundReport,
    evaluations: u64,
    traces: Vec<RestartTrace>,
    cfg: &TaConfig,
) -> Result<SearchResult> {
    let class = spec.class();
    let (d1, d2) = follow_up_blocks(&outcome.design, spec.n(), class.m(), class.r);
    let best = assemble(spec, &d1, &d2)?;
    let best_wd = wd_squared(best.full());
    let achieved = bound_achieved(best_wd.value, bound.value, cfg.achievement_rtol);
    let efnod = fnod::e_fnod(best.full())?;
    let wd_efficiency = fnod::efficiency(&bound, best_wd.value)?;
    let fnod_efficiency = fnod::efficiency(&fnod_bound, efnod)?;
    if achieved {
        // a WD-optimal augmentation is E(f_NOD)-optimal as well
        debug_assert!(
            fnod_efficiency.optimal,
            "bound-achieving design missed the E(f_NOD) bound: {} vs {}",
            efnod, fnod_bound.value
        );
    }
    Ok(SearchResult {
        best,
        best_wd,
        bound,
        fnod_bound,
        efficiency: EfficiencyReport {
            entries: vec![wd_efficiency, fnod_efficiency],
        },
        achieved,
        evaluations,
        seed: cfg.seed,
        traces,
    })
}

/// Threshold-accepting search for the follow-up block of a plain
/// (no-blocking) column augmented design.
pub fn ta_augment(spec: &AugmentSpec, cfg: &TaConfig) -> Result<SearchResult> {
    if spec.class().blocking != BlockingScheme::None {
        return Err(Error::Contract(
            "ta_augment searches the no-blocking layout; use the blocking entry points".into(),
        ));
    }
    crate::design::check_augment_compatibility(spec)?;
    let wd0 = wd_squared(spec.initial()).value;
    let bound = bounds::select_wd_bound(spec, wd0)?;
    let efnod0 = fnod::e_fnod(spec.initial())?;
    let fnod_bound = bounds::select_fnod_bound(spec, efnod0)?;
    let template = fresh_state(spec)?;
    let (outcome, evaluations, traces) = run_restarts(&template, bound.value, cfg);
    finish_search(spec, outcome, bound, fnod_bound, evaluations, traces, cfg)
}

fn fresh_state(spec: &AugmentSpec) -> Result<State> {
    let class = spec.class();
    let n_add = spec.n1();
    // placeholder follow-up entries; every restart re-randomizes them
    let d1: Matrix = (0..n_add)
        .map(|i| {
            spec.initial()
                .levels()
                .iter()
                .map(|&q| (i as u32) % q)
                .collect()
        })
        .collect();
    let d2: Matrix = (0..n_add)
        .map(|i| {
            (0..class.r)
                .map(|_| match spec.d2_mode() {
                    D2Mode::BalancedOneTwo => 1 + (i as u32) % 2,
                    D2Mode::Overflow => (i as u32) % 3,
                })
                .collect()
        })
        .collect();
    let aug = assemble(spec, &d1, &d2)?;
    Ok(state_from_augmented(&aug))
}

/// Search with one additional blocking factor: construct the plain
/// optimum, then append the stage-indicator column. The combined design
/// achieves its one-block bound exactly when the core achieved its plain
/// bound.
pub fn augment_one_block(spec: &AugmentSpec, cfg: &TaConfig) -> Result<SearchResult> {
    if spec.class().blocking != BlockingScheme::OneFactor {
        return Err(Error::Contract("spec does not use the one-factor scheme".into()));
    }
    crate::design::check_augment_compatibility(spec)?;
    let core_spec = AugmentSpec::new(
        spec.initial(),
        spec.n1(),
        spec.class().r,
        BlockingScheme::None,
    )?
    .with_d2_mode(spec.d2_mode());
    let core = ta_augment(&core_spec, cfg)?;

    let class = spec.class();
    let wd0 = wd_squared(spec.initial()).value;
    let bound = bounds::lbw_one_block(spec.n(), class.m1, class.m2, class.r, spec.n1(), wd0)?;
    let efnod0 = fnod::e_fnod(spec.initial())?;
    let fnod_bound =
        bounds::lbf_one_block(spec.n(), class.m1, class.m2, class.r, spec.n1(), efnod0)?;
    let best = assemble(spec, core.best.d1(), core.best.d2())?;
    let best_wd = wd_squared(best.full());
    let achieved = bound_achieved(best_wd.value, bound.value, cfg.achievement_rtol);
    let efnod = fnod::e_fnod(best.full())?;
    Ok(SearchResult {
        efficiency: EfficiencyReport {
            entries: vec![
                fnod::efficiency(&bound, best_wd.value)?,
                fnod::efficiency(&fnod_bound, efnod)?,
            ],
        },
        best,
        best_wd,
        bound,
        fnod_bound,
        achieved,
        evaluations: core.evaluations,
        seed: cfg.seed,
        traces: core.traces,
    })
}

/// Search with the fixed two-column blocking scheme included in every WD
/// evaluation.
pub fn augment_two_block(spec: &AugmentSpec, cfg: &TaConfig) -> Result<SearchResult> {
    if spec.class().blocking != BlockingScheme::TwoFactorB {
        return Err(Error::Contract("spec does not use the two-factor scheme".into()));
    }
    crate::design::check_augment_compatibility(spec)?;
    let class = spec.class();
    let wd0 = wd_squared(spec.initial()).value;
    let bound = bounds::lbw_two_block(spec.n(), class.m1, class.m2, class.r, spec.n1(), wd0)?;
    let efnod0 = fnod::e_fnod(spec.initial())?;
    let fnod_bound =
        bounds::lbf_two_block(spec.n(), class.m1, class.m2, class.r, spec.n1(), efnod0)?;
    let template = fresh_state(spec)?;
    let (outcome, evaluations, traces) = run_restarts(&template, bound.value, cfg);
    finish_search(spec, outcome, bound, fnod_bound, evaluations, traces, cfg)
}

/// Stage layout of a multi-stage augmentation: run counts per follow-up
/// stage, additional factors introduced at the first follow-up stage,
/// and an optional stage-indicator blocking factor appended at the end.
#[derive(Debug, Clone)]
pub struct MultiStagePlan {
    pub stage_runs: Vec<usize>,
    pub r: usize,
    pub blocking: bool,
}

impl MultiStagePlan {
    /// Total follow-up runs added through stage `s` (1-based).
    pub fn added_through(&self, s: usize) -> usize {
        self.stage_runs[..s].iter().sum()
    }

    /// A stage's additional columns keep the {1,2} balance while the
    /// accumulated follow-up runs stay within twice the initial run
    /// count; beyond that they draw from {0,1,2}.
    pub fn is_overflow_stage(&self, s: usize, n0: usize) -> bool {
        self.added_through(s) > 2 * n0
    }
}

/// Per-stage outcome of a multi-stage search.
#[derive(Debug, Clone)]
pub struct StageResult {
    /// 1-based follow-up stage index.
    pub stage: usize,
    pub added_runs: usize,
    pub overflow: bool,
    pub wd: WdValue,
    pub bound: Option<BoundReport>,
    pub efficiency: Option<Efficiency>,
    pub achieved: Option<bool>,
    pub evaluations: u64,
}

/// Outcome of a full multi-stage run.
#[derive(Debug, Clone)]
pub struct MultiStageResult {
    pub stages: Vec<StageResult>,
    /// Final stacked design over the factor columns.
    pub design: Design,
    /// Final design with the stage-indicator column appended, when
    /// requested.
    pub blocked: Option<Design>,
    pub seed: u64,
}

fn stage_divisor(m1: usize, m2: usize, balanced_r: bool) -> usize {
    let base = if m2 == 0 {
        2
    } else if m1 == 0 {
        3
    } else {
        6
    };
    if balanced_r && base % 2 != 0 {
        6
    } else {
        base
    }
}

/// Runs the search stage by stage, treating everything accumulated so
/// far as the fixed initial block of the next stage. Additional factors
/// appear at stage 1 only; bounds exist for stage 1 (any r) and for
/// later stages when r = 0.
pub fn multistage_augment(
    initial: &Design,
    plan: &MultiStagePlan,
    cfg: &TaConfig,
) -> Result<MultiStageResult> {
    if plan.stage_runs.is_empty() {
        return Err(Error::Domain("plan lists no stages".into()));
    }
    let spec0 = AugmentSpec::new(initial, plan.stage_runs[0], plan.r, BlockingScheme::None)?;
    let class = spec0.class();
    let (m1, m2) = (class.m1, class.m2);
    let n0 = initial.runs();

    let mut stages = Vec::with_capacity(plan.stage_runs.len());
    let mut current: Design = spec0.initial().clone();

    for (idx, &n_add) in plan.stage_runs.iter().enumerate() {
        let stage = idx + 1;
        let overflow = plan.is_overflow_stage(stage, n0);
        if n_add < 2 {
            return Err(Error::Incompatible(format!(
                "stage {stage} adds {n_add} runs; at least 2 required"
            )));
        }
        let divisor = stage_divisor(m1, m2, plan.r > 0 && !overflow);
        if n_add % divisor != 0 {
            return Err(Error::Incompatible(format!(
                "stage {stage} adds {n_add} runs; a multiple of {divisor} is required"
            )));
        }

        let stage_cfg = TaConfig {
            seed: splitmix64(cfg.seed ^ (stage as u64)),
            ..cfg.clone()
        };
        let (wd, bound, evaluations) = if stage == 1 {
            let spec_stage = AugmentSpec::new(initial, n_add, plan.r, BlockingScheme::None)?
                .with_d2_mode(if overflow { D2Mode::Overflow } else { D2Mode::BalancedOneTwo });
            let result = ta_augment(&spec_stage, &stage_cfg)?;
            current = result.best.full().clone();
            (result.best_wd, Some(result.bound), result.evaluations)
        } else {
            let prev_wd = wd_squared(&current).value;
            let bound = if plan.r == 0 {
                Some(bounds::lbw_stage(prev_wd, current.runs(), n_add, m1, m2)?)
            } else {
                None
            };
            // placeholder follow-up rows; every restart re-randomizes them
            let template_rows: Matrix = (0..n_add)
                .map(|i| {
                    current
                        .levels()
                        .iter()
                        .enumerate()
                        .map(|(k, &q)| {
                            if k < m1 + m2 {
                                (i as u32) % q
                            } else if overflow {
                                (i as u32) % 3
                            } else {
                                1 + (i as u32) % 2
                            }
                        })
                        .collect()
                })
                .collect::<Matrix>();
            let template = State {
                design: current.stack(&template_rows)?,
                base_rows: current.runs(),
                m: m1 + m2,
                r: plan.r,
                d2_mode: if overflow { D2Mode::Overflow } else { D2Mode::BalancedOneTwo },
            };
            let bound_value = bound.as_ref().map(|b| b.value).unwrap_or(f64::NEG_INFINITY);
            let (outcome, evaluations, _) = run_restarts(&template, bound_value, &stage_cfg);
            current = outcome.design;
            (wd_squared(&current), bound, evaluations)
        };
        let efficiency = match &bound {
            Some(b) => Some(fnod::efficiency(b, wd.value)?),
            None => None,
        };
        let achieved = bound
            .as_ref()
            .map(|b| bound_achieved(wd.value, b.value, cfg.achievement_rtol));
        stages.push(StageResult {
            stage,
            added_runs: n_add,
            overflow,
            wd,
            bound,
            efficiency,
            achieved,
            evaluations,
        });
    }

    let blocked = if plan.blocking {
        let stage_count = plan.stage_runs.len() as u32 + 1;
        let mut matrix: Matrix = Vec::with_capacity(current.runs());
        let mut boundaries = vec![n0];
        for s in 1..=plan.stage_runs.len() {
            boundaries.push(n0 + plan.added_through(s));
        }
        for (i, row) in current.rows().iter().enumerate() {
            let stage_label = boundaries.iter().filter(|&&b| i >= b).count() as u32;
            let mut row = row.clone();
            row.push(stage_label);
            matrix.push(row);
        }
        let mut levels = current.levels().to_vec();
        levels.push(stage_count);
        Some(Design::new(matrix, levels)?)
    } else {
        None
    };

    Ok(MultiStageResult {
        stages,
        design: current,
        blocked,
        seed: cfg.seed,
    })
}

/// Evaluation of one fixed multi-stage step: the stacked design's WD
/// against the stage bound.
#[derive(Debug, Clone)]
pub struct StageEvaluation {
    /// Number of stages stacked so far, counting the initial design.
    pub stages: usize,
    pub wd: WdValue,
    pub bound: BoundReport,
    pub efficiency: Efficiency,
}

/// Evaluates fixed row-augmentation stages (no search): each block is
/// stacked in turn and compared against the stage bound.
pub fn evaluate_stages(initial: &Design, blocks: &[Matrix]) -> Result<Vec<StageEvaluation>> {
    let spec_probe = AugmentSpec::new(
        initial,
        blocks.first().map(|b| b.len()).unwrap_or(2).max(2),
        0,
        BlockingScheme::None,
    )?;
    let (m1, m2) = (spec_probe.class().m1, spec_probe.class().m2);
    let normalized = spec_probe.initial().clone();
    let order = spec_probe.column_order().to_vec();

    let mut current = normalized;
    let mut out = Vec::with_capacity(blocks.len());
    for (idx, block) in blocks.iter().enumerate() {
        let reordered: Matrix = block
            .iter()
            .map(|row| order.iter().map(|&k| row[k]).collect())
            .collect();
        let block_design = Design::new(reordered.clone(), current.levels().to_vec())?;
        let report = crate::design::validate_u_type(&block_design);
        if !report.balanced {
            return Err(Error::Unbalanced(format!(
                "stage block {} is not U-type (columns {:?})",
                idx + 1,
                report.offending_columns()
            )));
        }
        let prev_wd = wd_squared(&current).value;
        let bound = bounds::lbw_stage(prev_wd, current.runs(), block.len(), m1, m2)?;
        current = current.stack(&reordered)?;
        let wd = wd_squared(&current);
        let efficiency = fnod::efficiency(&bound, wd.value)?;
        out.push(StageEvaluation {
            stages: idx + 2,
            wd,
            bound,
            efficiency,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> AugmentSpec {
        let d0 = Design::new(vec![vec![0, 0], vec![1, 1]], vec![2, 2]).unwrap();
        AugmentSpec::new(&d0, 2, 1, BlockingScheme::None).unwrap()
    }

    #[test]
    fn neighbors_stay_valid() {
        let spec = two_by_two();
        let aug = assemble(&spec, &vec![vec![0, 1], vec![1, 0]], &vec![vec![1], vec![2]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut current = aug;
        for _ in 0..10_000 {
            let (next, mv) = neighbor(&current, &mut rng);
            assert!(mv.row_a >= 2 && mv.row_b >= 2 && mv.column < 3);
            // re-assembling from the blocks revalidates every invariant
            assemble(current.spec(), next.d1(), next.d2()).unwrap();
            current = next;
        }
    }

    #[test]
    fn neighbor_replay_is_deterministic() {
        let spec = two_by_two();
        let aug = assemble(&spec, &vec![vec![0, 1], vec![1, 0]], &vec![vec![1], vec![2]]).unwrap();
        let (a, mv_a) = neighbor(&aug, &mut ChaCha8Rng::seed_from_u64(9));
        let (b, mv_b) = neighbor(&aug, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.full(), b.full());
        assert_eq!((mv_a.column, mv_a.row_a, mv_a.row_b), (mv_b.column, mv_b.row_a, mv_b.row_b));
    }

    #[test]
    fn schedule_decays_to_zero() {
        let spec = two_by_two();
        let aug = assemble(&spec, &vec![vec![0, 1], vec![1, 0]], &vec![vec![1], vec![2]]).unwrap();
        let cfg = TaConfig {
            outer: 10,
            probes: 200,
            ..TaConfig::default()
        };
        let schedule = threshold_schedule(&aug, &cfg, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(schedule.len(), 10);
        assert_eq!(*schedule.last().unwrap(), 0.0);
        for w in schedule.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn schedule_degenerates_to_zero_without_uphill_moves() {
        // one two-level column, two follow-up rows: every swap permutes
        // whole rows, so no probe ever worsens the value
        let d0 = Design::new(vec![vec![0], vec![1]], vec![2]).unwrap();
        let spec = AugmentSpec::new(&d0, 2, 0, BlockingScheme::None).unwrap();
        let aug = assemble(&spec, &vec![vec![0], vec![1]], &vec![vec![]; 2]).unwrap();
        let cfg = TaConfig {
            outer: 6,
            probes: 100,
            ..TaConfig::default()
        };
        let schedule = threshold_schedule(&aug, &cfg, &mut ChaCha8Rng::seed_from_u64(4));
        assert!(schedule.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn identical_seeds_reproduce_results() {
        let spec = two_by_two();
        let cfg = TaConfig {
            outer: 5,
            inner: 50,
            probes: 50,
            restarts: 3,
            seed: 77,
            ..TaConfig::default()
        };
        let a = ta_augment(&spec, &cfg).unwrap();
        let b = ta_augment(&spec, &cfg).unwrap();
        assert_eq!(a.best.full(), b.best.full());
        assert_eq!(a.best_wd.value.to_bits(), b.best_wd.value.to_bits());
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn traces_never_increase() {
        let spec = two_by_two();
        let cfg = TaConfig {
            outer: 8,
            inner: 40,
            probes: 30,
            restarts: 2,
            seed: 5,
            achievement_rtol: 0.0, // keep the chain running
            ..TaConfig::default()
        };
        let result = ta_augment(&spec, &cfg).unwrap();
        for trace in &result.traces {
            for w in trace.best_by_sweep.windows(2) {
                assert!(w[0] >= w[1] - 1e-15);
            }
        }
    }

    #[test]
    fn dual_swap_mode_runs_and_stays_valid() {
        let spec = two_by_two();
        let cfg = TaConfig {
            outer: 5,
            inner: 50,
            probes: 50,
            restarts: 2,
            seed: 3,
            dual_swap: true,
            ..TaConfig::default()
        };
        let result = ta_augment(&spec, &cfg).unwrap();
        assemble(&spec, result.best.d1(), result.best.d2()).unwrap();
    }

    #[test]
    fn one_block_equivalence() {
        let d0 = Design::new(vec![vec![0, 0], vec![1, 1]], vec![2, 2]).unwrap();
        let spec = AugmentSpec::new(&d0, 2, 1, BlockingScheme::OneFactor).unwrap();
        let cfg = TaConfig {
            outer: 20,
            inner: 200,
            probes: 100,
            restarts: 4,
            seed: 11,
            ..TaConfig::default()
        };
        let blocked = augment_one_block(&spec, &cfg).unwrap();
        // the core search achieved its plain bound iff the one-block
        // design achieves the one-block bound
        let core_spec = AugmentSpec::new(&d0, 2, 1, BlockingScheme::None).unwrap();
        let core = ta_augment(&core_spec, &cfg).unwrap();
        assert_eq!(core.achieved, blocked.achieved);
        // the appended column leaves the searched blocks untouched
        assert_eq!(core.best.d1(), blocked.best.d1());
        assert_eq!(core.best.d2(), blocked.best.d2());
        let last = blocked.best.full().columns() - 1;
        let col: Vec<u32> = blocked
            .best
            .full()
            .rows()
            .iter()
            .map(|row| row[last])
            .collect();
        assert_eq!(col, vec![0, 0, 1, 1]);
    }

    #[test]
    fn two_block_columns_never_move() {
        let d0 = Design::new(
            vec![vec![0, 0], vec![0, 1], vec![1, 2], vec![1, 0], vec![0, 2], vec![1, 1]],
            vec![2, 3],
        )
        .unwrap();
        let spec = AugmentSpec::new(&d0, 6, 0, BlockingScheme::TwoFactorB).unwrap();
        let cfg = TaConfig {
            outer: 4,
            inner: 100,
            probes: 50,
            restarts: 2,
            seed: 19,
            ..TaConfig::default()
        };
        let result = augment_two_block(&spec, &cfg).unwrap();
        let rows = result.best.full().rows();
        for (i, row) in rows.iter().enumerate() {
            let cols = result.best.full().columns();
            if i < 6 {
                assert_eq!(row[cols - 2], 0);
                assert_eq!(row[cols - 1], 0);
            } else {
                assert_eq!(row[cols - 2], 1);
                assert_eq!(row[cols - 1], u32::from(i >= 9));
            }
        }
    }

    #[test]
    fn overflow_stage_rule() {
        let plan = MultiStagePlan {
            stage_runs: vec![6, 6, 6, 12],
            r: 1,
            blocking: false,
        };
        // n0 = 6: balance holds while added <= 12
        assert!(!plan.is_overflow_stage(1, 6));
        assert!(!plan.is_overflow_stage(2, 6));
        assert!(plan.is_overflow_stage(3, 6));
        assert!(plan.is_overflow_stage(4, 6));
    }

    #[test]
    fn overflow_stages_admit_zero_entries() {
        // n0 = 6 with 18 added runs: the third stage exceeds twice the
        // initial run count, so its additional-column entries come from
        // {0,1,2} with near-balanced counts
        let d0 = Design::new(
            vec![vec![0, 0], vec![0, 1], vec![1, 2], vec![1, 0], vec![0, 2], vec![1, 1]],
            vec![2, 3],
        )
        .unwrap();
        let plan = MultiStagePlan {
            stage_runs: vec![6, 6, 6],
            r: 1,
            blocking: false,
        };
        let cfg = TaConfig {
            outer: 4,
            inner: 80,
            probes: 40,
            restarts: 2,
            seed: 13,
            ..TaConfig::default()
        };
        let result = multistage_augment(&d0, &plan, &cfg).unwrap();
        assert_eq!(
            result.stages.iter().map(|s| s.overflow).collect::<Vec<_>>(),
            vec![false, false, true]
        );
        // stage bounds exist only at stage 1 when factors were added
        assert!(result.stages[0].bound.is_some());
        assert!(result.stages[1].bound.is_none());
        let additional = 2; // column index of the added factor
        let stage3 = &result.design.rows()[18..24];
        let mut counts = [0usize; 3];
        for row in stage3 {
            counts[row[additional] as usize] += 1;
        }
        assert_eq!(counts, [2, 2, 2], "stage 3 draws near-balanced {{0,1,2}}");
        let earlier = &result.design.rows()[6..18];
        assert!(
            earlier.iter().all(|row| row[additional] != 0),
            "pre-overflow stages keep the {{1,2}} balance"
        );
    }

    #[test]
    fn schedule_on_a_production_size_instance() {
        let d0 = crate::io::read_design(
            std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
                .join("fixtures")
                .join("example2_d0.txt"),
        )
        .unwrap();
        let spec = AugmentSpec::new(&d0, 6, 1, BlockingScheme::None).unwrap();
        let aug = {
            let d1 = d0.rows().to_vec();
            let d2 = (0..6).map(|i| vec![1 + (i as u32) % 2]).collect();
            assemble(&spec, &d1, &d2).unwrap()
        };
        let cfg = TaConfig {
            outer: 50,
            probes: 1000,
            ..TaConfig::default()
        };
        let schedule = threshold_schedule(&aug, &cfg, &mut ChaCha8Rng::seed_from_u64(17));
        assert_eq!(schedule.len(), 50);
        assert!(schedule[0] > 0.0, "probes around a rough start find uphill moves");
        for w in schedule.windows(2) {
            assert!(w[0] > w[1], "strictly decreasing");
        }
        assert_eq!(*schedule.last().unwrap(), 0.0);
    }

    #[test]
    fn multistage_stacks_and_blocks() {
        let d0 = Design::new(
            vec![vec![0, 0], vec![0, 1], vec![1, 2], vec![1, 0], vec![0, 2], vec![1, 1]],
            vec![2, 3],
        )
        .unwrap();
        let plan = MultiStagePlan {
            stage_runs: vec![6, 6],
            r: 0,
            blocking: true,
        };
        let cfg = TaConfig {
            outer: 4,
            inner: 60,
            probes: 40,
            restarts: 2,
            seed: 2,
            ..TaConfig::default()
        };
        let result = multistage_augment(&d0, &plan, &cfg).unwrap();
        assert_eq!(result.design.runs(), 18);
        assert_eq!(result.stages.len(), 2);
        assert!(result.stages[1].bound.is_some());
        let blocked = result.blocked.unwrap();
        assert_eq!(blocked.levels().last(), Some(&3));
        let labels: Vec<u32> = blocked.rows().iter().map(|r| r[2]).collect();
        assert_eq!(&labels[..6], &[0; 6]);
        assert_eq!(&labels[6..12], &[1; 6]);
        assert_eq!(&labels[12..], &[2; 6]);
    }
}
