//! Mixed-level U-type designs and their column-augmented assemblies.
//!
//! A design is an `n x m` matrix whose column `k` takes values in
//! `0..q_k`. U-type means every column hits each of its levels equally
//! often. Column-augmented designs stack a follow-up block under an
//! initial design and add new three-level factors that sit at level 0
//! in the initial runs, plus optional two-level blocking factors that
//! separate the stages.

use crate::error::{Error, Result};

pub type Matrix = Vec<Vec<u32>>;

/// Run matrix plus per-column level counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    matrix: Matrix,
    levels: Vec<u32>,
}

impl Design {
    /// Builds a design, checking shape and entry ranges.
    pub fn new(matrix: Matrix, levels: Vec<u32>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Structure("design needs at least one column".into()));
        }
        if let Some(q) = levels.iter().find(|&&q| q < 2) {
            return Err(Error::Structure(format!("level count {q} < 2")));
        }
        if matrix.is_empty() {
            return Err(Error::Structure("design needs at least one run".into()));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != levels.len() {
                return Err(Error::Structure(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    levels.len()
                )));
            }
            for (k, (&x, &q)) in row.iter().zip(&levels).enumerate() {
                if x >= q {
                    return Err(Error::InvalidEntry {
                        row: i + 1,
                        column: k + 1,
                        value: x,
                        levels: q,
                    });
                }
            }
        }
        Ok(Design { matrix, levels })
    }

    pub fn runs(&self) -> usize {
        self.matrix.len()
    }

    pub fn columns(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, column: usize) -> u32 {
        self.matrix[row][column]
    }

    pub(crate) fn set_entry(&mut self, row: usize, column: usize, value: u32) {
        debug_assert!(value < self.levels[column]);
        self.matrix[row][column] = value;
    }

    pub(crate) fn swap_entries(&mut self, column: usize, row_a: usize, row_b: usize) {
        let a = self.matrix[row_a][column];
        self.matrix[row_a][column] = self.matrix[row_b][column];
        self.matrix[row_b][column] = a;
    }

    /// New design with `extra` rows stacked below (same levels).
    pub fn stack(&self, extra: &[Vec<u32>]) -> Result<Design> {
        let mut matrix = self.matrix.clone();
        matrix.extend(extra.iter().cloned());
        Design::new(matrix, self.levels.clone())
    }

    /// New design restricted to the given columns, in the given order.
    pub fn select_columns(&self, order: &[usize]) -> Result<Design> {
        let matrix = self
            .matrix
            .iter()
            .map(|row| order.iter().map(|&k| row[k]).collect())
            .collect();
        let levels = order.iter().map(|&k| self.levels[k]).collect();
        Design::new(matrix, levels)
    }
}

/// Per-column level histogram and balance flag.
#[derive(Debug, Clone)]
pub struct ColumnBalance {
    pub column: usize,
    pub histogram: Vec<usize>,
    pub balanced: bool,
}

/// Output of [`validate_u_type`].
#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub balanced: bool,
    pub columns: Vec<ColumnBalance>,
}

impl BalanceReport {
    pub fn offending_columns(&self) -> Vec<usize> {
        self.columns
            .iter()
            .filter(|c| !c.balanced)
            .map(|c| c.column)
            .collect()
    }
}

/// Checks that every column takes each of its levels exactly n/q times.
pub fn validate_u_type(design: &Design) -> BalanceReport {
    let n = design.runs();
    let columns: Vec<ColumnBalance> = (0..design.columns())
        .map(|k| {
            let q = design.levels()[k] as usize;
            let mut histogram = vec![0usize; q];
            for row in design.rows() {
                histogram[row[k] as usize] += 1;
            }
            let balanced = n.is_multiple_of(q) && histogram.iter().all(|&c| c == n / q);
            ColumnBalance {
                column: k,
                histogram,
                balanced,
            }
        })
        .collect();
    BalanceReport {
        balanced: columns.iter().all(|c| c.balanced),
        columns,
    }
}

/// How the follow-up stage is separated from the initial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockingScheme {
    /// No blocking factor.
    None,
    /// One two-level column: 0 on initial rows, 1 on augmented rows.
    OneFactor,
    /// Two two-level columns: the first as in `OneFactor`; the second is 0
    /// on the initial rows and the first half of the augmented rows, 1 on
    /// the second half. Requires an even follow-up run count.
    TwoFactorB,
}

impl BlockingScheme {
    pub fn column_count(self) -> usize {
        match self {
            BlockingScheme::None => 0,
            BlockingScheme::OneFactor => 1,
            BlockingScheme::TwoFactorB => 2,
        }
    }
}

/// Column composition of an assembled augmented design, in normalized
/// order: two-level initial, three-level initial, additional three-level,
/// blocking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelClass {
    pub m1: usize,
    pub m2: usize,
    pub r: usize,
    pub blocking: BlockingScheme,
}

impl LevelClass {
    pub fn new(m1: usize, m2: usize, r: usize, blocking: BlockingScheme) -> Result<Self> {
        if m1 + m2 == 0 {
            return Err(Error::Structure(
                "initial design needs at least one factor".into(),
            ));
        }
        Ok(LevelClass { m1, m2, r, blocking })
    }

    /// Initial factor count m = m1 + m2.
    pub fn m(&self) -> usize {
        self.m1 + self.m2
    }

    /// Total columns of the assembled design.
    pub fn total_columns(&self) -> usize {
        self.m() + self.r + self.blocking.column_count()
    }
}

/// Value multiset allowed in the additional-factor block of the follow-up
/// rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum D2Mode {
    /// Equal counts of 1 and 2 per column (single-stage rule).
    #[default]
    BalancedOneTwo,
    /// Values from {0,1,2} with per-column counts differing by at most one
    /// (late multi-stage rule).
    Overflow,
}

/// One augmentation problem: initial design, follow-up run count, column
/// classes.
#[derive(Debug, Clone)]
pub struct AugmentSpec {
    initial: Design,
    n1: usize,
    class: LevelClass,
    column_order: Vec<usize>,
    allow_n1_above_n: bool,
    d2_mode: D2Mode,
}

impl AugmentSpec {
    /// Builds a spec from an initial design whose columns may interleave
    /// two- and three-level factors; columns are normalized to two-level
    /// first and the original order retained for output mapping.
    pub fn new(initial: &Design, n1: usize, r: usize, blocking: BlockingScheme) -> Result<Self> {
        let mut two = Vec::new();
        let mut three = Vec::new();
        for (k, &q) in initial.levels().iter().enumerate() {
            match q {
                2 => two.push(k),
                3 => three.push(k),
                other => {
                    return Err(Error::Structure(format!(
                        "initial column {} has {} levels; only 2 and 3 are supported",
                        k + 1,
                        other
                    )))
                }
            }
        }
        let report = validate_u_type(initial);
        if !report.balanced {
            return Err(Error::Unbalanced(format!(
                "initial design is not U-type (columns {:?})",
                report.offending_columns()
            )));
        }
        let class = LevelClass::new(two.len(), three.len(), r, blocking)?;
        let column_order: Vec<usize> = two.into_iter().chain(three).collect();
        let initial = initial.select_columns(&column_order)?;
        Ok(AugmentSpec {
            initial,
            n1,
            class,
            column_order,
            allow_n1_above_n: false,
            d2_mode: D2Mode::default(),
        })
    }

    /// Permit n1 > n; the bounds are then outside their derivation
    /// assumptions and callers should flag that.
    pub fn allow_n1_above_n(mut self) -> Self {
        self.allow_n1_above_n = true;
        self
    }

    pub fn with_d2_mode(mut self, mode: D2Mode) -> Self {
        self.d2_mode = mode;
        self
    }

    /// Initial design with columns in normalized order.
    pub fn initial(&self) -> &Design {
        &self.initial
    }

    /// For each normalized initial column, its index in the input design.
    pub fn column_order(&self) -> &[usize] {
        &self.column_order
    }

    pub fn n(&self) -> usize {
        self.initial.runs()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn class(&self) -> LevelClass {
        self.class
    }

    pub fn d2_mode(&self) -> D2Mode {
        self.d2_mode
    }

    /// Levels of the assembled design's columns.
    pub fn full_levels(&self) -> Vec<u32> {
        let mut levels = self.initial.levels().to_vec();
        levels.extend(std::iter::repeat_n(3, self.class.r));
        levels.extend(std::iter::repeat_n(2, self.class.blocking.column_count()));
        levels
    }
}

/// Checks the follow-up run count against the divisibility table and the
/// n1 <= n rule.
pub fn check_augment_compatibility(spec: &AugmentSpec) -> Result<()> {
    let LevelClass { m1, m2, r, blocking } = spec.class();
    let n1 = spec.n1();
    if n1 < 2 {
        return Err(Error::Incompatible(format!("n1 = {n1} but must be >= 2")));
    }
    if n1 > spec.n() && !spec.allow_n1_above_n {
        return Err(Error::Incompatible(format!(
            "n1 = {} exceeds n = {}; pass the override to allow it",
            n1,
            spec.n()
        )));
    }
    if m2 == 0 {
        if !n1.is_multiple_of(2) {
            return Err(Error::Incompatible(format!(
                "n1 must be a multiple of 2 for a two-level initial design (got {n1})"
            )));
        }
    } else if m1 == 0 && r == 0 {
        if !n1.is_multiple_of(3) {
            return Err(Error::Incompatible(format!(
                "n1 must be a multiple of 3 for a three-level initial design with r = 0 (got {n1})"
            )));
        }
    } else if !n1.is_multiple_of(6) {
        return Err(Error::Incompatible(format!(
            "n1 must be a multiple of 6 (got {n1})"
        )));
    }
    if blocking == BlockingScheme::TwoFactorB && !n1.is_multiple_of(2) {
        return Err(Error::Incompatible(format!(
            "the two-factor blocking scheme needs an even n1 (got {n1})"
        )));
    }
    Ok(())
}

/// Assembled column-augmented design. `full` holds the complete
/// (n+n1) x (m+r+blocking) matrix; `d1`/`d2` are the follow-up blocks for
/// the initial and additional factors.
#[derive(Debug, Clone)]
pub struct AugmentedDesign {
    full: Design,
    spec: AugmentSpec,
    d1: Matrix,
    d2: Matrix,
}

impl AugmentedDesign {
    pub fn full(&self) -> &Design {
        &self.full
    }

    pub fn spec(&self) -> &AugmentSpec {
        &self.spec
    }

    pub fn d1(&self) -> &Matrix {
        &self.d1
    }

    pub fn d2(&self) -> &Matrix {
        &self.d2
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn n1(&self) -> usize {
        self.spec.n1()
    }

    /// Indices of columns a search move may touch (initial + additional
    /// factors of the follow-up block; blocking columns are fixed).
    pub fn swappable_columns(&self) -> std::ops::Range<usize> {
        0..self.spec.class().m() + self.spec.class().r
    }

    /// Applies a swap of two follow-up rows in one column, keeping the
    /// internal blocks in sync. Contract as in `wd_delta_swap`.
    pub fn apply_swap(&mut self, column: usize, row_a: usize, row_b: usize) -> Result<()> {
        let n = self.n();
        let m = self.spec.class().m();
        if !self.swappable_columns().contains(&column) {
            return Err(Error::Contract(format!(
                "column {column} is not swappable"
            )));
        }
        if row_a < n || row_b < n || row_a == row_b {
            return Err(Error::Contract(
                "swaps must involve two distinct augmented rows".into(),
            ));
        }
        let (a, b) = (
            self.full.entry(row_a, column),
            self.full.entry(row_b, column),
        );
        self.full.matrix[row_a][column] = b;
        self.full.matrix[row_b][column] = a;
        if column < m {
            self.d1[row_a - n][column] = b;
            self.d1[row_b - n][column] = a;
        } else {
            self.d2[row_a - n][column - m] = b;
            self.d2[row_b - n][column - m] = a;
        }
        Ok(())
    }
}

fn check_d2_column(col: &[u32], mode: D2Mode) -> Result<()> {
    let n1 = col.len();
    let mut counts = [0usize; 3];
    for &x in col {
        if x > 2 {
            return Err(Error::Unbalanced(format!(
                "additional-factor entry {x} outside 0..=2"
            )));
        }
        counts[x as usize] += 1;
    }
    match mode {
        D2Mode::BalancedOneTwo => {
            if counts[0] != 0 || counts[1] != counts[2] {
                return Err(Error::Unbalanced(format!(
                    "additional column must hold {}/{} ones and twos, got {:?}",
                    n1 / 2,
                    n1 / 2,
                    counts
                )));
            }
        }
        D2Mode::Overflow => {
            let lo = counts.iter().min().unwrap();
            let hi = counts.iter().max().unwrap();
            if hi - lo > 1 {
                return Err(Error::Unbalanced(format!(
                    "overflow column counts {counts:?} differ by more than one"
                )));
            }
        }
    }
    Ok(())
}

/// Stacks the initial design over the follow-up block and attaches the
/// zero block and blocking columns.
pub fn assemble(spec: &AugmentSpec, d1: &Matrix, d2: &Matrix) -> Result<AugmentedDesign> {
    let n = spec.n();
    let n1 = spec.n1();
    let class = spec.class();
    let m = class.m();
    if d1.len() != n1 || d1.iter().any(|row| row.len() != m) {
        return Err(Error::Structure(format!(
            "d1 must be {n1} x {m}",
        )));
    }
    if d2.len() != n1 || d2.iter().any(|row| row.len() != class.r) {
        return Err(Error::Structure(format!(
            "d2 must be {} x {}",
            n1, class.r
        )));
    }
    let d1_design = Design::new(d1.clone(), spec.initial().levels().to_vec())?;
    let d1_report = validate_u_type(&d1_design);
    if !d1_report.balanced {
        return Err(Error::Unbalanced(format!(
            "d1 is not U-type (columns {:?})",
            d1_report.offending_columns()
        )));
    }
    for c in 0..class.r {
        let col: Vec<u32> = d2.iter().map(|row| row[c]).collect();
        check_d2_column(&col, spec.d2_mode())?;
    }

    let blocks = class.blocking.column_count();
    let half = n1 / 2;
    let mut matrix: Matrix = Vec::with_capacity(n + n1);
    for row in spec.initial().rows() {
        let mut full_row = row.clone();
        full_row.extend(std::iter::repeat_n(0, class.r + blocks));
        matrix.push(full_row);
    }
    for i in 0..n1 {
        let mut full_row = d1[i].clone();
        full_row.extend(d2[i].iter().copied());
        match class.blocking {
            BlockingScheme::None => {}
            BlockingScheme::OneFactor => full_row.push(1),
            BlockingScheme::TwoFactorB => {
                full_row.push(1);
                full_row.push(if i < half { 0 } else { 1 });
            }
        }
        matrix.push(full_row);
    }
    let full = Design::new(matrix, spec.full_levels())?;
    Ok(AugmentedDesign {
        full,
        spec: spec.clone(),
        d1: d1.clone(),
        d2: d2.clone(),
    })
}

/// Which stage(s) a row pair spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    InitialInitial,
    AugmentedAugmented,
    Cross,
}

/// Coincidence counts for one unordered row pair, split by column class:
/// `f` over the two-level initial columns, `v` over the three-level
/// initial columns, `t` over the additional columns counting only matches
/// at levels 1 or 2, `a` on the second blocking column when present.
#[derive(Debug, Clone, Copy)]
pub struct PairCoincidence {
    pub row_a: usize,
    pub row_b: usize,
    pub class: PairClass,
    pub f: u32,
    pub v: u32,
    pub t: u32,
    pub a: u32,
}

/// All unordered row-pair coincidence counts of an augmented design.
#[derive(Debug, Clone)]
pub struct CoincidenceProfile {
    pub pairs: Vec<PairCoincidence>,
    pub n: usize,
    pub n1: usize,
    pub class: LevelClass,
}

/// Counts F/V/T (and A for the two-factor blocking scheme) for every
/// unordered row pair. Matches at level 0 of an additional column are not
/// T-coincidences.
pub fn coincidence_profile(aug: &AugmentedDesign) -> CoincidenceProfile {
    let class = aug.spec().class();
    let (m1, m2, r) = (class.m1, class.m2, class.r);
    let n = aug.n();
    let total = n + aug.n1();
    let rows = aug.full().rows();
    let second_block = (class.blocking == BlockingScheme::TwoFactorB)
        .then(|| class.m() + r + 1);

    let mut pairs = Vec::with_capacity(total * (total - 1) / 2);
    for i in 0..total {
        for j in (i + 1)..total {
            let (ri, rj) = (&rows[i], &rows[j]);
            let f = (0..m1).filter(|&k| ri[k] == rj[k]).count() as u32;
            let v = (m1..m1 + m2).filter(|&k| ri[k] == rj[k]).count() as u32;
            let t = (m1 + m2..m1 + m2 + r)
                .filter(|&k| ri[k] == rj[k] && ri[k] != 0)
                .count() as u32;
            let a = second_block
                .map(|k| u32::from(ri[k] == rj[k]))
                .unwrap_or(0);
            let class = if j < n {
                PairClass::InitialInitial
            } else if i >= n {
                PairClass::AugmentedAugmented
            } else {
                PairClass::Cross
            };
            pairs.push(PairCoincidence {
                row_a: i,
                row_b: j,
                class,
                f,
                v,
                t,
                a,
            });
        }
    }
    CoincidenceProfile {
        pairs,
        n,
        n1: aug.n1(),
        class,
    }
}

impl CoincidenceProfile {
    /// Sum of a per-pair quantity over unordered pairs of one class.
    pub fn sum_over(&self, class: PairClass, field: impl Fn(&PairCoincidence) -> u64) -> u64 {
        self.pairs
            .iter()
            .filter(|p| p.class == class)
            .map(field)
            .sum()
    }
}
