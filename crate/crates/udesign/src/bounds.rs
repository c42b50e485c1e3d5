//! Analytical lower bounds on WD and E(f_NOD) for column augmented
//! designs.
//!
//! Every bound has the shape
//!
//! ```text
//! constant + initial_coeff * baseline
//!          + outer_coeff * (aug_weight * AUG + cross_weight * CROSS)
//! ```
//!
//! where AUG ranges over follow-up row pairs and CROSS over
//! initial-by-follow-up pairs. AUG and CROSS are either exponential
//! means (continuous relaxation of the coincidence sums) or integer
//! splits p*base^w + q*base^(w+1) when the coincidence totals are
//! integers, which is tighter. All intermediates are kept on the report
//! so the value can be recomputed and audited.

use crate::error::{Error, Result};
use serde::Serialize;

/// ln(6/5): per-coincidence log factor of two-level columns.
pub fn ln_ratio_two() -> f64 {
    (6.0f64 / 5.0).ln()
}

/// ln(27/23): per-coincidence log factor of three-level columns.
pub fn ln_ratio_three() -> f64 {
    (27.0f64 / 23.0).ln()
}

/// Constant term shared by the augmented WD expansions.
pub fn c_of_r(n: usize, n1: usize, m: usize, r: usize) -> f64 {
    let (nf, n1f) = (n as f64, n1 as f64);
    let total = nf + n1f;
    -((4.0f64 / 3.0).powi(r as i32) - nf * nf / (total * total) * 1.5f64.powi(r as i32))
        * (4.0f64 / 3.0).powi(m as i32)
        + n1f / (total * total) * 1.5f64.powi((m + r) as i32)
}

/// Exact non-negative rational, used for coincidence totals whose
/// denominators divide 6.
#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den > 0, "denominator must be positive");
        Rational { num, den }
    }

    pub fn integer(value: i64) -> Self {
        Rational { num: value, den: 1 }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_integer(self) -> bool {
        self.num % self.den == 0
    }
}

/// Result of distributing an integer total over `count` slots as evenly
/// as possible, or the continuous mean when the total is not an integer.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum Split {
    Exact { w: i64, p: i64, q: i64 },
    Continuous { mean: f64 },
}

/// Splits `total` over `count` slots: w = floor(total/count), p + q =
/// count, p*w + q*(w+1) = total. Non-integral totals signal the caller
/// to fall back to the continuous mean.
pub fn integer_split(total: Rational, count: i64) -> Result<Split> {
    if count < 1 {
        return Err(Error::Domain("split needs a positive slot count".into()));
    }
    if total.num < 0 {
        return Err(Error::Domain("split needs a non-negative total".into()));
    }
    if total.is_integer() {
        let t = total.num / total.den;
        let w = t.div_euclid(count);
        let q = t - w * count;
        Ok(Split::Exact {
            w,
            p: count - q,
            q,
        })
    } else {
        Ok(Split::Continuous {
            mean: total.as_f64() / count as f64,
        })
    }
}

/// Exponential pair term: pairs * e^phi.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpTerm {
    pub phi: f64,
    pub pairs: i64,
    pub value: f64,
}

impl ExpTerm {
    fn new(phi: f64, pairs: i64) -> Self {
        ExpTerm {
            phi,
            pairs,
            value: pairs as f64 * phi.exp(),
        }
    }
}

/// Split pair term: p*base^w + q*base^(w+1), or count*base^mean on the
/// continuous fallback.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitTerm {
    pub base: f64,
    pub total: Rational,
    pub count: i64,
    pub split: Split,
    pub value: f64,
}

impl SplitTerm {
    fn new(base: f64, total: Rational, count: i64) -> Result<Self> {
        let split = integer_split(total, count)?;
        let value = match split {
            Split::Exact { w, p, q } => {
                p as f64 * base.powi(w as i32) + q as f64 * base.powi(w as i32 + 1)
            }
            Split::Continuous { mean } => count as f64 * (base.ln() * mean).exp(),
        };
        Ok(SplitTerm {
            base,
            total,
            count,
            split,
            value,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum PairTerm {
    Exp(ExpTerm),
    Split(SplitTerm),
}

impl PairTerm {
    pub fn value(&self) -> f64 {
        match self {
            PairTerm::Exp(t) => t.value,
            PairTerm::Split(t) => t.value,
        }
    }
}

/// Which closed form produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    WdMixed,
    WdTwoLevel,
    WdThreeLevel,
    WdOneBlock,
    WdTwoBlock,
    WdStage,
    Fnod,
    FnodOneBlock,
    FnodTwoBlock,
}

/// Initial-design composition the bound specializes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialKind {
    Mixed,
    TwoLevel,
    ThreeLevel,
}

impl InitialKind {
    pub fn classify(m1: usize, m2: usize) -> Self {
        if m2 == 0 {
            InitialKind::TwoLevel
        } else if m1 == 0 {
            InitialKind::ThreeLevel
        } else {
            InitialKind::Mixed
        }
    }
}

/// Intermediates of a WD bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WdBoundParams {
    pub ln_ratio_two: f64,
    pub ln_ratio_three: f64,
    pub variant: InitialKind,
    pub constant: f64,
    pub initial_coeff: f64,
    pub outer_coeff: f64,
    pub aug_weight: f64,
    pub cross_weight: f64,
    pub aug: PairTerm,
    pub cross: PairTerm,
}

impl WdBoundParams {
    /// Re-evaluates the closed form from the stored intermediates.
    pub fn recompute(&self, baseline: f64) -> f64 {
        self.constant
            + self.initial_coeff * baseline
            + self.outer_coeff
                * (self.aug_weight * self.aug.value() + self.cross_weight * self.cross.value())
    }
}

/// One split system of an E(f_NOD) bound: zeta slots at psi, eta at
/// psi+1, each shifted by a fixed blocking contribution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FnodSplit {
    pub total: Rational,
    pub count: i64,
    pub shift: i64,
    pub split: Split,
    pub value: f64,
}

impl FnodSplit {
    fn new(total: Rational, count: i64, shift: i64) -> Result<Self> {
        let split = integer_split(total, count)?;
        let value = match split {
            Split::Exact { w, p, q } => {
                let lo = (w + shift) as f64;
                let hi = (w + shift + 1) as f64;
                p as f64 * lo * lo + q as f64 * hi * hi
            }
            Split::Continuous { mean } => {
                let x = mean + shift as f64;
                count as f64 * x * x
            }
        };
        Ok(FnodSplit {
            total,
            count,
            shift,
            split,
            value,
        })
    }
}

/// Intermediates of an E(f_NOD) bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FnodBoundParams {
    pub aug: FnodSplit,
    pub cross: FnodSplit,
    pub initial_coeff: f64,
    pub pair_coeff: f64,
    pub linear_term: f64,
    pub bracket: f64,
}

impl FnodBoundParams {
    pub fn recompute(&self, baseline: f64) -> f64 {
        self.initial_coeff * baseline
            + self.pair_coeff * (self.aug.value + 2.0 * self.cross.value)
            + self.linear_term
            - self.pair_coeff * self.bracket
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum BoundParamSet {
    Wd(WdBoundParams),
    Fnod(FnodBoundParams),
}

/// Echo of the inputs a bound was evaluated at. For multi-stage bounds
/// `n` is the accumulated run count and `n1` the stage's added runs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundInputs {
    pub n: usize,
    pub n1: usize,
    pub m1: usize,
    pub m2: usize,
    pub r: usize,
    /// WD or E(f_NOD) of the initial design.
    pub baseline: f64,
}

/// A lower-bound value with its provenance and intermediates.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value: f64,
    pub inputs: BoundInputs,
    pub params: BoundParamSet,
}

impl BoundReport {
    /// Recomputes the value from the stored parameters.
    pub fn recompute(&self) -> f64 {
        match &self.params {
            BoundParamSet::Wd(p) => p.recompute(self.inputs.baseline),
            BoundParamSet::Fnod(p) => p.recompute(self.inputs.baseline),
        }
    }
}

fn check_pair_domain(n: usize, n1: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::Domain("initial run count must be positive".into()));
    }
    if n1 < 2 {
        return Err(Error::Domain(
            "follow-up run count must be at least 2".into(),
        ));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish_wd(
    kind: BoundKind,
    variant: InitialKind,
    inputs: BoundInputs,
    constant: f64,
    initial_coeff: f64,
    outer_coeff: f64,
    aug_weight: f64,
    cross_weight: f64,
    aug: PairTerm,
    cross: PairTerm,
) -> BoundReport {
    let params = WdBoundParams {
        ln_ratio_two: ln_ratio_two(),
        ln_ratio_three: ln_ratio_three(),
        variant,
        constant,
        initial_coeff,
        outer_coeff,
        aug_weight,
        cross_weight,
        aug,
        cross,
    };
    BoundReport {
        kind,
        value: params.recompute(inputs.baseline),
        inputs,
        params: BoundParamSet::Wd(params),
    }
}

fn mixed_exp_terms(n: usize, m1: usize, m2: usize, r: usize, n1: usize) -> (ExpTerm, ExpTerm) {
    let (a, b) = (ln_ratio_two(), ln_ratio_three());
    let n1f = n1 as f64;
    let phi_aug = a * m1 as f64 * (n1f - 2.0) / (2.0 * (n1f - 1.0))
        + b * m2 as f64 * (n1f - 3.0) / (3.0 * (n1f - 1.0))
        + b * r as f64 * (n1f - 2.0) / (2.0 * (n1f - 1.0));
    let phi_cross = a * m1 as f64 / 2.0 + b * m2 as f64 / 3.0;
    (
        ExpTerm::new(phi_aug, (n1 * (n1 - 1)) as i64),
        ExpTerm::new(phi_cross, (n * n1) as i64),
    )
}

/// WD bound for a mixed-level initial design (continuous pair terms).
pub fn lbw_mixed(
    n: usize,
    m1: usize,
    m2: usize,
    r: usize,
    n1: usize,
    wd0: f64,
) -> Result<BoundReport> {
    check_pair_domain(n, n1)?;
    let m = m1 + m2;
    let total = (n + n1) as f64;
    let (aug, cross) = mixed_exp_terms(n, m1, m2, r, n1);
    Ok(finish_wd(
        BoundKind::WdMixed,
        InitialKind::classify(m1, m2),
        BoundInputs { n, n1, m1, m2, r, baseline: wd0 },
        c_of_r(n, n1, m, r),
        (n * n) as f64 / (total * total) * 1.5f64.powi(r as i32),
        1.25f64.powi(m1 as i32) * (23.0f64 / 18.0).powi((m2 + r) as i32) / (total * total),
        1.0,
        2.0,
        PairTerm::Exp(aug),
        PairTerm::Exp(cross),
    ))
}

/// WD bound for a two-level initial design; the cross term becomes an
/// integer split, which is tighter when m is odd.
pub fn lbw_two_level(n: usize, m: usize, r: usize, n1: usize, wd0: f64) -> Result<BoundReport> {
    check_pair_domain(n, n1)?;
    let (a, b) = (ln_ratio_two(), ln_ratio_three());
    let n1f = n1 as f64;
    let total = (n + n1) as f64;
    let phi_aug = (a * m as f64 + b * r as f64) * (n1f - 2.0) / (2.0 * (n1f - 1.0));
    let aug = ExpTerm::new(phi_aug, (n1 * (n1 - 1)) as i64);
    let cross = SplitTerm::new(
        6.0 / 5.0,
        Rational::new((m * n * n1) as i64, 2),
        (n * n1) as i64,
    )?;
    Ok(finish_wd(
        BoundKind::WdTwoLevel,
        InitialKind::TwoLevel,
        BoundInputs { n, n1, m1: m, m2: 0, r, baseline: wd0 },
        c_of_r(n, n1, m, r),
        (n * n) as f64 / (total * total) * 1.5f64.powi(r as i32),
        1.25f64.powi(m as i32) * (23.0f64 / 18.0).powi(r as i32) / (total * total),
        1.0,
        2.0,
        PairTerm::Exp(aug),
        PairTerm::Split(cross),
    ))
}

fn three_level_split_terms(n: usize, m: usize, r: usize, n1: usize) -> Result<(SplitTerm, SplitTerm)> {
    let aug_total = Rational::new(
        (2 * m * n1 * (n1 - 3) + 3 * r * n1 * (n1 - 2)) as i64,
        6,
    );
    let aug = SplitTerm::new(27.0 / 23.0, aug_total, (n1 * (n1 - 1)) as i64)?;
    let cross = SplitTerm::new(
        27.0 / 23.0,
        Rational::new((m * n * n1) as i64, 3),
        (n * n1) as i64,
    )?;
    Ok((aug, cross))
}

/// WD bound for a three-level initial design; both pair terms become
/// integer splits.
pub fn lbw_three_level(n: usize, m: usize, r: usize, n1: usize, wd0: f64) -> Result<BoundReport> {
    check_pair_domain(n, n1)?;
    if n1 < 3 {
        return Err(Error::Domain(
            "three-level bound needs n1 >= 3".into(),
        ));
    }
    let total = (n + n1) as f64;
    let (aug, cross) = three_level_split_terms(n, m, r, n1)?;
    Ok(finish_wd(
        BoundKind::WdThreeLevel,
        InitialKind::ThreeLevel,
        BoundInputs { n, n1, m1: 0, m2: m, r, baseline: wd0 },
        c_of_r(n, n1, m, r),
        (n * n) as f64 / (total * total) * 1.5f64.powi(r as i32),
        (23.0f64 / 18.0).powi((m + r) as i32) / (total * total),
        1.0,
        2.0,
        PairTerm::Split(aug),
        PairTerm::Split(cross),
    ))
}

/// WD bound with one additional blocking factor. The pair terms are the
/// plain-bound terms of the matching initial kind; only the constants
/// and the positive weights change.
pub fn lbw_one_block(
    n: usize,
    m1: usize,
    m2: usize,
    r: usize,
    n1: usize,
    wd0: f64,
) -> Result<BoundReport> {
    check_pair_domain(n, n1)?;
    let m = m1 + m2;
    let total = (n + n1) as f64;
    let variant = InitialKind::classify(m1, m2);
    let (aug, cross, outer) = match variant {
        InitialKind::Mixed => {
            let (aug, cross) = mixed_exp_terms(n, m1, m2, r, n1);
            let outer =
                1.25f64.powi(m1 as i32) * (23.0f64 / 18.0).powi((m2 + r) as i32) / (total * total);
            (PairTerm::Exp(aug), PairTerm::Exp(cross), outer)
        }
        InitialKind::TwoLevel => {
            let (a, b) = (ln_ratio_two(), ln_ratio_three());
            let n1f = n1 as f64;
            let phi_aug = (a * m as f64 + b * r as f64) * (n1f - 2.0) / (2.0 * (n1f - 1.0));
            let aug = ExpTerm::new(phi_aug, (n1 * (n1 - 1)) as i64);
            let cross = SplitTerm::new(
                6.0 / 5.0,
                Rational::new((m * n * n1) as i64, 2),
                (n * n1) as i64,
            )?;
            let outer =
                1.25f64.powi(m as i32) * (23.0f64 / 18.0).powi(r as i32) / (total * total);
            (PairTerm::Exp(aug), PairTerm::Split(cross), outer)
        }
        InitialKind::ThreeLevel => {
            if n1 < 3 {
                return Err(Error::Domain("three-level bound needs n1 >= 3".into()));
            }
            let (aug, cross) = three_level_split_terms(n, m, r, n1)?;
            let outer = (23.0f64 / 18.0).powi((m + r) as i32) / (total * total);
            (PairTerm::Split(aug), PairTerm::Split(cross), outer)
        }
    };
    Ok(finish_wd(
        BoundKind::WdOneBlock,
        variant,
        BoundInputs { n, n1, m1, m2, r, baseline: wd0 },
        c_of_r(n, n1, m, r + 1),
        (n * n) as f64 / (total * total) * 1.5f64.powi(r as i32 + 1),
        outer,
        1.5,
        2.5,
        aug,
        cross,
    ))
}

/// WD bound with the two-factor blocking scheme. The second blocking
/// column joins the two-level class with the continuous pair terms; the
/// same closed form serves m1 = 0.
pub fn lbw_two_block(
    n: usize,
    m1: usize,
    m2: usize,
    r: usize,
    n1: usize,
    wd0: f64,
) -> Result<BoundReport> {
    check_pair_domain(n, n1)?;
    if !n1.is_multiple_of(2) {
        return Err(Error::Domain(
            "two-factor blocking needs an even follow-up run count".into(),
        ));
    }
    let m = m1 + m2;
    let total = (n + n1) as f64;
    let (a, b) = (ln_ratio_two(), ln_ratio_three());
    let n1f = n1 as f64;
    let phi_aug = a * (m1 + 1) as f64 * (n1f - 2.0) / (2.0 * (n1f - 1.0))
        + b * m2 as f64 * (n1f - 3.0) / (3.0 * (n1f - 1.0))
        + b * r as f64 * (n1f - 2.0) / (2.0 * (n1f - 1.0));
    let phi_cross = a * (m1 + 1) as f64 / 2.0 + b * m2 as f64 / 3.0;
    let aug = ExpTerm::new(phi_aug, (n1 * (n1 - 1)) as i64);
    let cross = ExpTerm::new(phi_cross, (n * n1) as i64);
    Ok(finish_wd(
        BoundKind::WdTwoBlock,
        InitialKind::classify(m1, m2),
        BoundInputs { n, n1, m1, m2, r, baseline: wd0 },
        c_of_r(n, n1, m, r + 2),
        (n * n) as f64 / (total * total) * 1.5f64.powi(r as i32 + 2),
        1.25f64.powi(m1 as i32 + 1) * (23.0f64 / 18.0).powi((m2 + r) as i32) / (total * total),
        1.5,
        2.5,
        PairTerm::Exp(aug),
        PairTerm::Exp(cross),
    ))
}

/// WD bound for the next stage of a multi-stage row augmentation:
/// `n_prev` runs so far with discrepancy `prev_wd`, `n_stage` runs added,
/// no additional factors.
pub fn lbw_stage(
    prev_wd: f64,
    n_prev: usize,
    n_stage: usize,
    m1: usize,
    m2: usize,
) -> Result<BoundReport> {
    check_pair_domain(n_prev, n_stage)?;
    let m = m1 + m2;
    let (nf, sf) = (n_prev as f64, n_stage as f64);
    let total = nf + sf;
    let constant = -(sf * sf + 2.0 * nf * sf) / (total * total) * (4.0f64 / 3.0).powi(m as i32)
        + sf / (total * total) * 1.5f64.powi(m as i32);
    let (aug, cross) = mixed_exp_terms(n_prev, m1, m2, 0, n_stage);
    Ok(finish_wd(
        BoundKind::WdStage,
        InitialKind::classify(m1, m2),
        BoundInputs {
            n: n_prev,
            n1: n_stage,
            m1,
            m2,
            r: 0,
            baseline: prev_wd,
        },
        constant,
        nf * nf / (total * total),
        1.25f64.powi(m1 as i32) * (23.0f64 / 18.0).powi(m2 as i32) / (total * total),
        1.0,
        2.0,
        PairTerm::Exp(aug),
        PairTerm::Exp(cross),
    ))
}

/// Shared mixed-initial constant of the E(f_NOD) brackets.
fn squared_initial_constant(n: f64, m1: f64, m2: f64) -> f64 {
    n * n * ((m1 + m1 * m1) / 4.0 + (2.0 * m2 + m2 * m2) / 9.0 + m1 * m2 / 3.0)
}

fn fnod_aug_total(m1: usize, m2: usize, r: usize, n1: usize, extra_two: usize) -> Rational {
    let (m1, m2, r, n1) = (m1 as i64, m2 as i64, r as i64, n1 as i64);
    let e = extra_two as i64;
    Rational::new(
        3 * (m1 + e + r) * n1 * (n1 - 2) + 2 * m2 * n1 * (n1 - 3),
        6,
    )
}

fn fnod_cross_total(n: usize, m1: usize, m2: usize, n1: usize, extra_two: usize) -> Rational {
    let (n, m1, m2, n1) = (n as i64, m1 as i64, m2 as i64, n1 as i64);
    let e = extra_two as i64;
    Rational::new(n * n1 * (3 * (m1 + e) + 2 * m2), 6)
}

fn check_fnod_domain(n: usize, n1: usize, m: usize, r: usize) -> Result<()> {
    check_pair_domain(n, n1)?;
    if m + r < 2 {
        return Err(Error::Domain(
            "E(f_NOD) bounds need at least two columns".into(),
        ));
    }
    Ok(())
}

/// E(f_NOD) bound for the plain column augmented design.
pub fn lbf(
    n: usize,
    m1: usize,
    m2: usize,
    r: usize,
    n1: usize,
    efnod0: f64,
) -> Result<BoundReport> {
    let m = m1 + m2;
    check_fnod_domain(n, n1, m, r)?;
    let aug = FnodSplit::new(fnod_aug_total(m1, m2, r, n1, 0), (n1 * (n1 - 1)) as i64, 0)?;
    let cross = FnodSplit::new(fnod_cross_total(n, m1, m2, n1, 0), (n * n1) as i64, 0)?;
    let (nf, n1f, mf, rf) = (n as f64, n1 as f64, m as f64, r as f64);
    let (m1f, m2f) = (m1 as f64, m2 as f64);
    let d = (mf + rf) * (mf + rf - 1.0);
    let total = nf + n1f;
    let bracket = nf * mf * mf - squared_initial_constant(nf, m1f, m2f)
        - rf * m1f * nf * (nf - 2.0)
        - 2.0 * rf * m2f * nf * (nf - 3.0) / 3.0
        - nf * (nf - 1.0) * rf * rf
        + rf * (nf * nf + n1f * n1f / 2.0)
        + (m1f / 2.0
            + m2f / 3.0
            + m1f * (m1f - 1.0) / 4.0
            + (m2f + rf) * (m2f + rf - 1.0) / 9.0
            + m1f * (m2f + rf) / 3.0)
            * total
            * total;
    let params = FnodBoundParams {
        aug,
        cross,
        initial_coeff: mf * (mf - 1.0) / d,
        pair_coeff: 1.0 / d,
        linear_term: total * (mf + rf) / (mf + rf - 1.0),
        bracket,
    };
    Ok(BoundReport {
        kind: BoundKind::Fnod,
        value: params.recompute(efnod0),
        inputs: BoundInputs { n, n1, m1, m2, r, baseline: efnod0 },
        params: BoundParamSet::Fnod(params),
    })
}

/// E(f_NOD) bound with one blocking factor: the blocking column shifts
/// the follow-up pair split by one coincidence.
pub fn lbf_one_block(
    n: usize,
    m1: usize,
    m2: usize,
    r: usize,
    n1: usize,
    efnod0: f64,
) -> Result<BoundReport> {
    let m = m1 + m2;
    check_fnod_domain(n, n1, m, r)?;
    let aug = FnodSplit::new(fnod_aug_total(m1, m2, r, n1, 0), (n1 * (n1 - 1)) as i64, 1)?;
    let cross = FnodSplit::new(fnod_cross_total(n, m1, m2, n1, 0), (n * n1) as i64, 0)?;
    let (nf, n1f, mf, rf) = (n as f64, n1 as f64, m as f64, r as f64);
    let (m1f, m2f) = (m1 as f64, m2 as f64);
    let d = (mf + rf + 1.0) * (mf + rf);
    let total = nf + n1f;
    let bracket = nf * mf * mf - squared_initial_constant(nf, m1f, m2f)
        - (rf + 1.0) * m1f * nf * (nf - 2.0)
        - 2.0 * (rf + 1.0) * m2f * nf * (nf - 3.0) / 3.0
        - nf * (nf - 1.0) * (rf + 1.0) * (rf + 1.0)
        + rf * (nf * nf + n1f * n1f / 2.0)
        + nf * nf
        + n1f * n1f
        + (m1f / 2.0
            + m2f / 3.0
            + m1f * (m1f + 1.0) / 4.0
            + (m2f + rf) * (m2f + rf - 1.0) / 9.0
            + (m1f + 1.0) * (m2f + rf) / 3.0)
            * total
            * total;
    let params = FnodBoundParams {
        aug,
        cross,
        initial_coeff: mf * (mf - 1.0) / d,
        pair_coeff: 1.0 / d,
        linear_term: total * (mf + rf + 1.0) / (mf + rf),
        bracket,
    };
    Ok(BoundReport {
        kind: BoundKind::FnodOneBlock,
        value: params.recompute(efnod0),
        inputs: BoundInputs { n, n1, m1, m2, r, baseline: efnod0 },
        params: BoundParamSet::Fnod(params),
    })
}

/// E(f_NOD) bound with the two-factor blocking scheme: the second
/// blocking column joins both splits as an extra two-level factor and
/// the first shifts the follow-up split.
pub fn lbf_two_block(
    n: usize,
    m1: usize,
    m2: usize,
    r: usize,
    n1: usize,
    efnod0: f64,
) -> Result<BoundReport> {
    let m = m1 + m2;
    check_fnod_domain(n, n1, m, r)?;
    if !n1.is_multiple_of(2) {
        return Err(Error::Domain(
            "two-factor blocking needs an even follow-up run count".into(),
        ));
    }
    let aug = FnodSplit::new(fnod_aug_total(m1, m2, r, n1, 1), (n1 * (n1 - 1)) as i64, 1)?;
    let cross = FnodSplit::new(fnod_cross_total(n, m1, m2, n1, 1), (n * n1) as i64, 0)?;
    let (nf, n1f, mf, rf) = (n as f64, n1 as f64, m as f64, r as f64);
    let (m1f, m2f) = (m1 as f64, m2 as f64);
    let d = (mf + rf + 2.0) * (mf + rf + 1.0);
    let total = nf + n1f;
    let bracket = nf * mf * mf - squared_initial_constant(nf, m1f, m2f)
        - (rf + 2.0) * m1f * nf * (nf - 2.0)
        - 2.0 * (rf + 2.0) * m2f * nf * (nf - 3.0) / 3.0
        - nf * (nf - 1.0) * (rf + 2.0) * (rf + 2.0)
        + (rf + 2.0) * nf * nf
        + (3.0 + rf) * n1f * n1f / 2.0
        + nf * n1f
        + (m1f / 2.0
            + m2f / 3.0
            + (m1f + 2.0) * (m1f + 1.0) / 4.0
            + (m2f + rf) * (m2f + rf - 1.0) / 9.0
            + (m1f + 2.0) * (m2f + rf) / 3.0)
            * total
            * total;
    let params = FnodBoundParams {
        aug,
        cross,
        initial_coeff: mf * (mf - 1.0) / d,
        pair_coeff: 1.0 / d,
        linear_term: total * (mf + rf + 2.0) / (mf + rf + 1.0),
        bracket,
    };
    Ok(BoundReport {
        kind: BoundKind::FnodTwoBlock,
        value: params.recompute(efnod0),
        inputs: BoundInputs { n, n1, m1, m2, r, baseline: efnod0 },
        params: BoundParamSet::Fnod(params),
    })
}

/// Picks the applicable WD bound for a spec: the split variants for pure
/// two- or three-level initial designs (tighter), the continuous mixed
/// form otherwise, and the blocking variants per scheme.
pub fn select_wd_bound(spec: &crate::design::AugmentSpec, wd0: f64) -> Result<BoundReport> {
    let class = spec.class();
    let (n, n1) = (spec.n(), spec.n1());
    let (m1, m2, r) = (class.m1, class.m2, class.r);
    match class.blocking {
        crate::design::BlockingScheme::None => match InitialKind::classify(m1, m2) {
            InitialKind::TwoLevel => lbw_two_level(n, m1, r, n1, wd0),
            InitialKind::ThreeLevel => lbw_three_level(n, m2, r, n1, wd0),
            InitialKind::Mixed => lbw_mixed(n, m1, m2, r, n1, wd0),
        },
        crate::design::BlockingScheme::OneFactor => lbw_one_block(n, m1, m2, r, n1, wd0),
        crate::design::BlockingScheme::TwoFactorB => lbw_two_block(n, m1, m2, r, n1, wd0),
    }
}

/// Picks the applicable E(f_NOD) bound for a spec.
pub fn select_fnod_bound(spec: &crate::design::AugmentSpec, efnod0: f64) -> Result<BoundReport> {
    let class = spec.class();
    let (n, n1) = (spec.n(), spec.n1());
    let (m1, m2, r) = (class.m1, class.m2, class.r);
    match class.blocking {
        crate::design::BlockingScheme::None => lbf(n, m1, m2, r, n1, efnod0),
        crate::design::BlockingScheme::OneFactor => lbf_one_block(n, m1, m2, r, n1, efnod0),
        crate::design::BlockingScheme::TwoFactorB => lbf_two_block(n, m1, m2, r, n1, efnod0),
    }
}
