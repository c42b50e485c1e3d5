//! Squared wrap-around L2 discrepancy.
//!
//! Three evaluation paths: the direct double sum over the kernel
//! 3/2 - |u_i - u_j|(1 - |u_i - u_j|) with u = (2x+1)/(2q); the
//! coincidence-count reformulation for augmented designs; and an
//! incremental delta for single-swap moves in the search loop.
//!
//! For two- and three-level columns the kernel takes one of two values
//! per column (3/2 on a match, 5/4 resp. 23/18 otherwise), so pair
//! products reduce to powers indexed by match counts. The full-design
//! evaluator exploits that with an integer histogram over match counts,
//! which also makes the result exactly invariant under row reordering
//! and within-column level relabeling.

use crate::design::{AugmentedDesign, BlockingScheme, D2Mode, Design, PairClass};
use crate::design::CoincidenceProfile;
use crate::error::{Error, Result};
use serde::Serialize;

/// Kernel value for one column: q = 2 and q = 3 reduce to match/mismatch.
#[inline]
fn kernel(x: u32, y: u32, q: u32) -> f64 {
    if x == y {
        return 1.5;
    }
    match q {
        2 => 1.25,
        3 => 23.0 / 18.0,
        _ => {
            let u = (2.0 * x as f64 + 1.0) / (2.0 * q as f64);
            let v = (2.0 * y as f64 + 1.0) / (2.0 * q as f64);
            let d = (u - v).abs();
            1.5 - d * (1.0 - d)
        }
    }
}

fn pow_table(base: f64, up_to: usize) -> Vec<f64> {
    (0..=up_to).map(|k| base.powi(k as i32)).collect()
}

/// A squared-WD value with the shape it was computed for.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WdValue {
    pub value: f64,
    pub runs: usize,
    pub columns: usize,
}

/// Direct formula. Balance is not required (blocking columns are legal).
pub fn wd_squared(design: &Design) -> WdValue {
    let n = design.runs();
    let m = design.columns();
    let two: Vec<usize> = (0..m).filter(|&k| design.levels()[k] == 2).collect();
    let three: Vec<usize> = (0..m).filter(|&k| design.levels()[k] == 3).collect();
    let value = if two.len() + three.len() == m {
        wd_by_histogram(design, &two, &three)
    } else {
        wd_direct(design)
    };
    WdValue {
        value,
        runs: n,
        columns: m,
    }
}

fn wd_by_histogram(design: &Design, two: &[usize], three: &[usize]) -> f64 {
    let n = design.runs();
    let m = design.columns();
    let (c2, c3) = (two.len(), three.len());
    let mut hist = vec![0u64; (c2 + 1) * (c3 + 1)];
    let rows = design.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let (ri, rj) = (&rows[i], &rows[j]);
            let e2 = two.iter().filter(|&&k| ri[k] == rj[k]).count();
            let e3 = three.iter().filter(|&&k| ri[k] == rj[k]).count();
            hist[e2 * (c3 + 1) + e3] += 1;
        }
    }
    let p32 = pow_table(1.5, m);
    let p54 = pow_table(1.25, c2);
    let p2318 = pow_table(23.0 / 18.0, c3);
    let mut off_diagonal = 0.0;
    for e2 in 0..=c2 {
        for e3 in 0..=c3 {
            let count = hist[e2 * (c3 + 1) + e3];
            if count != 0 {
                off_diagonal +=
                    count as f64 * p32[e2 + e3] * p54[c2 - e2] * p2318[c3 - e3];
            }
        }
    }
    let double_sum = n as f64 * p32[m] + 2.0 * off_diagonal;
    -(4.0f64 / 3.0).powi(m as i32) + double_sum / (n as f64 * n as f64)
}

fn wd_direct(design: &Design) -> f64 {
    let n = design.runs();
    let m = design.columns();
    let rows = design.rows();
    let levels = design.levels();
    let mut off_diagonal = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut p = 1.0;
            for k in 0..m {
                p *= kernel(rows[i][k], rows[j][k], levels[k]);
            }
            off_diagonal += p;
        }
    }
    let double_sum = n as f64 * 1.5f64.powi(m as i32) + 2.0 * off_diagonal;
    -(4.0f64 / 3.0).powi(m as i32) + double_sum / (n as f64 * n as f64)
}

/// Squared WD of the assembled design from the initial design's WD and
/// the coincidence profile. Exact identity with [`wd_squared`] of the
/// full matrix; requires the no-blocking layout with {1,2} additional
/// entries.
pub fn wd_squared_augmented(
    initial_wd: &WdValue,
    profile: &CoincidenceProfile,
    spec: &crate::design::AugmentSpec,
) -> Result<WdValue> {
    let class = spec.class();
    if class.blocking != BlockingScheme::None {
        return Err(Error::Contract(
            "coincidence reformulation covers the no-blocking layout".into(),
        ));
    }
    if spec.d2_mode() != D2Mode::BalancedOneTwo {
        return Err(Error::Contract(
            "coincidence reformulation needs {1,2} additional entries".into(),
        ));
    }
    if profile.n != spec.n() || profile.n1 != spec.n1() || profile.class != class {
        return Err(Error::Contract(
            "profile and spec describe different augmentations".into(),
        ));
    }
    if initial_wd.runs != spec.n() || initial_wd.columns != class.m() {
        return Err(Error::Contract(
            "initial WD has the wrong shape for this spec".into(),
        ));
    }
    let (n, n1) = (spec.n(), spec.n1());
    let (m1, m2, r) = (class.m1, class.m2, class.r);
    let total = (n + n1) as f64;
    let p65 = pow_table(6.0 / 5.0, m1);
    let p2723 = pow_table(27.0 / 23.0, m2 + r);
    let mut aug_sum = 0.0;
    let mut cross_sum = 0.0;
    for pair in &profile.pairs {
        match pair.class {
            PairClass::AugmentedAugmented => {
                aug_sum += p65[pair.f as usize] * p2723[(pair.v + pair.t) as usize];
            }
            PairClass::Cross => {
                cross_sum += p65[pair.f as usize] * p2723[pair.v as usize];
            }
            PairClass::InitialInitial => {}
        }
    }
    // stored pairs are unordered; the reformulation sums ordered pairs
    let pair_part = 2.0 * aug_sum + 2.0 * cross_sum;
    let value = crate::bounds::c_of_r(n, n1, class.m(), r)
        + (n as f64 * n as f64) / (total * total) * 1.5f64.powi(r as i32) * initial_wd.value
        + 1.25f64.powi(m1 as i32) * (23.0f64 / 18.0).powi((m2 + r) as i32) / (total * total)
            * pair_part;
    Ok(WdValue {
        value,
        runs: n + n1,
        columns: class.total_columns(),
    })
}

/// Product of kernels over all columns except `skip`.
fn pair_product_skipping(design: &Design, i: usize, j: usize, skip: usize) -> f64 {
    let rows = design.rows();
    let levels = design.levels();
    let mut p = 1.0;
    for k in 0..design.columns() {
        if k != skip {
            p *= kernel(rows[i][k], rows[j][k], levels[k]);
        }
    }
    p
}

/// Change in squared WD from swapping the entries of `column` between two
/// follow-up rows, touching only the 2(n+n1)-3 affected pairs.
pub fn wd_delta_swap(
    aug: &AugmentedDesign,
    column: usize,
    row_a: usize,
    row_b: usize,
) -> Result<f64> {
    if !aug.swappable_columns().contains(&column) {
        return Err(Error::Contract(format!(
            "column {column} is fixed; swaps may only touch factor columns"
        )));
    }
    let n = aug.n();
    if row_a < n || row_b < n {
        return Err(Error::Contract(
            "swaps must stay within the follow-up rows".into(),
        ));
    }
    Ok(delta_swap_unchecked(aug.full(), column, row_a, row_b))
}

/// Delta for a swap in an arbitrary design; callers enforce contracts.
pub(crate) fn delta_swap_unchecked(
    design: &Design,
    column: usize,
    row_a: usize,
    row_b: usize,
) -> f64 {
    let a = design.entry(row_a, column);
    let b = design.entry(row_b, column);
    if a == b || row_a == row_b {
        return 0.0;
    }
    let q = design.levels()[column];
    let total = design.runs();
    let mut delta = 0.0;
    for k in 0..total {
        if k == row_a || k == row_b {
            continue;
        }
        let xk = design.entry(k, column);
        let ka = kernel(a, xk, q);
        let kb = kernel(b, xk, q);
        if ka == kb {
            continue;
        }
        let base_a = pair_product_skipping(design, row_a, k, column);
        let base_b = pair_product_skipping(design, row_b, k, column);
        delta += (base_a - base_b) * (kb - ka);
    }
    // the (row_a, row_b) pair itself is symmetric under the swap
    2.0 * delta / (total as f64 * total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{assemble, coincidence_profile, AugmentSpec, Design};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn design(rows: Vec<Vec<u32>>, levels: Vec<u32>) -> Design {
        Design::new(rows, levels).unwrap()
    }

    #[test]
    fn single_run_single_column() {
        let d = design(vec![vec![0]], vec![2]);
        let wd = wd_squared(&d);
        assert!((wd.value - (1.5 - 4.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn two_runs_one_two_level_column() {
        // hand oracle: -(4/3) + (1/4)(3/2 + 3/2 + 2*(3/2 - 1/4)) = 1/24
        let d = design(vec![vec![0], vec![1]], vec![2]);
        let wd = wd_squared(&d);
        assert!((wd.value - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn histogram_and_direct_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(2..10);
            let m = rng.gen_range(1..6);
            let levels: Vec<u32> = (0..m).map(|_| *[2u32, 3].choose(&mut rng).unwrap()).collect();
            let rows: Vec<Vec<u32>> = (0..n)
                .map(|_| levels.iter().map(|&q| rng.gen_range(0..q)).collect())
                .collect();
            let d = design(rows, levels);
            let hist = wd_squared(&d).value;
            let direct = wd_direct(&d);
            assert!(
                (hist - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "paths disagree: {hist} vs {direct}"
            );
        }
    }

    #[test]
    fn invariant_under_row_and_level_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(2..9);
            let m = rng.gen_range(1..5);
            let levels: Vec<u32> = (0..m).map(|_| *[2u32, 3].choose(&mut rng).unwrap()).collect();
            let mut rows: Vec<Vec<u32>> = (0..n)
                .map(|_| levels.iter().map(|&q| rng.gen_range(0..q)).collect())
                .collect();
            let original = wd_squared(&design(rows.clone(), levels.clone())).value;

            rows.shuffle(&mut rng);
            let reordered = wd_squared(&design(rows.clone(), levels.clone())).value;
            assert_eq!(original.to_bits(), reordered.to_bits());

            let column = rng.gen_range(0..m);
            let q = levels[column];
            let mut relabel: Vec<u32> = (0..q).collect();
            relabel.shuffle(&mut rng);
            for row in &mut rows {
                row[column] = relabel[row[column] as usize];
            }
            let relabeled = wd_squared(&design(rows, levels)).value;
            assert_eq!(original.to_bits(), relabeled.to_bits());
        }
    }

    #[test]
    fn kernel_stays_in_class_bands() {
        for a in 0..2u32 {
            for b in 0..2u32 {
                let k = kernel(a, b, 2);
                assert!((1.25..=1.5).contains(&k));
            }
        }
        for a in 0..3u32 {
            for b in 0..3u32 {
                let k = kernel(a, b, 3);
                assert!((23.0 / 18.0..=1.5).contains(&k));
            }
        }
    }

    fn random_augmented(rng: &mut ChaCha8Rng) -> crate::design::AugmentedDesign {
        // mixed 6-run initial with n1=6 keeps every divisibility rule valid
        let m1 = rng.gen_range(1..3);
        let m2 = rng.gen_range(1..3);
        let r = rng.gen_range(0..3);
        let levels: Vec<u32> = std::iter::repeat_n(2, m1)
            .chain(std::iter::repeat_n(3, m2))
            .collect();
        let shuffled_column = |rng: &mut ChaCha8Rng, q: u32, n: usize| {
            let mut col: Vec<u32> = (0..n).map(|i| (i as u32) % q).collect();
            col.shuffle(rng);
            col
        };
        let n = 6;
        let cols: Vec<Vec<u32>> = levels
            .iter()
            .map(|&q| shuffled_column(rng, q, n))
            .collect();
        let rows: Vec<Vec<u32>> = (0..n)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        let d0 = design(rows, levels.clone());
        let spec = AugmentSpec::new(&d0, 6, r, BlockingScheme::None).unwrap();
        let d1_cols: Vec<Vec<u32>> = levels
            .iter()
            .map(|&q| shuffled_column(rng, q, 6))
            .collect();
        let d1: Vec<Vec<u32>> = (0..6)
            .map(|i| d1_cols.iter().map(|c| c[i]).collect())
            .collect();
        let d2_cols: Vec<Vec<u32>> = (0..r)
            .map(|_| {
                let mut col: Vec<u32> = (0..6).map(|i| 1 + (i as u32) % 2).collect();
                col.shuffle(rng);
                col
            })
            .collect();
        let d2: Vec<Vec<u32>> = (0..6)
            .map(|i| d2_cols.iter().map(|c| c[i]).collect())
            .collect();
        assemble(&spec, &d1, &d2).unwrap()
    }

    #[test]
    fn reformulation_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..60 {
            let aug = random_augmented(&mut rng);
            let direct = wd_squared(aug.full());
            let wd0 = wd_squared(aug.spec().initial());
            let profile = coincidence_profile(&aug);
            let reformulated = wd_squared_augmented(&wd0, &profile, aug.spec()).unwrap();
            let rel = (direct.value - reformulated.value).abs() / direct.value.abs().max(1.0);
            assert!(rel <= 1e-10, "mismatch: {} vs {}", direct.value, reformulated.value);
        }
    }

    #[test]
    fn duplicated_rows_reduce_to_direct_stacked_evaluation() {
        // r=0, n1=n, d1=d0: the reformulation must equal the stacked design
        let d0 = design(
            vec![vec![0, 0], vec![0, 1], vec![1, 2], vec![1, 0], vec![0, 2], vec![1, 1]],
            vec![2, 3],
        );
        let spec = AugmentSpec::new(&d0, 6, 0, BlockingScheme::None).unwrap();
        let aug = assemble(&spec, &d0.rows().to_vec(), &vec![vec![]; 6]).unwrap();
        let direct = wd_squared(aug.full());
        let wd0 = wd_squared(&d0);
        let profile = coincidence_profile(&aug);
        let reformulated = wd_squared_augmented(&wd0, &profile, &spec).unwrap();
        assert!((direct.value - reformulated.value).abs() <= 1e-12 * direct.value);
    }

    #[test]
    fn delta_matches_full_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let mut aug = random_augmented(&mut rng);
            let before = wd_squared(aug.full()).value;
            let column = rng.gen_range(0..aug.swappable_columns().end);
            let row_a = aug.n() + rng.gen_range(0..aug.n1());
            let mut row_b = aug.n() + rng.gen_range(0..aug.n1());
            while row_b == row_a {
                row_b = aug.n() + rng.gen_range(0..aug.n1());
            }
            let delta = wd_delta_swap(&aug, column, row_a, row_b).unwrap();
            aug.apply_swap(column, row_a, row_b).unwrap();
            let after = wd_squared(aug.full()).value;
            assert!(
                (after - before - delta).abs() <= 1e-10,
                "delta {delta} vs recompute {}",
                after - before
            );
            // swapping back must cancel
            let back = wd_delta_swap(&aug, column, row_a, row_b).unwrap();
            assert!((delta + back).abs() <= 1e-12);
        }
    }

    #[test]
    fn delta_of_equal_entries_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let aug = random_augmented(&mut rng);
        let n = aug.n();
        let column = 0;
        // find two follow-up rows with equal entries in the column
        let mut found = None;
        'search: for i in n..n + aug.n1() {
            for j in (i + 1)..n + aug.n1() {
                if aug.full().entry(i, column) == aug.full().entry(j, column) {
                    found = Some((i, j));
                    break 'search;
                }
            }
        }
        let (i, j) = found.expect("balanced columns always repeat an entry");
        assert_eq!(wd_delta_swap(&aug, column, i, j).unwrap(), 0.0);
    }

    #[test]
    fn delta_rejects_initial_rows_and_blocking_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let aug = random_augmented(&mut rng);
        assert!(wd_delta_swap(&aug, 0, 0, aug.n()).is_err());
        let d0 = design(
            vec![vec![0], vec![1], vec![0], vec![1], vec![0], vec![1]],
            vec![2],
        );
        let spec = AugmentSpec::new(&d0, 6, 0, crate::design::BlockingScheme::OneFactor).unwrap();
        let d1 = vec![vec![0], vec![1], vec![0], vec![1], vec![0], vec![1]];
        let aug = assemble(&spec, &d1, &vec![vec![]; 6]).unwrap();
        // column 1 is the blocking column
        assert!(wd_delta_swap(&aug, 1, 6, 7).is_err());
    }
}
