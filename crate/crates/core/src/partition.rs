//! In-place partitioning rounds with per-call cost accounting.
//!
//! Every operation counts comparisons, scanned elements (one per array cell
//! visited by a scanning index, including its starting cell; pivot loads
//! count, final pivot-placement swaps do not travel) and write accesses.
//! The per-call accounting contracts are checked by debug assertions:
//!
//! * Hoare: `C = n-1 +- 2`, `SE = n +- 2`, `WA = 2 * exchanges +- 2`
//! * Ybb:   `SE = n + J_1 +- 4`; Bby: `SE = n + J_3 +- 4`
//! * Waterloo: `C = 2(n-3) +- 6`, `SE = n + J_1 + J_4 +- 6`

use crate::error::{Error, Result};
use crate::input::SelectRng;
use crate::scheme::{PartitionMethod, SamplingScheme};
use crate::tally::CostTally;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// Result of one partitioning round on a view of length `n`.
///
/// `pivot_ranks` holds `R_0 = 0 < R_1 < ... < R_{s-1} < R_s = n + 1`
/// (1-based within the view); `segment_sizes[l] = R_{l+1} - R_l - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionOutcome {
    pub pivot_ranks: Vec<usize>,
    pub segment_sizes: Vec<usize>,
    pub tally: CostTally,
}

impl PartitionOutcome {
    fn from_inner_ranks(n: usize, inner: &[usize], tally: CostTally) -> Self {
        let mut pivot_ranks = Vec::with_capacity(inner.len() + 2);
        pivot_ranks.push(0);
        pivot_ranks.extend_from_slice(inner);
        pivot_ranks.push(n + 1);
        let segment_sizes = pivot_ranks.windows(2).map(|w| w[1] - w[0] - 1).collect();
        PartitionOutcome {
            pivot_ranks,
            segment_sizes,
            tally,
        }
    }

    pub fn segments(&self) -> usize {
        self.segment_sizes.len()
    }
}

/// The sample drawn for one round, sorted, with the pivot keys extracted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSelection {
    pub sample_positions: Vec<usize>,
    pub sorted_sample: Vec<u64>,
    pub pivots: Vec<u64>,
}

/// Insertion sort with full cost accounting (samples and base cases).
pub fn insertion_sort(a: &mut [u64], tally: &mut CostTally) {
    for i in 1..a.len() {
        let x = a[i];
        tally.scanned_elements += 1;
        let mut j = i;
        while j > 0 {
            tally.comparisons += 1;
            tally.scanned_elements += 1;
            if a[j - 1] > x {
                a[j] = a[j - 1];
                tally.write_accesses += 1;
                j -= 1;
            } else {
                break;
            }
        }
        a[j] = x;
        tally.write_accesses += 1;
    }
}

/// Draw `k` positions uniformly without replacement, sort the sampled keys,
/// and move the pivot keys to the boundary cells the partition method scans
/// from: Classic `[0]`, Ybb/Bby `[0, n-1]`, Waterloo `[0, 1, n-1]`.
///
/// Sample-sorting comparisons and write accesses land in `tally`; they are
/// O(1) per round. Fails with `SampleLargerThanView` when `n < k`, which
/// callers treat as "use the base case".
pub fn sample_pivots(
    view: &mut [u64],
    scheme: &SamplingScheme,
    method: PartitionMethod,
    rng: &mut SelectRng,
    tally: &mut CostTally,
) -> Result<SampleSelection> {
    let n = view.len();
    let k = scheme.sample_size();
    if n < k {
        return Err(Error::SampleLargerThanView { n, k });
    }
    if method.segments() != scheme.segments() {
        return Err(Error::MethodArityMismatch {
            expected: method.segments(),
            got: scheme.segments(),
        });
    }

    // k is tiny; rejection sampling keeps positions exactly uniform.
    let mut positions: Vec<usize> = Vec::with_capacity(k);
    while positions.len() < k {
        let p = rng.gen_range(0..n);
        if !positions.contains(&p) {
            positions.push(p);
        }
    }

    // Insertion sort of (key, position) pairs by key, costs tallied.
    let mut pairs: Vec<(u64, usize)> = positions.iter().map(|&p| (view[p], p)).collect();
    for i in 1..pairs.len() {
        let x = pairs[i];
        tally.scanned_elements += 1;
        let mut j = i;
        while j > 0 {
            tally.comparisons += 1;
            tally.scanned_elements += 1;
            if pairs[j - 1].0 > x.0 {
                pairs[j] = pairs[j - 1];
                tally.write_accesses += 1;
                j -= 1;
            } else {
                break;
            }
        }
        pairs[j] = x;
        tally.write_accesses += 1;
    }
    let sorted_sample: Vec<u64> = pairs.iter().map(|&(key, _)| key).collect();

    let ords = scheme.pivot_positions();
    let pivots: Vec<u64> = ords.iter().map(|&o| pairs[o - 1].0).collect();
    let mut pivot_pos: Vec<usize> = ords.iter().map(|&o| pairs[o - 1].1).collect();

    let targets: Vec<usize> = match method {
        PartitionMethod::Classic => vec![0],
        PartitionMethod::Ybb | PartitionMethod::Bby => vec![0, n - 1],
        PartitionMethod::Waterloo => vec![0, 1, n - 1],
    };
    for (idx, &target) in targets.iter().enumerate() {
        let cur = pivot_pos[idx];
        if cur != target {
            view.swap(cur, target);
            tally.write_accesses += 2;
            for later in pivot_pos.iter_mut().skip(idx + 1) {
                if *later == target {
                    *later = cur;
                }
            }
            pivot_pos[idx] = target;
        }
    }

    Ok(SampleSelection {
        sample_positions: positions,
        sorted_sample,
        pivots,
    })
}

/// Hoare crossing-pointer partitioning around `pivot`, which must sit in
/// `view[0]`. Returns the two segments `< pivot | > pivot`.
pub fn hoare_partition(view: &mut [u64], pivot: u64) -> PartitionOutcome {
    let n = view.len();
    let mut tally = CostTally::ZERO;
    if n == 0 {
        return PartitionOutcome::from_inner_ranks(0, &[0], tally);
    }
    debug_assert_eq!(view[0], pivot, "pivot must be pre-placed in view[0]");
    tally.scanned_elements += 1; // pivot load

    let mut i = 0usize;
    let mut j = n;
    let mut exchanges = 0u64;
    loop {
        loop {
            i += 1;
            if i >= n {
                break;
            }
            tally.scanned_elements += 1;
            tally.comparisons += 1;
            if view[i] >= pivot {
                break;
            }
        }
        loop {
            j -= 1;
            if j == 0 {
                break;
            }
            tally.scanned_elements += 1;
            tally.comparisons += 1;
            if view[j] <= pivot {
                break;
            }
        }
        if i >= j {
            break;
        }
        view.swap(i, j);
        exchanges += 1;
        tally.write_accesses += 2;
    }
    view.swap(0, j);
    tally.write_accesses += 2;

    debug_assert!(tally.comparisons.abs_diff(n as u64 - 1) <= 2);
    debug_assert!(tally.scanned_elements.abs_diff(n as u64) <= 2);
    debug_assert!(tally.write_accesses.abs_diff(2 * exchanges) <= 2);
    PartitionOutcome::from_inner_ranks(n, &[j + 1], tally)
}

/// Yaroslavskiy dual-pivot partitioning with `p1 < p2` pre-placed in
/// `view[0]` and `view[n-1]`. Elements scanned from the left are compared
/// to `p1` first; elements scanned from the right to `p2` first.
pub fn ybb_partition(view: &mut [u64], p1: u64, p2: u64) -> Result<PartitionOutcome> {
    if p1 >= p2 {
        return Err(Error::PivotOrder);
    }
    let n = view.len();
    debug_assert!(n >= 2 && view[0] == p1 && view[n - 1] == p2);
    let mut tally = CostTally::ZERO;
    tally.scanned_elements += 2; // pivot loads

    let mut less = 1usize;
    let mut great = n - 2;
    let mut k = 1usize;
    'outer: while k <= great {
        let x = view[k];
        tally.scanned_elements += 1;
        tally.comparisons += 1;
        if x < p1 {
            view.swap(k, less);
            tally.write_accesses += 2;
            tally.scanned_elements += 1; // trailing index visit
            less += 1;
        } else {
            tally.comparisons += 1;
            if x > p2 {
                loop {
                    let y = view[great];
                    tally.scanned_elements += 1;
                    tally.comparisons += 1;
                    if y > p2 {
                        if great == k {
                            great -= 1;
                            break 'outer;
                        }
                        great -= 1;
                    } else {
                        tally.comparisons += 1;
                        if y < p1 {
                            view[k] = view[less];
                            view[less] = y;
                            tally.scanned_elements += 1; // trailing index visit
                            tally.write_accesses += 3;
                            less += 1;
                        } else {
                            view[k] = y;
                            tally.write_accesses += 2;
                        }
                        view[great] = x;
                        great -= 1;
                        break;
                    }
                }
            }
        }
        k += 1;
    }
    view.swap(0, less - 1);
    view.swap(n - 1, great + 1);
    tally.write_accesses += 4;

    let r1 = less;
    let r2 = great + 2;
    let j1 = (r1 - 1) as u64;
    debug_assert!(tally.scanned_elements.abs_diff(n as u64 + j1) <= 4);
    Ok(PartitionOutcome::from_inner_ranks(n, &[r1, r2], tally))
}

/// Mirror of [`ybb_partition`]: the main index scans right-to-left and the
/// trailing index re-scans the right segment instead of the left one.
pub fn bby_partition(view: &mut [u64], p1: u64, p2: u64) -> Result<PartitionOutcome> {
    if p1 >= p2 {
        return Err(Error::PivotOrder);
    }
    let n = view.len();
    debug_assert!(n >= 2 && view[0] == p1 && view[n - 1] == p2);
    let mut tally = CostTally::ZERO;
    tally.scanned_elements += 2;

    let mut great = n - 2;
    let mut less = 1usize;
    let mut k = n - 2;
    'outer: while k >= less {
        let x = view[k];
        tally.scanned_elements += 1;
        tally.comparisons += 1;
        if x > p2 {
            view.swap(k, great);
            tally.write_accesses += 2;
            tally.scanned_elements += 1;
            great -= 1;
        } else {
            tally.comparisons += 1;
            if x < p1 {
                loop {
                    let y = view[less];
                    tally.scanned_elements += 1;
                    tally.comparisons += 1;
                    if y < p1 {
                        if less == k {
                            less += 1;
                            break 'outer;
                        }
                        less += 1;
                    } else {
                        tally.comparisons += 1;
                        if y > p2 {
                            view[k] = view[great];
                            view[great] = y;
                            tally.scanned_elements += 1;
                            tally.write_accesses += 3;
                            great -= 1;
                        } else {
                            view[k] = y;
                            tally.write_accesses += 2;
                        }
                        view[less] = x;
                        less += 1;
                        break;
                    }
                }
            }
        }
        k -= 1;
    }
    view.swap(0, less - 1);
    view.swap(n - 1, great + 1);
    tally.write_accesses += 4;

    let r1 = less;
    let r2 = great + 2;
    let j3 = (n + 1 - r2) as u64;
    debug_assert!(tally.scanned_elements.abs_diff(n as u64 + j3) <= 4);
    Ok(PartitionOutcome::from_inner_ranks(n, &[r1, r2], tally))
}

/// Three-pivot single-pass partitioning with `p1 < p2 < p3` pre-placed in
/// `view[0]`, `view[1]`, `view[n-1]`. Every element is compared to `p2`
/// first, then to exactly one of `p1`/`p3`; only the outer two segments are
/// visited a second time (by the trailing indices).
pub fn waterloo_partition(view: &mut [u64], p1: u64, p2: u64, p3: u64) -> Result<PartitionOutcome> {
    if !(p1 < p2 && p2 < p3) {
        return Err(Error::PivotOrder);
    }
    let n = view.len();
    debug_assert!(n >= 3 && view[0] == p1 && view[1] == p2 && view[n - 1] == p3);
    let mut tally = CostTally::ZERO;
    tally.scanned_elements += 3;

    let mut a = 2usize; // end of the < p1 region
    let mut b = 2usize; // main left scanner
    let mut c = n - 2; // main right scanner
    let mut d = n - 2; // cells (d .. n-2] are > p3
    'outer: while b <= c {
        let x = view[b];
        tally.scanned_elements += 1;
        tally.comparisons += 1;
        if x < p2 {
            tally.comparisons += 1;
            if x < p1 {
                view.swap(a, b);
                tally.write_accesses += 2;
                tally.scanned_elements += 1;
                a += 1;
            }
            b += 1;
        } else {
            // find a partner y < p2 from the right
            loop {
                if c == b {
                    tally.comparisons += 1;
                    if x > p3 {
                        view.swap(b, d);
                        tally.write_accesses += 2;
                        tally.scanned_elements += 1;
                        d -= 1;
                    }
                    break 'outer;
                }
                let y = view[c];
                tally.scanned_elements += 1;
                tally.comparisons += 1;
                if y > p2 {
                    tally.comparisons += 1;
                    if y > p3 {
                        view.swap(c, d);
                        tally.write_accesses += 2;
                        tally.scanned_elements += 1;
                        d -= 1;
                    }
                    c -= 1;
                } else {
                    break;
                }
            }
            view.swap(b, c);
            tally.write_accesses += 2;
            let swapped_in = view[b];
            tally.comparisons += 1;
            if swapped_in < p1 {
                view.swap(a, b);
                tally.write_accesses += 2;
                tally.scanned_elements += 1;
                a += 1;
            }
            b += 1;
            tally.comparisons += 1;
            if view[c] > p3 {
                view.swap(c, d);
                tally.write_accesses += 2;
                tally.scanned_elements += 1;
                d -= 1;
            }
            c -= 1;
        }
    }

    // Pivot placement; order matters so segments stay contiguous.
    view.swap(1, a - 1); // p2 next to the small region
    view.swap(a - 1, b - 1); // p2 to its final cell
    view.swap(0, a - 2); // p1 to its final cell
    view.swap(n - 1, d + 1); // p3 to its final cell
    tally.write_accesses += 8;

    let r1 = a - 1;
    let r2 = b;
    let r3 = d + 2;
    let j1 = (a - 2) as u64;
    let j4 = (n - 2 - d) as u64;
    debug_assert!(tally.comparisons.abs_diff(2 * (n as u64 - 3)) <= 6);
    debug_assert!(tally.scanned_elements.abs_diff(n as u64 + j1 + j4) <= 6);
    Ok(PartitionOutcome::from_inner_ranks(n, &[r1, r2, r3], tally))
}

/// Run the round matching `method` on a view whose pivots were placed by
/// [`sample_pivots`].
pub fn partition_with(
    view: &mut [u64],
    method: PartitionMethod,
    pivots: &[u64],
) -> Result<PartitionOutcome> {
    match method {
        PartitionMethod::Classic => Ok(hoare_partition(view, pivots[0])),
        PartitionMethod::Ybb => ybb_partition(view, pivots[0], pivots[1]),
        PartitionMethod::Bby => bby_partition(view, pivots[0], pivots[1]),
        PartitionMethod::Waterloo => waterloo_partition(view, pivots[0], pivots[1], pivots[2]),
    }
}

/// `P(X = j)` for `X ~ BetaBinomial(n, a, b)`, evaluated in log space.
///
/// This is the law of the non-sample part of a segment: partitioning a
/// random permutation with scheme `t` leaves `J_l - t_l` distributed as
/// `BetaBinomial(n - k, t_l + 1, k - t_l)`.
pub fn betabinomial_pmf(n: u64, a: u64, b: u64, j: u64) -> Result<f64> {
    if a == 0 || b == 0 || j > n {
        return Err(Error::BetaBinomialParams { n, a, b, j });
    }
    let (nf, af, bf, jf) = (n as f64, a as f64, b as f64, j as f64);
    let ln_choose = ln_gamma(nf + 1.0) - ln_gamma(jf + 1.0) - ln_gamma(nf - jf + 1.0);
    let ln_beta_num = ln_gamma(af + jf) + ln_gamma(bf + nf - jf) - ln_gamma(af + bf + nf);
    let ln_beta_den = ln_gamma(af) + ln_gamma(bf) - ln_gamma(af + bf);
    Ok((ln_choose + ln_beta_num - ln_beta_den).exp())
}
