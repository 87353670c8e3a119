//! Monte-Carlo harness: empirical cost measurements cross-validated against
//! the analytic predictions.

use crate::analytic;
use crate::engine::{quickselect, AlgorithmPreset};
use crate::error::Result;
use crate::input::{make_input, trial_rng, RankSpec};
use crate::partition::{betabinomial_pmf, partition_with, sample_pivots};
use crate::scheme::{PartitionMethod, SamplingScheme};
use crate::solver;
use crate::tally::{CostMeasure, CostTally};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Deterministic sum: fixed pairwise reduction order, independent of thread
/// count, stable over millions of summands.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean, spread, and normalized mean of one cost measure over a trial batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureStats {
    pub mean: f64,
    pub stddev: f64,
    pub std_error: f64,
    pub normalized_mean: f64,
}

/// Aggregated results of `trials` independent selection runs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub preset: String,
    pub n: usize,
    pub spec: RankSpec,
    pub trials: usize,
    pub comparisons: MeasureStats,
    pub scanned: MeasureStats,
    pub writes: MeasureStats,
}

impl TrialStats {
    pub fn stats(&self, measure: CostMeasure) -> &MeasureStats {
        match measure {
            CostMeasure::Comparisons => &self.comparisons,
            CostMeasure::ScannedElements => &self.scanned,
            CostMeasure::WriteAccesses => &self.writes,
        }
    }

    /// The quantile this batch targeted, when it targeted one.
    pub fn alpha(&self) -> Option<f64> {
        match self.spec {
            RankSpec::Fixed(m) => Some(m as f64 / self.n as f64),
            RankSpec::FixedQuantile(a) => Some(a),
            RankSpec::RandomRank => None,
        }
    }

    pub fn rank(&self) -> Option<usize> {
        match self.spec {
            RankSpec::Fixed(m) => Some(m),
            RankSpec::FixedQuantile(a) => {
                Some(((a * self.n as f64).ceil() as usize).clamp(1, self.n))
            }
            RankSpec::RandomRank => None,
        }
    }
}

/// Column schema of all tabular trial output.
pub const CSV_HEADER: &str = "preset,n,alpha,m,trials,comp_mean,comp_se,scan_mean,scan_se,\
write_mean,write_se,comp_norm,scan_norm,write_norm";

pub fn csv_row(s: &TrialStats) -> String {
    let alpha = s.alpha().map(|a| a.to_string()).unwrap_or_default();
    let m = s.rank().map(|m| m.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        s.preset,
        s.n,
        alpha,
        m,
        s.trials,
        s.comparisons.mean,
        s.comparisons.std_error,
        s.scanned.mean,
        s.scanned.std_error,
        s.writes.mean,
        s.writes.std_error,
        s.comparisons.normalized_mean,
        s.scanned.normalized_mean,
        s.writes.normalized_mean,
    )
}

fn summarize(samples: &[f64], n: usize) -> MeasureStats {
    let trials = samples.len();
    let mean = pairwise_sum(samples) / trials as f64;
    let var = if trials > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    let stddev = var.sqrt();
    MeasureStats {
        mean,
        stddev,
        std_error: stddev / (trials as f64).sqrt(),
        normalized_mean: mean / n as f64,
    }
}

/// Run `trials` independent selections and aggregate their tallies.
///
/// Trial `i` draws its input and its rank from the stream `seed ^ i`, so
/// the aggregate is bit-identical for any parallelism degree: per-trial
/// results are collected in trial order and reduced by pairwise summation.
pub fn run_trials(
    preset: &AlgorithmPreset,
    n: usize,
    spec: &RankSpec,
    trials: usize,
    seed: u64,
) -> Result<TrialStats> {
    let rows: Vec<[f64; 3]> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<[f64; 3]> {
            let mut rng = trial_rng(seed, trial as u64);
            let mut data =
                make_input(n, seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))?;
            let res = quickselect(&mut data, spec, preset, &mut rng)?;
            Ok([
                res.tally.comparisons as f64,
                res.tally.scanned_elements as f64,
                res.tally.write_accesses as f64,
            ])
        })
        .collect::<Result<_>>()?;
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<_>>();
    Ok(TrialStats {
        preset: preset.name.clone(),
        n,
        spec: *spec,
        trials,
        comparisons: summarize(&col(0), n),
        scanned: summarize(&col(1), n),
        writes: summarize(&col(2), n),
    })
}

/// One [`run_trials`] batch per grid point `alpha_i = i / (points - 1)`,
/// clipped into `[1/n, 1]`.
pub fn sweep_alpha(
    preset: &AlgorithmPreset,
    n: usize,
    points: usize,
    trials_per_point: usize,
    seed: u64,
) -> Result<Vec<TrialStats>> {
    assert!(points >= 2);
    (0..points)
        .map(|i| {
            let alpha = i as f64 / (points - 1) as f64;
            let m = ((alpha * n as f64).ceil() as usize).clamp(1, n);
            run_trials(
                preset,
                n,
                &RankSpec::Fixed(m),
                trials_per_point,
                seed ^ ((i as u64) << 32),
            )
        })
        .collect()
}

/// Chi-square result for one segment's subproblem-size law.
#[derive(Debug, Clone)]
pub struct SegmentChiSquare {
    pub segment: usize,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Report of [`subproblem_distribution_test`].
#[derive(Debug, Clone)]
pub struct DistributionTestReport {
    pub method: PartitionMethod,
    pub t: Vec<u32>,
    pub n: usize,
    pub rounds: usize,
    pub segments: Vec<SegmentChiSquare>,
}

impl DistributionTestReport {
    pub fn min_p_value(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.p_value)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn passes(&self, significance: f64) -> bool {
        self.min_p_value() > significance
    }
}

/// Test the randomness-preservation law of one partitioning round: over
/// many first rounds, `J_l - t_l` must follow
/// `BetaBinomial(n - k, t_l + 1, k - t_l)`. Expected cells below 5 are
/// merged into their neighbor before the chi-square statistic.
pub fn subproblem_distribution_test(
    method: PartitionMethod,
    scheme: &SamplingScheme,
    n: usize,
    rounds: usize,
    seed: u64,
) -> Result<DistributionTestReport> {
    let s = scheme.segments();
    let k = scheme.sample_size();
    let counts: Vec<Vec<u64>> = (0..rounds)
        .into_par_iter()
        .map(|round| -> Result<Vec<usize>> {
            let mut rng = trial_rng(seed, round as u64);
            let mut view =
                make_input(n, seed ^ (round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))?;
            let mut tally = CostTally::ZERO;
            let sel = sample_pivots(&mut view, scheme, method, &mut rng, &mut tally)?;
            let outcome = partition_with(&mut view, method, &sel.pivots)?;
            Ok(outcome.segment_sizes)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(vec![vec![0u64; n + 1]; s], |mut acc, sizes| {
            for (l, &j) in sizes.iter().enumerate() {
                acc[l][j] += 1;
            }
            acc
        });

    let mut segments = Vec::with_capacity(s);
    for l in 0..s {
        let tl = scheme.t()[l] as u64;
        let support = n - k; // J_l - t_l ranges over 0..=n-k
        let expected: Vec<f64> = (0..=support as u64)
            .map(|i| {
                rounds as f64
                    * betabinomial_pmf(support as u64, tl + 1, (k as u64) - tl, i).unwrap()
            })
            .collect();
        let observed: Vec<f64> = (0..=support)
            .map(|i| counts[l][i + tl as usize] as f64)
            .collect();
        // merge low-expectation cells left to right
        let mut merged: Vec<(f64, f64)> = Vec::new();
        let (mut acc_o, mut acc_e) = (0.0, 0.0);
        for (o, e) in observed.iter().zip(&expected) {
            acc_o += o;
            acc_e += e;
            if acc_e >= 5.0 {
                merged.push((acc_o, acc_e));
                acc_o = 0.0;
                acc_e = 0.0;
            }
        }
        if acc_e > 0.0 {
            if let Some(last) = merged.last_mut() {
                last.0 += acc_o;
                last.1 += acc_e;
            } else {
                merged.push((acc_o, acc_e));
            }
        }
        let statistic: f64 = merged.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
        let dof = merged.len().saturating_sub(1).max(1);
        let chi = ChiSquared::new(dof as f64).expect("dof > 0");
        let p_value = 1.0 - chi.cdf(statistic);
        segments.push(SegmentChiSquare {
            segment: l + 1,
            statistic,
            dof,
            p_value,
        });
    }
    Ok(DistributionTestReport {
        method,
        t: scheme.t().to_vec(),
        n,
        rounds,
        segments,
    })
}

/// One line of a table reproduction report.
#[derive(Debug, Clone)]
pub struct TableLine {
    pub label: String,
    pub published: f64,
    pub analytic: Option<f64>,
    pub empirical: Option<f64>,
    pub fixture_only: bool,
}

impl TableLine {
    pub fn rel_err_empirical(&self) -> Option<f64> {
        self.empirical
            .map(|e| (e - self.published).abs() / self.published)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// Grand-average coefficients of the non-adaptive s-way variants
    /// without sampling (s = 2..8; rows s >= 5 are reference fixtures).
    Table1,
    /// Fixed-quantile and grand-average values for dual-pivot and
    /// sesquickselect variants.
    Table2,
}

/// Published grand averages per cost measure for s-way partitioning without
/// sampling. Rows with `s >= 5` ship as fixtures: no executable algorithm
/// stands behind them here.
pub const TABLE1_ROWS: [(usize, &str, f64, f64, f64); 7] = [
    (2, "classic", 3.0, 3.0, 1.0),
    (3, "ybb", 19.0 / 6.0, 8.0 / 3.0, 11.0 / 6.0),
    (4, "waterloo", 10.0 / 3.0, 2.5, 2.0),
    (5, "", 3.5, 2.7, 2.35),
    (6, "", 11.0 / 3.0, 2.8, 38.0 / 15.0),
    (7, "", 53.0 / 14.0, 64.0 / 21.0, 17.0 / 6.0),
    (8, "", 27.0 / 7.0, 45.0 / 14.0, 85.0 / 28.0),
];

/// Reproduce the published cost tables: fixture value, analytic value, and
/// a fresh empirical measurement per cell.
pub fn table_report(
    which: TableKind,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<TableLine>> {
    match which {
        TableKind::Table1 => table1_report(n, trials, seed),
        TableKind::Table2 => table2_report(n, trials, seed),
    }
}

fn table1_report(n: usize, trials: usize, seed: u64) -> Result<Vec<TableLine>> {
    let mut lines = Vec::new();
    for (s, preset_name, pub_c, pub_se, pub_wa) in TABLE1_ROWS {
        if preset_name.is_empty() {
            for (measure, value) in [("C", pub_c), ("SE", pub_se), ("WA", pub_wa)] {
                lines.push(TableLine {
                    label: format!("s={s} {measure}"),
                    published: value,
                    analytic: None,
                    empirical: None,
                    fixture_only: true,
                });
            }
            continue;
        }
        let preset = AlgorithmPreset::parse(match s {
            2 => "cqs",
            3 => "yqs",
            _ => "waterloo",
        })?;
        let policy = preset.policy().unwrap();
        let seg = &policy.segments()[0];
        let h = analytic::h_const(&seg.scheme).to_f64().unwrap();
        let stats = run_trials(&preset, n, &RankSpec::RandomRank, trials, seed)?;
        for (measure, published) in [
            (CostMeasure::Comparisons, pub_c),
            (CostMeasure::ScannedElements, pub_se),
            (CostMeasure::WriteAccesses, pub_wa),
        ] {
            let a = match measure {
                CostMeasure::Comparisons => analytic::a_comparisons(seg.method, &seg.scheme)
                    .ok()
                    .map(|r| r.to_f64().unwrap()),
                CostMeasure::ScannedElements => {
                    Some(analytic::a_se(seg.method, &seg.scheme)?.to_f64().unwrap())
                }
                // write-access coefficients are only tabulated for s = 2, 3
                CostMeasure::WriteAccesses => match s {
                    2 => Some(1.0 / 3.0),
                    3 => Some(11.0 / 12.0),
                    _ => None,
                },
            };
            lines.push(TableLine {
                label: format!("s={s} {} {}", preset.name, measure.label()),
                published,
                analytic: a.map(|a| a / h),
                empirical: Some(stats.stats(measure).normalized_mean),
                fixture_only: false,
            });
        }
    }
    Ok(lines)
}

/// Published fixed-quantile values: `(column, alpha-or-avg, value)`.
pub const TABLE2_CELLS: [(&str, &str, f64); 15] = [
    ("prop2", "0", 1.5),
    ("prop2", "1/2", 3.113),
    ("prop2", "avg", 2.598),
    ("yqs C", "0", 2.375),
    ("yqs C", "1/2", 3.472),
    ("yqs C", "avg", 19.0 / 6.0),
    ("sqs2 C", "0", 1.5),
    ("sqs2 C", "1/2", 3.252),
    ("sqs2 C", "avg", 2.733),
    ("yqs SE", "0", 2.0),
    ("yqs SE", "1/2", 2.924),
    ("yqs SE", "avg", 8.0 / 3.0),
    ("sqs2 SE", "0", 1.5),
    ("sqs2 SE", "1/2", 2.843),
    ("sqs2 SE", "avg", 2.5004),
];

fn table2_report(n: usize, trials: usize, seed: u64) -> Result<Vec<TableLine>> {
    let nu = analytic::nu_star_se();
    let yqs = AlgorithmPreset::yqs();
    let sqs2 = AlgorithmPreset::sqs2_optimal();
    let prop2 = AlgorithmPreset::prop2(0.5)?;

    // the proportion-from-2 curve has no closed form here; solve for it
    let prop2_curve = solver::solve_fixed_point(
        prop2.policy().unwrap(),
        &solver::CostCoefficients::new(vec![1.0, 1.0])?,
        400,
        1e-9,
        400,
    )?;

    let analytic_value = |column: &str, at: &str| -> f64 {
        match (column, at) {
            ("prop2", "0") => prop2_curve.f.eval(0.0),
            ("prop2", "1/2") => prop2_curve.f.eval(0.5),
            ("prop2", "avg") => prop2_curve.f.grand_average(),
            ("yqs C", "0") => analytic::f_yqs(0.0, 19.0 / 12.0),
            ("yqs C", "1/2") => analytic::f_yqs(0.5, 19.0 / 12.0),
            ("yqs C", "avg") => {
                analytic::grand_average_of(|x| analytic::f_yqs(x, 19.0 / 12.0), &[])
            }
            ("yqs SE", "0") => analytic::f_yqs(0.0, 4.0 / 3.0),
            ("yqs SE", "1/2") => analytic::f_yqs(0.5, 4.0 / 3.0),
            ("yqs SE", "avg") => analytic::grand_average_of(|x| analytic::f_yqs(x, 4.0 / 3.0), &[]),
            ("sqs2 C", "0") => analytic::f_sqs2(0.0, nu, CostMeasure::Comparisons).unwrap(),
            ("sqs2 C", "1/2") => analytic::f_sqs2(0.5, nu, CostMeasure::Comparisons).unwrap(),
            ("sqs2 C", "avg") => analytic::grand_average_of(
                |x| analytic::f_sqs2(x, nu, CostMeasure::Comparisons).unwrap(),
                &[nu, 1.0 - nu],
            ),
            ("sqs2 SE", "0") => analytic::f_sqs2(0.0, nu, CostMeasure::ScannedElements).unwrap(),
            ("sqs2 SE", "1/2") => analytic::f_sqs2(0.5, nu, CostMeasure::ScannedElements).unwrap(),
            ("sqs2 SE", "avg") => analytic::grand_average_of(
                |x| analytic::f_sqs2(x, nu, CostMeasure::ScannedElements).unwrap(),
                &[nu, 1.0 - nu],
            ),
            _ => unreachable!(),
        }
    };

    let mut batches: std::collections::HashMap<(String, String), TrialStats> =
        std::collections::HashMap::new();
    let mut batch = |preset: &AlgorithmPreset, at: &str| -> Result<TrialStats> {
        let key = (preset.name.clone(), at.to_string());
        if let Some(s) = batches.get(&key) {
            return Ok(s.clone());
        }
        let spec = match at {
            "0" => RankSpec::Fixed(1),
            "1/2" => RankSpec::FixedQuantile(0.5),
            _ => RankSpec::RandomRank,
        };
        let s = run_trials(preset, n, &spec, trials, seed)?;
        batches.insert(key, s.clone());
        Ok(s)
    };

    let mut lines = Vec::new();
    for (column, at, published) in TABLE2_CELLS {
        let (preset, measure) = match column {
            "prop2" => (&prop2, CostMeasure::ScannedElements),
            "yqs C" => (&yqs, CostMeasure::Comparisons),
            "yqs SE" => (&yqs, CostMeasure::ScannedElements),
            "sqs2 C" => (&sqs2, CostMeasure::Comparisons),
            "sqs2 SE" => (&sqs2, CostMeasure::ScannedElements),
            _ => unreachable!(),
        };
        let stats = batch(preset, at)?;
        lines.push(TableLine {
            label: format!("{column} at {at}"),
            published,
            analytic: Some(analytic_value(column, at)),
            empirical: Some(stats.stats(measure).normalized_mean),
            fixture_only: false,
        });
    }
    Ok(lines)
}

/// Two-sample z statistic for equal means.
pub fn two_sample_z(a: &MeasureStats, b: &MeasureStats) -> f64 {
    (a.mean - b.mean) / (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert_abs_diff_eq!(pairwise_sum(&xs), naive, epsilon = 1e-9);
    }

    #[test]
    fn run_trials_is_deterministic_across_thread_counts() {
        let preset = AlgorithmPreset::yqs();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_trials(&preset, 5000, &RankSpec::RandomRank, 200, 0xBEEF).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
    }

    #[test]
    fn stats_fields_are_consistent() {
        let preset = AlgorithmPreset::cqs();
        let s = run_trials(&preset, 1000, &RankSpec::FixedQuantile(0.5), 64, 1).unwrap();
        assert_eq!(s.trials, 64);
        assert_abs_diff_eq!(
            s.comparisons.std_error,
            s.comparisons.stddev / 8.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            s.comparisons.normalized_mean,
            s.comparisons.mean / 1000.0,
            epsilon = 1e-12
        );
        assert_eq!(s.rank(), Some(500));
    }

    #[test]
    fn csv_header_is_stable() {
        assert_eq!(
            CSV_HEADER,
            "preset,n,alpha,m,trials,comp_mean,comp_se,scan_mean,scan_se,write_mean,write_se,comp_norm,scan_norm,write_norm"
        );
        let preset = AlgorithmPreset::cqs();
        let s = run_trials(&preset, 100, &RankSpec::RandomRank, 4, 3).unwrap();
        let row = csv_row(&s);
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("cqs,100,,,4,"));
    }

    #[test]
    fn classic_uniform_subproblem_law() {
        let scheme = SamplingScheme::new(vec![0, 0]).unwrap();
        let report =
            subproblem_distribution_test(PartitionMethod::Classic, &scheme, 100, 40_000, 0xDADA)
                .unwrap();
        assert!(report.passes(0.001), "p = {}", report.min_p_value());
    }

    #[test]
    fn sweep_produces_requested_points() {
        let preset = AlgorithmPreset::cqs();
        let rows = sweep_alpha(&preset, 2000, 5, 40, 99).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].rank(), Some(1)); // alpha = 0 clips to rank 1
        assert_eq!(rows[4].rank(), Some(2000));
    }
}
