//! Numerical fixed-point solver for the fixed-quantile cost function of an
//! adaptive policy.
//!
//! The cost function satisfies an integral equation: `f(alpha)` equals the
//! per-round coefficient `a_F(alpha)` plus, for each segment the recursion
//! can descend into, an integral of `f` against the joint density of the
//! segment's bracketing pivot values, weighted by the relative segment size.
//! On a uniform grid the operator is linear in the (piecewise-linear) grid
//! values, so it is assembled once as a weight matrix; every sweep is then a
//! matrix-vector product. Quadrature is composite midpoint per grid cell,
//! and interpolation never crosses a policy breakpoint: grid functions
//! carry separate left/right values at breakpoint nodes.

use crate::analytic;
use crate::error::{Error, Result};
use crate::input::{make_input, trial_rng};
use crate::partition::{partition_with, sample_pivots};
use crate::scheme::{AdaptivePolicy, PartitionMethod, PolicySegment, SamplingScheme};
use crate::tally::{CostMeasure, CostTally};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::io::Write as _;
use std::path::Path;

/// Per-interval leading cost coefficients `a_F` for a policy, one value per
/// policy interval; all positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCoefficients(pub Vec<f64>);

impl CostCoefficients {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::PolicyConfig(
                "cost coefficients must be positive and finite".into(),
            ));
        }
        Ok(CostCoefficients(values))
    }
}

/// Left/right sample-mass exponents for one segment of a scheme: segment
/// `l` has `left = sum_{r<l}(t_r + 1) - 1` sample elements below its lower
/// pivot and `right = sum_{r>l}(t_r + 1) - 1` above its upper one, so
/// `left + t_l + right + 2 = k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TStops {
    pub left: i64,
    pub t: i64,
    pub right: i64,
}

pub fn t_stops(t: &[u32]) -> Vec<TStops> {
    let s = t.len();
    (0..s)
        .map(|l| {
            let left: i64 = t[..l].iter().map(|&x| x as i64 + 1).sum::<i64>() - 1;
            let right: i64 = t[l + 1..].iter().map(|&x| x as i64 + 1).sum::<i64>() - 1;
            TStops {
                left,
                t: t[l] as i64,
                right,
            }
        })
        .collect()
}

/// `f` discretized on the uniform grid `alpha_i = i / N`.
///
/// `values[i]` is the right-limit at node `i`; `left_values[i]` differs only
/// at policy breakpoint nodes, where it holds the left-limit. Evaluation
/// interpolates between the right-limit at the cell's lower node and the
/// left-limit at its upper node, so no interpolation crosses a breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    resolution: usize,
    values: Vec<f64>,
    left_values: Vec<f64>,
    breakpoint_nodes: Vec<usize>,
}

impl GridFunction {
    pub fn from_values(
        resolution: usize,
        values: Vec<f64>,
        left_values: Vec<f64>,
        breakpoint_nodes: Vec<usize>,
    ) -> Self {
        assert_eq!(values.len(), resolution + 1);
        assert_eq!(left_values.len(), resolution + 1);
        GridFunction {
            resolution,
            values,
            left_values,
            breakpoint_nodes,
        }
    }

    /// Sample a closed-form function onto the grid (no jumps).
    pub fn from_fn(resolution: usize, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = (0..=resolution)
            .map(|i| f(i as f64 / resolution as f64))
            .collect();
        GridFunction {
            resolution,
            left_values: values.clone(),
            values,
            breakpoint_nodes: Vec::new(),
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_values(&self) -> &[f64] {
        &self.left_values
    }

    pub fn breakpoint_nodes(&self) -> &[usize] {
        &self.breakpoint_nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.resolution as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.resolution;
        debug_assert!((0.0..=1.0).contains(&x));
        let scaled = x * n as f64;
        let j = (scaled as usize).min(n - 1);
        let frac = scaled - j as f64;
        self.values[j] * (1.0 - frac) + self.left_values[j + 1] * frac
    }

    /// Max distance over both one-sided value arrays.
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.resolution, other.resolution);
        self.values
            .iter()
            .zip(&other.values)
            .chain(self.left_values.iter().zip(&other.left_values))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Trapezoid integral over `[0, 1]` using one-sided cell endpoints.
    pub fn grand_average(&self) -> f64 {
        let n = self.resolution;
        (0..n)
            .map(|j| 0.5 * (self.values[j] + self.left_values[j + 1]) / n as f64)
            .sum()
    }
}

/// An adaptive policy prepared for the solver: breakpoints snapped to grid
/// nodes, one `t`-vector and one `a_F` per interval.
#[derive(Debug, Clone)]
struct SnappedPolicy {
    resolution: usize,
    nodes: Vec<usize>,
    ts: Vec<Vec<u32>>,
    a: Vec<f64>,
}

impl SnappedPolicy {
    fn new(policy: &AdaptivePolicy, coeffs: &CostCoefficients, resolution: usize) -> Result<Self> {
        if resolution < 100 {
            return Err(Error::GridTooSmall(resolution));
        }
        if coeffs.0.len() != policy.segments().len() {
            return Err(Error::PolicyConfig(format!(
                "{} coefficients for {} intervals",
                coeffs.0.len(),
                policy.segments().len()
            )));
        }
        let nodes: Vec<usize> = policy
            .breakpoints()
            .iter()
            .map(|b| (b * resolution as f64).round() as usize)
            .collect();
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::PolicyConfig(
                "breakpoints collide after snapping to the grid".into(),
            ));
        }
        Ok(SnappedPolicy {
            resolution,
            nodes,
            ts: policy
                .segments()
                .iter()
                .map(|s| s.scheme.t().to_vec())
                .collect(),
            a: coeffs.0.clone(),
        })
    }

    fn breakpoint_nodes(&self) -> Vec<usize> {
        self.nodes[1..self.nodes.len() - 1].to_vec()
    }

    /// Interval owning node `i`; `left` selects the interval ending at `i`.
    fn interval_of_node(&self, i: usize, left: bool) -> usize {
        let d = self.ts.len();
        for v in 0..d {
            let (lo, hi) = (self.nodes[v], self.nodes[v + 1]);
            if left {
                if lo < i && i <= hi {
                    return v;
                }
            } else if (lo <= i && i < hi) || (v == d - 1 && i == hi) {
                return v;
            }
        }
        unreachable!("node {i} outside the grid");
    }
}

fn ln_beta2(a: i64, b: i64) -> f64 {
    ln_gamma(a as f64) + ln_gamma(b as f64) - ln_gamma((a + b) as f64)
}

fn ln_beta3(a: i64, b: i64, c: i64) -> f64 {
    ln_gamma(a as f64) + ln_gamma(b as f64) + ln_gamma(c as f64) - ln_gamma((a + b + c) as f64)
}

/// The discretized operator: one dense row per output value.
struct Operator {
    resolution: usize,
    rows: Vec<(usize, bool)>,
    weights: Vec<Vec<f64>>,
    a_row: Vec<f64>,
    breakpoint_nodes: Vec<usize>,
}

impl Operator {
    fn assemble(policy: &SnappedPolicy) -> Result<Self> {
        let n = policy.resolution;
        let bks = policy.breakpoint_nodes();
        let mut rows: Vec<(usize, bool)> = (0..=n).map(|i| (i, false)).collect();
        rows.extend(bks.iter().map(|&i| (i, true)));

        let built: Vec<(Vec<f64>, f64)> = rows
            .par_iter()
            .map(|&(i, left)| Operator::assemble_row(policy, i, left))
            .collect::<Result<_>>()?;

        let mut weights = Vec::with_capacity(rows.len());
        let mut a_row = Vec::with_capacity(rows.len());
        for (w, a) in built {
            weights.push(w);
            a_row.push(a);
        }
        Ok(Operator {
            resolution: n,
            rows,
            weights,
            a_row,
            breakpoint_nodes: bks,
        })
    }

    fn assemble_row(policy: &SnappedPolicy, node: usize, left: bool) -> Result<(Vec<f64>, f64)> {
        let n = policy.resolution;
        let nf = n as f64;
        let v_idx = policy.interval_of_node(node, left);
        let t = &policy.ts[v_idx];
        let stops = t_stops(t);
        let s = t.len();
        let alpha = node as f64 / nf;
        let mut row = vec![0.0; 2 * (n + 1)];

        fn add(row: &mut [f64], n: usize, x: f64, w: f64) {
            let scaled = x * n as f64;
            let j = (scaled as usize).min(n - 1);
            let frac = scaled - j as f64;
            row[j] += w * (1.0 - frac);
            row[n + 1 + j + 1] += w * frac;
        }

        // descent into segment 1: single integral over the first pivot value
        if node < n {
            let st = stops[0];
            let norm = (-ln_beta2(st.t + 1, st.right + 1)).exp() / nf;
            for j in node..n {
                let u = (j as f64 + 0.5) / nf;
                let w = u.powi(st.t as i32 + 1) * (1.0 - u).powi(st.right as i32) * norm;
                add(&mut row, n, alpha / u, w);
            }
        }
        // descent into segment s: single integral over the last pivot value
        if node > 0 {
            let st = stops[s - 1];
            let norm = (-ln_beta2(st.left + 1, st.t + 1)).exp() / nf;
            for j in 0..node {
                let v = (j as f64 + 0.5) / nf;
                let w = v.powi(st.left as i32) * (1.0 - v).powi(st.t as i32 + 1) * norm;
                add(&mut row, n, (alpha - v) / (1.0 - v), w);
            }
        }
        // middle segments: double integral over both bracketing pivots
        for l in 1..s - 1 {
            if node == 0 || node == n {
                break;
            }
            let st = stops[l];
            let norm = (-ln_beta3(st.left + 1, st.t + 1, st.right + 1)).exp() / (nf * nf);
            for ju in 0..node {
                let u = (ju as f64 + 0.5) / nf;
                let u_pow = u.powi(st.left as i32);
                for jv in node..n {
                    let v = (jv as f64 + 0.5) / nf;
                    let w = u_pow
                        * (v - u).powi(st.t as i32 + 1)
                        * (1.0 - v).powi(st.right as i32)
                        * norm;
                    add(&mut row, n, (alpha - u) / (v - u), w);
                }
            }
        }

        if row.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFiniteOperator {
                alpha,
                term: format!("assembly for t = {t:?}"),
            });
        }
        Ok((row, policy.a[v_idx]))
    }

    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let n = self.resolution;
        let mut x = Vec::with_capacity(2 * (n + 1));
        x.extend_from_slice(&f.values);
        x.extend_from_slice(&f.left_values);

        let out: Vec<f64> = self
            .weights
            .par_iter()
            .zip(&self.a_row)
            .map(|(row, a)| a + row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>())
            .collect();

        let values = out[..=n].to_vec();
        let mut left_values = values.clone();
        for (r, &(i, left)) in self.rows.iter().enumerate() {
            if left {
                left_values[i] = out[r];
            }
        }
        for (i, (&v, &l)) in values.iter().zip(&left_values).enumerate() {
            if !v.is_finite() || !l.is_finite() {
                return Err(Error::NonFiniteOperator {
                    alpha: i as f64 / n as f64,
                    term: "sweep".into(),
                });
            }
        }
        Ok(GridFunction::from_values(
            n,
            values,
            left_values,
            self.breakpoint_nodes.clone(),
        ))
    }

    fn initial(&self, policy: &SnappedPolicy) -> GridFunction {
        let n = self.resolution;
        let values: Vec<f64> = (0..=n)
            .map(|i| policy.a[policy.interval_of_node(i, false)])
            .collect();
        let mut left_values = values.clone();
        for &b in &self.breakpoint_nodes {
            left_values[b] = policy.a[policy.interval_of_node(b, true)];
        }
        GridFunction::from_values(n, values, left_values, self.breakpoint_nodes.clone())
    }
}

/// Apply the integral operator once to `f` under the given policy and
/// per-interval coefficients.
pub fn apply_operator(
    f: &GridFunction,
    policy: &AdaptivePolicy,
    coeffs: &CostCoefficients,
) -> Result<GridFunction> {
    let snapped = SnappedPolicy::new(policy, coeffs, f.resolution())?;
    Operator::assemble(&snapped)?.apply(f)
}

/// A converged solve: the grid function, the final sup-norm change, and the
/// per-sweep residual history.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub f: GridFunction,
    pub residual: f64,
    pub sweeps: usize,
    pub residual_history: Vec<f64>,
}

/// Iterate `f <- T(f)` from `f_0 = a_F` until the sup-norm change drops
/// below `tol`. Non-convergence within `max_iter` is an error carrying the
/// tail of the residual history.
pub fn solve_fixed_point(
    policy: &AdaptivePolicy,
    coeffs: &CostCoefficients,
    resolution: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SolveOutput> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::BadTolerance(tol));
    }
    let snapped = SnappedPolicy::new(policy, coeffs, resolution)?;
    let op = Operator::assemble(&snapped)?;
    let mut f = op.initial(&snapped);
    let mut history = Vec::new();
    for sweep in 1..=max_iter {
        let next = op.apply(&f)?;
        let delta = next.sup_distance(&f);
        history.push(delta);
        f = next;
        if delta < tol {
            return Ok(SolveOutput {
                f,
                residual: delta,
                sweeps: sweep,
                residual_history: history,
            });
        }
    }
    let tail = history[history.len().saturating_sub(8)..].to_vec();
    Err(Error::SolverNoConvergence { max_iter, tail })
}

/// Estimate of a leading cost coefficient from first partitioning rounds.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Measure `a_F` empirically: the mean first-round cost divided by `n`,
/// with its standard error. Used where no closed form is tabulated (e.g.
/// comparisons for sampled dual-pivot rounds).
pub fn estimate_a_empirical(
    method: PartitionMethod,
    scheme: &SamplingScheme,
    measure: CostMeasure,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<CoefficientEstimate> {
    let per_trial: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<f64> {
            let mut rng = trial_rng(seed, trial as u64);
            let mut view =
                make_input(n, seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))?;
            let mut tally = CostTally::ZERO;
            let sel = sample_pivots(&mut view, scheme, method, &mut rng, &mut tally)?;
            let outcome = partition_with(&mut view, method, &sel.pivots)?;
            tally += outcome.tally;
            Ok(tally.get(measure) as f64 / n as f64)
        })
        .collect::<Result<_>>()?;
    let mean = crate::bench::pairwise_sum(&per_trial) / trials as f64;
    let var =
        per_trial.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1).max(1) as f64;
    Ok(CoefficientEstimate {
        mean,
        std_error: (var / trials as f64).sqrt(),
        trials,
    })
}

/// Write `alpha,value` rows for every grid node.
pub fn curve_export(f: &GridFunction, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "alpha,value")?;
    for i in 0..=f.resolution() {
        writeln!(out, "{},{}", f.node(i), f.values()[i])?;
    }
    out.flush()?;
    Ok(())
}

/// Structured policy input for the solver, as read from a JSON config:
/// breakpoints plus per-interval method, `t`-vector, and optional `a`
/// coefficients per measure (estimated empirically when absent).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub breakpoints: Vec<f64>,
    pub segments: Vec<SegmentConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub method: String,
    pub t: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<CoeffConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoeffConfig {
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub comparisons: Option<f64>,
    #[serde(rename = "SE", default, skip_serializing_if = "Option::is_none")]
    pub scanned: Option<f64>,
}

impl PolicyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_policy(policy: &AdaptivePolicy) -> Self {
        PolicyConfig {
            breakpoints: policy.breakpoints().to_vec(),
            segments: policy
                .segments()
                .iter()
                .map(|s| SegmentConfig {
                    method: s.method.label().to_string(),
                    t: s.scheme.t().to_vec(),
                    a: None,
                })
                .collect(),
        }
    }

    pub fn to_policy(&self) -> Result<AdaptivePolicy> {
        let segments = self
            .segments
            .iter()
            .map(|s| {
                let method: PartitionMethod = s.method.parse().map_err(Error::PolicyConfig)?;
                PolicySegment::new(method, SamplingScheme::new(s.t.clone())?)
            })
            .collect::<Result<Vec<_>>>()?;
        AdaptivePolicy::new(self.breakpoints.clone(), segments)
    }

    /// Per-interval `a_F` for `measure`: explicit config value, else closed
    /// form, else the `estimate` fallback.
    pub fn resolve_coefficients(
        &self,
        measure: CostMeasure,
        mut estimate: impl FnMut(PartitionMethod, &SamplingScheme) -> Result<f64>,
    ) -> Result<CostCoefficients> {
        let policy = self.to_policy()?;
        let mut out = Vec::with_capacity(self.segments.len());
        for (cfg, seg) in self.segments.iter().zip(policy.segments()) {
            let explicit = cfg.a.as_ref().and_then(|a| match measure {
                CostMeasure::Comparisons => a.comparisons,
                CostMeasure::ScannedElements => a.scanned,
                CostMeasure::WriteAccesses => None,
            });
            let value = match explicit {
                Some(v) => v,
                None => {
                    let closed = match measure {
                        CostMeasure::ScannedElements => {
                            analytic::a_se(seg.method, &seg.scheme).ok()
                        }
                        CostMeasure::Comparisons => {
                            analytic::a_comparisons(seg.method, &seg.scheme).ok()
                        }
                        CostMeasure::WriteAccesses => None,
                    };
                    match closed {
                        Some(r) => num_traits::ToPrimitive::to_f64(&r).unwrap(),
                        None => estimate(seg.method, &seg.scheme)?,
                    }
                }
            };
            out.push(value);
        }
        CostCoefficients::new(out)
    }
}
