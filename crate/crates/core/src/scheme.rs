//! Pivot-sampling schemes and adaptive method policies.

use crate::error::{Error, Result};
use num_rational::Ratio;

/// A pivot-sampling scheme given by the vector `t` of per-segment sample
/// counts omitted between pivots.
///
/// A scheme with `s = t.len()` segments draws a sample of size
/// `k = sum(t_l + 1) - 1` and uses the order statistics at the cumulative
/// positions `t_1 + 1, t_1 + t_2 + 2, ...` as the `s - 1` pivots. The
/// expected fraction of keys landing in segment `l` is
/// `tau_l = (t_l + 1) / (k + 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingScheme {
    t: Vec<u32>,
}

impl SamplingScheme {
    pub fn new(t: Vec<u32>) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::SchemeTooShort(t.len()));
        }
        Ok(SamplingScheme { t })
    }

    /// Number of segments `s`.
    pub fn segments(&self) -> usize {
        self.t.len()
    }

    pub fn t(&self) -> &[u32] {
        &self.t
    }

    /// Sample size `k = sum(t_l + 1) - 1`; always `k >= s - 1`.
    pub fn sample_size(&self) -> usize {
        self.t.iter().map(|&x| x as usize + 1).sum::<usize>() - 1
    }

    /// Exact segment quantiles `tau_l = (t_l + 1) / (k + 1)`; they sum to 1.
    pub fn tau(&self) -> Vec<Ratio<i64>> {
        let kp1 = self.sample_size() as i64 + 1;
        self.t
            .iter()
            .map(|&x| Ratio::new(x as i64 + 1, kp1))
            .collect()
    }

    /// 1-based positions of the pivots within the sorted sample.
    pub fn pivot_positions(&self) -> Vec<usize> {
        let mut pos = Vec::with_capacity(self.segments() - 1);
        let mut acc = 0usize;
        for &tl in &self.t[..self.t.len() - 1] {
            acc += tl as usize + 1;
            pos.push(acc);
        }
        pos
    }

    /// The scheme read right-to-left, used by mirrored policies.
    pub fn reversed(&self) -> SamplingScheme {
        let mut t = self.t.clone();
        t.reverse();
        SamplingScheme { t }
    }
}

/// The partitioning methods in the portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartitionMethod {
    /// Hoare crossing-pointer partitioning, 2 segments.
    Classic,
    /// Yaroslavskiy dual-pivot partitioning, 3 segments; the trailing index
    /// re-scans the left segment.
    Ybb,
    /// Left-right mirror of Ybb; the trailing index re-scans the right segment.
    Bby,
    /// Three-pivot single-pass partitioning, 4 segments.
    Waterloo,
}

impl PartitionMethod {
    pub fn segments(self) -> usize {
        match self {
            PartitionMethod::Classic => 2,
            PartitionMethod::Ybb | PartitionMethod::Bby => 3,
            PartitionMethod::Waterloo => 4,
        }
    }

    pub fn mirrored(self) -> PartitionMethod {
        match self {
            PartitionMethod::Ybb => PartitionMethod::Bby,
            PartitionMethod::Bby => PartitionMethod::Ybb,
            other => other,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PartitionMethod::Classic => "classic",
            PartitionMethod::Ybb => "ybb",
            PartitionMethod::Bby => "bby",
            PartitionMethod::Waterloo => "waterloo",
        }
    }
}

impl std::str::FromStr for PartitionMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "classic" | "hoare" => Ok(PartitionMethod::Classic),
            "ybb" => Ok(PartitionMethod::Ybb),
            "bby" => Ok(PartitionMethod::Bby),
            "waterloo" => Ok(PartitionMethod::Waterloo),
            other => Err(format!("unknown partition method '{other}'")),
        }
    }
}

/// One entry of an [`AdaptivePolicy`]: the method and sampling scheme used
/// while the relative sought rank lies in the entry's interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySegment {
    pub method: PartitionMethod,
    pub scheme: SamplingScheme,
}

impl PolicySegment {
    pub fn new(method: PartitionMethod, scheme: SamplingScheme) -> Result<Self> {
        if method.segments() != scheme.segments() {
            return Err(Error::MethodArityMismatch {
                expected: method.segments(),
                got: scheme.segments(),
            });
        }
        Ok(PolicySegment { method, scheme })
    }
}

/// Breakpoints `0 = b_0 < b_1 < ... < b_d = 1` with one `(method, scheme)`
/// pair per interval. `alpha` in `[b_{v-1}, b_v)` selects entry `v`
/// (half-open; the last interval is closed at 1).
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptivePolicy {
    breakpoints: Vec<f64>,
    segments: Vec<PolicySegment>,
}

impl AdaptivePolicy {
    pub fn new(breakpoints: Vec<f64>, segments: Vec<PolicySegment>) -> Result<Self> {
        if breakpoints.len() < 2
            || breakpoints[0] != 0.0
            || *breakpoints.last().unwrap() != 1.0
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidBreakpoints);
        }
        if segments.len() + 1 != breakpoints.len() {
            return Err(Error::PolicySegmentCount);
        }
        Ok(AdaptivePolicy {
            breakpoints,
            segments,
        })
    }

    /// A single-interval (non-adaptive) policy.
    pub fn uniform(method: PartitionMethod, scheme: SamplingScheme) -> Result<Self> {
        AdaptivePolicy::new(vec![0.0, 1.0], vec![PolicySegment::new(method, scheme)?])
    }

    /// Build the right half of a policy as the mirror of its left half:
    /// reversed schemes, Ybb and Bby exchanged, reflected breakpoints.
    /// `left` lists `(right_breakpoint, segment)` pairs covering `[0, 1/2)`.
    pub fn symmetric_from_left_half(left: Vec<(f64, PolicySegment)>) -> Result<Self> {
        if left.is_empty() || left.last().unwrap().0 != 0.5 {
            return Err(Error::InvalidBreakpoints);
        }
        let mut breakpoints = vec![0.0];
        let mut segments = Vec::new();
        for (bp, seg) in &left {
            breakpoints.push(*bp);
            segments.push(seg.clone());
        }
        let mut lefts = vec![0.0];
        lefts.extend(left.iter().map(|(bp, _)| *bp));
        for (i, (_, seg)) in left.iter().enumerate().rev() {
            breakpoints.push(1.0 - lefts[i]);
            segments.push(PolicySegment::new(
                seg.method.mirrored(),
                seg.scheme.reversed(),
            )?);
        }
        AdaptivePolicy::new(breakpoints, segments)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[PolicySegment] {
        &self.segments
    }

    /// Index of the interval containing `alpha` under the half-open
    /// convention (a breakpoint belongs to the interval on its right).
    pub fn interval_of(&self, alpha: f64) -> usize {
        debug_assert!((0.0..=1.0).contains(&alpha));
        match self.breakpoints[1..self.breakpoints.len() - 1]
            .iter()
            .position(|&b| alpha < b)
        {
            Some(v) => v,
            None => self.segments.len() - 1,
        }
    }

    pub fn segment_for(&self, alpha: f64) -> &PolicySegment {
        &self.segments[self.interval_of(alpha)]
    }

    pub fn max_sample_size(&self) -> usize {
        self.segments
            .iter()
            .map(|s| s.scheme.sample_size())
            .max()
            .unwrap()
    }
}
