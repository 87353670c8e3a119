//! The recursive selection driver and the named algorithm presets.

use crate::analytic;
use crate::error::{Error, Result};
use crate::input::{resolve_rank, RankSpec, SelectRng};
use crate::partition::{insertion_sort, partition_with, sample_pivots, PartitionOutcome};
use crate::scheme::{AdaptivePolicy, PartitionMethod, PolicySegment, SamplingScheme};
use crate::tally::CostTally;

pub const DEFAULT_BASE_CUTOFF: usize = 32;

/// Built-in simulation variants: multiway rounds replayed as sequences of
/// binary partitioning rounds over the same pivot values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulationVariant {
    /// Median-of-3 split, then split only the half that holds the rank.
    WaterlooLazy,
    /// Split around the larger of two samples; subdivide the left part only
    /// when the rank falls left.
    YbbLazy,
    /// Split around the larger of two samples; always subdivide the left part.
    YbbAtomic,
}

#[derive(Debug, Clone, PartialEq)]
enum PresetKind {
    Policy(AdaptivePolicy),
    Simulation(SimulationVariant),
}

/// A named selection algorithm: an adaptive policy (single-interval for the
/// non-adaptive variants) or one of the binary-simulation variants, plus the
/// base-case cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmPreset {
    pub name: String,
    kind: PresetKind,
    pub base_case_cutoff: usize,
}

fn seg(method: PartitionMethod, t: &[u32]) -> PolicySegment {
    PolicySegment::new(method, SamplingScheme::new(t.to_vec()).unwrap()).unwrap()
}

impl AlgorithmPreset {
    fn from_policy(name: String, policy: AdaptivePolicy) -> Result<Self> {
        let needed = policy.max_sample_size() + 1;
        if DEFAULT_BASE_CUTOFF < needed {
            return Err(Error::CutoffTooSmall {
                cutoff: DEFAULT_BASE_CUTOFF,
                needed,
            });
        }
        Ok(AlgorithmPreset {
            name,
            kind: PresetKind::Policy(policy),
            base_case_cutoff: DEFAULT_BASE_CUTOFF,
        })
    }

    /// Classic Quickselect, uniform random pivot.
    pub fn cqs() -> Self {
        let policy = AdaptivePolicy::uniform(
            PartitionMethod::Classic,
            SamplingScheme::new(vec![0, 0]).unwrap(),
        )
        .unwrap();
        Self::from_policy("cqs".into(), policy).unwrap()
    }

    /// Median-of-k Quickselect for odd `k`.
    pub fn median_of(k: usize) -> Result<Self> {
        if k < 3 || k % 2 == 0 || k + 1 > DEFAULT_BASE_CUTOFF {
            return Err(Error::BadMedianOfK(k));
        }
        let half = ((k - 1) / 2) as u32;
        let policy = AdaptivePolicy::uniform(
            PartitionMethod::Classic,
            SamplingScheme::new(vec![half, half]).unwrap(),
        )?;
        Self::from_policy(format!("mok:{k}"), policy)
    }

    /// Dual-pivot Quickselect without sampling.
    pub fn yqs() -> Self {
        let policy = AdaptivePolicy::uniform(
            PartitionMethod::Ybb,
            SamplingScheme::new(vec![0, 0, 0]).unwrap(),
        )
        .unwrap();
        Self::from_policy("yqs".into(), policy).unwrap()
    }

    /// Mirrored dual-pivot Quickselect without sampling.
    pub fn bby() -> Self {
        let policy = AdaptivePolicy::uniform(
            PartitionMethod::Bby,
            SamplingScheme::new(vec![0, 0, 0]).unwrap(),
        )
        .unwrap();
        Self::from_policy("bby".into(), policy).unwrap()
    }

    /// Three-pivot Quickselect without sampling.
    pub fn waterloo() -> Self {
        let policy = AdaptivePolicy::uniform(
            PartitionMethod::Waterloo,
            SamplingScheme::new(vec![0, 0, 0, 0]).unwrap(),
        )
        .unwrap();
        Self::from_policy("waterloo".into(), policy).unwrap()
    }

    /// Proportion-from-2: pivot is the smaller of two samples for
    /// `alpha < nu`, else the larger. The unbiased variant has `nu = 1/2`.
    pub fn prop2(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::ThresholdOutOfRange(nu));
        }
        let policy = AdaptivePolicy::new(
            vec![0.0, nu, 1.0],
            vec![
                seg(PartitionMethod::Classic, &[0, 1]),
                seg(PartitionMethod::Classic, &[1, 0]),
            ],
        )?;
        Self::from_policy(format!("prop2:{nu}"), policy)
    }

    /// Sesquickselect with sample size 2: one pivot for extreme relative
    /// ranks, both samples as dual pivots in the middle band.
    pub fn sqs2(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu <= 0.5) {
            return Err(Error::ThresholdOutOfRange(nu));
        }
        if nu == 0.5 {
            // the dual-pivot band has empty interior
            return Ok(AlgorithmPreset {
                name: "sqs2:0.5".into(),
                ..Self::prop2(0.5)?
            });
        }
        let policy = AdaptivePolicy::new(
            vec![0.0, nu, 1.0 - nu, 1.0],
            vec![
                seg(PartitionMethod::Classic, &[0, 1]),
                seg(PartitionMethod::Ybb, &[0, 0, 0]),
                seg(PartitionMethod::Classic, &[1, 0]),
            ],
        )?;
        Self::from_policy(format!("sqs2:{nu}"), policy)
    }

    /// Sesquickselect at the scanned-element-optimal threshold.
    pub fn sqs2_optimal() -> Self {
        Self::sqs2(analytic::nu_star_se()).unwrap()
    }

    /// The tabulated sesquickselect variants for sample sizes 3..=7;
    /// dual-pivot intervals use Ybb below 1/2 and Bby above.
    pub fn sqsk(k: usize) -> Result<Self> {
        let left: Vec<(f64, PolicySegment)> = match k {
            3 => vec![
                (0.1035, seg(PartitionMethod::Classic, &[0, 2])),
                (0.5, seg(PartitionMethod::Ybb, &[0, 0, 1])),
            ],
            4 => vec![
                (0.06, seg(PartitionMethod::Classic, &[0, 3])),
                (0.28, seg(PartitionMethod::Ybb, &[0, 0, 2])),
                (0.5, seg(PartitionMethod::Ybb, &[0, 1, 1])),
            ],
            5 => vec![
                (0.036, seg(PartitionMethod::Classic, &[0, 4])),
                (0.153, seg(PartitionMethod::Ybb, &[0, 0, 3])),
                (0.5, seg(PartitionMethod::Ybb, &[0, 1, 2])),
            ],
            6 => vec![
                (0.025, seg(PartitionMethod::Classic, &[0, 5])),
                (0.09, seg(PartitionMethod::Ybb, &[0, 0, 4])),
                (0.38, seg(PartitionMethod::Ybb, &[0, 1, 3])),
                (0.5, seg(PartitionMethod::Ybb, &[1, 1, 2])),
            ],
            7 => vec![
                (0.02, seg(PartitionMethod::Classic, &[0, 6])),
                (0.06, seg(PartitionMethod::Ybb, &[0, 0, 5])),
                (0.2875, seg(PartitionMethod::Ybb, &[0, 1, 4])),
                (0.465, seg(PartitionMethod::Ybb, &[1, 1, 3])),
                (0.5, seg(PartitionMethod::Ybb, &[1, 2, 2])),
            ],
            other => return Err(Error::BadSqskK(other)),
        };
        let policy = AdaptivePolicy::symmetric_from_left_half(left)?;
        Self::from_policy(format!("sqsk:{k}"), policy)
    }

    pub fn simulation(variant: SimulationVariant) -> Self {
        let name = match variant {
            SimulationVariant::WaterlooLazy => "sim-waterloo-lazy",
            SimulationVariant::YbbLazy => "sim-ybb-lazy",
            SimulationVariant::YbbAtomic => "sim-ybb-atomic",
        };
        AlgorithmPreset {
            name: name.into(),
            kind: PresetKind::Simulation(variant),
            base_case_cutoff: DEFAULT_BASE_CUTOFF,
        }
    }

    /// Parse a stable preset name: `cqs`, `mok:<k>`, `yqs`, `bby`,
    /// `waterloo`, `prop2[:<nu>]`, `sqs2[:<nu>]`, `sqsk:<k>`,
    /// `sim-waterloo-lazy`, `sim-ybb-lazy`, `sim-ybb-atomic`.
    pub fn parse(name: &str) -> Result<Self> {
        let bad = || Error::UnknownPreset(name.to_string());
        match name {
            "cqs" => return Ok(Self::cqs()),
            "yqs" => return Ok(Self::yqs()),
            "bby" => return Ok(Self::bby()),
            "waterloo" => return Ok(Self::waterloo()),
            "prop2" => return Self::prop2(0.5),
            "sqs2" => return Ok(Self::sqs2_optimal()),
            "sim-waterloo-lazy" => return Ok(Self::simulation(SimulationVariant::WaterlooLazy)),
            "sim-ybb-lazy" => return Ok(Self::simulation(SimulationVariant::YbbLazy)),
            "sim-ybb-atomic" => return Ok(Self::simulation(SimulationVariant::YbbAtomic)),
            _ => {}
        }
        let (head, arg) = name.split_once(':').ok_or_else(bad)?;
        match head {
            "mok" => Self::median_of(arg.parse().map_err(|_| bad())?),
            "sqsk" => Self::sqsk(arg.parse().map_err(|_| bad())?),
            "prop2" => Self::prop2(arg.parse().map_err(|_| bad())?),
            "sqs2" => Self::sqs2(arg.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }

    /// All presets with their default parameters, for test sweeps.
    pub fn all_default() -> Vec<Self> {
        let mut out = vec![
            Self::cqs(),
            Self::median_of(3).unwrap(),
            Self::median_of(5).unwrap(),
            Self::yqs(),
            Self::bby(),
            Self::waterloo(),
            Self::prop2(0.5).unwrap(),
            Self::sqs2_optimal(),
        ];
        for k in 3..=7 {
            out.push(Self::sqsk(k).unwrap());
        }
        out.push(Self::simulation(SimulationVariant::WaterlooLazy));
        out.push(Self::simulation(SimulationVariant::YbbLazy));
        out.push(Self::simulation(SimulationVariant::YbbAtomic));
        out
    }

    pub fn policy(&self) -> Option<&AdaptivePolicy> {
        match &self.kind {
            PresetKind::Policy(p) => Some(p),
            PresetKind::Simulation(_) => None,
        }
    }
}

/// Output of one selection run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionResult {
    pub key: u64,
    pub tally: CostTally,
    pub depth: usize,
}

enum Descent {
    Pivot(u64),
    Into { segment: usize, new_rank: usize },
}

fn descend(view: &[u64], outcome: &PartitionOutcome, m: usize) -> Descent {
    let s = outcome.segments();
    for l in 1..s {
        if m == outcome.pivot_ranks[l] {
            return Descent::Pivot(view[m - 1]);
        }
    }
    for l in 1..=s {
        if outcome.pivot_ranks[l - 1] < m && m < outcome.pivot_ranks[l] {
            return Descent::Into {
                segment: l,
                new_rank: m - outcome.pivot_ranks[l - 1],
            };
        }
    }
    unreachable!("rank {m} not located in outcome {outcome:?}");
}

fn base_case(view: &mut [u64], m: usize, tally: &mut CostTally) -> u64 {
    insertion_sort(view, tally);
    view[m - 1]
}

/// Select the `m`-th smallest element (per `spec`) from `data`, returning
/// the key, the summed cost tally, and the number of partitioning rounds on
/// the deepest path.
///
/// Each round computes `alpha = m / n` for the current subproblem, looks up
/// the preset's method and sampling scheme, partitions, and recurses into
/// the unique segment containing `m` (returning immediately when `m` hits a
/// pivot rank).
pub fn quickselect(
    data: &mut [u64],
    spec: &RankSpec,
    preset: &AlgorithmPreset,
    rng: &mut SelectRng,
) -> Result<SelectionResult> {
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let m = resolve_rank(spec, n, rng)?;
    let mut tally = CostTally::ZERO;
    let mut depth = 0usize;
    let key = match &preset.kind {
        PresetKind::Policy(policy) => select_policy(
            data,
            m,
            policy,
            preset.base_case_cutoff,
            rng,
            &mut tally,
            &mut depth,
        )?,
        PresetKind::Simulation(variant) => select_simulation(
            data,
            m,
            *variant,
            preset.base_case_cutoff,
            rng,
            &mut tally,
            &mut depth,
        )?,
    };
    let depth_limit = (20.0 * (n.max(2) as f64).ln()).ceil() as usize;
    debug_assert!(depth <= depth_limit, "depth {depth} > 20 ln n");
    Ok(SelectionResult { key, tally, depth })
}

fn select_policy(
    mut view: &mut [u64],
    mut m: usize,
    policy: &AdaptivePolicy,
    cutoff: usize,
    rng: &mut SelectRng,
    tally: &mut CostTally,
    depth: &mut usize,
) -> Result<u64> {
    loop {
        let n = view.len();
        debug_assert!(1 <= m && m <= n);
        if n < cutoff {
            return Ok(base_case(view, m, tally));
        }
        let alpha = m as f64 / n as f64;
        let entry = policy.segment_for(alpha);
        let mut round = CostTally::ZERO;
        let sel = sample_pivots(view, &entry.scheme, entry.method, rng, &mut round)?;
        let outcome = partition_with(view, entry.method, &sel.pivots)?;
        round += outcome.tally;
        *tally += round;
        *depth += 1;
        match descend(view, &outcome, m) {
            Descent::Pivot(key) => return Ok(key),
            Descent::Into { segment, new_rank } => {
                let lo = outcome.pivot_ranks[segment - 1];
                let hi = outcome.pivot_ranks[segment] - 1;
                view = &mut view[lo..hi];
                m = new_rank;
            }
        }
    }
}

/// One binary split with pivots sampled by `scheme` (Classic arity).
fn binary_round(
    view: &mut [u64],
    t: &[u32],
    rng: &mut SelectRng,
    tally: &mut CostTally,
) -> Result<PartitionOutcome> {
    let scheme = SamplingScheme::new(t.to_vec()).unwrap();
    let mut round = CostTally::ZERO;
    let sel = sample_pivots(view, &scheme, PartitionMethod::Classic, rng, &mut round)?;
    let outcome = partition_with(view, PartitionMethod::Classic, &sel.pivots)?;
    round += outcome.tally;
    *tally += round;
    Ok(outcome)
}

fn select_simulation(
    mut view: &mut [u64],
    mut m: usize,
    variant: SimulationVariant,
    cutoff: usize,
    rng: &mut SelectRng,
    tally: &mut CostTally,
    depth: &mut usize,
) -> Result<u64> {
    loop {
        let n = view.len();
        debug_assert!(1 <= m && m <= n);
        if n < cutoff {
            return Ok(base_case(view, m, tally));
        }
        *depth += 1;
        match variant {
            SimulationVariant::WaterlooLazy => {
                // median-of-3 split; the remaining two sample keys are
                // uniform on their halves, so the second round may sample
                // afresh within the half that holds m.
                let first = binary_round(view, &[1, 1], rng, tally)?;
                match descend(view, &first, m) {
                    Descent::Pivot(key) => return Ok(key),
                    Descent::Into { segment, new_rank } => {
                        let lo = first.pivot_ranks[segment - 1];
                        let hi = first.pivot_ranks[segment] - 1;
                        view = &mut view[lo..hi];
                        m = new_rank;
                    }
                }
                if view.len() < cutoff {
                    continue;
                }
                let second = binary_round(view, &[0, 0], rng, tally)?;
                match descend(view, &second, m) {
                    Descent::Pivot(key) => return Ok(key),
                    Descent::Into { segment, new_rank } => {
                        let lo = second.pivot_ranks[segment - 1];
                        let hi = second.pivot_ranks[segment] - 1;
                        view = &mut view[lo..hi];
                        m = new_rank;
                    }
                }
            }
            SimulationVariant::YbbLazy | SimulationVariant::YbbAtomic => {
                // split around the larger of two sampled keys
                let first = binary_round(view, &[1, 0], rng, tally)?;
                let r = first.pivot_ranks[1];
                if m == r {
                    return Ok(view[r - 1]);
                }
                if m > r {
                    if variant == SimulationVariant::YbbAtomic && r > 1 {
                        // subdivide the discarded left part anyway
                        let (left, _) = view.split_at_mut(r - 1);
                        if left.len() >= 2 {
                            binary_round(left, &[0, 0], rng, tally)?;
                        }
                    }
                    view = &mut view[r..];
                    m -= r;
                    continue;
                }
                // m < r: move into the left part and subdivide it
                view = &mut view[..r - 1];
                if view.len() < cutoff {
                    continue;
                }
                let second = binary_round(view, &[0, 0], rng, tally)?;
                match descend(view, &second, m) {
                    Descent::Pivot(key) => return Ok(key),
                    Descent::Into { segment, new_rank } => {
                        let lo = second.pivot_ranks[segment - 1];
                        let hi = second.pivot_ranks[segment] - 1;
                        view = &mut view[lo..hi];
                        m = new_rank;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::{make_input, rng_from_seed};

    #[test]
    fn selects_second_smallest() {
        let mut data = vec![3, 1, 2];
        let mut rng = rng_from_seed(0);
        let res = quickselect(
            &mut data,
            &RankSpec::Fixed(2),
            &AlgorithmPreset::cqs(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(res.key, 2);
    }

    #[test]
    fn matches_sorting_oracle_across_presets() {
        let presets = AlgorithmPreset::all_default();
        let mut rng = rng_from_seed(0xFEED);
        for (i, preset) in presets.iter().enumerate() {
            for trial in 0..120u64 {
                let n = 1 + ((trial as usize * 37 + i * 101) % 2000);
                let seed = trial * 7919 + i as u64;
                let mut data = make_input(n, seed).unwrap();
                let m = 1 + (trial as usize * 13) % n;
                let res = quickselect(&mut data, &RankSpec::Fixed(m), preset, &mut rng).unwrap();
                assert_eq!(res.key, m as u64, "preset {} n={n} m={m}", preset.name);
            }
        }
    }

    #[test]
    fn depth_stays_logarithmic() {
        let mut rng = rng_from_seed(3);
        for preset in AlgorithmPreset::all_default() {
            for seed in 0..5 {
                let n = 100_000;
                let mut data = make_input(n, seed).unwrap();
                let res = quickselect(&mut data, &RankSpec::RandomRank, &preset, &mut rng).unwrap();
                let bound = (20.0 * (n as f64).ln()) as usize;
                assert!(res.depth <= bound, "{}: depth {}", preset.name, res.depth);
            }
        }
    }

    #[test]
    fn preset_names_round_trip() {
        for name in [
            "cqs",
            "mok:3",
            "mok:5",
            "yqs",
            "bby",
            "waterloo",
            "prop2:0.5",
            "sqs2:0.25",
            "sqsk:3",
            "sqsk:7",
            "sim-waterloo-lazy",
            "sim-ybb-lazy",
            "sim-ybb-atomic",
        ] {
            let p = AlgorithmPreset::parse(name).unwrap();
            assert_eq!(p.name, name);
        }
        assert!(AlgorithmPreset::parse("nope").is_err());
        assert!(AlgorithmPreset::parse("mok:4").is_err());
        assert!(AlgorithmPreset::parse("sqsk:9").is_err());
        assert!(AlgorithmPreset::parse("sqs2:0.7").is_err());
    }

    #[test]
    fn sqs2_worked_policy() {
        let p = AlgorithmPreset::sqs2(0.266).unwrap();
        let policy = p.policy().unwrap();
        let lo = policy.segment_for(0.1);
        assert_eq!(lo.method, PartitionMethod::Classic);
        assert_eq!(lo.scheme.t(), &[0, 1]);
        let mid = policy.segment_for(0.5);
        assert_eq!(mid.method, PartitionMethod::Ybb);
        assert_eq!(mid.scheme.t(), &[0, 0, 0]);
        let hi = policy.segment_for(0.9);
        assert_eq!(hi.method, PartitionMethod::Classic);
        assert_eq!(hi.scheme.t(), &[1, 0]);
    }

    #[test]
    fn sqs2_half_degenerates_to_prop2() {
        let p = AlgorithmPreset::sqs2(0.5).unwrap();
        let policy = p.policy().unwrap();
        assert_eq!(policy.segments().len(), 2);
        assert!(policy
            .segments()
            .iter()
            .all(|s| s.method == PartitionMethod::Classic));
    }

    #[test]
    fn sqsk3_interval_map() {
        let p = AlgorithmPreset::sqsk(3).unwrap();
        let policy = p.policy().unwrap();
        let a = policy.segment_for(0.05);
        assert_eq!(a.method, PartitionMethod::Classic);
        assert_eq!(a.scheme.t(), &[0, 2]);
        let b = policy.segment_for(0.3);
        assert_eq!(b.method, PartitionMethod::Ybb);
        assert_eq!(b.scheme.t(), &[0, 0, 1]);
        let c = policy.segment_for(0.95);
        assert_eq!(c.method, PartitionMethod::Classic);
        assert_eq!(c.scheme.t(), &[2, 0]);
    }

    #[test]
    fn tally_decomposes_into_rounds_plus_base() {
        // selecting from an already-tiny array costs exactly one base case
        let mut data = vec![5, 4, 1, 3, 2];
        let mut rng = rng_from_seed(9);
        let res = quickselect(
            &mut data,
            &RankSpec::Fixed(4),
            &AlgorithmPreset::cqs(),
            &mut rng,
        )
        .unwrap();
        let mut expect = CostTally::ZERO;
        let mut copy = vec![5, 4, 1, 3, 2];
        insertion_sort(&mut copy, &mut expect);
        assert_eq!(res.tally, expect);
        assert_eq!(res.key, 4);
        assert_eq!(res.depth, 0);
    }
}
