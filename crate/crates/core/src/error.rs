use thiserror::Error;

/// Errors reported by validation, selection, and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input size must be at least 1")]
    EmptyInput,

    #[error("sampling vector must have at least two components, got {0}")]
    SchemeTooShort(usize),

    #[error("rank {rank} outside valid range 1..={n}")]
    RankOutOfRange { rank: usize, n: usize },

    #[error("quantile {0} outside the open interval (0, 1)")]
    QuantileOutOfRange(f64),

    #[error("partition method expects {expected} segments, scheme has {got}")]
    MethodArityMismatch { expected: usize, got: usize },

    #[error("policy breakpoints must start at 0, end at 1, and be strictly increasing")]
    InvalidBreakpoints,

    #[error("policy needs exactly one segment per breakpoint interval")]
    PolicySegmentCount,

    #[error("view of length {n} is too short for a sample of size {k}: use the base case")]
    SampleLargerThanView { n: usize, k: usize },

    #[error("pivots must be strictly increasing and distinct")]
    PivotOrder,

    #[error("beta-binomial parameters invalid: n={n}, a={a}, b={b}, j={j}")]
    BetaBinomialParams { n: u64, a: u64, b: u64, j: u64 },

    #[error("base-case cutoff {cutoff} is below the largest sample size + 1 ({needed})")]
    CutoffTooSmall { cutoff: usize, needed: usize },

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("median-of-k needs an odd k >= 3 with k + 1 <= base-case cutoff, got {0}")]
    BadMedianOfK(usize),

    #[error("sqsk is only tabulated for k in 3..=7, got {0}")]
    BadSqskK(usize),

    #[error("threshold {0} outside the supported range")]
    ThresholdOutOfRange(f64),

    #[error("degenerate threshold: the closed-form constants are ill-conditioned at nu = {0}")]
    DegenerateThreshold(f64),

    #[error("no sign change of g1 - g2 on [{lo}, {hi}] for {measure}: no crossing to bracket")]
    NoCrossing {
        lo: f64,
        hi: f64,
        measure: &'static str,
    },

    #[error("no closed-form cost coefficient for {method} with t = {t:?} and measure {measure}")]
    NoClosedFormCoefficient {
        method: &'static str,
        t: Vec<u32>,
        measure: &'static str,
    },

    #[error(
        "fixed-point iteration did not converge within {max_iter} sweeps \
         (last residuals: {tail:?})"
    )]
    SolverNoConvergence { max_iter: usize, tail: Vec<f64> },

    #[error("non-finite operator value at alpha = {alpha} in term {term}")]
    NonFiniteOperator { alpha: f64, term: String },

    #[error("grid resolution {0} too small, need at least 100")]
    GridTooSmall(usize),

    #[error("invalid solver tolerance {0}")]
    BadTolerance(f64),

    #[error("policy config: {0}")]
    PolicyConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
