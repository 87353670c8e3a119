//! Closed-form leading-term coefficients, grand averages, the
//! sesquickselect constants, and the optimal-threshold root finder.

use crate::error::{Error, Result};
use crate::scheme::{PartitionMethod, SamplingScheme};
use crate::tally::CostMeasure;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use std::sync::OnceLock;

/// Binary entropy `h(x) = -x ln x - (1-x) ln(1-x)` with `0 ln 0 = 0`.
pub fn entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.ln() - (1.0 - x) * (1.0 - x).ln()
}

/// The "const-entropy" `H(t) = 1 - sum (t_l+1)^rising2 / (k+1)^rising2`,
/// exact as a rational; always positive.
pub fn h_const(scheme: &SamplingScheme) -> Ratio<i64> {
    let kp1 = scheme.sample_size() as i64 + 1;
    let denom = kp1 * (kp1 + 1);
    let mut sum = Ratio::new(0, 1);
    for &tl in scheme.t() {
        let a = tl as i64 + 1;
        sum += Ratio::new(a * (a + 1), denom);
    }
    Ratio::from_integer(1) - sum
}

/// Leading coefficient of the random-rank cost: `a_F / H(t)`.
pub fn grand_avg_leading(a: f64, scheme: &SamplingScheme) -> f64 {
    a / h_const(scheme).to_f64().unwrap()
}

/// Exact leading coefficient of scanned elements per partitioning round.
///
/// Classic scans every cell once; Ybb re-scans segment 1 (`1 + tau_1`),
/// Bby re-scans segment 3 (`1 + tau_3`), Waterloo re-scans both outer
/// segments (`1 + tau_1 + tau_4`).
pub fn a_se(method: PartitionMethod, scheme: &SamplingScheme) -> Result<Ratio<i64>> {
    if method.segments() != scheme.segments() {
        return Err(Error::MethodArityMismatch {
            expected: method.segments(),
            got: scheme.segments(),
        });
    }
    let tau = scheme.tau();
    let one = Ratio::from_integer(1);
    Ok(match method {
        PartitionMethod::Classic => one,
        PartitionMethod::Ybb => one + tau[0],
        PartitionMethod::Bby => one + tau[2],
        PartitionMethod::Waterloo => one + tau[0] + tau[3],
    })
}

/// Exact leading coefficient of comparisons per round, where a closed form
/// is known: Classic compares each cell once for any `t`; Waterloo compares
/// every element exactly twice; Ybb/Bby without sampling cost 19/12.
/// Sampled dual-pivot rounds have no closed form here and must be estimated.
pub fn a_comparisons(method: PartitionMethod, scheme: &SamplingScheme) -> Result<Ratio<i64>> {
    if method.segments() != scheme.segments() {
        return Err(Error::MethodArityMismatch {
            expected: method.segments(),
            got: scheme.segments(),
        });
    }
    match method {
        PartitionMethod::Classic => Ok(Ratio::from_integer(1)),
        PartitionMethod::Waterloo => Ok(Ratio::from_integer(2)),
        PartitionMethod::Ybb | PartitionMethod::Bby => {
            if scheme.t().iter().all(|&t| t == 0) {
                Ok(Ratio::new(19, 12))
            } else {
                Err(Error::NoClosedFormCoefficient {
                    method: method.label(),
                    t: scheme.t().to_vec(),
                    measure: "C",
                })
            }
        }
    }
}

/// Fixed-quantile leading term of classic Quickselect: `a (2 + 2 h(alpha))`.
pub fn f_cqs(alpha: f64, a: f64) -> f64 {
    a * (2.0 + 2.0 * entropy(alpha))
}

/// Fixed-quantile leading term of dual-pivot Quickselect without sampling:
/// `a (3/2 + h(alpha))`.
pub fn f_yqs(alpha: f64, a: f64) -> f64 {
    a * (1.5 + entropy(alpha))
}

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// Expected comparisons of classic Quickselect with a random first-element
/// pivot and no sampling:
/// `2((n+1) H_n - (n+3-m) H_{n+1-m} - (m+2) H_m + n + 3)`.
pub fn exact_cqs_comparisons(n: usize, m: usize) -> Result<f64> {
    if m == 0 || m > n {
        return Err(Error::RankOutOfRange { rank: m, n });
    }
    let (nf, mf) = (n as f64, m as f64);
    Ok(2.0
        * ((nf + 1.0) * harmonic(n)
            - (nf + 3.0 - mf) * harmonic(n + 1 - m)
            - (mf + 2.0) * harmonic(m)
            + nf
            + 3.0))
}

fn poly(coeffs: &[f64], nu: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * nu + c)
}

fn delta(nu: f64) -> f64 {
    let l = (1.0 - nu).ln();
    2.0 * (60.0 * l * nu.powi(6) - 360.0 * l * nu.powi(5) - 140.0 * nu.powi(6)
        + 780.0 * l * nu.powi(4)
        + 480.0 * nu.powi(5)
        - 840.0 * l * nu.powi(3)
        - 635.0 * nu.powi(4)
        + 504.0 * l * nu.powi(2)
        + 428.0 * nu.powi(3)
        - 168.0 * l * nu
        - 156.0 * nu.powi(2)
        + 24.0 * l
        + 24.0 * nu)
}

fn q_a(a: f64, nu: f64) -> f64 {
    (nu.powi(4) - 4.0 * nu.powi(3) + 4.0 * nu.powi(2) - 2.0 * nu + a)
        * (1.0 - nu).powi(2)
        * (1.0 - nu).ln()
}

/// The six per-threshold constants of the sesquickselect closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sqs2Constants {
    pub c: [f64; 6],
}

/// Thresholds this far from the ends keep `C_i = C'_i / Delta` well
/// conditioned in f64 (`Delta ~ 6 nu^4` vanishes at `nu = 0`).
pub const SQS2_NU_MIN: f64 = 0.01;
pub const SQS2_NU_MAX: f64 = 0.49;

fn sqs2_constants_unchecked(nu: f64, measure: CostMeasure) -> Sqs2Constants {
    let q = q_a(0.5, nu);
    let l1 = (1.0 - nu).ln();
    let lnu = nu.ln();
    let d = delta(nu);
    let (c1p, c3p, c4p, c5p) = match measure {
        CostMeasure::Comparisons => (
            poly(&[20.0, -120.0, 260.0, -276.0, 162.0, -52.0, 7.0], nu),
            12.0 * q * (lnu - l1)
                + poly(&[6.0, 16.0, -69.0, 70.0, -24.0, -2.0, 2.0], nu) * l1
                + poly(&[-26.0, 92.0, -125.0, 86.0, -33.0, 6.0], nu) * nu * lnu
                + poly(&[45.0, -124.0, 121.0, -52.0, 5.0, 2.0], nu) * nu,
            -12.0 * q * l1 + poly(&[168.0, -956.0, 2031.0, -2180.0, 1317.0, -446.0, 65.0], nu) * l1
                - 20.0 / 3.0 * nu.powi(9)
                + 30.0 * nu.powi(8)
                - 170.0 / 3.0 * nu.powi(7)
                + poly(&[-1644.0, 6792.0, -9409.0, 6514.0, -2445.0, 390.0], nu) * nu / 6.0,
            228.0 * q_a(15.0 / 38.0, nu)
                + poly(&[-534.0, 1828.0, -2415.0, 1626.0, -591.0, 90.0], nu) * nu,
        ),
        CostMeasure::ScannedElements => (
            poly(&[20.0, -120.0, 260.0, -264.0, 144.0, -40.0, 4.0], nu),
            48.0 * q * (lnu - l1)
                + poly(&[90.0, -308.0, 510.0, -560.0, 408.0, -176.0, 32.0], nu) * l1
                + poly(&[-110.0, 380.0, -506.0, 344.0, -132.0, 24.0], nu) * nu * lnu
                + poly(&[45.0, -40.0, -125.0, 212.0, -136.0, 32.0], nu) * nu,
            -48.0 * q * l1 + poly(&[198.0, -956.0, 1890.0, -2000.0, 1236.0, -440.0, 68.0], nu) * l1
                - 20.0 / 3.0 * nu.powi(9)
                + 30.0 * nu.powi(8)
                - 170.0 / 3.0 * nu.powi(7)
                + poly(&[-456.0, 2352.0, -3641.0, 2756.0, -1146.0, 204.0], nu) * nu / 3.0,
            192.0 * q_a(3.0 / 8.0, nu)
                + poly(&[-450.0, 1540.0, -2034.0, 1368.0, -492.0, 72.0], nu) * nu,
        ),
        CostMeasure::WriteAccesses => {
            unreachable!("no closed form tabulated for write accesses")
        }
    };
    Sqs2Constants {
        // C6 = (3/2) a_F(0); the single-pivot branch has a_F(0) = 1 for
        // both measures. C2 = 2 for both as well.
        c: [c1p / d, 2.0, c3p / d, c4p / d, c5p / d, 1.5],
    }
}

/// Constants `C1..C6` for the piecewise sesquickselect cost function at
/// threshold `nu`. Valid measures: comparisons and scanned elements.
pub fn sqs2_constants(nu: f64, measure: CostMeasure) -> Result<Sqs2Constants> {
    if measure == CostMeasure::WriteAccesses {
        return Err(Error::NoClosedFormCoefficient {
            method: "sqs2",
            t: vec![],
            measure: "WA",
        });
    }
    if !(SQS2_NU_MIN..=SQS2_NU_MAX).contains(&nu) {
        return Err(Error::DegenerateThreshold(nu));
    }
    Ok(sqs2_constants_unchecked(nu, measure))
}

fn f1_branch(x: f64, c: &Sqs2Constants) -> f64 {
    let log1m = if x < 1.0 { (1.0 - x).ln() } else { 0.0 };
    c.c[0] * (x.powi(3) / 6.0 + x.powi(2) / 2.0 - x - (1.0 - x) * log1m)
        + c.c[1] * entropy(x)
        + c.c[2] * x
        + c.c[5]
}

fn f2_branch(x: f64, c: &Sqs2Constants) -> f64 {
    c.c[3] + c.c[4] * entropy(x)
}

/// The piecewise fixed-quantile cost of `nu`-sesquickselect: the
/// single-pivot branch on `[0, nu)` and its mirror on `(1-nu, 1]`, the
/// dual-pivot branch on `[nu, 1-nu]`.
pub fn f_sqs2(alpha: f64, nu: f64, measure: CostMeasure) -> Result<f64> {
    let c = sqs2_constants(nu, measure)?;
    let x = if alpha > 0.5 { 1.0 - alpha } else { alpha };
    Ok(if x < nu {
        f1_branch(x, &c)
    } else {
        f2_branch(x, &c)
    })
}

/// One-sided branch values `(g1, g2)` of the two pieces at `alpha = nu`.
///
/// Diagnostic evaluation: accepts any `nu` in `(5e-4, 1/2]`, slightly wider
/// than the [`sqs2_constants`] guard, which f64 still resolves accurately
/// (the constants lose roughly `4 log10(1/nu)` digits near zero).
pub fn sqs2_branch_values(nu: f64, measure: CostMeasure) -> (f64, f64) {
    let c = sqs2_constants_unchecked(nu, measure);
    (f1_branch(nu, &c), f2_branch(nu, &c))
}

/// The `nu -> 0` limits of the branch values, by a three-point fit with
/// basis `{1, h(nu), nu}` (the leading error terms of both branches).
pub fn sqs2_branch_limits_at_zero(measure: CostMeasure) -> (f64, f64) {
    let pts = [4e-3, 2e-3, 1e-3];
    let rows: Vec<[f64; 3]> = pts.iter().map(|&p| [1.0, entropy(p), p]).collect();
    let extrapolate = |vals: [f64; 3]| -> f64 {
        // solve the 3x3 system by Cramer's rule for the constant term
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let a = [rows[0], rows[1], rows[2]];
        let mut a0 = a;
        for i in 0..3 {
            a0[i][0] = vals[i];
        }
        det3(a0) / det3(a)
    };
    let g: Vec<(f64, f64)> = pts
        .iter()
        .map(|&p| sqs2_branch_values(p, measure))
        .collect();
    (
        extrapolate([g[0].0, g[1].0, g[2].0]),
        extrapolate([g[0].1, g[1].1, g[2].1]),
    )
}

/// Threshold where the two scanned-element branches cross, by bisection of
/// `g1 - g2` on `[0.01, 0.49]` to absolute tolerance 1e-8. Fails when the
/// branch difference has no sign change (as for comparisons, where the
/// single-pivot branch stays below the dual-pivot one).
pub fn find_nu_star(measure: CostMeasure) -> Result<f64> {
    let (lo, hi) = (SQS2_NU_MIN, SQS2_NU_MAX);
    let diff = |nu: f64| {
        let (g1, g2) = sqs2_branch_values(nu, measure);
        g1 - g2
    };
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (diff(a), diff(b));
    if fa.signum() == fb.signum() {
        return Err(Error::NoCrossing {
            lo,
            hi,
            measure: match measure {
                CostMeasure::Comparisons => "C",
                CostMeasure::ScannedElements => "SE",
                CostMeasure::WriteAccesses => "WA",
            },
        });
    }
    while b - a > 1e-8 {
        let mid = 0.5 * (a + b);
        if diff(mid).signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// The scanned-element-optimal sesquickselect threshold, cached.
pub fn nu_star_se() -> f64 {
    static NU: OnceLock<f64> = OnceLock::new();
    *NU.get_or_init(|| find_nu_star(CostMeasure::ScannedElements).expect("SE branches cross"))
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Grand average `integral of f over [0, 1]` by adaptive quadrature to
/// absolute tolerance 1e-7, split at the given interior breakpoints.
pub fn grand_average_of(f: impl Fn(f64) -> f64, breakpoints: &[f64]) -> f64 {
    let mut cuts: Vec<f64> = vec![0.0];
    cuts.extend(breakpoints.iter().copied().filter(|&b| b > 0.0 && b < 1.0));
    cuts.push(1.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol_per = 1e-7 / (cuts.len() - 1) as f64;
    cuts.windows(2)
        .map(|w| integrate(&f, w[0], w[1], tol_per))
        .sum()
}
