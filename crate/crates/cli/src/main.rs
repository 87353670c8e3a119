//! Command-line front end: selection runs, Monte-Carlo benchmarks, closed
//! forms, the integral-equation solver, and the published-table reports.
//!
//! Exit status: 0 on success, 1 on numerical/diagnostic failure (solver
//! non-convergence, missing crossing), 2 on usage errors.

use clap::{Parser, Subcommand, ValueEnum};
use qslab_core::solver::{self, CostCoefficients, GridFunction, PolicyConfig};
use qslab_core::{analytic, bench, AlgorithmPreset, CostMeasure, Error, RankSpec};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qslab",
    version,
    about = "Instrumented multiway Quickselect laboratory"
)]
struct Cli {
    /// Size of the rayon thread pool (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    C,
    Se,
}

impl From<MeasureArg> for CostMeasure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::C => CostMeasure::Comparisons,
            MeasureArg::Se => CostMeasure::ScannedElements,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Table1,
    Table2,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveArg {
    Cqs,
    Yqs,
    Sqs2,
}

#[derive(Subcommand)]
enum Command {
    /// Run one selection and print the key and cost tally
    Select {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        n: usize,
        #[arg(long, conflicts_with_all = ["alpha", "random_rank"])]
        rank: Option<usize>,
        #[arg(long, conflicts_with = "random_rank")]
        alpha: Option<f64>,
        #[arg(long)]
        random_rank: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Aggregate many selection runs into cost statistics (CSV)
    Bench {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        n: usize,
        #[arg(long, conflicts_with_all = ["alpha", "random_rank"])]
        rank: Option<usize>,
        #[arg(long, conflicts_with = "random_rank")]
        alpha: Option<f64>,
        #[arg(long)]
        random_rank: bool,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark a preset across a grid of relative ranks (CSV)
    Sweep {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the cost integral equation for a preset or a policy config
    Solve {
        #[arg(long, conflicts_with = "policy")]
        preset: Option<String>,
        /// JSON policy config: {breakpoints, segments: [{method, t, a?}]}
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MeasureArg::Se)]
        measure: MeasureArg,
        #[arg(long, default_value_t = 400)]
        grid: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 400)]
        max_iter: usize,
        /// n for empirical coefficient estimation when no closed form exists
        #[arg(long, default_value_t = 1_000_000)]
        estimate_n: usize,
        #[arg(long, default_value_t = 1000)]
        estimate_trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cross-check the solved curve against the closed form, when known
        #[arg(long)]
        verify: bool,
    },
    /// Evaluate the closed-form cost curves (CSV)
    Analytic {
        #[arg(long, value_enum)]
        what: CurveArg,
        #[arg(long, value_enum, default_value_t = MeasureArg::Se)]
        measure: MeasureArg,
        /// Threshold for the sesquickselect curve (default: optimal)
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long, default_value_t = 400)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce a published cost table: fixture vs analytic vs empirical
    Table {
        #[arg(long, value_enum)]
        which: TableArg,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Locate the optimal sesquickselect threshold
    NuStar {
        #[arg(long, value_enum, default_value_t = MeasureArg::Se)]
        measure: MeasureArg,
    },
}

fn rank_spec(
    rank: Option<usize>,
    alpha: Option<f64>,
    random_rank: bool,
) -> anyhow::Result<RankSpec> {
    match (rank, alpha, random_rank) {
        (Some(m), None, false) => Ok(RankSpec::Fixed(m)),
        (None, Some(a), false) => Ok(RankSpec::FixedQuantile(a)),
        (None, None, true) => Ok(RankSpec::RandomRank),
        (None, None, false) => anyhow::bail!("one of --rank, --alpha, --random-rank is required"),
        _ => anyhow::bail!("--rank, --alpha, --random-rank are mutually exclusive"),
    }
}

fn spec_label(spec: &RankSpec) -> String {
    match spec {
        RankSpec::Fixed(m) => format!("rank={m}"),
        RankSpec::FixedQuantile(a) => format!("alpha={a}"),
        RankSpec::RandomRank => "random-rank".into(),
    }
}

fn write_csv(out: Option<&PathBuf>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, content)?;
            println!("# wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn closed_form_for(name: &str, measure: CostMeasure) -> Option<Box<dyn Fn(f64) -> f64>> {
    match (name, measure) {
        ("cqs", _) => Some(Box::new(|x| analytic::f_cqs(x, 1.0))),
        ("yqs", CostMeasure::Comparisons) => Some(Box::new(|x| analytic::f_yqs(x, 19.0 / 12.0))),
        ("yqs", CostMeasure::ScannedElements) => Some(Box::new(|x| analytic::f_yqs(x, 4.0 / 3.0))),
        (n, m) if n.starts_with("sqs2") => {
            let nu = n
                .split_once(':')
                .map(|(_, v)| v.parse().ok())
                .unwrap_or(Some(analytic::nu_star_se()))?;
            analytic::f_sqs2(0.3, nu, m).ok()?;
            Some(Box::new(move |x| analytic::f_sqs2(x, nu, m).unwrap()))
        }
        _ => None,
    }
}

fn curve_csv(f: &GridFunction) -> String {
    let mut s = String::from("alpha,value\n");
    for i in 0..=f.resolution() {
        s.push_str(&format!("{},{}\n", f.node(i), f.values()[i]));
    }
    s
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    match cli.command {
        Command::Select {
            preset,
            n,
            rank,
            alpha,
            random_rank,
            seed,
        } => {
            let preset = AlgorithmPreset::parse(&preset)?;
            let spec = rank_spec(rank, alpha, random_rank)?;
            println!(
                "# config: select preset={} n={n} {} seed={seed}",
                preset.name,
                spec_label(&spec)
            );
            let mut data = qslab_core::make_input(n, seed)?;
            let mut rng = qslab_core::rng_from_seed(seed ^ 0x005E_1EC7);
            let res = qslab_core::quickselect(&mut data, &spec, &preset, &mut rng)?;
            println!("key={}", res.key);
            println!(
                "comparisons={} scanned_elements={} write_accesses={} depth={}",
                res.tally.comparisons,
                res.tally.scanned_elements,
                res.tally.write_accesses,
                res.depth
            );
        }
        Command::Bench {
            preset,
            n,
            rank,
            alpha,
            random_rank,
            trials,
            seed,
            out,
        } => {
            let preset = AlgorithmPreset::parse(&preset)?;
            let spec = rank_spec(rank, alpha, random_rank)?;
            println!(
                "# config: bench preset={} n={n} {} trials={trials} seed={seed}",
                preset.name,
                spec_label(&spec)
            );
            let stats = bench::run_trials(&preset, n, &spec, trials, seed)?;
            let csv = format!("{}\n{}\n", bench::CSV_HEADER, bench::csv_row(&stats));
            write_csv(out.as_ref(), &csv)?;
        }
        Command::Sweep {
            preset,
            n,
            grid,
            trials,
            seed,
            out,
        } => {
            let preset = AlgorithmPreset::parse(&preset)?;
            if grid < 2 {
                anyhow::bail!("--grid must be at least 2");
            }
            println!(
                "# config: sweep preset={} n={n} grid={grid} trials={trials} seed={seed}",
                preset.name
            );
            let rows = bench::sweep_alpha(&preset, n, grid, trials, seed)?;
            let mut csv = String::from(bench::CSV_HEADER);
            csv.push('\n');
            for row in &rows {
                csv.push_str(&bench::csv_row(row));
                csv.push('\n');
            }
            write_csv(out.as_ref(), &csv)?;
        }
        Command::Solve {
            preset,
            policy,
            measure,
            grid,
            tol,
            max_iter,
            estimate_n,
            estimate_trials,
            seed,
            out,
            verify,
        } => {
            let measure: CostMeasure = measure.into();
            let (config, label) = match (&preset, &policy) {
                (Some(name), None) => {
                    let p = AlgorithmPreset::parse(name)?;
                    let pol = p.policy().ok_or_else(|| {
                        anyhow::anyhow!("preset {} has no policy form to solve", p.name)
                    })?;
                    (PolicyConfig::from_policy(pol), p.name.clone())
                }
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(path)?;
                    (PolicyConfig::from_json(&text)?, path.display().to_string())
                }
                _ => anyhow::bail!("exactly one of --preset or --policy is required"),
            };
            println!(
                "# config: solve policy={label} measure={} grid={grid} tol={tol} \
                 max-iter={max_iter} estimate-n={estimate_n} estimate-trials={estimate_trials} seed={seed}",
                measure.label()
            );
            let pol = config.to_policy()?;
            let coeffs: CostCoefficients =
                config.resolve_coefficients(measure, |method, scheme| {
                    let est = solver::estimate_a_empirical(
                        method,
                        scheme,
                        measure,
                        estimate_n,
                        estimate_trials,
                        seed,
                    )?;
                    println!(
                        "# estimated a_{} for {} t={:?}: {:.6} (se {:.2e})",
                        measure.label(),
                        method.label(),
                        scheme.t(),
                        est.mean,
                        est.std_error
                    );
                    Ok(est.mean)
                })?;
            println!(
                "# coefficients: {:?}",
                coeffs
                    .0
                    .iter()
                    .map(|c| (c * 1e6).round() / 1e6)
                    .collect::<Vec<_>>()
            );
            let sol = solver::solve_fixed_point(&pol, &coeffs, grid, tol, max_iter)?;
            println!(
                "# converged in {} sweeps, residual {:.3e}",
                sol.sweeps, sol.residual
            );
            println!(
                "f(0)={:.6} f(1/2)={:.6} f(1)={:.6} grand-average={:.6}",
                sol.f.eval(0.0),
                sol.f.eval(0.5),
                sol.f.eval(1.0),
                sol.f.grand_average()
            );
            if verify {
                match closed_form_for(&label, measure) {
                    Some(exact) => {
                        let reference = GridFunction::from_fn(grid, &exact);
                        let sup = sol.f.sup_distance(&reference);
                        let tol_doc = 2e-3;
                        println!("# verify: sup-distance to closed form = {sup:.3e} (tolerance {tol_doc:.1e})");
                        if sup > tol_doc {
                            return Err(NumericalFailure(format!(
                                "solver/closed-form mismatch: {sup:.3e} > {tol_doc:.1e}"
                            ))
                            .into());
                        }
                    }
                    None => anyhow::bail!("--verify: no closed form known for {label}"),
                }
            }
            if let Some(path) = out {
                solver::curve_export(&sol.f, &path)?;
                println!("# wrote {}", path.display());
            }
        }
        Command::Analytic {
            what,
            measure,
            nu,
            grid,
            out,
        } => {
            let measure: CostMeasure = measure.into();
            let nu = nu.unwrap_or_else(analytic::nu_star_se);
            let name = match what {
                CurveArg::Cqs => "cqs".to_string(),
                CurveArg::Yqs => "yqs".to_string(),
                CurveArg::Sqs2 => format!("sqs2:{nu}"),
            };
            println!(
                "# config: analytic what={name} measure={} grid={grid}",
                measure.label()
            );
            let f = closed_form_for(&name, measure)
                .ok_or_else(|| anyhow::anyhow!("no closed form for {name}/{}", measure.label()))?;
            let g = GridFunction::from_fn(grid, &f);
            write_csv(out.as_ref(), &curve_csv(&g))?;
        }
        Command::Table {
            which,
            n,
            trials,
            seed,
        } => {
            let kind = match which {
                TableArg::Table1 => bench::TableKind::Table1,
                TableArg::Table2 => bench::TableKind::Table2,
            };
            println!(
                "# config: table which={} n={n} trials={trials} seed={seed}",
                match which {
                    TableArg::Table1 => "table1",
                    TableArg::Table2 => "table2",
                }
            );
            let lines = bench::table_report(kind, n, trials, seed)?;
            let mut outw = std::io::stdout().lock();
            writeln!(
                outw,
                "{:<22} {:>10} {:>10} {:>10} {:>8}",
                "cell", "published", "analytic", "empirical", "rel-err"
            )?;
            for line in lines {
                let fmt_opt = |v: Option<f64>| match v {
                    Some(x) => format!("{x:.4}"),
                    None => "-".into(),
                };
                let rel = match line.rel_err_empirical() {
                    Some(e) => format!("{:.2}%", e * 100.0),
                    None => "fixture".into(),
                };
                writeln!(
                    outw,
                    "{:<22} {:>10.4} {:>10} {:>10} {:>8}",
                    line.label,
                    line.published,
                    fmt_opt(line.analytic),
                    fmt_opt(line.empirical),
                    rel
                )?;
            }
        }
        Command::NuStar { measure } => {
            let measure: CostMeasure = measure.into();
            println!("# config: nu-star measure={}", measure.label());
            let (g1_0, g2_0) = analytic::sqs2_branch_limits_at_zero(measure);
            let (g1_h, g2_h) = analytic::sqs2_branch_values(0.5, measure);
            println!("branch limits at 0: g1={g1_0:.6} g2={g2_0:.6}");
            println!("branch values at 1/2: g1={g1_h:.6} g2={g2_h:.6}");
            let nu = analytic::find_nu_star(measure)?;
            println!("nu* = {nu:.6}");
        }
    }
    Ok(())
}

/// A check that ran but failed numerically (exit status 1, not a usage error).
#[derive(Debug)]
struct NumericalFailure(String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for NumericalFailure {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let numerical = err.is::<NumericalFailure>()
                || err.downcast_ref::<Error>().is_some_and(|e| {
                    matches!(
                        e,
                        Error::SolverNoConvergence { .. }
                            | Error::NoCrossing { .. }
                            | Error::NonFiniteOperator { .. }
                    )
                });
            if numerical {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
