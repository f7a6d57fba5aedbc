//! Command-line driver: assumption checks, leading-order approximations, the
//! quadrature oracle, residual-rate experiments, drift lemmas, Gaussian
//! moments, and the built-in problem suite.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use laplace_asym::asymptotics::{approx_integral, gaussian_moment_diag, gaussian_moment_wick, ApproxVariant};
use laplace_asym::critpoint::{verify_assumptions, Flag, ProblemSpec, VerifyOptions};
use laplace_asym::error::{Error, Result};
use laplace_asym::fields::MultiIndex;
use laplace_asym::harness::{run_lemma_suite, run_suite, run_theorem_experiment, DriftOutcome, Verdict};
use laplace_asym::oracle::{reference_integral, QuadratureConfig};
use laplace_asym::probfile::parse_problem;
use laplace_asym::symmat::SymMatrix;

#[derive(Parser)]
#[command(
    name = "laplace-asym",
    version,
    about = "Laplace-type integral asymptotics with perturbed phases: approximations, assumption checks, and rate experiments"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Human, global = true)]
    out: OutFormat,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Human,
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Limit,
    Perturbed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Spacing {
    Geom,
    Linear,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the standing assumptions of a problem file.
    Verify {
        /// Problem description file.
        #[arg(long)]
        problem: PathBuf,
        /// Sample sizes for the perturbed-maximizer records.
        #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096")]
        n: Vec<u64>,
        /// Grid resolution per axis for the global scans.
        #[arg(long, default_value_t = 41)]
        grid_per_axis: usize,
        /// Radius of the excluded ball in the tail-gap check.
        #[arg(long)]
        delta: Option<f64>,
        /// Distance to the boundary below which a maximizer is rejected.
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Leading-order approximation of the integral at one sample size.
    Approx {
        /// Problem description file.
        #[arg(long)]
        problem: PathBuf,
        /// Sample size.
        #[arg(long)]
        n: u64,
        /// Which spectrum feeds the leading coefficient.
        #[arg(long, value_enum, default_value_t = VariantArg::Limit)]
        variant: VariantArg,
    },
    /// Reference value of the integral by adaptive Gauss-Legendre panels.
    Oracle {
        /// Problem description file.
        #[arg(long)]
        problem: PathBuf,
        /// Sample size.
        #[arg(long)]
        n: u64,
        /// Successive-refinement stopping tolerance.
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Gauss-Legendre nodes per panel and axis.
        #[arg(long)]
        base_order: Option<usize>,
    },
    /// Residual-decay experiment against the predicted exponent.
    Rates {
        /// Problem description file.
        #[arg(long)]
        problem: PathBuf,
        /// Smallest sample size.
        #[arg(long, default_value_t = 64)]
        n_min: u64,
        /// Largest sample size.
        #[arg(long, default_value_t = 65536)]
        n_max: u64,
        /// Number of sample sizes between n-min and n-max.
        #[arg(long, default_value_t = 11)]
        points: usize,
        /// How the sample sizes are spaced.
        #[arg(long, value_enum, default_value_t = Spacing::Geom)]
        spacing: Spacing,
    },
    /// Drift rates of maximizer, determinant, and eigenvalues.
    Lemmas {
        /// Problem description file.
        #[arg(long)]
        problem: PathBuf,
        /// Smallest sample size.
        #[arg(long, default_value_t = 64)]
        n_min: u64,
        /// Largest sample size.
        #[arg(long, default_value_t = 65536)]
        n_max: u64,
        /// Number of sample sizes between n-min and n-max.
        #[arg(long, default_value_t = 11)]
        points: usize,
        /// How the sample sizes are spaced.
        #[arg(long, value_enum, default_value_t = Spacing::Geom)]
        spacing: Spacing,
    },
    /// Gaussian moment of y^beta: eigenvalue-product formula vs the pairing
    /// expansion.
    Moments {
        /// Comma-separated multi-index, e.g. 2,0.
        #[arg(long)]
        beta: String,
        /// Comma-separated eigenvalues of a diagonal quadratic form.
        #[arg(long, allow_hyphen_values = true)]
        eigs: Option<String>,
        /// File with a dense symmetric matrix, one row per line.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Run every built-in problem and classify its residual decay.
    Suite,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_problem(path: &PathBuf) -> Result<ProblemSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}

fn make_n_list(n_min: u64, n_max: u64, points: usize, spacing: Spacing) -> Result<Vec<u64>> {
    if n_min == 0 || n_max <= n_min || points < 2 {
        return Err(Error::InvalidArgument(format!(
            "need 0 < n_min < n_max and at least 2 points, got {n_min}..{n_max} x{points}"
        )));
    }
    let mut out = Vec::with_capacity(points);
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let v = match spacing {
            Spacing::Geom => (n_min as f64 * (n_max as f64 / n_min as f64).powf(t)).round(),
            Spacing::Linear => (n_min as f64 + t * (n_max - n_min) as f64).round(),
        } as u64;
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    Ok(out)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidArgument(format!("bad {what} entry {tok:?}")))
        })
        .collect()
}

fn flag_name(flag: Flag) -> &'static str {
    match flag {
        Flag::Pass => "pass",
        Flag::Warn => "warn",
        Flag::Fail => "FAIL",
    }
}

fn json<T: Serialize>(value: &T) -> Result<i32> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    println!("{text}");
    Ok(0)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let code = match cli.cmd {
        Cmd::Verify { problem, n, grid_per_axis, delta, margin } => {
            let prob = load_problem(&problem)?;
            let opts = VerifyOptions { grid_per_axis, margin, delta };
            let report = verify_assumptions(&prob, &n, &opts)?;
            let hard_pass = report.flags.hard_pass();
            match cli.out {
                OutFormat::Json => {
                    json(&report)?;
                }
                OutFormat::Csv => {
                    println!("key,value");
                    println!("c,\"{:?}\"", report.c);
                    println!("h_at_c,{}", report.h_at_c);
                    println!("det,{}", report.det);
                    println!("tail_gap,{}", report.tail_gap);
                    println!("min_abs_det_grid,{}", report.min_abs_det_grid);
                    println!("eigen_floor,{}", report.eigen_floor);
                    for (name, flag) in report.flags.named() {
                        println!("{name},{}", flag_name(flag));
                    }
                }
                OutFormat::Human => {
                    println!("maximizer c = {:?}", report.c);
                    println!("h(c) = {:.12}", report.h_at_c);
                    println!("eigenvalues of D2h(c) = {:?}", report.eigenvalues);
                    println!("det D2h(c) = {:.12}", report.det);
                    println!(
                        "tail gap = {:.6e}   grid min |det| = {:.6e}   eigen floor = {:.6e}",
                        report.tail_gap, report.min_abs_det_grid, report.eigen_floor
                    );
                    println!("records:");
                    for rec in &report.records {
                        println!(
                            "  n = {:>8}  c_n = {:?}  |grad| = {:.3e}  det = {:.9}",
                            rec.n, rec.c_n, rec.grad_norm, rec.det
                        );
                    }
                    println!("assumption flags:");
                    for (name, flag) in report.flags.named() {
                        println!("  {name:<24} {}", flag_name(flag));
                    }
                    println!("overall: {}", if hard_pass { "PASS" } else { "FAIL" });
                }
            }
            if hard_pass {
                0
            } else {
                1
            }
        }
        Cmd::Approx { problem, n, variant } => {
            let prob = load_problem(&problem)?;
            let report = verify_assumptions(&prob, &[n], &VerifyOptions::default())?;
            let variant = match variant {
                VariantArg::Limit => ApproxVariant::Limit,
                VariantArg::Perturbed => ApproxVariant::Perturbed,
            };
            let value = approx_integral(&prob, &report, n, variant)?;
            match cli.out {
                OutFormat::Json => {
                    json(&value)?;
                }
                OutFormat::Csv => {
                    println!("log_scale,mantissa");
                    println!("{},{}", value.log_scale, value.mantissa);
                }
                OutFormat::Human => {
                    println!("I_{n} ~ exp({:.12}) * {:.12e}", value.log_scale, value.mantissa);
                    if value.log_scale.abs() < 700.0 {
                        println!("     = {:.12e}", value.collapse());
                    }
                }
            }
            0
        }
        Cmd::Oracle { problem, n, rel_tol, base_order } => {
            let prob = load_problem(&problem)?;
            let mut cfg = QuadratureConfig::default();
            if let Some(t) = rel_tol {
                cfg.rel_tol = t;
            }
            if let Some(o) = base_order {
                cfg.base_order = o;
            }
            let report = verify_assumptions(&prob, &[n], &VerifyOptions::default())?;
            let center = &report.records[0].c_n;
            let value = reference_integral(&prob, n, center, &cfg)?;
            match cli.out {
                OutFormat::Json => {
                    json(&value)?;
                }
                OutFormat::Csv => {
                    println!("log_scale,mantissa,est_error,converged,nodes_used,levels_used");
                    println!(
                        "{},{},{},{},{},{}",
                        value.log_scale,
                        value.mantissa,
                        value.est_error,
                        value.converged,
                        value.nodes_used,
                        value.levels_used
                    );
                }
                OutFormat::Human => {
                    println!("I_{n} = exp({:.12}) * {:.12e}", value.log_scale, value.mantissa);
                    if value.log_scale.abs() < 700.0 {
                        println!("    = {:.12e}", value.mantissa * value.log_scale.exp());
                    }
                    println!(
                        "est rel error {:.3e}  converged {}  nodes {}  levels {}",
                        value.est_error, value.converged, value.nodes_used, value.levels_used
                    );
                }
            }
            if value.converged {
                0
            } else {
                1
            }
        }
        Cmd::Rates { problem, n_min, n_max, points, spacing } => {
            let prob = load_problem(&problem)?;
            let n_list = make_n_list(n_min, n_max, points, spacing)?;
            let exp = run_theorem_experiment(&prob, &n_list, &QuadratureConfig::default())?;
            match cli.out {
                OutFormat::Json => {
                    json(&exp)?;
                }
                OutFormat::Csv => {
                    println!("n,oracle_mantissa,approx_mantissa,residual,log_scale");
                    for r in &exp.rows {
                        println!(
                            "{},{},{},{},{}",
                            r.n, r.oracle_mantissa, r.approx_mantissa, r.residual, r.log_scale
                        );
                    }
                    match &exp.fit {
                        Some(f) => println!(
                            "# slope={} intercept={} r_squared={} q={} verdict={}",
                            f.slope, f.intercept, f.r_squared, exp.predicted_q, exp.verdict
                        ),
                        None => println!("# q={} verdict={}", exp.predicted_q, exp.verdict),
                    }
                }
                OutFormat::Human => {
                    println!(
                        "{:>8}  {:>24}  {:>24}  {:>13}  {:>14}",
                        "n", "oracle mantissa", "approx mantissa", "residual", "log scale"
                    );
                    for r in &exp.rows {
                        println!(
                            "{:>8}  {:>24.16e}  {:>24.16e}  {:>13.6e}  {:>14.6}",
                            r.n, r.oracle_mantissa, r.approx_mantissa, r.residual, r.log_scale
                        );
                    }
                    println!("predicted residual exponent q = {:.4}", exp.predicted_q);
                    match &exp.fit {
                        Some(f) => println!(
                            "fitted slope = {:.4} (r^2 = {:.6}, {} points, {} dropped)",
                            f.slope,
                            f.r_squared,
                            f.n_used.len(),
                            f.dropped
                        ),
                        None => println!("residuals below noise floor; no measurable rate"),
                    }
                    println!("verdict: {}", exp.verdict);
                }
            }
            if exp.verdict == Verdict::Violated {
                1
            } else {
                0
            }
        }
        Cmd::Lemmas { problem, n_min, n_max, points, spacing } => {
            let prob = load_problem(&problem)?;
            let n_list = make_n_list(n_min, n_max, points, spacing)?;
            let suite = run_lemma_suite(&prob, &n_list)?;
            let describe = |o: &DriftOutcome| match o.fit.slope() {
                Some(slope) => format!("slope {slope:.4} -> {}", o.verdict),
                None => format!("{}", o.verdict),
            };
            match cli.out {
                OutFormat::Json => {
                    json(&suite)?;
                }
                OutFormat::Csv => {
                    let d = suite.rows.first().map_or(0, |r| r.eigen_drift.len());
                    let eig_cols: Vec<String> =
                        (0..d).map(|i| format!("eigen_drift_{i}")).collect();
                    println!("n,cn_dist,det_drift,{}", eig_cols.join(","));
                    for r in &suite.rows {
                        let eigs: Vec<String> =
                            r.eigen_drift.iter().map(|v| v.to_string()).collect();
                        println!("{},{},{},{}", r.n, r.cn_dist, r.det_drift, eigs.join(","));
                    }
                    println!("# p={} maximizer={}", suite.p, describe(&suite.maximizer));
                    println!("# determinant={}", describe(&suite.determinant));
                    for (i, o) in suite.eigenvalues.iter().enumerate() {
                        println!("# eigenvalue_{i}={}", describe(o));
                    }
                }
                OutFormat::Human => {
                    println!("{:>8}  {:>13}  {:>13}  eigen drifts", "n", "|c_n - c|", "det drift");
                    for r in &suite.rows {
                        let eigs: Vec<String> =
                            r.eigen_drift.iter().map(|v| format!("{v:.6e}")).collect();
                        println!(
                            "{:>8}  {:>13.6e}  {:>13.6e}  [{}]",
                            r.n,
                            r.cn_dist,
                            r.det_drift,
                            eigs.join(", ")
                        );
                    }
                    println!("decay target p = {}", suite.p);
                    println!("maximizer drift:   {}", describe(&suite.maximizer));
                    println!("determinant drift: {}", describe(&suite.determinant));
                    for (i, o) in suite.eigenvalues.iter().enumerate() {
                        println!("eigenvalue {i} drift: {}", describe(o));
                    }
                }
            }
            let verdicts = std::iter::once(&suite.maximizer)
                .chain(std::iter::once(&suite.determinant))
                .chain(suite.eigenvalues.iter());
            if verdicts.into_iter().any(|o| o.verdict == Verdict::Violated) {
                1
            } else {
                0
            }
        }
        Cmd::Moments { beta, eigs, matrix } => {
            let beta = MultiIndex::new(parse_list::<u32>(&beta, "beta")?);
            let a = match (eigs, matrix) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidArgument(
                        "give either --eigs or --matrix, not both".into(),
                    ))
                }
                (Some(e), None) => SymMatrix::diag(&parse_list::<f64>(&e, "eigenvalue")?)?,
                (None, Some(path)) => {
                    let text = fs::read_to_string(&path).map_err(|e| {
                        Error::InvalidArgument(format!("cannot read {}: {e}", path.display()))
                    })?;
                    let rows: Vec<Vec<f64>> = text
                        .lines()
                        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
                        .map(|l| parse_list::<f64>(&l.split_whitespace().collect::<Vec<_>>().join(","), "matrix"))
                        .collect::<Result<_>>()?;
                    SymMatrix::from_rows(&rows)?
                }
                (None, None) => {
                    return Err(Error::InvalidArgument("need --eigs or --matrix".into()))
                }
            };
            let spectrum = a.jacobi_eigen()?.eigenvalues;
            let formula = gaussian_moment_diag(&spectrum, &beta)?;
            let pairing = gaussian_moment_wick(&a, &beta)?;
            let abs_diff = (formula - pairing).abs();
            let rel_diff = abs_diff / pairing.abs().max(f64::MIN_POSITIVE);
            #[derive(Serialize)]
            struct MomentOut {
                spectrum: Vec<f64>,
                eigenvalue_formula: f64,
                pairing_expansion: f64,
                abs_diff: f64,
                rel_diff: f64,
            }
            let out = MomentOut {
                spectrum,
                eigenvalue_formula: formula,
                pairing_expansion: pairing,
                abs_diff,
                rel_diff,
            };
            match cli.out {
                OutFormat::Json => {
                    json(&out)?;
                }
                OutFormat::Csv => {
                    println!("eigenvalue_formula,pairing_expansion,abs_diff,rel_diff");
                    println!(
                        "{},{},{},{}",
                        out.eigenvalue_formula, out.pairing_expansion, out.abs_diff, out.rel_diff
                    );
                }
                OutFormat::Human => {
                    println!("spectrum: {:?}", out.spectrum);
                    println!("eigenvalue-product formula: {:.15e}", out.eigenvalue_formula);
                    println!("pairing expansion:          {:.15e}", out.pairing_expansion);
                    println!("difference: {:.3e} abs, {:.3e} rel", out.abs_diff, out.rel_diff);
                }
            }
            0
        }
        Cmd::Suite => {
            let outcomes = run_suite(&QuadratureConfig::default())?;
            let all_pass = outcomes.iter().all(|o| o.pass);
            match cli.out {
                OutFormat::Json => {
                    json(&outcomes)?;
                }
                OutFormat::Csv => {
                    println!("name,predicted_q,slope,r_squared,verdict,pass");
                    for o in &outcomes {
                        println!(
                            "{},{},{},{},{},{}",
                            o.name,
                            o.predicted_q,
                            o.slope.map_or(String::new(), |v| v.to_string()),
                            o.r_squared.map_or(String::new(), |v| v.to_string()),
                            o.verdict,
                            o.pass
                        );
                    }
                }
                OutFormat::Human => {
                    for o in &outcomes {
                        let slope = o
                            .slope
                            .map_or("      --".to_string(), |v| format!("{v:>8.4}"));
                        println!(
                            "{:<22} q = {:<6.4} slope = {}  verdict = {:<15} {}",
                            o.name,
                            o.predicted_q,
                            slope,
                            o.verdict.to_string(),
                            if o.pass { "PASS" } else { "FAIL" }
                        );
                    }
                }
            }
            if all_pass {
                0
            } else {
                1
            }
        }
    };
    Ok(ExitCode::from(code as u8))
}
