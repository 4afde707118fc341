//! `nevdiff`: profiles, bound checks, Picard verdicts and difference-Riccati
//! analysis from the command line, with CSV/JSON/SVG output.
//!
//! Exit codes: 0 success, 2 input error, 3 numeric failure, 4 invariant
//! violation.

mod svg;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use nevdiff::applications::{picard_verdict, riccati_analysis, BoxRegion, RationalInU};
use nevdiff::difference::{
    lemma1_bound, lemma_nd_bound, shift_characteristic_check, smt_ledger,
};
use nevdiff::expr::{parse_complex_list, parse_expr, Expr, MeromorphicMap};
use nevdiff::nevanlinna::{
    estimate_hyper_order, estimate_order, fmt17, fmt_residual, jensen_residual, profile,
};
use nevdiff::quad::QuadConfig;
use nevdiff::Error;

#[derive(Parser)]
#[command(name = "nevdiff", version, about = "Nevanlinna functions, difference-operator bounds and Picard dichotomy checks for meromorphic maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic profile r -> (m, N, T) over a radius grid.
    Profile(CommonArgs),
    /// Check an identity or inequality over the radius grid.
    Verify {
        #[arg(value_enum)]
        kind: VerifyKind,
        #[command(flatten)]
        args: CommonArgs,
    },
    /// Forward-invariance / periodicity / growth dichotomy for three targets.
    Picard(CommonArgs),
    /// Degree analysis of w(z+c) = R(z, w(z)) for a candidate solution w.
    Riccati(CommonArgs),
    /// Growth order and hyper-order estimates from a profile.
    HyperOrder(CommonArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum VerifyKind {
    Jensen,
    Fmt,
    Lemma1,
    #[value(name = "lemma-nd")]
    LemmaNd,
    Smt,
    #[value(name = "shift-T", alias = "shift-t")]
    ShiftT,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args)]
struct CommonArgs {
    /// Function as a single expression; rational input is decomposed.
    #[arg(long)]
    f: Option<String>,
    /// Denominator component (with --f1).
    #[arg(long)]
    f0: Option<String>,
    /// Numerator component (with --f0).
    #[arg(long)]
    f1: Option<String>,
    /// Number of complex variables.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Shift components: a+bi[,a+bi...].
    #[arg(long)]
    c: Option<String>,
    /// Target values: a+bi[,a+bi...].
    #[arg(long)]
    targets: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    rmin: f64,
    #[arg(long, default_value_t = 50.0)]
    rmax: f64,
    #[arg(long, default_value_t = 16)]
    rpoints: usize,
    /// Logarithmic radius spacing instead of linear.
    #[arg(long, default_value_t = false)]
    log_grid: bool,
    /// Exponent for the difference-quotient bounds (default 1/2).
    #[arg(long)]
    delta: Option<f64>,
    /// Seed for all Monte Carlo and probe streams.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Cap on worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Search box re_min,re_max,im_min,im_max for pre-image commands.
    #[arg(long = "box")]
    box_spec: Option<String>,
    /// Numerator coefficients of R(z,u) by power of u, ';'-separated.
    #[arg(long)]
    rnum: Option<String>,
    /// Denominator coefficients of R(z,u) by power of u, ';'-separated.
    #[arg(long)]
    rden: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Profile(a)
        | Command::Picard(a)
        | Command::Riccati(a)
        | Command::HyperOrder(a)
        | Command::Verify { args: a, .. } => a,
    };
    if let Some(threads) = args.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let result = match &cli.command {
        Command::Profile(a) => cmd_profile(a),
        Command::HyperOrder(a) => cmd_hyper_order(a),
        Command::Verify { kind, args } => cmd_verify(*kind, args),
        Command::Picard(a) => cmd_picard(a),
        Command::Riccati(a) => cmd_riccati(a),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("nevdiff: {}: {}", failure.phase, failure.error);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    phase: &'static str,
    error: Error,
    code: u8,
}

/// Classify library errors into the stable exit-code contract.
fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Parse { .. } | Error::InvalidArgument(_) | Error::InvalidMap(_) => 2,
        _ => 3,
    }
}

trait Phase<T> {
    fn phase(self, phase: &'static str) -> Result<T, Failure>;
}

impl<T> Phase<T> for Result<T, Error> {
    fn phase(self, phase: &'static str) -> Result<T, Failure> {
        self.map_err(|error| Failure {
            code: exit_code_for(&error),
            phase,
            error,
        })
    }
}

struct RunSpec {
    map: MeromorphicMap,
    n: usize,
    shift: Vec<Complex64>,
    targets: Vec<Complex64>,
    grid: Vec<f64>,
    delta: f64,
    cfg: QuadConfig,
    seed: u64,
    out: Option<PathBuf>,
    format: Format,
    region: BoxRegion,
    rational: Option<RationalInU>,
}

fn build_spec(args: &CommonArgs) -> Result<RunSpec, Failure> {
    let n = args.n;
    if n == 0 || n > 9 {
        return Err(Error::InvalidArgument("--n must lie in 1..=9".into())).phase("input");
    }
    let map = match (&args.f, &args.f0, &args.f1) {
        (Some(f), None, None) => {
            let e = parse_expr(f).phase("parsing --f")?;
            MeromorphicMap::from_expr(n, &e).phase("building the map")?
        }
        (None, Some(f0), Some(f1)) => {
            let e0 = parse_expr(f0).phase("parsing --f0")?;
            let e1 = parse_expr(f1).phase("parsing --f1")?;
            MeromorphicMap::new(n, e0, e1).phase("building the map")?
        }
        _ => {
            return Err(Error::InvalidArgument(
                "provide either --f, or both --f0 and --f1".into(),
            ))
            .phase("input")
        }
    };
    let shift = match &args.c {
        Some(text) => {
            let v = parse_complex_list(text).phase("parsing --c")?;
            if v.len() == n {
                v
            } else {
                return Err(Error::InvalidArgument(format!(
                    "--c has {} components, expected {n}",
                    v.len()
                )))
                .phase("input");
            }
        }
        None => {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[0] = Complex64::new(1.0, 0.0);
            v
        }
    };
    let targets = match &args.targets {
        Some(text) => parse_complex_list(text).phase("parsing --targets")?,
        None => Vec::new(),
    };
    if !(args.rmin > 0.0 && args.rmin < args.rmax) {
        return Err(Error::InvalidArgument(
            "need 0 < rmin < rmax".into(),
        ))
        .phase("input");
    }
    if args.rpoints < 2 {
        return Err(Error::InvalidArgument("--rpoints must be >= 2".into())).phase("input");
    }
    let grid: Vec<f64> = (0..args.rpoints)
        .map(|k| {
            let t = k as f64 / (args.rpoints - 1) as f64;
            if args.log_grid {
                args.rmin * (args.rmax / args.rmin).powf(t)
            } else {
                args.rmin + (args.rmax - args.rmin) * t
            }
        })
        .collect();
    let mut cfg = QuadConfig::default().with_seed(args.seed);
    if let Some(tol) = args.tol {
        cfg = cfg.with_tol(tol);
    }
    cfg.validate().phase("input")?;
    let region = match &args.box_spec {
        Some(text) => {
            let parts: Vec<f64> = text
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad --box component {p}")))
                })
                .collect::<Result<Vec<_>, _>>()
                .phase("parsing --box")?;
            if parts.len() != 4 {
                return Err(Error::InvalidArgument(
                    "--box needs re_min,re_max,im_min,im_max".into(),
                ))
                .phase("input");
            }
            BoxRegion::new(parts[0], parts[1], parts[2], parts[3]).phase("parsing --box")?
        }
        None => BoxRegion::new(-2.0, 2.0, -2.0, 2.0).unwrap(),
    };
    let rational = match (&args.rnum, &args.rden) {
        (Some(numer), Some(denom)) => {
            let parse_coeffs = |text: &str| -> Result<Vec<Expr>, Error> {
                text.split(';').map(|s| parse_expr(s.trim())).collect()
            };
            let numerator = parse_coeffs(numer).phase("parsing --rnum")?;
            let denominator = parse_coeffs(denom).phase("parsing --rden")?;
            Some(RationalInU::new(n, numerator, denominator).phase("building R(z,u)")?)
        }
        (None, None) => None,
        _ => {
            return Err(Error::InvalidArgument(
                "provide both --rnum and --rden, or neither".into(),
            ))
            .phase("input")
        }
    };
    Ok(RunSpec {
        map,
        n,
        shift,
        targets,
        grid,
        delta: args.delta.unwrap_or(0.5),
        cfg,
        seed: args.seed,
        out: args.out.clone(),
        format: args.format,
        region,
        rational,
    })
}

fn meta(spec: &RunSpec) -> serde_json::Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": spec.seed,
        "config": spec.cfg,
    })
}

fn emit(spec: &RunSpec, text: String) -> Result<ExitCode, Failure> {
    match &spec.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure {
            phase: "writing output",
            error: Error::InvalidArgument(e.to_string()),
            code: 3,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure {
                phase: "writing output",
                error: Error::InvalidArgument(e.to_string()),
                code: 3,
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn json_report<R: Serialize>(spec: &RunSpec, rows: &[R]) -> String {
    let doc = json!({ "meta": meta(spec), "rows": rows });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable report");
    text.push('\n');
    text
}

fn csv_head(spec: &RunSpec, columns: &str) -> String {
    format!(
        "# nevdiff {} seed={}\r\n{columns}\r\n",
        env!("CARGO_PKG_VERSION"),
        spec.seed
    )
}

fn cmd_profile(args: &CommonArgs) -> Result<ExitCode, Failure> {
    let spec = build_spec(args)?;
    let table = profile(&spec.map, &spec.grid, &spec.cfg).phase("profile")?;
    let text = match spec.format {
        Format::Json => {
            let doc = json!({ "meta": meta(&spec), "f": table.f_id, "target": table.target, "rows": table.rows });
            serde_json::to_string_pretty(&doc).unwrap() + "\n"
        }
        Format::Csv => {
            format!(
                "# nevdiff {} seed={}\r\n{}",
                env!("CARGO_PKG_VERSION"),
                spec.seed,
                table.to_csv()
            )
        }
        Format::Svg => {
            let series = vec![svg::Series {
                label: "log10 T vs log10 r".into(),
                points: table
                    .rows
                    .iter()
                    .filter(|row| row.t > 0.0)
                    .map(|row| (row.r.log10(), row.t.log10()))
                    .collect(),
            }];
            svg::line_chart(
                &format!("characteristic of {}", table.f_id),
                "log10 r",
                "log10 T",
                &series,
                &format!("nevdiff {} seed={}", env!("CARGO_PKG_VERSION"), spec.seed),
            )
        }
    };
    emit(&spec, text)
}

fn cmd_hyper_order(args: &CommonArgs) -> Result<ExitCode, Failure> {
    let spec = build_spec(args)?;
    let table = profile(&spec.map, &spec.grid, &spec.cfg).phase("profile")?;
    let order = estimate_order(&table).phase("order fit")?;
    let hyper = estimate_hyper_order(&table);
    let hyper = match hyper {
        Ok(fit) => Some(fit),
        Err(Error::InsufficientGrowth { .. }) => None,
        Err(e) => return Err(e).phase("hyper-order fit"),
    };
    let text = match spec.format {
        Format::Csv => {
            let mut out = csv_head(&spec, "quantity,estimate,fit_residual");
            out.push_str(&format!(
                "order,{},{}\r\n",
                fmt17(order.exponent),
                fmt17(order.fit_residual)
            ));
            if let Some(h) = &hyper {
                out.push_str(&format!(
                    "hyper_order,{},{}\r\n",
                    fmt17(h.exponent),
                    fmt17(h.fit_residual)
                ));
            }
            out
        }
        _ => {
            let doc = json!({
                "meta": meta(&spec),
                "order": order,
                "hyper_order": hyper,
                "rows": table.rows,
            });
            serde_json::to_string_pretty(&doc).unwrap() + "\n"
        }
    };
    emit(&spec, text)
}

#[derive(Serialize)]
struct ResidualRow {
    r: f64,
    target: Option<String>,
    residual: f64,
}

fn cmd_verify(kind: VerifyKind, args: &CommonArgs) -> Result<ExitCode, Failure> {
    let spec = build_spec(args)?;
    let residual_gate = 1e-5;
    match kind {
        VerifyKind::Jensen => {
            let rows: Vec<ResidualRow> = spec
                .grid
                .iter()
                .map(|&r| {
                    jensen_residual(&spec.map, r, &spec.cfg).map(|residual| ResidualRow {
                        r,
                        target: None,
                        residual,
                    })
                })
                .collect::<Result<_, _>>()
                .phase("jensen residual")?;
            finish_residuals(&spec, rows, residual_gate, "jensen")
        }
        VerifyKind::Fmt => {
            if spec.targets.is_empty() {
                return Err(Error::InvalidArgument(
                    "verify fmt needs --targets".into(),
                ))
                .phase("input");
            }
            let mut rows = Vec::new();
            for &a in &spec.targets {
                for &r in &spec.grid {
                    let residual = fmt_residual(&spec.map, a, r, &spec.cfg).phase("fmt residual")?;
                    rows.push(ResidualRow {
                        r,
                        target: Some(format!("{a}")),
                        residual,
                    });
                }
            }
            finish_residuals(&spec, rows, residual_gate, "fmt")
        }
        VerifyKind::Lemma1 => {
            if spec.n != 1 {
                return Err(Error::InvalidArgument(
                    "verify lemma1 is one-dimensional".into(),
                ))
                .phase("input");
            }
            let c = spec.shift[0];
            let rows: Vec<_> = spec
                .grid
                .iter()
                .map(|&r| {
                    let s = 2.0 * r + 2.0 * c.norm();
                    lemma1_bound(&spec.map, r, s, c, spec.delta, &spec.cfg)
                })
                .collect::<Result<_, _>>()
                .phase("lemma1 bound")?;
            finish_bounds(&spec, rows)
        }
        VerifyKind::LemmaNd => {
            let nonzero: Vec<usize> = spec
                .shift
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm() > 0.0)
                .map(|(i, _)| i + 1)
                .collect();
            if nonzero.len() != 1 {
                return Err(Error::InvalidArgument(
                    "verify lemma-nd needs a single-coordinate shift in --c".into(),
                ))
                .phase("input");
            }
            let j = nonzero[0];
            let c_j = spec.shift[j - 1];
            let rows: Vec<_> = spec
                .grid
                .iter()
                .map(|&r| {
                    let big_r = 2.0 * r + 2.0 * c_j.norm();
                    lemma_nd_bound(&spec.map, r, big_r, j, c_j, spec.delta, &spec.cfg, None)
                })
                .collect::<Result<_, _>>()
                .phase("lemma-nd bound")?;
            finish_bounds(&spec, rows)
        }
        VerifyKind::Smt => {
            if spec.targets.len() < 2 {
                return Err(Error::InvalidArgument(
                    "verify smt needs at least two --targets".into(),
                ))
                .phase("input");
            }
            let rows: Vec<_> = spec
                .grid
                .iter()
                .map(|&r| smt_ledger(&spec.map, &spec.shift, &spec.targets, r, &spec.cfg))
                .collect::<Result<_, _>>()
                .phase("smt ledger")?;
            let text = match spec.format {
                Format::Csv => {
                    let mut out = csv_head(&spec, "r,lhs,two_T,n_delta,slack,err");
                    for row in &rows {
                        out.push_str(&format!(
                            "{},{},{},{},{},{}\r\n",
                            fmt17(row.r),
                            fmt17(row.lhs),
                            fmt17(row.two_t),
                            fmt17(row.n_delta),
                            fmt17(row.slack),
                            fmt17(row.err)
                        ));
                    }
                    out
                }
                Format::Svg => {
                    let series = vec![svg::Series {
                        label: "slack vs r".into(),
                        points: rows.iter().map(|row| (row.r, row.slack)).collect(),
                    }];
                    svg::line_chart(
                        "difference second-main-theorem ledger",
                        "r",
                        "slack",
                        &series,
                        &format!("nevdiff {} seed={}", env!("CARGO_PKG_VERSION"), spec.seed),
                    )
                }
                Format::Json => json_report(&spec, &rows),
            };
            emit(&spec, text)
        }
        VerifyKind::ShiftT => {
            let rows =
                shift_characteristic_check(&spec.map, &spec.shift, &spec.grid, &spec.cfg)
                    .phase("shift characteristic")?;
            let violated = rows.iter().any(|row| !row.counting_inequality_ok);
            let text = match spec.format {
                Format::Csv => {
                    let mut out = csv_head(
                        &spec,
                        "r,t_shifted,t_base,ratio,n_shifted,n_enlarged,counting_inequality_ok",
                    );
                    for row in &rows {
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{}\r\n",
                            fmt17(row.r),
                            fmt17(row.t_shifted),
                            fmt17(row.t_base),
                            fmt17(row.ratio),
                            fmt17(row.n_shifted),
                            fmt17(row.n_enlarged),
                            row.counting_inequality_ok
                        ));
                    }
                    out
                }
                Format::Svg => {
                    let series = vec![svg::Series {
                        label: "T(r, f(z+c)) / T(r, f)".into(),
                        points: rows.iter().map(|row| (row.r, row.ratio)).collect(),
                    }];
                    svg::line_chart(
                        "shift invariance of the characteristic",
                        "r",
                        "ratio",
                        &series,
                        &format!("nevdiff {} seed={}", env!("CARGO_PKG_VERSION"), spec.seed),
                    )
                }
                Format::Json => json_report(&spec, &rows),
            };
            let code = emit(&spec, text)?;
            if violated {
                eprintln!("nevdiff: counting inequality N(r, f(z+c)) <= N(r+|c|, f) violated");
                return Ok(ExitCode::from(4));
            }
            Ok(code)
        }
    }
}

fn finish_residuals(
    spec: &RunSpec,
    rows: Vec<ResidualRow>,
    gate: f64,
    label: &str,
) -> Result<ExitCode, Failure> {
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let text = match spec.format {
        Format::Csv => {
            let mut out = csv_head(spec, "r,target,residual");
            for row in &rows {
                out.push_str(&format!(
                    "{},{},{}\r\n",
                    fmt17(row.r),
                    row.target.as_deref().unwrap_or(""),
                    fmt17(row.residual)
                ));
            }
            out
        }
        Format::Svg => {
            let series = vec![svg::Series {
                label: format!("{label} residual vs r"),
                points: rows.iter().map(|row| (row.r, row.residual)).collect(),
            }];
            svg::line_chart(
                &format!("{label} residuals"),
                "r",
                "residual",
                &series,
                &format!("nevdiff {} seed={}", env!("CARGO_PKG_VERSION"), spec.seed),
            )
        }
        Format::Json => json_report(spec, &rows),
    };
    let code = emit(spec, text)?;
    if worst > gate {
        eprintln!("nevdiff: {label} residual {worst:.3e} exceeds {gate:.1e}");
        return Ok(ExitCode::from(4));
    }
    Ok(code)
}

fn finish_bounds(
    spec: &RunSpec,
    rows: Vec<nevdiff::difference::BoundReport>,
) -> Result<ExitCode, Failure> {
    let violated = rows.iter().any(|r| !r.holds);
    let text = match spec.format {
        Format::Csv => {
            let mut out = csv_head(
                spec,
                "r,outer_radius,delta,lhs,rhs,margin,holds,lhs_err,rhs_err",
            );
            for row in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\r\n",
                    fmt17(row.params.r),
                    fmt17(row.params.outer_radius),
                    fmt17(row.params.delta),
                    fmt17(row.lhs),
                    fmt17(row.rhs),
                    fmt17(row.margin),
                    row.holds,
                    fmt17(row.lhs_err),
                    fmt17(row.rhs_err)
                ));
            }
            out
        }
        Format::Svg => {
            let series = vec![svg::Series {
                label: "margin (rhs - lhs) vs r".into(),
                points: rows.iter().map(|row| (row.params.r, row.margin)).collect(),
            }];
            svg::line_chart(
                "difference-quotient bound margins",
                "r",
                "margin",
                &series,
                &format!("nevdiff {} seed={}", env!("CARGO_PKG_VERSION"), spec.seed),
            )
        }
        Format::Json => json_report(spec, &rows),
    };
    let code = emit(spec, text)?;
    if violated {
        eprintln!("nevdiff: bound inequality violated");
        return Ok(ExitCode::from(4));
    }
    Ok(code)
}

fn cmd_picard(args: &CommonArgs) -> Result<ExitCode, Failure> {
    let spec = build_spec(args)?;
    if spec.n != 1 {
        return Err(Error::InvalidArgument(
            "picard verdicts are computed for one-variable maps".into(),
        ))
        .phase("input");
    }
    if spec.targets.len() != 3 {
        return Err(Error::InvalidArgument(
            "picard needs exactly three --targets".into(),
        ))
        .phase("input");
    }
    let targets = [
        nevdiff::nevanlinna::Target::Value(spec.targets[0]),
        nevdiff::nevanlinna::Target::Value(spec.targets[1]),
        nevdiff::nevanlinna::Target::Value(spec.targets[2]),
    ];
    let report = picard_verdict(&spec.map, spec.shift[0], targets, spec.region, &spec.cfg)
        .phase("picard verdict")?;
    print_picard_summary(&report);
    let doc = json!({ "meta": meta(&spec), "report": report });
    emit(&spec, serde_json::to_string_pretty(&doc).unwrap() + "\n")
}

fn print_picard_summary(report: &nevdiff::applications::PicardReport) {
    eprintln!("verdict: {:?}", report.verdict);
    for inv in &report.invariance {
        eprintln!(
            "  target {}+{}i: {} pre-images, {} violations",
            inv.target_re,
            inv.target_im,
            inv.points.len(),
            inv.violations.len()
        );
    }
    eprintln!(
        "  periodic: {} (max deviation {:.3e}); hyper-order {:.3}",
        report.periodicity.is_periodic, report.periodicity.max_dev, report.hyper_order
    );
}

fn cmd_riccati(args: &CommonArgs) -> Result<ExitCode, Failure> {
    let spec = build_spec(args)?;
    let rational = spec
        .rational
        .as_ref()
        .ok_or(Error::InvalidArgument(
            "riccati needs --rnum and --rden".into(),
        ))
        .phase("input")?;
    let report = riccati_analysis(rational, &spec.map, &spec.shift, &spec.grid, &spec.cfg)
        .phase("riccati analysis")?;
    eprintln!(
        "degree {} residual {:.2e} admissible {} verdict {:?}",
        report.degree, report.max_residual, report.admissible, report.verdict
    );
    let doc = json!({ "meta": meta(&spec), "report": report });
    emit(&spec, serde_json::to_string_pretty(&doc).unwrap() + "\n")
}
