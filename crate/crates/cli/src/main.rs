use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use robin_tri::equilateral;
use robin_tri::fem::{self, ConvergenceOptions};
use robin_tri::geometry::equilateral_half_base;
use robin_tri::scan::{self, Range, ScanConfig};
use robin_tri::{Error, TriangleParams};

const DEFAULT_AREA: f64 = 0.577_350_269_189_625_8;

#[derive(Parser)]
#[command(name = "robin-tri", version, about = "Robin eigenvalues of triangles with negative boundary coupling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form ground state of the equilateral triangle.
    Equilateral {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_AREA)]
        area: f64,
    },
    /// FEM lowest eigenvalue of one triangle.
    Eigen {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        /// Half-base; defaults to the equilateral value for the area.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_AREA)]
        area: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Grid scan driven by a `key = value` config file.
    Scan {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        anchor_left: bool,
    },
    /// Verification suites.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Coupling; repeat for several values in the local suite.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_AREA)]
        area: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Local,
    Perimeter,
    Monotone,
    Conjecture,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Domain(_) => Failure::Usage(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Equilateral { alpha, area } => {
            let sol = equilateral::solve_equilateral(alpha, area)?;
            println!("t = {:.15e}", sol.t);
            println!("K = {:.15e}", sol.k);
            println!("L = {:.15e}", sol.l);
            println!("M = {:.15e}", sol.m);
            println!("lambda0 = {:.15e}", sol.lambda0);
            Ok(())
        }
        Command::Eigen { a, c, area, alpha, tol } => {
            if !(alpha < 0.0) {
                return Err(Failure::Usage("alpha must be negative".into()));
            }
            let c = c.unwrap_or_else(|| equilateral_half_base(area));
            let tri = TriangleParams::new(a, c, area)?.geometry();
            let opts = ConvergenceOptions {
                rel_tol: tol,
                ..ConvergenceOptions::default()
            };
            let r = fem::eigenvalue_converged_with(&tri, alpha, &opts)?;
            println!("lambda1 = {:.15e}", r.lambda1);
            println!("error_estimate = {:.3e}", r.residual);
            println!("level = {}", r.level);
            if r.warning {
                println!("warning = level cap reached before tolerance");
            }
            Ok(())
        }
        Command::Scan {
            config,
            mode,
            out,
            svg,
            workers,
            anchor_left,
        } => {
            let mut cfg = match config {
                Some(path) => ScanConfig::from_file(&path).map_err(|e| Failure::Usage(e.to_string()))?,
                None => ScanConfig::default(),
            };
            if let Some(m) = mode {
                cfg.mode = m.parse()?;
            }
            if out.is_some() {
                cfg.output_path = out;
            }
            cfg.emit_svg |= svg;
            cfg.anchor_left |= anchor_left;
            if workers.is_some() {
                cfg.workers = workers;
            }
            cfg.validate()?;
            let result = scan::run_scan(&cfg)?;
            if cfg.output_path.is_none() {
                print!("{}", scan::to_csv(&result));
            }
            let certified = result.rows.iter().filter(|r| r.verdict == Some(true)).count();
            eprintln!(
                "{}: {} cells, {} verdict true, {} failed",
                result.mode,
                result.rows.len(),
                certified,
                result.failed_cells()
            );
            Ok(())
        }
        Command::Verify { suite, alpha, area } => verify(suite, &alpha, area),
    }
}

fn single_alpha(alphas: &[f64], default: f64) -> Result<f64, Failure> {
    match alphas {
        [] => Ok(default),
        [a] => Ok(*a),
        _ => Err(Failure::Usage("this suite takes one --alpha".into())),
    }
}

fn verify(suite: Suite, alphas: &[f64], area: f64) -> Result<(), Failure> {
    if alphas.iter().any(|&a| !(a < 0.0)) {
        return Err(Failure::Usage("alpha must be negative".into()));
    }
    let opts = ConvergenceOptions::default();
    let c0 = equilateral_half_base(area);
    let mut failures = 0usize;
    match suite {
        Suite::Local => {
            let list = if alphas.is_empty() { vec![-0.1, -0.5, -0.9] } else { alphas.to_vec() };
            println!("alpha hess_aa bound_aa hess_cc bound_cc hess_ac C claim");
            for r in scan::verify_local(&list, area)? {
                let d = r.derivatives;
                let claim = match r.claim() {
                    Some(true) => "holds",
                    Some(false) => {
                        failures += 1;
                        "FAILS"
                    }
                    None => "none",
                };
                println!(
                    "{} {:.6e} {:.6e} {:.6e} {:.6e} {:.3e} {:.6e} {claim}",
                    r.alpha, d.hess_aa, r.bounds.bound_aa, d.hess_cc, r.bounds.bound_cc, d.hess_ac, r.quadratic_c
                );
            }
        }
        Suite::Perimeter => {
            let alpha = single_alpha(alphas, -0.5)?;
            let a_values = Range::new(-0.1, 0.1, 3).values();
            let c_values = Range::new(0.9 * c0, 1.1 * c0, 3).values();
            println!("a c gamma margin_shape margin_dilation chain");
            for cell in scan::verify_perimeter_variant(alpha, area, &a_values, &c_values, &opts) {
                let k = cell?;
                let equilateral = k.a == 0.0 && (k.c - c0).abs() < 1e-12 * c0;
                let verdict = if equilateral {
                    "reference"
                } else if k.chain_holds() {
                    "holds"
                } else {
                    failures += 1;
                    "FAILS"
                };
                println!(
                    "{} {:.6} {:.9} {:.6e} {:.6e} {verdict}",
                    k.a,
                    k.c,
                    k.gamma,
                    k.margin_shape(),
                    k.margin_dilation()
                );
            }
        }
        Suite::Monotone => {
            let alpha = single_alpha(alphas, -1.0)?;
            let cells = scan::monotonicity(alpha, &[0.5, 1.0, 2.0], true, &opts)?;
            println!("S lambda0 lambda_fem");
            for k in &cells {
                let (l, _) = k.lambda_fem.unwrap_or((f64::NAN, f64::NAN));
                println!("{} {:.12e} {:.12e}", k.area, k.lambda0, l);
            }
            if !scan::is_increasing(&cells) {
                failures += 1;
                println!("ordering FAILS");
            } else {
                println!("ordering holds");
            }
        }
        Suite::Conjecture => {
            let alpha = single_alpha(alphas, -1.0)?;
            println!("a c lambda_fem lambda0 margin verdict");
            for c in Range::new(0.6 * c0, 1.6 * c0, 5).values() {
                for a in Range::new(0.0, 2.0, 5).values() {
                    let k = scan::conjecture_cell(alpha, a, c, area, &opts)?;
                    let verdict = if k.holds() {
                        "holds"
                    } else {
                        failures += 1;
                        "FAILS"
                    };
                    println!(
                        "{a} {c:.6} {:.9e} {:.9e} {:.3e} {verdict}",
                        k.lambda_fem,
                        k.lambda0,
                        k.lambda_fem - k.lambda0
                    );
                }
            }
        }
    }
    if failures > 0 {
        return Err(Failure::Numeric(format!("{failures} check(s) failed")));
    }
    Ok(())
}
