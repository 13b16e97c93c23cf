//! Command-line front end: generate model problems, solve them with the
//! preconditioner roster, and certify spectral properties.
//!
//! Every run writes an optional JSON report combining the effective
//! configuration with the solver or certification output, so comparisons can
//! be scripted. Identical configurations produce byte-identical reports
//! except for the timing fields.
//!
//! Exit codes: 0 success/convergence, 1 usage or IO errors, 2 ran out of
//! iterations, 3 numerical breakdown (indefiniteness, factorization
//! breakdown, failed multigrid setup).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use copre::amg::{self, AmgParams, FinestSmoother, HierarchyStats};
use copre::combined::{CombineMode, CombinedPreconditioner};
use copre::ilu::{FactorVariant, IncompleteFactorization};
use copre::krylov::{pcg, SolveConfig, SolveReport};
use copre::operator::{IdentityOperator, LinearOperator};
use copre::problems::{generate, CoefficientField, ProblemSpec, Spacing};
use copre::smoothers::{Smoother, SmootherKind};
use copre::spectral::{
    certify_combined, find_wrong_order_witness, SpectralCertificate, WrongOrderWitness,
};
use copre::sparse::io::{read_matrix_market, read_vector, write_matrix_market, write_vector};
use copre::sparse::SparseMatrix;
use copre::Error;

#[derive(Parser)]
#[command(name = "copre", version, about = "Sparse SPD solver toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a model diffusion problem and write it to disk.
    Generate(GenerateArgs),
    /// Solve a linear system with PCG and a chosen preconditioner.
    Solve(SolveArgs),
    /// Certify spectral properties of a smoother/preconditioner combination.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Spatial dimension (1, 2, or 3).
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Cells per axis: a single count or one per axis, comma-separated.
    #[arg(long, default_value = "16")]
    cells: String,
    /// Coefficient field: constant:V, checkerboard:LOW,HIGH, or lognormal:SIGMA.
    #[arg(long, default_value = "constant:1")]
    field: String,
    /// Seed for random coefficient fields.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reaction coefficient added to the diagonal (scaled by cell volume).
    #[arg(long, default_value_t = 0.0)]
    reaction: f64,
    /// Grid the unit box with spacing 1/(cells+1) instead of unit spacing.
    #[arg(long)]
    unit_box: bool,
    /// Manufacture the right-hand side from a known smooth solution
    /// (constant-coefficient fields only) and record the exact grid solution.
    #[arg(long)]
    manufactured: bool,
    /// Output prefix; writes PREFIX.mtx, PREFIX.rhs, and PREFIX.spec.json.
    #[arg(long, default_value = "problem")]
    out: PathBuf,
}

/// The preconditioner roster. For symmetric input the incomplete
/// factorizations use the Cholesky variant, which is what PCG requires.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Precond {
    /// Unpreconditioned CG.
    None,
    /// Incomplete factorization with zero fill.
    Ilu0,
    /// Incomplete factorization with fill level --ilu-level.
    Iluk,
    /// AMG V-cycles with Gauss-Seidel smoothing.
    AmgGs,
    /// AMG V-cycles smoothed by an incomplete factorization on the finest
    /// level and Gauss-Seidel below. May lose positive definiteness, which
    /// the solver reports as a breakdown.
    AmgIlu0,
    /// Multiplicative combination: factorization correction sandwiched
    /// between a V-cycle and its transpose. SPD by construction.
    Combined,
    /// Additive combination of the symmetrized V-cycle and the factorization.
    Additive,
    /// The diagnostic reversed combination (factorization outside, smoother
    /// inside); symmetric but possibly indefinite.
    WrongOrder,
}

#[derive(Args)]
struct SolveArgs {
    /// Matrix Market file holding the symmetric system matrix.
    #[arg(long)]
    matrix: PathBuf,
    /// Right-hand-side vector file (one value per line); defaults to all ones.
    #[arg(long)]
    rhs: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Precond::Combined)]
    precond: Precond,
    /// Fill level for incomplete factorizations.
    #[arg(long, default_value_t = 0)]
    ilu_level: usize,
    /// AMG strength threshold in (0, 1).
    #[arg(long, default_value_t = 0.25)]
    amg_theta: f64,
    /// V-cycles per application; defaults to 2 standalone and 1 inside a
    /// combination.
    #[arg(long)]
    amg_cycles: Option<usize>,
    /// Relative-residual stopping tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 10_000)]
    maxit: usize,
    /// Write the JSON run report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the computed solution vector here.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Print one residual line per iteration.
    #[arg(long)]
    verbose: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SmootherChoice {
    /// One forward Gauss-Seidel sweep.
    Gs,
    /// AMG V-cycles with Gauss-Seidel smoothing.
    AmgGs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Matrix Market file holding the symmetric system matrix.
    #[arg(long)]
    matrix: PathBuf,
    /// Smoother S of the combination.
    #[arg(long, value_enum, default_value_t = SmootherChoice::Gs)]
    smoother: SmootherChoice,
    /// Fill level of the inner incomplete factorization B.
    #[arg(long, default_value_t = 0)]
    ilu_level: usize,
    #[arg(long, default_value_t = 0.25)]
    amg_theta: f64,
    #[arg(long)]
    amg_cycles: Option<usize>,
    /// Comma-separated inner scalings to scan for a reversed-combination
    /// indefiniteness witness.
    #[arg(long)]
    scan: Option<String>,
    /// Write the JSON analysis report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Effective solve configuration, echoed into the report.
#[derive(Serialize, Deserialize)]
struct SolveEcho {
    matrix: String,
    rhs: Option<String>,
    precond: Precond,
    ilu_level: usize,
    amg_theta: f64,
    amg_cycles: usize,
    tol: f64,
    maxit: usize,
}

#[derive(Serialize, Deserialize)]
struct RunReport {
    config: SolveEcho,
    n: usize,
    nnz: usize,
    hierarchy: Option<HierarchyStats>,
    solve: SolveReport,
}

#[derive(Serialize, Deserialize)]
struct AnalyzeEcho {
    matrix: String,
    smoother: SmootherChoice,
    ilu_level: usize,
    amg_theta: f64,
    amg_cycles: usize,
    scan: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct AnalyzeReport {
    config: AnalyzeEcho,
    n: usize,
    nnz: usize,
    certificate: SpectralCertificate,
    witness: Option<WrongOrderWitness>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors; everything else is usage.
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return ExitCode::from(if benign { 0 } else { 1 });
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Solve(args) => run_solve(args),
        Command::Analyze(args) => run_analyze(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Numerical breakdowns get their own exit code; everything else that
/// surfaces as an error is a usage, format, or IO problem.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::IndefinitenessDetected { .. }
        | Error::IcBreakdown { .. }
        | Error::ZeroPivot { .. }
        | Error::ZeroDiagonal { .. }
        | Error::AmgSetup(_) => 3,
        _ => 1,
    }
}

/// Prefixes IO failures with the offending path; the error kind (and so the
/// exit code) is preserved.
fn annotate_io(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    }
}

fn parse_cells(text: &str, dim: usize) -> Result<Vec<usize>, Error> {
    let counts: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::InvalidParameter(format!("bad cell count in {text:?}: {e}")))?;
    match counts.len() {
        1 => Ok(vec![counts[0]; dim]),
        len if len == dim => Ok(counts),
        _ => Err(Error::InvalidParameter(format!(
            "expected 1 or {dim} cell counts, got {}",
            counts.len()
        ))),
    }
}

fn parse_field(text: &str, seed: u64) -> Result<CoefficientField, Error> {
    let bad = |msg: String| Error::InvalidParameter(msg);
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    let numbers: Vec<f64> = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("bad number in field {text:?}: {e}")))?
    };
    match (name, numbers.as_slice()) {
        ("constant", []) => Ok(CoefficientField::Constant { value: 1.0 }),
        ("constant", [value]) => Ok(CoefficientField::Constant { value: *value }),
        ("checkerboard", [low, high]) => Ok(CoefficientField::Checkerboard {
            low: *low,
            high: *high,
        }),
        ("lognormal", [sigma]) => Ok(CoefficientField::Lognormal { seed, sigma: *sigma }),
        _ => Err(bad(format!(
            "field {text:?} not recognized; use constant:V, checkerboard:LOW,HIGH, \
             or lognormal:SIGMA"
        ))),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn run_generate(args: GenerateArgs) -> Result<u8, Error> {
    let spec = ProblemSpec {
        dim: args.dim,
        cells: parse_cells(&args.cells, args.dim)?,
        field: parse_field(&args.field, args.seed)?,
        reaction: args.reaction,
        spacing: if args.unit_box {
            Spacing::UnitBox
        } else {
            Spacing::Unit
        },
        manufactured: args.manufactured,
    };
    let problem = generate(&spec)?;

    let matrix_path = with_suffix(&args.out, ".mtx");
    let rhs_path = with_suffix(&args.out, ".rhs");
    let spec_path = with_suffix(&args.out, ".spec.json");
    write_matrix_market(&problem.a, &matrix_path)?;
    write_vector(&problem.f, &rhs_path)?;
    std::fs::write(
        &spec_path,
        serde_json::to_string_pretty(&spec).expect("spec serializes") + "\n",
    )?;
    if let Some(exact) = &problem.exact_solution {
        write_vector(exact, with_suffix(&args.out, ".exact"))?;
    }

    println!(
        "wrote {} ({} unknowns, {} stored entries), {}, {}",
        matrix_path.display(),
        problem.a.n_rows(),
        problem.a.nnz(),
        rhs_path.display(),
        spec_path.display(),
    );
    Ok(0)
}

fn ic_factor(a: &SparseMatrix, level: usize) -> Result<Arc<dyn LinearOperator>, Error> {
    Ok(Arc::new(IncompleteFactorization::factor(
        a,
        level,
        FactorVariant::Ic,
        0.0,
    )?))
}

fn amg_hierarchy(
    a: &Arc<SparseMatrix>,
    theta: f64,
    cycles: usize,
    finest: FinestSmoother,
) -> Result<amg::AmgHierarchy, Error> {
    amg::setup(
        Arc::clone(a),
        &AmgParams {
            theta,
            cycles,
            finest_smoother: finest,
            ..AmgParams::default()
        },
    )
}

/// A built preconditioner with any hierarchy statistics and the effective
/// AMG cycle count for the config echo.
type BuiltPreconditioner = (Arc<dyn LinearOperator>, Option<HierarchyStats>, usize);

fn build_preconditioner(
    a: &Arc<SparseMatrix>,
    args: &SolveArgs,
) -> Result<BuiltPreconditioner, Error> {
    let standalone_cycles = args.amg_cycles.unwrap_or(2);
    let combined_cycles = args.amg_cycles.unwrap_or(1);
    Ok(match args.precond {
        Precond::None => (
            Arc::new(IdentityOperator::new(a.n_rows())),
            None,
            standalone_cycles,
        ),
        Precond::Ilu0 => (ic_factor(a, 0)?, None, standalone_cycles),
        Precond::Iluk => (ic_factor(a, args.ilu_level)?, None, standalone_cycles),
        Precond::AmgGs => {
            let h = amg_hierarchy(a, args.amg_theta, standalone_cycles, FinestSmoother::GaussSeidel)?;
            let stats = h.stats();
            (Arc::new(h), Some(stats), standalone_cycles)
        }
        Precond::AmgIlu0 => {
            let h = amg_hierarchy(
                a,
                args.amg_theta,
                standalone_cycles,
                FinestSmoother::Ic {
                    level: args.ilu_level,
                },
            )?;
            let stats = h.stats();
            (Arc::new(h), Some(stats), standalone_cycles)
        }
        Precond::Combined | Precond::Additive | Precond::WrongOrder => {
            let h = amg_hierarchy(a, args.amg_theta, combined_cycles, FinestSmoother::GaussSeidel)?;
            let stats = h.stats();
            let smoother: Arc<dyn LinearOperator> = Arc::new(h);
            let inner = ic_factor(a, args.ilu_level)?;
            let mode = match args.precond {
                Precond::Combined => CombineMode::Multiplicative,
                Precond::Additive => CombineMode::Additive,
                _ => CombineMode::WrongOrderDiagnostic,
            };
            let combined = CombinedPreconditioner::new(Arc::clone(a), smoother, inner, mode)?;
            (Arc::new(combined), Some(stats), combined_cycles)
        }
    })
}

fn run_solve(args: SolveArgs) -> Result<u8, Error> {
    let a =
        Arc::new(read_matrix_market(&args.matrix).map_err(|e| annotate_io(&args.matrix, e))?);
    let f = match &args.rhs {
        Some(path) => read_vector(path).map_err(|e| annotate_io(path, e))?,
        None => vec![1.0; a.n_rows()],
    };

    let setup_start = Instant::now();
    let (preconditioner, hierarchy, effective_cycles) = build_preconditioner(&a, &args)?;
    let setup_seconds = setup_start.elapsed().as_secs_f64();

    let cfg = SolveConfig {
        rel_tol: args.tol,
        max_iters: args.maxit,
        record_history: true,
    };
    let (x, mut report) = pcg(a.as_ref(), &f, preconditioner.as_ref(), &cfg, None)?;
    report.setup_seconds = setup_seconds;

    if args.verbose {
        for (k, r) in report.residual_history.iter().enumerate() {
            println!("iteration {k}: relative residual {r:.6e}");
        }
    }
    let final_residual = report.residual_history.last().copied().unwrap_or(f64::NAN);
    println!(
        "{} unknowns, preconditioner {}: {} after {} iterations \
         (relative residual {:.3e}, setup {:.3}s, solve {:.3}s{})",
        a.n_rows(),
        precond_name(args.precond),
        if report.converged { "converged" } else { "NOT converged" },
        report.iterations,
        final_residual,
        report.setup_seconds,
        report.solve_seconds,
        match report.cond_est {
            Some(k) => format!(", estimated condition number {k:.3e}"),
            None => String::new(),
        },
    );

    if let Some(path) = &args.solution {
        write_vector(&x, path)?;
    }
    if let Some(path) = &args.report {
        let run = RunReport {
            config: SolveEcho {
                matrix: args.matrix.display().to_string(),
                rhs: args.rhs.as_ref().map(|p| p.display().to_string()),
                precond: args.precond,
                ilu_level: args.ilu_level,
                amg_theta: args.amg_theta,
                amg_cycles: effective_cycles,
                tol: args.tol,
                maxit: args.maxit,
            },
            n: a.n_rows(),
            nnz: a.nnz(),
            hierarchy,
            solve: report.clone(),
        };
        std::fs::write(
            path,
            serde_json::to_string_pretty(&run).expect("report serializes") + "\n",
        )?;
    }
    Ok(if report.converged { 0 } else { 2 })
}

fn precond_name(p: Precond) -> &'static str {
    match p {
        Precond::None => "none",
        Precond::Ilu0 => "ilu0",
        Precond::Iluk => "iluk",
        Precond::AmgGs => "amg-gs",
        Precond::AmgIlu0 => "amg-ilu0",
        Precond::Combined => "combined",
        Precond::Additive => "additive",
        Precond::WrongOrder => "wrong-order",
    }
}

fn run_analyze(args: AnalyzeArgs) -> Result<u8, Error> {
    let a =
        Arc::new(read_matrix_market(&args.matrix).map_err(|e| annotate_io(&args.matrix, e))?);
    let cycles = args.amg_cycles.unwrap_or(1);
    let smoother: Arc<dyn LinearOperator> = match args.smoother {
        SmootherChoice::Gs => Arc::new(Smoother::new(
            SmootherKind::GaussSeidelForward,
            Arc::clone(&a),
            1,
        )?),
        SmootherChoice::AmgGs => Arc::new(amg_hierarchy(
            &a,
            args.amg_theta,
            cycles,
            FinestSmoother::GaussSeidel,
        )?),
    };
    let inner = ic_factor(&a, args.ilu_level)?;

    let certificate = certify_combined(Arc::clone(&smoother), Arc::clone(&inner), Arc::clone(&a))?;
    println!(
        "smoother contraction rho = {:.6} ({}expansive), inner spectrum m0 = {:.6}, \
         m1 = {:.6}, scaling sigma = {:.6}",
        certificate.rho,
        if certificate.smoother_non_expansive { "non-" } else { "" },
        certificate.m0,
        certificate.m1,
        certificate.sigma,
    );
    println!(
        "kappa: combined {:.6e} <= bound {:.6e}; inner alone {:.6e}, \
         symmetrized smoother alone {:.6e}",
        certificate.kappa_combined,
        certificate.kappa_bound,
        certificate.kappa_b,
        certificate.kappa_s,
    );
    if let Some(threshold) = certificate.threshold_rho {
        println!(
            "improvement threshold: combined beats the smoother cap once rho >= {threshold:.6}"
        );
    }

    let sigmas: Vec<f64> = match &args.scan {
        None => Vec::new(),
        Some(text) => text
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::InvalidParameter(format!("bad scan value: {e}")))?,
    };
    let witness = if sigmas.is_empty() {
        None
    } else {
        let found = find_wrong_order_witness(&smoother, &inner, &a, &sigmas)?;
        match &found {
            Some(w) => println!(
                "reversed combination loses definiteness at scale {} (lambda_min {:.6e})",
                w.sigma, w.report.lambda_min
            ),
            None => println!("reversed combination stayed positive definite over the scan"),
        }
        found
    };

    if let Some(path) = &args.report {
        let analysis = AnalyzeReport {
            config: AnalyzeEcho {
                matrix: args.matrix.display().to_string(),
                smoother: args.smoother,
                ilu_level: args.ilu_level,
                amg_theta: args.amg_theta,
                amg_cycles: cycles,
                scan: sigmas,
            },
            n: a.n_rows(),
            nnz: a.nnz(),
            certificate,
            witness,
        };
        std::fs::write(
            path,
            serde_json::to_string_pretty(&analysis).expect("report serializes") + "\n",
        )?;
    }
    Ok(0)
}
