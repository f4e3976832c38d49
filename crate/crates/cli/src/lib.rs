//! The `lrmr` command line. [`run`] parses arguments, runs one subcommand
//! and returns the process exit code: 0 on success, 1 when an experiment
//! fails (or an `--assert` check does not hold), 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lrmr::bases::{coherence, verify_basis, BasisKind, OperatorBasis};
use lrmr::harness::{
    matrix_from_text, matrix_to_text, random_test_matrix, run_bound_validation, run_golf_trace,
    run_phase_diagram, run_stabdemo, ExperimentConfig, ExperimentKind,
};
use lrmr::solver::{recover, RecoveryProblem};
use lrmr::Error;

const BASIS_TOL: f64 = 1e-10;
const STAB_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "lrmr", version, about = "Low-rank matrix recovery experiments")]
struct Cli {
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 1 when the experiment's acceptance check fails.
    #[arg(long, global = true)]
    assert: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one recovery problem file.
    Recover(RecoverArgs),
    /// Success-rate phase diagram over an (n, r, m) grid.
    Phase(PhaseArgs),
    /// Monte Carlo validation of the tail bounds.
    Bounds(BoundsArgs),
    /// Golfing certificate trace.
    Golf(GolfArgs),
    /// Ambiguous stabilizer pairs and the random lower-bound experiment.
    Stabdemo(StabArgs),
    /// Coherence report for a matrix.
    Coherence(CoherenceArgs),
    /// Orthonormality and completeness check of a basis.
    BasisCheck(BasisCheckArgs),
}

#[derive(Args, Debug)]
struct RecoverArgs {
    /// Problem file (`problem v1`).
    problem: PathBuf,
    /// Basis file, required when the problem uses a custom basis.
    #[arg(long)]
    basis_file: Option<PathBuf>,
    /// Ground-truth matrix (`matrix v1`) to compare against.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Relative error counted as success by `--assert`.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

#[derive(Args, Debug)]
struct PhaseArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    m_over_nr: Option<String>,
    #[arg(long)]
    modes: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Also write one row per trial here.
    #[arg(long)]
    trials_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    kinds: Option<String>,
    #[arg(long)]
    trials: Option<String>,
}

#[derive(Args, Debug)]
struct GolfArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    constant_scale: Option<String>,
}

#[derive(Args, Debug)]
struct StabArgs {
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    omega_size: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    lower_trials: Option<String>,
}

#[derive(Args, Debug)]
struct CoherenceArgs {
    /// Matrix file; a random rank-r matrix is used when omitted.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value = "pauli")]
    basis: String,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long, default_value = "flat")]
    spectrum: String,
}

#[derive(Args, Debug)]
struct BasisCheckArgs {
    #[arg(long, default_value = "pauli")]
    kind: String,
    /// Number of qubits for the Pauli basis.
    #[arg(long)]
    k: Option<usize>,
    /// Dimension for the standard basis.
    #[arg(long)]
    n: Option<usize>,
    /// Check every pair even for large n.
    #[arg(long)]
    exhaustive: bool,
    /// Basis file for `--kind custom`.
    #[arg(long)]
    file: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Experiment(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Experiment(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

/// Runs the CLI on `argv` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("lrmr: assertion failed");
            1
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("lrmr: {msg}");
            2
        }
        Err(Failure::Experiment(msg)) => {
            eprintln!("lrmr: {msg}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let ok = match &cli.command {
        Command::Recover(a) => cmd_recover(cli, a)?,
        Command::Phase(a) => {
            let cfg = load_config(
                cli,
                ExperimentKind::Phase,
                &[
                    ("n", &a.n),
                    ("r", &a.r),
                    ("basis", &a.basis),
                    ("m_over_nr", &a.m_over_nr),
                    ("modes", &a.modes),
                    ("trials", &a.trials),
                ],
            )?;
            cmd_phase(&cfg, a.trials_out.as_deref())?
        }
        Command::Bounds(a) => {
            let cfg = load_config(
                cli,
                ExperimentKind::Bounds,
                &[
                    ("n", &a.n),
                    ("r", &a.r),
                    ("kinds", &a.kinds),
                    ("trials", &a.trials),
                ],
            )?;
            cmd_bounds(&cfg)?
        }
        Command::Golf(a) => {
            let cfg = load_config(
                cli,
                ExperimentKind::Golf,
                &[
                    ("n", &a.n),
                    ("r", &a.r),
                    ("variant", &a.variant),
                    ("constant_scale", &a.constant_scale),
                ],
            )?;
            cmd_golf(&cfg)?
        }
        Command::Stabdemo(a) => {
            let cfg = load_config(
                cli,
                ExperimentKind::Stabdemo,
                &[
                    ("k", &a.k),
                    ("omega_size", &a.omega_size),
                    ("trials", &a.trials),
                    ("eps", &a.eps),
                    ("lower_trials", &a.lower_trials),
                ],
            )?;
            cmd_stabdemo(&cfg)?
        }
        Command::Coherence(a) => cmd_coherence(cli, a)?,
        Command::BasisCheck(a) => cmd_basis_check(cli, a)?,
    };
    Ok(ok || !cli.assert)
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Config file first, then command-line overrides in the same key space.
fn load_config(
    cli: &Cli,
    kind: ExperimentKind,
    overrides: &[(&str, &Option<String>)],
) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::parse(&read(path)?, kind).map_err(usage)?,
        None => ExperimentConfig::default_for(kind),
    };
    if cfg.kind != kind {
        return Err(usage(format!(
            "config is for '{}' but the subcommand is '{}'",
            cfg.kind.as_str(),
            kind.as_str()
        )));
    }
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v).map_err(usage)?;
        }
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

/// Writes `body` to `path`, or prints it when there is no path.
fn emit(path: Option<&Path>, body: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            fs::write(p, body).map_err(|e| Failure::Experiment(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn cmd_recover(cli: &Cli, a: &RecoverArgs) -> Outcome {
    let solver = match &cli.config {
        Some(path) => {
            ExperimentConfig::parse(&read(path)?, ExperimentKind::Phase)
                .map_err(usage)?
                .solver
        }
        None => Default::default(),
    };
    let custom = match &a.basis_file {
        Some(p) => Some(OperatorBasis::from_text(&read(p)?).map_err(usage)?),
        None => None,
    };
    let problem = RecoveryProblem::from_text(&read(&a.problem)?, custom).map_err(usage)?;
    let truth = match &a.truth {
        Some(p) => Some(matrix_from_text(&read(p)?).map_err(usage)?),
        None => None,
    };
    let mut res = recover(&problem, &solver)?;
    println!("# converged: {}", res.converged);
    println!("# iterations: {}", res.iterations);
    println!("# primal_residual: {:e}", res.primal_residual);
    println!(
        "# constraint_residual: {:e}",
        problem.constraint_residual(&res.sigma)
    );
    println!("# nuclear_norm: {}", res.sigma.nuclear_norm());
    let mut ok = res.converged;
    if let Some(rho) = &truth {
        let d = res.compare(rho, solver.zero_tol)?.clone();
        println!("# relative_error: {:e}", d.relative_error);
        println!("# delta_t: {:e}", d.delta_t);
        println!("# delta_t_perp: {:e}", d.delta_t_perp);
        ok &= d.relative_error <= a.tol;
    }
    emit(cli.out.as_deref(), &matrix_to_text(&res.sigma))?;
    Ok(ok)
}

fn cmd_phase(cfg: &ExperimentConfig, trials_out: Option<&Path>) -> Outcome {
    let rep = run_phase_diagram(cfg)?;
    emit(cfg.out.as_deref(), &rep.to_csv(true))?;
    if let Some(p) = trials_out {
        emit(Some(p), &rep.trials_csv())?;
    }
    let mono = rep.monotonicity_violations();
    let modes = rep.mode_ordering_violations();
    for (x, y) in &mono {
        println!(
            "# non-monotone: n={} r={} mode={} m={} rate={} > m={} rate={}",
            x.n,
            x.r,
            x.mode,
            x.m,
            x.success_rate(),
            y.m,
            y.success_rate()
        );
    }
    for (x, y) in &modes {
        println!(
            "# mode ordering: n={} r={} m={} iid={} without-replacement={}",
            x.n,
            x.r,
            x.m,
            x.success_rate(),
            y.success_rate()
        );
    }
    Ok(mono.is_empty() && modes.is_empty())
}

fn cmd_bounds(cfg: &ExperimentConfig) -> Outcome {
    let rep = run_bound_validation(cfg)?;
    emit(cfg.out.as_deref(), &rep.to_csv())?;
    let vacuous = rep
        .rows
        .iter()
        .filter(|r| r.report.verdict == lrmr::concentration::Verdict::Vacuous)
        .count();
    println!(
        "# rows: {} violated: {} vacuous: {}",
        rep.rows.len(),
        rep.violations(),
        vacuous
    );
    Ok(rep.violations() == 0)
}

fn cmd_golf(cfg: &ExperimentConfig) -> Outcome {
    let run = run_golf_trace(cfg)?;
    emit(cfg.out.as_deref(), &run.to_csv())?;
    let b = &run.bookkeeping;
    println!("# success: {}", run.certificate.success);
    println!(
        "# steps: {} batches: {} samples: {}",
        run.config.l,
        run.certificate.trace.len(),
        run.certificate.samples_consumed()
    );
    println!(
        "# final_x_norm: {:e} bound: {:e}",
        b.final_x_norm, b.contraction_bound
    );
    println!(
        "# ptperp_norm: {:e} bound: {:e}",
        b.ptperp_norm, b.ptperp_bound
    );
    Ok(run.certificate.success && b.holds)
}

fn cmd_stabdemo(cfg: &ExperimentConfig) -> Outcome {
    let rep = run_stabdemo(cfg)?;
    let mut body = rep.to_csv();
    body.push_str(&rep.lower_csv());
    emit(cfg.out.as_deref(), &body)?;
    let found = rep.rows.iter().filter(|r| r.found).count();
    let residual = rep.max_residual();
    let summary = format!(
        "# ambiguous pairs: {found}/{}\n# max coefficient residual: {residual:e}\n# lower bound: m={} frequency={} p_f={} passes={}\n",
        rep.rows.len(),
        rep.lower.m,
        rep.lower.frequency,
        rep.lower.p_f,
        rep.lower.passes()
    );
    print!("{summary}");
    Ok(rep.all_found() && residual <= STAB_TOL && rep.lower.passes())
}

fn cmd_coherence(cli: &Cli, a: &CoherenceArgs) -> Outcome {
    let kind: BasisKind = a.basis.parse().map_err(usage)?;
    let rho = match &a.matrix {
        Some(p) => matrix_from_text(&read(p)?).map_err(usage)?,
        None => {
            if a.r == 0 || a.r > a.n {
                return Err(usage(format!("rank {} outside [1, {}]", a.r, a.n)));
            }
            let spectrum = a.spectrum.parse().map_err(usage)?;
            random_test_matrix(a.n, a.r, spectrum, cli.seed.unwrap_or(0))
        }
    };
    let basis = OperatorBasis::by_kind(kind, rho.dim()).map_err(usage)?;
    let rep = coherence(&rho, &basis, lrmr::matcore::DEFAULT_ZERO_TOL)?;
    let body = format!(
        "nu,route,rank,fourier,tangent,sign\n{},{},{},{},{},{}\n",
        rep.nu, rep.route, rep.rank, rep.fourier, rep.tangent, rep.sign
    );
    emit(cli.out.as_deref(), &body)?;
    Ok(true)
}

fn cmd_basis_check(cli: &Cli, a: &BasisCheckArgs) -> Outcome {
    let kind: BasisKind = a.kind.parse().map_err(usage)?;
    let basis = match kind {
        BasisKind::Pauli => {
            OperatorBasis::pauli(a.k.ok_or_else(|| usage("--k is required for pauli"))?)
        }
        BasisKind::HermitianStandard => OperatorBasis::hermitian_standard(
            a.n.ok_or_else(|| usage("--n is required for hermitian-standard"))?,
        ),
        BasisKind::Custom => {
            let path = a
                .file
                .as_ref()
                .ok_or_else(|| usage("--file is required for custom"))?;
            OperatorBasis::from_text(&read(path)?)
        }
    }
    .map_err(usage)?;
    let rep = verify_basis(&basis, a.exhaustive);
    let body = format!(
        "kind: {}\nn: {}\nelements: {}\npairs_checked: {}\nmax_orthonormality_deviation: {:e}\nmax_completeness_deviation: {:e}\n",
        kind,
        basis.dim(),
        basis.len(),
        rep.pairs_checked,
        rep.orthonormality_deviation,
        rep.completeness_deviation
    );
    emit(cli.out.as_deref(), &body)?;
    Ok(rep.passes(BASIS_TOL))
}
