//! Experiment drivers: phase diagrams, bound-validation sweeps, golfing
//! traces and stabilizer demos, configured by flat `key=value` files and
//! emitting deterministic CSV.
//!
//! Every random draw comes from a [`StreamId`] derived from the master seed
//! and the trial coordinates, so any row can be regenerated in isolation.
//! Lines starting with `#` are comments and may carry wall-clock data; all
//! other lines depend only on the configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use crate::bases::{format_complex, parse_complex, BasisKind, OperatorBasis};
use crate::concentration::{sample_tail, BoundKind, Ensemble, Scenario, TailReport};
use crate::error::{Error, Result};
use crate::golfing::{
    bookkeeping, run_golfing_stream, schedule_params, Bookkeeping, Certificate, GolfingConfig,
    GolfingSkeleton, GolfingVariant,
};
use crate::matcore::{ComplexMatrix, HermitianMatrix};
use crate::par::map_range;
use crate::sampling::{
    draw_omega_stream, random_rank_r, SampleSet, SamplingMode, SpectrumKind, StreamId,
};
use crate::solver::{recover, RecoveryProblem, SolverConfig};
use crate::stabilizer::{find_ambiguous_pair, lower_bound_trial, LowerBoundReport};

pub const DOMAIN_RHO: u64 = 0x6861_726e_0001;
pub const DOMAIN_OMEGA: u64 = 0x6861_726e_0002;
pub const DOMAIN_GOLF: u64 = 0x6861_726e_0003;
pub const DOMAIN_STAB: u64 = 0x6861_726e_0004;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Phase,
    Bounds,
    Golf,
    Stabdemo,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Phase => "phase",
            ExperimentKind::Bounds => "bounds",
            ExperimentKind::Golf => "golf",
            ExperimentKind::Stabdemo => "stabdemo",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase" => Ok(ExperimentKind::Phase),
            "bounds" => Ok(ExperimentKind::Bounds),
            "golf" => Ok(ExperimentKind::Golf),
            "stabdemo" => Ok(ExperimentKind::Stabdemo),
            other => Err(Error::invalid(format!("unknown experiment '{other}'"))),
        }
    }
}

/// How the sample counts of a phase diagram are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum MRule {
    /// `m = ⌈v · n r⌉`.
    PerNr(Vec<f64>),
    /// `m = ⌈γ · n r ln n⌉`.
    Gamma(Vec<f64>),
    Absolute(Vec<usize>),
}

impl MRule {
    pub fn values(&self, n: usize, r: usize) -> Vec<usize> {
        let nr = (n * r) as f64;
        match self {
            MRule::PerNr(v) => v.iter().map(|x| (x * nr).ceil() as usize).collect(),
            MRule::Gamma(g) => g
                .iter()
                .map(|x| (x * nr * (n as f64).ln()).ceil() as usize)
                .collect(),
            MRule::Absolute(m) => m.clone(),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            MRule::PerNr(v) | MRule::Gamma(v) => v.is_empty(),
            MRule::Absolute(m) => m.is_empty(),
        }
    }
}

/// All experiment settings. Each experiment reads the keys it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: Vec<usize>,
    pub r: Vec<usize>,
    pub basis: BasisKind,
    pub m_rule: MRule,
    pub modes: Vec<SamplingMode>,
    pub trials: usize,
    pub seed: u64,
    pub spectrum: SpectrumKind,
    pub solver: SolverConfig,
    /// Relative error at or below which a recovery counts as a success.
    pub success_tol: f64,
    pub out: Option<PathBuf>,
    pub kinds: Vec<BoundKind>,
    pub variant: GolfingVariant,
    pub constant_scale: f64,
    pub k: usize,
    pub omega_size: usize,
    pub eps: f64,
    pub lower_trials: usize,
}

/// Recognized configuration keys.
pub const CONFIG_KEYS: [&str; 26] = [
    "experiment",
    "n",
    "r",
    "basis",
    "m_over_nr",
    "gamma",
    "m",
    "modes",
    "trials",
    "seed",
    "spectrum",
    "success_tol",
    "out",
    "solver.max_iterations",
    "solver.penalty",
    "solver.eps_primal",
    "solver.eps_dual",
    "solver.zero_tol",
    "solver.adaptive_penalty",
    "kinds",
    "variant",
    "constant_scale",
    "k",
    "omega_size",
    "eps",
    "lower_trials",
];

impl ExperimentConfig {
    pub fn default_for(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            n: vec![16],
            r: vec![1],
            basis: BasisKind::Pauli,
            m_rule: MRule::PerNr(vec![2.0, 4.0, 6.0, 8.0]),
            modes: vec![SamplingMode::Iid],
            trials: 25,
            seed: 0,
            spectrum: SpectrumKind::Flat,
            solver: SolverConfig::default(),
            success_tol: 1e-4,
            out: None,
            kinds: BoundKind::ALL.to_vec(),
            variant: GolfingVariant::Simple,
            constant_scale: 1.0,
            k: 4,
            omega_size: 55,
            eps: 1.0,
            lower_trials: 500,
        };
        match kind {
            ExperimentKind::Bounds => Self {
                trials: 500,
                ..base
            },
            ExperimentKind::Golf | ExperimentKind::Stabdemo => Self { trials: 1, ..base },
            ExperimentKind::Phase => base,
        }
    }

    /// Parses `key=value` lines on top of the defaults for `default_kind`
    /// (or the kind named by an `experiment` key). Unknown or repeated keys
    /// are rejected.
    pub fn parse(text: &str, default_kind: ExperimentKind) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got '{line}'")))?;
            let (k, v) = (k.trim(), v.trim());
            if pairs
                .iter()
                .any(|(_, pk, _): &(usize, String, String)| pk == k)
            {
                return Err(Error::parse(i + 1, format!("duplicate key '{k}'")));
            }
            pairs.push((i + 1, k.to_string(), v.to_string()));
        }
        let kind = match pairs.iter().find(|(_, k, _)| k == "experiment") {
            Some((line, _, v)) => v
                .parse()
                .map_err(|e: Error| Error::parse(*line, e.to_string()))?,
            None => default_kind,
        };
        let mut cfg = Self::default_for(kind);
        for (line, k, v) in &pairs {
            cfg.set(k, v).map_err(|e| match e {
                Error::Parse { .. } => e,
                other => Error::parse(*line, other.to_string()),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::invalid(format!("bad value '{v}' for '{key}'")))
        }
        fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| num(key, s))
                .collect()
        }
        match key {
            "experiment" => self.kind = value.parse()?,
            "n" => self.n = list(key, value)?,
            "r" => self.r = list(key, value)?,
            "basis" => self.basis = value.parse()?,
            "m_over_nr" => self.m_rule = MRule::PerNr(list(key, value)?),
            "gamma" => self.m_rule = MRule::Gamma(list(key, value)?),
            "m" => self.m_rule = MRule::Absolute(list(key, value)?),
            "modes" => self.modes = list(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "spectrum" => self.spectrum = value.parse()?,
            "success_tol" => self.success_tol = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "solver.max_iterations" => self.solver.max_iterations = num(key, value)?,
            "solver.penalty" => self.solver.penalty = num(key, value)?,
            "solver.eps_primal" => self.solver.eps_primal = num(key, value)?,
            "solver.eps_dual" => self.solver.eps_dual = num(key, value)?,
            "solver.zero_tol" => self.solver.zero_tol = num(key, value)?,
            "solver.adaptive_penalty" => self.solver.adaptive_penalty = num(key, value)?,
            "kinds" => self.kinds = list(key, value)?,
            "variant" => self.variant = value.parse()?,
            "constant_scale" => self.constant_scale = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "omega_size" => self.omega_size = num(key, value)?,
            "eps" => self.eps = num(key, value)?,
            "lower_trials" => self.lower_trials = num(key, value)?,
            other => {
                return Err(Error::invalid(format!(
                    "unknown configuration key '{other}'"
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        self.solver.validate()?;
        match self.kind {
            ExperimentKind::Phase => {
                if self.n.is_empty()
                    || self.r.is_empty()
                    || self.m_rule.is_empty()
                    || self.modes.is_empty()
                {
                    return Err(Error::invalid("phase grid must be non-empty"));
                }
                for &n in &self.n {
                    OperatorBasis::by_kind(self.basis, n)?;
                    for &r in &self.r {
                        if r == 0 || r > n {
                            return Err(Error::invalid(format!("rank {r} outside [1, {n}]")));
                        }
                        for m in self.m_rule.values(n, r) {
                            if m == 0 {
                                return Err(Error::invalid("m must be positive"));
                            }
                            if m > n * n && self.modes.contains(&SamplingMode::WithoutReplacement) {
                                return Err(Error::invalid(format!(
                                    "m = {m} exceeds n² = {} without replacement",
                                    n * n
                                )));
                            }
                        }
                    }
                }
            }
            ExperimentKind::Bounds | ExperimentKind::Golf => {
                if self.n.is_empty() || self.r.is_empty() {
                    return Err(Error::invalid("n and r must be given"));
                }
            }
            ExperimentKind::Stabdemo => {
                if self.k == 0 || self.k > 8 || !(self.eps > 0.0) {
                    return Err(Error::invalid("stabdemo needs 1 ≤ k ≤ 8 and eps > 0"));
                }
                if self.omega_size > 1 << (2 * self.k) {
                    return Err(Error::invalid("omega_size exceeds the number of labels"));
                }
            }
        }
        Ok(())
    }
}

/// Keeps only the non-comment lines of a CSV.
pub fn csv_body(csv: &str) -> String {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .fold(String::new(), |mut s, l| {
            s.push_str(l);
            s.push('\n');
            s
        })
}

fn rho_stream(seed: u64, n: usize, r: usize, trial: usize) -> StreamId {
    StreamId::new(seed, trial as u64, ((n as u64) << 48) | ((r as u64) << 32))
        .with_domain(DOMAIN_RHO)
}

fn omega_batch(n: usize, r: usize, m: usize, mode: SamplingMode) -> u64 {
    let mode_bit = matches!(mode, SamplingMode::WithoutReplacement) as u64;
    ((n as u64) << 48) | ((r as u64) << 32) | ((m as u64) << 1) | mode_bit
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub relative_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub success: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub n: usize,
    pub r: usize,
    pub basis: BasisKind,
    pub mode: SamplingMode,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub mean_relative_error: f64,
    pub mean_iterations: f64,
    pub wall_seconds: f64,
    pub seed: u64,
    /// Trial `i` draws `ρ` from `rho_stream` and `Ω` from `omega_stream`
    /// with `trial = i`.
    pub rho_stream: StreamId,
    pub omega_stream: StreamId,
    pub per_trial: Vec<TrialResult>,
}

impl CellResult {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Binomial standard error of the success rate.
    pub fn sigma(&self) -> f64 {
        let p = self.success_rate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

fn drops(a: &CellResult, b: &CellResult) -> bool {
    let sigma = (a.sigma().powi(2) + b.sigma().powi(2)).sqrt();
    b.success_rate() < a.success_rate() - 2.0 * sigma
}

fn stream_template(s: StreamId) -> String {
    format!("{}:*:{}:{}", s.seed, s.batch, s.domain)
}

#[derive(Clone, Debug)]
pub struct PhaseReport {
    pub cells: Vec<CellResult>,
}

pub const PHASE_HEADER: &str =
    "n,r,basis,mode,m,m_over_nr,trials,successes,success_rate,mean_rel_error,mean_iterations,seed,rho_stream,omega_stream";

impl PhaseReport {
    /// Pairs of cells in the same `(n, r, mode)` series where the success
    /// rate drops by more than twice the combined standard error as `m`
    /// grows.
    pub fn monotonicity_violations(&self) -> Vec<(&CellResult, &CellResult)> {
        let mut out = Vec::new();
        for (i, a) in self.cells.iter().enumerate() {
            for b in &self.cells[i + 1..] {
                if (a.n, a.r, a.mode) == (b.n, b.r, b.mode) && a.m < b.m && drops(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Cells where sampling without replacement does worse than with
    /// replacement by more than twice the combined standard error.
    pub fn mode_ordering_violations(&self) -> Vec<(&CellResult, &CellResult)> {
        let mut out = Vec::new();
        for with in self.cells.iter().filter(|c| c.mode == SamplingMode::Iid) {
            for without in self
                .cells
                .iter()
                .filter(|c| c.mode == SamplingMode::WithoutReplacement)
            {
                if (with.n, with.r, with.m) == (without.n, without.r, without.m)
                    && drops(with, without)
                {
                    out.push((with, without));
                }
            }
        }
        out
    }

    pub fn to_csv(&self, timing: bool) -> String {
        let mut s = String::from("# lrmr phase v1\n");
        s.push_str(PHASE_HEADER);
        s.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{:e},{},{},{},{}",
                c.n,
                c.r,
                c.basis,
                c.mode,
                c.m,
                c.m as f64 / (c.n * c.r) as f64,
                c.trials,
                c.successes,
                c.success_rate(),
                c.mean_relative_error,
                c.mean_iterations,
                c.seed,
                stream_template(c.rho_stream),
                stream_template(c.omega_stream),
            );
        }
        if timing {
            for (i, c) in self.cells.iter().enumerate() {
                let _ = writeln!(s, "# wall_s cell={i} {:.3}", c.wall_seconds);
            }
        }
        s
    }

    /// One row per trial, each with the exact streams that regenerate it.
    pub fn trials_csv(&self) -> String {
        let mut s = String::from("# lrmr phase-trials v1\nn,r,basis,mode,m,trial,relative_error,iterations,converged,success,seed,rho_stream,omega_stream\n");
        for c in &self.cells {
            for (i, t) in c.per_trial.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{:e},{},{},{},{},{},{}",
                    c.n,
                    c.r,
                    c.basis,
                    c.mode,
                    c.m,
                    i,
                    t.relative_error,
                    t.iterations,
                    t.converged as u8,
                    t.success as u8,
                    c.seed,
                    StreamId {
                        trial: i as u64,
                        ..c.rho_stream
                    },
                    StreamId {
                        trial: i as u64,
                        ..c.omega_stream
                    },
                );
            }
        }
        s
    }
}

/// Everything that determines one recovery trial besides the basis and
/// the solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSpec {
    pub r: usize,
    pub m: usize,
    pub mode: SamplingMode,
    pub spectrum: SpectrumKind,
    pub rho_stream: StreamId,
    pub omega_stream: StreamId,
}

/// One seeded recovery: fresh `ρ` and `Ω`, solve, compare.
pub fn recovery_trial(
    basis: &OperatorBasis,
    spec: &TrialSpec,
    solver: &SolverConfig,
    success_tol: f64,
) -> Result<TrialResult> {
    let start = Instant::now();
    let n = basis.dim();
    let rho = random_rank_r(n, spec.r, spec.spectrum, &mut spec.rho_stream.rng());
    let omega = draw_omega_stream(n, spec.m, spec.mode, spec.omega_stream)?;
    let problem = RecoveryProblem::from_sample(basis.clone(), &omega, &rho)?;
    let res = recover(&problem, solver)?;
    let relative_error = (&res.sigma - &rho).frobenius_norm() / rho.frobenius_norm();
    Ok(TrialResult {
        relative_error,
        iterations: res.iterations,
        converged: res.converged,
        success: relative_error <= success_tol,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_phase_diagram(cfg: &ExperimentConfig) -> Result<PhaseReport> {
    cfg.validate()?;
    struct Cell {
        basis: OperatorBasis,
        n: usize,
        r: usize,
        m: usize,
        mode: SamplingMode,
    }
    let mut cells = Vec::new();
    for &n in &cfg.n {
        let basis = OperatorBasis::by_kind(cfg.basis, n)?;
        for &r in &cfg.r {
            for m in cfg.m_rule.values(n, r) {
                for &mode in &cfg.modes {
                    cells.push(Cell {
                        basis: basis.clone(),
                        n,
                        r,
                        m,
                        mode,
                    });
                }
            }
        }
    }
    let trials = cfg.trials;
    let outcomes: Vec<Result<TrialResult>> = map_range(cells.len() * trials, |task| {
        let (ci, i) = (task / trials, task % trials);
        let c = &cells[ci];
        let omega = StreamId::new(cfg.seed, i as u64, omega_batch(c.n, c.r, c.m, c.mode))
            .with_domain(DOMAIN_OMEGA);
        let spec = TrialSpec {
            r: c.r,
            m: c.m,
            mode: c.mode,
            spectrum: cfg.spectrum,
            rho_stream: rho_stream(cfg.seed, c.n, c.r, i),
            omega_stream: omega,
        };
        recovery_trial(&c.basis, &spec, &cfg.solver, cfg.success_tol)
    });
    let mut outcomes = outcomes.into_iter();
    let mut out = Vec::with_capacity(cells.len());
    for c in &cells {
        let per_trial: Vec<TrialResult> = outcomes.by_ref().take(trials).collect::<Result<_>>()?;
        let t = trials as f64;
        out.push(CellResult {
            n: c.n,
            r: c.r,
            basis: cfg.basis,
            mode: c.mode,
            m: c.m,
            trials,
            successes: per_trial.iter().filter(|x| x.success).count(),
            mean_relative_error: per_trial.iter().map(|x| x.relative_error).sum::<f64>() / t,
            mean_iterations: per_trial.iter().map(|x| x.iterations as f64).sum::<f64>() / t,
            wall_seconds: per_trial.iter().map(|x| x.seconds).sum(),
            seed: cfg.seed,
            rho_stream: rho_stream(cfg.seed, c.n, c.r, 0),
            omega_stream: StreamId::new(cfg.seed, 0, omega_batch(c.n, c.r, c.m, c.mode))
                .with_domain(DOMAIN_OMEGA),
            per_trial,
        });
    }
    Ok(PhaseReport { cells: out })
}

/// How the `t` grid of a sweep point is specified.
#[derive(Clone, Debug, PartialEq)]
pub enum TGrid {
    Absolute(Vec<f64>),
    /// Multiples of `μ(F)`.
    MuFractions(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub kind: BoundKind,
    pub kappa: f64,
    pub ensemble: Ensemble,
    pub t: TGrid,
}

/// The default validation sweep: every bound at a loose and a tight
/// oversampling level, with `t` spanning the vacuous and informative
/// ranges. Window edges are appended by [`run_bound_validation`].
pub fn default_sweep() -> Vec<SweepPoint> {
    use BoundKind::*;
    let abs = |v: &[f64]| TGrid::Absolute(v.to_vec());
    let p = |kind, kappa, ensemble, t| SweepPoint {
        kind,
        kappa,
        ensemble,
        t,
    };
    let nc = Ensemble::NonCommuting;
    vec![
        p(OpBernstein, 2.0, nc, abs(&[2.0, 3.0, 4.0, 5.0, 6.0])),
        p(
            OpBernstein,
            2.0,
            Ensemble::Commuting,
            abs(&[2.0, 3.0, 4.0, 5.0, 6.0]),
        ),
        p(OpBernsteinPoisson, 0.25, nc, abs(&[5.0, 6.0, 8.0])),
        p(
            OpBernsteinPoisson,
            0.25,
            Ensemble::Commuting,
            abs(&[5.0, 6.0, 8.0]),
        ),
        p(VectorBernstein, 2.0, nc, abs(&[0.25, 0.5, 1.0, 2.0])),
        p(MatrixMartingale, 2.0, nc, abs(&[2.0, 3.0, 4.0, 5.0, 6.0])),
        p(Adev, 8.0, nc, abs(&[0.5, 1.0, 1.5, 1.9])),
        p(Adev, 64.0, nc, abs(&[0.5, 1.0, 1.5, 1.9])),
        p(PbotFourier, 8.0, nc, abs(&[0.5, 1.0, 1.4, 2.0])),
        p(PbotFourier, 32.0, nc, abs(&[0.25, 0.5, 1.0, 2.0])),
        p(PbotGeneral, 32.0, nc, abs(&[0.5, 1.0])),
        p(PbotGeneral, 128.0, nc, abs(&[0.25, 0.5, 1.0])),
        p(
            MuPropagation,
            32.0,
            nc,
            TGrid::MuFractions(vec![0.125, 0.25, 0.5]),
        ),
        p(
            MuPropagation,
            128.0,
            nc,
            TGrid::MuFractions(vec![0.125, 0.25, 0.5]),
        ),
        p(DimensionFree, 32.0, nc, abs(&[0.3, 0.4, 0.5, 0.6])),
        p(DimensionFree, 128.0, nc, abs(&[0.15, 0.3, 0.5, 0.6])),
    ]
}

#[derive(Clone, Debug)]
pub struct BoundRow {
    pub scenario: Scenario,
    pub report: TailReport,
    pub seed: u64,
    pub stream: String,
}

#[derive(Clone, Debug)]
pub struct BoundsReport {
    pub rows: Vec<BoundRow>,
}

pub const BOUNDS_HEADER: &str =
    "kind,ensemble,basis,n,r,kappa,m,nu,f,mu,v,c,t,analytic,empirical,trials,half_width,verdict,seed,stream";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl BoundsReport {
    pub fn violations(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.report.verdict == crate::concentration::Verdict::Violated)
            .count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# lrmr bounds v1\n{BOUNDS_HEADER}\n");
        for row in &self.rows {
            let sc = &row.scenario;
            let q = &row.report.query.params;
            let sum_kind = matches!(
                sc.kind,
                BoundKind::OpBernstein
                    | BoundKind::OpBernsteinPoisson
                    | BoundKind::MatrixMartingale
            );
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{:e},{},{},{:e},{},{},{}",
                sc.kind,
                if sum_kind { sc.ensemble.as_str() } else { "" },
                if q.nu.is_some() {
                    sc.basis.as_str()
                } else {
                    ""
                },
                sc.n,
                sc.r,
                sc.kappa,
                sc.m(),
                opt(q.nu),
                opt(q.f),
                opt(q.mu),
                opt(q.v),
                opt(q.c),
                opt(q.t),
                row.report.bound,
                row.report.frequency,
                row.report.trials,
                row.report.half_width,
                row.report.verdict,
                row.seed,
                row.stream,
            );
        }
        s
    }
}

fn point_seed(master: u64, index: usize) -> u64 {
    master ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Runs every sweep point whose kind is selected, at every `n` and `r` of
/// the configuration.
pub fn run_bound_validation(cfg: &ExperimentConfig) -> Result<BoundsReport> {
    run_bound_sweep(cfg, &default_sweep())
}

pub fn run_bound_sweep(cfg: &ExperimentConfig, sweep: &[SweepPoint]) -> Result<BoundsReport> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let mut rows = Vec::new();
    let mut index = 0;
    for &n in &cfg.n {
        for &r in &cfg.r {
            for point in sweep.iter().filter(|p| cfg.kinds.contains(&p.kind)) {
                let seed = point_seed(cfg.seed, index);
                index += 1;
                let mut sc = Scenario::new(point.kind, n, r, point.kappa);
                sc.ensemble = point.ensemble;
                sc.spectrum = cfg.spectrum;
                if point.kind != BoundKind::PbotGeneral {
                    sc.basis = cfg.basis;
                }
                let samples = sample_tail(&sc, cfg.trials, seed)?;
                let mut ts: Vec<f64> = match &point.t {
                    TGrid::Absolute(v) => v.clone(),
                    TGrid::MuFractions(v) => {
                        let mu = samples.params.mu.unwrap_or(0.0);
                        v.iter().map(|x| x * mu).collect()
                    }
                };
                let probe =
                    crate::concentration::TailBoundQuery::new(sc.kind, samples.params.with_t(0.0));
                let w = probe.window()?;
                for edge in [w.lo, w.hi] {
                    if edge > 0.0 && edge.is_finite() && w.contains(edge) && !ts.contains(&edge) {
                        ts.push(edge);
                    }
                }
                ts.sort_by(f64::total_cmp);
                let stream = format!(
                    "rho={};trials={}",
                    StreamId::new(seed, 0, 0).with_domain(0x636f_6e63_0001),
                    stream_template(samples.trial_stream(0)),
                );
                for t in ts {
                    let report = match samples.report(t) {
                        Ok(rep) => rep,
                        Err(Error::OutOfWindow { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    rows.push(BoundRow {
                        scenario: sc.clone(),
                        report,
                        seed,
                        stream: stream.clone(),
                    });
                }
            }
        }
    }
    Ok(BoundsReport { rows })
}

#[derive(Clone, Debug)]
pub struct GolfRun {
    pub rho: HermitianMatrix,
    pub config: GolfingConfig,
    pub certificate: Certificate,
    pub bookkeeping: Bookkeeping,
    pub stream: StreamId,
}

impl GolfRun {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "# lrmr golf v1\nstep,batch_size,x_norm,ptperp_increment,mu,accepted,target_step,seed,stream\n",
        );
        for st in &self.certificate.trace {
            let stream = self
                .stream
                .with_batch(self.stream.batch + st.batch as u64 - 1);
            let _ = writeln!(
                s,
                "{},{},{:e},{:e},{},{},{},{},{}",
                st.batch,
                st.batch_size,
                st.x_norm,
                st.ptperp_increment,
                opt(st.mu),
                st.accepted as u8,
                st.step,
                self.stream.seed,
                stream,
            );
        }
        s
    }
}

/// A single golfing run on a random `ρ` of the first `n`, `r` in the grid.
pub fn run_golf_trace(cfg: &ExperimentConfig) -> Result<GolfRun> {
    let (n, r) = match (cfg.n.first(), cfg.r.first()) {
        (Some(&n), Some(&r)) => (n, r),
        _ => return Err(Error::invalid("golf needs n and r")),
    };
    let basis = OperatorBasis::by_kind(cfg.basis, n)?;
    let rho = random_rank_r(n, r, cfg.spectrum, &mut rho_stream(cfg.seed, n, r, 0).rng());
    let mut sk = GolfingSkeleton::new(cfg.variant, n, r);
    sk.constant_scale = cfg.constant_scale;
    let config = schedule_params(&sk)?;
    let stream = StreamId::new(cfg.seed, 0, 0).with_domain(DOMAIN_GOLF);
    let certificate = run_golfing_stream(&rho, &basis, &config, stream)?;
    let bookkeeping = bookkeeping(&certificate, &config, &rho)?;
    Ok(GolfRun {
        rho,
        config,
        certificate,
        bookkeeping,
        stream,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmbiguityRow {
    pub trial: usize,
    pub k: usize,
    pub omega_size: usize,
    pub found: bool,
    pub x: Option<usize>,
    pub intersection: usize,
    /// `max_{a∈Ω} |(wₐ, P₁) − (wₐ, P₂)|`.
    pub residual: f64,
    /// `tr P₁P₂`.
    pub overlap: f64,
    pub stream: StreamId,
}

#[derive(Clone, Debug)]
pub struct StabReport {
    pub seed: u64,
    pub rows: Vec<AmbiguityRow>,
    pub lower: LowerBoundReport,
}

impl StabReport {
    pub fn all_found(&self) -> bool {
        self.rows.iter().all(|r| r.found)
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("# lrmr stabdemo v1\ntrial,k,omega_size,found,x,intersection,residual,overlap,seed,stream\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:e},{:e},{},{}",
                r.trial,
                r.k,
                r.omega_size,
                r.found as u8,
                r.x.map(|x| x.to_string()).unwrap_or_default(),
                r.intersection,
                r.residual,
                r.overlap,
                self.seed,
                r.stream
            );
        }
        s
    }

    pub fn lower_csv(&self) -> String {
        let l = &self.lower;
        format!(
            "# lrmr lower-bound v1\nk,m,eps,trials,frequency,rank_frequency,half_width,p_f,within_hypothesis,passes,seed\n{},{},{},{},{},{},{:e},{},{},{},{}\n",
            l.k,
            l.m,
            l.eps,
            l.trials,
            l.frequency,
            l.rank_frequency,
            l.half_width,
            l.p_f,
            l.within_hypothesis as u8,
            l.passes() as u8,
            l.seed
        )
    }
}

/// Draws `trials` label sets of size `omega_size` without replacement,
/// looks for an ambiguous pair in each, then runs the random lower-bound
/// experiment with `m = ⌊n log₂ n / (1 + ε)⌋`.
pub fn run_stabdemo(cfg: &ExperimentConfig) -> Result<StabReport> {
    cfg.validate()?;
    let k = cfg.k;
    let n = 1usize << k;
    let basis = OperatorBasis::pauli(k)?;
    let rows: Vec<Result<AmbiguityRow>> = map_range(cfg.trials, |trial| {
        let stream = StreamId::new(cfg.seed, trial as u64, 0).with_domain(DOMAIN_STAB);
        let omega = draw_omega_stream(n, cfg.omega_size, SamplingMode::WithoutReplacement, stream)?;
        let pair = find_ambiguous_pair(k, &omega.indices)?;
        Ok(match pair {
            Some(p) => AmbiguityRow {
                trial,
                k,
                omega_size: cfg.omega_size,
                found: true,
                x: Some(p.x),
                intersection: p.intersection.len(),
                residual: omega
                    .indices
                    .iter()
                    .map(|&a| (basis.coefficient(a, &p.p1) - basis.coefficient(a, &p.p2)).abs())
                    .fold(0.0, f64::max),
                overlap: p.p1.inner(&p.p2),
                stream,
            },
            None => AmbiguityRow {
                trial,
                k,
                omega_size: cfg.omega_size,
                found: false,
                x: None,
                intersection: 0,
                residual: f64::NAN,
                overlap: f64::NAN,
                stream,
            },
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let m = ((n * k) as f64 / (1.0 + cfg.eps)).floor() as usize;
    let lower = lower_bound_trial(k, m, cfg.eps, cfg.lower_trials, cfg.seed)?;
    Ok(StabReport {
        seed: cfg.seed,
        rows,
        lower,
    })
}

/// Text form `matrix v1 n=<n>` followed by `n` rows of `re+imi` entries.
pub fn matrix_to_text(m: &HermitianMatrix) -> String {
    let n = m.dim();
    let mut s = format!("matrix v1 n={n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format_complex(m[(i, j)])).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn matrix_from_text(text: &str) -> Result<HermitianMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (hl, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty matrix file"))?;
    let fields = crate::sampling::parse_header(header, "matrix", hl + 1)?;
    let n: usize = crate::sampling::parse_num(
        fields
            .get("n")
            .ok_or_else(|| Error::parse(hl + 1, "missing n="))?,
        hl + 1,
    )?;
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let (li, line) = lines
            .next()
            .ok_or_else(|| Error::parse(hl + 2 + i, "too few matrix rows"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != n {
            return Err(Error::parse(li + 1, format!("expected {n} entries")));
        }
        for (j, t) in toks.iter().enumerate() {
            m[(i, j)] =
                parse_complex(t).ok_or_else(|| Error::parse(li + 1, format!("bad entry '{t}'")))?;
        }
    }
    if let Some((li, _)) = lines.next() {
        return Err(Error::parse(li + 1, "trailing data after matrix"));
    }
    HermitianMatrix::new(m)
}

/// Random rank-`r` test matrix used by the coherence report.
pub fn random_test_matrix(
    n: usize,
    r: usize,
    spectrum: SpectrumKind,
    seed: u64,
) -> HermitianMatrix {
    random_rank_r(n, r, spectrum, &mut rho_stream(seed, n, r, 0).rng())
}

/// Ω used to sample a problem from a known matrix.
pub fn sample_problem(
    basis: OperatorBasis,
    rho: &HermitianMatrix,
    m: usize,
    mode: SamplingMode,
    seed: u64,
) -> Result<(RecoveryProblem, SampleSet)> {
    let omega = draw_omega_stream(
        basis.dim(),
        m,
        mode,
        StreamId::new(seed, 0, 0).with_domain(DOMAIN_OMEGA),
    )?;
    Ok((RecoveryProblem::from_sample(basis, &omega, rho)?, omega))
}
