//! Analytic tail bounds for the random operators used in the recovery
//! argument, and Monte Carlo estimates of the same tails.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;

use crate::bases::{coherence, mu_overlap, pauli_entries, BasisKind, OperatorBasis};
use crate::error::{Error, Result};
use crate::golfing::restricted_deviation;
use crate::matcore::{matrix_sign, ComplexMatrix, HermitianMatrix, TangentSpace, DEFAULT_ZERO_TOL};
use crate::par::map_range;
use crate::sampling::{
    apply_r, draw_omega_stream, random_rank_r, SampleSet, SamplingMode, SpectrumKind, StreamId,
};

const DOMAIN_RHO: u64 = 0x636f_6e63_0001;
const DOMAIN_TRIAL: u64 = 0x636f_6e63_0002;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    OpBernstein,
    OpBernsteinPoisson,
    VectorBernstein,
    MatrixMartingale,
    Adev,
    PbotFourier,
    PbotGeneral,
    MuPropagation,
    DimensionFree,
}

impl BoundKind {
    pub const ALL: [BoundKind; 9] = [
        BoundKind::OpBernstein,
        BoundKind::OpBernsteinPoisson,
        BoundKind::VectorBernstein,
        BoundKind::MatrixMartingale,
        BoundKind::Adev,
        BoundKind::PbotFourier,
        BoundKind::PbotGeneral,
        BoundKind::MuPropagation,
        BoundKind::DimensionFree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::OpBernstein => "op-bernstein",
            BoundKind::OpBernsteinPoisson => "op-bernstein-poisson",
            BoundKind::VectorBernstein => "vector-bernstein",
            BoundKind::MatrixMartingale => "matrix-martingale",
            BoundKind::Adev => "adev",
            BoundKind::PbotFourier => "pbot-fourier",
            BoundKind::PbotGeneral => "pbot-general",
            BoundKind::MuPropagation => "mu-propagation",
            BoundKind::DimensionFree => "dimension-free",
        }
    }

    /// Whether the bounded event is `statistic ≥ threshold` rather than `>`.
    fn inclusive(self) -> bool {
        matches!(
            self,
            BoundKind::VectorBernstein | BoundKind::Adev | BoundKind::DimensionFree
        )
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown bound kind '{s}'")))
    }
}

/// Named parameters of a bound. Each kind reads only the ones it needs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TailParams {
    pub n: Option<f64>,
    pub r: Option<f64>,
    pub nu: Option<f64>,
    pub kappa: Option<f64>,
    pub m: Option<f64>,
    pub v0_sq: Option<f64>,
    pub c: Option<f64>,
    pub v: Option<f64>,
    pub t: Option<f64>,
    pub f: Option<f64>,
    pub mu: Option<f64>,
}

impl TailParams {
    pub const KEYS: [&'static str; 11] = [
        "n", "r", "nu", "kappa", "m", "v0_sq", "c", "v", "t", "f", "mu",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut Option<f64>> {
        Some(match key {
            "n" => &mut self.n,
            "r" => &mut self.r,
            "nu" => &mut self.nu,
            "kappa" => &mut self.kappa,
            "m" => &mut self.m,
            "v0_sq" => &mut self.v0_sq,
            "c" => &mut self.c,
            "v" => &mut self.v,
            "t" => &mut self.t,
            "f" => &mut self.f,
            "mu" => &mut self.mu,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = self
            .slot(key)
            .ok_or_else(|| Error::invalid(format!("unknown bound parameter '{key}'")))?;
        *slot = Some(value);
        Ok(())
    }

    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut p = TailParams::default();
        for (k, v) in map {
            p.set(k, *v)?;
        }
        Ok(p)
    }

    pub fn to_map(&self) -> BTreeMap<&'static str, f64> {
        let mut copy = self.clone();
        Self::KEYS
            .into_iter()
            .filter_map(|k| copy.slot(k).and_then(|s| s.map(|v| (k, v))))
            .collect()
    }

    pub fn with_t(&self, t: f64) -> Self {
        Self {
            t: Some(t),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailBoundQuery {
    pub kind: BoundKind,
    pub params: TailParams,
}

impl TailBoundQuery {
    pub fn new(kind: BoundKind, params: TailParams) -> Self {
        Self { kind, params }
    }

    fn get(&self, name: &str, value: Option<f64>) -> Result<f64> {
        let v = value.ok_or_else(|| {
            Error::invalid(format!("{} bound needs parameter '{name}'", self.kind))
        })?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!(
                "parameter '{name}' must be positive, got {v}"
            )));
        }
        Ok(v)
    }

    fn t(&self) -> Result<f64> {
        let t = self
            .params
            .t
            .ok_or_else(|| Error::invalid(format!("{} bound needs parameter 't'", self.kind)))?;
        if !(t >= 0.0) || t.is_nan() {
            return Err(Error::invalid(format!("t must be non-negative, got {t}")));
        }
        Ok(t)
    }

    /// Total variance: `v` if given, otherwise `m · v0_sq`.
    fn variance(&self) -> Result<f64> {
        match self.params.v {
            Some(_) => self.get("v", self.params.v),
            None if self.params.m.is_some() && self.params.v0_sq.is_some() => {
                Ok(self.get("m", self.params.m)? * self.get("v0_sq", self.params.v0_sq)?)
            }
            None => Err(Error::invalid(format!(
                "{} bound needs 'v' or both 'm' and 'v0_sq'",
                self.kind
            ))),
        }
    }

    /// The range of `t` on which the bound is stated.
    pub fn window(&self) -> Result<Window> {
        let p = &self.params;
        Ok(match self.kind {
            BoundKind::OpBernstein | BoundKind::MatrixMartingale => {
                Window::closed(0.0, 2.0 * self.variance()? / self.get("c", p.c)?)
            }
            BoundKind::OpBernsteinPoisson => {
                Window::closed(2.0 * self.variance()? / self.get("c", p.c)?, f64::INFINITY)
            }
            BoundKind::VectorBernstein => {
                Window::closed(0.0, self.variance()? / self.get("c", p.c)?)
            }
            BoundKind::Adev => Window {
                lo: 0.0,
                hi: 2.0,
                hi_inclusive: false,
            },
            BoundKind::PbotFourier => Window::closed(0.0, f64::INFINITY),
            BoundKind::PbotGeneral => Window::closed(
                0.0,
                (2.0 / self.get("r", p.r)?).sqrt() * self.get("f", p.f)?,
            ),
            BoundKind::MuPropagation => Window::closed(0.0, self.get("mu", p.mu)?),
            BoundKind::DimensionFree => {
                let lo = (2.0 * self.get("nu", p.nu)? / self.get("kappa", p.kappa)?).sqrt();
                Window::closed(lo, 2.0 / 3.0)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub hi_inclusive: bool,
}

impl Window {
    fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            hi_inclusive: true,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && (t < self.hi || (self.hi_inclusive && t == self.hi))
    }
}

/// Evaluates the analytic bound. Values above one are returned unchanged.
pub fn eval_tail_bound(q: &TailBoundQuery) -> Result<f64> {
    let p = &q.params;
    let t = q.t()?;
    let w = q.window()?;
    if !w.contains(t) {
        return Err(Error::OutOfWindow {
            kind: q.kind.as_str(),
            t,
            lo: w.lo,
            hi: w.hi,
        });
    }
    Ok(match q.kind {
        BoundKind::OpBernstein | BoundKind::MatrixMartingale => {
            let n = q.get("n", p.n)?;
            2.0 * n * (-t * t / (4.0 * q.variance()?)).exp()
        }
        BoundKind::OpBernsteinPoisson => {
            let n = q.get("n", p.n)?;
            2.0 * n * (-t / (2.0 * q.get("c", p.c)?)).exp()
        }
        BoundKind::VectorBernstein => (-t * t / (4.0 * q.variance()?)).exp(),
        BoundKind::Adev => {
            let (n, r) = (q.get("n", p.n)?, q.get("r", p.r)?);
            let (nu, kappa) = (q.get("nu", p.nu)?, q.get("kappa", p.kappa)?);
            4.0 * n * r * (-t * t * kappa / (8.0 * nu)).exp()
        }
        BoundKind::PbotFourier => {
            let (n, r, f) = (q.get("n", p.n)?, q.get("r", p.r)?, q.get("f", p.f)?);
            let (nu, kappa) = (q.get("nu", p.nu)?, q.get("kappa", p.kappa)?);
            if t <= (2.0 / r).sqrt() * f {
                2.0 * n * (-t * t * kappa * r / (4.0 * nu * f * f)).exp()
            } else {
                2.0 * n * (-t * r.sqrt() * kappa / (2.0 * 2f64.sqrt() * nu * f)).exp()
            }
        }
        BoundKind::PbotGeneral => {
            let (n, r, f) = (q.get("n", p.n)?, q.get("r", p.r)?, q.get("f", p.f)?);
            let (nu, kappa) = (q.get("nu", p.nu)?, q.get("kappa", p.kappa)?);
            2.0 * n * (-t * t * kappa * r / (4.0 * nu * f * f)).exp()
        }
        BoundKind::MuPropagation => {
            let n = q.get("n", p.n)?;
            let (nu, kappa, mu) = (
                q.get("nu", p.nu)?,
                q.get("kappa", p.kappa)?,
                q.get("mu", p.mu)?,
            );
            2.0 * n * n * (-t * kappa / (4.0 * mu * nu)).exp()
        }
        BoundKind::DimensionFree => {
            let (nu, kappa) = (q.get("nu", p.nu)?, q.get("kappa", p.kappa)?);
            let d = t - (2.0 * nu / kappa).sqrt();
            (-d * d * kappa / (8.0 * nu)).exp()
        }
    })
}

/// Random matrix ensembles for the sum inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ensemble {
    /// `±w(p, 0)/√m`: random diagonal Pauli words, all commuting.
    Commuting,
    /// `±w(p, q)/√m` with uniformly random labels.
    NonCommuting,
}

impl Ensemble {
    pub fn as_str(self) -> &'static str {
        match self {
            Ensemble::Commuting => "commuting",
            Ensemble::NonCommuting => "noncommuting",
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ensemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "commuting" => Ok(Ensemble::Commuting),
            "noncommuting" | "non-commuting" => Ok(Ensemble::NonCommuting),
            other => Err(Error::invalid(format!("unknown ensemble '{other}'"))),
        }
    }
}

/// A random experiment whose statistic is the quantity a bound controls.
///
/// For the sampling-operator kinds a fixed rank-`r` matrix `ρ` is drawn once
/// and each trial draws `m = ⌈κnr⌉` i.i.d. indices. `F` is `sign ρ`. The sum
/// kinds use `m` summands of norm `1/√m`, so `V = 1` and `c = 1/√m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub kind: BoundKind,
    pub n: usize,
    pub r: usize,
    pub basis: BasisKind,
    pub kappa: f64,
    pub spectrum: SpectrumKind,
    pub ensemble: Ensemble,
}

impl Scenario {
    pub fn new(kind: BoundKind, n: usize, r: usize, kappa: f64) -> Self {
        Self {
            kind,
            n,
            r,
            basis: if kind == BoundKind::PbotGeneral {
                BasisKind::HermitianStandard
            } else {
                BasisKind::Pauli
            },
            kappa,
            spectrum: SpectrumKind::Flat,
            ensemble: Ensemble::NonCommuting,
        }
    }

    pub fn m(&self) -> usize {
        (self.kappa * (self.n * self.r) as f64).ceil() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.r == 0 || self.r > self.n {
            return Err(Error::invalid("scenario needs n ≥ 2 and 1 ≤ r ≤ n"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa must be positive"));
        }
        if self.m() == 0 {
            return Err(Error::invalid("scenario has no samples"));
        }
        let sum_kind = matches!(
            self.kind,
            BoundKind::OpBernstein | BoundKind::OpBernsteinPoisson | BoundKind::MatrixMartingale
        );
        if sum_kind && !self.n.is_power_of_two() {
            return Err(Error::invalid(
                "Pauli ensembles need n to be a power of two",
            ));
        }
        Ok(())
    }
}

/// Per-trial statistics together with the bound parameters (minus `t`).
#[derive(Clone, Debug)]
pub struct TailSamples {
    pub scenario: Scenario,
    pub seed: u64,
    pub params: TailParams,
    pub statistics: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Respected,
    Violated,
    Vacuous,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Respected => "respected",
            Verdict::Violated => "violated",
            Verdict::Vacuous => "vacuous",
        }
    }

    pub fn classify(bound: f64, frequency: f64, half_width: f64) -> Self {
        if bound > 1.0 {
            Verdict::Vacuous
        } else if frequency - half_width <= bound {
            Verdict::Respected
        } else {
            Verdict::Violated
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub query: TailBoundQuery,
    pub bound: f64,
    pub frequency: f64,
    pub trials: usize,
    /// Three binomial standard errors of the frequency.
    pub half_width: f64,
    pub verdict: Verdict,
}

impl TailSamples {
    /// Where the event `statistic ≥ threshold(t)` starts.
    fn threshold(&self, t: f64) -> f64 {
        match self.scenario.kind {
            BoundKind::VectorBernstein => self.params.v.unwrap_or(1.0).sqrt() + t,
            _ => t,
        }
    }

    pub fn frequency(&self, t: f64) -> f64 {
        let th = self.threshold(t);
        let inclusive = self.scenario.kind.inclusive();
        let hits = self
            .statistics
            .iter()
            .filter(|&&s| if inclusive { s >= th } else { s > th })
            .count();
        hits as f64 / self.statistics.len() as f64
    }

    pub fn report(&self, t: f64) -> Result<TailReport> {
        let query = TailBoundQuery::new(self.scenario.kind, self.params.with_t(t));
        let bound = eval_tail_bound(&query)?;
        let trials = self.statistics.len();
        let frequency = self.frequency(t);
        let half_width = 3.0 * (frequency * (1.0 - frequency) / trials as f64).sqrt();
        Ok(TailReport {
            query,
            bound,
            frequency,
            trials,
            half_width,
            verdict: Verdict::classify(bound, frequency, half_width),
        })
    }

    /// Stream that regenerates trial `i`.
    pub fn trial_stream(&self, i: usize) -> StreamId {
        trial_stream(self.seed, i)
    }
}

fn trial_stream(seed: u64, i: usize) -> StreamId {
    StreamId::new(seed, i as u64, 0).with_domain(DOMAIN_TRIAL)
}

/// Runs `trials` independent repetitions of the scenario.
pub fn sample_tail(scenario: &Scenario, trials: usize, seed: u64) -> Result<TailSamples> {
    scenario.validate()?;
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let n = scenario.n;
    let m = scenario.m();
    let nf = n as f64;
    let mut params = TailParams {
        n: Some(nf),
        r: Some(scenario.r as f64),
        m: Some(m as f64),
        ..TailParams::default()
    };

    let statistics: Vec<f64> = match scenario.kind {
        BoundKind::OpBernstein | BoundKind::OpBernsteinPoisson | BoundKind::MatrixMartingale => {
            params.v = Some(1.0);
            params.c = Some(1.0 / (m as f64).sqrt());
            let martingale = scenario.kind == BoundKind::MatrixMartingale;
            let ens = scenario.ensemble;
            map_range(trials, |i| {
                pauli_sum_norm(n, m, ens, martingale, trial_stream(seed, i))
            })
        }
        BoundKind::VectorBernstein => {
            params.v = Some(1.0);
            params.c = Some(1.0 / (m as f64).sqrt());
            map_range(trials, |i| {
                signed_unit_sum_norm(n, m, trial_stream(seed, i))
            })
        }
        _ => {
            let basis = OperatorBasis::by_kind(scenario.basis, n)?;
            let mut rng = StreamId::new(seed, 0, 0).with_domain(DOMAIN_RHO).rng();
            let rho = random_rank_r(n, scenario.r, scenario.spectrum, &mut rng);
            let t_space = TangentSpace::from_matrix(&rho, DEFAULT_ZERO_TOL)?;
            let f = matrix_sign(&rho, DEFAULT_ZERO_TOL)?;
            let f_norm = f.frobenius_norm();
            let coh = coherence(&rho, &basis, DEFAULT_ZERO_TOL)?;
            let mu = mu_overlap(&f, &basis)?;
            params.kappa = Some(m as f64 / (nf * scenario.r as f64));
            params.f = Some(f_norm);
            params.mu = Some(mu);
            params.nu = Some(match scenario.kind {
                BoundKind::PbotFourier => coh.fourier,
                BoundKind::PbotGeneral => coh.nu.max(nf * nf * mu / (f_norm * f_norm)),
                _ => coh.nu,
            });
            let kind = scenario.kind;
            let stats: Vec<Result<f64>> = map_range(trials, |i| {
                let omega = draw_omega_stream(n, m, SamplingMode::Iid, trial_stream(seed, i))?;
                sampling_statistic(kind, &t_space, &basis, &omega, &f)
            });
            stats.into_iter().collect::<Result<_>>()?
        }
    };
    Ok(TailSamples {
        scenario: scenario.clone(),
        seed,
        params,
        statistics,
    })
}

/// One-shot Monte Carlo estimate of the tail at `t`.
pub fn monte_carlo_tail(
    scenario: &Scenario,
    t: f64,
    trials: usize,
    seed: u64,
) -> Result<TailReport> {
    sample_tail(scenario, trials, seed)?.report(t)
}

fn sampling_statistic(
    kind: BoundKind,
    t_space: &TangentSpace,
    basis: &OperatorBasis,
    omega: &SampleSet,
    f: &HermitianMatrix,
) -> Result<f64> {
    Ok(match kind {
        BoundKind::Adev => restricted_deviation(t_space, basis, omega)?,
        BoundKind::PbotFourier | BoundKind::PbotGeneral => t_space
            .project_perp(&apply_r(omega, basis, f)?)
            .operator_norm(),
        BoundKind::MuPropagation => {
            let prp = t_space.project_t(&apply_r(omega, basis, f)?);
            mu_overlap(&(f - &prp), basis)?
        }
        BoundKind::DimensionFree => {
            let diff = &t_space.project_t(&apply_r(omega, basis, f)?) - f;
            diff.frobenius_norm() / f.frobenius_norm()
        }
        _ => unreachable!("sum kinds are handled separately"),
    })
}

/// `‖Σᵢ εᵢ wᵢ/√m‖` for random signs and Pauli words. In martingale mode the
/// word of step `i` repeats the previous one after a positive sign and is
/// redrawn otherwise, so the increments are dependent but still have
/// conditional mean zero and `E[Dᵢ² | past] = 𝟙/m`.
fn pauli_sum_norm(n: usize, m: usize, ens: Ensemble, martingale: bool, stream: StreamId) -> f64 {
    let mut rng = stream.rng();
    let scale = 1.0 / (m as f64).sqrt();
    let mut s = ComplexMatrix::zeros(n, n);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| match ens {
        Ensemble::Commuting => (rng.gen_range(0..n), 0),
        Ensemble::NonCommuting => (rng.gen_range(0..n), rng.gen_range(0..n)),
    };
    let mut word = draw(&mut rng);
    let mut last_positive = false;
    for i in 0..m {
        if !martingale || i == 0 || !last_positive {
            word = draw(&mut rng);
        }
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        last_positive = sign > 0.0;
        pauli_entries(n, word.0, word.1, 1.0).add_to(&mut s, sign * scale);
    }
    HermitianMatrix::symmetrized(s).operator_norm()
}

/// `‖Σᵢ ±e_{jᵢ}/√m‖₂` in `ℝⁿ`.
fn signed_unit_sum_norm(n: usize, m: usize, stream: StreamId) -> f64 {
    let mut rng = stream.rng();
    let scale = 1.0 / (m as f64).sqrt();
    let mut v = DVector::<f64>::zeros(n);
    for _ in 0..m {
        let j = rng.gen_range(0..n);
        v[j] += if rng.gen::<bool>() { scale } else { -scale };
    }
    v.norm()
}

/// `‖𝒫_T ℛ 𝒫_T − 𝒫_T‖` by power iteration on the square of the operator,
/// applied matrix-free.
pub fn restricted_deviation_power(
    t_space: &TangentSpace,
    basis: &OperatorBasis,
    omega: &SampleSet,
    max_iterations: usize,
    tol: f64,
) -> Result<f64> {
    let apply = |x: &HermitianMatrix| -> Result<HermitianMatrix> {
        Ok(&t_space.project_t(&apply_r(omega, basis, x)?) - x)
    };
    let tb = t_space.real_basis();
    let mut x = HermitianMatrix::zeros(t_space.dim());
    for (j, e) in tb.iter().enumerate() {
        x.add_scaled(1.0 + 0.618_033_988_75 * j as f64 % 1.0, e);
    }
    let mut estimate = 0.0;
    for _ in 0..max_iterations {
        let nx = x.frobenius_norm();
        if nx == 0.0 {
            return Ok(0.0);
        }
        // Re-projecting keeps rounding noise off T, where the operator is −1.
        x = t_space.project_t(&x.scaled(1.0 / nx));
        let y = apply(&x)?;
        let next = y.frobenius_norm();
        x = apply(&y)?;
        if (next - estimate).abs() <= tol * next.max(1e-300) {
            return Ok(next);
        }
        estimate = next;
    }
    Ok(estimate)
}
