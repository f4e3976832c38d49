//! Nuclear-norm minimization over Hermitian matrices subject to sampled
//! basis-coefficient constraints, by alternating direction splitting.
//!
//! The splitting is `min ‖X‖₁ + 𝟙_C(Z)` subject to `X = Z`, with `C` the
//! affine set of matrices matching the sampled coefficients. The X-step is
//! eigenvalue soft-thresholding; the Z-step overwrites the sampled
//! coefficients, which is an orthogonal projection because the basis is
//! orthonormal.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::bases::{BasisKind, ComplexBasis, OperatorBasis};
use crate::error::{Error, Result};
use crate::matcore::{tilde_extract, ComplexMatrix, HermitianMatrix, TangentSpace};
use crate::sampling::{parse_header, parse_num, random_hermitian, SampleSet, StreamId};

/// Duplicated indices whose coefficients differ by more than this are
/// rejected as inconsistent.
pub const DUPLICATE_TOL: f64 = 1e-9;

/// Equality constraints `(σ, wₐ) = cₐ` for a deduplicated index set.
#[derive(Clone, Debug)]
pub struct RecoveryProblem {
    pub basis: OperatorBasis,
    /// Distinct basis indices, ascending.
    pub indices: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// Number of raw samples before deduplication.
    pub raw_count: usize,
}

impl RecoveryProblem {
    /// Deduplicates `samples`; repeated indices must carry equal values.
    pub fn new(basis: OperatorBasis, samples: &[(usize, f64)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("recovery needs at least one constraint"));
        }
        let mut map: BTreeMap<usize, f64> = BTreeMap::new();
        for &(a, c) in samples {
            if a >= basis.len() {
                return Err(Error::invalid(format!("index {a} outside the basis")));
            }
            if !c.is_finite() {
                return Err(Error::invalid(format!(
                    "coefficient of index {a} is not finite"
                )));
            }
            if let Some(&prev) = map.get(&a) {
                if (prev - c).abs() > DUPLICATE_TOL {
                    return Err(Error::invalid(format!(
                        "inconsistent duplicate coefficients for index {a}: {prev} vs {c}"
                    )));
                }
            } else {
                map.insert(a, c);
            }
        }
        Ok(Self {
            basis,
            indices: map.keys().copied().collect(),
            coefficients: map.values().copied().collect(),
            raw_count: samples.len(),
        })
    }

    /// Constraints `(σ, wₐ) = (ρ, wₐ)` for every `a ∈ Ω`.
    pub fn from_sample(
        basis: OperatorBasis,
        omega: &SampleSet,
        rho: &HermitianMatrix,
    ) -> Result<Self> {
        if rho.dim() != basis.dim() || omega.n != basis.dim() {
            return Err(Error::invalid("dimension mismatch between Ω, ρ and basis"));
        }
        let samples: Vec<(usize, f64)> = omega
            .distinct()
            .into_iter()
            .map(|a| (a, basis.coefficient(a, rho)))
            .collect();
        let mut p = Self::new(basis, &samples)?;
        p.raw_count = omega.len();
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `max_a |(σ, wₐ) − cₐ|`.
    pub fn constraint_residual(&self, sigma: &HermitianMatrix) -> f64 {
        self.indices
            .iter()
            .zip(&self.coefficients)
            .map(|(&a, &c)| (self.basis.coefficient(a, sigma) - c).abs())
            .fold(0.0, f64::max)
    }

    /// Orthogonal projection onto the affine constraint set.
    pub fn project_feasible(&self, sigma: &mut HermitianMatrix) {
        for (&a, &c) in self.indices.iter().zip(&self.coefficients) {
            let d = self.basis.coefficient(a, sigma) - c;
            self.basis.add_element(sigma, a, -d);
        }
    }

    /// Removes the components along the constrained directions.
    pub fn project_kernel(&self, sigma: &mut HermitianMatrix) {
        for &a in &self.indices {
            let d = self.basis.coefficient(a, sigma);
            self.basis.add_element(sigma, a, -d);
        }
    }

    /// `Σ_{a∈Ω} cₐ wₐ`, the least-norm feasible point.
    pub fn least_norm_point(&self) -> HermitianMatrix {
        self.basis.combine(
            self.indices
                .iter()
                .copied()
                .zip(self.coefficients.iter().copied()),
        )
    }

    fn max_abs_coefficient(&self) -> f64 {
        self.coefficients.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `problem v1 n=<n> basis=<kind> m=<m>` then `<index> <coefficient>`
    /// lines with 1-based indices.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "problem v1 n={} basis={} m={}\n",
            self.dim(),
            self.basis.kind(),
            self.len()
        );
        for (a, c) in self.indices.iter().zip(&self.coefficients) {
            let _ = writeln!(s, "{} {:?}", a + 1, c);
        }
        s
    }

    /// Parses the text format. A `custom` basis must be supplied by the
    /// caller; built-in kinds are constructed from `n`.
    pub fn from_text(text: &str, custom: Option<OperatorBasis>) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty problem file"))?;
        let fields = parse_header(header, "problem", hl)?;
        let get = |k: &str| {
            fields
                .get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::parse(hl, format!("missing header key '{k}'")))
        };
        let n: usize = parse_num(get("n")?, hl)?;
        let m: usize = parse_num(get("m")?, hl)?;
        let kind: BasisKind = get("basis")?
            .parse()
            .map_err(|e: Error| Error::parse(hl, e.to_string()))?;
        let basis = match (kind, custom) {
            (BasisKind::Custom, Some(b)) => b,
            (BasisKind::Custom, None) => {
                return Err(Error::parse(hl, "custom basis problems need a basis file"))
            }
            (k, _) => OperatorBasis::by_kind(k, n).map_err(|e| Error::parse(hl, e.to_string()))?,
        };
        if basis.dim() != n {
            return Err(Error::parse(hl, "basis dimension does not match n"));
        }
        let mut samples = Vec::with_capacity(m);
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            let (Some(a), Some(c), None) = (toks.next(), toks.next(), toks.next()) else {
                return Err(Error::parse(ln, "expected '<index> <coefficient>'"));
            };
            let a: usize = parse_num(a, ln)?;
            if a == 0 || a > n * n {
                return Err(Error::parse(
                    ln,
                    format!("index {a} outside [1, {}]", n * n),
                ));
            }
            let c: f64 = parse_num(c, ln)?;
            samples.push((a - 1, c));
        }
        if samples.len() != m {
            return Err(Error::parse(
                hl,
                format!("header says m={m} but {} constraints follow", samples.len()),
            ));
        }
        Self::new(basis, &samples)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Initial augmented-Lagrangian penalty.
    pub penalty: f64,
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub zero_tol: f64,
    /// Residual balancing: rescale the penalty when one residual dominates.
    pub adaptive_penalty: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            penalty: 1.0,
            eps_primal: 1e-9,
            eps_dual: 1e-9,
            zero_tol: 1e-10,
            adaptive_penalty: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty > 0.0
            && self.eps_primal > 0.0
            && self.eps_dual > 0.0
            && self.zero_tol >= 0.0)
        {
            return Err(Error::invalid(
                "solver tolerances and penalty must be positive",
            ));
        }
        Ok(())
    }
}

/// Comparison of a solution with a known ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// `‖σ* − ρ‖₂ / ‖ρ‖₂`.
    pub relative_error: f64,
    /// `‖Δ_T‖₂` with `Δ = σ* − ρ`.
    pub delta_t: f64,
    /// `‖Δ_T^⊥‖₂`.
    pub delta_t_perp: f64,
}

#[derive(Clone, Debug)]
pub struct RecoveryResult {
    pub sigma: HermitianMatrix,
    pub converged: bool,
    pub iterations: usize,
    /// `‖X − Z‖₂` at the last iteration.
    pub primal_residual: f64,
    /// `penalty · ‖Z − Z_prev‖₂` at the last iteration.
    pub dual_residual: f64,
    pub final_penalty: f64,
    /// Multipliers `yₐ`, aligned with the problem's indices.
    pub multipliers: Vec<f64>,
    /// A subgradient of `‖·‖₁` at `sigma`, within `dual_residual` of
    /// `Σ yₐ wₐ` in 2-norm.
    pub subgradient: HermitianMatrix,
    pub diagnostics: Option<Diagnostics>,
}

impl RecoveryResult {
    /// Fills [`RecoveryResult::diagnostics`] against a known `rho`.
    pub fn compare(&mut self, rho: &HermitianMatrix, zero_tol: f64) -> Result<&Diagnostics> {
        if rho.dim() != self.sigma.dim() {
            return Err(Error::invalid("dimension mismatch with ground truth"));
        }
        let delta = &self.sigma - rho;
        let t = TangentSpace::from_matrix(rho, zero_tol)?;
        let dt = t.project_t(&delta);
        let d = Diagnostics {
            relative_error: delta.frobenius_norm() / rho.frobenius_norm(),
            delta_t: dt.frobenius_norm(),
            delta_t_perp: (&delta - &dt).frobenius_norm(),
        };
        Ok(self.diagnostics.insert(d))
    }

    pub fn relative_error(&self) -> Option<f64> {
        self.diagnostics.as_ref().map(|d| d.relative_error)
    }
}

/// Solves `min ‖σ‖₁` subject to `(σ, wₐ) = cₐ` for all `a ∈ Ω`.
pub fn recover(problem: &RecoveryProblem, cfg: &SolverConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    if problem.is_empty() {
        return Err(Error::invalid("recovery needs at least one constraint"));
    }
    let n = problem.dim();
    let tol_p = cfg.eps_primal * (1.0 + problem.max_abs_coefficient());
    let mut rho = cfg.penalty;

    let mut z = problem.least_norm_point();
    let mut u = HermitianMatrix::zeros(n);
    let mut x = z.clone();
    let mut g = HermitianMatrix::zeros(n);
    let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let v = &z - &u;
        let thr = 1.0 / rho;
        x = v.eig().map(|l| {
            if l > thr {
                l - thr
            } else if l < -thr {
                l + thr
            } else {
                0.0
            }
        });
        // v - x is the subgradient scaled by 1/ρ.
        g = (&v - &x).scaled(rho);

        let xu = &x + &u;
        let mut w = xu.clone();
        problem.project_feasible(&mut w);
        let z_prev = std::mem::replace(&mut z, w);
        u = &xu - &z;

        r_norm = (&x - &z).frobenius_norm();
        s_norm = rho * (&z - &z_prev).frobenius_norm();
        if r_norm <= tol_p && s_norm <= cfg.eps_dual {
            converged = true;
            break;
        }
        if cfg.adaptive_penalty && iterations % 10 == 0 {
            let factor = if r_norm > 10.0 * s_norm {
                2.0
            } else if s_norm > 10.0 * r_norm {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                u = u.scaled(1.0 / factor);
            }
        }
    }

    // −ρU lies in span{wₐ : a ∈ Ω}; its coefficients are the multipliers.
    let y_mat = u.scaled(-rho);
    let multipliers = problem
        .indices
        .iter()
        .map(|&a| problem.basis.coefficient(a, &y_mat))
        .collect();
    Ok(RecoveryResult {
        sigma: x,
        converged,
        iterations,
        primal_residual: r_norm,
        dual_residual: s_norm,
        final_penalty: rho,
        multipliers,
        subgradient: g,
        diagnostics: None,
    })
}

/// Result of a lifted non-Hermitian recovery.
#[derive(Clone, Debug)]
pub struct NonHermitianResult {
    /// `√2` times the upper-right block of the lifted solution.
    pub estimate: ComplexMatrix,
    pub lifted: RecoveryResult,
}

/// Builds the lifted Hermitian problem: each complex coefficient `(wₐ, ρ)`
/// becomes `Re` against `w̃ₐ` and `Im` against `(i wₐ)~`.
pub fn lifted_problem(
    basis: &ComplexBasis,
    lifted: &OperatorBasis,
    samples: &[(usize, Complex64)],
) -> Result<RecoveryProblem> {
    let n2 = basis.len();
    if lifted.dim() != 2 * basis.dim() {
        return Err(Error::invalid("lifted basis has the wrong dimension"));
    }
    let mut real = Vec::with_capacity(2 * samples.len());
    for &(a, c) in samples {
        if a >= n2 {
            return Err(Error::invalid(format!("index {a} outside the basis")));
        }
        real.push((a, c.re));
        real.push((n2 + a, c.im));
    }
    RecoveryProblem::new(lifted.clone(), &real)
}

/// Recovers a non-Hermitian `ρ` from complex coefficients by solving the
/// Hermitian problem for its tilde embedding in dimension `2n`.
pub fn recover_nonhermitian(
    basis: &ComplexBasis,
    samples: &[(usize, Complex64)],
    cfg: &SolverConfig,
) -> Result<NonHermitianResult> {
    let lifted = basis.lift()?;
    recover_nonhermitian_with(basis, &lifted, samples, cfg)
}

/// As [`recover_nonhermitian`] with a precomputed lifted basis.
pub fn recover_nonhermitian_with(
    basis: &ComplexBasis,
    lifted: &OperatorBasis,
    samples: &[(usize, Complex64)],
    cfg: &SolverConfig,
) -> Result<NonHermitianResult> {
    let problem = lifted_problem(basis, lifted, samples)?;
    let res = recover(&problem, cfg)?;
    Ok(NonHermitianResult {
        estimate: tilde_extract(&res.sigma)?,
        lifted: res,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport {
    /// Per probe, the smaller increment over the two step sizes.
    pub increments: Vec<f64>,
    pub min_increment: f64,
    pub kernel_dim: usize,
    pub likely_unique: bool,
}

/// Step sizes used by [`uniqueness_probe`].
pub const PROBE_STEPS: [f64; 2] = [1e-3, 1e-2];

/// An increment counts as positive when it exceeds this fraction of the
/// step, i.e. the nuclear norm grows at a non-negligible slope.
pub const PROBE_SLOPE_TOL: f64 = 1e-2;

/// Perturbs `sigma` along random unit directions in the kernel of the
/// constraint map and reports the change of the nuclear norm.
pub fn uniqueness_probe(
    problem: &RecoveryProblem,
    sigma: &HermitianMatrix,
    trials: usize,
    seed: u64,
) -> UniquenessReport {
    let n = problem.dim();
    let kernel_dim = problem.basis.len() - problem.len();
    if kernel_dim == 0 {
        return UniquenessReport {
            increments: Vec::new(),
            min_increment: f64::INFINITY,
            kernel_dim,
            likely_unique: true,
        };
    }
    let base = sigma.nuclear_norm();
    let mut rng = StreamId::new(seed, 0, 0).with_domain(0x7072_6f62).rng();
    let mut increments = Vec::with_capacity(trials);
    let mut likely_unique = true;
    for _ in 0..trials {
        let mut delta = random_hermitian(n, &mut rng);
        // Randomize the scale of each direction a little so no probe aligns
        // with a fixed lattice of steps.
        delta = delta.scaled(rng.gen_range(0.5..1.5));
        problem.project_kernel(&mut delta);
        let norm = delta.frobenius_norm();
        if norm == 0.0 {
            continue;
        }
        let delta = delta.scaled(1.0 / norm);
        let mut worst = f64::INFINITY;
        for h in PROBE_STEPS {
            let mut moved = sigma.clone();
            moved.add_scaled(h, &delta);
            let inc = moved.nuclear_norm() - base;
            if inc <= PROBE_SLOPE_TOL * h {
                likely_unique = false;
            }
            worst = worst.min(inc);
        }
        increments.push(worst);
    }
    let min_increment = increments.iter().copied().fold(f64::INFINITY, f64::min);
    UniquenessReport {
        increments,
        min_increment,
        kernel_dim,
        likely_unique,
    }
}
