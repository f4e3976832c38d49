//! Dual certificates by the golfing scheme.
//!
//! Starting from `X₀ = sign ρ`, each batch `j` of i.i.d. samples adds
//! `ℛⱼ X_{i−1}` to the certificate `Y` and leaves the residual
//! `Xᵢ = sign ρ − 𝒫_T Y`. The simple and general variants use every batch;
//! the refined variant draws up to `l′` batches and keeps only those that
//! contract the residual by `cᵢ` and keep the off-tangent part small.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::bases::{mu_overlap, OperatorBasis};
use crate::error::{Error, Result};
use crate::matcore::{matrix_sign, HermitianMatrix, TangentSpace, DEFAULT_ZERO_TOL};
use crate::sampling::{apply_r, draw_omega_stream, SampleSet, SamplingMode, StreamId};

/// Relative slack for comparing separately rounded norms in the
/// bookkeeping checks.
const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GolfingVariant {
    Simple,
    General,
    Refined,
}

impl GolfingVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            GolfingVariant::Simple => "simple",
            GolfingVariant::General => "general",
            GolfingVariant::Refined => "refined",
        }
    }
}

impl fmt::Display for GolfingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GolfingVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(GolfingVariant::Simple),
            "general" => Ok(GolfingVariant::General),
            "refined" => Ok(GolfingVariant::Refined),
            other => Err(Error::invalid(format!("unknown golfing variant '{other}'"))),
        }
    }
}

/// The inputs from which [`schedule_params`] derives a full schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct GolfingSkeleton {
    pub variant: GolfingVariant,
    pub n: usize,
    pub r: usize,
    pub nu: f64,
    pub beta: f64,
    pub constant_scale: f64,
}

impl GolfingSkeleton {
    pub fn new(variant: GolfingVariant, n: usize, r: usize) -> Self {
        Self {
            variant,
            n,
            r,
            nu: 1.0,
            beta: 1.0,
            constant_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GolfingConfig {
    pub variant: GolfingVariant,
    pub n: usize,
    pub r: usize,
    pub nu: f64,
    pub beta: f64,
    pub constant_scale: f64,
    /// Per-step contraction targets `cᵢ`.
    pub c: Vec<f64>,
    /// Per-step off-tangent tolerances `tᵢ`.
    pub t: Vec<f64>,
    /// Per-step oversampling factors `κᵢ`, already multiplied by
    /// `constant_scale`.
    pub kappa: Vec<f64>,
    pub l: usize,
    /// Maximal number of batches drawn; equals `l` outside the refined
    /// variant.
    pub l_prime: usize,
    pub alpha: f64,
    /// Set when the refined `l′` falls outside both analyzed regimes and
    /// defaults to `2l`.
    pub l_prime_defaulted: bool,
}

impl GolfingConfig {
    /// `mᵢ = ⌈κᵢ r n⌉`.
    pub fn batch_size(&self, step: usize) -> usize {
        (self.kappa[step] * (self.r * self.n) as f64)
            .ceil()
            .max(1.0) as usize
    }

    pub fn batch_sizes(&self) -> Vec<usize> {
        (0..self.l).map(|i| self.batch_size(i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0
            || self.c.len() != self.l
            || self.t.len() != self.l
            || self.kappa.len() != self.l
        {
            return Err(Error::invalid("schedule arrays must have length l >= 1"));
        }
        if self.c.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
            return Err(Error::invalid("contraction targets must lie in (0, 1)"));
        }
        if self.t.iter().any(|&t| !(t > 0.0)) || self.kappa.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::invalid("t and kappa must be positive"));
        }
        if self.l_prime < self.l {
            return Err(Error::invalid("l' must be at least l"));
        }
        Ok(())
    }
}

fn ceil_log2(x: f64) -> usize {
    // Guard against log2 of an exact power of two rounding up.
    (x.log2() - 1e-12).ceil().max(1.0) as usize
}

/// Fills the schedule of the chosen variant and scales every `κᵢ`.
pub fn schedule_params(s: &GolfingSkeleton) -> Result<GolfingConfig> {
    if s.n < 2 || s.r == 0 || s.r > s.n {
        return Err(Error::invalid("golfing needs n >= 2 and 1 <= r <= n"));
    }
    if !(s.nu > 0.0 && s.beta > 0.0 && s.constant_scale > 0.0) {
        return Err(Error::invalid(
            "nu, beta and constant_scale must be positive",
        ));
    }
    let n = s.n as f64;
    let r = s.r as f64;
    let ln_n = n.ln();
    let l = ceil_log2(2.0 * n * n * r.sqrt());
    let lf = l as f64;
    let alpha: f64 = 6.0;
    let (c, t, kappa, l_prime, defaulted) = match s.variant {
        GolfingVariant::Simple => {
            let k = 64.0 * s.nu * ((4.0 * n * r).ln() + (2.0 * lf).ln() + s.beta * ln_n);
            (
                vec![0.5; l],
                vec![1.0 / (4.0 * r.sqrt()); l],
                vec![k; l],
                l,
                false,
            )
        }
        GolfingVariant::General => {
            let k = 64.0 * s.nu * ((4.0 * n * n).ln() + (3.0 * lf).ln() + s.beta * ln_n);
            (
                vec![0.5; l],
                vec![1.0 / (2.0 * r.sqrt()); l],
                vec![k; l],
                l,
                false,
            )
        }
        GolfingVariant::Refined => {
            let c: Vec<f64> = (0..l)
                .map(|i| {
                    if i < 2 {
                        1.0 / (2.0 * ln_n.sqrt())
                    } else {
                        0.5
                    }
                })
                .collect();
            let t: Vec<f64> = (0..l)
                .map(|i| {
                    if i < 2 {
                        1.0 / (4.0 * r.sqrt())
                    } else {
                        ln_n / (4.0 * r.sqrt())
                    }
                })
                .collect();
            let kappa = c
                .iter()
                .map(|ci| 18.0 * (alpha.ln() + s.beta) * s.nu / (ci * ci))
                .collect();
            let regime_n = ln_n >= 5.0 * (s.beta + 6f64.ln()) * std::f64::consts::LN_2;
            let regime_beta = s.beta >= 8.0 + 3.0 * 6f64.ln();
            let (lp, flag) = if regime_n {
                (2 * l, false)
            } else if regime_beta {
                ((1.5 * s.beta * lf).ceil() as usize, false)
            } else {
                (2 * l, true)
            };
            (c, t, kappa, lp.max(l), flag)
        }
    };
    let cfg = GolfingConfig {
        variant: s.variant,
        n: s.n,
        r: s.r,
        nu: s.nu,
        beta: s.beta,
        constant_scale: s.constant_scale,
        c,
        t,
        kappa: kappa
            .into_iter()
            .map(|k: f64| k * s.constant_scale)
            .collect(),
        l,
        l_prime,
        alpha,
        l_prime_defaulted: defaulted,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// One drawn batch.
#[derive(Clone, Debug, PartialEq)]
pub struct GolfStep {
    /// 1-based draw index.
    pub batch: usize,
    /// 1-based golfing step this batch was tried for.
    pub step: usize,
    pub batch_size: usize,
    /// `‖X_{i−1}‖₂` before the batch.
    pub x_prev_norm: f64,
    /// `‖(𝟙 − 𝒫_T ℛⱼ 𝒫_T) X_{i−1}‖₂`, the residual norm if accepted.
    pub x_norm: f64,
    /// `‖𝒫_T^⊥ ℛⱼ X_{i−1}‖`.
    pub ptperp_increment: f64,
    /// `μ` of the candidate residual (general variant only).
    pub mu: Option<f64>,
    pub contraction_ok: bool,
    pub ptperp_ok: bool,
    pub mu_ok: bool,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub y: HermitianMatrix,
    pub trace: Vec<GolfStep>,
    /// Accepted batch indices (1-based), i.e. the map `f`.
    pub accepted: Vec<usize>,
    /// Every drawn sample, batches concatenated in draw order.
    pub samples: SampleSet,
    pub success: bool,
    /// `‖X₀‖₂ = ‖sign ρ‖₂`.
    pub x0_norm: f64,
    pub l_prime_defaulted: bool,
}

impl Certificate {
    pub fn samples_consumed(&self) -> usize {
        self.samples.len()
    }

    /// Residual norm after the last accepted batch.
    pub fn final_x_norm(&self) -> f64 {
        self.trace
            .iter()
            .rev()
            .find(|s| s.accepted)
            .map(|s| s.x_norm)
            .unwrap_or(self.x0_norm)
    }

    /// CSV rows `step,batch_size,x_norm,ptperp_increment,mu,accepted`, one
    /// per drawn batch.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("step,batch_size,x_norm,ptperp_increment,mu,accepted\n");
        for st in &self.trace {
            let mu = st.mu.map(|m| format!("{m:.12e}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{:.12e},{:.12e},{},{}",
                st.batch, st.batch_size, st.x_norm, st.ptperp_increment, mu, st.accepted as u8
            );
        }
        s
    }
}

/// Checks the bookkeeping claims on a certificate trace:
/// `‖X_l‖₂ ≤ √r Π cᵢ` and `‖𝒫_T^⊥ Y‖ ≤ Σ tᵢ ‖X_{i−1}‖₂`, both using only the
/// recorded numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct Bookkeeping {
    pub final_x_norm: f64,
    pub contraction_bound: f64,
    pub ptperp_norm: f64,
    pub ptperp_bound: f64,
    pub holds: bool,
}

pub fn bookkeeping(
    cert: &Certificate,
    cfg: &GolfingConfig,
    rho: &HermitianMatrix,
) -> Result<Bookkeeping> {
    let t = TangentSpace::from_matrix(rho, DEFAULT_ZERO_TOL)?;
    let accepted: Vec<&GolfStep> = cert.trace.iter().filter(|s| s.accepted).collect();
    let prod_c: f64 = accepted.iter().map(|s| cfg.c[s.step - 1]).product();
    let contraction_bound = (cfg.r as f64).sqrt() * prod_c;
    let ptperp_bound: f64 = accepted
        .iter()
        .map(|s| cfg.t[s.step - 1] * s.x_prev_norm)
        .sum();
    let ptperp_norm = t.project_perp(&cert.y).operator_norm();
    let final_x_norm = cert.final_x_norm();
    let holds = final_x_norm <= contraction_bound * (1.0 + ROUNDING_SLACK)
        && ptperp_norm <= ptperp_bound * (1.0 + ROUNDING_SLACK);
    Ok(Bookkeeping {
        final_x_norm,
        contraction_bound,
        ptperp_norm,
        ptperp_bound,
        holds,
    })
}

/// Runs the golfing scheme with batches drawn i.i.d. from the stream
/// `(seed, 0, j)` for the `j`-th batch.
pub fn run_golfing(
    rho: &HermitianMatrix,
    basis: &OperatorBasis,
    cfg: &GolfingConfig,
    seed: u64,
) -> Result<Certificate> {
    run_golfing_stream(rho, basis, cfg, StreamId::new(seed, 0, 0))
}

/// As [`run_golfing`] with batch `j` drawn from `stream.with_batch(j)`.
pub fn run_golfing_stream(
    rho: &HermitianMatrix,
    basis: &OperatorBasis,
    cfg: &GolfingConfig,
    stream: StreamId,
) -> Result<Certificate> {
    let n = basis.dim();
    let mut draw = |j: usize, size: usize| {
        draw_omega_stream(
            n,
            size,
            SamplingMode::Iid,
            stream.with_batch(stream.batch + j as u64),
        )
    };
    golf(rho, basis, cfg, stream, &mut draw)
}

/// Runs the scheme on caller-supplied batches, used in order; the refined
/// variant may leave some unused.
pub fn run_golfing_with_batches(
    rho: &HermitianMatrix,
    basis: &OperatorBasis,
    cfg: &GolfingConfig,
    batches: &[SampleSet],
) -> Result<Certificate> {
    let stream = batches
        .first()
        .map(|b| b.stream)
        .unwrap_or(StreamId::new(0, 0, 0));
    let mut draw = |j: usize, _size: usize| {
        batches
            .get(j)
            .cloned()
            .ok_or_else(|| Error::invalid("ran out of supplied batches"))
    };
    golf(rho, basis, cfg, stream, &mut draw)
}

fn golf(
    rho: &HermitianMatrix,
    basis: &OperatorBasis,
    cfg: &GolfingConfig,
    stream: StreamId,
    draw: &mut dyn FnMut(usize, usize) -> Result<SampleSet>,
) -> Result<Certificate> {
    cfg.validate()?;
    let n = basis.dim();
    if rho.dim() != n || cfg.n != n {
        return Err(Error::invalid(
            "dimension mismatch between ρ, basis and schedule",
        ));
    }
    if rho.frobenius_norm() == 0.0 {
        return Err(Error::invalid("golfing needs a nonzero ρ"));
    }
    let t_space = TangentSpace::from_matrix(rho, DEFAULT_ZERO_TOL)?;
    let sign = matrix_sign(rho, DEFAULT_ZERO_TOL)?;
    let track_mu = cfg.variant == GolfingVariant::General;

    let mut x = sign.clone();
    let x0_norm = x.frobenius_norm();
    let mut mu_prev = if track_mu {
        mu_overlap(&x, basis)?
    } else {
        0.0
    };
    let mut y = HermitianMatrix::zeros(n);
    let mut trace = Vec::new();
    let mut accepted = Vec::new();
    let mut all_indices = Vec::new();
    let mut all_ok = true;
    let mut step = 0;
    let max_batches = if cfg.variant == GolfingVariant::Refined {
        cfg.l_prime
    } else {
        cfg.l
    };

    for j in 0..max_batches {
        if step == cfg.l {
            break;
        }
        let size = cfg.batch_size(step);
        let batch = draw(j, size)?;
        all_indices.extend_from_slice(&batch.indices);
        let x_prev_norm = x.frobenius_norm();
        let rx = apply_r(&batch, basis, &x)?;
        let pt_rx = t_space.project_t(&rx);
        let candidate = &x - &pt_rx;
        let cand_norm = candidate.frobenius_norm();
        let ptperp = (&rx - &pt_rx).operator_norm();
        let contraction_ok = cand_norm < cfg.c[step] * x_prev_norm;
        let ptperp_ok = ptperp <= cfg.t[step] * x_prev_norm;
        let (mu, mu_ok) = if track_mu {
            let m = mu_overlap(&candidate, basis)?;
            let c = cfg.c[step];
            (Some(m), m <= c * c * mu_prev)
        } else {
            (None, true)
        };
        let take = match cfg.variant {
            GolfingVariant::Refined => contraction_ok && ptperp_ok,
            _ => true,
        };
        if take {
            all_ok &= contraction_ok && ptperp_ok && mu_ok;
            y.add_scaled(1.0, &rx);
            x = candidate;
            if let Some(m) = mu {
                mu_prev = m;
            }
            accepted.push(j + 1);
        }
        trace.push(GolfStep {
            batch: j + 1,
            step: step + 1,
            batch_size: batch.len(),
            x_prev_norm,
            x_norm: cand_norm,
            ptperp_increment: ptperp,
            mu,
            contraction_ok,
            ptperp_ok,
            mu_ok,
            accepted: take,
        });
        if take {
            step += 1;
        }
    }

    let success = match cfg.variant {
        GolfingVariant::Refined => step == cfg.l,
        _ => all_ok,
    };
    Ok(Certificate {
        y,
        trace,
        accepted,
        samples: SampleSet {
            n,
            indices: all_indices,
            mode: SamplingMode::Iid,
            stream,
        },
        success,
        x0_norm,
        l_prime_defaulted: cfg.l_prime_defaulted,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateCheck {
    /// `‖𝒫_T Y − sign ρ‖₂`.
    pub pt_deviation: f64,
    /// `‖𝒫_T^⊥ Y‖`.
    pub ptperp_norm: f64,
    /// `‖Y − Π_Ω Y‖₂` when a sample set was supplied.
    pub range_residual: Option<f64>,
    pub passes: bool,
}

/// Checks `‖𝒫_T Y − sign ρ‖₂ ≤ 1/(2n²)` and `‖𝒫_T^⊥ Y‖ ≤ 1/2`, and
/// optionally that `Y` lies in the span of the sampled elements.
pub fn verify_certificate(
    rho: &HermitianMatrix,
    y: &HermitianMatrix,
    range: Option<(&OperatorBasis, &SampleSet)>,
) -> Result<CertificateCheck> {
    if rho.dim() != y.dim() {
        return Err(Error::invalid("dimension mismatch between ρ and Y"));
    }
    let n = rho.dim() as f64;
    let t = TangentSpace::from_matrix(rho, DEFAULT_ZERO_TOL)?;
    let sign = matrix_sign(rho, DEFAULT_ZERO_TOL)?;
    let pt = t.project_t(y);
    let pt_deviation = (&pt - &sign).frobenius_norm();
    let ptperp_norm = (y - &pt).operator_norm();
    let range_residual = match range {
        Some((basis, omega)) => {
            if basis.dim() != y.dim() {
                return Err(Error::invalid("dimension mismatch between basis and Y"));
            }
            let mut rest = y.clone();
            for a in omega.distinct() {
                let c = basis.coefficient(a, &rest);
                basis.add_element(&mut rest, a, -c);
            }
            Some(rest.frobenius_norm())
        }
        None => None,
    };
    let passes = pt_deviation <= 1.0 / (2.0 * n * n)
        && ptperp_norm <= 0.5
        && range_residual.is_none_or(|r| r <= 1e-8);
    Ok(CertificateCheck {
        pt_deviation,
        ptperp_norm,
        range_residual,
        passes,
    })
}

/// `‖𝒫_T ℛ 𝒫_T − 𝒫_T‖` as an operator on `T`, computed on an orthonormal
/// basis of `T`.
pub fn restricted_deviation(
    t: &TangentSpace,
    basis: &OperatorBasis,
    omega: &SampleSet,
) -> Result<f64> {
    let tb = t.real_basis();
    let d = tb.len();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (j, e) in tb.iter().enumerate() {
        let re = t.project_t(&apply_r(omega, basis, e)?);
        for (i, f) in tb.iter().enumerate() {
            m[(i, j)] = f.inner(&re) - if i == j { 1.0 } else { 0.0 };
        }
    }
    let sym = (&m + m.transpose()) * 0.5;
    Ok(sym
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, l| acc.max(l.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_rank_r, SpectrumKind};
    use approx::assert_abs_diff_eq;

    #[test]
    fn simple_schedule_example() {
        let cfg = schedule_params(&GolfingSkeleton::new(GolfingVariant::Simple, 16, 1)).unwrap();
        assert_eq!(cfg.l, 9);
        assert!(cfg.c.iter().all(|&c| c == 0.5));
        assert!(cfg.t.iter().all(|&t| t == 0.25));
        let k = 64.0 * (64f64.ln() + 18f64.ln() + 16f64.ln());
        assert_abs_diff_eq!(cfg.kappa[0], k, epsilon = 1e-9);
        assert_eq!(cfg.l_prime, cfg.l);
    }

    #[test]
    fn general_schedule_example() {
        let cfg = schedule_params(&GolfingSkeleton::new(GolfingVariant::General, 16, 4)).unwrap();
        assert_eq!(cfg.l, 10);
        assert!(cfg.t.iter().all(|&t| t == 0.25));
        let k = 64.0 * (1024f64.ln() + 30f64.ln() + 16f64.ln());
        assert_abs_diff_eq!(cfg.kappa[3], k, epsilon = 1e-9);
    }

    #[test]
    fn refined_schedule_and_l_prime_regimes() {
        let mut sk = GolfingSkeleton::new(GolfingVariant::Refined, 16, 1);
        let cfg = schedule_params(&sk).unwrap();
        let ln_n = 16f64.ln();
        assert_abs_diff_eq!(cfg.c[0], 1.0 / (2.0 * ln_n.sqrt()), epsilon = 1e-15);
        assert_eq!(cfg.c[2], 0.5);
        assert_abs_diff_eq!(cfg.t[5], ln_n / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cfg.kappa[4], 18.0 * (6f64.ln() + 1.0) * 4.0, epsilon = 1e-9);
        // Neither regime applies at n = 16, β = 1.
        assert!(cfg.l_prime_defaulted);
        assert_eq!(cfg.l_prime, 2 * cfg.l);

        sk.beta = 14.0;
        let cfg = schedule_params(&sk).unwrap();
        assert!(!cfg.l_prime_defaulted);
        assert_eq!(cfg.l_prime, (1.5 * 14.0 * cfg.l as f64).ceil() as usize);

        // n ≥ 2^{5(β + ln 6)} for a small β.
        sk.beta = 0.01;
        sk.n = 1 << 10;
        let cfg = schedule_params(&sk).unwrap();
        assert!(!cfg.l_prime_defaulted);
        assert_eq!(cfg.l_prime, 2 * cfg.l);
    }

    #[test]
    fn constant_scale_multiplies_every_kappa() {
        for v in [
            GolfingVariant::Simple,
            GolfingVariant::General,
            GolfingVariant::Refined,
        ] {
            let mut sk = GolfingSkeleton::new(v, 16, 2);
            let base = schedule_params(&sk).unwrap();
            sk.constant_scale = 0.05;
            let scaled = schedule_params(&sk).unwrap();
            for (a, b) in base.kappa.iter().zip(&scaled.kappa) {
                assert_abs_diff_eq!(a * 0.05, *b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn full_basis_batch_finishes_in_one_step() {
        let b = OperatorBasis::hermitian_standard(4).unwrap();
        let rho = HermitianMatrix::from_diagonal(&[1.0, 0.0, 0.0, 0.0]);
        let cfg = schedule_params(&GolfingSkeleton::new(GolfingVariant::Simple, 4, 1)).unwrap();
        let full = SampleSet::from_indices(
            4,
            (0..16).collect(),
            SamplingMode::Iid,
            StreamId::new(0, 0, 0),
        )
        .unwrap();
        let batches = vec![full; cfg.l];
        let cert = run_golfing_with_batches(&rho, &b, &cfg, &batches).unwrap();
        assert!(cert.trace[0].x_norm < 1e-14);
        // X₁ = 0 cannot contract further by a strict factor.
        assert!(cert.trace[0].contraction_ok);
        let check = verify_certificate(&rho, &cert.y, Some((&b, &cert.samples))).unwrap();
        assert!(check.pt_deviation < 1e-14);
    }

    #[test]
    fn verify_examples() {
        let rho = random_rank_r(
            6,
            2,
            SpectrumKind::Random,
            &mut StreamId::new(1, 0, 0).rng(),
        );
        let sign = matrix_sign(&rho, 1e-10).unwrap();
        let ok = verify_certificate(&rho, &sign, None).unwrap();
        assert!(ok.pt_deviation < 1e-12 && ok.ptperp_norm < 1e-12 && ok.passes);

        let t = TangentSpace::from_matrix(&rho, 1e-10).unwrap();
        let mut v = crate::sampling::random_complex(6, 1, &mut StreamId::new(2, 0, 0).rng())
            .column(0)
            .into_owned();
        v -= t.range_basis() * (t.range_basis().adjoint() * &v);
        v /= num_complex::Complex64::new(v.norm(), 0.0);
        let mut y = sign.clone();
        y.add_scaled(0.6, &HermitianMatrix::outer(&v));
        let bad = verify_certificate(&rho, &y, None).unwrap();
        assert_abs_diff_eq!(bad.ptperp_norm, 0.6, epsilon = 1e-10);
        assert!(!bad.passes);
    }

    #[test]
    fn paper_constants_give_successful_certificates() {
        let b = OperatorBasis::pauli(4).unwrap();
        let cfg = schedule_params(&GolfingSkeleton::new(GolfingVariant::Simple, 16, 1)).unwrap();
        assert!(cfg.batch_size(0) > 256);
        for seed in 0..5 {
            let rho = random_rank_r(
                16,
                1,
                SpectrumKind::Flat,
                &mut StreamId::new(3, seed, 0).rng(),
            );
            let cert = run_golfing(&rho, &b, &cfg, seed).unwrap();
            assert!(cert.success);
            let check = verify_certificate(&rho, &cert.y, Some((&b, &cert.samples))).unwrap();
            assert!(check.passes, "{check:?}");
            assert!(bookkeeping(&cert, &cfg, &rho).unwrap().holds);
        }
    }

    #[test]
    fn general_variant_tracks_mu() {
        let b = OperatorBasis::pauli(3).unwrap();
        let mut sk = GolfingSkeleton::new(GolfingVariant::General, 8, 1);
        sk.constant_scale = 0.05;
        let cfg = schedule_params(&sk).unwrap();
        let rho = random_rank_r(8, 1, SpectrumKind::Flat, &mut StreamId::new(4, 0, 0).rng());
        let cert = run_golfing(&rho, &b, &cfg, 7).unwrap();
        assert!(cert.trace.iter().all(|s| s.mu.is_some()));
        assert_eq!(cert.trace.len(), cfg.l);
        let csv = cert.trace_csv();
        assert!(csv.starts_with("step,batch_size,x_norm,ptperp_increment,mu,accepted\n"));
        assert_eq!(csv.lines().count(), cfg.l + 1);
    }

    #[test]
    fn refined_variant_only_keeps_good_batches() {
        let b = OperatorBasis::pauli(4).unwrap();
        let mut sk = GolfingSkeleton::new(GolfingVariant::Refined, 16, 1);
        sk.constant_scale = 0.02;
        let cfg = schedule_params(&sk).unwrap();
        let rho = random_rank_r(16, 1, SpectrumKind::Flat, &mut StreamId::new(5, 0, 0).rng());
        let cert = run_golfing(&rho, &b, &cfg, 11).unwrap();
        for s in &cert.trace {
            assert_eq!(s.accepted, s.contraction_ok && s.ptperp_ok);
        }
        assert!(cert.trace.len() <= cfg.l_prime);
        assert_eq!(cert.success, cert.accepted.len() == cfg.l);
        if cert.success {
            assert!(bookkeeping(&cert, &cfg, &rho).unwrap().holds);
        }
    }

    #[test]
    fn certificate_lies_in_span_of_samples() {
        let b = OperatorBasis::pauli(3).unwrap();
        let mut sk = GolfingSkeleton::new(GolfingVariant::Simple, 8, 1);
        sk.constant_scale = 0.02;
        let cfg = schedule_params(&sk).unwrap();
        let rho = random_rank_r(8, 1, SpectrumKind::Flat, &mut StreamId::new(6, 0, 0).rng());
        let cert = run_golfing(&rho, &b, &cfg, 3).unwrap();
        let check = verify_certificate(&rho, &cert.y, Some((&b, &cert.samples))).unwrap();
        assert!(check.range_residual.unwrap() <= 1e-8);
    }

    #[test]
    fn restricted_deviation_vanishes_for_the_full_basis() {
        let b = OperatorBasis::pauli(2).unwrap();
        let rho = random_rank_r(4, 1, SpectrumKind::Flat, &mut StreamId::new(7, 0, 0).rng());
        let t = TangentSpace::from_matrix(&rho, 1e-10).unwrap();
        let full = SampleSet::from_indices(
            4,
            (0..16).collect(),
            SamplingMode::Iid,
            StreamId::new(0, 0, 0),
        )
        .unwrap();
        assert!(restricted_deviation(&t, &b, &full).unwrap() < 1e-12);
        let single =
            SampleSet::from_indices(4, vec![3], SamplingMode::Iid, StreamId::new(0, 0, 0)).unwrap();
        assert!(restricted_deviation(&t, &b, &single).unwrap() >= 1.0 - 1e-12);
    }
}
