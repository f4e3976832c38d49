//! Dense complex and Hermitian matrix kernel.
//!
//! Everything here works on `nalgebra` dense storage with `Complex64`
//! entries. [`HermitianMatrix`] is the workhorse: it is validated once at
//! construction and every operation that maps Hermitian matrices to
//! Hermitian matrices re-symmetrizes its output so rounding never
//! accumulates an anti-Hermitian part.

use std::ops::{Add, Index, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Relative eigen/singular value cutoff below which a value counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

/// Maximal entrywise asymmetry accepted (and silently removed) by
/// [`HermitianMatrix::new`], relative to `max(1, max |a_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    m: ComplexMatrix,
}

impl HermitianMatrix {
    /// Validates `m` and symmetrizes away asymmetry up to [`HERMITIAN_TOL`].
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.nrows() == 0 || !m.is_square() {
            return Err(Error::invalid(format!(
                "Hermitian matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !all_finite(&m) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let n = m.nrows();
        let mut dev = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if dev > HERMITIAN_TOL * scale {
            return Err(Error::invalid(format!(
                "matrix is not Hermitian (max asymmetry {dev:.3e})"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// Takes the Hermitian part `(m + m†)/2` without validation.
    pub(crate) fn symmetrized(m: ComplexMatrix) -> Self {
        let adj = m.adjoint();
        Self {
            m: (m + adj) * Complex64::new(0.5, 0.0),
        }
    }

    /// Wraps a matrix already known to be exactly Hermitian.
    pub(crate) fn from_raw(m: ComplexMatrix) -> Self {
        debug_assert!(m.is_square());
        Self { m }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: ComplexMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: ComplexMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        Self { m }
    }

    /// The rank-one matrix `ψψ†`.
    pub fn outer(psi: &ComplexVector) -> Self {
        Self::symmetrized(psi * psi.adjoint())
    }

    /// Builds a real symmetric matrix from row-major entries.
    pub fn from_real_rows(n: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n * n {
            return Err(Error::invalid("row data length must be n*n"));
        }
        Self::new(ComplexMatrix::from_fn(n, n, |i, j| {
            Complex64::new(rows[i * n + j], 0.0)
        }))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub(crate) fn as_matrix_mut(&mut self) -> &mut ComplexMatrix {
        &mut self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    /// Hilbert-Schmidt inner product `tr(A† B)`, which is real here.
    pub fn inner(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            m: &self.m * Complex64::new(a, 0.0),
        }
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &Self) {
        let a = Complex64::new(a, 0.0);
        self.m.zip_apply(&other.m, |x, y| *x += a * y);
    }

    pub fn eig(&self) -> Spectrum {
        spectrum_of(self)
    }

    /// Largest eigenvalue magnitude.
    pub fn operator_norm(&self) -> f64 {
        self.eig().spectral_radius()
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.eig().eigenvalues.iter().map(|l| l.abs()).sum()
    }

    /// Matrix product; generally not Hermitian.
    pub fn matmul(&self, other: &Self) -> ComplexMatrix {
        &self.m * &other.m
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.m)
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.m[idx]
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix {
            m: &self.m + &rhs.m,
        }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix {
            m: &self.m - &rhs.m,
        }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scaled(rhs)
    }
}

fn all_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigendecomposition with eigenvalues sorted in descending order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
    pub rank_tolerance: f64,
}

impl Spectrum {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    /// Absolute cutoff `rank_tolerance * max |λ|`.
    pub fn zero_threshold(&self) -> f64 {
        self.rank_tolerance * self.spectral_radius()
    }

    pub fn rank(&self) -> usize {
        let thr = self.zero_threshold();
        self.eigenvalues.iter().filter(|l| l.abs() > thr).count()
    }

    /// Functional calculus: `Σ f(λ_i) v_i v_i†`. Terms with `f(λ) = 0` are
    /// skipped, so low-rank outputs cost `O(n² · rank)`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.eigenvectors.nrows();
        let kept: Vec<(usize, f64)> = self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| (i, f(l)))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        if kept.is_empty() {
            return HermitianMatrix::zeros(n);
        }
        let mut v = ComplexMatrix::zeros(n, kept.len());
        let mut w = ComplexMatrix::zeros(n, kept.len());
        for (c, &(i, val)) in kept.iter().enumerate() {
            let col = self.eigenvectors.column(i);
            v.set_column(c, &col);
            w.set_column(c, &(col * Complex64::new(val, 0.0)));
        }
        HermitianMatrix::symmetrized(w * v.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|l| l)
    }
}

/// Hermitian eigendecomposition, eigenvalues descending.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<Spectrum> {
    if !a.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    Ok(spectrum_of(a))
}

fn spectrum_of(a: &HermitianMatrix) -> Spectrum {
    let n = a.dim();
    let eig = SymmetricEigen::new(a.m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    Spectrum {
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors: vectors,
        rank_tolerance: DEFAULT_ZERO_TOL,
    }
}

/// `sign(A)` by functional calculus; eigenvalues with
/// `|λ| <= zero_tol * ‖A‖` map to zero.
pub fn matrix_sign(a: &HermitianMatrix, zero_tol: f64) -> Result<HermitianMatrix> {
    if !(zero_tol >= 0.0) {
        return Err(Error::invalid("zero_tol must be non-negative"));
    }
    let mut spec = eig_hermitian(a)?;
    spec.rank_tolerance = zero_tol;
    let thr = spec.zero_threshold();
    Ok(spec.map(|l| if l.abs() <= thr { 0.0 } else { l.signum() }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Operator,
    Frobenius,
    Nuclear,
}

/// Thin SVD `A = Σ sᵢ uᵢ vᵢ†` by one-sided Jacobi rotations, which keeps
/// full relative accuracy on rank-deficient complex input. Singular values
/// come out in descending order; `u` has zero columns where `sᵢ = 0`.
struct JacobiSvd {
    u: ComplexMatrix,
    s: Vec<f64>,
    v: ComplexMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

fn jacobi_svd(a: &ComplexMatrix) -> JacobiSvd {
    let (rows, cols) = a.shape();
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(cols, cols);
    let tol = f64::EPSILON * rows.max(1) as f64;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dotc(&w.column(j));
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for m in [&mut w, &mut v] {
                    for r in 0..m.nrows() {
                        let x = m[(r, i)];
                        let y = m[(r, j)] * phase.conj();
                        m[(r, i)] = x * c - y * sn;
                        m[(r, j)] = x * sn + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(f64, usize)> = (0..cols).map(|k| (w.column(k).norm(), k)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut u = ComplexMatrix::zeros(rows, cols);
    let mut vs = ComplexMatrix::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (dst, &(sk, k)) in order.iter().enumerate() {
        if sk > 0.0 {
            u.set_column(dst, &(w.column(k) / Complex64::new(sk, 0.0)));
        }
        vs.set_column(dst, &v.column(k));
        s.push(sk);
    }
    JacobiSvd { u, s, v: vs }
}

/// Singular values in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s = if a.nrows() >= a.ncols() {
        jacobi_svd(a).s
    } else {
        jacobi_svd(&a.adjoint()).s
    };
    s.truncate(a.nrows().min(a.ncols()));
    s
}

pub fn norm(a: &ComplexMatrix, kind: NormKind) -> f64 {
    match kind {
        NormKind::Frobenius => a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        NormKind::Operator => singular_values(a).first().copied().unwrap_or(0.0),
        NormKind::Nuclear => singular_values(a).iter().sum(),
    }
}

/// Number of singular values above `zero_tol * s_max`.
pub fn numerical_rank(a: &ComplexMatrix, zero_tol: f64) -> usize {
    let s = singular_values(a);
    let thr = zero_tol * s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > thr).count()
}

/// The tangent space `T` at a Hermitian matrix: all `σ` whose compression
/// to the kernel vanishes.
#[derive(Clone, Debug)]
pub struct TangentSpace {
    rank: usize,
    /// Unitary whose first `rank` columns span the range.
    frame: ComplexMatrix,
    range: ComplexMatrix,
    projector: HermitianMatrix,
}

impl TangentSpace {
    pub fn from_matrix(rho: &HermitianMatrix, zero_tol: f64) -> Result<Self> {
        let mut spec = eig_hermitian(rho)?;
        spec.rank_tolerance = zero_tol;
        let thr = spec.zero_threshold();
        let (inside, outside): (Vec<usize>, Vec<usize>) =
            (0..rho.dim()).partition(|&i| spec.eigenvalues[i].abs() > thr);
        if inside.is_empty() {
            return Err(Error::invalid("tangent space of the zero matrix"));
        }
        let n = rho.dim();
        let mut frame = ComplexMatrix::zeros(n, n);
        for (c, &i) in inside.iter().chain(outside.iter()).enumerate() {
            frame.set_column(c, &spec.eigenvectors.column(i));
        }
        Ok(Self::from_frame(frame, inside.len()))
    }

    /// `frame` must be unitary; its first `rank` columns span the range.
    pub fn from_frame(frame: ComplexMatrix, rank: usize) -> Self {
        let range = frame.columns(0, rank).into_owned();
        let projector = HermitianMatrix::symmetrized(&range * range.adjoint());
        Self {
            rank,
            frame,
            range,
            projector,
        }
    }

    pub fn dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Real dimension `2nr - r²` of the Hermitian part of `T`.
    pub fn real_dimension(&self) -> usize {
        2 * self.dim() * self.rank - self.rank * self.rank
    }

    pub fn range_projector(&self) -> &HermitianMatrix {
        &self.projector
    }

    pub fn range_basis(&self) -> &ComplexMatrix {
        &self.range
    }

    /// `𝒫_T σ = Pσ + σP − PσP`, or `σ − 𝒫_T σ` for the complement.
    pub fn project(&self, sigma: &HermitianMatrix, complement: bool) -> Result<HermitianMatrix> {
        if sigma.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "dimension mismatch: tangent space {} vs matrix {}",
                self.dim(),
                sigma.dim()
            )));
        }
        let pt = self.project_t(sigma);
        Ok(if complement { sigma - &pt } else { pt })
    }

    pub(crate) fn project_t(&self, sigma: &HermitianMatrix) -> HermitianMatrix {
        // A = Pσ; σP = A†; PσP = A P.
        let a = &self.range * (self.range.adjoint() * sigma.as_matrix());
        let apu = (&a * &self.range) * self.range.adjoint();
        let out = &a + a.adjoint() - apu;
        HermitianMatrix::symmetrized(out)
    }

    pub(crate) fn project_perp(&self, sigma: &HermitianMatrix) -> HermitianMatrix {
        sigma - &self.project_t(sigma)
    }

    /// Orthonormal basis (Hilbert-Schmidt) of the Hermitian matrices in `T`.
    pub fn real_basis(&self) -> Vec<HermitianMatrix> {
        let n = self.dim();
        let r = self.rank;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let col = |i: usize| self.frame.column(i).into_owned();
        let pair = |u: &ComplexVector, w: &ComplexVector| -> [HermitianMatrix; 2] {
            let uw = u * w.adjoint();
            let wu = w * u.adjoint();
            [
                HermitianMatrix::symmetrized((&uw + &wu) * Complex64::new(s, 0.0)),
                HermitianMatrix::symmetrized((uw - wu) * (I * s)),
            ]
        };
        let mut out = Vec::with_capacity(self.real_dimension());
        for i in 0..r {
            out.push(HermitianMatrix::outer(&col(i)));
        }
        for i in 0..r {
            for j in (i + 1)..n {
                out.extend(pair(&col(i), &col(j)));
            }
        }
        out
    }
}

/// The Hermitian dilation `(1/√2) [[0, σ], [σ†, 0]]`.
pub fn tilde_embed(sigma: &ComplexMatrix) -> Result<HermitianMatrix> {
    if !sigma.is_square() || sigma.nrows() == 0 {
        return Err(Error::invalid("tilde embedding needs a square matrix"));
    }
    let n = sigma.nrows();
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut out = ComplexMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, n), (n, n)).copy_from(&(sigma * s));
    out.view_mut((n, 0), (n, n))
        .copy_from(&(sigma.adjoint() * s));
    Ok(HermitianMatrix::from_raw(out))
}

/// Inverse of [`tilde_embed`] on its range: `√2` times the upper-right block.
pub fn tilde_extract(h: &HermitianMatrix) -> Result<ComplexMatrix> {
    if !h.dim().is_multiple_of(2) {
        return Err(Error::invalid("tilde extraction needs even dimension"));
    }
    let n = h.dim() / 2;
    Ok(h.as_matrix().view((0, n), (n, n)).into_owned()
        * Complex64::new(std::f64::consts::SQRT_2, 0.0))
}

/// `E(σ) = Σ ψ_i φ_i†` over singular triples with `s_i > zero_tol · s_max`.
pub fn polar_unitary_part(sigma: &ComplexMatrix, zero_tol: f64) -> Result<ComplexMatrix> {
    if !sigma.is_square() || sigma.nrows() == 0 {
        return Err(Error::invalid("polar part needs a square matrix"));
    }
    let n = sigma.nrows();
    let svd = jacobi_svd(sigma);
    let thr = zero_tol * svd.s.first().copied().unwrap_or(0.0);
    let mut out = ComplexMatrix::zeros(n, n);
    for (i, &s) in svd.s.iter().enumerate() {
        if s > thr {
            out += svd.u.column(i) * svd.v.column(i).adjoint();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{
        random_complex, random_hermitian, random_rank_r, SpectrumKind, StreamId,
    };
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn e(n: usize, i: usize) -> ComplexVector {
        let mut v = ComplexVector::zeros(n);
        v[i] = c(1.0, 0.0);
        v
    }

    fn max_abs(m: &ComplexMatrix) -> f64 {
        m.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    #[test]
    fn rejects_asymmetric_and_nonfinite() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(HermitianMatrix::new(m.clone()).is_err());
        m[(1, 0)] = c(1.0, 1e-14);
        let h = HermitianMatrix::new(m.clone()).unwrap();
        assert_eq!(h[(0, 1)], h[(1, 0)].conj());
        m[(0, 0)] = c(f64::NAN, 0.0);
        assert!(HermitianMatrix::new(m).is_err());
        assert!(HermitianMatrix::new(ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn eig_of_diagonal_and_identity() {
        let s = eig_hermitian(&HermitianMatrix::from_diagonal(&[3.0, 0.0, -2.0])).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[2], -2.0, epsilon = 1e-14);
        let id = eig_hermitian(&HermitianMatrix::identity(4)).unwrap();
        for l in id.eigenvalues {
            assert_abs_diff_eq!(l, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn eig_reconstructs_random_matrices() {
        for trial in 0..20 {
            let a = random_hermitian(8, &mut StreamId::new(11, trial, 0).rng());
            let s = eig_hermitian(&a).unwrap();
            let scale = s.spectral_radius().max(1.0);
            let err = (&s.reconstruct() - &a).operator_norm();
            assert!(err <= 1e-10 * scale, "reconstruction error {err}");
            let gram = s.eigenvectors.adjoint() * &s.eigenvectors;
            assert!(max_abs(&(gram - ComplexMatrix::identity(8, 8))) <= 1e-10);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
        let mut bad = HermitianMatrix::zeros(2);
        bad.as_matrix_mut()[(0, 0)] = c(f64::INFINITY, 0.0);
        assert!(eig_hermitian(&bad).is_err());
    }

    #[test]
    fn sign_examples() {
        let s = matrix_sign(&HermitianMatrix::from_diagonal(&[3.0, 0.0, -2.0]), 1e-10).unwrap();
        let expect = HermitianMatrix::from_diagonal(&[1.0, 0.0, -1.0]);
        assert!((&s - &expect).frobenius_norm() < 1e-12);

        let z = matrix_sign(&HermitianMatrix::zeros(3), 1e-10).unwrap();
        assert_eq!(z.frobenius_norm(), 0.0);

        let mut psi = ComplexVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, 1.0)]);
        psi /= Complex64::new(psi.norm(), 0.0);
        let p = HermitianMatrix::outer(&psi);
        assert!((&matrix_sign(&p, 1e-10).unwrap() - &p).frobenius_norm() < 1e-12);
        assert!(matrix_sign(&p, -1.0).is_err());
    }

    #[test]
    fn sign_cubes_to_itself_and_dualizes_nuclear_norm() {
        for trial in 0..10 {
            let a = random_hermitian(6, &mut StreamId::new(12, trial, 0).rng());
            let s = matrix_sign(&a, 1e-10).unwrap();
            let s3 = HermitianMatrix::symmetrized(s.matmul(&s) * s.as_matrix());
            assert!((&s3 - &s).frobenius_norm() < 1e-10);
            assert_abs_diff_eq!(s.inner(&a), a.nuclear_norm(), epsilon = 1e-8);
        }
    }

    #[test]
    fn norm_examples() {
        let id = ComplexMatrix::identity(5, 5);
        assert_abs_diff_eq!(norm(&id, NormKind::Operator), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(norm(&id, NormKind::Frobenius), 5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(norm(&id, NormKind::Nuclear), 5.0, epsilon = 1e-12);
        let d = HermitianMatrix::from_diagonal(&[3.0, -4.0]).into_matrix();
        assert_abs_diff_eq!(norm(&d, NormKind::Operator), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(norm(&d, NormKind::Frobenius), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(norm(&d, NormKind::Nuclear), 7.0, epsilon = 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w =
            ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]);
        let op = norm(&w, NormKind::Operator);
        assert_abs_diff_eq!(op * op, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn tangent_projection_examples() {
        let rho = HermitianMatrix::outer(&e(2, 0));
        let t = TangentSpace::from_matrix(&rho, 1e-10).unwrap();
        let ker = HermitianMatrix::outer(&e(2, 1));
        assert!(t.project(&ker, false).unwrap().frobenius_norm() < 1e-14);
        let off = HermitianMatrix::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((&t.project(&off, false).unwrap() - &off).frobenius_norm() < 1e-14);
        assert!((&t.project(&rho, false).unwrap() - &rho).frobenius_norm() < 1e-14);
        assert!(t.project(&HermitianMatrix::zeros(3), false).is_err());
        assert!(TangentSpace::from_matrix(&HermitianMatrix::zeros(3), 1e-10).is_err());
    }

    #[test]
    fn tangent_projector_is_idempotent_and_rank_bounded() {
        for trial in 0..10 {
            let mut rng = StreamId::new(13, trial, 0).rng();
            let rho = random_rank_r(7, 2, SpectrumKind::Random, &mut rng);
            let t = TangentSpace::from_matrix(&rho, 1e-10).unwrap();
            let p = t.range_projector();
            let p2 = HermitianMatrix::symmetrized(p.matmul(p));
            assert!((&p2 - p).frobenius_norm() < 1e-10);
            assert_abs_diff_eq!(p.trace(), 2.0, epsilon = 1e-8);

            let sigma = random_hermitian(7, &mut rng);
            let once = t.project(&sigma, false).unwrap();
            let twice = t.project(&once, false).unwrap();
            assert!((&once - &twice).frobenius_norm() < 1e-10);
            let perp = t.project(&sigma, true).unwrap();
            assert!((&(&once + &perp) - &sigma).frobenius_norm() < 1e-12);
            assert!(numerical_rank(once.as_matrix(), 1e-8) <= 4);
        }
    }

    #[test]
    fn real_basis_of_tangent_space_is_orthonormal() {
        let mut rng = StreamId::new(14, 0, 0).rng();
        let rho = random_rank_r(6, 2, SpectrumKind::Random, &mut rng);
        let t = TangentSpace::from_matrix(&rho, 1e-10).unwrap();
        let basis = t.real_basis();
        assert_eq!(basis.len(), 2 * 6 * 2 - 4);
        for (i, a) in basis.iter().enumerate() {
            assert!((&t.project(a, false).unwrap() - a).frobenius_norm() < 1e-12);
            for (j, b) in basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(a.inner(b), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tilde_examples() {
        let one = ComplexMatrix::from_element(1, 1, c(2.0, 0.0));
        let t = tilde_embed(&one).unwrap();
        let r2 = std::f64::consts::SQRT_2;
        assert_abs_diff_eq!(t[(0, 1)].re, r2, epsilon = 1e-15);
        assert_abs_diff_eq!(t[(1, 0)].re, r2, epsilon = 1e-15);
        let ev = t.eig().eigenvalues;
        assert_abs_diff_eq!(ev[0], r2, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], -r2, epsilon = 1e-14);
        assert_abs_diff_eq!(t.nuclear_norm(), 2.0 * r2, epsilon = 1e-14);

        let z = tilde_embed(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(z.dim(), 6);
        assert_eq!(z.frobenius_norm(), 0.0);
        assert!(tilde_embed(&ComplexMatrix::zeros(2, 3)).is_err());

        let sigma = random_complex(3, 3, &mut StreamId::new(15, 0, 0).rng());
        let ratio = tilde_embed(&sigma).unwrap().nuclear_norm() / norm(&sigma, NormKind::Nuclear);
        assert_abs_diff_eq!(ratio, r2, epsilon = 1e-10);
        let back = tilde_extract(&tilde_embed(&sigma).unwrap()).unwrap();
        assert!(max_abs(&(back - sigma)) < 1e-14);
    }

    #[test]
    fn polar_part_examples() {
        let a = random_complex(4, 4, &mut StreamId::new(16, 0, 0).rng());
        let pd = HermitianMatrix::symmetrized(a.adjoint() * &a + ComplexMatrix::identity(4, 4));
        let ep = polar_unitary_part(pd.as_matrix(), 1e-10).unwrap();
        assert!(max_abs(&(ep - ComplexMatrix::identity(4, 4))) < 1e-10);

        let mut s = ComplexMatrix::zeros(3, 3);
        s[(0, 1)] = c(2.0, 0.0);
        let ep = polar_unitary_part(&s, 1e-10).unwrap();
        let mut expect = ComplexMatrix::zeros(3, 3);
        expect[(0, 1)] = c(1.0, 0.0);
        assert!(max_abs(&(ep - expect)) < 1e-12);

        for trial in 0..5 {
            let sigma = random_complex(4, 4, &mut StreamId::new(17, trial, 0).rng());
            let lhs = matrix_sign(&tilde_embed(&sigma).unwrap(), 1e-10).unwrap();
            let rhs = tilde_embed(&polar_unitary_part(&sigma, 1e-10).unwrap())
                .unwrap()
                .scaled(std::f64::consts::SQRT_2);
            assert!((&lhs - &rhs).frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn jacobi_svd_on_rank_deficient_products() {
        for seed in 0..40 {
            let mut rng = StreamId::new(77, seed, 0).rng();
            let (n, k) = (2 + seed as usize % 7, 1 + seed as usize % 2);
            let a = random_complex(n, k, &mut rng) * random_complex(k, n, &mut rng);
            let svd = jacobi_svd(&a);
            let mut rec = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                rec += svd.u.column(i) * svd.v.column(i).adjoint() * c(svd.s[i], 0.0);
            }
            assert!((rec - &a).norm() < 1e-12 * a.norm());
            assert_eq!(numerical_rank(&a, 1e-10), k);
            let e = polar_unitary_part(&a, 1e-10).unwrap();
            assert!((&e * e.adjoint() * &a - &a).norm() < 1e-12 * a.norm());
            let h = e.adjoint() * &a;
            assert!((&h - h.adjoint()).norm() < 1e-12 * a.norm());
        }
        let wide = ComplexMatrix::from_row_slice(1, 2, &[c(3.0, 0.0), c(0.0, 4.0)]);
        assert_abs_diff_eq!(singular_values(&wide)[0], 5.0, epsilon = 1e-14);
        assert_eq!(singular_values(&wide).len(), 1);
    }
}
