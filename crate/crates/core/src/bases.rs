//! Operator bases: orthonormal families of `n²` Hermitian matrices.
//!
//! Pauli and Hermitian-standard elements are generated on demand from their
//! index; custom bases hold their elements. Every element is handled in a
//! sparse `(row, col, value)` form, which makes coefficients and rank-one
//! updates cost `O(nnz)` instead of `O(n²)`.

use std::borrow::Cow;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matcore::{matrix_sign, ComplexMatrix, HermitianMatrix, TangentSpace};
use crate::sampling::{parse_header, parse_num, StreamId};

/// Largest supported tensor power for the Pauli basis.
pub const MAX_PAULI_K: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Nonzero entries of one basis element, sorted by `(row, col)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseElement {
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl SparseElement {
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != ZERO {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self { entries }
    }

    fn sorted(mut entries: Vec<(usize, usize, Complex64)>) -> Self {
        entries.sort_by_key(|&(i, j, _)| (i, j));
        Self { entries }
    }

    /// `Re tr(w† σ)`.
    pub fn inner(&self, sigma: &ComplexMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, w)| {
                let s = sigma[(i, j)];
                w.re * s.re + w.im * s.im
            })
            .sum()
    }

    /// `Re tr(w† v)` for two sparse elements.
    pub fn inner_sparse(&self, other: &SparseElement) -> f64 {
        let (mut x, mut y) = (0, 0);
        let mut acc = 0.0;
        while x < self.entries.len() && y < other.entries.len() {
            let (i, j, a) = self.entries[x];
            let (k, l, b) = other.entries[y];
            match (i, j).cmp(&(k, l)) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.re * b.re + a.im * b.im;
                    x += 1;
                    y += 1;
                }
            }
        }
        acc
    }

    /// `target += a · w`.
    pub fn add_to(&self, target: &mut ComplexMatrix, a: f64) {
        for &(i, j, w) in &self.entries {
            target[(i, j)] += w * a;
        }
    }

    pub fn to_dense(&self, n: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        self.add_to(&mut m, 1.0);
        m
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm_sqr()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisKind {
    HermitianStandard,
    Pauli,
    Custom,
}

impl BasisKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BasisKind::HermitianStandard => "hermitian-standard",
            BasisKind::Pauli => "pauli",
            BasisKind::Custom => "custom",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BasisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hermitian-standard" | "standard" => Ok(BasisKind::HermitianStandard),
            "pauli" => Ok(BasisKind::Pauli),
            "custom" => Ok(BasisKind::Custom),
            other => Err(Error::invalid(format!("unknown basis kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Standard,
    Pauli { k: usize },
    Stored(Arc<Vec<SparseElement>>),
}

#[derive(Clone, Debug)]
pub struct OperatorBasis {
    n: usize,
    kind: BasisKind,
    repr: Repr,
    fourier_bound: f64,
}

impl OperatorBasis {
    /// Diagonals `eᵢeᵢ†`, then symmetric `(eᵢeⱼ† + eⱼeᵢ†)/√2`, then
    /// antisymmetric `i(eᵢeⱼ† − eⱼeᵢ†)/√2`, pairs `i < j` in row-major order.
    pub fn hermitian_standard(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("basis dimension must be positive"));
        }
        Ok(Self {
            n,
            kind: BasisKind::HermitianStandard,
            repr: Repr::Standard,
            fourier_bound: 1.0,
        })
    }

    /// Pauli words on `k` qubits, `n = 2^k`. Index `a = p·n + q` for the
    /// label `(p, q)`, both read big-endian (first tensor factor is the
    /// most significant bit).
    pub fn pauli(k: usize) -> Result<Self> {
        if k == 0 || k > MAX_PAULI_K {
            return Err(Error::invalid(format!(
                "Pauli basis needs 1 <= k <= {MAX_PAULI_K}, got {k}"
            )));
        }
        let n = 1usize << k;
        Ok(Self {
            n,
            kind: BasisKind::Pauli,
            repr: Repr::Pauli { k },
            fourier_bound: 1.0 / n as f64,
        })
    }

    /// Validates `elements` with [`verify_basis`] before accepting them.
    pub fn custom(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let count = elements.len();
        let n = elements.first().map(|e| e.dim()).unwrap_or(0);
        if n == 0 || count != n * n {
            return Err(Error::invalid(format!(
                "custom basis needs n² elements, got {count} of dimension {n}"
            )));
        }
        if elements.iter().any(|e| e.dim() != n) {
            return Err(Error::invalid("custom basis elements differ in dimension"));
        }
        let sparse = elements
            .iter()
            .map(|e| SparseElement::from_dense(e.as_matrix()))
            .collect();
        Self::from_sparse(n, sparse)
    }

    pub(crate) fn from_sparse(n: usize, sparse: Vec<SparseElement>) -> Result<Self> {
        let fourier_bound = sparse
            .iter()
            .map(|s| {
                HermitianMatrix::from_raw(s.to_dense(n))
                    .operator_norm()
                    .powi(2)
            })
            .fold(0.0, f64::max);
        let basis = Self {
            n,
            kind: BasisKind::Custom,
            repr: Repr::Stored(Arc::new(sparse)),
            fourier_bound,
        };
        let report = verify_basis(&basis, false);
        if !report.passes(1e-8) {
            return Err(Error::invalid(format!(
                "custom basis failed validation (orthonormality {:.3e}, completeness {:.3e})",
                report.orthonormality_deviation, report.completeness_deviation
            )));
        }
        Ok(basis)
    }

    pub fn by_kind(kind: BasisKind, n: usize) -> Result<Self> {
        match kind {
            BasisKind::HermitianStandard => Self::hermitian_standard(n),
            BasisKind::Pauli => {
                if !n.is_power_of_two() {
                    return Err(Error::invalid(format!(
                        "Pauli basis needs n = 2^k, got {n}"
                    )));
                }
                Self::pauli(n.trailing_zeros() as usize)
            }
            BasisKind::Custom => Err(Error::invalid("custom bases are loaded from a file")),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of elements, `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// `max_a ‖wₐ‖²`.
    pub fn fourier_bound(&self) -> f64 {
        self.fourier_bound
    }

    /// `k` for a Pauli basis.
    pub fn qubits(&self) -> Option<usize> {
        match self.repr {
            Repr::Pauli { k } => Some(k),
            _ => None,
        }
    }

    pub fn sparse_element(&self, a: usize) -> Cow<'_, SparseElement> {
        assert!(a < self.len(), "basis index {a} out of range");
        match &self.repr {
            Repr::Standard => Cow::Owned(standard_element(self.n, a)),
            Repr::Pauli { .. } => Cow::Owned(pauli_element(self.n, a)),
            Repr::Stored(v) => Cow::Borrowed(&v[a]),
        }
    }

    pub fn element(&self, a: usize) -> HermitianMatrix {
        HermitianMatrix::from_raw(self.sparse_element(a).to_dense(self.n))
    }

    /// `(wₐ, σ)`.
    pub fn coefficient(&self, a: usize, sigma: &HermitianMatrix) -> f64 {
        let m = sigma.as_matrix();
        match &self.repr {
            Repr::Standard => {
                let (i, j, part) = standard_label(self.n, a);
                let s = std::f64::consts::SQRT_2;
                match part {
                    StdPart::Diag => m[(i, i)].re,
                    StdPart::Sym => s * m[(i, j)].re,
                    StdPart::Anti => s * m[(i, j)].im,
                }
            }
            Repr::Pauli { .. } => {
                let (p, q) = (a / self.n, a % self.n);
                let scale = 1.0 / (self.n as f64).sqrt();
                let base = i_pow(popcount(p & q));
                let mut acc = 0.0;
                for j in 0..self.n {
                    let row = j ^ q;
                    let w = if popcount(p & row) % 2 == 1 {
                        -base
                    } else {
                        base
                    };
                    let s = m[(row, j)];
                    acc += w.re * s.re + w.im * s.im;
                }
                acc * scale
            }
            Repr::Stored(v) => v[a].inner(m),
        }
    }

    pub fn coefficients(&self, sigma: &HermitianMatrix) -> Vec<f64> {
        (0..self.len())
            .map(|a| self.coefficient(a, sigma))
            .collect()
    }

    /// `target += c · wₐ`.
    pub fn add_element(&self, target: &mut HermitianMatrix, a: usize, c: f64) {
        self.sparse_element(a).add_to(target.as_matrix_mut(), c);
    }

    /// `Σₐ cₐ wₐ` over the given `(index, coefficient)` pairs.
    pub fn combine(&self, terms: impl IntoIterator<Item = (usize, f64)>) -> HermitianMatrix {
        let mut out = HermitianMatrix::zeros(self.n);
        for (a, c) in terms {
            self.add_element(&mut out, a, c);
        }
        out
    }

    /// Pauli label `(p, q)` of index `a`.
    pub fn pauli_label(&self, a: usize) -> Option<(usize, usize)> {
        match self.repr {
            Repr::Pauli { .. } => Some((a / self.n, a % self.n)),
            _ => None,
        }
    }

    /// Serializes in the `opbasis v1` text format (1-based element labels).
    pub fn to_text(&self) -> String {
        let mut s = format!("opbasis v1 n={} count={}\n", self.n, self.len());
        for a in 0..self.len() {
            let m = self.sparse_element(a).to_dense(self.n);
            let _ = writeln!(s, "element {}", a + 1);
            for i in 0..self.n {
                let row: Vec<String> = (0..self.n).map(|j| format_complex(m[(i, j)])).collect();
                s.push_str(&row.join(" "));
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty basis file"))?;
        let fields = parse_header(header, "opbasis", hl)?;
        let n: usize = parse_num(
            fields
                .get("n")
                .ok_or_else(|| Error::parse(hl, "missing n"))?,
            hl,
        )?;
        let count: usize = parse_num(
            fields
                .get("count")
                .ok_or_else(|| Error::parse(hl, "missing count"))?,
            hl,
        )?;
        if n == 0 || count != n * n {
            return Err(Error::parse(hl, format!("count must equal n² = {}", n * n)));
        }
        let mut elements = Vec::with_capacity(count);
        for a in 1..=count {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(hl, format!("missing element {a}")))?;
            let label = line.strip_prefix("element").map(str::trim);
            if label != Some(a.to_string().as_str()) {
                return Err(Error::parse(ln, format!("expected 'element {a}'")));
            }
            let mut m = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                let (ln, row) = lines
                    .next()
                    .ok_or_else(|| Error::parse(ln, format!("element {a} is truncated")))?;
                let toks: Vec<&str> = row.split_whitespace().collect();
                if toks.len() != n {
                    return Err(Error::parse(ln, format!("expected {n} entries")));
                }
                for (j, t) in toks.iter().enumerate() {
                    m[(i, j)] = parse_complex(t)
                        .ok_or_else(|| Error::parse(ln, format!("bad complex entry '{t}'")))?;
                }
            }
            let h = HermitianMatrix::new(m)
                .map_err(|e| Error::parse(ln, format!("element {a}: {e}")))?;
            elements.push(h);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::parse(ln, "trailing content after last element"));
        }
        Self::custom(elements)
    }
}

pub(crate) fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{}{:?}i", z.re, sign, z.im.abs())
}

/// Parses `re+imi`, `re-imi`, a bare real, or a bare imaginary `imi`.
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| matches!(bytes[p], b'+' | b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    match split {
        Some(p) => {
            let re: f64 = body[..p].parse().ok()?;
            let im: f64 = body[p..].parse().ok()?;
            Some(Complex64::new(re, im))
        }
        None => body.parse().ok().map(|im| Complex64::new(0.0, im)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StdPart {
    Diag,
    Sym,
    Anti,
}

fn standard_label(n: usize, a: usize) -> (usize, usize, StdPart) {
    if a < n {
        return (a, a, StdPart::Diag);
    }
    let pairs = n * (n - 1) / 2;
    let (part, mut rank) = if a < n + pairs {
        (StdPart::Sym, a - n)
    } else {
        (StdPart::Anti, a - n - pairs)
    };
    let mut i = 0;
    loop {
        let row_len = n - 1 - i;
        if rank < row_len {
            return (i, i + 1 + rank, part);
        }
        rank -= row_len;
        i += 1;
    }
}

fn standard_element(n: usize, a: usize) -> SparseElement {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match standard_label(n, a) {
        (i, _, StdPart::Diag) => SparseElement {
            entries: vec![(i, i, Complex64::new(1.0, 0.0))],
        },
        (i, j, StdPart::Sym) => SparseElement {
            entries: vec![
                (i, j, Complex64::new(s, 0.0)),
                (j, i, Complex64::new(s, 0.0)),
            ],
        },
        (i, j, StdPart::Anti) => SparseElement {
            entries: vec![
                (i, j, Complex64::new(0.0, s)),
                (j, i, Complex64::new(0.0, -s)),
            ],
        },
    }
}

pub(crate) fn popcount(x: usize) -> u32 {
    x.count_ones()
}

pub(crate) fn i_pow(e: u32) -> Complex64 {
    match e % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Unnormalized Pauli word `w(p, q)` on `n = 2^k`: entry `(j⊕q, j)` is
/// `i^{|p∧q|} (−1)^{|p∧(j⊕q)|}`.
pub(crate) fn pauli_entries(n: usize, p: usize, q: usize, scale: f64) -> SparseElement {
    let base = i_pow(popcount(p & q)) * scale;
    SparseElement::sorted(
        (0..n)
            .map(|j| {
                let row = j ^ q;
                let v = if popcount(p & row) % 2 == 1 {
                    -base
                } else {
                    base
                };
                (row, j, v)
            })
            .collect(),
    )
}

fn pauli_element(n: usize, a: usize) -> SparseElement {
    pauli_entries(n, a / n, a % n, 1.0 / (n as f64).sqrt())
}

/// Maximal deviations found by [`verify_basis`].
#[derive(Clone, Debug, PartialEq)]
pub struct BasisReport {
    /// `max |(wₐ, w_b) − δ_ab|` over the checked pairs.
    pub orthonormality_deviation: f64,
    /// `max |(Σₐ wₐ†wₐ − n·𝟙)_ij|`.
    pub completeness_deviation: f64,
    pub pairs_checked: usize,
    pub exhaustive: bool,
}

impl BasisReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.orthonormality_deviation <= tol && self.completeness_deviation <= tol
    }
}

/// Checks orthonormality (all pairs when `exhaustive` or `n ≤ 8`, otherwise
/// every norm plus 1000 random pairs) and the completeness relation.
pub fn verify_basis(basis: &OperatorBasis, exhaustive: bool) -> BasisReport {
    let n = basis.dim();
    let count = basis.len();
    let all_pairs = exhaustive || n <= 8;
    let elements: Vec<SparseElement> = (0..count)
        .map(|a| basis.sparse_element(a).into_owned())
        .collect();

    let mut ortho = 0.0_f64;
    let mut pairs = 0usize;
    if all_pairs {
        for a in 0..count {
            for b in a..count {
                let target = if a == b { 1.0 } else { 0.0 };
                ortho = ortho.max((elements[a].inner_sparse(&elements[b]) - target).abs());
                pairs += 1;
            }
        }
    } else {
        for e in &elements {
            ortho = ortho.max((e.frobenius_sq() - 1.0).abs());
            pairs += 1;
        }
        let mut rng = StreamId::new(0x6f72_7468, n as u64, 0).rng();
        for _ in 0..1000 {
            let a = rng.gen_range(0..count);
            let b = rng.gen_range(0..count);
            let target = if a == b { 1.0 } else { 0.0 };
            ortho = ortho.max((elements[a].inner_sparse(&elements[b]) - target).abs());
            pairs += 1;
        }
    }

    // Σ w†w: (w†w)_{jl} = Σ_i conj(w_ij) w_il, grouped by row i.
    let mut acc = ComplexMatrix::zeros(n, n);
    for e in &elements {
        let mut start = 0;
        while start < e.entries.len() {
            let row = e.entries[start].0;
            let mut end = start;
            while end < e.entries.len() && e.entries[end].0 == row {
                end += 1;
            }
            for &(_, j, x) in &e.entries[start..end] {
                for &(_, l, y) in &e.entries[start..end] {
                    acc[(j, l)] += x.conj() * y;
                }
            }
            start = end;
        }
    }
    let mut complete = 0.0_f64;
    for j in 0..n {
        for l in 0..n {
            let target = if j == l { n as f64 } else { 0.0 };
            complete = complete.max((acc[(j, l)] - Complex64::new(target, 0.0)).norm());
        }
    }

    BasisReport {
        orthonormality_deviation: ortho,
        completeness_deviation: complete,
        pairs_checked: pairs,
        exhaustive: all_pairs,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoherenceRoute {
    FourierNorm,
    PtAndSign,
}

impl fmt::Display for CoherenceRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoherenceRoute::FourierNorm => "fourier-norm",
            CoherenceRoute::PtAndSign => "pt-and-sign",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceReport {
    pub nu: f64,
    pub route: CoherenceRoute,
    pub rank: usize,
    /// `n · max_a ‖wₐ‖²`.
    pub fourier: f64,
    /// `n/(2r) · max_a ‖𝒫_T wₐ‖₂²`.
    pub tangent: f64,
    /// `n²/r · max_a (wₐ, sign ρ)²`.
    pub sign: f64,
}

/// Smallest `ν` for which the coherence condition holds, taking the better
/// of the operator-norm route and the tangent/sign route.
pub fn coherence(
    rho: &HermitianMatrix,
    basis: &OperatorBasis,
    zero_tol: f64,
) -> Result<CoherenceReport> {
    if rho.dim() != basis.dim() {
        return Err(Error::invalid(
            "dimension mismatch between matrix and basis",
        ));
    }
    if rho.frobenius_norm() == 0.0 {
        return Err(Error::invalid("coherence of the zero matrix"));
    }
    let n = basis.dim() as f64;
    let t = TangentSpace::from_matrix(rho, zero_tol)?;
    let r = t.rank() as f64;
    let sign = matrix_sign(rho, zero_tol)?;
    let pt_max = tangent_overlaps(basis, &t).into_iter().fold(0.0, f64::max);
    let sign_max = basis
        .coefficients(&sign)
        .into_iter()
        .fold(0.0_f64, |m, c| m.max(c * c));
    let fourier = n * basis.fourier_bound();
    let tangent = n / (2.0 * r) * pt_max;
    let sign_nu = n * n / r * sign_max;
    let pt_route = tangent.max(sign_nu);
    let (nu, route) = if fourier <= pt_route {
        (fourier, CoherenceRoute::FourierNorm)
    } else {
        (pt_route, CoherenceRoute::PtAndSign)
    };
    Ok(CoherenceReport {
        nu,
        route,
        rank: t.rank(),
        fourier,
        tangent,
        sign: sign_nu,
    })
}

/// `‖𝒫_T wₐ‖₂²` for every basis element, via
/// `2‖U†w‖₂² − ‖U†wU‖₂²`.
pub fn tangent_overlaps(basis: &OperatorBasis, t: &TangentSpace) -> Vec<f64> {
    let u = t.range_basis();
    let r = t.rank();
    let n = basis.dim();
    (0..basis.len())
        .map(|a| {
            let w = basis.sparse_element(a);
            // uw = U† w, an r × n matrix.
            let mut uw = ComplexMatrix::zeros(r, n);
            for &(i, j, x) in &w.entries {
                for k in 0..r {
                    uw[(k, j)] += u[(i, k)].conj() * x;
                }
            }
            let uwu = &uw * u;
            let a2: f64 = uw.iter().map(|z| z.norm_sqr()).sum();
            let b2: f64 = uwu.iter().map(|z| z.norm_sqr()).sum();
            2.0 * a2 - b2
        })
        .collect()
}

/// `μ(F) = max_a (wₐ, F)²`.
pub fn mu_overlap(f: &HermitianMatrix, basis: &OperatorBasis) -> Result<f64> {
    if f.dim() != basis.dim() {
        return Err(Error::invalid(
            "dimension mismatch between matrix and basis",
        ));
    }
    Ok(basis
        .coefficients(f)
        .into_iter()
        .fold(0.0_f64, |m, c| m.max(c * c)))
}

/// A complex orthonormal basis of all `n × n` matrices, not necessarily
/// Hermitian. Used only through [`ComplexBasis::lift`].
#[derive(Clone, Debug)]
pub enum ComplexBasis {
    /// Matrix units `eᵢeⱼ†`, index `a = i·n + j`.
    Standard { n: usize },
    Custom {
        n: usize,
        elements: Arc<Vec<ComplexMatrix>>,
    },
}

impl ComplexBasis {
    pub fn standard(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("basis dimension must be positive"));
        }
        Ok(ComplexBasis::Standard { n })
    }

    pub fn custom(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let n = elements.first().map(|e| e.nrows()).unwrap_or(0);
        if n == 0 || elements.len() != n * n || elements.iter().any(|e| e.shape() != (n, n)) {
            return Err(Error::invalid("complex basis needs n² square n×n elements"));
        }
        for (a, x) in elements.iter().enumerate() {
            for (b, y) in elements.iter().enumerate().skip(a) {
                let ip = x.dotc(y);
                let target = if a == b { 1.0 } else { 0.0 };
                if (ip - Complex64::new(target, 0.0)).norm() > 1e-8 {
                    return Err(Error::invalid(format!(
                        "elements {a} and {b} are not orthonormal"
                    )));
                }
            }
        }
        Ok(ComplexBasis::Custom {
            n,
            elements: Arc::new(elements),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ComplexBasis::Standard { n } | ComplexBasis::Custom { n, .. } => *n,
        }
    }

    pub fn len(&self) -> usize {
        self.dim() * self.dim()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn element(&self, a: usize) -> ComplexMatrix {
        match self {
            ComplexBasis::Standard { n } => {
                let mut m = ComplexMatrix::zeros(*n, *n);
                m[(a / n, a % n)] = Complex64::new(1.0, 0.0);
                m
            }
            ComplexBasis::Custom { elements, .. } => elements[a].clone(),
        }
    }

    /// `(wₐ, ρ) = tr(wₐ† ρ)`.
    pub fn coefficient(&self, a: usize, rho: &ComplexMatrix) -> Complex64 {
        match self {
            ComplexBasis::Standard { n } => rho[(a / n, a % n)],
            ComplexBasis::Custom { elements, .. } => elements[a].dotc(rho),
        }
    }

    /// The Hermitian basis of `2n × 2n` matrices: `w̃ₐ` for every `a`, then
    /// `(i wₐ)~`, then the Hermitian-standard basis of the upper diagonal
    /// block, then that of the lower block. The first `2n²` elements carry
    /// the data of off-diagonal (lifted) matrices.
    pub fn lift(&self) -> Result<OperatorBasis> {
        let n = self.dim();
        let i = Complex64::new(0.0, 1.0);
        let mut out = Vec::with_capacity(4 * n * n);
        for phase in [Complex64::new(1.0, 0.0), i] {
            for a in 0..self.len() {
                let w = self.element(a) * phase;
                out.push(SparseElement::from_dense(
                    crate::matcore::tilde_embed(&w)?.as_matrix(),
                ));
            }
        }
        for offset in [0, n] {
            for a in 0..n * n {
                let e = standard_element(n, a);
                out.push(SparseElement::sorted(
                    e.entries
                        .into_iter()
                        .map(|(r, c, v)| (r + offset, c + offset, v))
                        .collect(),
                ));
            }
        }
        OperatorBasis::from_sparse(2 * n, out)
    }
}
