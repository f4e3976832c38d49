//! Coefficient index sets Ω, the sampling operator ℛ, batches, and the
//! seeded random streams every experiment draws from.
//!
//! Indices are 0-based in the API and 1-based in the text format.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bases::OperatorBasis;
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, HermitianMatrix};

/// Identifies an independent random stream. Each distinct
/// `(seed, trial, batch, domain)` keys its own ChaCha8 generator, so streams
/// never overlap regardless of how many words each consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamId {
    pub seed: u64,
    pub trial: u64,
    pub batch: u64,
    pub domain: u64,
}

impl StreamId {
    pub const fn new(seed: u64, trial: u64, batch: u64) -> Self {
        Self {
            seed,
            trial,
            batch,
            domain: 0,
        }
    }

    /// Same coordinates, separate purpose (e.g. matrix vs. index draws).
    pub const fn with_domain(self, domain: u64) -> Self {
        Self { domain, ..self }
    }

    pub const fn with_batch(self, batch: u64) -> Self {
        Self { batch, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.trial.to_le_bytes());
        key[16..24].copy_from_slice(&self.batch.to_le_bytes());
        key[24..32].copy_from_slice(&self.domain.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}",
            self.seed, self.trial, self.batch, self.domain
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SamplingMode {
    Iid,
    WithoutReplacement,
}

impl SamplingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplingMode::Iid => "iid",
            SamplingMode::WithoutReplacement => "without-replacement",
        }
    }
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" | "with-replacement" => Ok(SamplingMode::Iid),
            "without-replacement" | "wor" => Ok(SamplingMode::WithoutReplacement),
            other => Err(Error::invalid(format!("unknown sampling mode '{other}'"))),
        }
    }
}

/// A multiset Ω of basis indices in `[0, n²)`, in draw order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    pub n: usize,
    pub indices: Vec<usize>,
    pub mode: SamplingMode,
    pub stream: StreamId,
}

impl SampleSet {
    /// Wraps explicit indices, checking range and the no-repeat rule.
    pub fn from_indices(
        n: usize,
        indices: Vec<usize>,
        mode: SamplingMode,
        stream: StreamId,
    ) -> Result<Self> {
        let n2 = n * n;
        if let Some(&bad) = indices.iter().find(|&&a| a >= n2) {
            return Err(Error::invalid(format!("index {bad} outside [0, {n2})")));
        }
        let set = Self {
            n,
            indices,
            mode,
            stream,
        };
        if mode == SamplingMode::WithoutReplacement && set.max_multiplicity() > 1 {
            return Err(Error::invalid(
                "repeated index in a without-replacement set",
            ));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Index → multiplicity, ascending by index.
    pub fn multiplicities(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for &a in &self.indices {
            *out.entry(a).or_insert(0) += 1;
        }
        out
    }

    /// Distinct indices, ascending.
    pub fn distinct(&self) -> Vec<usize> {
        self.multiplicities().into_keys().collect()
    }

    pub fn max_multiplicity(&self) -> usize {
        self.multiplicities().into_values().max().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "omega v1 n={} m={} mode={} seed={} stream={}.{}.{}\n",
            self.n,
            self.len(),
            self.mode,
            self.stream.seed,
            self.stream.trial,
            self.stream.batch,
            self.stream.domain
        );
        let body: Vec<String> = self.indices.iter().map(|a| (a + 1).to_string()).collect();
        s.push_str(&body.join(" "));
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty omega file"))?;
        let fields = parse_header(header, "omega", hl + 1)?;
        let get = |k: &str| {
            fields
                .get(k)
                .ok_or_else(|| Error::parse(hl + 1, format!("missing header key '{k}'")))
        };
        let n: usize = parse_num(get("n")?, hl + 1)?;
        let m: usize = parse_num(get("m")?, hl + 1)?;
        let mode: SamplingMode = get("mode")?
            .parse()
            .map_err(|e: Error| Error::parse(hl + 1, e.to_string()))?;
        let seed: u64 = parse_num(get("seed")?, hl + 1)?;
        let mut stream = StreamId::new(seed, 0, 0);
        if let Some(s) = fields.get("stream") {
            let parts: Vec<u64> = s
                .split('.')
                .map(|p| parse_num(p, hl + 1))
                .collect::<Result<_>>()?;
            if parts.len() != 3 {
                return Err(Error::parse(hl + 1, "stream must be trial.batch.domain"));
            }
            stream = StreamId::new(seed, parts[0], parts[1]).with_domain(parts[2]);
        }
        let mut indices = Vec::with_capacity(m);
        for (ln, line) in lines {
            for tok in line.split_whitespace() {
                let a: usize = parse_num(tok, ln + 1)?;
                if a == 0 || a > n * n {
                    return Err(Error::parse(
                        ln + 1,
                        format!("index {a} outside [1, {}]", n * n),
                    ));
                }
                indices.push(a - 1);
            }
        }
        if indices.len() != m {
            return Err(Error::parse(
                hl + 1,
                format!("header says m={m} but {} indices follow", indices.len()),
            ));
        }
        Self::from_indices(n, indices, mode, stream)
    }
}

pub(crate) fn parse_header(
    line: &str,
    magic: &str,
    lineno: usize,
) -> Result<BTreeMap<String, String>> {
    let mut toks = line.split_whitespace();
    if toks.next() != Some(magic) || toks.next() != Some("v1") {
        return Err(Error::parse(
            lineno,
            format!("expected '{magic} v1' header"),
        ));
    }
    let mut out = BTreeMap::new();
    for t in toks {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| Error::parse(lineno, format!("malformed header field '{t}'")))?;
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

pub(crate) fn parse_num<T: FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(lineno, format!("cannot parse number '{s}'")))
}

/// Draws `m` indices from `[0, n²)` using the stream `(seed, 0, 0)`.
pub fn draw_omega(n: usize, m: usize, mode: SamplingMode, seed: u64) -> Result<SampleSet> {
    draw_omega_stream(n, m, mode, StreamId::new(seed, 0, 0))
}

pub fn draw_omega_stream(
    n: usize,
    m: usize,
    mode: SamplingMode,
    stream: StreamId,
) -> Result<SampleSet> {
    let n2 = n * n;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let mut rng = stream.rng();
    let indices = match mode {
        SamplingMode::Iid => (0..m).map(|_| rng.gen_range(0..n2)).collect(),
        SamplingMode::WithoutReplacement => {
            if m > n2 {
                return Err(Error::invalid(format!(
                    "cannot draw {m} distinct indices from {n2}"
                )));
            }
            index::sample(&mut rng, n2, m).into_vec()
        }
    };
    Ok(SampleSet {
        n,
        indices,
        mode,
        stream,
    })
}

/// `ℛσ = (n²/m) Σᵢ w_{Aᵢ} (w_{Aᵢ}, σ)`, multiplicities included.
pub fn apply_r(
    omega: &SampleSet,
    basis: &OperatorBasis,
    sigma: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    if omega.is_empty() {
        return Err(Error::invalid("sampling operator of an empty set"));
    }
    let n = basis.dim();
    if sigma.dim() != n || omega.n != n {
        return Err(Error::invalid("dimension mismatch in sampling operator"));
    }
    let scale = basis.len() as f64 / omega.len() as f64;
    let mut out = HermitianMatrix::zeros(n);
    for (a, mult) in omega.multiplicities() {
        let c = basis.coefficient(a, sigma);
        basis.add_element(&mut out, a, scale * mult as f64 * c);
    }
    Ok(out)
}

/// Batch sizes `m₁ … m_l` with cumulative offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchPlan {
    pub sizes: Vec<usize>,
}

impl BatchPlan {
    pub fn new(sizes: Vec<usize>) -> Self {
        Self { sizes }
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Start offset of each batch, followed by the total.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.sizes.len() + 1);
        let mut acc = 0;
        out.push(0);
        for s in &self.sizes {
            acc += s;
            out.push(acc);
        }
        out
    }
}

/// Cuts `draws` into contiguous batches following `plan`.
pub fn split_batches(draws: &SampleSet, plan: &BatchPlan) -> Result<Vec<SampleSet>> {
    if plan.total() != draws.len() {
        return Err(Error::invalid(format!(
            "batch plan covers {} draws but the set has {}",
            plan.total(),
            draws.len()
        )));
    }
    let offs = plan.offsets();
    Ok(offs
        .windows(2)
        .enumerate()
        .map(|(i, w)| SampleSet {
            n: draws.n,
            indices: draws.indices[w[0]..w[1]].to_vec(),
            mode: draws.mode,
            stream: draws.stream.with_batch(draws.stream.batch + i as u64),
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumKind {
    /// All nonzero eigenvalues equal to `1/√r`.
    Flat,
    /// Uniform(0.2, 1) eigenvalues rescaled to unit Frobenius norm.
    Random,
}

impl FromStr for SpectrumKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(SpectrumKind::Flat),
            "random" => Ok(SpectrumKind::Random),
            other => Err(Error::invalid(format!("unknown spectrum '{other}'"))),
        }
    }
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectrumKind::Flat => "flat",
            SpectrumKind::Random => "random",
        })
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows × cols` matrix of i.i.d. standard complex Gaussians.
pub fn random_complex<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// A GUE-like random Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    HermitianMatrix::symmetrized(random_complex(n, n, rng))
}

/// `n × r` matrix with Haar-distributed orthonormal columns.
pub fn haar_isometry<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_complex(n, r, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let rmat = qr.r();
    for j in 0..r {
        let d = rmat[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Random positive semidefinite rank-`r` matrix with `‖ρ‖₂ = 1`.
pub fn random_rank_r<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    spectrum: SpectrumKind,
    rng: &mut R,
) -> HermitianMatrix {
    assert!(r >= 1 && r <= n, "rank must lie in [1, n]");
    let u = haar_isometry(n, r, rng);
    let mut lambda: Vec<f64> = match spectrum {
        SpectrumKind::Flat => vec![1.0; r],
        SpectrumKind::Random => (0..r).map(|_| rng.gen_range(0.2..1.0)).collect(),
    };
    let norm = lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
    lambda.iter_mut().for_each(|l| *l /= norm);
    let mut w = u.clone();
    for (j, l) in lambda.iter().enumerate() {
        let mut col = w.column_mut(j);
        col *= Complex64::new(*l, 0.0);
    }
    HermitianMatrix::symmetrized(w * u.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| StreamId::new(1, 2, 3).rng().gen()).collect();
        let b: Vec<u64> = (0..4).map(|_| StreamId::new(1, 2, 3).rng().gen()).collect();
        assert_eq!(a, b);
        let x: u64 = StreamId::new(1, 2, 3).rng().gen();
        let y: u64 = StreamId::new(1, 2, 4).rng().gen();
        let z: u64 = StreamId::new(1, 2, 3).with_domain(1).rng().gen();
        assert_ne!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn draw_examples() {
        assert!(draw_omega(4, 0, SamplingMode::Iid, 1).unwrap().is_empty());
        let full = draw_omega(3, 9, SamplingMode::WithoutReplacement, 5).unwrap();
        let mut sorted = full.indices.clone();
        sorted.sort();
        assert_eq!(sorted, (0..9).collect::<Vec<_>>());
        assert!(draw_omega(3, 10, SamplingMode::WithoutReplacement, 5).is_err());
        let again = draw_omega(3, 9, SamplingMode::WithoutReplacement, 5).unwrap();
        assert_eq!(full, again);
    }

    #[test]
    fn iid_frequencies_are_binomial() {
        let m = 10_000;
        let omega = draw_omega(4, m, SamplingMode::Iid, 99).unwrap();
        let p = 1.0 / 16.0;
        let mean = m as f64 * p;
        let sd = (m as f64 * p * (1.0 - p)).sqrt();
        let counts = omega.multiplicities();
        assert_eq!(counts.len(), 16);
        for c in counts.values() {
            assert!((*c as f64 - mean).abs() <= 5.0 * sd, "count {c}");
        }
    }

    #[test]
    fn split_examples() {
        let draws = SampleSet::from_indices(
            3,
            vec![0, 1, 2, 3, 4],
            SamplingMode::Iid,
            StreamId::new(0, 0, 0),
        )
        .unwrap();
        let parts = split_batches(&draws, &BatchPlan::new(vec![3, 2])).unwrap();
        assert_eq!(parts[0].indices, vec![0, 1, 2]);
        assert_eq!(parts[1].indices, vec![3, 4]);
        let empty =
            SampleSet::from_indices(3, vec![], SamplingMode::Iid, StreamId::new(0, 0, 0)).unwrap();
        assert!(split_batches(&empty, &BatchPlan::new(vec![]))
            .unwrap()
            .is_empty());
        assert!(split_batches(&draws, &BatchPlan::new(vec![3])).is_err());
        assert_eq!(BatchPlan::new(vec![3, 2]).offsets(), vec![0, 3, 5]);
    }

    #[test]
    fn omega_text_roundtrip() {
        let omega = draw_omega_stream(4, 12, SamplingMode::Iid, StreamId::new(7, 3, 1)).unwrap();
        let text = omega.to_text();
        assert!(text.starts_with("omega v1 n=4 m=12 mode=iid seed=7"));
        assert_eq!(SampleSet::from_text(&text).unwrap(), omega);
        let plain = "omega v1 n=2 m=3 mode=iid seed=4\n1 4 4\n";
        let parsed = SampleSet::from_text(plain).unwrap();
        assert_eq!(parsed.indices, vec![0, 3, 3]);
        assert!(SampleSet::from_text("omega v1 n=2 m=2 mode=iid seed=4\n1 5\n").is_err());
        assert!(SampleSet::from_text("omega v1 n=2 m=3 mode=iid seed=4\n1 2\n").is_err());
        assert!(
            SampleSet::from_text("omega v1 n=2 m=2 mode=without-replacement seed=4\n1 1\n")
                .is_err()
        );
    }

    #[test]
    fn sampling_operator_examples() {
        let b = OperatorBasis::pauli(2).unwrap();
        let mut rng = StreamId::new(8, 0, 0).rng();
        let sigma = random_hermitian(4, &mut rng);
        let full = SampleSet::from_indices(
            4,
            (0..16).collect(),
            SamplingMode::WithoutReplacement,
            StreamId::new(0, 0, 0),
        )
        .unwrap();
        assert!((&apply_r(&full, &b, &sigma).unwrap() - &sigma).frobenius_norm() < 1e-10);

        let rep = SampleSet::from_indices(4, vec![5; 7], SamplingMode::Iid, StreamId::new(0, 0, 0))
            .unwrap();
        let expect = b.element(5).scaled(16.0 * b.coefficient(5, &sigma));
        assert!((&apply_r(&rep, &b, &sigma).unwrap() - &expect).frobenius_norm() < 1e-12);

        let empty =
            SampleSet::from_indices(4, vec![], SamplingMode::Iid, StreamId::new(0, 0, 0)).unwrap();
        assert!(apply_r(&empty, &b, &sigma).is_err());
    }

    #[test]
    fn sampling_operator_is_self_adjoint_and_unbiased() {
        let b = OperatorBasis::hermitian_standard(3).unwrap();
        let mut rng = StreamId::new(9, 0, 0).rng();
        let s1 = random_hermitian(3, &mut rng);
        let s2 = random_hermitian(3, &mut rng);
        let omega = draw_omega(3, 6, SamplingMode::Iid, 4).unwrap();
        let lhs = apply_r(&omega, &b, &s1).unwrap().inner(&s2);
        let rhs = s1.inner(&apply_r(&omega, &b, &s2).unwrap());
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);

        let trials = 2000;
        let mut mean = HermitianMatrix::zeros(3);
        for t in 0..trials {
            let om = draw_omega_stream(3, 5, SamplingMode::Iid, StreamId::new(10, t, 0)).unwrap();
            mean.add_scaled(1.0 / trials as f64, &apply_r(&om, &b, &s1).unwrap());
        }
        // Each entry of R(σ) has variance at most ~n²‖σ‖²/m; 5σ slack.
        let tol = 5.0 * 9.0 * s1.frobenius_norm() / (5.0 * trials as f64).sqrt();
        assert!((&mean - &s1).frobenius_norm() < tol);
    }

    #[test]
    fn deduplicated_constraints_share_a_kernel() {
        let b = OperatorBasis::pauli(2).unwrap();
        let omega = draw_omega(4, 12, SamplingMode::Iid, 21).unwrap();
        let dedup = SampleSet::from_indices(
            4,
            omega.distinct(),
            SamplingMode::WithoutReplacement,
            omega.stream,
        )
        .unwrap();
        let mut rng = StreamId::new(22, 0, 0).rng();
        for _ in 0..20 {
            let mut sigma = random_hermitian(4, &mut rng);
            // Project half the samples onto the common kernel.
            if rng.gen_bool(0.5) {
                for a in omega.distinct() {
                    let c = b.coefficient(a, &sigma);
                    b.add_element(&mut sigma, a, -c);
                }
            }
            let k1 = apply_r(&omega, &b, &sigma).unwrap().frobenius_norm() < 1e-12;
            let k2 = apply_r(&dedup, &b, &sigma).unwrap().frobenius_norm() < 1e-12;
            assert_eq!(k1, k2);
        }
    }

    #[test]
    fn sampling_operator_norm_is_bounded_by_collisions() {
        let b = OperatorBasis::pauli(2).unwrap();
        let omega = draw_omega(4, 10, SamplingMode::Iid, 31).unwrap();
        let bound = 16.0 * omega.max_multiplicity() as f64 / 10.0;
        let mut rng = StreamId::new(32, 0, 0).rng();
        for _ in 0..20 {
            let sigma = random_hermitian(4, &mut rng);
            let ratio =
                apply_r(&omega, &b, &sigma).unwrap().frobenius_norm() / sigma.frobenius_norm();
            assert!(ratio <= bound + 1e-12);
        }
    }

    #[test]
    fn haar_columns_are_orthonormal() {
        let u = haar_isometry(9, 3, &mut StreamId::new(1, 0, 0).rng());
        let g = u.adjoint() * &u;
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g[(i, j)].re, e, epsilon = 1e-12);
                assert_abs_diff_eq!(g[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn random_rank_r_has_requested_shape() {
        for kind in [SpectrumKind::Flat, SpectrumKind::Random] {
            let rho = random_rank_r(8, 3, kind, &mut StreamId::new(2, 0, 0).rng());
            assert_abs_diff_eq!(rho.frobenius_norm(), 1.0, epsilon = 1e-12);
            let spec = rho.eig();
            assert_eq!(spec.rank(), 3);
            assert!(spec.eigenvalues[2] > 0.0);
            if kind == SpectrumKind::Flat {
                assert_abs_diff_eq!(spec.eigenvalues[0], 1.0 / 3f64.sqrt(), epsilon = 1e-10);
            }
        }
    }
}
