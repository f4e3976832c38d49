//! Pauli words over `𝔽₂^k`, stabilizer groups built from the field
//! `𝔽_{2^k}`, and the ambiguous pairs that make few Pauli coefficients
//! insufficient for recovery.
//!
//! Vectors of `𝔽₂^k` are bitmasks: bit `i` is coordinate `i`. A label
//! `(p, q)` corresponds to Pauli basis index `p·n + q`.

use rand::Rng;

use crate::bases::{pauli_entries, popcount, MAX_PAULI_K};
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, HermitianMatrix};
use crate::par::map_range;
use crate::sampling::StreamId;

const DOMAIN_LOWER: u64 = 0x7374_6162_0001;

/// `𝔽_{2^k}` as polynomials over `𝔽₂` modulo an irreducible polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gf2kField {
    k: usize,
    /// Includes the leading `x^k` bit.
    poly: u32,
    /// `gram[i]` has bit `j` set iff `Tr(αⁱ αʲ) = 1`.
    gram: [u32; MAX_PAULI_K],
}

impl Gf2kField {
    /// The pinned polynomial for each `k ≤ 8`.
    pub fn standard(k: usize) -> Result<Self> {
        let poly = match k {
            1 => 0b10,
            2 => 0b111,
            3 => 0b1011,
            4 => 0b1_0011,
            5 => 0b10_0101,
            6 => 0b100_0011,
            7 => 0b1000_0011,
            8 => 0b1_0001_1011,
            _ => return Err(Error::invalid(format!("field degree {k} outside 1..=8"))),
        };
        Self::new(k, poly)
    }

    pub fn new(k: usize, poly: u32) -> Result<Self> {
        if k == 0 || k > MAX_PAULI_K {
            return Err(Error::invalid(format!("field degree {k} outside 1..=8")));
        }
        if poly >> k != 1 {
            return Err(Error::invalid(format!(
                "polynomial {poly:#b} does not have degree {k}"
            )));
        }
        if !is_irreducible(poly) {
            return Err(Error::invalid(format!("polynomial {poly:#b} is reducible")));
        }
        let mut f = Self {
            k,
            poly,
            gram: [0; MAX_PAULI_K],
        };
        for i in 0..k {
            for j in 0..k {
                if f.trace(f.mul(1 << i, 1 << j)) == 1 {
                    f.gram[i] |= 1 << j;
                }
            }
        }
        Ok(f)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    pub fn order(&self) -> usize {
        1 << self.k
    }

    pub fn mul(&self, x: usize, y: usize) -> usize {
        let mut acc: u32 = 0;
        for i in 0..self.k {
            if (y >> i) & 1 == 1 {
                acc ^= (x as u32) << i;
            }
        }
        for d in (self.k..2 * self.k).rev() {
            if (acc >> d) & 1 == 1 {
                acc ^= self.poly << (d - self.k);
            }
        }
        acc as usize
    }

    /// Absolute trace `x + x² + x⁴ + … ∈ {0, 1}`.
    pub fn trace(&self, x: usize) -> usize {
        let mut acc = 0;
        let mut y = x;
        for _ in 0..self.k {
            acc ^= y;
            y = self.mul(y, y);
        }
        debug_assert!(acc <= 1);
        acc
    }

    /// Coordinates of `v` in the trace-dual basis: bit `i` is `Tr(αⁱ v)`.
    pub fn dual_coordinates(&self, v: usize) -> usize {
        (0..self.k)
            .filter(|&i| popcount(self.gram[i] as usize & v) % 2 == 1)
            .fold(0, |acc, i| acc | (1 << i))
    }
}

/// `true` iff no polynomial of degree `1..=deg/2` divides `poly`.
fn is_irreducible(poly: u32) -> bool {
    let deg = 31 - poly.leading_zeros();
    if deg <= 1 {
        return deg == 1;
    }
    (2u32..(1 << (deg / 2 + 1))).all(|d| poly_mod(poly, d) != 0)
}

fn poly_mod(mut a: u32, b: u32) -> u32 {
    let db = 31 - b.leading_zeros();
    while a != 0 && 31 - a.leading_zeros() >= db {
        a ^= b << (31 - a.leading_zeros() - db);
    }
    a
}

pub fn gf2k_mul(field: &Gf2kField, x: usize, y: usize) -> usize {
    field.mul(x, y)
}

/// The unnormalized Pauli word `w(p, q)` on `2^k` dimensions.
pub fn pauli_w(k: usize, p: usize, q: usize) -> HermitianMatrix {
    let n = 1usize << k;
    let mut m = ComplexMatrix::zeros(n, n);
    pauli_entries(n, p, q, 1.0).add_to(&mut m, 1.0);
    HermitianMatrix::new(m).expect("Pauli words are Hermitian")
}

/// Exponent `e` with `w(p,q) w(p',q') = iᵉ w(p⊕p', q⊕q')`.
pub fn pauli_phase(p: usize, q: usize, p2: usize, q2: usize) -> u32 {
    // Per qubit: i^{pq} Z^p X^q · i^{p'q'} Z^{p'} X^{q'}
    //   = i^{pq + p'q' + 2qp'} Z^{p+p'} X^{q+q'}.
    let e = popcount(p & q) as i64 + popcount(p2 & q2) as i64 + 2 * popcount(q & p2) as i64
        - popcount((p ^ p2) & (q ^ q2)) as i64;
    e.rem_euclid(4) as u32
}

/// Whether `w(p,q)` and `w(p',q')` commute.
pub fn commute(p: usize, q: usize, p2: usize, q2: usize) -> bool {
    (popcount(p & q2) + popcount(q & p2)).is_multiple_of(2)
}

/// Pauli basis index of a label.
pub fn label_index(k: usize, p: usize, q: usize) -> usize {
    (p << k) | q
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupElement {
    pub negative: bool,
    pub p: usize,
    pub q: usize,
}

impl GroupElement {
    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }
}

/// An Abelian subgroup of the Pauli group of order `2^k` without `−𝟙`.
/// `elements[c]` is the product of the generators selected by the bits of
/// `c`, multiplied left to right.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerGroup {
    k: usize,
    generators: Vec<GroupElement>,
    elements: Vec<GroupElement>,
}

impl StabilizerGroup {
    pub fn from_generators(k: usize, generators: Vec<GroupElement>) -> Result<Self> {
        if k == 0 || k > MAX_PAULI_K || generators.len() != k {
            return Err(Error::invalid(
                "a stabilizer group on k qubits needs k generators",
            ));
        }
        for (i, a) in generators.iter().enumerate() {
            for b in &generators[i + 1..] {
                if !commute(a.p, a.q, b.p, b.q) {
                    return Err(Error::invalid("generators do not commute"));
                }
            }
        }
        let mut elements = Vec::with_capacity(1 << k);
        for c in 0..(1usize << k) {
            let (mut e, mut p, mut q) = (0u32, 0usize, 0usize);
            for (i, g) in generators.iter().enumerate() {
                if (c >> i) & 1 == 1 {
                    e += pauli_phase(p, q, g.p, g.q) + if g.negative { 2 } else { 0 };
                    p ^= g.p;
                    q ^= g.q;
                }
            }
            debug_assert!(e % 2 == 0, "commuting products carry real phases");
            elements.push(GroupElement {
                negative: e % 4 == 2,
                p,
                q,
            });
        }
        if elements[1..].iter().any(|g| g.p == 0 && g.q == 0) {
            return Err(Error::invalid("generators are not independent"));
        }
        Ok(Self {
            k,
            generators,
            elements,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    /// Pauli basis indices of the elements, in group-coordinate order.
    pub fn labels(&self) -> Vec<usize> {
        self.elements
            .iter()
            .map(|g| label_index(self.k, g.p, g.q))
            .collect()
    }

    /// Group coordinate of the element with the given basis index.
    pub fn coordinate_of(&self, label: usize) -> Option<usize> {
        self.labels().iter().position(|&l| l == label)
    }
}

/// `G_x`, generated by `w(eᵢ, x·eᵢ)` with the second label written in the
/// trace-dual basis so that the generators commute.
pub fn build_stabilizer_group(field: &Gf2kField, x: usize) -> StabilizerGroup {
    let k = field.k();
    let generators = (0..k)
        .map(|i| GroupElement {
            negative: false,
            p: 1 << i,
            q: field.dual_coordinates(field.mul(x, 1 << i)),
        })
        .collect();
    StabilizerGroup::from_generators(k, generators).expect("G_x is a stabilizer group")
}

/// The character `χ_y(g_c) = (−1)^{y·c}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupCharacter {
    pub y: usize,
}

impl GroupCharacter {
    pub fn eval(&self, coordinate: usize) -> f64 {
        if popcount(self.y & coordinate).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// `P(G, χ) = 2^{−k} Σ_g χ(g) g`.
pub fn stabilizer_projector(g: &StabilizerGroup, chi: GroupCharacter) -> HermitianMatrix {
    let n = 1usize << g.k;
    let mut m = ComplexMatrix::zeros(n, n);
    for (c, el) in g.elements.iter().enumerate() {
        let coef = chi.eval(c) * el.sign() / n as f64;
        pauli_entries(n, el.p, el.q, 1.0).add_to(&mut m, coef);
    }
    HermitianMatrix::new(m).expect("real combination of Pauli words")
}

/// Two orthogonal rank-one projectors with equal coefficients on `Ω`.
#[derive(Clone, Debug)]
pub struct AmbiguousPair {
    pub x: usize,
    pub group: StabilizerGroup,
    pub chi1: GroupCharacter,
    pub chi2: GroupCharacter,
    pub p1: HermitianMatrix,
    pub p2: HermitianMatrix,
    /// Group coordinates of the elements whose labels lie in `Ω`.
    pub intersection: Vec<usize>,
}

fn gf2_rank(vectors: &[usize]) -> usize {
    let mut basis: Vec<usize> = Vec::new();
    for &v in vectors {
        let mut v = v;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Scans `G_0, G_1, …` for a group whose elements with labels in `Ω` span a
/// proper subspace, then splits two characters that agree on it.
pub fn find_ambiguous_pair(k: usize, omega: &[usize]) -> Result<Option<AmbiguousPair>> {
    let field = Gf2kField::standard(k)?;
    let n = field.order();
    if let Some(&a) = omega.iter().find(|&&a| a >= n * n) {
        return Err(Error::invalid(format!("label {a} outside [0, {})", n * n)));
    }
    let mut in_omega = vec![false; n * n];
    for &a in omega {
        in_omega[a] = true;
    }
    for x in 0..n {
        let group = build_stabilizer_group(&field, x);
        let intersection: Vec<usize> = group
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, &l)| in_omega[l])
            .map(|(c, _)| c)
            .collect();
        if gf2_rank(&intersection) >= k {
            continue;
        }
        let y = (1..n)
            .find(|&y| {
                intersection
                    .iter()
                    .all(|&c| popcount(y & c).is_multiple_of(2))
            })
            .expect("a proper subspace has a nonzero annihilator");
        let chi1 = GroupCharacter { y: 0 };
        let chi2 = GroupCharacter { y };
        let p1 = stabilizer_projector(&group, chi1);
        let p2 = stabilizer_projector(&group, chi2);
        return Ok(Some(AmbiguousPair {
            x,
            group,
            chi1,
            chi2,
            p1,
            p2,
            intersection,
        }));
    }
    Ok(None)
}

/// `(n − 2) log₂ n`, below which an ambiguous pair always exists.
pub fn ambiguity_threshold(k: usize) -> usize {
    ((1usize << k) - 2) * k
}

/// `1 − n^{−ε²/(2 ln 2 (1 + ε/3))}`.
pub fn lower_bound_probability(k: usize, eps: f64) -> f64 {
    let n = (1usize << k) as f64;
    1.0 - n.powf(-eps * eps / (2.0 * std::f64::consts::LN_2 * (1.0 + eps / 3.0)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundReport {
    pub k: usize,
    pub m: usize,
    pub eps: f64,
    pub trials: usize,
    pub seed: u64,
    /// Fraction of trials where `Ω` meets the labels of `G_0` in fewer than
    /// `k` distinct elements.
    pub frequency: f64,
    /// Fraction of trials where those elements span a proper subspace.
    pub rank_frequency: f64,
    pub half_width: f64,
    pub p_f: f64,
    /// Whether `m ≤ n log₂ n / (1 + ε)`.
    pub within_hypothesis: bool,
}

impl LowerBoundReport {
    pub fn passes(&self) -> bool {
        self.frequency >= self.p_f - self.half_width
    }
}

/// Fixes `P₁ = P(G_0, 1)` and samples `m` labels i.i.d. per trial.
pub fn lower_bound_trial(
    k: usize,
    m: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<LowerBoundReport> {
    if !(eps > 0.0) || trials == 0 {
        return Err(Error::invalid("need eps > 0 and at least one trial"));
    }
    let field = Gf2kField::standard(k)?;
    let n = field.order();
    let group = build_stabilizer_group(&field, 0);
    let mut coord = vec![usize::MAX; n * n];
    for (c, l) in group.labels().into_iter().enumerate() {
        coord[l] = c;
    }
    let outcomes: Vec<(bool, bool)> = map_range(trials, |i| {
        let mut rng = StreamId::new(seed, i as u64, 0)
            .with_domain(DOMAIN_LOWER)
            .rng();
        let mut hit = vec![false; n];
        for _ in 0..m {
            let c = coord[rng.gen_range(0..n * n)];
            if c != usize::MAX {
                hit[c] = true;
            }
        }
        let hits: Vec<usize> = (0..n).filter(|&c| hit[c]).collect();
        (hits.len() < k, gf2_rank(&hits) < k)
    });
    let t = trials as f64;
    let frequency = outcomes.iter().filter(|o| o.0).count() as f64 / t;
    let rank_frequency = outcomes.iter().filter(|o| o.1).count() as f64 / t;
    let nlog = (n * k) as f64;
    Ok(LowerBoundReport {
        k,
        m,
        eps,
        trials,
        seed,
        frequency,
        rank_frequency,
        half_width: 3.0 * (frequency * (1.0 - frequency) / t).sqrt(),
        p_f: lower_bound_probability(k, eps),
        within_hypothesis: m as f64 <= nlog / (1.0 + eps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{i_pow, OperatorBasis};
    use crate::sampling::{SampleSet, SamplingMode};
    use crate::solver::RecoveryProblem;
    use num_complex::Complex64;
    use rand::seq::index;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        a.kronecker(b)
    }

    /// `w(p, q)` from its tensor-product definition; qubit `i` is bit `i`,
    /// the leftmost factor the highest bit.
    fn pauli_kron(k: usize, p: usize, q: usize) -> ComplexMatrix {
        let z = ComplexMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
        let x = ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let id = ComplexMatrix::identity(2, 2);
        let mut out = ComplexMatrix::identity(1, 1);
        for i in (0..k).rev() {
            let (pi, qi) = ((p >> i) & 1, (q >> i) & 1);
            let mut f = if pi == 1 { z.clone() } else { id.clone() };
            if qi == 1 {
                f = &f * &x;
            }
            if pi & qi == 1 {
                f *= c(0., 1.);
            }
            out = kron(&out, &f);
        }
        out
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn field_multiplication_examples() {
        let f = Gf2kField::standard(2).unwrap();
        assert_eq!(gf2k_mul(&f, 0b10, 0b10), 0b11);
        for k in 1..=8 {
            let f = Gf2kField::standard(k).unwrap();
            for x in 0..f.order() {
                assert_eq!(f.mul(x, 0), 0);
                assert_eq!(f.mul(x, 1), x);
            }
        }
    }

    #[test]
    fn every_nonzero_element_is_invertible() {
        for k in 1..=8 {
            let f = Gf2kField::standard(k).unwrap();
            for x in 1..f.order() {
                assert!((1..f.order()).any(|y| f.mul(x, y) == 1), "k={k} x={x}");
            }
        }
    }

    #[test]
    fn reducible_polynomials_are_rejected() {
        // x² + 1 = (x + 1)²; x⁴ + x² + 1 = (x² + x + 1)².
        assert!(Gf2kField::new(2, 0b101).is_err());
        assert!(Gf2kField::new(4, 0b1_0101).is_err());
        assert!(Gf2kField::new(3, 0b111).is_err());
    }

    #[test]
    fn pauli_words_match_tensor_products() {
        assert_eq!(pauli_w(1, 0, 0), HermitianMatrix::identity(2));
        let w11 = pauli_w(1, 1, 1);
        let want =
            ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 1.), c(0., -1.), c(0., 0.)]);
        assert!(close(w11.as_matrix(), &want, 0.0));
        for k in 1..=3 {
            let n = 1 << k;
            for p in 0..n {
                for q in 0..n {
                    assert!(close(
                        pauli_w(k, p, q).as_matrix(),
                        &pauli_kron(k, p, q),
                        1e-15
                    ));
                }
            }
        }
    }

    #[test]
    fn pauli_algebra_k2_exhaustive() {
        let k = 2;
        let n = 4;
        for p in 0..n {
            for q in 0..n {
                let a = pauli_w(k, p, q);
                let sq = a.matmul(&a);
                assert!(close(&sq, &ComplexMatrix::identity(n, n), 1e-14));
                for p2 in 0..n {
                    for q2 in 0..n {
                        let b = pauli_w(k, p2, q2);
                        let ab = a.matmul(&b);
                        let tr = ab.trace();
                        let expect = if (p, q) == (p2, q2) { n as f64 } else { 0.0 };
                        assert!((tr - c(expect, 0.0)).norm() < 1e-12);
                        let lam = i_pow(pauli_phase(p, q, p2, q2));
                        let rhs = pauli_w(k, p ^ p2, q ^ q2).as_matrix() * lam;
                        assert!(close(&ab, &rhs, 1e-13), "phase at {p},{q},{p2},{q2}");
                        let ba = b.matmul(&a);
                        let s = if commute(p, q, p2, q2) { 1.0 } else { -1.0 };
                        assert!(close(&ab, &(ba * c(s, 0.0)), 1e-13));
                    }
                }
            }
        }
    }

    #[test]
    fn pauli_algebra_random_k3_k4() {
        let mut rng = StreamId::new(9, 0, 0).rng();
        for k in [3, 4] {
            let n = 1 << k;
            for _ in 0..40 {
                let (p, q, p2, q2) = (
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                );
                let ab = pauli_w(k, p, q).matmul(&pauli_w(k, p2, q2));
                let rhs = pauli_w(k, p ^ p2, q ^ q2).as_matrix() * i_pow(pauli_phase(p, q, p2, q2));
                assert!(close(&ab, &rhs, 1e-12));
            }
        }
    }

    #[test]
    fn k1_group_and_projectors() {
        let f = Gf2kField::standard(1).unwrap();
        let g = build_stabilizer_group(&f, 0);
        assert_eq!(g.labels(), vec![0, 2]);
        let p0 = stabilizer_projector(&g, GroupCharacter { y: 0 });
        let p1 = stabilizer_projector(&g, GroupCharacter { y: 1 });
        assert_eq!(p0, HermitianMatrix::from_diagonal(&[1.0, 0.0]));
        assert_eq!(p1, HermitianMatrix::from_diagonal(&[0.0, 1.0]));
        assert_eq!(p0.inner(&p1), 0.0);
    }

    fn check_invariants(g: &StabilizerGroup) {
        let els = g.elements();
        assert_eq!(els.len(), 1 << g.k());
        for a in els {
            for b in els {
                assert!(commute(a.p, a.q, b.p, b.q));
            }
        }
        assert!(!els.iter().any(|e| e.p == 0 && e.q == 0 && e.negative));
        // Element table is closed and matches matrix products.
        let k = g.k();
        let mat = |e: &GroupElement| pauli_w(k, e.p, e.q).as_matrix() * c(e.sign(), 0.0);
        for (i, a) in els.iter().enumerate() {
            for (j, b) in els.iter().enumerate() {
                let prod = mat(a) * mat(b);
                assert!(close(&prod, &mat(&els[i ^ j]), 1e-12));
            }
        }
    }

    #[test]
    fn groups_satisfy_invariants() {
        for k in 1..=3 {
            let f = Gf2kField::standard(k).unwrap();
            for x in 0..f.order() {
                check_invariants(&build_stabilizer_group(&f, x));
            }
        }
    }

    #[test]
    fn distinct_groups_meet_only_in_identity() {
        for k in 1..=6 {
            let f = Gf2kField::standard(k).unwrap();
            let groups: Vec<Vec<usize>> = (0..f.order())
                .map(|x| build_stabilizer_group(&f, x).labels())
                .collect();
            for a in 0..groups.len() {
                for b in (a + 1)..groups.len() {
                    let common: Vec<_> =
                        groups[a].iter().filter(|l| groups[b].contains(l)).collect();
                    assert_eq!(common, vec![&0]);
                }
            }
        }
    }

    #[test]
    fn projectors_are_orthogonal_rank_one() {
        for k in 1..=3 {
            let f = Gf2kField::standard(k).unwrap();
            let n = f.order();
            for x in 0..n {
                let g = build_stabilizer_group(&f, x);
                let ps: Vec<_> = (0..n)
                    .map(|y| stabilizer_projector(&g, GroupCharacter { y }))
                    .collect();
                for (i, a) in ps.iter().enumerate() {
                    assert!((a.trace() - 1.0).abs() < 1e-12);
                    assert!(close(&a.matmul(a), a.as_matrix(), 1e-12));
                    for (j, b) in ps.iter().enumerate() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((a.inner(b) - want).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn characters_are_multiplicative() {
        let f = Gf2kField::standard(3).unwrap();
        let g = build_stabilizer_group(&f, 5);
        for y in 0..8 {
            let chi = GroupCharacter { y };
            for a in 0..g.elements().len() {
                for b in 0..g.elements().len() {
                    assert_eq!(chi.eval(a ^ b), chi.eval(a) * chi.eval(b));
                }
            }
        }
    }

    fn max_coefficient_gap(k: usize, omega: &[usize], pair: &AmbiguousPair) -> f64 {
        let basis = OperatorBasis::pauli(k).unwrap();
        omega
            .iter()
            .map(|&a| (basis.coefficient(a, &pair.p1) - basis.coefficient(a, &pair.p2)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn empty_omega_gives_a_pair() {
        let pair = find_ambiguous_pair(3, &[]).unwrap().unwrap();
        assert_eq!(pair.x, 0);
        assert!(pair.p1.inner(&pair.p2).abs() < 1e-12);
    }

    #[test]
    fn k2_all_small_sets_are_ambiguous() {
        for a in 0..16 {
            for b in (a + 1)..16 {
                for c in (b + 1)..16 {
                    let omega = [a, b, c];
                    let pair = find_ambiguous_pair(2, &omega).unwrap().expect("pair");
                    assert!(max_coefficient_gap(2, &omega, &pair) <= 1e-12);
                    assert!(pair.p1.inner(&pair.p2).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ambiguous_pair_defeats_the_recovery_program() {
        let k = 3;
        let n = 8;
        let mut rng = StreamId::new(4, 0, 0).rng();
        let m = ambiguity_threshold(k) - 1;
        let omega = index::sample(&mut rng, n * n, m).into_vec();
        let pair = find_ambiguous_pair(k, &omega).unwrap().unwrap();
        let set = SampleSet::from_indices(
            n,
            omega,
            SamplingMode::WithoutReplacement,
            StreamId::new(4, 0, 0),
        )
        .unwrap();
        let problem =
            RecoveryProblem::from_sample(OperatorBasis::pauli(k).unwrap(), &set, &pair.p1).unwrap();
        assert!(problem.constraint_residual(&pair.p2) < 1e-12);
        assert!((pair.p1.nuclear_norm() - 1.0).abs() < 1e-10);
        assert!((pair.p2.nuclear_norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lower_bound_extremes() {
        let r = lower_bound_trial(3, 0, 1.0, 50, 1).unwrap();
        assert_eq!(r.frequency, 1.0);
        let r = lower_bound_trial(4, 640, 1.0, 200, 1).unwrap();
        assert!(r.frequency < 0.05, "{r:?}");
        assert!(!r.within_hypothesis);
    }

    #[test]
    fn lower_bound_probability_value() {
        let e: f64 = 1.0 / (2.0 * std::f64::consts::LN_2 * (4.0 / 3.0));
        assert!((lower_bound_probability(4, 1.0) - (1.0 - 16f64.powf(-e))).abs() < 1e-15);
    }
}
