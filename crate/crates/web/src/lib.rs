//! WebAssembly bindings for the static demo page in `www/`. Each exported
//! function returns a JSON string.

use lrmr::bases::{coherence, BasisKind, OperatorBasis};
use lrmr::harness::{random_test_matrix, sample_problem};
use lrmr::matcore::DEFAULT_ZERO_TOL;
use lrmr::sampling::{draw_omega_stream, SamplingMode, SpectrumKind, StreamId};
use lrmr::solver::{recover, SolverConfig};
use lrmr::stabilizer::find_ambiguous_pair;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_DEMO_QUBITS: usize = 4;

#[derive(Serialize, Debug)]
pub struct RecoverOutcome {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub distinct: usize,
    pub relative_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub true_eigenvalues: Vec<f64>,
    pub recovered_eigenvalues: Vec<f64>,
}

#[derive(Serialize, Debug)]
pub struct CoherenceOutcome {
    pub basis: String,
    pub n: usize,
    pub r: usize,
    pub nu: f64,
    pub route: String,
    pub fourier: f64,
    pub tangent: f64,
    pub sign: f64,
}

#[derive(Serialize, Debug)]
pub struct StabilizerOutcome {
    pub k: usize,
    pub omega: Vec<usize>,
    pub found: bool,
    pub x: Option<usize>,
    /// Elements of the chosen group as `(sign, p, q)` with bit strings.
    pub group: Vec<(char, String, String)>,
    /// Group coordinates of the elements whose labels lie in `Ω`.
    pub intersection: Vec<usize>,
    pub residual: Option<f64>,
    pub overlap: Option<f64>,
}

fn leading(values: Vec<f64>, count: usize) -> Vec<f64> {
    let mut v = values;
    v.sort_by(|a, b| b.total_cmp(a));
    v.truncate(count);
    v
}

/// Samples `m` Pauli coefficients of a random rank-`r` matrix on `k` qubits
/// and solves the nuclear-norm program.
pub fn recover_random(
    k: usize,
    r: usize,
    m: usize,
    without_replacement: bool,
    seed: u64,
) -> Result<RecoverOutcome, String> {
    if k == 0 || k > MAX_DEMO_QUBITS {
        return Err(format!("qubits must be between 1 and {MAX_DEMO_QUBITS}"));
    }
    let n = 1 << k;
    if r == 0 || r > n {
        return Err(format!("rank must be between 1 and {n}"));
    }
    let mode = if without_replacement {
        SamplingMode::WithoutReplacement
    } else {
        SamplingMode::Iid
    };
    let rho = random_test_matrix(n, r, SpectrumKind::Flat, seed);
    let basis = OperatorBasis::pauli(k).map_err(|e| e.to_string())?;
    let (problem, omega) = sample_problem(basis, &rho, m, mode, seed).map_err(|e| e.to_string())?;
    let cfg = SolverConfig {
        max_iterations: 5000,
        ..Default::default()
    };
    let res = recover(&problem, &cfg).map_err(|e| e.to_string())?;
    let relative_error = (&res.sigma - &rho).frobenius_norm() / rho.frobenius_norm();
    Ok(RecoverOutcome {
        n,
        r,
        m,
        distinct: omega.distinct().len(),
        relative_error,
        iterations: res.iterations,
        converged: res.converged,
        true_eigenvalues: leading(rho.eig().eigenvalues.clone(), r + 2),
        recovered_eigenvalues: leading(res.sigma.eig().eigenvalues.clone(), r + 2),
    })
}

pub fn coherence_random(
    basis: &str,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<CoherenceOutcome, String> {
    let kind: BasisKind = basis.parse().map_err(|e: lrmr::Error| e.to_string())?;
    if !(1..=32).contains(&n) || r == 0 || r > n {
        return Err("need 1 ≤ r ≤ n ≤ 32".into());
    }
    let b = OperatorBasis::by_kind(kind, n).map_err(|e| e.to_string())?;
    let rho = random_test_matrix(n, r, SpectrumKind::Random, seed);
    let rep = coherence(&rho, &b, DEFAULT_ZERO_TOL).map_err(|e| e.to_string())?;
    Ok(CoherenceOutcome {
        basis: kind.to_string(),
        n,
        r,
        nu: rep.nu,
        route: rep.route.to_string(),
        fourier: rep.fourier,
        tangent: rep.tangent,
        sign: rep.sign,
    })
}

/// Draws `omega_size` distinct Pauli labels and looks for two orthogonal
/// stabilizer states with identical coefficients on them.
pub fn stabilizer_pair(
    k: usize,
    omega_size: usize,
    seed: u64,
) -> Result<StabilizerOutcome, String> {
    if k == 0 || k > MAX_DEMO_QUBITS {
        return Err(format!("qubits must be between 1 and {MAX_DEMO_QUBITS}"));
    }
    let n = 1 << k;
    let omega = draw_omega_stream(
        n,
        omega_size,
        SamplingMode::WithoutReplacement,
        StreamId::new(seed, 0, 0),
    )
    .map_err(|e| e.to_string())?;
    let mut labels = omega.indices.clone();
    labels.sort_unstable();
    let pair = find_ambiguous_pair(k, &labels).map_err(|e| e.to_string())?;
    let bits = |v: usize| format!("{v:0k$b}");
    Ok(match pair {
        Some(p) => {
            let basis = OperatorBasis::pauli(k).map_err(|e| e.to_string())?;
            let residual = labels
                .iter()
                .map(|&a| (basis.coefficient(a, &p.p1) - basis.coefficient(a, &p.p2)).abs())
                .fold(0.0, f64::max);
            StabilizerOutcome {
                k,
                found: true,
                x: Some(p.x),
                group: p
                    .group
                    .elements()
                    .iter()
                    .map(|e| (if e.negative { '-' } else { '+' }, bits(e.p), bits(e.q)))
                    .collect(),
                intersection: p.intersection.clone(),
                residual: Some(residual),
                overlap: Some(p.p1.inner(&p.p2)),
                omega: labels,
            }
        }
        None => StabilizerOutcome {
            k,
            omega: labels,
            found: false,
            x: None,
            group: Vec::new(),
            intersection: Vec::new(),
            residual: None,
            overlap: None,
        },
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_with_full_information() {
        let out = recover_random(2, 1, 16, true, 3).unwrap();
        assert!(out.relative_error < 1e-6, "{out:?}");
        assert_eq!(out.distinct, 16);
    }

    #[test]
    fn pauli_coherence_is_optimal() {
        let out = coherence_random("pauli", 8, 2, 1).unwrap();
        assert!((out.fourier - 1.0).abs() < 1e-12);
        assert!(out.nu <= 1.0 + 1e-12);
        assert!(coherence_random("nope", 8, 2, 1).is_err());
    }

    #[test]
    fn stabilizer_pair_matches_on_omega() {
        let out = stabilizer_pair(3, 10, 7).unwrap();
        assert!(out.found);
        assert_eq!(out.group.len(), 8);
        assert!(out.residual.unwrap() <= 1e-10);
        assert!(out.overlap.unwrap().abs() <= 1e-10);
        let json = serde_json::to_string(&out).unwrap();
        assert!(json.contains("\"found\":true"));
    }

    #[test]
    fn rejects_large_demos() {
        assert!(recover_random(6, 1, 10, false, 0).is_err());
        assert!(stabilizer_pair(0, 1, 0).is_err());
    }
}

#[wasm_bindgen(start)]
pub fn start() {
    console_error_panic_hook::set_once();
}

#[wasm_bindgen(js_name = recoverRandom)]
pub fn recover_random_js(
    k: usize,
    r: usize,
    m: usize,
    without_replacement: bool,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(recover_random(k, r, m, without_replacement, seed.into()))
}

#[wasm_bindgen(js_name = coherenceRandom)]
pub fn coherence_random_js(basis: &str, n: usize, r: usize, seed: u32) -> Result<String, JsValue> {
    to_js(coherence_random(basis, n, r, seed.into()))
}

#[wasm_bindgen(js_name = stabilizerPair)]
pub fn stabilizer_pair_js(k: usize, omega_size: usize, seed: u32) -> Result<String, JsValue> {
    to_js(stabilizer_pair(k, omega_size, seed.into()))
}
