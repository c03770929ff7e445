//! Expectation values, qubit-sector projection, entanglement and stabilizers.
//!
//! Register vectors (`qubits: &[C64]`) have length `2^n`; bit `l - 1` of an
//! index is set when atom `l` is in `|e>`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;

use super::{inner, BasisLayout, Level, QuantumState, SparseOperator};
use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn expectation(state: &QuantumState, op: &SparseOperator) -> Result<C64> {
    if op.dim() != state.layout().dim() {
        return Err(Error::DimensionMismatch {
            expected: state.layout().dim(),
            found: op.dim(),
        });
    }
    Ok(expectation_of(state.amplitudes(), op))
}

/// `<psi|O|psi>` on raw amplitudes.
pub fn expectation_of(psi: &[C64], op: &SparseOperator) -> C64 {
    inner(psi, &op.apply_vec(psi))
}

/// Amplitudes on the vacuum, no-`|r>` sector and the weight left outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitProjection {
    pub amplitudes: Vec<C64>,
    pub leak: f64,
}

impl QubitProjection {
    pub fn weight(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Projected amplitudes rescaled to unit norm (zero vector stays zero).
    pub fn normalized(&self) -> Vec<C64> {
        let w = self.weight().sqrt();
        if w == 0.0 {
            return self.amplitudes.clone();
        }
        self.amplitudes.iter().map(|a| a / w).collect()
    }
}

pub fn project_qubit_state(state: &QuantumState) -> QubitProjection {
    project_amplitudes(state.layout(), state.amplitudes())
}

pub fn project_amplitudes(layout: &BasisLayout, psi: &[C64]) -> QubitProjection {
    let n = layout.n_atoms();
    let mut amplitudes = vec![ZERO; 1 << n];
    let mut levels = vec![Level::G; n];
    for (q, slot) in amplitudes.iter_mut().enumerate() {
        for (i, level) in levels.iter_mut().enumerate() {
            *level = if q >> i & 1 == 1 { Level::E } else { Level::G };
        }
        let idx = layout
            .vacuum_index(&levels)
            .expect("g/e levels exist in every layout");
        *slot = psi[idx];
    }
    let total: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    let kept: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    QubitProjection {
        amplitudes,
        leak: (total - kept).max(0.0),
    }
}

fn n_qubits(qubits: &[C64]) -> usize {
    assert!(
        qubits.len().is_power_of_two(),
        "register length must be 2^n"
    );
    qubits.len().trailing_zeros() as usize
}

/// Reduced density operator of qubit `l` (1-based), basis `(g, e)`.
pub fn single_density(qubits: &[C64], l: usize) -> Matrix2<C64> {
    let bit = 1 << (l - 1);
    let mut rho = Matrix2::zeros();
    for x in 0..qubits.len() {
        if x & bit != 0 {
            continue;
        }
        let pair = [qubits[x], qubits[x | bit]];
        for a in 0..2 {
            for b in 0..2 {
                rho[(a, b)] += pair[a] * pair[b].conj();
            }
        }
    }
    rho
}

/// Reduced density operator of qubits `(p, q)`, basis index `bit_p + 2 bit_q`.
pub fn pair_density(qubits: &[C64], p: usize, q: usize) -> Matrix4<C64> {
    assert_ne!(p, q, "pair_density needs two distinct qubits");
    let (bp, bq) = (1usize << (p - 1), 1usize << (q - 1));
    let mut rho = Matrix4::zeros();
    for rest in 0..qubits.len() {
        if rest & (bp | bq) != 0 {
            continue;
        }
        let local = [rest, rest | bp, rest | bq, rest | bp | bq].map(|x| qubits[x]);
        for a in 0..4 {
            for b in 0..4 {
                rho[(a, b)] += local[a] * local[b].conj();
            }
        }
    }
    rho
}

/// Wootters concurrence of a two-qubit density operator (normalized internally).
pub fn concurrence(rho: &Matrix4<C64>) -> f64 {
    let trace = rho.trace().re;
    if trace <= 0.0 {
        return 0.0;
    }
    let rho = rho / C64::new(trace, 0.0);
    let mut yy = Matrix4::<C64>::zeros();
    yy[(0, 3)] = C64::new(-1.0, 0.0);
    yy[(3, 0)] = C64::new(-1.0, 0.0);
    yy[(1, 2)] = C64::new(1.0, 0.0);
    yy[(2, 1)] = C64::new(1.0, 0.0);

    // sqrt(rho) yy conj(sqrt(rho)) has the Wootters lambdas as singular values,
    // which avoids square roots of round-off sized eigenvalues
    let root = hermitian_sqrt(&rho);
    let a = root * yy * root.conjugate();
    let mut lambdas: Vec<f64> = a.singular_values().iter().cloned().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

/// Eigenvalues below this (relative to unit trace) are treated as exact zeros.
const RANK_CUTOFF: f64 = 1e-13;

fn hermitian_sqrt(m: &Matrix4<C64>) -> Matrix4<C64> {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut d = Matrix4::<C64>::zeros();
    for i in 0..4 {
        let v = eig.eigenvalues[i];
        d[(i, i)] = C64::new(if v > RANK_CUTOFF { v.sqrt() } else { 0.0 }, 0.0);
    }
    eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Concurrence between register qubits `p` and `q`, tracing out the rest.
pub fn concurrence_2q(qubits: &[C64], p: usize, q: usize) -> f64 {
    concurrence(&pair_density(qubits, p, q))
}

/// Neighbors of every site (1-based) of an `n`-site ring.
pub fn ring_graph(n: usize) -> Vec<Vec<usize>> {
    (1..=n)
        .map(|l| {
            let prev = if l == 1 { n } else { l - 1 };
            let next = if l == n { 1 } else { l + 1 };
            let mut nbrs = vec![prev, next];
            nbrs.sort_unstable();
            nbrs.dedup();
            nbrs.retain(|&m| m != l);
            nbrs
        })
        .collect()
}

/// `<K_l>` for `K_l = sigma_x(l) prod_{m in graph[l]} sigma_z(m)`, one per site.
pub fn stabilizer_expectations(qubits: &[C64], graph: &[Vec<usize>]) -> Vec<f64> {
    let n = n_qubits(qubits);
    assert_eq!(graph.len(), n, "graph must list neighbors of every qubit");
    graph
        .iter()
        .enumerate()
        .map(|(i, nbrs)| {
            let flip = 1usize << i;
            let mask: usize = nbrs.iter().map(|m| 1usize << (m - 1)).sum();
            let mut acc = ZERO;
            for x in 0..qubits.len() {
                // sigma_z = |e><e| - |g><g|: each neighbor in g contributes -1
                let g_count = (mask & !x).count_ones();
                let sign = if g_count.is_multiple_of(2) { 1.0 } else { -1.0 };
                acc += qubits[x ^ flip].conj() * qubits[x] * sign;
            }
            acc.re
        })
        .collect()
}

/// Ring cluster state `2^{-n/2} prod_l (|g_l> sigma_z(l+1) + |e_l>)`.
///
/// Each `|g_l>` factor picks up the eigenvalue of `sigma_z` on atom `l+1`
/// (with `l + 1` wrapping to 1), so the amplitude of a configuration is
/// `(-1)^(number of ring links with both ends in g)`.
pub fn ring_cluster_state(n: usize) -> Vec<C64> {
    let scale = (0.5f64).powf(n as f64 / 2.0);
    (0..1usize << n)
        .map(|x| {
            let is_e = |l: usize| x >> (l - 1) & 1 == 1;
            let mut amp = scale;
            for l in 1..=n {
                if !is_e(l) {
                    let next = if l == n { 1 } else { l + 1 };
                    if !is_e(next) {
                        amp = -amp;
                    }
                }
            }
            C64::new(amp, 0.0)
        })
        .collect()
}

/// `|<a|b>|^2` without normalization.
pub fn overlap_probability(a: &[C64], b: &[C64]) -> f64 {
    inner(a, b).norm_sqr()
}

/// Result of maximizing an overlap over independent `|e>` phases per qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseAlignment {
    /// `max_phi |<reference| D(phi) |state>|^2`.
    pub fidelity: f64,
    /// Phase applied to `|e_l>` of the state, one per qubit.
    pub phases: Vec<f64>,
}

/// Maximizes `|<reference| prod_l exp(i phi_l |e_l><e_l|) |state>|^2` over the
/// per-qubit phases by coordinate ascent (each coordinate has a closed form).
pub fn phase_optimized_overlap(reference: &[C64], state: &[C64]) -> PhaseAlignment {
    assert_eq!(reference.len(), state.len());
    let n = n_qubits(state);
    let terms: Vec<C64> = reference
        .iter()
        .zip(state)
        .map(|(r, s)| r.conj() * s)
        .collect();
    let mut phases = vec![0.0; n];
    let overlap = |phases: &[f64]| -> C64 {
        terms
            .iter()
            .enumerate()
            .map(|(x, t)| {
                let theta: f64 = (0..n).filter(|i| x >> i & 1 == 1).map(|i| phases[i]).sum();
                t * C64::from_polar(1.0, theta)
            })
            .sum()
    };
    let mut best = overlap(&phases).norm();
    for _sweep in 0..200 {
        let before = best;
        for l in 0..n {
            let (mut a, mut b) = (ZERO, ZERO);
            for (x, t) in terms.iter().enumerate() {
                let theta: f64 = (0..n).filter(|i| x >> i & 1 == 1).map(|i| phases[i]).sum();
                let v = t * C64::from_polar(1.0, theta);
                if x >> l & 1 == 1 {
                    b += v;
                } else {
                    a += v;
                }
            }
            if a.norm() > 0.0 && b.norm() > 0.0 {
                phases[l] += a.arg() - b.arg();
            }
        }
        best = overlap(&phases).norm();
        if best - before <= 1e-15 {
            break;
        }
    }
    PhaseAlignment {
        fidelity: best * best,
        phases,
    }
}

/// Fidelity of a one-qubit density operator to `alpha |g> + e^{i phi} beta |e>`,
/// maximized over the relative phase `phi`.
pub fn phase_optimized_qubit_fidelity(rho: &Matrix2<C64>, alpha: C64, beta: C64) -> f64 {
    let diag = alpha.norm_sqr() * rho[(0, 0)].re + beta.norm_sqr() * rho[(1, 1)].re;
    diag + 2.0 * (alpha.norm() * beta.norm() * rho[(0, 1)].norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::operators::{number, sigma_z};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_and_vacuum_expectations() {
        let layout = BasisLayout::full(2, 1);
        let state = QuantumState::product(layout, &[Level::E, Level::G]).unwrap();
        let id = SparseOperator::identity(layout.dim());
        assert_eq!(expectation(&state, &id).unwrap(), c(1.0, 0.0));
        assert_eq!(
            expectation(&state, &number(&layout, 0).unwrap()).unwrap(),
            c(0.0, 0.0)
        );
        assert!(expectation(&state, &SparseOperator::identity(3)).is_err());
    }

    #[test]
    fn sigma_z_on_equal_superposition() {
        let layout = BasisLayout::qubits(1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let state = QuantumState::new(layout, vec![c(s, 0.0), c(s, 0.0)]).unwrap();
        let z = expectation(&state, &sigma_z(&layout, 1).unwrap()).unwrap();
        assert!(z.norm() < 1e-15);
    }

    #[test]
    fn projection_of_product_and_photon_states() {
        let layout = BasisLayout::full(3, 1);
        let ground = QuantumState::product(layout, &[Level::G; 3]).unwrap();
        let proj = project_qubit_state(&ground);
        assert_eq!(proj.leak, 0.0);
        assert_eq!(proj.amplitudes[0], c(1.0, 0.0));

        let mut label = layout.label(0).unwrap();
        label.photons[0] = 1;
        let photon = QuantumState::basis(layout, layout.index(&label).unwrap()).unwrap();
        let proj = project_qubit_state(&photon);
        assert!(proj.amplitudes.iter().all(|a| *a == c(0.0, 0.0)));
        assert_eq!(proj.leak, 1.0);
    }

    #[test]
    fn concurrence_of_bell_and_product_states() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // (|eg> - i|ge>)/sqrt 2 with p = 1, q = 2: |eg> is index 1, |ge> index 2
        let bell = vec![c(0.0, 0.0), c(s, 0.0), c(0.0, -s), c(0.0, 0.0)];
        assert!((concurrence_2q(&bell, 1, 2) - 1.0).abs() < 1e-12);
        let product = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(concurrence_2q(&product, 1, 2) < 1e-12);
    }

    #[test]
    fn concurrence_traces_out_spectators() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // qubits 1 and 3 entangled, qubit 2 in g
        let mut v = vec![c(0.0, 0.0); 8];
        v[1] = c(s, 0.0);
        v[4] = c(0.0, -s);
        assert!((concurrence_2q(&v, 1, 3) - 1.0).abs() < 1e-12);
        assert!(concurrence_2q(&v, 1, 2) < 1e-12);
    }

    #[test]
    fn cluster_state_is_stabilized() {
        for n in 3..=6 {
            let psi = ring_cluster_state(n);
            let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-14);
            for k in stabilizer_expectations(&psi, &ring_graph(n)) {
                assert!((k - 1.0).abs() < 1e-12, "n = {n}: {k}");
            }
        }
    }

    #[test]
    fn stabilizers_vanish_on_simple_products() {
        let n = 4;
        let mut ground = vec![c(0.0, 0.0); 1 << n];
        ground[0] = c(1.0, 0.0);
        assert!(stabilizer_expectations(&ground, &ring_graph(n))
            .iter()
            .all(|k| k.abs() < 1e-15));
        let plus = vec![c(0.25, 0.0); 1 << n];
        assert!(stabilizer_expectations(&plus, &ring_graph(n))
            .iter()
            .all(|k| k.abs() < 1e-15));
    }

    #[test]
    fn ring_graph_neighbors() {
        assert_eq!(
            ring_graph(4),
            vec![vec![2, 4], vec![1, 3], vec![2, 4], vec![1, 3]]
        );
        assert_eq!(ring_graph(2), vec![vec![2], vec![1]]);
    }

    #[test]
    fn phase_optimization_removes_local_phases() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let target = vec![c(0.0, 0.0), c(s, 0.0), c(0.0, -s), c(0.0, 0.0)];
        let rotated = vec![
            c(0.0, 0.0),
            C64::from_polar(s, 0.7),
            C64::from_polar(s, -std::f64::consts::FRAC_PI_2 - 1.9),
            c(0.0, 0.0),
        ];
        assert!(overlap_probability(&target, &rotated) < 0.9);
        let aligned = phase_optimized_overlap(&target, &rotated);
        assert!((aligned.fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_fidelity_with_free_phase() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut rho = Matrix2::zeros();
        rho[(0, 0)] = c(0.5, 0.0);
        rho[(1, 1)] = c(0.5, 0.0);
        rho[(0, 1)] = c(0.0, 0.5);
        rho[(1, 0)] = c(0.0, -0.5);
        let f = phase_optimized_qubit_fidelity(&rho, c(s, 0.0), c(s, 0.0));
        assert!((f - 1.0).abs() < 1e-12);
    }
}
