//! The pre-elimination model: photon hopping around the ring (`H_1`), the
//! atom-field coupling in the interaction picture (`H_2(t)`), and the Fourier
//! transform to the nonlocal modes that diagonalize the hopping.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::config::{Branch, NetworkConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::{OscillatingTerm, TimeDependentHamiltonian};
use crate::space::{build_atomic, build_ladder, BasisLayout, Level, SparseOperator};

/// Unitary taking the local modes `(a_1, b_1, ..., a_n, b_n)` to `c_1..c_{2n}`.
///
/// Row `k - 1` holds `e^{-i(2m-1)k pi/n}/sqrt(2n)` on `a_m` and
/// `e^{-i 2m k pi/n}/sqrt(2n)` on `b_m`: a plane wave with wavenumber
/// `k pi / n` over the `2n` ring sites, `a_m` at site `2m-1` and `b_m` at `2m`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlocalTransform {
    pub matrix: DMatrix<C64>,
}

impl NonlocalTransform {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!("ring needs n >= 2, got {n}")));
        }
        let size = 2 * n;
        let norm = 1.0 / (size as f64).sqrt();
        let matrix = DMatrix::from_fn(size, size, |row, col| {
            let k = (row + 1) as f64;
            let site = (col + 1) as f64;
            C64::from_polar(norm, -site * k * PI / n as f64)
        });
        Ok(Self { matrix })
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |U U^dagger - 1|` entrywise.
    pub fn unitarity_residual(&self) -> f64 {
        let prod = &self.matrix * self.matrix.adjoint();
        let id = DMatrix::<C64>::identity(self.size(), self.size());
        (prod - id).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `U h U^dagger` for a single-particle matrix `h` over the local modes.
    pub fn conjugate(&self, h: &DMatrix<C64>) -> DMatrix<C64> {
        &self.matrix * h * self.matrix.adjoint()
    }

    /// Coefficient of `c_k` in the expansion of local mode `mode`
    /// (`a = sum_k conj(U_{k,a}) c_k`), for `k = 1..2n`.
    pub fn local_mode_in_nonlocal(&self, mode: usize) -> Vec<C64> {
        (0..self.size())
            .map(|k| self.matrix[(k, mode)].conj())
            .collect()
    }
}

pub fn build_nonlocal_transform(n: usize) -> Result<NonlocalTransform> {
    NonlocalTransform::new(n)
}

/// Single-particle hopping matrix of `H_1` over `(a_1, b_1, ..., a_n, b_n)`.
pub fn hopping_matrix(n: usize, nu: f64) -> DMatrix<C64> {
    let size = 2 * n;
    let mut h = DMatrix::from_element(size, size, C64::new(0.0, 0.0));
    for l in 1..=n {
        let b = BasisLayout::fiber_mode(l);
        let next = if l == n { 1 } else { l + 1 };
        for a in [BasisLayout::cavity_mode(l), BasisLayout::cavity_mode(next)] {
            h[(a, b)] += C64::new(nu, 0.0);
            h[(b, a)] += C64::new(nu, 0.0);
        }
    }
    h
}

/// `a_to^dagger a_from` built directly on the truncated basis.
fn hop(layout: &BasisLayout, from: usize, to: usize) -> Result<SparseOperator> {
    let s_from = layout.mode_stride(from)?;
    let s_to = layout.mode_stride(to)?;
    let cutoff = layout.photon_cutoff();
    let triplets = (0..layout.dim()).filter_map(|i| {
        let m_from = layout.photons_in(i, from);
        let m_to = layout.photons_in(i, to);
        (m_from > 0 && m_to < cutoff).then(|| {
            let j = i - s_from + s_to;
            let amp = ((m_from * (m_to + 1)) as f64).sqrt();
            (j, i, C64::new(amp, 0.0))
        })
    });
    Ok(SparseOperator::from_triplets(layout.dim(), triplets))
}

fn check_layout(config: &NetworkConfig, layout: &BasisLayout) -> Result<()> {
    if layout.n_atoms() != config.n || layout.atom_levels() != 3 || layout.n_modes() != 2 * config.n
    {
        return Err(Error::Precondition(format!(
            "full model for n = {} needs BasisLayout::full({}, cutoff)",
            config.n, config.n
        )));
    }
    Ok(())
}

/// `H_1 = sum_l nu b_l (a_l^dagger + a_{l+1}^dagger) + h.c.` with `a_{n+1} = a_1`.
pub fn build_h1(config: &NetworkConfig, layout: &BasisLayout) -> Result<SparseOperator> {
    check_layout(config, layout)?;
    let n = config.n;
    let mut parts = Vec::new();
    if config.nu != 0.0 {
        for l in 1..=n {
            let b = BasisLayout::fiber_mode(l);
            let next = if l == n { 1 } else { l + 1 };
            for a in [BasisLayout::cavity_mode(l), BasisLayout::cavity_mode(next)] {
                parts.push(hop(layout, b, a)?);
                parts.push(hop(layout, a, b)?);
            }
        }
    }
    let dim = layout.dim();
    let sum = SparseOperator::sum(dim, parts.iter())?;
    Ok(sum.scale(C64::new(config.nu, 0.0)))
}

/// `H_2(t)`: every active classical drive `Omega e^{i Delta_1 t} |r><x|`
/// (`x = e` or `g` per branch) and every cavity coupling `g a_l e^{i Delta_2 t} |r_l><g_l|`,
/// each with its Hermitian conjugate. The static part is zero.
pub fn build_h2(config: &NetworkConfig, layout: &BasisLayout) -> Result<TimeDependentHamiltonian> {
    check_layout(config, layout)?;
    let dim = layout.dim();
    let mut h = TimeDependentHamiltonian::new(SparseOperator::zero(dim));
    for drive in config.active_drives() {
        let from = match drive.branch {
            Branch::Excited => Level::E,
            Branch::Ground => Level::G,
        };
        let op = build_atomic(layout, drive.atom, from, Level::R)?.scale(C64::new(drive.rabi, 0.0));
        h.push(OscillatingTerm::new(
            format!(
                "drive atom={} d={} {}",
                drive.atom, drive.slot, drive.branch
            ),
            op,
            drive.detuning,
        ))?;
    }
    if config.g != 0.0 {
        for l in 1..=config.n {
            let a = build_ladder(layout, BasisLayout::cavity_mode(l))?;
            let flip = build_atomic(layout, l, Level::G, Level::R)?;
            let op = a.matmul(&flip)?.scale(C64::new(config.g, 0.0));
            h.push(OscillatingTerm::new(
                format!("cavity l={l}"),
                op,
                config.delta2,
            ))?;
        }
    }
    Ok(h)
}

/// `H(t) = H_1 + H_2(t)` in the interaction picture of the atom-field coupling.
///
/// The step-size rate is the fastest physical frequency, `max(|Delta_1|, |Delta_2| + 2 nu)`.
pub fn full_hamiltonian(
    config: &NetworkConfig,
    layout: &BasisLayout,
) -> Result<TimeDependentHamiltonian> {
    let h1 = build_h1(config, layout)?;
    let h2 = build_h2(config, layout)?;
    let mut h = TimeDependentHamiltonian::new(h1);
    for term in h2.terms {
        h.push(term)?;
    }
    let drive_rate = config
        .active_drives()
        .map(|d| d.detuning.abs())
        .fold(0.0, f64::max);
    let rate = drive_rate.max(config.delta2.abs() + 2.0 * config.nu.abs());
    Ok(h.with_rate_hint(rate))
}

/// `t -> H_1 + H_2(t)` as materialized operators.
pub fn full_hamiltonian_callback(
    config: &NetworkConfig,
    layout: &BasisLayout,
) -> Result<impl Fn(f64) -> SparseOperator + Sync> {
    let h = full_hamiltonian(config, layout)?;
    Ok(move |t: f64| h.at(t))
}

/// `sum_l (|e_l><e_l| + |r_l><r_l|) + sum_modes a^dagger a`, conserved by the
/// `e-r` branch model.
pub fn excitation_number(layout: &BasisLayout) -> SparseOperator {
    let diag: Vec<C64> = (0..layout.dim())
        .map(|i| {
            let atoms = (1..=layout.n_atoms())
                .filter(|&a| layout.level_of(i, a) != Level::G)
                .count();
            C64::new((atoms + layout.total_photons(i)) as f64, 0.0)
        })
        .collect();
    SparseOperator::diagonal(&diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Drive;

    #[test]
    fn transform_is_unitary() {
        for n in 2..=6 {
            let u = NonlocalTransform::new(n).unwrap();
            assert!(u.unitarity_residual() < 1e-12, "n = {n}");
        }
        assert!(NonlocalTransform::new(1).is_err());
    }

    #[test]
    fn transform_diagonalizes_hopping() {
        let n = 3;
        let nu = 1.0;
        let d = NonlocalTransform::new(n)
            .unwrap()
            .conjugate(&hopping_matrix(n, nu));
        let expected = [1.0, -1.0, -2.0, -1.0, 1.0, 2.0];
        for i in 0..2 * n {
            for j in 0..2 * n {
                let target = if i == j { expected[i] * nu } else { 0.0 };
                assert!((d[(i, j)] - C64::new(target, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hop_matches_ladder_products() {
        let layout = BasisLayout::full(2, 2);
        let a0 = build_ladder(&layout, 0).unwrap();
        let a3 = build_ladder(&layout, 3).unwrap();
        let direct = hop(&layout, 0, 3).unwrap();
        let product = a3.adjoint().matmul(&a0).unwrap();
        assert!(direct.sub(&product).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn h1_vanishes_without_hopping_and_on_vacuum() {
        let cfg = NetworkConfig::new(3, 0.0, 18.5);
        let layout = BasisLayout::full(3, 1);
        assert_eq!(build_h1(&cfg, &layout).unwrap().nnz(), 0);

        let cfg = NetworkConfig::new(3, 1.0, 18.5);
        let h1 = build_h1(&cfg, &layout).unwrap();
        assert!(h1.is_hermitian());
        assert_eq!(h1.get(0, 0), C64::new(0.0, 0.0));
        assert!(h1.row(0).next().is_none());
    }

    #[test]
    fn h2_term_families() {
        let cfg = NetworkConfig::three_node_example();
        let layout = BasisLayout::full(3, 1);
        let h2 = build_h2(&cfg, &layout).unwrap();
        let drives = h2
            .terms
            .iter()
            .filter(|t| t.label.starts_with("drive"))
            .count();
        let cavity = h2
            .terms
            .iter()
            .filter(|t| t.label.starts_with("cavity"))
            .count();
        assert_eq!((drives, cavity), (2, 3));
        assert!(h2.at(0.37).hermitian_residual() < 1e-12);

        let mut idle = NetworkConfig::new(3, 1.0, 18.5);
        idle.g = 0.0;
        idle.drives
            .push(Drive::new(2, Branch::Excited, 1, 0.0, 0.0));
        let h2 = build_h2(&idle, &layout).unwrap();
        assert!(h2.terms.is_empty());
        assert_eq!(h2.at(1.3).nnz(), 0);
    }

    #[test]
    fn layout_must_match() {
        let cfg = NetworkConfig::three_node_example();
        assert!(build_h1(&cfg, &BasisLayout::qubits(3)).is_err());
        assert!(build_h2(&cfg, &BasisLayout::full(2, 1)).is_err());
    }

    #[test]
    fn callback_is_deterministic_and_starts_at_h1_plus_h2() {
        let cfg = NetworkConfig::three_node_example();
        let layout = BasisLayout::full(3, 1);
        let cb = full_hamiltonian_callback(&cfg, &layout).unwrap();
        let h0 = build_h1(&cfg, &layout)
            .unwrap()
            .add(&build_h2(&cfg, &layout).unwrap().at(0.0))
            .unwrap();
        assert_eq!(cb(0.0), h0);
        assert_eq!(cb(2.5), cb(2.5));
    }
}
