//! Local operators embedded in a [`BasisLayout`].

use num_complex::Complex64 as C64;

use super::{BasisLayout, Level, SparseOperator};
use crate::error::{Error, Result};

/// Truncated annihilation operator of one mode (`<m-1| a |m> = sqrt(m)`).
pub fn build_ladder(layout: &BasisLayout, mode: usize) -> Result<SparseOperator> {
    let stride = layout.mode_stride(mode)?;
    let triplets = (0..layout.dim()).filter_map(|i| {
        let m = layout.photons_in(i, mode);
        (m > 0).then(|| (i - stride, i, C64::new((m as f64).sqrt(), 0.0)))
    });
    Ok(SparseOperator::from_triplets(layout.dim(), triplets))
}

/// `|to><from|` on one atom (1-based), identity elsewhere.
pub fn build_atomic(
    layout: &BasisLayout,
    atom: usize,
    from: Level,
    to: Level,
) -> Result<SparseOperator> {
    let stride = layout.atom_stride(atom)?;
    for level in [from, to] {
        if !layout.has_level(level) {
            return Err(Error::MissingLevel(level));
        }
    }
    let shift = to.code() as isize - from.code() as isize;
    let triplets = (0..layout.dim())
        .filter(|&i| layout.level_of(i, atom) == from)
        .map(|i| {
            let j = (i as isize + shift * stride as isize) as usize;
            (j, i, C64::new(1.0, 0.0))
        });
    Ok(SparseOperator::from_triplets(layout.dim(), triplets))
}

/// `S^+ = |e><g|` on one atom.
pub fn raising(layout: &BasisLayout, atom: usize) -> Result<SparseOperator> {
    build_atomic(layout, atom, Level::G, Level::E)
}

/// `S^- = |g><e|` on one atom.
pub fn lowering(layout: &BasisLayout, atom: usize) -> Result<SparseOperator> {
    build_atomic(layout, atom, Level::E, Level::G)
}

pub fn projector(layout: &BasisLayout, atom: usize, level: Level) -> Result<SparseOperator> {
    build_atomic(layout, atom, level, level)
}

/// `sigma_z = |e><e| - |g><g|`.
pub fn sigma_z(layout: &BasisLayout, atom: usize) -> Result<SparseOperator> {
    projector(layout, atom, Level::E)?.sub(&projector(layout, atom, Level::G)?)
}

/// `sigma_x = |e><g| + |g><e|`.
pub fn sigma_x(layout: &BasisLayout, atom: usize) -> Result<SparseOperator> {
    raising(layout, atom)?.add(&lowering(layout, atom)?)
}

/// Photon number of one mode.
pub fn number(layout: &BasisLayout, mode: usize) -> Result<SparseOperator> {
    layout.mode_stride(mode)?;
    let diag: Vec<C64> = (0..layout.dim())
        .map(|i| C64::new(layout.photons_in(i, mode) as f64, 0.0))
        .collect();
    Ok(SparseOperator::diagonal(&diag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_one_ladder_squares_to_zero() {
        let layout = BasisLayout::full(2, 1);
        let a = build_ladder(&layout, 0).unwrap();
        assert_eq!(a.matmul(&a).unwrap().nnz(), 0);
    }

    #[test]
    fn number_operator_spectrum_at_cutoff_two() {
        let layout = BasisLayout::full(2, 2);
        let a = build_ladder(&layout, 3).unwrap();
        let n = a.adjoint().matmul(&a).unwrap();
        assert!(n.is_diagonal());
        let mut values: Vec<i64> = n
            .diagonal_entries()
            .iter()
            .map(|v| v.re.round() as i64)
            .collect();
        values.sort_unstable();
        values.dedup();
        assert_eq!(values, vec![0, 1, 2]);
        assert!(n.sub(&number(&layout, 3).unwrap()).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn out_of_range_indices() {
        let layout = BasisLayout::full(2, 1);
        assert!(build_ladder(&layout, 4).is_err());
        assert!(build_atomic(&layout, 3, Level::G, Level::E).is_err());
        assert!(build_atomic(&layout, 0, Level::G, Level::E).is_err());
        let qubits = BasisLayout::qubits(2);
        assert!(matches!(
            build_atomic(&qubits, 1, Level::G, Level::R),
            Err(Error::MissingLevel(Level::R))
        ));
    }

    #[test]
    fn raising_algebra() {
        for layout in [BasisLayout::full(2, 1), BasisLayout::qubits(3)] {
            let sp = raising(&layout, 2).unwrap();
            let sm = lowering(&layout, 2).unwrap();
            assert_eq!(
                sp.matmul(&sm).unwrap(),
                projector(&layout, 2, Level::E).unwrap()
            );
            assert_eq!(sp.matmul(&sp).unwrap().nnz(), 0);
            assert_eq!(sm, sp.adjoint());
            let z = sigma_z(&layout, 2).unwrap();
            assert!(z.is_diagonal() && z.is_hermitian());
            assert!(sigma_x(&layout, 2).unwrap().is_hermitian());
        }
    }
}
