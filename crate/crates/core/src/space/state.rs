use num_complex::Complex64 as C64;

use super::{BasisLayout, Level};
use crate::error::{Error, Result};

/// Pure state over a [`BasisLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    layout: BasisLayout,
    amplitudes: Vec<C64>,
}

impl QuantumState {
    pub fn new(layout: BasisLayout, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn basis(layout: BasisLayout, index: usize) -> Result<Self> {
        if index >= layout.dim() {
            return Err(Error::IndexOutOfRange {
                what: "basis",
                index,
                limit: layout.dim(),
            });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); layout.dim()];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { layout, amplitudes })
    }

    /// Atomic product configuration with every mode in vacuum.
    pub fn product(layout: BasisLayout, atoms: &[Level]) -> Result<Self> {
        let index = layout.vacuum_index(atoms)?;
        Self::basis(layout, index)
    }

    /// Embeds a `2^n` register vector into the vacuum sector of `layout`.
    pub fn from_qubits(layout: BasisLayout, qubits: &[C64]) -> Result<Self> {
        let n = layout.n_atoms();
        if qubits.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: qubits.len(),
            });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); layout.dim()];
        for (q, &amp) in qubits.iter().enumerate() {
            let levels: Vec<Level> = (0..n)
                .map(|i| if q >> i & 1 == 1 { Level::E } else { Level::G })
                .collect();
            amplitudes[layout.vacuum_index(&levels)?] = amp;
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> &BasisLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dim(),
                found: other.layout.dim(),
            });
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
