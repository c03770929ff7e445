use crate::error::{Error, Result};

/// Atomic level. Numeric codes double as basis digits (`g = 0`, `e = 1`, `r = 2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    G,
    E,
    R,
}

impl Level {
    pub fn code(self) -> usize {
        match self {
            Level::G => 0,
            Level::E => 1,
            Level::R => 2,
        }
    }

    pub fn from_code(code: usize) -> Option<Self> {
        match code {
            0 => Some(Level::G),
            1 => Some(Level::E),
            2 => Some(Level::R),
            _ => None,
        }
    }
}

/// Decoded basis vector: one level per atom, one occupation per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub atoms: Vec<Level>,
    pub photons: Vec<usize>,
}

/// Tensor-product basis of `n` atoms and (optionally) `2n` truncated modes.
///
/// Atom digits vary fastest, atom 1 first; mode digits follow in ring order
/// `a_1, b_1, a_2, b_2, ...` (cavity and fiber alternating).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisLayout {
    n_atoms: usize,
    atom_levels: usize,
    n_modes: usize,
    photon_cutoff: usize,
}

impl BasisLayout {
    /// Three-level atoms with all `2n` cavity and fiber modes.
    pub fn full(n: usize, photon_cutoff: usize) -> Self {
        Self {
            n_atoms: n,
            atom_levels: 3,
            n_modes: 2 * n,
            photon_cutoff,
        }
    }

    /// Bare `{g, e}` register with no modes, used by effective Hamiltonians.
    pub fn qubits(n: usize) -> Self {
        Self {
            n_atoms: n,
            atom_levels: 2,
            n_modes: 0,
            photon_cutoff: 0,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn atom_levels(&self) -> usize {
        self.atom_levels
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn photon_cutoff(&self) -> usize {
        self.photon_cutoff
    }

    pub fn is_qubit_register(&self) -> bool {
        self.atom_levels == 2 && self.n_modes == 0
    }

    pub fn dim(&self) -> usize {
        self.atom_levels.pow(self.n_atoms as u32)
            * (self.photon_cutoff + 1).pow(self.n_modes as u32)
    }

    pub fn has_level(&self, level: Level) -> bool {
        level.code() < self.atom_levels
    }

    /// Mode index of cavity `a_l` (1-based `l`).
    pub fn cavity_mode(l: usize) -> usize {
        2 * (l - 1)
    }

    /// Mode index of fiber `b_l` (1-based `l`).
    pub fn fiber_mode(l: usize) -> usize {
        2 * (l - 1) + 1
    }

    pub fn atom_stride(&self, atom: usize) -> Result<usize> {
        self.check_atom(atom)?;
        Ok(self.atom_levels.pow(atom as u32 - 1))
    }

    pub fn mode_stride(&self, mode: usize) -> Result<usize> {
        if mode >= self.n_modes {
            return Err(Error::IndexOutOfRange {
                what: "mode",
                index: mode,
                limit: self.n_modes,
            });
        }
        Ok(self.atom_levels.pow(self.n_atoms as u32) * (self.photon_cutoff + 1).pow(mode as u32))
    }

    pub fn check_atom(&self, atom: usize) -> Result<()> {
        if atom == 0 || atom > self.n_atoms {
            return Err(Error::IndexOutOfRange {
                what: "atom",
                index: atom,
                limit: self.n_atoms,
            });
        }
        Ok(())
    }

    /// Level of `atom` (1-based) in basis vector `index`.
    pub fn level_of(&self, index: usize, atom: usize) -> Level {
        let digit = (index / self.atom_levels.pow(atom as u32 - 1)) % self.atom_levels;
        Level::from_code(digit).expect("digit below atom_levels")
    }

    pub fn photons_in(&self, index: usize, mode: usize) -> usize {
        let base = self.photon_cutoff + 1;
        let atoms = self.atom_levels.pow(self.n_atoms as u32);
        (index / atoms / base.pow(mode as u32)) % base
    }

    pub fn total_photons(&self, index: usize) -> usize {
        (0..self.n_modes).map(|m| self.photons_in(index, m)).sum()
    }

    pub fn label(&self, index: usize) -> Result<BasisLabel> {
        if index >= self.dim() {
            return Err(Error::IndexOutOfRange {
                what: "basis",
                index,
                limit: self.dim(),
            });
        }
        Ok(BasisLabel {
            atoms: (1..=self.n_atoms)
                .map(|a| self.level_of(index, a))
                .collect(),
            photons: (0..self.n_modes)
                .map(|m| self.photons_in(index, m))
                .collect(),
        })
    }

    pub fn index(&self, label: &BasisLabel) -> Result<usize> {
        if label.atoms.len() != self.n_atoms {
            return Err(Error::DimensionMismatch {
                expected: self.n_atoms,
                found: label.atoms.len(),
            });
        }
        if label.photons.len() != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                found: label.photons.len(),
            });
        }
        let mut index = 0;
        let mut stride = 1;
        for &level in &label.atoms {
            if !self.has_level(level) {
                return Err(Error::MissingLevel(level));
            }
            index += level.code() * stride;
            stride *= self.atom_levels;
        }
        for &count in &label.photons {
            if count > self.photon_cutoff {
                return Err(Error::IndexOutOfRange {
                    what: "photon number",
                    index: count,
                    limit: self.photon_cutoff,
                });
            }
            index += count * stride;
            stride *= self.photon_cutoff + 1;
        }
        Ok(index)
    }

    /// Index of an atomic configuration with every mode empty.
    pub fn vacuum_index(&self, atoms: &[Level]) -> Result<usize> {
        self.index(&BasisLabel {
            atoms: atoms.to_vec(),
            photons: vec![0; self.n_modes],
        })
    }
}

/// Index in the `2^n` qubit register: bit `l - 1` set when atom `l` is in `e`.
pub fn qubit_index(levels: &[Level]) -> usize {
    levels
        .iter()
        .enumerate()
        .map(|(i, l)| usize::from(*l == Level::E) << i)
        .sum()
}
