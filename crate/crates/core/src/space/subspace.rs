use std::collections::VecDeque;

use num_complex::Complex64 as C64;

use super::SparseOperator;
use crate::error::{Error, Result};

/// A set of basis vectors of a larger space.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    full_dim: usize,
    indices: Vec<usize>,
    positions: Vec<Option<usize>>,
}

impl Subspace {
    pub fn from_indices(full_dim: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        let mut positions = vec![None; full_dim];
        for (i, &idx) in indices.iter().enumerate() {
            if idx >= full_dim {
                return Err(Error::IndexOutOfRange {
                    what: "basis",
                    index: idx,
                    limit: full_dim,
                });
            }
            positions[idx] = Some(i);
        }
        Ok(Self {
            full_dim,
            indices,
            positions,
        })
    }

    /// Smallest coordinate subspace containing `seeds` that is closed under
    /// every operator in `generators` (and, since reachability is followed
    /// both ways, under their adjoints).
    pub fn reachable(
        full_dim: usize,
        generators: &[&SparseOperator],
        seeds: &[usize],
    ) -> Result<Self> {
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); full_dim];
        for op in generators {
            if op.dim() != full_dim {
                return Err(Error::DimensionMismatch {
                    expected: full_dim,
                    found: op.dim(),
                });
            }
            for (r, c, _) in op.entries() {
                adjacency[r].push(c);
                adjacency[c].push(r);
            }
        }
        let mut seen = vec![false; full_dim];
        let mut queue = VecDeque::new();
        for &s in seeds {
            if s >= full_dim {
                return Err(Error::IndexOutOfRange {
                    what: "basis",
                    index: s,
                    limit: full_dim,
                });
            }
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(i) = queue.pop_front() {
            for &j in &adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let indices = (0..full_dim).filter(|&i| seen[i]).collect();
        Self::from_indices(full_dim, indices)
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn position(&self, full_index: usize) -> Option<usize> {
        self.positions.get(full_index).copied().flatten()
    }

    /// Restricts a full-space vector, returning the restricted vector and the
    /// squared norm left outside.
    pub fn compress(&self, full: &[C64]) -> (Vec<C64>, f64) {
        let inside: Vec<C64> = self.indices.iter().map(|&i| full[i]).collect();
        let total: f64 = full.iter().map(|a| a.norm_sqr()).sum();
        let kept: f64 = inside.iter().map(|a| a.norm_sqr()).sum();
        (inside, (total - kept).max(0.0))
    }

    pub fn expand(&self, sub: &[C64]) -> Vec<C64> {
        let mut full = vec![C64::new(0.0, 0.0); self.full_dim];
        for (&i, &a) in self.indices.iter().zip(sub) {
            full[i] = a;
        }
        full
    }
}
