//! Time-dependent Hamiltonians of the form
//! `H(t) = H_0 + sum_j (T_j e^{i w_j t} + T_j^dagger e^{-i w_j t})`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::space::{SparseOperator, Subspace};

/// Anything the integrator can apply at a given time.
pub trait Hamiltonian: Sync {
    fn dim(&self) -> usize;

    /// `out += alpha H(t) psi`.
    fn apply_add(&self, t: f64, alpha: C64, psi: &[C64], out: &mut [C64]);

    /// Fastest rate present in `H(t)` (explicit oscillation or static scale);
    /// sets the step-size cap.
    fn max_rate(&self) -> f64;

    /// True when `H` has no explicit time dependence.
    fn is_static(&self) -> bool;
}

impl Hamiltonian for SparseOperator {
    fn dim(&self) -> usize {
        SparseOperator::dim(self)
    }

    fn apply_add(&self, _t: f64, alpha: C64, psi: &[C64], out: &mut [C64]) {
        SparseOperator::apply_add(self, alpha, psi, out);
    }

    fn max_rate(&self) -> f64 {
        self.norm_bound()
    }

    fn is_static(&self) -> bool {
        true
    }
}

/// One `T e^{i w t} + h.c.` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatingTerm {
    pub label: String,
    pub operator: SparseOperator,
    adjoint: SparseOperator,
    pub frequency: f64,
}

impl OscillatingTerm {
    pub fn new(label: impl Into<String>, operator: SparseOperator, frequency: f64) -> Self {
        let adjoint = operator.adjoint();
        Self {
            label: label.into(),
            operator,
            adjoint,
            frequency,
        }
    }

    pub fn adjoint(&self) -> &SparseOperator {
        &self.adjoint
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeDependentHamiltonian {
    pub static_part: SparseOperator,
    pub terms: Vec<OscillatingTerm>,
    rate_hint: Option<f64>,
}

impl TimeDependentHamiltonian {
    pub fn new(static_part: SparseOperator) -> Self {
        Self {
            static_part,
            terms: Vec::new(),
            rate_hint: None,
        }
    }

    pub fn push(&mut self, term: OscillatingTerm) -> Result<()> {
        if term.operator.dim() != self.static_part.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.static_part.dim(),
                found: term.operator.dim(),
            });
        }
        self.terms.push(term);
        Ok(())
    }

    /// Overrides the step-size rate, e.g. with the physical frequency scale of
    /// an interaction-picture model whose operator norm bound is loose.
    pub fn with_rate_hint(mut self, rate: f64) -> Self {
        self.rate_hint = Some(rate);
        self
    }

    /// Materializes `H(t)`.
    pub fn at(&self, t: f64) -> SparseOperator {
        let dim = self.static_part.dim();
        let mut triplets: Vec<(usize, usize, C64)> = self.static_part.entries().collect();
        for term in &self.terms {
            let phase = C64::from_polar(1.0, term.frequency * t);
            triplets.extend(term.operator.entries().map(|(r, c, v)| (r, c, v * phase)));
            triplets.extend(
                term.adjoint
                    .entries()
                    .map(|(r, c, v)| (r, c, v * phase.conj())),
            );
        }
        SparseOperator::from_triplets(dim, triplets)
    }

    /// Sum of the magnitudes of every coefficient; bounds `||H(t)||` for all `t`.
    pub fn coefficient_bound(&self) -> f64 {
        self.static_part.norm_bound()
            + self
                .terms
                .iter()
                .map(|t| t.operator.norm_bound() + t.adjoint.norm_bound())
                .sum::<f64>()
    }

    /// Restricts every constituent to an invariant coordinate subspace.
    pub fn restrict(&self, sub: &Subspace) -> Self {
        Self {
            static_part: self.static_part.restrict(sub),
            terms: self
                .terms
                .iter()
                .map(|t| {
                    OscillatingTerm::new(t.label.clone(), t.operator.restrict(sub), t.frequency)
                })
                .collect(),
            rate_hint: self.rate_hint,
        }
    }

    /// Every operator whose sparsity pattern contributes to `H(t)`.
    pub fn generators(&self) -> Vec<&SparseOperator> {
        std::iter::once(&self.static_part)
            .chain(self.terms.iter().map(|t| &t.operator))
            .collect()
    }

    /// Terms with zero frequency folded into the static part.
    pub fn fold_resonant(mut self) -> Self {
        let (resonant, moving): (Vec<_>, Vec<_>) =
            self.terms.into_iter().partition(|t| t.frequency == 0.0);
        let mut ops = vec![self.static_part];
        for t in resonant {
            ops.push(t.operator);
            ops.push(t.adjoint);
        }
        let dim = ops[0].dim();
        self.static_part = SparseOperator::sum(dim, ops.iter()).expect("matching dimensions");
        self.terms = moving;
        self
    }
}

impl Hamiltonian for TimeDependentHamiltonian {
    fn dim(&self) -> usize {
        self.static_part.dim()
    }

    fn apply_add(&self, t: f64, alpha: C64, psi: &[C64], out: &mut [C64]) {
        self.static_part.apply_add(alpha, psi, out);
        for term in &self.terms {
            let phase = C64::from_polar(1.0, term.frequency * t);
            term.operator.apply_add(alpha * phase, psi, out);
            term.adjoint.apply_add(alpha * phase.conj(), psi, out);
        }
    }

    fn max_rate(&self) -> f64 {
        self.rate_hint.unwrap_or_else(|| {
            let fastest = self
                .terms
                .iter()
                .map(|t| t.frequency.abs())
                .fold(0.0, f64::max);
            fastest + self.static_part.norm_bound()
        })
    }

    fn is_static(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Adapter for a user callback `t -> H(t)`. The operator is rebuilt at every
/// evaluation, so this is meant for small problems and tests.
pub struct CallbackHamiltonian<F> {
    dim: usize,
    rate: f64,
    callback: F,
}

impl<F> CallbackHamiltonian<F>
where
    F: Fn(f64) -> SparseOperator + Sync,
{
    pub fn new(dim: usize, rate: f64, callback: F) -> Self {
        Self {
            dim,
            rate,
            callback,
        }
    }
}

impl<F> Hamiltonian for CallbackHamiltonian<F>
where
    F: Fn(f64) -> SparseOperator + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_add(&self, t: f64, alpha: C64, psi: &[C64], out: &mut [C64]) {
        (self.callback)(t).apply_add(alpha, psi, out);
    }

    fn max_rate(&self) -> f64 {
        self.rate
    }

    fn is_static(&self) -> bool {
        false
    }
}

/// Runs `H` backwards in time: `H_rev(t) = H(-t)`, used for time-reversal checks.
pub struct Reversed<'a, H: ?Sized>(pub &'a H);

impl<H: Hamiltonian + ?Sized> Hamiltonian for Reversed<'_, H> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply_add(&self, t: f64, alpha: C64, psi: &[C64], out: &mut [C64]) {
        self.0.apply_add(-t, -alpha, psi, out);
    }

    fn max_rate(&self) -> f64 {
        self.0.max_rate()
    }

    fn is_static(&self) -> bool {
        self.0.is_static()
    }
}
