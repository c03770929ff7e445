//! Fixed-step Schrodinger integration, full-versus-effective comparison and
//! the rate-based decoherence estimate.

use num_complex::Complex64 as C64;

use crate::config::NetworkConfig;
use crate::effective::{effective_hamiltonian, raman_coefficients};
use crate::error::{Error, Result};
use crate::full::full_hamiltonian;
use crate::hamiltonian::{Hamiltonian, TimeDependentHamiltonian};
use crate::space::measure::{phase_optimized_overlap, project_amplitudes};
use crate::space::{inner, norm, BasisLayout, QuantumState, SparseOperator, Subspace};

/// Largest `dt * rate` a plan may use.
pub const STEP_CAP: f64 = 0.05;

/// `dt * rate` chosen by [`IntegrationPlan::auto`].
pub const DEFAULT_STEP_FRACTION: f64 = 0.01;

/// Largest tolerated `| ||psi|| - 1 |` before a run is rejected.
pub const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Classical fourth-order Runge-Kutta.
    #[default]
    Rk4,
}

/// Time grid of one run. `t_end < t_start` integrates backwards.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationPlan {
    pub t_start: f64,
    pub t_end: f64,
    /// Requested step; the actual step is shortened so the grid ends on `t_end`.
    pub dt: f64,
    pub method: Method,
    /// Record every `record_every`-th step (the first and last step are always recorded).
    pub record_every: usize,
    pub renormalize: bool,
    pub norm_tolerance: f64,
}

impl IntegrationPlan {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidPlan(format!(
                "dt must be positive and finite, got {dt}"
            )));
        }
        if !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::InvalidPlan("time bounds must be finite".into()));
        }
        Ok(Self {
            t_start,
            t_end,
            dt,
            method: Method::Rk4,
            record_every: 1,
            renormalize: false,
            norm_tolerance: NORM_TOLERANCE,
        })
    }

    /// Plan from 0 to `t_end` with `dt = DEFAULT_STEP_FRACTION / rate`, validated against `h`.
    pub fn auto<H: Hamiltonian + ?Sized>(h: &H, t_end: f64) -> Result<Self> {
        let rate = h.max_rate();
        let dt = if rate > 0.0 {
            DEFAULT_STEP_FRACTION / rate
        } else {
            1.0
        };
        let plan = Self::new(0.0, t_end, dt)?;
        plan.check(h)?;
        Ok(plan)
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.record_every = (self.steps() / samples.max(1)).max(1);
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_renormalize(mut self, on: bool) -> Self {
        self.renormalize = on;
        self
    }

    pub fn steps(&self) -> usize {
        let span = (self.t_end - self.t_start).abs();
        if span == 0.0 {
            0
        } else {
            (span / self.dt).ceil().max(1.0) as usize
        }
    }

    /// Signed step actually taken.
    pub fn step(&self) -> f64 {
        match self.steps() {
            0 => 0.0,
            s => (self.t_end - self.t_start) / s as f64,
        }
    }

    /// `dt <= STEP_CAP / rate` for the fastest rate in `h`.
    pub fn check<H: Hamiltonian + ?Sized>(&self, h: &H) -> Result<()> {
        let rate = h.max_rate();
        if rate > 0.0 {
            let cap = STEP_CAP / rate;
            if self.dt > cap * (1.0 + 1e-12) {
                return Err(Error::StepTooLarge { dt: self.dt, cap });
            }
        }
        if self.record_every == 0 {
            return Err(Error::InvalidPlan("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Same grid with half the step.
    pub fn halved(&self) -> Self {
        let mut p = self.clone();
        p.dt = self.step().abs() / 2.0;
        p.record_every = self.record_every * 2;
        p
    }
}

/// Expectation value tracked along a run.
#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub operator: SparseOperator,
}

impl Observable {
    pub fn new(name: impl Into<String>, operator: SparseOperator) -> Self {
        Self {
            name: name.into(),
            operator,
        }
    }
}

/// Extra per-sample values supplied by the caller's observer.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SampleExtra {
    pub leak: Option<f64>,
    pub fidelity: Option<f64>,
}

/// Time series produced by [`evolve`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimulationRecord {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub observable_names: Vec<String>,
    /// `observables[i][j]`: observable `i` at sample `j` (real part).
    pub observables: Vec<Vec<f64>>,
    pub leak: Vec<f64>,
    pub fidelity: Vec<f64>,
    /// `max | ||psi|| - 1 |` over every step, not just recorded ones.
    pub max_norm_drift: f64,
    pub steps: usize,
}

impl SimulationRecord {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observable_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.observables[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

struct Rk4Buffers {
    k: Vec<C64>,
    acc: Vec<C64>,
    stage: Vec<C64>,
}

fn rk4_step<H: Hamiltonian + ?Sized>(
    h: &H,
    t: f64,
    dt: f64,
    psi: &mut [C64],
    buf: &mut Rk4Buffers,
) {
    // d psi / dt = -i H psi
    let minus_i = C64::new(0.0, -1.0);
    let Rk4Buffers { k, acc, stage } = buf;
    acc.copy_from_slice(psi);

    let eval = |time: f64, input: &[C64], k: &mut [C64]| {
        k.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        h.apply_add(time, minus_i, input, k);
    };

    eval(t, psi, k);
    for ((a, s), (&p, &kv)) in acc
        .iter_mut()
        .zip(stage.iter_mut())
        .zip(psi.iter().zip(k.iter()))
    {
        *a += kv * (dt / 6.0);
        *s = p + kv * (dt / 2.0);
    }
    eval(t + dt / 2.0, stage, k);
    for ((a, s), (&p, &kv)) in acc
        .iter_mut()
        .zip(stage.iter_mut())
        .zip(psi.iter().zip(k.iter()))
    {
        *a += kv * (dt / 3.0);
        *s = p + kv * (dt / 2.0);
    }
    eval(t + dt / 2.0, stage, k);
    for ((a, s), (&p, &kv)) in acc
        .iter_mut()
        .zip(stage.iter_mut())
        .zip(psi.iter().zip(k.iter()))
    {
        *a += kv * (dt / 3.0);
        *s = p + kv * dt;
    }
    eval(t + dt, stage, k);
    for (a, &kv) in acc.iter_mut().zip(k.iter()) {
        *a += kv * (dt / 6.0);
    }
    psi.copy_from_slice(acc);
}

/// Integrates `i d psi/dt = H(t) psi` along `plan`, calling `observer` at
/// every recorded sample.
pub fn evolve_with<H, F>(
    psi0: &[C64],
    h: &H,
    plan: &IntegrationPlan,
    observables: &[Observable],
    mut observer: F,
) -> Result<(Vec<C64>, SimulationRecord)>
where
    H: Hamiltonian + ?Sized,
    F: FnMut(f64, &[C64]) -> SampleExtra,
{
    let dim = h.dim();
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: psi0.len(),
        });
    }
    for obs in observables {
        if obs.operator.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: obs.operator.dim(),
            });
        }
    }
    plan.check(h)?;

    let steps = plan.steps();
    let dt = plan.step();
    let mut psi = psi0.to_vec();
    let initial_norm = norm(&psi);
    let mut record = SimulationRecord {
        observable_names: observables.iter().map(|o| o.name.clone()).collect(),
        observables: vec![Vec::new(); observables.len()],
        steps,
        ..Default::default()
    };

    let mut sample = |t: f64, psi: &[C64], record: &mut SimulationRecord| {
        record.times.push(t);
        record.norms.push(norm(psi));
        for (series, obs) in record.observables.iter_mut().zip(observables) {
            series.push(inner(psi, &obs.operator.apply_vec(psi)).re);
        }
        let extra = observer(t, psi);
        if let Some(l) = extra.leak {
            record.leak.push(l);
        }
        if let Some(f) = extra.fidelity {
            record.fidelity.push(f);
        }
    };

    sample(plan.t_start, &psi, &mut record);
    let mut buf = Rk4Buffers {
        k: vec![C64::new(0.0, 0.0); dim],
        acc: vec![C64::new(0.0, 0.0); dim],
        stage: vec![C64::new(0.0, 0.0); dim],
    };
    for step in 1..=steps {
        let t = plan.t_start + (step - 1) as f64 * dt;
        match plan.method {
            Method::Rk4 => rk4_step(h, t, dt, &mut psi, &mut buf),
        }
        let time = plan.t_start + step as f64 * dt;
        let nrm = norm(&psi);
        if !nrm.is_finite() {
            return Err(Error::NonFinite { step, time });
        }
        let drift = (nrm - initial_norm).abs();
        record.max_norm_drift = record.max_norm_drift.max(drift);
        if drift > plan.norm_tolerance {
            return Err(Error::NormDrift {
                drift,
                time,
                tolerance: plan.norm_tolerance,
            });
        }
        if plan.renormalize {
            let scale = initial_norm / nrm;
            psi.iter_mut().for_each(|a| *a *= scale);
        }
        if step % plan.record_every == 0 || step == steps {
            let t_rec = if step == steps { plan.t_end } else { time };
            sample(t_rec, &psi, &mut record);
        }
    }
    Ok((psi, record))
}

/// [`evolve_with`] on a [`QuantumState`] with no observables.
pub fn evolve<H: Hamiltonian + ?Sized>(
    state: &QuantumState,
    h: &H,
    plan: &IntegrationPlan,
) -> Result<(QuantumState, SimulationRecord)> {
    let (psi, record) = evolve_with(state.amplitudes(), h, plan, &[], |_, _| {
        SampleExtra::default()
    })?;
    Ok((QuantumState::new(*state.layout(), psi)?, record))
}

/// Largest amplitude difference between a run and the same run at half the step.
pub fn step_halving_error<H: Hamiltonian + ?Sized>(
    psi0: &[C64],
    h: &H,
    plan: &IntegrationPlan,
) -> Result<f64> {
    let coarse = evolve_with(psi0, h, plan, &[], |_, _| SampleExtra::default())?.0;
    let fine = evolve_with(psi0, h, &plan.halved(), &[], |_, _| SampleExtra::default())?.0;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// Default bound on `n` for full-model runs.
pub const FULL_MODEL_MAX_N: usize = 4;

/// Full model on the smallest coordinate subspace invariant under `H(t)` that
/// contains the initial support (or on the whole space when `restrict` is off).
#[derive(Clone, Debug)]
pub struct FullModel {
    pub layout: BasisLayout,
    pub hamiltonian: TimeDependentHamiltonian,
    pub subspace: Subspace,
}

impl FullModel {
    pub fn new(
        config: &NetworkConfig,
        cutoff: usize,
        seeds: &[usize],
        restrict: bool,
        allow_large: bool,
    ) -> Result<Self> {
        config.check_structure()?;
        let layout = BasisLayout::full(config.n, cutoff);
        if config.n > FULL_MODEL_MAX_N && !allow_large {
            return Err(Error::DimensionGuard {
                n: config.n,
                dim: layout.dim(),
                max_n: FULL_MODEL_MAX_N,
            });
        }
        let h = full_hamiltonian(config, &layout)?;
        let subspace = if restrict {
            Subspace::reachable(layout.dim(), &h.generators(), seeds)?
        } else {
            Subspace::from_indices(layout.dim(), (0..layout.dim()).collect())?
        };
        let hamiltonian = if restrict { h.restrict(&subspace) } else { h };
        Ok(Self {
            layout,
            hamiltonian,
            subspace,
        })
    }

    /// Full-space indices of a register vector's vacuum embedding.
    pub fn seeds_for(layout: &BasisLayout, qubits: &[C64]) -> Result<Vec<usize>> {
        let full = QuantumState::from_qubits(*layout, qubits)?;
        Ok(full
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(i, _)| i)
            .collect())
    }

    pub fn from_qubits(
        config: &NetworkConfig,
        cutoff: usize,
        qubits: &[C64],
        restrict: bool,
        allow_large: bool,
    ) -> Result<Self> {
        let layout = BasisLayout::full(config.n, cutoff);
        let seeds = Self::seeds_for(&layout, qubits)?;
        Self::new(config, cutoff, &seeds, restrict, allow_large)
    }

    pub fn dim(&self) -> usize {
        self.subspace.dim()
    }

    /// Register vector embedded into the (restricted) working space.
    pub fn embed(&self, qubits: &[C64]) -> Result<Vec<C64>> {
        let full = QuantumState::from_qubits(self.layout, qubits)?;
        let (sub, outside) = self.subspace.compress(full.amplitudes());
        if outside > 0.0 {
            return Err(Error::Precondition(
                "initial state has weight outside the working subspace".into(),
            ));
        }
        Ok(sub)
    }

    /// Working-space vector back on the full layout.
    pub fn expand(&self, psi: &[C64]) -> Vec<C64> {
        self.subspace.expand(psi)
    }
}

/// Full-versus-effective agreement along a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Comparison {
    pub times: Vec<f64>,
    /// `|<psi_eff| P psi_full>|^2 / ||P psi_full||^2`.
    pub fidelity: Vec<f64>,
    /// Same, maximized over per-qubit `|e>` phases.
    pub phase_optimized: Vec<f64>,
    /// Weight of the full state outside the vacuum / `{g, e}` sector.
    pub leak: Vec<f64>,
    pub full_dim: usize,
    pub max_norm_drift: f64,
    pub final_full: Vec<C64>,
    pub final_effective: Vec<C64>,
}

/// Options for [`compare_full_effective`].
#[derive(Clone, Debug)]
pub struct CompareOptions {
    pub cutoff: usize,
    /// Requested step; `None` uses `DEFAULT_STEP_FRACTION / rate` of the full model.
    pub dt: Option<f64>,
    pub samples: usize,
    pub restrict: bool,
    pub allow_large: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            cutoff: 1,
            dt: None,
            samples: 200,
            restrict: true,
            allow_large: false,
        }
    }
}

/// Evolves the full and effective models from the same vacuum-field register
/// state and compares them at each sample.
pub fn compare_full_effective(
    config: &NetworkConfig,
    qubits: &[C64],
    t_end: f64,
    options: &CompareOptions,
) -> Result<Comparison> {
    if qubits.len() != 1 << config.n {
        return Err(Error::DimensionMismatch {
            expected: 1 << config.n,
            found: qubits.len(),
        });
    }
    let model = FullModel::from_qubits(
        config,
        options.cutoff,
        qubits,
        options.restrict,
        options.allow_large,
    )?;
    let effective = effective_hamiltonian(config)?;

    let mut plan = IntegrationPlan::auto(&model.hamiltonian, t_end)?;
    if let Some(dt) = options.dt {
        plan = plan.with_dt(dt);
    }
    let plan = plan.with_samples(options.samples);

    let mut eff_states = Vec::new();
    let (final_effective, _) = evolve_with(qubits, &effective, &plan, &[], |_, psi| {
        eff_states.push(psi.to_vec());
        SampleExtra::default()
    })?;

    let psi0 = model.embed(qubits)?;
    let mut out = Comparison {
        full_dim: model.dim(),
        ..Default::default()
    };
    let mut index = 0;
    let (final_sub, record) = evolve_with(&psi0, &model.hamiltonian, &plan, &[], |t, psi| {
        let full = model.expand(psi);
        let proj = project_amplitudes(&model.layout, &full);
        let weight = proj.weight();
        let reference = &eff_states[index];
        index += 1;
        let (fid, opt) = if weight > 0.0 {
            (
                inner(reference, &proj.amplitudes).norm_sqr() / weight,
                phase_optimized_overlap(reference, &proj.amplitudes).fidelity / weight,
            )
        } else {
            (0.0, 0.0)
        };
        out.times.push(t);
        out.fidelity.push(fid);
        out.phase_optimized.push(opt);
        out.leak.push(proj.leak);
        SampleExtra::default()
    })?;
    out.max_norm_drift = record.max_norm_drift;
    out.final_full = model.expand(&final_sub);
    out.final_effective = final_effective;
    Ok(out)
}

/// Effective decay rates and the resulting fidelity estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoherenceEstimate {
    pub gamma_e: f64,
    pub kappa_e: f64,
    /// `1 - (gamma_e + kappa_e) t`.
    pub fidelity: f64,
}

pub fn decoherence_estimate(
    config: &NetworkConfig,
    p1: f64,
    p2: f64,
    t: f64,
) -> Result<DecoherenceEstimate> {
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Precondition(format!(
                "{name} = {p} is not a probability"
            )));
        }
    }
    let gamma_e = p1 * config.gamma;
    let kappa_e = p2 * config.kappa;
    Ok(DecoherenceEstimate {
        gamma_e,
        kappa_e,
        fidelity: 1.0 - (gamma_e + kappa_e) * t,
    })
}

/// Perturbative populations of `|r>` (`p1`) and of the photon modes (`p2`).
///
/// Each is summed over the drive slots of one atom, then maximized over atoms:
/// `p1 = max_l sum_d Omega^2 / Delta_1^2`, `p2 = max_l sum_d sum_k lambda^2 / delta^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExcitationProbabilities {
    pub p1: f64,
    pub p2: f64,
}

pub fn excitation_probabilities(config: &NetworkConfig) -> Result<ExcitationProbabilities> {
    let table = raman_coefficients(config)?;
    let mut p1 = 0.0f64;
    let mut p2 = 0.0f64;
    for atom in 1..=config.n {
        let drives: Vec<_> = config.drives_on(atom).filter(|d| d.is_active()).collect();
        let atom_p1: f64 = drives.iter().map(|d| (d.rabi / d.detuning).powi(2)).sum();
        let atom_p2: f64 = drives
            .iter()
            .flat_map(|d| table.drive_rows(atom, d.slot))
            .map(|r| (r.lambda / r.delta).powi(2))
            .sum();
        p1 = p1.max(atom_p1);
        p2 = p2.max(atom_p2);
    }
    Ok(ExcitationProbabilities { p1, p2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{sigma_x, Level};

    #[test]
    fn zero_hamiltonian_is_identity() {
        let layout = BasisLayout::qubits(2);
        let h = SparseOperator::zero(layout.dim());
        let state = QuantumState::product(layout, &[Level::E, Level::G]).unwrap();
        let plan = IntegrationPlan::new(0.0, 3.0, 0.1).unwrap();
        let (out, record) = evolve(&state, &h, &plan).unwrap();
        assert_eq!(out, state);
        assert_eq!(record.len(), 31);
    }

    #[test]
    fn rabi_oscillation_matches_closed_form() {
        let layout = BasisLayout::qubits(1);
        let omega = 0.7;
        let h = sigma_x(&layout, 1).unwrap().scale(C64::new(omega, 0.0));
        let psi0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let plan = IntegrationPlan::auto(&h, 5.0)
            .unwrap()
            .with_record_every(10);
        let (_, record) = evolve_with(&psi0, &h, &plan, &[], |t, psi| SampleExtra {
            fidelity: Some(psi[1].norm_sqr() - (omega * t).sin().powi(2)),
            ..Default::default()
        })
        .unwrap();
        assert!(record.fidelity.iter().all(|e| e.abs() < 1e-8));
    }

    #[test]
    fn step_cap_is_enforced() {
        let h = SparseOperator::identity(2).scale(C64::new(10.0, 0.0));
        let plan = IntegrationPlan::new(0.0, 1.0, 0.01).unwrap();
        assert!(matches!(plan.check(&h), Err(Error::StepTooLarge { .. })));
        assert!(IntegrationPlan::new(0.0, 1.0, 0.0).is_err());
        assert!(IntegrationPlan::new(0.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn grid_ends_exactly_on_t_end() {
        let plan = IntegrationPlan::new(0.0, 1.0, 0.3).unwrap();
        assert_eq!(plan.steps(), 4);
        assert!((plan.step() - 0.25).abs() < 1e-15);
        let back = IntegrationPlan::new(2.0, 0.0, 0.5).unwrap();
        assert_eq!(back.step(), -0.5);
    }

    #[test]
    fn reference_probabilities() {
        let p = excitation_probabilities(&NetworkConfig::three_node_example()).unwrap();
        assert!((p.p1 - 1.0 / 256.0).abs() < 1e-15);
        let idle = NetworkConfig::new(3, 1.0, 18.5);
        let p = excitation_probabilities(&idle).unwrap();
        assert_eq!((p.p1, p.p2), (0.0, 0.0));
    }

    #[test]
    fn decoherence_edges() {
        let cfg = NetworkConfig::three_node_example();
        assert_eq!(
            decoherence_estimate(&cfg, 0.1, 0.1, 100.0)
                .unwrap()
                .fidelity,
            1.0
        );
        let lossy = cfg.with_decay(3e-3, 3e-3);
        assert_eq!(
            decoherence_estimate(&lossy, 0.1, 0.2, 0.0)
                .unwrap()
                .fidelity,
            1.0
        );
        assert!(decoherence_estimate(&lossy, 1.5, 0.0, 1.0).is_err());
    }
}
