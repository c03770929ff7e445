//! Full atom-cavity-fiber dynamics against the eliminated spin model.

use std::f64::consts::PI;

use ringqed::dynamics::{CompareOptions, FullModel, Observable, SampleExtra};
use ringqed::effective::EFFECTIVE_SIGN;
use ringqed::full::excitation_number;
use ringqed::space::{number, projector};
use ringqed::{
    compare_full_effective, coupling_table, evolve_with, excitation_probabilities, Hamiltonian,
    IntegrationPlan, Level, NetworkConfig, SparseOperator, C64,
};

fn register(n: usize, index: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); 1 << n];
    v[index] = C64::new(1.0, 0.0);
    v
}

fn run<H: Hamiltonian + ?Sized>(psi0: &[C64], h: &H, plan: &IntegrationPlan) -> Vec<C64> {
    evolve_with(psi0, h, plan, &[], |_, _| SampleExtra::default())
        .unwrap()
        .0
}

fn gate_time(config: &NetworkConfig) -> f64 {
    PI / (4.0 * coupling_table(config).unwrap().chi(1, 3).norm())
}

fn cap_dt(model: &FullModel) -> f64 {
    0.05 / model.hamiltonian.max_rate()
}

/// The relative phase the full model builds between `|e_1 g_3>` and `|g_1 e_3>`
/// fixes the sign of the eliminated exchange term.
#[test]
fn exchange_sign_matches_full_model() {
    let config = NetworkConfig::three_node_example();
    let t = gate_time(&config);
    let options = CompareOptions {
        dt: Some(0.05 / 20.5),
        samples: 2,
        ..CompareOptions::default()
    };
    let cmp = compare_full_effective(&config, &register(3, 0b001), t, &options).unwrap();
    let model = FullModel::from_qubits(&config, 1, &register(3, 0b001), true, false).unwrap();
    let proj = ringqed::space::measure::project_amplitudes(&model.layout, &cmp.final_full);
    let full_ratio = proj.amplitudes[0b100] / proj.amplitudes[0b001];
    let eff_ratio = cmp.final_effective[0b100] / cmp.final_effective[0b001];
    assert!(
        (eff_ratio.arg() + PI / 2.0).abs() < 1e-6,
        "effective ratio {eff_ratio}"
    );
    assert!(
        (full_ratio.arg() + PI / 2.0).abs() < 0.2,
        "full ratio {full_ratio}"
    );
    assert_eq!(EFFECTIVE_SIGN, 1.0);
    assert!(*cmp.phase_optimized.last().unwrap() > 0.99);
}

#[test]
fn sector_restriction_is_exact() {
    let config = NetworkConfig::three_node_example();
    let qubits = register(3, 0b001);
    let small = FullModel::from_qubits(&config, 1, &qubits, true, false).unwrap();
    let large = FullModel::from_qubits(&config, 1, &qubits, false, false).unwrap();
    assert_eq!(small.dim(), 11);
    assert_eq!(large.dim(), 1728);
    let plan = IntegrationPlan::new(0.0, 3.0, cap_dt(&small)).unwrap();
    let a = run(&small.embed(&qubits).unwrap(), &small.hamiltonian, &plan);
    let b = run(&large.embed(&qubits).unwrap(), &large.hamiltonian, &plan);
    let a = small.expand(&a);
    let b = large.expand(&b);
    let diff = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-12, "restricted and full runs differ by {diff:e}");
}

#[test]
fn excited_branch_conserves_excitation_number() {
    let config = NetworkConfig::three_node_example();
    let model = FullModel::new(&config, 1, &[0], false, false).unwrap();
    let nexc = excitation_number(&model.layout);
    for generator in model.hamiltonian.generators() {
        assert!(generator.commutator(&nexc).unwrap().max_abs() < 1e-15);
    }
    // dynamics from |e_1 g_2 g_3> never leaves the one-excitation sector
    let qubits = register(3, 0b001);
    let psi0 = model.embed(&qubits).unwrap();
    let plan = IntegrationPlan::new(0.0, 20.0, cap_dt(&model)).unwrap();
    let psi = run(&psi0, &model.hamiltonian, &plan);
    let diag = nexc.diagonal_entries();
    let outside: f64 = psi
        .iter()
        .zip(&diag)
        .filter(|(_, n)| (n.re - 1.0).abs() > 0.5)
        .map(|(a, _)| a.norm_sqr())
        .sum();
    assert!(outside < 1e-10);
}

#[test]
fn cavity_coupling_in_nonlocal_modes() {
    // g a_l = sum_k g U*_{k,cavity l} c_k with |U| = 1/sqrt(2n) and phase e^{i(2l-1)k pi/n}
    use ringqed::full::NonlocalTransform;
    for n in 2..=5 {
        let t = NonlocalTransform::new(n).unwrap();
        for l in 1..=n {
            let column = t.local_mode_in_nonlocal(ringqed::BasisLayout::cavity_mode(l));
            for (k_index, amp) in column.iter().enumerate() {
                let k = (k_index + 1) as f64;
                let want = C64::from_polar(
                    1.0 / (2.0 * n as f64).sqrt(),
                    (2 * l - 1) as f64 * k * PI / n as f64,
                );
                assert!(
                    (amp - want).norm() < 1e-14,
                    "n={n} l={l} k={k}: {amp} vs {want}"
                );
            }
        }
    }
}

fn restricted(op: &SparseOperator, model: &FullModel) -> SparseOperator {
    op.restrict(&model.subspace)
}

/// Populations of `|r>` and of the photon modes stay at the size the
/// adiabatic estimates predict.
#[test]
fn perturbative_populations() {
    let config = NetworkConfig::three_node_example();
    let qubits = register(3, 0b001);
    let model = FullModel::from_qubits(&config, 1, &qubits, true, false).unwrap();
    let layout = model.layout;
    let r1 = restricted(&projector(&layout, 1, Level::R).unwrap(), &model);
    let photons = (0..layout.n_modes())
        .map(|m| number(&layout, m).unwrap())
        .fold(SparseOperator::zero(layout.dim()), |acc, n| {
            acc.add(&n).unwrap()
        });
    let photons = restricted(&photons, &model);
    let t = gate_time(&config);
    let plan = IntegrationPlan::new(0.0, t, cap_dt(&model))
        .unwrap()
        .with_record_every(1);
    let observables = [
        Observable::new("r1", r1),
        Observable::new("photons", photons),
    ];
    let (_, record) = evolve_with(
        &model.embed(&qubits).unwrap(),
        &model.hamiltonian,
        &plan,
        &observables,
        |_, _| SampleExtra::default(),
    )
    .unwrap();
    let p = excitation_probabilities(&config).unwrap();
    let peak = |name: &str| {
        record
            .observable(name)
            .unwrap()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    };
    // a drive switched on at t = 0 oscillates the admixture between 0 and 4p
    let r_ratio = peak("r1") / (4.0 * p.p1);
    let photon_ratio = peak("photons") / (4.0 * p.p2);
    assert!((0.5..2.0).contains(&r_ratio), "r peak / 4 p1 = {r_ratio}");
    assert!(
        (0.5..2.0).contains(&photon_ratio),
        "photon peak / 4 p2 = {photon_ratio}"
    );
}
