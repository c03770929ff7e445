//! Adiabatic elimination of the excited level and the photon modes: Raman
//! coefficients, qubit-level couplings and the effective spin Hamiltonians.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::config::{mode_spectrum, Branch, ModeSpectrum, NetworkConfig, HIERARCHY_THRESHOLD};
use crate::error::{Error, Result};
use crate::hamiltonian::{OscillatingTerm, TimeDependentHamiltonian};
use crate::space::{BasisLayout, Level, SparseOperator};

/// Overall sign of every effective Hamiltonian built here.
///
/// Fixed by matching the full-model two-qubit amplitudes (the relative phase
/// of the transferred excitation); `tests/full_vs_effective.rs` pins it.
pub const EFFECTIVE_SIGN: f64 = 1.0;

/// Largest detuning mismatch accepted as an exact Raman pairing.
pub const PAIRING_TOLERANCE: f64 = 1e-9;

/// Closed-form coefficients. All arguments and results in units of `g`.
pub mod formulas {
    /// Light shift `Omega^2 / Delta_1` of the driven level.
    pub fn eta(rabi: f64, detuning: f64) -> f64 {
        if rabi == 0.0 {
            0.0
        } else {
            rabi * rabi / detuning
        }
    }

    /// Dispersive shift `g^2 / (2n (Delta_2 - omega_k))` of nonlocal mode `k`.
    pub fn xi(g: f64, n: usize, delta2: f64, omega_k: f64) -> f64 {
        if g == 0.0 {
            0.0
        } else {
            g * g / (2.0 * n as f64 * (delta2 - omega_k))
        }
    }

    /// Raman coupling through mode `k`:
    /// `Omega g / (2 sqrt(2n)) (1/Delta_1 + 1/(Delta_2 - omega_k))`,
    /// with the drive's own Rabi frequency and detuning.
    pub fn lambda(rabi: f64, g: f64, n: usize, detuning: f64, delta2: f64, omega_k: f64) -> f64 {
        if rabi == 0.0 || g == 0.0 {
            return 0.0;
        }
        rabi * g / (2.0 * (2.0 * n as f64).sqrt()) * (1.0 / detuning + 1.0 / (delta2 - omega_k))
    }

    /// Raman detuning `Delta_2 - omega_k - Delta_1`.
    pub fn delta(delta2: f64, omega_k: f64, detuning: f64) -> f64 {
        delta2 - omega_k - detuning
    }

    /// Second-order shift `lambda^2 / delta`.
    pub fn mu(lambda: f64, delta: f64) -> f64 {
        if lambda == 0.0 {
            0.0
        } else {
            lambda * lambda / delta
        }
    }
}

const SINGULAR_EPS: f64 = 1e-12;

/// Coefficients of one `(k, atom, slot)` combination.
#[derive(Clone, Debug, PartialEq)]
pub struct RamanEntry {
    pub k: usize,
    pub atom: usize,
    pub slot: usize,
    pub branch: Branch,
    pub rabi: f64,
    pub detuning: f64,
    pub eta: f64,
    pub xi: f64,
    pub lambda: f64,
    pub delta: f64,
    pub mu: f64,
}

/// Every Raman coefficient of a configuration. Atoms without any drive get an
/// idle slot-1 row (`Omega = 0`, `Delta_1 = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct RamanCoefficientTable {
    pub n: usize,
    pub spectrum: ModeSpectrum,
    pub entries: Vec<RamanEntry>,
}

impl RamanCoefficientTable {
    pub fn get(&self, k: usize, atom: usize, slot: usize) -> Option<&RamanEntry> {
        self.entries
            .iter()
            .find(|e| e.k == k && e.atom == atom && e.slot == slot)
    }

    /// Rows of one drive, ordered by `k`.
    pub fn drive_rows(&self, atom: usize, slot: usize) -> Vec<&RamanEntry> {
        self.entries
            .iter()
            .filter(|e| e.atom == atom && e.slot == slot)
            .collect()
    }

    pub fn xi(&self, k: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.k == k).map(|e| e.xi)
    }
}

pub fn raman_coefficients(config: &NetworkConfig) -> Result<RamanCoefficientTable> {
    config.check_structure()?;
    let spectrum = mode_spectrum(config);
    let n = config.n;
    let mut slots: Vec<(usize, Branch, usize, f64, f64)> = config
        .drives
        .iter()
        .map(|d| (d.atom, d.branch, d.slot, d.rabi, d.detuning))
        .collect();
    for atom in 1..=n {
        if config.drives_on(atom).next().is_none() {
            slots.push((atom, Branch::Excited, 1, 0.0, 0.0));
        }
    }
    slots.sort_by_key(|s| (s.0, s.2));

    let mut entries = Vec::with_capacity(slots.len() * 2 * n);
    for &(atom, branch, slot, rabi, detuning) in &slots {
        for k in 1..=2 * n {
            let omega_k = spectrum.omega(k);
            let cavity = config.delta2 - omega_k;
            if config.g != 0.0 && cavity.abs() < SINGULAR_EPS {
                return Err(Error::Singular {
                    quantity: "Delta_2 - omega_k",
                    location: format!("k = {k}"),
                });
            }
            let delta = formulas::delta(config.delta2, omega_k, detuning);
            if rabi != 0.0 {
                if detuning.abs() < SINGULAR_EPS {
                    return Err(Error::Singular {
                        quantity: "Delta_1",
                        location: format!("atom {atom}, slot {slot}"),
                    });
                }
                if delta.abs() < SINGULAR_EPS {
                    return Err(Error::Singular {
                        quantity: "delta",
                        location: format!("k = {k}, atom {atom}, slot {slot}"),
                    });
                }
            }
            let lambda = formulas::lambda(rabi, config.g, n, detuning, config.delta2, omega_k);
            entries.push(RamanEntry {
                k,
                atom,
                slot,
                branch,
                rabi,
                detuning,
                eta: formulas::eta(rabi, detuning),
                xi: formulas::xi(config.g, n, config.delta2, omega_k),
                lambda,
                delta,
                mu: formulas::mu(lambda, delta),
            });
        }
    }
    Ok(RamanCoefficientTable {
        n,
        spectrum,
        entries,
    })
}

/// Exchange amplitude between drive `(l, d)` and drive `(m, d')`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairCoupling {
    pub l: usize,
    pub m: usize,
    pub slot_l: usize,
    pub slot_m: usize,
    pub branch: Branch,
    /// `sum_k 1/2 lambda lambda' (1/delta + 1/delta') e^{-2i(l-m) k pi/n}`.
    pub chi: C64,
    /// `Delta_{1,m,d'} - Delta_{1,l,d}`, the rotation frequency of the term.
    pub big_lambda: f64,
}

/// Qubit-level parameters: Stark shifts and pairwise exchange amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTable {
    pub n: usize,
    /// `epsilon_l = sum_d (sum_k mu_{k,l,d} - eta_{l,d})`, index `l - 1`.
    pub epsilon: Vec<f64>,
    /// Branch of the drives on each atom; `None` for an idle atom.
    pub branch: Vec<Option<Branch>>,
    /// One entry per unordered atom pair `l < m` and per pair of active
    /// drive slots on the same branch.
    pub pairs: Vec<PairCoupling>,
}

impl CouplingTable {
    pub fn epsilon(&self, l: usize) -> f64 {
        self.epsilon[l - 1]
    }

    /// `chi_{l,m,d,d'}` for ordered `(l, m)`; zero when either drive is absent.
    pub fn chi_slots(&self, l: usize, m: usize, slot_l: usize, slot_m: usize) -> C64 {
        for p in &self.pairs {
            if (p.l, p.m, p.slot_l, p.slot_m) == (l, m, slot_l, slot_m) {
                return p.chi;
            }
            if (p.m, p.l, p.slot_m, p.slot_l) == (l, m, slot_l, slot_m) {
                return p.chi.conj();
            }
        }
        C64::new(0.0, 0.0)
    }

    /// `chi_{l,m}` summed over every drive-slot combination of the two atoms.
    pub fn chi(&self, l: usize, m: usize) -> C64 {
        (1..=2)
            .flat_map(|d| (1..=2).map(move |e| (d, e)))
            .map(|(d, e)| self.chi_slots(l, m, d, e))
            .sum()
    }

    /// `Lambda_{l,m,d,d'}` when both drives exist.
    pub fn big_lambda(&self, l: usize, m: usize, slot_l: usize, slot_m: usize) -> Option<f64> {
        self.pairs.iter().find_map(|p| {
            if (p.l, p.m, p.slot_l, p.slot_m) == (l, m, slot_l, slot_m) {
                Some(p.big_lambda)
            } else if (p.m, p.l, p.slot_m, p.slot_l) == (l, m, slot_l, slot_m) {
                Some(-p.big_lambda)
            } else {
                None
            }
        })
    }
}

fn atom_branch(config: &NetworkConfig, atom: usize) -> Result<Option<Branch>> {
    let mut branch = None;
    for d in config.drives_on(atom).filter(|d| d.is_active()) {
        match branch {
            None => branch = Some(d.branch),
            Some(b) if b != d.branch => {
                return Err(Error::Precondition(format!(
                    "atom {atom} is driven on both the e-r and g-r branches"
                )))
            }
            _ => {}
        }
    }
    Ok(branch)
}

pub fn coupling_table(config: &NetworkConfig) -> Result<CouplingTable> {
    let raman = raman_coefficients(config)?;
    let n = config.n;
    let branch = (1..=n)
        .map(|l| atom_branch(config, l))
        .collect::<Result<Vec<_>>>()?;

    let epsilon = (1..=n)
        .map(|l| {
            config
                .drives_on(l)
                .filter(|d| d.is_active())
                .map(|d| {
                    let rows = raman.drive_rows(l, d.slot);
                    rows.iter().map(|r| r.mu).sum::<f64>() - rows[0].eta
                })
                .sum()
        })
        .collect();

    let mut pairs = Vec::new();
    let active: Vec<_> = config.active_drives().collect();
    for a in &active {
        for b in &active {
            if a.atom >= b.atom || a.branch != b.branch {
                continue;
            }
            let (l, m) = (a.atom, b.atom);
            let rows_l = raman.drive_rows(l, a.slot);
            let rows_m = raman.drive_rows(m, b.slot);
            let chi = rows_l
                .iter()
                .zip(&rows_m)
                .map(|(rl, rm)| {
                    let weight = 0.5 * rl.lambda * rm.lambda * (1.0 / rl.delta + 1.0 / rm.delta);
                    let phase = -2.0 * (l as f64 - m as f64) * rl.k as f64 * PI / n as f64;
                    C64::from_polar(weight, phase)
                })
                .sum();
            pairs.push(PairCoupling {
                l,
                m,
                slot_l: a.slot,
                slot_m: b.slot,
                branch: a.branch,
                chi,
                big_lambda: b.detuning - a.detuning,
            });
        }
    }
    pairs.sort_by_key(|p| (p.l, p.m, p.slot_l, p.slot_m));
    Ok(CouplingTable {
        n,
        epsilon,
        branch,
        pairs,
    })
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn bit(l: usize) -> usize {
    1 << (l - 1)
}

/// `sum_l shift_l |x_l><x_l|` on the qubit register, `x_l` the level each
/// shift acts on.
fn stark_diagonal(n: usize, shifts: &[(usize, Level, f64)]) -> Vec<C64> {
    (0..1usize << n)
        .map(|i| {
            let total: f64 = shifts
                .iter()
                .filter(|(l, level, _)| (i & bit(*l) != 0) == (*level == Level::E))
                .map(|(_, _, s)| s)
                .sum();
            real(total)
        })
        .collect()
}

/// `chi S_l^+ S_m^-` (without the conjugate) on the qubit register.
fn exchange_triplets(n: usize, l: usize, m: usize, chi: C64) -> Vec<(usize, usize, C64)> {
    (0..1usize << n)
        .filter(|&i| i & bit(m) != 0 && i & bit(l) == 0)
        .map(|i| (i - bit(m) + bit(l), i, chi))
        .collect()
}

/// `sum_l eps_l |e_l><e_l| + sum_l (chi_l S_l^+ S_{l+1}^- + h.c.)` on a ring,
/// `links[l - 1] = chi_{l,l+1}` with `n + 1 = 1`.
pub fn xy_chain_operator(n: usize, epsilon: &[f64], links: &[C64]) -> Result<SparseOperator> {
    if epsilon.len() != n || links.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if epsilon.len() != n {
                epsilon.len()
            } else {
                links.len()
            },
        });
    }
    let shifts: Vec<_> = (1..=n).map(|l| (l, Level::E, epsilon[l - 1])).collect();
    let diag = stark_diagonal(n, &shifts);
    let mut triplets: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
    for l in 1..=n {
        let m = l % n + 1;
        for (r, c, v) in exchange_triplets(n, l, m, links[l - 1]) {
            triplets.push((r, c, v));
            triplets.push((c, r, v.conj()));
        }
    }
    Ok(SparseOperator::from_triplets(1 << n, triplets))
}

/// `sum_l eps_l |g_l><g_l| + coupling sum_l |g_l g_{l+1}><g_l g_{l+1}|` on a ring.
pub fn ising_operator(n: usize, epsilon: &[f64], coupling: f64) -> Result<SparseOperator> {
    if epsilon.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: epsilon.len(),
        });
    }
    let diag: Vec<C64> = (0..1usize << n)
        .map(|i| {
            let ground = |l: usize| i & bit(l) == 0;
            let site: f64 = (1..=n).filter(|&l| ground(l)).map(|l| epsilon[l - 1]).sum();
            let links = (1..=n).filter(|&l| ground(l) && ground(l % n + 1)).count();
            real(site + coupling * links as f64)
        })
        .collect();
    Ok(SparseOperator::diagonal(&diag))
}

/// Effective model of an arbitrary configuration:
/// `sum_l eps_l |x_l><x_l| + sum_{l<m} sum_{d,d'} (chi T_{l,m} e^{i Lambda t} + h.c.)`
/// with `T = S_l^+ S_m^-` on the `e-r` branch and `|g_l g_m><g_l g_m|` on `g-r`.
/// `x_l` is `e` for `e-r` atoms and `g` for `g-r` atoms. Resonant terms are
/// folded into the static part.
pub fn effective_hamiltonian(config: &NetworkConfig) -> Result<TimeDependentHamiltonian> {
    let table = coupling_table(config)?;
    let n = config.n;
    let dim = 1usize << n;
    let shifts = stark_shifts(&table);
    let diag: Vec<C64> = stark_diagonal(n, &shifts)
        .into_iter()
        .map(|v| v * EFFECTIVE_SIGN)
        .collect();
    let mut h = TimeDependentHamiltonian::new(SparseOperator::diagonal(&diag));
    for p in &table.pairs {
        let chi = p.chi * EFFECTIVE_SIGN;
        let op = match p.branch {
            Branch::Excited => {
                SparseOperator::from_triplets(dim, exchange_triplets(n, p.l, p.m, chi))
            }
            Branch::Ground => SparseOperator::from_triplets(
                dim,
                (0..dim)
                    .filter(|&i| i & bit(p.l) == 0 && i & bit(p.m) == 0)
                    .map(|i| (i, i, chi)),
            ),
        };
        h.push(OscillatingTerm::new(
            format!("pair l={} m={} d={} d'={}", p.l, p.m, p.slot_l, p.slot_m),
            op,
            p.big_lambda,
        ))?;
    }
    Ok(h.fold_resonant())
}

fn stark_shifts(table: &CouplingTable) -> Vec<(usize, Level, f64)> {
    (1..=table.n)
        .filter_map(|l| {
            table.branch[l - 1].map(|b| {
                let level = match b {
                    Branch::Excited => Level::E,
                    Branch::Ground => Level::G,
                };
                (l, level, table.epsilon(l))
            })
        })
        .collect()
}

fn single_active_drive(config: &NetworkConfig, atom: usize) -> Result<&crate::config::Drive> {
    let mut active = config.drives_on(atom).filter(|d| d.is_active());
    match (active.next(), active.next()) {
        (Some(d), None) => Ok(d),
        (None, _) => Err(Error::Precondition(format!("atom {atom} is not driven"))),
        _ => Err(Error::Precondition(format!(
            "atom {atom} carries more than one active drive"
        ))),
    }
}

/// Per-pair block: `e-r` gives `eps_p P_e,p + eps_q P_e,q + (chi S_p^+ S_q^- + h.c.)`;
/// `g-r` gives `eps_p P_g,p + eps_q P_g,q + 2 Re(chi) P_g,p P_g,q`.
fn pair_block(table: &CouplingTable, p: usize, q: usize, branch: Branch) -> SparseOperator {
    let n = table.n;
    let dim = 1usize << n;
    let chi = table.chi(p, q) * EFFECTIVE_SIGN;
    let level = match branch {
        Branch::Excited => Level::E,
        Branch::Ground => Level::G,
    };
    let shifts = [
        (p, level, table.epsilon(p) * EFFECTIVE_SIGN),
        (q, level, table.epsilon(q) * EFFECTIVE_SIGN),
    ];
    let mut triplets: Vec<_> = stark_diagonal(n, &shifts)
        .into_iter()
        .enumerate()
        .map(|(i, v)| (i, i, v))
        .collect();
    match branch {
        Branch::Excited => {
            for (r, c, v) in exchange_triplets(n, p, q, chi) {
                triplets.push((r, c, v));
                triplets.push((c, r, v.conj()));
            }
        }
        Branch::Ground => {
            let both = 2.0 * chi.re;
            triplets.extend(
                (0..dim)
                    .filter(|&i| i & bit(p) == 0 && i & bit(q) == 0)
                    .map(|i| (i, i, real(both))),
            );
        }
    }
    SparseOperator::from_triplets(dim, triplets)
}

fn check_pair(config: &NetworkConfig, p: usize, q: usize) -> Result<Branch> {
    for a in [p, q] {
        if a == 0 || a > config.n {
            return Err(Error::IndexOutOfRange {
                what: "atom",
                index: a,
                limit: config.n,
            });
        }
    }
    if p == q {
        return Err(Error::Precondition(format!(
            "pair ({p}, {q}) repeats an atom"
        )));
    }
    let dp = single_active_drive(config, p)?;
    let dq = single_active_drive(config, q)?;
    if dp.branch != dq.branch {
        return Err(Error::Precondition(format!(
            "pair ({p}, {q}) mixes the e-r and g-r branches"
        )));
    }
    if (dp.detuning - dq.detuning).abs() > PAIRING_TOLERANCE {
        return Err(Error::Precondition(format!(
            "pair ({p}, {q}) is not resonant: Delta_1 = {} vs {}",
            dp.detuning, dq.detuning
        )));
    }
    Ok(dp.branch)
}

/// Selective two-qubit Hamiltonian for `(p, q)` on the qubit register.
///
/// Requires equal Rabi frequencies and detunings on `p` and `q` and no other
/// driven atom.
pub fn build_effective_pair(config: &NetworkConfig, p: usize, q: usize) -> Result<SparseOperator> {
    let branch = check_pair(config, p, q)?;
    let (dp, dq) = (
        single_active_drive(config, p)?,
        single_active_drive(config, q)?,
    );
    if dp.rabi != dq.rabi {
        return Err(Error::Precondition(format!(
            "pair ({p}, {q}) needs equal Rabi frequencies, got {} and {}",
            dp.rabi, dq.rabi
        )));
    }
    if let Some(other) = config.active_drives().find(|d| d.atom != p && d.atom != q) {
        return Err(Error::Precondition(format!(
            "atom {} is driven outside the selected pair ({p}, {q})",
            other.atom
        )));
    }
    let table = coupling_table(config)?;
    Ok(pair_block(&table, p, q, branch))
}

/// Result of [`build_effective_parallel`].
#[derive(Clone, Debug)]
pub struct ParallelHamiltonian {
    pub operator: SparseOperator,
    pub branches: Vec<Branch>,
    /// Smallest `|Delta_1 gap| / |chi|` across pairs of pairs.
    pub min_gap_ratio: Option<f64>,
    pub warnings: Vec<String>,
}

/// Sum of independent pair blocks. Pairs on the `g-r` branch contribute a
/// conditional phase instead of an exchange.
pub fn build_effective_parallel(
    config: &NetworkConfig,
    pairs: &[(usize, usize)],
) -> Result<ParallelHamiltonian> {
    if pairs.is_empty() {
        return Err(Error::Precondition("no pairs given".into()));
    }
    let mut seen = Vec::new();
    for &(p, q) in pairs {
        for a in [p, q] {
            if seen.contains(&a) {
                return Err(Error::Precondition(format!(
                    "atom {a} appears in more than one pair"
                )));
            }
            seen.push(a);
        }
    }
    let branches = pairs
        .iter()
        .map(|&(p, q)| check_pair(config, p, q))
        .collect::<Result<Vec<_>>>()?;
    if let Some(other) = config.active_drives().find(|d| !seen.contains(&d.atom)) {
        return Err(Error::Precondition(format!(
            "atom {} is driven but belongs to no pair",
            other.atom
        )));
    }
    let table = coupling_table(config)?;

    let mut warnings = Vec::new();
    let mut min_gap_ratio: Option<f64> = None;
    for (i, &(p, q)) in pairs.iter().enumerate() {
        for &(u, v) in &pairs[i + 1..] {
            let gap = (single_active_drive(config, p)?.detuning
                - single_active_drive(config, u)?.detuning)
                .abs();
            let scale = [(p, q), (u, v), (p, u), (p, v), (q, u), (q, v)]
                .iter()
                .map(|&(a, b)| table.chi(a, b).norm())
                .fold(0.0, f64::max);
            if scale == 0.0 {
                continue;
            }
            let ratio = gap / scale;
            min_gap_ratio = Some(min_gap_ratio.map_or(ratio, |r: f64| r.min(ratio)));
            if ratio.is_nan() || ratio < HIERARCHY_THRESHOLD {
                warnings.push(format!(
                    "pairs ({p},{q}) and ({u},{v}): detuning gap / |chi| = {ratio:.3} < {HIERARCHY_THRESHOLD}"
                ));
            }
        }
    }

    let dim = 1usize << config.n;
    let blocks: Vec<_> = pairs
        .iter()
        .zip(&branches)
        .map(|(&(p, q), &b)| pair_block(&table, p, q, b))
        .collect();
    Ok(ParallelHamiltonian {
        operator: SparseOperator::sum(dim, blocks.iter())?,
        branches,
        min_gap_ratio,
        warnings,
    })
}

/// How the per-site Stark shifts of a chain are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StarkCompensation {
    /// Keep `epsilon_l` as computed.
    #[default]
    None,
    /// Add a diagonal shift on each site so every `epsilon_l` equals their mean.
    Uniform,
}

/// Nearest-neighbour chain parameters extracted from a two-drive config.
#[derive(Clone, Debug)]
pub struct ChainHamiltonian {
    pub operator: SparseOperator,
    /// `chi_{l,l+1}`, index `l - 1`, ring-closed.
    pub links: Vec<C64>,
    /// Stark shifts after compensation.
    pub epsilon: Vec<f64>,
    /// Diagonal shift added on each site.
    pub compensation: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Checks the two-drive pairing `Delta_{1,l,2} = Delta_{1,l+1,1}` on every link
/// and returns link couplings plus off-resonance warnings.
fn chain_links(
    config: &NetworkConfig,
    branch: Branch,
) -> Result<(CouplingTable, Vec<C64>, Vec<String>)> {
    let n = config.n;
    for l in 1..=n {
        for slot in 1..=2 {
            let d = config
                .drives_on(l)
                .find(|d| d.slot == slot && d.is_active())
                .ok_or_else(|| {
                    Error::Precondition(format!("atom {l} lacks an active drive in slot {slot}"))
                })?;
            if d.branch != branch {
                return Err(Error::Precondition(format!(
                    "atom {l} slot {slot} is on the {} branch, expected {branch}",
                    d.branch
                )));
            }
        }
    }
    for l in 1..=n {
        let next = l % n + 1;
        let right = config.drive(l, 2).map(|d| d.detuning).unwrap_or_default();
        let left = config
            .drive(next, 1)
            .map(|d| d.detuning)
            .unwrap_or_default();
        if (right - left).abs() > PAIRING_TOLERANCE {
            return Err(Error::Precondition(format!(
                "link ({l},{next}) unpaired: Delta_1({l},2) = {right} but Delta_1({next},1) = {left}"
            )));
        }
    }
    let table = coupling_table(config)?;
    let links: Vec<C64> = (1..=n)
        .map(|l| table.chi_slots(l, l % n + 1, 2, 1) * EFFECTIVE_SIGN)
        .collect();

    let mut warnings = Vec::new();
    for p in &table.pairs {
        let linked =
            |a: usize, sa: usize, b: usize, sb: usize| sa == 2 && sb == 1 && b == a % n + 1;
        let paired = linked(p.l, p.slot_l, p.m, p.slot_m) || linked(p.m, p.slot_m, p.l, p.slot_l);
        if paired || p.chi.norm() == 0.0 {
            continue;
        }
        let ratio = p.big_lambda.abs() / p.chi.norm();
        if ratio.is_nan() || ratio < HIERARCHY_THRESHOLD {
            warnings.push(format!(
                "off-pair term ({},{}) d=({},{}): |Lambda|/|chi| = {ratio:.3} < {HIERARCHY_THRESHOLD}",
                p.l, p.m, p.slot_l, p.slot_m
            ));
        }
    }
    Ok((table, links, warnings))
}

fn compensate(epsilon: &[f64], mode: StarkCompensation) -> Vec<f64> {
    match mode {
        StarkCompensation::None => vec![0.0; epsilon.len()],
        StarkCompensation::Uniform => {
            let mean = epsilon.iter().sum::<f64>() / epsilon.len() as f64;
            epsilon.iter().map(|e| mean - e).collect()
        }
    }
}

/// Resonant nearest-neighbour XY ring from two `e-r` drives per atom.
pub fn build_effective_xy_chain(
    config: &NetworkConfig,
    stark: StarkCompensation,
) -> Result<ChainHamiltonian> {
    let (table, links, warnings) = chain_links(config, Branch::Excited)?;
    let compensation = compensate(&table.epsilon, stark);
    let epsilon: Vec<f64> = table
        .epsilon
        .iter()
        .zip(&compensation)
        .map(|(e, c)| (e + c) * EFFECTIVE_SIGN)
        .collect();
    let operator = xy_chain_operator(config.n, &epsilon, &links)?;
    Ok(ChainHamiltonian {
        operator,
        links,
        epsilon,
        compensation,
        warnings,
    })
}

/// Nearest-neighbour Ising ring from two `g-r` drives per atom.
#[derive(Clone, Debug)]
pub struct IsingHamiltonian {
    pub operator: SparseOperator,
    /// Shift on `|g_l>`, index `l - 1`.
    pub epsilon: Vec<f64>,
    /// Weight of `|g_l g_{l+1}><g_l g_{l+1}|`, i.e. `2 Re chi_{l,l+1}`.
    pub coupling: f64,
    pub warnings: Vec<String>,
}

/// Relative spread of link magnitudes accepted as "equalized".
pub const EQUALIZE_TOLERANCE: f64 = 1e-6;

pub fn build_effective_ising(config: &NetworkConfig) -> Result<IsingHamiltonian> {
    let (table, links, warnings) = chain_links(config, Branch::Ground)?;
    let residual = link_residual(&links, links[0].norm());
    if residual > EQUALIZE_TOLERANCE {
        return Err(Error::Precondition(format!(
            "link couplings differ by {residual:e} (relative); equalize the Rabi frequencies first"
        )));
    }
    let coupling = 2.0 * links.iter().map(|c| c.re).sum::<f64>() / links.len() as f64;
    let epsilon: Vec<f64> = table.epsilon.iter().map(|e| e * EFFECTIVE_SIGN).collect();
    Ok(IsingHamiltonian {
        operator: ising_operator(config.n, &epsilon, coupling)?,
        epsilon,
        coupling,
        warnings,
    })
}

fn link_residual(links: &[C64], target: f64) -> f64 {
    links
        .iter()
        .map(|c| ((c.norm() - target) / target).abs())
        .fold(0.0, f64::max)
}

/// Chain config whose link couplings all have magnitude `target`.
#[derive(Clone, Debug)]
pub struct Equalized {
    pub config: NetworkConfig,
    /// Largest relative deviation `| |chi_l| - target | / target`.
    pub residual: f64,
    pub iterations: usize,
}

const EQUALIZE_MAX_ITERATIONS: usize = 50;

/// Rescales `Omega_{l,2}` and `Omega_{l+1,1}` on every link by
/// `sqrt(target / |chi_{l,l+1}|)` until all links match `target`.
pub fn equalize_chain_rabi(config: &NetworkConfig, target: f64) -> Result<Equalized> {
    if !target.is_finite() || target <= 0.0 {
        return Err(Error::Precondition(format!(
            "target coupling must be positive and finite, got {target}"
        )));
    }
    let branch = config
        .active_drives()
        .next()
        .map(|d| d.branch)
        .ok_or_else(|| Error::Precondition("chain has no active drives".into()))?;
    let n = config.n;
    let mut current = config.clone();
    let mut best = f64::INFINITY;
    for iteration in 0..=EQUALIZE_MAX_ITERATIONS {
        let (_, links, _) = chain_links(&current, branch)?;
        let residual = link_residual(&links, target);
        best = best.min(residual);
        if residual <= EQUALIZE_TOLERANCE {
            return Ok(Equalized {
                config: current,
                residual,
                iterations: iteration,
            });
        }
        for (l, chi) in (1..=n).zip(&links) {
            let scale = (target / chi.norm()).sqrt();
            let next = l % n + 1;
            for d in current.drives.iter_mut() {
                if (d.atom == l && d.slot == 2) || (d.atom == next && d.slot == 1) {
                    d.rabi *= scale;
                }
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: EQUALIZE_MAX_ITERATIONS,
        residual: best,
    })
}

/// Layout the effective builders act on.
pub fn qubit_layout(config: &NetworkConfig) -> BasisLayout {
    BasisLayout::qubits(config.n)
}
