//! Network configuration, mode spectrum and the parameter-hierarchy check.
//!
//! Every frequency is measured in units of the atom-cavity coupling `g`
//! (so `g = 1` unless a config overrides it) and time in units of `1/g`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::effective::formulas;
use crate::error::{Error, Result};

/// Ratio below which a "much larger than" condition is reported.
pub const HIERARCHY_THRESHOLD: f64 = 10.0;

/// Which ground state a classical drive couples to the excited level `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `|e> <-> |r>`; the cavity closes the Raman loop through `|g>`.
    #[serde(rename = "e-r")]
    Excited,
    /// `|g> <-> |r>`, sharing the transition with the cavity mode.
    #[serde(rename = "g-r")]
    Ground,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Excited => f.write_str("e-r"),
            Branch::Ground => f.write_str("g-r"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
}

/// One classical laser field acting on one atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    /// Atom index, 1-based.
    pub atom: usize,
    pub branch: Branch,
    /// Drive slot (1 or 2).
    #[serde(rename = "d")]
    pub slot: usize,
    pub rabi: f64,
    pub detuning: f64,
}

impl Drive {
    pub fn new(atom: usize, branch: Branch, slot: usize, rabi: f64, detuning: f64) -> Self {
        Self {
            atom,
            branch,
            slot,
            rabi,
            detuning,
        }
    }

    pub fn is_active(&self) -> bool {
        self.rabi != 0.0
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

/// Physical parameters of the fiber-linked ring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub g: f64,
    pub nu: f64,
    pub delta2: f64,
    #[serde(default = "one_usize")]
    pub photon_cutoff: usize,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub drives: Vec<Drive>,
}

impl NetworkConfig {
    /// An undriven ring with unit cavity coupling.
    pub fn new(n: usize, nu: f64, delta2: f64) -> Self {
        Self {
            n,
            g: 1.0,
            nu,
            delta2,
            photon_cutoff: 1,
            gamma: 0.0,
            kappa: 0.0,
            boundary: Boundary::Periodic,
            drives: Vec::new(),
        }
    }

    /// Three nodes, atoms 1 and 3 driven on `e-r` with `Omega = g`,
    /// `Delta_1 = 16 g`, `nu = g`, `Delta_2 = 18.5 g`. Atom 2 is idle.
    pub fn three_node_example() -> Self {
        Self::new(3, 1.0, 18.5)
            .with_drive(Drive::new(1, Branch::Excited, 1, 1.0, 16.0))
            .with_drive(Drive::new(3, Branch::Excited, 1, 1.0, 16.0))
    }

    /// Two drives per atom with `Delta_1(l, 2) = Delta_1(l+1, 1) = links[l - 1]`,
    /// so every nearest-neighbour link is Raman resonant on its own detuning.
    pub fn ring_chain(
        n: usize,
        nu: f64,
        delta2: f64,
        branch: Branch,
        rabi: f64,
        links: &[f64],
    ) -> Self {
        assert_eq!(links.len(), n, "one detuning per link");
        let mut config = Self::new(n, nu, delta2);
        for l in 1..=n {
            let left = links[(l + n - 2) % n];
            config.drives.push(Drive::new(l, branch, 1, rabi, left));
            config
                .drives
                .push(Drive::new(l, branch, 2, rabi, links[l - 1]));
        }
        config
    }

    pub fn with_drive(mut self, drive: Drive) -> Self {
        self.drives.push(drive);
        self
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.photon_cutoff = cutoff;
        self
    }

    pub fn with_decay(mut self, gamma: f64, kappa: f64) -> Self {
        self.gamma = gamma;
        self.kappa = kappa;
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Drives with nonzero Rabi frequency.
    pub fn active_drives(&self) -> impl Iterator<Item = &Drive> {
        self.drives.iter().filter(|d| d.is_active())
    }

    pub fn drives_on(&self, atom: usize) -> impl Iterator<Item = &Drive> {
        self.drives.iter().filter(move |d| d.atom == atom)
    }

    pub fn drive(&self, atom: usize, slot: usize) -> Option<&Drive> {
        self.drives
            .iter()
            .find(|d| d.atom == atom && d.slot == slot)
    }

    /// Rabi frequency of `(atom, slot)`; a missing drive reads as zero.
    pub fn rabi(&self, atom: usize, slot: usize) -> f64 {
        self.drive(atom, slot).map_or(0.0, |d| d.rabi)
    }

    pub fn max_rabi(&self) -> f64 {
        self.drives.iter().map(|d| d.rabi).fold(0.0, f64::max)
    }

    /// Structural checks. Hierarchy problems are not errors; see [`validate_config`].
    pub fn check_structure(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.photon_cutoff < 1 {
            return bad("photon_cutoff must be at least 1".into());
        }
        for (name, value) in [
            ("g", self.g),
            ("nu", self.nu),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
        ] {
            if !value.is_finite() || value < 0.0 {
                return bad(format!(
                    "{name} must be finite and non-negative, got {value}"
                ));
            }
        }
        if !self.delta2.is_finite() {
            return bad("delta2 must be finite".into());
        }
        for (i, d) in self.drives.iter().enumerate() {
            if d.atom < 1 || d.atom > self.n {
                return bad(format!("drive {i}: atom {} outside 1..={}", d.atom, self.n));
            }
            if d.slot != 1 && d.slot != 2 {
                return bad(format!("drive {i}: slot d must be 1 or 2, got {}", d.slot));
            }
            if !d.rabi.is_finite() || d.rabi < 0.0 {
                return bad(format!("drive {i}: rabi must be finite and non-negative"));
            }
            if !d.detuning.is_finite() {
                return bad(format!("drive {i}: detuning must be finite"));
            }
            if d.rabi > 0.0 && d.detuning == 0.0 {
                return bad(format!(
                    "drive {i}: resonant drive (detuning 0) on atom {} cannot be eliminated",
                    d.atom
                ));
            }
            let clash = self.drives[..i]
                .iter()
                .any(|o| o.atom == d.atom && o.branch == d.branch && o.slot == d.slot);
            if clash {
                return bad(format!(
                    "drive {i}: duplicate slot {} on atom {} ({})",
                    d.slot, d.atom, d.branch
                ));
            }
        }
        Ok(())
    }
}

/// Eigenfrequencies `2 nu cos(pi k / n)` of the ring's photon hopping, `k = 1..2n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSpectrum {
    pub frequencies: Vec<f64>,
}

impl ModeSpectrum {
    pub fn new(n: usize, nu: f64) -> Self {
        let frequencies = (1..=2 * n)
            .map(|k| 2.0 * nu * (PI * k as f64 / n as f64).cos())
            .collect();
        Self { frequencies }
    }

    /// `omega_k` with 1-based `k`.
    pub fn omega(&self, k: usize) -> f64 {
        self.frequencies[k - 1]
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

pub fn mode_spectrum(config: &NetworkConfig) -> ModeSpectrum {
    ModeSpectrum::new(config.n, config.nu)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioKind {
    /// `|Delta_1| / max Omega`
    DetuningOverRabi,
    /// `|Delta_2 - omega_k| sqrt(2n) / g`
    CavityDetuningOverCoupling,
    /// `|delta| / |lambda|`
    RamanDetuningOverCoupling,
    /// `|delta| / |eta|` (Stark shift of the driven level)
    RamanDetuningOverDriveShift,
    /// `|delta| / |xi|` (dispersive photon shift)
    RamanDetuningOverPhotonShift,
}

impl RatioKind {
    /// Stark-shift ratios are reported as notices rather than warnings.
    pub fn is_stark(self) -> bool {
        matches!(
            self,
            RatioKind::RamanDetuningOverDriveShift | RatioKind::RamanDetuningOverPhotonShift
        )
    }
}

impl fmt::Display for RatioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RatioKind::DetuningOverRabi => "Delta1/Omega",
            RatioKind::CavityDetuningOverCoupling => "|Delta2-omega_k|*sqrt(2n)/g",
            RatioKind::RamanDetuningOverCoupling => "delta/lambda",
            RatioKind::RamanDetuningOverDriveShift => "delta/eta",
            RatioKind::RamanDetuningOverPhotonShift => "delta/xi",
        };
        f.write_str(s)
    }
}

/// One evaluated hierarchy ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct Ratio {
    pub kind: RatioKind,
    pub atom: Option<usize>,
    pub slot: Option<usize>,
    pub k: Option<usize>,
    pub value: f64,
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(a) = self.atom {
            write!(f, " atom={a}")?;
        }
        if let Some(d) = self.slot {
            write!(f, " d={d}")?;
        }
        if let Some(k) = self.k {
            write!(f, " k={k}")?;
        }
        write!(f, " = {:.4}", self.value)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    /// Every evaluated ratio, drive-free cavity ratios first.
    pub ratios: Vec<Ratio>,
    /// Elimination ratios below [`HIERARCHY_THRESHOLD`].
    pub warnings: Vec<Ratio>,
    /// Stark-shift ratios below [`HIERARCHY_THRESHOLD`].
    pub notices: Vec<Ratio>,
}

impl ValidationReport {
    fn min_of(&self, stark: bool) -> Option<&Ratio> {
        self.ratios
            .iter()
            .filter(|r| r.kind.is_stark() == stark)
            .min_by(|a, b| a.value.total_cmp(&b.value))
    }

    /// Smallest elimination ratio (the quantity the threshold is applied to).
    pub fn min_ratio(&self) -> Option<&Ratio> {
        self.min_of(false)
    }

    pub fn min_stark_ratio(&self) -> Option<&Ratio> {
        self.min_of(true)
    }

    pub fn min_of_kind(&self, kind: RatioKind) -> Option<&Ratio> {
        self.ratios
            .iter()
            .filter(|r| r.kind == kind)
            .min_by(|a, b| a.value.total_cmp(&b.value))
    }

    /// Ratios evaluated for one drive; empty for an inactive or missing drive.
    pub fn drive_ratios(&self, atom: usize, slot: usize) -> Vec<&Ratio> {
        self.ratios
            .iter()
            .filter(|r| r.atom == Some(atom) && r.slot == Some(slot))
            .collect()
    }
}

/// Evaluates the large-detuning conditions behind both elimination steps.
///
/// The `Omega` of the first condition is read as the largest Rabi frequency
/// in the network.
pub fn validate_config(config: &NetworkConfig) -> Result<ValidationReport> {
    config.check_structure()?;
    let spectrum = mode_spectrum(config);
    let two_n = 2 * config.n;
    let omega_max = config.max_rabi();
    let mut ratios = Vec::new();

    if config.g > 0.0 {
        for k in 1..=two_n {
            let cavity = (config.delta2 - spectrum.omega(k)).abs();
            ratios.push(Ratio {
                kind: RatioKind::CavityDetuningOverCoupling,
                atom: None,
                slot: None,
                k: Some(k),
                value: cavity * (two_n as f64).sqrt() / config.g,
            });
        }
    }

    for drive in config.active_drives() {
        let tag = |kind, k, value| Ratio {
            kind,
            atom: Some(drive.atom),
            slot: Some(drive.slot),
            k,
            value,
        };
        ratios.push(tag(
            RatioKind::DetuningOverRabi,
            None,
            drive.detuning.abs() / omega_max,
        ));
        let eta = formulas::eta(drive.rabi, drive.detuning);
        for k in 1..=two_n {
            let omega_k = spectrum.omega(k);
            let delta = formulas::delta(config.delta2, omega_k, drive.detuning).abs();
            let lambda = formulas::lambda(
                drive.rabi,
                config.g,
                config.n,
                drive.detuning,
                config.delta2,
                omega_k,
            )
            .abs();
            let xi = formulas::xi(config.g, config.n, config.delta2, omega_k).abs();
            ratios.push(tag(
                RatioKind::RamanDetuningOverCoupling,
                Some(k),
                delta / lambda,
            ));
            ratios.push(tag(
                RatioKind::RamanDetuningOverDriveShift,
                Some(k),
                delta / eta.abs(),
            ));
            if xi > 0.0 {
                ratios.push(tag(
                    RatioKind::RamanDetuningOverPhotonShift,
                    Some(k),
                    delta / xi,
                ));
            }
        }
    }

    let below = |stark: bool| {
        ratios
            .iter()
            .filter(|r| {
                r.kind.is_stark() == stark && (r.value.is_nan() || r.value < HIERARCHY_THRESHOLD)
            })
            .cloned()
            .collect::<Vec<_>>()
    };
    let warnings = below(false);
    let notices = below(true);
    Ok(ValidationReport {
        ratios,
        warnings,
        notices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_for_three_nodes() {
        let s = ModeSpectrum::new(3, 1.0);
        let expected = [1.0, -1.0, -2.0, -1.0, 1.0, 2.0];
        for (w, e) in s.frequencies.iter().zip(expected) {
            assert!((w - e).abs() < 1e-14, "{w} vs {e}");
        }
    }

    #[test]
    fn spectrum_vanishes_without_hopping() {
        assert!(ModeSpectrum::new(4, 0.0)
            .frequencies
            .iter()
            .all(|&w| w == 0.0));
    }

    #[test]
    fn spectrum_is_odd_in_nu_and_symmetric_in_k() {
        let n = 5;
        let s = ModeSpectrum::new(n, 0.7);
        let m = ModeSpectrum::new(n, -0.7);
        for k in 1..2 * n {
            assert!((s.omega(k) - s.omega(2 * n - k)).abs() < 1e-14);
            assert_eq!(s.omega(k), -m.omega(k));
        }
        assert_eq!(s.len(), 2 * n);
    }

    #[test]
    fn example_config_has_no_warnings() {
        let report = validate_config(&NetworkConfig::three_node_example()).unwrap();
        assert!(report.warnings.is_empty(), "{:?}", report.warnings);
        let raman = report
            .min_of_kind(RatioKind::RamanDetuningOverCoupling)
            .unwrap();
        assert_eq!(raman.k, Some(6));
        assert!((raman.value - 19.897).abs() < 1e-2, "{}", raman.value);
        let min = report.min_ratio().unwrap();
        assert_eq!(min.kind, RatioKind::DetuningOverRabi);
        assert_eq!(min.value, 16.0);
        // the k = 6 Stark ratio delta/eta is 0.5 / (1/16) = 8, once per driven atom
        let stark = report.min_stark_ratio().unwrap();
        assert!((stark.value - 8.0).abs() < 1e-12);
        assert_eq!(report.notices.len(), 2);
    }

    #[test]
    fn undriven_config_reports_no_drive_ratios() {
        let mut cfg = NetworkConfig::three_node_example();
        for d in &mut cfg.drives {
            d.rabi = 0.0;
        }
        let report = validate_config(&cfg).unwrap();
        assert!(report.warnings.is_empty());
        assert!(report.drive_ratios(1, 1).is_empty());
        assert!(report.drive_ratios(3, 1).is_empty());
    }

    #[test]
    fn equal_rabi_and_detuning_warns() {
        let mut cfg = NetworkConfig::three_node_example();
        cfg.drives[0].rabi = 5.0;
        cfg.drives[0].detuning = 5.0;
        let report = validate_config(&cfg).unwrap();
        assert!(report
            .warnings
            .iter()
            .any(|w| w.kind == RatioKind::DetuningOverRabi
                && w.atom == Some(1)
                && (w.value - 1.0).abs() < 1e-12));
    }

    #[test]
    fn structural_errors_are_hard() {
        let mut cfg = NetworkConfig::three_node_example();
        cfg.n = 1;
        cfg.drives.clear();
        assert!(matches!(
            validate_config(&cfg),
            Err(Error::InvalidConfig(_))
        ));

        let cfg = NetworkConfig::three_node_example().with_decay(-1.0, 0.0);
        assert!(validate_config(&cfg).is_err());

        let cfg = NetworkConfig::new(3, 1.0, 18.5).with_drive(Drive::new(
            1,
            Branch::Excited,
            1,
            1.0,
            0.0,
        ));
        assert!(cfg.check_structure().is_err());

        let cfg = NetworkConfig::new(3, 1.0, 18.5)
            .with_drive(Drive::new(1, Branch::Excited, 1, 1.0, 3.0))
            .with_drive(Drive::new(1, Branch::Excited, 1, 1.0, 4.0));
        assert!(cfg.check_structure().is_err());
    }

    #[test]
    fn validation_is_pure() {
        let cfg = NetworkConfig::three_node_example();
        assert_eq!(
            validate_config(&cfg).unwrap(),
            validate_config(&cfg).unwrap()
        );
    }

    #[test]
    fn toml_keys() {
        let text = r#"
            n = 3
            nu = 1.0
            delta2 = 18.5
            photon_cutoff = 1
            gamma = 0.003
            kappa = 0.003

            [[drives]]
            atom = 1
            branch = "e-r"
            d = 1
            rabi = 1.0
            detuning = 16.0

            [[drives]]
            atom = 3
            branch = "e-r"
            d = 1
            rabi = 1.0
            detuning = 16.0
        "#;
        let cfg = NetworkConfig::from_toml_str(text).unwrap();
        assert_eq!(
            cfg,
            NetworkConfig::three_node_example().with_decay(0.003, 0.003)
        );
        assert!(NetworkConfig::from_toml_str("n = \"three\"").is_err());
    }
}
