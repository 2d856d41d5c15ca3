//! Instantaneous Hamiltonians (ħ = 1, entries in rad/s) for the supported
//! physical models, and a name-keyed registry used to pick one at runtime.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulses::{HybridSequence, RabiTransition};
use crate::state::{QutritState, MAX_DIM};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Index of the ancilla level in the four-level basis.
pub const ANCILLA: usize = 3;

/// Small dense Hermitian matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct Hamiltonian {
    dim: usize,
    m: [[Complex64; MAX_DIM]; MAX_DIM],
}

impl Hamiltonian {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Self { dim, m: [[ZERO; MAX_DIM]; MAX_DIM] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[i][j]
    }

    /// Adds `z` to entry `(i, j)` and `z*` to `(j, i)`.
    pub fn add_coupling(&mut self, i: usize, j: usize, z: Complex64) {
        debug_assert!(i != j);
        self.m[i][j] += z;
        self.m[j][i] += z.conj();
    }

    pub fn add_diagonal(&mut self, i: usize, e: f64) {
        self.m[i][i] += e;
    }

    pub fn apply(&self, psi: &QutritState) -> QutritState {
        let mut out = QutritState::zeros(self.dim);
        for i in 0..self.dim {
            let mut acc = ZERO;
            for j in 0..self.dim {
                acc += self.m[i][j] * psi[j];
            }
            out[i] = acc;
        }
        out
    }

    /// `max_{ij} |H_ij − H_ji*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.m[i][j] - self.m[j][i].conj()).norm());
            }
        }
        worst
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.m[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        let mut h = *self;
        for row in h.m.iter_mut() {
            for z in row.iter_mut() {
                *z = z.conj();
            }
        }
        h
    }
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<_> = (0..self.dim).map(|i| &self.m[i][..self.dim]).collect();
        f.debug_list().entries(rows).finish()
    }
}

/// A time-dependent Hamiltonian the propagator can integrate.
pub trait Model: Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn hamiltonian(&self, t: f64) -> Hamiltonian;

    /// Times at which `H(t)` has a kink or jump; integrators land on them.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "ideal", alias = "ideal_rwa_3")]
    IdealRwa3,
    #[serde(rename = "ancilla", alias = "ancilla_4")]
    Ancilla4,
    #[serde(rename = "transmon", alias = "transmon_crosstalk_3")]
    TransmonCrosstalk3,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [Self::IdealRwa3, Self::Ancilla4, Self::TransmonCrosstalk3];

    /// Short registry name.
    pub fn as_str(self) -> &'static str {
        match self {
            Self::IdealRwa3 => "ideal",
            Self::Ancilla4 => "ancilla",
            Self::TransmonCrosstalk3 => "transmon",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::Ancilla4 => 4,
            _ => 3,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" | "ideal_rwa_3" => Ok(Self::IdealRwa3),
            "ancilla" | "ancilla_4" => Ok(Self::Ancilla4),
            "transmon" | "transmon_crosstalk_3" => Ok(Self::TransmonCrosstalk3),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }
}

/// Anharmonicity and drive cross-coupling factors of a transmon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmonModel {
    /// `δ = E_c/ħ` in rad/s.
    pub anharmonicity: f64,
    /// Relative strength with which the 0-1 drive also couples 1-2.
    pub cross_01_to_12: f64,
    /// Relative strength with which the 1-2 drive also couples 0-1.
    pub cross_12_to_01: f64,
}

impl Default for TransmonModel {
    /// Harmonic-approximation factors (√2, 1/√2) and δ = 2π·300 MHz.
    fn default() -> Self {
        Self {
            anharmonicity: TAU * 300e6,
            cross_01_to_12: SQRT_2,
            cross_12_to_01: FRAC_1_SQRT_2,
        }
    }
}

impl TransmonModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.anharmonicity > 0.0 && self.anharmonicity.is_finite()) {
            return Err(Error::Config(format!(
                "anharmonicity must be > 0, got {}",
                self.anharmonicity
            )));
        }
        // Zero cross factors are allowed so the ideal limit can be reproduced.
        if !(self.cross_01_to_12 >= 0.0 && self.cross_12_to_01 >= 0.0) {
            return Err(Error::Config("cross-coupling factors must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// `H/ħ` of the resonantly driven ladder in the rotating-wave approximation.
///
/// The 0-1 entry carries the STIRAP pump and, when it targets the 0-1
/// transition, the Rabi preparation pulse; the two never overlap in a valid
/// sequence.
pub fn build_ideal(seq: &HybridSequence, t: f64) -> Hamiltonian {
    let mut h = Hamiltonian::zeros(3);
    fill_ladder(&mut h, seq, t);
    h
}

fn fill_ladder(h: &mut Hamiltonian, seq: &HybridSequence, t: f64) {
    let (c01, c12) = seq.stirap_couplings(t);
    let mut c01 = c01;
    if seq.rabi_transition() == RabiTransition::ZeroOne {
        c01 += seq.rabi_coupling(t);
    }
    h.add_coupling(0, 1, 0.5 * c01);
    h.add_coupling(1, 2, 0.5 * c12);
}

/// Four-level Hamiltonian: the ladder block plus a 0-a Rabi coupling and an
/// optional 2-a readout coupling. Basis order `{|0⟩, |1⟩, |2⟩, |a⟩}`.
pub fn build_ancilla(seq: &HybridSequence, t: f64) -> Hamiltonian {
    let mut h = Hamiltonian::zeros(4);
    fill_ladder(&mut h, seq, t);
    if seq.rabi_transition() == RabiTransition::ZeroAncilla {
        h.add_coupling(0, ANCILLA, 0.5 * seq.rabi_coupling(t));
    }
    h.add_coupling(2, ANCILLA, 0.5 * seq.readout_coupling(t));
    h
}

/// Ladder Hamiltonian with drive cross-couplings, in the frame rotating at
/// the two (resonant) drive frequencies.
///
/// The 0-1 drive leaks into the 1-2 entry as
/// `½·c₀₁→₁₂·|Ω₀₁(t)|e^{iφ₀₁}e^{+iδt}` and the 1-2 drive into the 0-1 entry
/// as `½·c₁₂→₀₁·|Ω₁₂(t)|e^{iφ₁₂}e^{−iδt}`.
pub fn build_crosstalk(seq: &HybridSequence, tm: &TransmonModel, t: f64) -> Hamiltonian {
    let mut h = build_ideal(seq, t);
    let (c01, c12) = seq.stirap_couplings(t);
    let rot = Complex64::from_polar(1.0, tm.anharmonicity * t);
    if tm.cross_01_to_12 != 0.0 {
        h.add_coupling(1, 2, 0.5 * tm.cross_01_to_12 * c01 * rot);
    }
    if tm.cross_12_to_01 != 0.0 {
        h.add_coupling(0, 1, 0.5 * tm.cross_12_to_01 * c12 * rot.conj());
    }
    h
}

#[derive(Clone, Debug)]
pub struct IdealRwa {
    pub sequence: HybridSequence,
}

impl Model for IdealRwa {
    fn name(&self) -> &'static str {
        "ideal"
    }

    fn dim(&self) -> usize {
        3
    }

    fn hamiltonian(&self, t: f64) -> Hamiltonian {
        build_ideal(&self.sequence, t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.sequence.breakpoints()
    }
}

#[derive(Clone, Debug)]
pub struct AncillaLadder {
    pub sequence: HybridSequence,
}

impl Model for AncillaLadder {
    fn name(&self) -> &'static str {
        "ancilla"
    }

    fn dim(&self) -> usize {
        4
    }

    fn hamiltonian(&self, t: f64) -> Hamiltonian {
        build_ancilla(&self.sequence, t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.sequence.breakpoints()
    }
}

#[derive(Clone, Debug)]
pub struct TransmonCrosstalk {
    pub sequence: HybridSequence,
    pub transmon: TransmonModel,
}

impl Model for TransmonCrosstalk {
    fn name(&self) -> &'static str {
        "transmon"
    }

    fn dim(&self) -> usize {
        3
    }

    fn hamiltonian(&self, t: f64) -> Hamiltonian {
        build_crosstalk(&self.sequence, &self.transmon, t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.sequence.breakpoints()
    }
}

/// Everything a model factory may need.
#[derive(Clone, Copy, Debug)]
pub struct ModelSpec {
    pub sequence: HybridSequence,
    pub transmon: TransmonModel,
}

pub type ModelFactory = fn(&ModelSpec) -> Result<Box<dyn Model>>;

/// Name → factory table of Hamiltonian models.
pub struct ModelRegistry {
    factories: BTreeMap<&'static str, ModelFactory>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &'static str, factory: ModelFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, name: &str, spec: &ModelSpec) -> Result<Box<dyn Model>> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| Error::UnknownModel(name.to_string()))?;
        factory(spec)
    }
}

impl Default for ModelRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("ideal", |s| {
            if s.sequence.rabi_transition() != RabiTransition::ZeroOne {
                return Err(Error::Config("the ideal model needs a 0-1 Rabi pulse".into()));
            }
            Ok(Box::new(IdealRwa { sequence: s.sequence }))
        });
        r.register("ancilla", |s| {
            if s.sequence.rabi_transition() != RabiTransition::ZeroAncilla {
                return Err(Error::Config("the ancilla model needs a 0-a Rabi pulse".into()));
            }
            Ok(Box::new(AncillaLadder { sequence: s.sequence }))
        });
        r.register("transmon", |s| {
            s.transmon.validate()?;
            if s.sequence.rabi_transition() != RabiTransition::ZeroOne {
                return Err(Error::Config("the transmon model needs a 0-1 Rabi pulse".into()));
            }
            Ok(Box::new(TransmonCrosstalk { sequence: s.sequence, transmon: s.transmon }))
        });
        r
    }
}

/// Builds a model from the default registry.
pub fn build_model(kind: ModelKind, spec: &ModelSpec) -> Result<Box<dyn Model>> {
    ModelRegistry::default().build(kind.as_str(), spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{PulseEnvelope, SequenceParams, StirapDrive};
    use std::f64::consts::PI;

    fn fig2() -> HybridSequence {
        SequenceParams::default().build().unwrap()
    }

    #[test]
    fn no_drive_gives_zero_matrix() {
        let s = SequenceParams {
            drive: StirapDrive::Amplitude { omega01: 0.0, omega12: 0.0 },
            rabi_area: 0.0,
            ..Default::default()
        }
        .build()
        .unwrap();
        for &t in &[-5e-7, -1e-7, 0.0, 2e-7] {
            assert_eq!(build_ideal(&s, t), Hamiltonian::zeros(3));
        }
    }

    #[test]
    fn ideal_entries_match_envelopes() {
        let s = fig2();
        let h = build_ideal(&s, 0.0);
        let a = s.stirap_01().evaluate(0.0);
        let b = s.stirap_12().evaluate(0.0);
        assert!((h.get(0, 1) - Complex64::from_polar(0.5 * a, PI / 3.0)).norm() < 1e-6);
        assert!((h.get(1, 2) - Complex64::from_polar(0.5 * b, PI / 4.0)).norm() < 1e-6);
        assert_eq!(h.get(0, 2), ZERO);
        for i in 0..3 {
            assert_eq!(h.get(i, i), ZERO);
        }
    }

    #[test]
    fn ancilla_decoupled_during_stirap() {
        let s = SequenceParams {
            rabi_transition: RabiTransition::ZeroAncilla,
            ..Default::default()
        }
        .build()
        .unwrap();
        let h = build_ancilla(&s, -1e-7);
        for k in 0..4 {
            assert_eq!(h.get(k, ANCILLA), ZERO);
            assert_eq!(h.get(ANCILLA, k), ZERO);
        }
        let t_rabi = s.rabi_end() - 1e-9;
        let h = build_ancilla(&s, t_rabi);
        assert!((h.get(0, ANCILLA).norm() - 0.5 * s.rabi().amplitude()).abs() < 1e-6);
        // The 0-a Rabi pulse does not leak into the 0-1 entry.
        assert!(h.get(0, 1).norm() < 1e-3 * h.get(0, ANCILLA).norm());
    }

    #[test]
    fn readout_couples_two_and_ancilla() {
        let s = SequenceParams {
            rabi_transition: RabiTransition::ZeroAncilla,
            ..Default::default()
        }
        .build()
        .unwrap()
        .interrupted_at_angle(PI / 4.0)
        .unwrap();
        let cut = s.interrupt_at().unwrap();
        let s = s
            .with_readout(PulseEnvelope::square(1e8, cut, 5e-9, -PI / 2.0).unwrap())
            .unwrap();
        let h = build_ancilla(&s, cut + 1e-9);
        assert!((h.get(2, ANCILLA) - Complex64::from_polar(0.5e8, -PI / 2.0)).norm() < 1e-6);
        assert_eq!(h.get(0, 1), ZERO);
    }

    #[test]
    fn zero_cross_factors_reduce_to_ideal() {
        let s = fig2();
        let tm = TransmonModel { cross_01_to_12: 0.0, cross_12_to_01: 0.0, ..Default::default() };
        for k in 0..50 {
            let t = s.rabi_start() + (s.horizon() - s.rabi_start()) * k as f64 / 49.0;
            assert_eq!(build_crosstalk(&s, &tm, t), build_ideal(&s, t));
        }
    }

    #[test]
    fn crosstalk_terms_oscillate_at_anharmonicity() {
        let s = fig2();
        let tm = TransmonModel::default();
        let t = -3e-8;
        let h = build_crosstalk(&s, &tm, t);
        let (c01, c12) = s.stirap_couplings(t);
        let want12 = 0.5 * c12 + 0.5 * SQRT_2 * c01 * Complex64::from_polar(1.0, tm.anharmonicity * t);
        let want01 = 0.5 * c01 + 0.5 * FRAC_1_SQRT_2 * c12 * Complex64::from_polar(1.0, -tm.anharmonicity * t);
        assert!((h.get(1, 2) - want12).norm() < 1e-6 * want12.norm());
        assert!((h.get(0, 1) - want01).norm() < 1e-6 * want01.norm());
    }

    #[test]
    fn all_models_are_hermitian() {
        let s = fig2();
        let tm = TransmonModel::default();
        let sa = SequenceParams { rabi_transition: RabiTransition::ZeroAncilla, ..Default::default() }
            .build()
            .unwrap();
        for k in 0..300 {
            let t = s.rabi_start() + (s.horizon() - s.rabi_start()) * k as f64 / 299.0;
            assert_eq!(build_ideal(&s, t).hermiticity_defect(), 0.0);
            assert_eq!(build_crosstalk(&s, &tm, t).hermiticity_defect(), 0.0);
            assert_eq!(build_ancilla(&sa, t).hermiticity_defect(), 0.0);
        }
    }

    #[test]
    fn registry_resolves_names() {
        let reg = ModelRegistry::default();
        let names: Vec<_> = reg.names().collect();
        assert_eq!(names, vec!["ancilla", "ideal", "transmon"]);
        let spec = ModelSpec { sequence: fig2(), transmon: TransmonModel::default() };
        assert_eq!(reg.build("ideal", &spec).unwrap().dim(), 3);
        assert!(matches!(reg.build("lindblad", &spec), Err(Error::UnknownModel(_))));
        // Ancilla model refuses a 0-1 Rabi pulse.
        assert!(reg.build("ancilla", &spec).is_err());
        for kind in ModelKind::ALL {
            assert_eq!(kind.as_str().parse::<ModelKind>().unwrap(), kind);
        }
    }
}
