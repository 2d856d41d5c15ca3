//! TOML run configuration. Times are given in ns, drive frequencies in MHz
//! (Ω/2π) and areas in units of π; everything is converted to SI and rad/s
//! on the way into [`SequenceParams`].

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{ModelKind, TransmonModel};
use crate::propagator::PropagateOptions;
use crate::synthesis::ControlSettings;
use crate::pulses::{
    mhz_to_angular, HybridSequence, PulseEnvelope, RabiTransition, SequenceParams, Shape, StirapDrive,
};

/// How the state entering the STIRAP stage is produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RabiMode {
    /// The Rabi pulse is part of the simulated sequence.
    #[default]
    Explicit,
    /// Propagation starts at the end of the Rabi pulse from its two-level
    /// result.
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceConfig {
    pub shape: Shape,
    pub sigma_ns: f64,
    pub ts_over_sigma: f64,
    /// Peak `Ω⁰/2π` of both STIRAP pulses.
    pub amplitude_mhz: Option<f64>,
    /// Area of each STIRAP pulse.
    pub area_pi: Option<f64>,
    /// `∫_{t_τ}^{∞} Ω dt`. Used when neither of the above is set.
    pub rms_area_pi: Option<f64>,
    pub phi01: f64,
    pub phi12: f64,
    pub rabi_area_pi: f64,
    pub rabi_phase: f64,
    pub rabi_duration_ns: Option<f64>,
    pub horizon_sigmas: f64,
    /// Hold the STIRAP drives off once the mixing angle reaches this value.
    pub interrupt_theta: Option<f64>,
    /// Area `2·asin(β')` of a σ/10 square 2-a pulse applied at the
    /// interruption (ancilla model).
    pub readout_beta_p: Option<f64>,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        let p = SequenceParams::default();
        Self {
            shape: p.shape,
            sigma_ns: p.sigma * 1e9,
            ts_over_sigma: p.ts_over_sigma,
            amplitude_mhz: None,
            area_pi: None,
            rms_area_pi: None,
            phi01: p.phi01,
            phi12: p.phi12,
            rabi_area_pi: p.rabi_area / PI,
            rabi_phase: p.rabi_phase,
            rabi_duration_ns: None,
            horizon_sigmas: p.horizon_sigmas,
            interrupt_theta: None,
            readout_beta_p: None,
        }
    }
}

/// Reference STIRAP strength when none is configured.
pub const DEFAULT_RMS_AREA_PI: f64 = 32.90;

impl SequenceConfig {
    pub fn drive(&self) -> Result<StirapDrive> {
        match (self.amplitude_mhz, self.area_pi, self.rms_area_pi) {
            (Some(a), None, None) => {
                let w = mhz_to_angular(a);
                Ok(StirapDrive::Amplitude { omega01: w, omega12: w })
            }
            (None, Some(a), None) => Ok(StirapDrive::PulseArea(a * PI)),
            (None, None, Some(a)) => Ok(StirapDrive::RmsArea(a * PI)),
            (None, None, None) => Ok(StirapDrive::RmsArea(DEFAULT_RMS_AREA_PI * PI)),
            _ => Err(Error::Config(
                "set at most one of amplitude_mhz, area_pi, rms_area_pi".into(),
            )),
        }
    }

    pub fn params(&self, transition: RabiTransition) -> Result<SequenceParams> {
        Ok(SequenceParams {
            shape: self.shape,
            sigma: self.sigma_ns / 1e9,
            ts_over_sigma: self.ts_over_sigma,
            drive: self.drive()?,
            phi01: self.phi01,
            phi12: self.phi12,
            rabi_area: self.rabi_area_pi * PI,
            rabi_phase: self.rabi_phase,
            rabi_duration: self.rabi_duration_ns.map(|d| d / 1e9),
            rabi_transition: transition,
            horizon_sigmas: self.horizon_sigmas,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmonConfig {
    /// `δ/2π`.
    pub anharmonicity_mhz: f64,
    pub cross_01_12: f64,
    pub cross_12_01: f64,
}

impl Default for TransmonConfig {
    fn default() -> Self {
        let t = TransmonModel::default();
        Self {
            anharmonicity_mhz: t.anharmonicity / mhz_to_angular(1.0),
            cross_01_12: t.cross_01_to_12,
            cross_12_01: t.cross_12_to_01,
        }
    }
}

impl TransmonConfig {
    pub fn model(&self) -> TransmonModel {
        TransmonModel {
            anharmonicity: mhz_to_angular(self.anharmonicity_mhz),
            cross_01_to_12: self.cross_01_12,
            cross_12_to_01: self.cross_12_01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub model: ModelKind,
    pub integrator: String,
    pub tol: f64,
    /// Step of fixed-step integrators; σ/2000 when unset.
    pub fixed_step_ns: Option<f64>,
    /// Trajectory samples from the start of the Rabi pulse to the horizon.
    pub samples: usize,
    pub rabi_mode: RabiMode,
    /// Replaces the Rabi stage: `[re₀, im₀, re₁, im₁, re₂, im₂]` entering
    /// the STIRAP stage.
    pub initial: Option<Vec<f64>>,
    pub sequence: SequenceConfig,
    pub transmon: TransmonConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        let o = PropagateOptions::default();
        Self {
            model: ModelKind::IdealRwa3,
            integrator: o.integrator,
            tol: o.tol,
            fixed_step_ns: None,
            samples: 401,
            rabi_mode: RabiMode::Explicit,
            initial: None,
            sequence: SequenceConfig::default(),
            transmon: TransmonConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Ideal-model config realizing synthesized control settings.
    pub fn from_controls(c: &ControlSettings) -> Self {
        let mut cfg = SimConfig::default();
        let seq = &mut cfg.sequence;
        seq.sigma_ns = c.sigma * 1e9;
        seq.ts_over_sigma = c.ts_over_sigma;
        seq.rms_area_pi = Some(2.0 * c.stirap_halfarea / PI);
        seq.phi01 = c.phi01;
        seq.phi12 = c.phi12;
        seq.rabi_area_pi = c.rabi_area / PI;
        seq.rabi_phase = c.rabi_phase;
        cfg
    }

    pub fn rabi_transition(&self) -> RabiTransition {
        match self.model {
            ModelKind::Ancilla4 => RabiTransition::ZeroAncilla,
            _ => RabiTransition::ZeroOne,
        }
    }

    pub fn sequence_params(&self) -> Result<SequenceParams> {
        self.sequence.params(self.rabi_transition())
    }

    /// Pulse sequence including any interruption and readout pulse.
    pub fn build_sequence(&self) -> Result<HybridSequence> {
        let p = self.sequence_params()?;
        let mut seq = p.build()?;
        if let Some(theta) = self.sequence.interrupt_theta {
            seq = seq.interrupted_at_angle(theta)?;
        }
        if let Some(bp) = self.sequence.readout_beta_p {
            if self.model != ModelKind::Ancilla4 {
                return Err(Error::Config("a readout pulse needs the ancilla model".into()));
            }
            if !(0.0..=1.0).contains(&bp) {
                return Err(Error::Config(format!("readout_beta_p = {bp} outside [0, 1]")));
            }
            let start = seq.interrupt_at().ok_or_else(|| {
                Error::Config("a readout pulse needs interrupt_theta".into())
            })?;
            let pulse = PulseEnvelope::square_with_area(
                2.0 * bp.asin(),
                start,
                p.sigma / 10.0,
                -std::f64::consts::FRAC_PI_2,
            )?;
            seq = seq.with_readout(pulse)?;
        }
        Ok(seq)
    }

    pub fn propagate_options(&self) -> PropagateOptions {
        let step = self
            .fixed_step_ns
            .map(|s| s * 1e-9)
            .unwrap_or(self.sequence.sigma_ns * 1e-9 / 2000.0);
        PropagateOptions { integrator: self.integrator.clone(), tol: self.tol, step: Some(step) }
    }

    /// Sets a numeric field addressed by a dotted path such as
    /// `sequence.phi01`.
    pub fn set(&mut self, path: &str, value: f64) -> Result<()> {
        let mut root = serde_json::to_value(&*self)?;
        let mut node = &mut root;
        for key in path.split('.') {
            node = node
                .as_object_mut()
                .and_then(|m| m.get_mut(key))
                .ok_or_else(|| Error::InvalidParameterPath(path.to_string()))?;
        }
        if node.is_object() || node.is_array() || node.is_string() || node.is_boolean() {
            return Err(Error::InvalidParameterPath(format!("{path} is not numeric")));
        }
        *node = if node.is_u64() || node.is_i64() {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(Error::Config(format!("{path} needs a non-negative integer")));
            }
            serde_json::Value::from(value as u64)
        } else {
            serde_json::Number::from_f64(value)
                .map(serde_json::Value::Number)
                .ok_or_else(|| Error::Config(format!("{path} = {value} is not finite")))?
        };
        *self = serde_json::from_value(root)?;
        Ok(())
    }

    pub fn get(&self, path: &str) -> Result<Option<f64>> {
        let root = serde_json::to_value(self)?;
        let mut node = &root;
        for key in path.split('.') {
            node = node
                .as_object()
                .and_then(|m| m.get(key))
                .ok_or_else(|| Error::InvalidParameterPath(path.to_string()))?;
        }
        Ok(node.as_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_builds_reference_sequence() {
        let cfg = SimConfig::default();
        let seq = cfg.build_sequence().unwrap();
        assert_eq!(seq, SequenceParams::default().build().unwrap());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            model = "transmon"
            tol = 1e-8
            [sequence]
            sigma_ns = 80
            amplitude_mhz = 40
            phi01 = 0.5
            [transmon]
            cross_01_12 = 0.0
        "#;
        let cfg = SimConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.model, ModelKind::TransmonCrosstalk3);
        assert_eq!(cfg.sequence.sigma_ns, 80.0);
        assert_eq!(cfg.transmon.cross_12_01, TransmonConfig::default().cross_12_01);
        let again = SimConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert!(SimConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn dotted_paths() {
        let mut cfg = SimConfig::default();
        cfg.set("sequence.phi12", 1.25).unwrap();
        assert_eq!(cfg.sequence.phi12, 1.25);
        cfg.set("sequence.interrupt_theta", 0.5).unwrap();
        assert_eq!(cfg.sequence.interrupt_theta, Some(0.5));
        cfg.set("samples", 11.0).unwrap();
        assert_eq!(cfg.samples, 11);
        assert_eq!(cfg.get("sequence.phi12").unwrap(), Some(1.25));
        assert!(matches!(cfg.set("sequence.nope", 1.0), Err(Error::InvalidParameterPath(_))));
        assert!(matches!(cfg.set("sequence", 1.0), Err(Error::InvalidParameterPath(_))));
        assert!(matches!(cfg.set("model", 1.0), Err(Error::InvalidParameterPath(_))));
    }

    #[test]
    fn conflicting_strengths_are_rejected() {
        let mut cfg = SimConfig::default();
        cfg.sequence.area_pi = Some(19.0);
        cfg.sequence.amplitude_mhz = Some(37.5);
        assert!(cfg.build_sequence().is_err());
    }

    #[test]
    fn readout_requires_ancilla_and_interruption() {
        let mut cfg = SimConfig::default();
        cfg.sequence.readout_beta_p = Some(0.1);
        assert!(cfg.build_sequence().is_err());
        cfg.model = ModelKind::Ancilla4;
        assert!(cfg.build_sequence().is_err());
        cfg.sequence.interrupt_theta = Some(std::f64::consts::FRAC_PI_4);
        let seq = cfg.build_sequence().unwrap();
        assert!(seq.readout().is_some());
        assert_eq!(seq.rabi_transition(), RabiTransition::ZeroAncilla);
    }

    #[test]
    fn config_from_controls_reaches_target() {
        use crate::run::{final_state, Evaluation};
        use crate::synthesis::synthesize;
        use num_complex::Complex64;
        let target = crate::state::QutritState::qutrit(
            Complex64::new(0.5, 0.1),
            Complex64::new(-0.3, 0.4),
            Complex64::new(0.0, -0.5),
        );
        let mut target = target;
        target.normalize();
        let settings = synthesize(&target).unwrap();
        let cfg = SimConfig::from_controls(&settings);
        let text = cfg.to_toml_string().unwrap();
        let back = SimConfig::from_toml_str(&text).unwrap();
        let psi = final_state(&back, Evaluation::Numeric).unwrap();
        assert!(crate::state::fidelity(&psi, &target) > 0.99);
    }
}
