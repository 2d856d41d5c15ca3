//! Control settings that steer the hybrid sequence to a requested qutrit
//! state, found by inverting the full-transfer closed form.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{full_stirap, score_ratio};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_model, ModelKind, ModelSpec, TransmonModel};
use crate::propagator::{evolve, PropagateOptions};
use crate::pulses::{rabi_rotation, wrap_phase, RabiTransition, SequenceParams, Shape, StirapDrive};
use crate::state::{fidelity, QutritState, AMPLITUDE_FLOOR};

/// Smallest STIRAP half area handed out. Keeps the pulses in the strongly
/// adiabatic regime (per-pulse area of about 16π or more).
pub const MIN_HALFAREA: f64 = 14.0 * PI;

/// Normalization tolerance on synthesis targets.
pub const TARGET_NORM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSettings {
    pub rabi_area: f64,
    pub rabi_phase: f64,
    pub phi01: f64,
    pub phi12: f64,
    /// `½∫_{t_τ}^{∞} Ω dt`.
    pub stirap_halfarea: f64,
    pub sigma: f64,
    pub ts_over_sigma: f64,
    /// Set when the target has no weight outside `|2⟩`; the STIRAP phases
    /// are then arbitrary and reported as zero.
    pub degenerate: bool,
}

impl ControlSettings {
    /// Pulse layout realizing these settings, with the Rabi stage simulated
    /// explicitly on the 0-1 transition.
    pub fn sequence_params(&self) -> SequenceParams {
        SequenceParams {
            shape: Shape::Gaussian,
            sigma: self.sigma,
            ts_over_sigma: self.ts_over_sigma,
            drive: StirapDrive::RmsArea(2.0 * self.stirap_halfarea),
            phi01: self.phi01,
            phi12: self.phi12,
            rabi_area: self.rabi_area,
            rabi_phase: self.rabi_phase,
            rabi_transition: RabiTransition::ZeroOne,
            ..SequenceParams::default()
        }
    }
}

/// Pulse timing used by [`synthesize`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthesisLayout {
    pub sigma: f64,
    pub ts_over_sigma: f64,
}

impl Default for SynthesisLayout {
    fn default() -> Self {
        Self { sigma: 50e-9, ts_over_sigma: 2.0 }
    }
}

/// Inverts the full-transfer map for `target` in the gauge `α ≥ 0`,
/// `φ_R = 0`. The half area is taken in `[14π, 14π + π/2]` so that
/// `sin h, cos h ≥ 0` and no sign jumps enter the phases.
pub fn synthesize(target: &QutritState) -> Result<ControlSettings> {
    synthesize_with(target, SynthesisLayout::default())
}

pub fn synthesize_with(target: &QutritState, layout: SynthesisLayout) -> Result<ControlSettings> {
    if target.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: target.dim() });
    }
    target.ensure_normalized(TARGET_NORM_TOL)?;
    if !score_ratio(layout.ts_over_sigma).in_window {
        return Err(Error::Config(format!(
            "t_s/σ = {} is outside the adiabatic window",
            layout.ts_over_sigma
        )));
    }
    let (a, b, c) = (target.a(), target.b(), target.c());
    let (ma, mb, mc) = (a.norm(), b.norm(), c.norm());
    let rabi_area = 2.0 * mc.min(1.0).acos();
    let base = ControlSettings {
        rabi_area,
        rabi_phase: 0.0,
        phi01: 0.0,
        phi12: 0.0,
        stirap_halfarea: MIN_HALFAREA,
        sigma: layout.sigma,
        ts_over_sigma: layout.ts_over_sigma,
        degenerate: false,
    };
    if ma.hypot(mb) <= AMPLITUDE_FLOOR {
        return Ok(ControlSettings { rabi_area: 0.0, degenerate: true, ..base });
    }
    let halfarea = MIN_HALFAREA + ma.atan2(mb);
    let has_a = ma > AMPLITUDE_FLOOR;
    let has_b = mb > AMPLITUDE_FLOOR;
    let has_c = mc > AMPLITUDE_FLOOR;
    // With β = −i sin(θ_R/2): Arg(AB*) = φ₀₁ − π/2, Arg(AC*) = 2φ₀₁ + φ₁₂,
    // Arg(BC*) = π/2 + φ₀₁ + φ₁₂.
    let phi01 = if has_a && has_b { (a * b.conj()).arg() + FRAC_PI_2 } else { 0.0 };
    let phi12 = if !has_c {
        0.0
    } else if has_a {
        (a * c.conj()).arg() - 2.0 * phi01
    } else {
        (b * c.conj()).arg() - FRAC_PI_2 - phi01
    };
    Ok(ControlSettings {
        stirap_halfarea: halfarea,
        phi01: wrap_phase(phi01),
        phi12: wrap_phase(phi12),
        ..base
    })
}

/// Target from spherical magnitudes and the two relative phases. The `|2⟩`
/// amplitude is taken real and positive.
pub fn target_from_spherical(epsilon: f64, nu: f64, arg_ab: f64, arg_ac: f64) -> Result<QutritState> {
    let range = 0.0..=FRAC_PI_2;
    if !range.contains(&epsilon) || !range.contains(&nu) {
        return Err(Error::Config(format!("ε = {epsilon}, ν = {nu} must lie in [0, π/2]")));
    }
    let (ma, mb, mc) = (nu.sin() * epsilon.sin(), nu.cos() * epsilon.sin(), epsilon.cos());
    let a = Complex64::from_polar(ma, arg_ac);
    let b = Complex64::from_polar(mb, arg_ac - arg_ab);
    let c = Complex64::new(mc, 0.0);
    Ok(QutritState::qutrit(a, b, c))
}

/// Closed-form final state for `settings`.
pub fn forward_analytic(settings: &ControlSettings) -> Result<QutritState> {
    let (alpha, beta) = rabi_rotation(settings.rabi_area, settings.rabi_phase);
    full_stirap(alpha, beta, settings.stirap_halfarea, settings.phi01, settings.phi12)
}

/// Builds the area-calibrated sequence for `settings`, propagates it from
/// `|0⟩` under `model` and returns the fidelity to `target`.
pub fn verify(
    settings: &ControlSettings,
    target: &QutritState,
    model: ModelKind,
    transmon: TransmonModel,
    opts: &PropagateOptions,
) -> Result<f64> {
    let seq = settings.sequence_params().build()?;
    let m = build_model(model, &ModelSpec { sequence: seq, transmon })?;
    let out = evolve(m.as_ref(), &QutritState::basis(3, 0), seq.rabi_start(), seq.horizon(), opts)?;
    Ok(fidelity(&out, target))
}
