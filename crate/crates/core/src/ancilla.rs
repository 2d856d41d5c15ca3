//! Four-level protocol with an ancilla `|a⟩`: superpositions in
//! `{|0⟩, |2⟩, |a⟩}`, a rotation on `{|2⟩, |a⟩}` and the interference
//! fringe in the ancilla population that reads out `φ₀₁ + φ₁₂`.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{AncillaLadder, ANCILLA};
use crate::propagator::{evolve, PropagateOptions};
use crate::pulses::{PulseEnvelope, RabiTransition, SequenceParams};
use crate::state::QutritState;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub const NORM_TOL: f64 = 1e-12;

/// Fewest fringe samples accepted by [`fit_fringe`].
pub const MIN_FRINGE_POINTS: usize = 8;

fn check_unit(x: f64, what: &str) -> Result<()> {
    if (x - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidSequence(format!("{what}: |·|² sums to {x}, not 1")));
    }
    Ok(())
}

/// Unitary on `{|2⟩, |a⟩}`, identity on `|0⟩`:
///
/// `|2⟩ ↦ e^{iφ'}α'*|2⟩ + β'|a⟩`, `|a⟩ ↦ −e^{iφ'}β'*|2⟩ + α'|a⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncillaRotation {
    alpha_p: Complex64,
    beta_p: Complex64,
    phi_p: f64,
}

impl AncillaRotation {
    pub fn new(alpha_p: Complex64, beta_p: Complex64, phi_p: f64) -> Result<Self> {
        check_unit(alpha_p.norm_sqr() + beta_p.norm_sqr(), "ancilla rotation")?;
        Ok(Self { alpha_p, beta_p, phi_p })
    }

    /// Real rotation `α' = cos(θ/2)`, `β' = sin(θ/2)`, `φ' = 0`, as left
    /// by a resonant 2-a pulse of area `θ` and phase `−π/2`.
    pub fn from_area(theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self { alpha_p: Complex64::new(c, 0.0), beta_p: Complex64::new(s, 0.0), phi_p: 0.0 }
    }

    pub fn identity() -> Self {
        Self::from_area(0.0)
    }

    pub fn alpha_p(&self) -> Complex64 {
        self.alpha_p
    }

    pub fn beta_p(&self) -> Complex64 {
        self.beta_p
    }

    pub fn phi_p(&self) -> f64 {
        self.phi_p
    }

    /// Matrix on `(|2⟩, |a⟩)`.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let e = Complex64::from_polar(1.0, self.phi_p);
        [
            [e * self.alpha_p.conj(), -e * self.beta_p.conj()],
            [self.beta_p, self.alpha_p],
        ]
    }
}

/// `α cosΘ|0⟩ − α sinΘ e^{−i(φ₀₁+φ₁₂)}|2⟩ + β|a⟩`.
pub fn ancilla_state(
    alpha: Complex64,
    beta: Complex64,
    theta: f64,
    phi01: f64,
    phi12: f64,
) -> Result<QutritState> {
    let n = alpha.norm_sqr() + beta.norm_sqr();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm_sqr: n });
    }
    let (s, c) = theta.sin_cos();
    Ok(QutritState::with_ancilla(
        alpha * c,
        ZERO,
        -alpha * s * Complex64::from_polar(1.0, -(phi01 + phi12)),
        beta,
    ))
}

pub fn apply_ancilla_rotation(psi: &QutritState, u: &AncillaRotation) -> Result<QutritState> {
    if psi.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: psi.dim() });
    }
    psi.ensure_normalized(NORM_TOL)?;
    let m = u.matrix();
    let (x, y) = (psi[2], psi[ANCILLA]);
    let mut out = *psi;
    out[2] = m[0][0] * x + m[0][1] * y;
    out[ANCILLA] = m[1][0] * x + m[1][1] * y;
    Ok(out)
}

/// Real, non-negative amplitudes of the readout protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferenceParams {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_p: f64,
    pub beta_p: f64,
    /// Mixing angle at which the STIRAP is interrupted.
    pub theta: f64,
}

impl InterferenceParams {
    /// `α = √(1−β²)`, `α' = √(1−β'²)`.
    pub fn from_betas(beta: f64, beta_p: f64, theta: f64) -> Result<Self> {
        let p = Self {
            alpha: (1.0 - beta * beta).max(0.0).sqrt(),
            beta,
            alpha_p: (1.0 - beta_p * beta_p).max(0.0).sqrt(),
            beta_p,
            theta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.alpha, self.beta, self.alpha_p, self.beta_p];
        if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::OutsideRealRegime(format!(
                "amplitudes must be real and non-negative, got {vals:?}"
            )));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.theta) {
            return Err(Error::OutsideRealRegime(format!("Θ = {} outside [0, π/2]", self.theta)));
        }
        check_unit(self.alpha * self.alpha + self.beta * self.beta, "α, β")?;
        check_unit(self.alpha_p * self.alpha_p + self.beta_p * self.beta_p, "α', β'")
    }

    pub fn rotation(&self) -> AncillaRotation {
        AncillaRotation {
            alpha_p: Complex64::new(self.alpha_p, 0.0),
            beta_p: Complex64::new(self.beta_p, 0.0),
            phi_p: 0.0,
        }
    }
}

/// `P_a = α²β'² sin²Θ + β²α'² − 2αβα'β' sinΘ cos φΣ`.
pub fn ancilla_population(p: &InterferenceParams, phi_sum: f64) -> Result<f64> {
    p.validate()?;
    let s = p.theta.sin();
    let InterferenceParams { alpha: a, beta: b, alpha_p: ap, beta_p: bp, .. } = *p;
    Ok(a * a * bp * bp * s * s + b * b * ap * ap - 2.0 * a * b * ap * bp * s * phi_sum.cos())
}

/// Fringe visibility `2αβα'β' sinΘ / (α²β'² sin²Θ + β²α'²)`; `None` when
/// the denominator vanishes.
pub fn visibility(p: &InterferenceParams) -> Result<Option<f64>> {
    p.validate()?;
    let s = p.theta.sin();
    let InterferenceParams { alpha: a, beta: b, alpha_p: ap, beta_p: bp, .. } = *p;
    let den = a * a * bp * bp * s * s + b * b * ap * ap;
    Ok((den > 0.0).then(|| 2.0 * a * b * ap * bp * s / den))
}

/// Leading-order visibility for `β, β' ≪ 1`.
pub fn visibility_small_beta(beta: f64, beta_p: f64, theta: f64) -> Option<f64> {
    let s = theta.sin();
    let den = beta_p * beta_p * s * s + beta * beta;
    (den > 0.0).then(|| 2.0 * beta * beta_p * s / den)
}

/// Least-squares fit of `P(φ) = c₀ − c₁ cos(φ − φ̂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FringeFit {
    pub c0: f64,
    pub c1: f64,
    pub phi_hat: f64,
    /// `c₁/c₀ = (P_max − P_min)/(P_max + P_min)` of the fitted fringe.
    pub visibility: f64,
}

pub fn fit_fringe(phis: &[f64], pops: &[f64]) -> Result<FringeFit> {
    if phis.len() != pops.len() {
        return Err(Error::InsufficientGrid(format!(
            "{} phases but {} populations",
            phis.len(),
            pops.len()
        )));
    }
    let n = phis.len();
    if n < MIN_FRINGE_POINTS {
        return Err(Error::InsufficientGrid(format!(
            "need at least {MIN_FRINGE_POINTS} points, got {n}"
        )));
    }
    let (lo, hi) = phis
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    // An evenly spaced periodic grid of n points spans 2π(n−1)/n.
    let coverage = (hi - lo) * n as f64 / (n - 1) as f64;
    if coverage < TAU * (1.0 - 1e-9) {
        return Err(Error::InsufficientGrid(format!(
            "phase grid spans {:.4} rad, less than one period",
            hi - lo
        )));
    }
    // Normal equations for (a, b, c) in a + b cos φ + c sin φ.
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (&phi, &p) in phis.iter().zip(pops) {
        let f = [1.0, phi.cos(), phi.sin()];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += f[i] * f[j];
            }
            r[i] += f[i] * p;
        }
    }
    let [a, b, c] = solve3(m, r)
        .ok_or_else(|| Error::InsufficientGrid("phase grid does not resolve a fringe".into()))?;
    let c1 = b.hypot(c);
    if a.abs() <= 1e-15 {
        return Err(Error::DegenerateFit(a));
    }
    Ok(FringeFit { c0: a, c1, phi_hat: (-c).atan2(-b), visibility: c1 / a })
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let d = det3(&m);
    let scale = m.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    if d.abs() <= 1e-12 * scale.powi(3) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *o = det3(&mk) / d;
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    Analytic,
    Numeric,
}

/// Result of one simulated readout run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericReadout {
    pub p_a: f64,
    /// Fidelity of the normalized `{|0⟩, |2⟩}` block to
    /// `cosΘ|0⟩ − sinΘ e^{−iφΣ}|2⟩`.
    pub block_fidelity: f64,
    pub state: QutritState,
}

/// Pulse layout of the simulated protocol. `base` supplies σ, `t_s/σ` and
/// the STIRAP strength; the Rabi pulse, phases and readout are set here.
pub fn readout_sequence(
    p: &InterferenceParams,
    phi_sum: f64,
    base: &SequenceParams,
) -> Result<crate::pulses::HybridSequence> {
    p.validate()?;
    let params = SequenceParams {
        rabi_transition: RabiTransition::ZeroAncilla,
        rabi_area: 2.0 * p.beta.asin(),
        rabi_phase: -FRAC_PI_2,
        phi01: 0.0,
        phi12: phi_sum,
        ..*base
    };
    let seq = params.build()?.interrupted_at_angle(p.theta)?;
    let cut = seq.interrupt_at().expect("just interrupted");
    let pulse = PulseEnvelope::square_with_area(
        2.0 * p.beta_p.asin(),
        cut,
        params.sigma / 10.0,
        -FRAC_PI_2,
    )?;
    seq.with_readout(pulse)
}

/// Simulates the four-level protocol: 0-a Rabi, STIRAP interrupted at Θ,
/// then a short 2-a pulse.
pub fn numeric_readout(
    p: &InterferenceParams,
    phi_sum: f64,
    base: &SequenceParams,
    opts: &PropagateOptions,
) -> Result<NumericReadout> {
    let seq = readout_sequence(p, phi_sum, base)?;
    let model = AncillaLadder { sequence: seq };
    let out = evolve(&model, &QutritState::basis(4, 0), seq.rabi_start(), seq.horizon(), opts)?;
    let (s, c) = p.theta.sin_cos();
    let target = [Complex64::new(c, 0.0), -Complex64::from_polar(s, -phi_sum)];
    let block = [out[0], out[2]];
    let norm = block.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let overlap: Complex64 = target.iter().zip(&block).map(|(t, b)| t.conj() * b).sum();
    let block_fidelity = if norm > 0.0 { overlap.norm_sqr() / norm } else { 0.0 };
    Ok(NumericReadout { p_a: out.populations()[ANCILLA], block_fidelity, state: out })
}

/// Fringe samples and their fit.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseReadout {
    pub phis: Vec<f64>,
    pub p_a: Vec<f64>,
    pub fit: FringeFit,
    /// Lowest block fidelity over the grid; numeric mode only.
    pub min_block_fidelity: Option<f64>,
}

pub fn phase_readout(
    p: &InterferenceParams,
    phis: &[f64],
    mode: ReadoutMode,
    base: &SequenceParams,
    opts: &PropagateOptions,
) -> Result<PhaseReadout> {
    p.validate()?;
    if phis.len() < MIN_FRINGE_POINTS {
        return Err(Error::InsufficientGrid(format!(
            "need at least {MIN_FRINGE_POINTS} points, got {}",
            phis.len()
        )));
    }
    let (p_a, min_block_fidelity) = match mode {
        ReadoutMode::Analytic => {
            let v = phis.iter().map(|&f| ancilla_population(p, f)).collect::<Result<Vec<_>>>()?;
            (v, None)
        }
        ReadoutMode::Numeric => {
            let runs = phis
                .iter()
                .map(|&f| numeric_readout(p, f, base, opts))
                .collect::<Result<Vec<_>>>()?;
            let fmin = runs.iter().map(|r| r.block_fidelity).fold(f64::INFINITY, f64::min);
            (runs.iter().map(|r| r.p_a).collect(), Some(fmin))
        }
    };
    let fit = fit_fringe(phis, &p_a)?;
    Ok(PhaseReadout { phis: phis.to_vec(), p_a, fit, min_block_fidelity })
}

/// `n` equally spaced phases covering one period from 0.
pub fn periodic_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}
