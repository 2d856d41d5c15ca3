//! Drive envelopes and their arrangement into a hybrid Rabi-STIRAP sequence.
//!
//! Times are in seconds and amplitudes are angular frequencies (rad/s).
//! The 0-1 STIRAP pulse is centred at `t = 0` and the 1-2 pulse precedes it
//! by the separation `t_s` (counter-intuitive ordering). The Rabi pulse is a
//! square pulse that ends at `t_τ = −t_s − 4σ`, before either STIRAP pulse
//! has effectively switched on.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Gaussian envelopes vanish identically outside `t₀ ± 8σ`.
pub const GAUSSIAN_CUTOFF: f64 = 8.0;

/// A Gaussian pulse is considered switched on from `t₀ − 4σ`.
pub const ONSET_SIGMAS: f64 = 4.0;

/// The horizon must lie at least this many σ after the 0-1 pulse centre.
pub const MIN_TAIL_SIGMAS: f64 = 5.0;

const SQRT_TAU: f64 = 2.506_628_274_631_000_5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Gaussian,
    Square,
}

/// A real, non-negative envelope together with the carrier phase it is
/// applied with.
///
/// For a Gaussian `t0` is the centre and `width` is σ; for a square pulse
/// `t0` is the switch-on time and `width` is the duration τ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    shape: Shape,
    amplitude: f64,
    t0: f64,
    width: f64,
    phase: f64,
}

impl PulseEnvelope {
    pub fn new(shape: Shape, amplitude: f64, t0: f64, width: f64, phase: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidPulse(format!("amplitude must be finite and ≥ 0, got {amplitude}")));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidPulse(format!("width must be finite and > 0, got {width}")));
        }
        if !t0.is_finite() || !phase.is_finite() {
            return Err(Error::InvalidPulse("time origin and phase must be finite".into()));
        }
        Ok(Self { shape, amplitude, t0, width, phase })
    }

    pub fn gaussian(amplitude: f64, center: f64, sigma: f64, phase: f64) -> Result<Self> {
        Self::new(Shape::Gaussian, amplitude, center, sigma, phase)
    }

    /// Gaussian whose full-line area `∫Ω dt = Ω⁰σ√(2π)` equals `area`.
    pub fn gaussian_with_area(area: f64, center: f64, sigma: f64, phase: f64) -> Result<Self> {
        Self::gaussian(area / (sigma * SQRT_TAU), center, sigma, phase)
    }

    pub fn square(amplitude: f64, start: f64, duration: f64, phase: f64) -> Result<Self> {
        Self::new(Shape::Square, amplitude, start, duration, phase)
    }

    pub fn square_with_area(area: f64, start: f64, duration: f64, phase: f64) -> Result<Self> {
        Self::square(area / duration, start, duration, phase)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Result<Self> {
        self.amplitude *= factor;
        Self::new(self.shape, self.amplitude, self.t0, self.width, self.phase)
    }

    /// `|Ω(t)|`.
    pub fn evaluate(&self, t: f64) -> f64 {
        match self.shape {
            Shape::Gaussian => {
                let x = (t - self.t0) / self.width;
                if x.abs() > GAUSSIAN_CUTOFF {
                    0.0
                } else {
                    self.amplitude * (-0.5 * x * x).exp()
                }
            }
            Shape::Square => {
                if t >= self.t0 && t <= self.t0 + self.width {
                    self.amplitude
                } else {
                    0.0
                }
            }
        }
    }

    /// `|Ω(t)| e^{iφ}`.
    pub fn coupling(&self, t: f64) -> Complex64 {
        let v = self.evaluate(t);
        if v == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(v, self.phase)
        }
    }

    /// Interval outside of which the envelope is identically zero.
    pub fn support(&self) -> (f64, f64) {
        match self.shape {
            Shape::Gaussian => (
                self.t0 - GAUSSIAN_CUTOFF * self.width,
                self.t0 + GAUSSIAN_CUTOFF * self.width,
            ),
            Shape::Square => (self.t0, self.t0 + self.width),
        }
    }

    /// Time from which the pulse is considered on.
    pub fn onset(&self) -> f64 {
        match self.shape {
            Shape::Gaussian => self.t0 - ONSET_SIGMAS * self.width,
            Shape::Square => self.t0,
        }
    }

    /// Closed-form area over the whole line (untruncated Gaussian).
    pub fn nominal_area(&self) -> f64 {
        match self.shape {
            Shape::Gaussian => self.amplitude * self.width * SQRT_TAU,
            Shape::Square => self.amplitude * self.width,
        }
    }

    /// `∫ |Ω(t)| dt` over `[t_from, t_to]` by adaptive quadrature.
    pub fn area(&self, t_from: f64, t_to: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let (lo, hi) = self.support();
        let tol = 1e-15 * self.nominal_area();
        quad::integrate(|t| self.evaluate(t), t_from, t_to, &[lo, self.t0, hi], tol)
    }

    pub(crate) fn breakpoints(&self) -> [f64; 3] {
        let (lo, hi) = self.support();
        [lo, self.t0, hi]
    }
}

/// Which pair of levels the Rabi preparation pulse couples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RabiTransition {
    ZeroOne,
    ZeroAncilla,
}

/// How the STIRAP pulse strength is specified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StirapDrive {
    /// Peak amplitudes `Ω⁰₀₁, Ω⁰₁₂` in rad/s.
    Amplitude { omega01: f64, omega12: f64 },
    /// Equal per-pulse areas `∫|Ω₀₁|dt = ∫|Ω₁₂|dt` (radians).
    PulseArea(f64),
    /// Equal amplitudes scaled so that `∫_{t_τ} Ω(t) dt` equals this value.
    RmsArea(f64),
}

/// Inputs from which a [`HybridSequence`] is laid out.
///
/// The default is the reference configuration of the hybrid protocol:
/// σ = 50 ns, `t_s/σ = 2`, `φ₀₁ = π/3`, `φ₁₂ = π/4`, Rabi area π/4 and a
/// total STIRAP area of 32.90π after `t_τ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceParams {
    pub shape: Shape,
    pub sigma: f64,
    pub ts_over_sigma: f64,
    pub drive: StirapDrive,
    pub phi01: f64,
    pub phi12: f64,
    pub rabi_area: f64,
    pub rabi_phase: f64,
    /// Defaults to σ/5.
    pub rabi_duration: Option<f64>,
    pub rabi_transition: RabiTransition,
    /// Horizon measured from the 0-1 pulse centre, in units of σ.
    pub horizon_sigmas: f64,
}

impl Default for SequenceParams {
    fn default() -> Self {
        Self {
            shape: Shape::Gaussian,
            sigma: 50e-9,
            ts_over_sigma: 2.0,
            drive: StirapDrive::RmsArea(32.90 * PI),
            phi01: PI / 3.0,
            phi12: PI / 4.0,
            rabi_area: PI / 4.0,
            rabi_phase: 0.0,
            rabi_duration: None,
            rabi_transition: RabiTransition::ZeroOne,
            horizon_sigmas: GAUSSIAN_CUTOFF,
        }
    }
}

impl SequenceParams {
    pub fn build(&self) -> Result<HybridSequence> {
        HybridSequence::from_params(self)
    }
}

/// `Ω(t)` and the mixing angle `Θ(t)` of the STIRAP pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmsDrive {
    pub omega: f64,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridSequence {
    rabi: PulseEnvelope,
    rabi_transition: RabiTransition,
    stirap_01: PulseEnvelope,
    stirap_12: PulseEnvelope,
    separation: f64,
    rabi_end: f64,
    horizon: f64,
    sigma: f64,
    /// STIRAP drives are held off from this time on.
    interrupt_at: Option<f64>,
    /// Optional 2-a pulse applied after the STIRAP stage.
    readout: Option<PulseEnvelope>,
}

impl HybridSequence {
    /// Assembles a sequence from explicit envelopes and checks the ordering
    /// invariants.
    pub fn from_envelopes(
        rabi: PulseEnvelope,
        rabi_transition: RabiTransition,
        stirap_01: PulseEnvelope,
        stirap_12: PulseEnvelope,
        horizon: f64,
    ) -> Result<Self> {
        if stirap_01.shape() != stirap_12.shape() || stirap_01.width() != stirap_12.width() {
            return Err(Error::InvalidSequence("STIRAP pulses must share shape and width".into()));
        }
        let sigma = match stirap_01.shape() {
            Shape::Gaussian => stirap_01.width(),
            Shape::Square => stirap_01.width() / SQRT_TAU,
        };
        let separation = stirap_01.t0() - stirap_12.t0();
        if separation < 0.0 {
            return Err(Error::InvalidSequence(
                "the 1-2 pulse must not come after the 0-1 pulse".into(),
            ));
        }
        let rabi_end = rabi.t0() + rabi.width();
        if rabi.shape() != Shape::Square {
            return Err(Error::InvalidSequence("the Rabi pulse must be square".into()));
        }
        let onset = stirap_01.onset().min(stirap_12.onset());
        if rabi_end > onset + 1e-9 * sigma {
            return Err(Error::InvalidSequence(format!(
                "Rabi pulse ends at {rabi_end:e} s, after STIRAP onset {onset:e} s"
            )));
        }
        let centre01 = match stirap_01.shape() {
            Shape::Gaussian => stirap_01.t0(),
            Shape::Square => stirap_01.t0() + 0.5 * stirap_01.width(),
        };
        if horizon < centre01 + MIN_TAIL_SIGMAS * sigma {
            return Err(Error::InvalidSequence(format!(
                "horizon {horizon:e} s is less than {MIN_TAIL_SIGMAS}σ after the 0-1 pulse"
            )));
        }
        Ok(Self {
            rabi,
            rabi_transition,
            stirap_01,
            stirap_12,
            separation,
            rabi_end,
            horizon,
            sigma,
            interrupt_at: None,
            readout: None,
        })
    }

    pub fn from_params(p: &SequenceParams) -> Result<Self> {
        let sigma = p.sigma;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidSequence(format!("σ must be > 0, got {sigma}")));
        }
        if !(p.ts_over_sigma >= 0.0 && p.ts_over_sigma.is_finite()) {
            return Err(Error::InvalidSequence(format!(
                "t_s/σ must be ≥ 0, got {}",
                p.ts_over_sigma
            )));
        }
        if !(p.rabi_area >= 0.0 && p.rabi_area.is_finite()) {
            return Err(Error::InvalidSequence(format!("Rabi area must be ≥ 0, got {}", p.rabi_area)));
        }
        let ts = p.ts_over_sigma * sigma;
        let unit = |centre: f64, phase: f64| -> Result<PulseEnvelope> {
            match p.shape {
                Shape::Gaussian => PulseEnvelope::gaussian(1.0, centre, sigma, phase),
                Shape::Square => {
                    let dur = sigma * SQRT_TAU;
                    PulseEnvelope::square(1.0, centre - 0.5 * dur, dur, phase)
                }
            }
        };
        let u01 = unit(0.0, p.phi01)?;
        let u12 = unit(-ts, p.phi12)?;
        let rabi_end = -ts - ONSET_SIGMAS * sigma;
        let horizon = p.horizon_sigmas * sigma;
        let (a01, a12) = match p.drive {
            StirapDrive::Amplitude { omega01, omega12 } => (omega01, omega12),
            StirapDrive::PulseArea(area) => {
                let a = area / u01.nominal_area();
                (a, a)
            }
            StirapDrive::RmsArea(area) => {
                let probe = Self::from_envelopes(
                    PulseEnvelope::square(0.0, rabi_end - sigma, sigma, 0.0)?,
                    p.rabi_transition,
                    u01,
                    u12,
                    horizon,
                )?;
                let a = area / probe.rms_area(rabi_end, horizon);
                (a, a)
            }
        };
        let duration = p.rabi_duration.unwrap_or(sigma / 5.0);
        let rabi = PulseEnvelope::square_with_area(p.rabi_area, rabi_end - duration, duration, p.rabi_phase)?;
        Self::from_envelopes(rabi, p.rabi_transition, u01.scaled(a01)?, u12.scaled(a12)?, horizon)
    }

    pub fn rabi(&self) -> &PulseEnvelope {
        &self.rabi
    }

    pub fn rabi_transition(&self) -> RabiTransition {
        self.rabi_transition
    }

    pub fn stirap_01(&self) -> &PulseEnvelope {
        &self.stirap_01
    }

    pub fn stirap_12(&self) -> &PulseEnvelope {
        &self.stirap_12
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `t_s`.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn ts_over_sigma(&self) -> f64 {
        self.separation / self.sigma
    }

    /// `t_τ`, the end of the Rabi pulse.
    pub fn rabi_end(&self) -> f64 {
        self.rabi_end
    }

    pub fn rabi_start(&self) -> f64 {
        self.rabi.t0()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn phi01(&self) -> f64 {
        self.stirap_01.phase()
    }

    pub fn phi12(&self) -> f64 {
        self.stirap_12.phase()
    }

    pub fn interrupt_at(&self) -> Option<f64> {
        self.interrupt_at
    }

    pub fn readout(&self) -> Option<&PulseEnvelope> {
        self.readout.as_ref()
    }

    pub fn with_phases(mut self, phi01: f64, phi12: f64) -> Self {
        self.stirap_01 = self.stirap_01.with_phase(phi01);
        self.stirap_12 = self.stirap_12.with_phase(phi12);
        self
    }

    /// Total Rabi rotation angle `θ_R = ∫Ω^(R) dt`.
    pub fn rabi_area(&self) -> f64 {
        self.rabi.nominal_area()
    }

    /// Amplitudes `(α, β)` left by the Rabi pulse acting on the ground state:
    /// `α = cos(θ_R/2)`, `β = −i e^{−iφ_R} sin(θ_R/2)`.
    pub fn rabi_amplitudes(&self) -> (Complex64, Complex64) {
        rabi_rotation(self.rabi_area(), self.rabi.phase())
    }

    /// Holds the STIRAP drives off from `t` on.
    pub fn interrupted_at(mut self, t: f64) -> Result<Self> {
        if !(t >= self.rabi_end && t <= self.horizon) {
            return Err(Error::InvalidSequence(format!(
                "interrupt time {t:e} s outside [t_τ, horizon]"
            )));
        }
        self.interrupt_at = Some(t);
        Ok(self)
    }

    /// Interrupts the STIRAP at the first time the mixing angle reaches `theta`.
    pub fn interrupted_at_angle(self, theta: f64) -> Result<Self> {
        let t = self.time_of_mixing_angle(theta)?;
        self.interrupted_at(t)
    }

    /// Appends a pulse on the 2-a transition. It must start after the
    /// STIRAP drives have been interrupted.
    pub fn with_readout(mut self, pulse: PulseEnvelope) -> Result<Self> {
        if pulse.shape() != Shape::Square {
            return Err(Error::InvalidSequence("readout pulse must be square".into()));
        }
        let cut = self.interrupt_at.unwrap_or(self.stirap_01.support().1);
        if pulse.t0() < cut {
            return Err(Error::InvalidSequence("readout pulse overlaps the STIRAP drives".into()));
        }
        let end = pulse.t0() + pulse.width();
        if end > self.horizon {
            self.horizon = end;
        }
        self.readout = Some(pulse);
        Ok(self)
    }

    fn stirap_active(&self, t: f64) -> bool {
        self.interrupt_at.map_or(true, |cut| t < cut)
    }

    /// `(|Ω₀₁(t)|, |Ω₁₂(t)|)` including any interruption.
    pub fn stirap_magnitudes(&self, t: f64) -> (f64, f64) {
        if self.stirap_active(t) {
            (self.stirap_01.evaluate(t), self.stirap_12.evaluate(t))
        } else {
            (0.0, 0.0)
        }
    }

    /// Complex couplings `(|Ω₀₁|e^{iφ₀₁}, |Ω₁₂|e^{iφ₁₂})`.
    pub fn stirap_couplings(&self, t: f64) -> (Complex64, Complex64) {
        if self.stirap_active(t) {
            (self.stirap_01.coupling(t), self.stirap_12.coupling(t))
        } else {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        }
    }

    pub fn rabi_coupling(&self, t: f64) -> Complex64 {
        self.rabi.coupling(t)
    }

    pub fn readout_coupling(&self, t: f64) -> Complex64 {
        self.readout
            .map_or(Complex64::new(0.0, 0.0), |p| p.coupling(t))
    }

    /// `Ω(t) = √(|Ω₀₁|² + |Ω₁₂|²)` and `Θ(t) = atan2(|Ω₀₁|, |Ω₁₂|)`, with
    /// `Θ = 0` when both couplings vanish.
    pub fn rms_drive(&self, t: f64) -> RmsDrive {
        let (a, b) = self.stirap_magnitudes(t);
        rms_of(a, b)
    }

    /// `∫ Ω(t) dt` over `[t_from, t_to]`.
    pub fn rms_area(&self, t_from: f64, t_to: f64) -> f64 {
        let scale = self.stirap_01.nominal_area() + self.stirap_12.nominal_area();
        if scale == 0.0 {
            return 0.0;
        }
        let mut bps: Vec<f64> = self
            .stirap_01
            .breakpoints()
            .into_iter()
            .chain(self.stirap_12.breakpoints())
            .collect();
        bps.extend(self.interrupt_at);
        quad::integrate(|t| self.rms_drive(t).omega, t_from, t_to, &bps, 1e-15 * scale)
    }

    /// `½∫_{t_τ}^{t} Ω dt'`.
    pub fn halfarea_until(&self, t: f64) -> f64 {
        0.5 * self.rms_area(self.rabi_end, t)
    }

    /// `½∫_{t_τ}^{∞} Ω dt'`, the phase that sets the final `|0⟩/|1⟩` split.
    pub fn stirap_halfarea(&self) -> f64 {
        self.halfarea_until(self.horizon)
    }

    /// First time in `[t_τ, horizon]` at which the uninterrupted mixing
    /// angle reaches `theta`.
    pub fn time_of_mixing_angle(&self, theta: f64) -> Result<f64> {
        if !(0.0..=PI / 2.0).contains(&theta) {
            return Err(Error::InvalidSequence(format!("mixing angle {theta} outside [0, π/2]")));
        }
        let free = Self { interrupt_at: None, ..*self };
        let angle = |t: f64| free.rms_drive(t).theta;
        let (mut lo, mut hi) = (self.rabi_end, self.stirap_01.support().1.min(self.horizon));
        if angle(lo) >= theta {
            return Ok(lo);
        }
        // Θ is non-decreasing up to the end of the 0-1 support, where it
        // drops back to the both-off convention.
        hi -= 1e-9 * self.sigma;
        if angle(hi) < theta {
            return Err(Error::InvalidSequence(format!("mixing angle never reaches {theta}")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if angle(mid) >= theta {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * self.sigma.max(hi.abs()) {
                break;
            }
        }
        Ok(hi)
    }

    /// Times at which the drive is discontinuous or changes character.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = vec![self.rabi.t0(), self.rabi_end];
        v.extend(self.stirap_01.breakpoints());
        v.extend(self.stirap_12.breakpoints());
        v.extend(self.interrupt_at);
        if let Some(r) = self.readout {
            v.push(r.t0());
            v.push(r.t0() + r.width());
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

pub(crate) fn rms_of(a: f64, b: f64) -> RmsDrive {
    let omega = a.hypot(b);
    let theta = if omega == 0.0 { 0.0 } else { a.atan2(b) };
    RmsDrive { omega, theta }
}

/// Two-level rotation of the ground state by a resonant pulse of area
/// `theta` and phase `phase` placed in the upper off-diagonal entry:
/// returns `(cos(θ/2), −i e^{−iφ} sin(θ/2))`.
pub fn rabi_rotation(theta: f64, phase: f64) -> (Complex64, Complex64) {
    let (s, c) = (0.5 * theta).sin_cos();
    let beta = Complex64::new(0.0, -1.0) * Complex64::from_polar(s, -phase);
    (Complex64::new(c, 0.0), beta)
}

/// Wraps an angle to the principal branch `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x % TAU;
    if y <= -PI {
        y += TAU;
    } else if y > PI {
        y -= TAU;
    }
    y
}

/// Converts a frequency given in MHz (cycles per µs) to rad/s.
pub fn mhz_to_angular(mhz: f64) -> f64 {
    TAU * mhz * 1e6
}
