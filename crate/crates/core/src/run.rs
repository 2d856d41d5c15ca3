//! Runs a [`SimConfig`] either by propagation or through the closed forms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{effective_mixing_angle, fractional_general};
use crate::config::{RabiMode, SimConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_model, ModelKind, ModelSpec, ANCILLA};
use crate::propagator::{propagate, StepStats, TimeGrid, Trajectory, INITIAL_NORM_TOL};
use crate::pulses::{rabi_rotation, HybridSequence, RabiTransition};
use crate::state::QutritState;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    /// Integrate the Schrödinger equation.
    #[default]
    Numeric,
    /// Evaluate the adiabatic closed forms.
    Analytic,
}

/// Sequence plus the state and time the evolution starts from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prepared {
    pub sequence: HybridSequence,
    pub start: f64,
    pub psi0: QutritState,
}

pub fn prepare(cfg: &SimConfig) -> Result<Prepared> {
    let sequence = cfg.build_sequence()?;
    let dim = cfg.model.dim();
    if let Some(raw) = &cfg.initial {
        if raw.len() != 2 * dim {
            return Err(Error::Config(format!(
                "initial needs {} numbers for the {} model, got {}",
                2 * dim,
                cfg.model,
                raw.len()
            )));
        }
        let amps: Vec<Complex64> = raw.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        let psi0 = QutritState::normalized_from_slice(&amps, INITIAL_NORM_TOL)?;
        return Ok(Prepared { sequence, start: sequence.rabi_end(), psi0 });
    }
    match cfg.rabi_mode {
        RabiMode::Explicit => {
            Ok(Prepared { sequence, start: sequence.rabi_start(), psi0: QutritState::basis(dim, 0) })
        }
        RabiMode::Analytic => {
            let (alpha, beta) = sequence.rabi_amplitudes();
            let mut psi0 = QutritState::zeros(dim);
            psi0[0] = alpha;
            psi0[rabi_target(sequence.rabi_transition())] = beta;
            Ok(Prepared { sequence, start: sequence.rabi_end(), psi0 })
        }
    }
}

fn rabi_target(tr: RabiTransition) -> usize {
    match tr {
        RabiTransition::ZeroOne => 1,
        RabiTransition::ZeroAncilla => ANCILLA,
    }
}

fn sample_grid(cfg: &SimConfig, prep: &Prepared) -> Result<TimeGrid> {
    TimeGrid::linspace(prep.start, prep.sequence.horizon(), cfg.samples.max(2))
}

/// Sampled evolution from the prepared start to the horizon.
pub fn simulate(cfg: &SimConfig, eval: Evaluation) -> Result<Trajectory> {
    let prep = prepare(cfg)?;
    let grid = sample_grid(cfg, &prep)?;
    run_on_grid(cfg, &prep, &grid, eval)
}

/// State at the horizon. Numeric runs step only onto breakpoints.
pub fn final_state(cfg: &SimConfig, eval: Evaluation) -> Result<QutritState> {
    let prep = prepare(cfg)?;
    let grid = TimeGrid::endpoints(prep.start, prep.sequence.horizon())?;
    Ok(*run_on_grid(cfg, &prep, &grid, eval)?.final_state())
}

fn run_on_grid(cfg: &SimConfig, prep: &Prepared, grid: &TimeGrid, eval: Evaluation) -> Result<Trajectory> {
    match eval {
        Evaluation::Numeric => {
            let spec = ModelSpec { sequence: prep.sequence, transmon: cfg.transmon.model() };
            let model = build_model(cfg.model, &spec)?;
            propagate(model.as_ref(), &prep.psi0, grid, &cfg.propagate_options())
        }
        Evaluation::Analytic => {
            let states = grid
                .times()
                .iter()
                .map(|&t| analytic_state(cfg.model, prep, t))
                .collect::<Result<Vec<_>>>()?;
            Ok(Trajectory {
                model: cfg.model.as_str(),
                integrator: "closed-form",
                times: grid.times().to_vec(),
                states,
                stats: StepStats::default(),
            })
        }
    }
}

/// Closed-form state at `t`: two-level rotation during the Rabi pulse,
/// adiabatic following afterwards, and the exact two-level rotation on
/// `{|2⟩, |a⟩}` for a readout pulse, which is treated as acting on frozen
/// dark-state amplitudes.
pub fn analytic_state(kind: ModelKind, prep: &Prepared, t: f64) -> Result<QutritState> {
    if kind == ModelKind::TransmonCrosstalk3 {
        return Err(Error::Unsupported(
            "the crosstalk model has no closed form; use numeric evaluation".into(),
        ));
    }
    let seq = &prep.sequence;
    let dim = kind.dim();
    let rabi = seq.rabi();
    // Amplitudes at the end of the Rabi pulse, or at t if it is still on.
    let entry = if prep.start >= seq.rabi_end() {
        prep.psi0
    } else {
        let done = rabi.area(seq.rabi_start(), t.min(seq.rabi_end()));
        let (alpha, beta) = rabi_rotation(done, rabi.phase());
        let mut psi = QutritState::zeros(dim);
        psi[0] = alpha;
        psi[rabi_target(seq.rabi_transition())] = beta;
        psi
    };
    if t <= seq.rabi_end() {
        return Ok(entry);
    }

    let theta = effective_mixing_angle(seq, t);
    let halfarea = seq.halfarea_until(t);
    let block = [entry[0], entry[1], entry[2]];
    let weight = block.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut out = QutritState::zeros(dim);
    if weight > 0.0 {
        let [a, b, g] = block.map(|z| z / weight);
        let moved = fractional_general(a, b, g, theta, halfarea, seq.phi01(), seq.phi12())?;
        for k in 0..3 {
            out[k] = moved[k] * weight;
        }
    }
    if dim == 4 {
        out[ANCILLA] = entry[ANCILLA];
        if let Some(r) = seq.readout() {
            if t > r.t0() {
                let m = readout_matrix(r.area(r.t0(), t), r.phase());
                let (x, y) = (out[2], out[ANCILLA]);
                out[2] = m[0][0] * x + m[0][1] * y;
                out[ANCILLA] = m[1][0] * x + m[1][1] * y;
            }
        }
    }
    Ok(out)
}

/// `exp(−i θ/2 (e^{iφ}|2⟩⟨a| + e^{−iφ}|a⟩⟨2|))` on `(|2⟩, |a⟩)`.
fn readout_matrix(area: f64, phase: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (0.5 * area).sin_cos();
    let mi = Complex64::new(0.0, -1.0);
    [
        [Complex64::new(c, 0.0), mi * Complex64::from_polar(s, phase)],
        [mi * Complex64::from_polar(s, -phase), Complex64::new(c, 0.0)],
    ]
}
