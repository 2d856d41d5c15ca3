//! Figure datasets, parameter sweeps and the acceptance suite.

pub mod acceptance;
pub mod figures;
pub mod readout;
pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::adiabatic::{relative_phases, spherical};
use crate::error::{Error, Result};
use crate::hamiltonian::ANCILLA;
use crate::state::{fidelity, QutritState, AMPLITUDE_FLOOR};

pub use figures::{run_figure, Figure, FigureOutput};
pub use sweep::{run_sweep, Axis, SweepOptions, SweepResult, SweepSpec, UNDEFINED};

/// A quantity read off the final state of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `pop0, pop1, pop2` and `popa` for the four-level model.
    Populations,
    Epsilon,
    Nu,
    ArgAb,
    ArgAc,
    /// Ancilla population.
    PA,
    /// Overlap with the sweep target.
    Fidelity,
}

impl Observable {
    pub fn columns(self, dim: usize) -> Vec<&'static str> {
        match self {
            Observable::Populations if dim == 4 => vec!["pop0", "pop1", "pop2", "popa"],
            Observable::Populations => vec!["pop0", "pop1", "pop2"],
            Observable::Epsilon => vec!["epsilon"],
            Observable::Nu => vec!["nu"],
            Observable::ArgAb => vec!["arg_ab"],
            Observable::ArgAc => vec!["arg_ac"],
            Observable::PA => vec!["p_a"],
            Observable::Fidelity => vec!["fidelity"],
        }
    }

    /// Values in [`Observable::columns`] order; `None` where undefined.
    pub fn evaluate(self, psi: &QutritState, target: Option<&QutritState>) -> Result<Vec<Option<f64>>> {
        let pops = psi.populations();
        Ok(match self {
            Observable::Populations => pops[..psi.dim()].iter().map(|&p| Some(p)).collect(),
            Observable::Epsilon => vec![qutrit_block(psi).and_then(|q| spherical(&q).ok()).map(|s| s.epsilon)],
            Observable::Nu => vec![qutrit_block(psi).and_then(|q| spherical(&q).ok()).and_then(|s| s.nu)],
            Observable::ArgAb => vec![relative_phases(psi).ab],
            Observable::ArgAc => vec![relative_phases(psi).ac],
            Observable::PA => {
                if psi.dim() != 4 {
                    return Err(Error::Config("p_a needs the ancilla model".into()));
                }
                vec![Some(pops[ANCILLA])]
            }
            Observable::Fidelity => {
                let t = target.ok_or_else(|| Error::Config("fidelity needs a target".into()))?;
                vec![Some(fidelity(psi, t))]
            }
        })
    }
}

/// `(A, B, C)` renormalized; the ancilla amplitude, if any, is dropped.
fn qutrit_block(psi: &QutritState) -> Option<QutritState> {
    let mut q = QutritState::qutrit(psi.a(), psi.b(), psi.c());
    if q.norm_sqr().sqrt() <= AMPLITUDE_FLOOR {
        return None;
    }
    q.normalize();
    Some(q)
}
