use num_complex::Complex64;

use super::{interior, Integrator, StepState, MAX_STEPS};
use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::state::QutritState;

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Adaptive embedded Runge–Kutta 5(4) with local extrapolation.
///
/// Error control is per unit step: a step of length `h` is accepted when
/// the largest componentwise error estimate is at most `tol·h/T`, where `T`
/// is the length of the whole propagation. Each local error is therefore
/// below `tol` and their sum over the run is too.
#[derive(Clone, Copy, Debug)]
pub struct DormandPrince45 {
    pub tol: f64,
}

fn rhs(model: &dyn Model, t: f64, psi: &QutritState) -> QutritState {
    model.hamiltonian(t).apply(psi) * Complex64::new(0.0, -1.0)
}

impl Integrator for DormandPrince45 {
    fn name(&self) -> &'static str {
        "dopri45"
    }

    fn advance(
        &self,
        model: &dyn Model,
        t0: f64,
        t1: f64,
        psi: &mut QutritState,
        ws: &mut StepState,
    ) -> Result<()> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let mut t = t0;
        let mut h_want = match ws.step {
            Some(h) => h,
            None => {
                let w = model.hamiltonian(t0).norm_bound();
                let guess = if w > 0.0 { 0.05 / w } else { span.abs() };
                guess.min(span.abs())
            }
        };
        let mut k = [QutritState::zeros(psi.dim()); 7];
        while (t1 - t) * dir > 0.0 {
            let remaining = (t1 - t).abs();
            let clipped = h_want >= remaining;
            let h = if clipped { remaining } else { h_want };
            let floor = 16.0 * f64::EPSILON * t.abs().max(span.abs());
            if h <= floor {
                return Err(Error::StepUnderflow {
                    time: t,
                    omega: model.hamiltonian(t).norm_bound(),
                });
            }
            let hs = h * dir;

            k[0] = rhs(model, interior(t, t0, t1), psi);
            for s in 1..7 {
                let mut y = *psi;
                for j in 0..s {
                    if A[s][j] != 0.0 {
                        y.axpy(Complex64::new(hs * A[s][j], 0.0), &k[j]);
                    }
                }
                k[s] = rhs(model, interior(t + C[s] * hs, t0, t1), &y);
            }
            ws.evaluations += 7;

            let mut err = 0.0f64;
            for c in 0..psi.dim() {
                let mut e = Complex64::new(0.0, 0.0);
                for s in 0..7 {
                    e += E[s] * k[s][c];
                }
                err = err.max((hs * e).norm());
            }

            let budget = self.tol * h / ws.span.max(h);
            if err <= budget {
                // The seventh stage is evaluated at the fifth-order solution.
                let mut y = *psi;
                for j in 0..6 {
                    if A[6][j] != 0.0 {
                        y.axpy(Complex64::new(hs * A[6][j], 0.0), &k[j]);
                    }
                }
                *psi = y;
                t = if clipped { t1 } else { t + hs };
                ws.accepted += 1;
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * (budget / err).powf(0.25)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                let proposal = h * factor;
                h_want = if clipped { h_want.max(proposal) } else { proposal };
            } else {
                ws.rejected += 1;
                let factor = (SAFETY * (budget / err).powf(0.25)).clamp(MIN_FACTOR, 1.0);
                h_want = h * factor;
            }
            if ws.accepted + ws.rejected > MAX_STEPS {
                return Err(Error::StepLimit(MAX_STEPS));
            }
        }
        ws.step = Some(h_want);
        Ok(())
    }
}
