use num_complex::Complex64;

use super::{interior, Integrator, StepState, MAX_STEPS};
use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::state::QutritState;

/// Classical fourth-order Runge–Kutta with a fixed nominal step. Each
/// interval is split into the smallest number of equal steps not longer
/// than `step`, so sample times are hit exactly.
#[derive(Clone, Copy, Debug)]
pub struct FixedRk4 {
    pub step: f64,
}

impl Integrator for FixedRk4 {
    fn name(&self) -> &'static str {
        "rk4"
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
        let n = (span.abs() / self.step).ceil().max(1.0);
        if n as usize > MAX_STEPS {
            return Err(Error::StepLimit(MAX_STEPS));
        }
        let n = n as usize;
        let h = span / n as f64;
        let mi = Complex64::new(0.0, -1.0);
        let f = |t: f64, y: &QutritState| model.hamiltonian(interior(t, t0, t1)).apply(y) * mi;
        for i in 0..n {
            let t = t0 + span * (i as f64) / (n as f64);
            let k1 = f(t, psi);
            let mut y = *psi;
            y.axpy(Complex64::new(0.5 * h, 0.0), &k1);
            let k2 = f(t + 0.5 * h, &y);
            let mut y = *psi;
            y.axpy(Complex64::new(0.5 * h, 0.0), &k2);
            let k3 = f(t + 0.5 * h, &y);
            let mut y = *psi;
            y.axpy(Complex64::new(h, 0.0), &k3);
            let k4 = f(t + h, &y);
            psi.axpy(Complex64::new(h / 6.0, 0.0), &k1);
            psi.axpy(Complex64::new(h / 3.0, 0.0), &k2);
            psi.axpy(Complex64::new(h / 3.0, 0.0), &k3);
            psi.axpy(Complex64::new(h / 6.0, 0.0), &k4);
        }
        ws.accepted += n;
        ws.evaluations += 4 * n;
        Ok(())
    }
}
