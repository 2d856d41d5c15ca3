//! Time evolution `i dψ/dt = H(t) ψ` with interchangeable integrators.

mod dopri;
mod rk4;
mod trajectory;

use std::collections::BTreeMap;

pub use dopri::DormandPrince45;
pub use rk4::FixedRk4;
pub use trajectory::{StepStats, Trajectory};

use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::state::QutritState;

/// Hard cap on integrator steps per propagation.
pub const MAX_STEPS: usize = 50_000_000;

pub const MIN_TOL: f64 = 1e-12;
pub const MAX_TOL: f64 = 1e-6;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Tolerance on `‖ψ₀‖² − 1` accepted by [`propagate`].
pub const INITIAL_NORM_TOL: f64 = 1e-12;

/// Mutable integrator state carried across consecutive intervals.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepState {
    /// Last proposed step size, reused at the next interval.
    pub step: Option<f64>,
    /// Length of the whole propagation, for per-unit-step error control.
    pub span: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

pub trait Integrator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Advances `psi` from `t0` to exactly `t1`. `H(t)` must be smooth on
    /// the open interval.
    fn advance(
        &self,
        model: &dyn Model,
        t0: f64,
        t1: f64,
        psi: &mut QutritState,
        ws: &mut StepState,
    ) -> Result<()>;
}

/// Stage times are evaluated strictly inside `[t0, t1]`, a few ulps away
/// from the ends, so that a jump in `H` at an endpoint is seen from the
/// side being integrated.
pub(crate) fn interior(t: f64, t0: f64, t1: f64) -> f64 {
    let delta = (8.0 * f64::EPSILON * t0.abs().max(t1.abs())).min(0.25 * (t1 - t0).abs());
    let (lo, hi) = if t0 < t1 { (t0 + delta, t1 - delta) } else { (t1 + delta, t0 - delta) };
    t.clamp(lo, hi)
}

/// Knobs an integrator factory may read.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorParams {
    pub tol: f64,
    /// Nominal step for fixed-step schemes.
    pub step: Option<f64>,
}

pub type IntegratorFactory = fn(&IntegratorParams) -> Result<Box<dyn Integrator>>;

/// Name → factory table of integrators.
pub struct IntegratorRegistry {
    factories: BTreeMap<&'static str, IntegratorFactory>,
}

impl IntegratorRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &'static str, factory: IntegratorFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, name: &str, params: &IntegratorParams) -> Result<Box<dyn Integrator>> {
        let f = self
            .factories
            .get(name)
            .ok_or_else(|| Error::UnknownIntegrator(name.to_string()))?;
        f(params)
    }
}

impl Default for IntegratorRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("dopri45", |p| {
            check_tol(p.tol)?;
            Ok(Box::new(DormandPrince45 { tol: p.tol }))
        });
        r.register("rk4", |p| match p.step {
            Some(h) if h > 0.0 && h.is_finite() => Ok(Box::new(FixedRk4 { step: h })),
            Some(h) => Err(Error::Config(format!("fixed step must be > 0, got {h}"))),
            None => Err(Error::Config("the rk4 integrator needs a step size".into())),
        });
        r
    }
}

pub fn check_tol(tol: f64) -> Result<()> {
    if (MIN_TOL..=MAX_TOL).contains(&tol) {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(tol))
    }
}

/// Integrator selection for [`propagate`].
#[derive(Clone, Debug, PartialEq)]
pub struct PropagateOptions {
    pub integrator: String,
    pub tol: f64,
    pub step: Option<f64>,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self { integrator: "dopri45".into(), tol: DEFAULT_TOL, step: None }
    }
}

impl PropagateOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn build(&self) -> Result<Box<dyn Integrator>> {
        IntegratorRegistry::default().build(
            &self.integrator,
            &IntegratorParams { tol: self.tol, step: self.step },
        )
    }
}

/// Strictly increasing sample times. The first one is the start time.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidGrid("no sample times".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite sample time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("sample times must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// `n ≥ 2` equally spaced samples from `start` to `end` inclusive.
    pub fn linspace(start: f64, end: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 samples, got {n}")));
        }
        if !(end > start) {
            return Err(Error::InvalidGrid(format!("empty time range [{start:e}, {end:e}]")));
        }
        let step = (end - start) / (n - 1) as f64;
        let mut times: Vec<f64> = (0..n).map(|i| start + step * i as f64).collect();
        times[n - 1] = end;
        Self::from_times(times)
    }

    pub fn endpoints(start: f64, end: f64) -> Result<Self> {
        Self::linspace(start, end, 2)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Integrates from `grid.start()` with initial state `psi0`, recording the
/// state at every grid time. Model breakpoints are stepped onto exactly but
/// not recorded.
pub fn propagate(
    model: &dyn Model,
    psi0: &QutritState,
    grid: &TimeGrid,
    opts: &PropagateOptions,
) -> Result<Trajectory> {
    let integrator = opts.build()?;
    propagate_with(model, integrator.as_ref(), psi0, grid)
}

pub fn propagate_with(
    model: &dyn Model,
    integrator: &dyn Integrator,
    psi0: &QutritState,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    if psi0.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: psi0.dim() });
    }
    psi0.ensure_normalized(INITIAL_NORM_TOL)?;

    let (start, end) = (grid.start(), grid.end());
    let mut cuts: Vec<(f64, bool)> = grid.times().iter().map(|&t| (t, true)).collect();
    cuts.extend(
        model
            .breakpoints()
            .into_iter()
            .filter(|&b| b > start && b < end && !grid.times().contains(&b))
            .map(|b| (b, false)),
    );
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut psi = *psi0;
    let mut ws = StepState { span: end - start, ..StepState::default() };
    let mut times = Vec::with_capacity(grid.times().len());
    let mut states = Vec::with_capacity(grid.times().len());
    times.push(start);
    states.push(psi);
    for w in cuts.windows(2) {
        let ((t0, _), (t1, record)) = (w[0], w[1]);
        integrator.advance(model, t0, t1, &mut psi, &mut ws)?;
        if record {
            times.push(t1);
            states.push(psi);
        }
    }
    log::debug!(
        "{} / {}: {} steps accepted, {} rejected",
        model.name(),
        integrator.name(),
        ws.accepted,
        ws.rejected
    );
    Ok(Trajectory {
        model: model.name(),
        integrator: integrator.name(),
        times,
        states,
        stats: StepStats {
            accepted: ws.accepted,
            rejected: ws.rejected,
            evaluations: ws.evaluations,
        },
    })
}

/// Final state after evolving `psi0` from `t0` to `t1`.
pub fn evolve(
    model: &dyn Model,
    psi0: &QutritState,
    t0: f64,
    t1: f64,
    opts: &PropagateOptions,
) -> Result<QutritState> {
    let traj = propagate(model, psi0, &TimeGrid::endpoints(t0, t1)?, opts)?;
    Ok(*traj.final_state())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{Hamiltonian, IdealRwa};
    use crate::pulses::{PulseEnvelope, RabiTransition, SequenceParams};
    use crate::state::fidelity;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    struct Null;
    impl Model for Null {
        fn name(&self) -> &'static str {
            "null"
        }
        fn dim(&self) -> usize {
            3
        }
        fn hamiltonian(&self, _t: f64) -> Hamiltonian {
            Hamiltonian::zeros(3)
        }
    }

    /// Resonant square pulse on 0-1 only.
    struct TwoLevel {
        pulse: PulseEnvelope,
    }
    impl Model for TwoLevel {
        fn name(&self) -> &'static str {
            "two-level"
        }
        fn dim(&self) -> usize {
            3
        }
        fn hamiltonian(&self, t: f64) -> Hamiltonian {
            let mut h = Hamiltonian::zeros(3);
            h.add_coupling(0, 1, 0.5 * self.pulse.coupling(t));
            h
        }
        fn breakpoints(&self) -> Vec<f64> {
            vec![self.pulse.t0(), self.pulse.t0() + self.pulse.width()]
        }
    }

    /// `H_rev(s) = H*(t₀ + t_f − s)`: evolving `ψ*(t_f)` under it returns `ψ*(t₀)`.
    struct Reversed<'a> {
        inner: &'a dyn Model,
        t0: f64,
        tf: f64,
    }
    impl Model for Reversed<'_> {
        fn name(&self) -> &'static str {
            "reversed"
        }
        fn dim(&self) -> usize {
            self.inner.dim()
        }
        fn hamiltonian(&self, s: f64) -> Hamiltonian {
            self.inner.hamiltonian(self.t0 + self.tf - s).conj()
        }
        fn breakpoints(&self) -> Vec<f64> {
            self.inner.breakpoints().iter().map(|b| self.t0 + self.tf - b).collect()
        }
    }

    fn fig2() -> IdealRwa {
        IdealRwa { sequence: SequenceParams::default().build().unwrap() }
    }

    fn full_run(m: &IdealRwa, opts: &PropagateOptions) -> Trajectory {
        let s = &m.sequence;
        let grid = TimeGrid::linspace(s.rabi_start(), s.horizon(), 201).unwrap();
        propagate(m, &QutritState::basis(3, 0), &grid, opts).unwrap()
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let psi = QutritState::qutrit(
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.48),
            Complex64::new(0.0, -0.64),
        );
        let grid = TimeGrid::linspace(0.0, 1e-6, 11).unwrap();
        let traj = propagate(&Null, &psi, &grid, &PropagateOptions::default()).unwrap();
        for s in &traj.states {
            assert_eq!(s.max_abs_diff(&psi), 0.0);
        }
    }

    #[test]
    fn square_pi_pulse_transfers_population() {
        for integrator in ["dopri45", "rk4"] {
            let pulse = PulseEnvelope::square_with_area(PI, 10e-9, 20e-9, 0.3).unwrap();
            let model = TwoLevel { pulse };
            let opts = PropagateOptions {
                integrator: integrator.into(),
                step: Some(1e-12),
                ..Default::default()
            };
            let out = evolve(&model, &QutritState::basis(3, 0), 0.0, 40e-9, &opts).unwrap();
            assert!((out.populations()[1] - 1.0).abs() < 1e-8, "{integrator}: {out:?}");
            // −i e^{−iφ}
            let expect = Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, -0.3);
            assert!((out.b() - expect).norm() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = fig2();
        let grid = TimeGrid::endpoints(-1e-6, 0.0).unwrap();
        let opts = PropagateOptions::default();
        let unnormalized = QutritState::qutrit(
            Complex64::new(1.0, 0.0),
            Complex64::new(1e-5, 0.0),
            Complex64::new(0.0, 0.0),
        );
        assert!(matches!(
            propagate(&m, &unnormalized, &grid, &opts),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            propagate(&m, &QutritState::basis(4, 0), &grid, &opts),
            Err(Error::DimensionMismatch { expected: 3, got: 4 })
        ));
        for tol in [1e-13, 1e-5, f64::NAN] {
            assert!(matches!(
                propagate(&m, &QutritState::basis(3, 0), &grid, &PropagateOptions::with_tol(tol)),
                Err(Error::InvalidTolerance(_))
            ));
        }
        let bogus = PropagateOptions { integrator: "leapfrog".into(), ..Default::default() };
        assert!(matches!(
            propagate(&m, &QutritState::basis(3, 0), &grid, &bogus),
            Err(Error::UnknownIntegrator(_))
        ));
        assert!(TimeGrid::from_times(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeGrid::linspace(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn reference_sequence_final_population() {
        let m = fig2();
        let traj = full_run(&m, &PropagateOptions::default());
        let pop2 = traj.final_state().populations()[2];
        assert!((pop2 - 0.8536).abs() < 0.02, "pop2 = {pop2}");
        assert!(traj.max_norm_drift() <= 1e-9, "drift {}", traj.max_norm_drift());
        assert_eq!(traj.len(), 201);
        assert_eq!(traj.times[0], m.sequence.rabi_start());
    }

    #[test]
    fn tightening_tolerance_changes_little() {
        let m = fig2();
        let tol = 1e-9;
        let a = full_run(&m, &PropagateOptions::with_tol(tol));
        let b = full_run(&m, &PropagateOptions::with_tol(tol / 2.0));
        for (x, y) in a.states.iter().zip(&b.states) {
            let (px, py) = (x.populations(), y.populations());
            for k in 0..3 {
                assert!((px[k] - py[k]).abs() <= 10.0 * tol, "{} vs {}", px[k], py[k]);
            }
        }
    }

    #[test]
    fn time_reversal_recovers_initial_state() {
        let m = fig2();
        let (t0, tf) = (m.sequence.rabi_start(), m.sequence.horizon());
        let opts = PropagateOptions::with_tol(1e-11);
        let psi0 = QutritState::basis(3, 0);
        let psif = evolve(&m, &psi0, t0, tf, &opts).unwrap();
        let rev = Reversed { inner: &m, t0, tf };
        let mut back_in = psif.conj();
        back_in.normalize();
        let back = evolve(&rev, &back_in, t0, tf, &opts).unwrap().conj();
        assert!(fidelity(&back, &psi0) >= 1.0 - 1e-6);
    }

    #[test]
    fn global_phase_commutes_with_evolution() {
        let m = fig2();
        let (t0, tf) = (m.sequence.rabi_start(), m.sequence.horizon());
        let opts = PropagateOptions::default();
        let psi0 = QutritState::basis(3, 0);
        let out = evolve(&m, &psi0, t0, tf, &opts).unwrap();
        let out_rot = evolve(&m, &psi0.with_global_phase(1.1), t0, tf, &opts).unwrap();
        assert!(out_rot.max_abs_diff(&out.with_global_phase(1.1)) < 1e-10);
    }

    #[test]
    fn integrators_agree() {
        let m = fig2();
        let (t0, tf) = (m.sequence.rabi_start(), m.sequence.horizon());
        let psi0 = QutritState::basis(3, 0);
        let a = evolve(&m, &psi0, t0, tf, &PropagateOptions::default()).unwrap();
        let rk = PropagateOptions {
            integrator: "rk4".into(),
            step: Some(m.sequence.sigma() / 2000.0),
            ..Default::default()
        };
        let b = evolve(&m, &psi0, t0, tf, &rk).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-6, "{a:?} vs {b:?}");
    }

    #[test]
    fn ancilla_sequence_rejected_by_ideal_registry_entry() {
        let p = SequenceParams { rabi_transition: RabiTransition::ZeroAncilla, ..Default::default() };
        let spec = crate::hamiltonian::ModelSpec {
            sequence: p.build().unwrap(),
            transmon: Default::default(),
        };
        assert!(crate::hamiltonian::ModelRegistry::default().build("ideal", &spec).is_err());
    }

    #[test]
    fn registry_lists_integrators() {
        let names: Vec<_> = IntegratorRegistry::default().names().collect();
        assert_eq!(names, ["dopri45", "rk4"]);
    }
}
