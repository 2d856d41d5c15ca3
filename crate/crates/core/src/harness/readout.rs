//! Fringe scans of the ancilla readout over the phase sum `φΣ`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::format_value;
use crate::ancilla::{ancilla_population, fit_fringe, numeric_readout, periodic_grid, visibility, FringeFit, InterferenceParams};
use crate::config::SequenceConfig;
use crate::error::{Error, Result};
use crate::propagator::{PropagateOptions, DEFAULT_TOL};
use crate::pulses::RabiTransition;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AncillaSweepConfig {
    /// Ancilla amplitude after the 0-a Rabi pulse.
    pub beta: f64,
    /// `sin` of half the 2-a pulse area.
    pub beta_p: f64,
    /// Mixing angle at the interruption.
    pub theta: f64,
    /// Phase-sum samples over one period.
    pub points: usize,
    /// Also simulate every point on the four-level model.
    pub numeric: bool,
    pub tol: f64,
    /// Timing and STIRAP strength; Rabi and phase fields are overridden.
    pub sequence: SequenceConfig,
}

impl Default for AncillaSweepConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            beta_p: 0.1 / std::f64::consts::FRAC_PI_4.sin(),
            theta: std::f64::consts::FRAC_PI_4,
            points: 32,
            numeric: true,
            tol: DEFAULT_TOL,
            sequence: SequenceConfig::default(),
        }
    }
}

impl AncillaSweepConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AncillaSweep {
    pub params: InterferenceParams,
    pub phis: Vec<f64>,
    pub analytic: Vec<f64>,
    pub numeric: Option<Vec<f64>>,
    pub visibility: Option<f64>,
    pub fit_analytic: FringeFit,
    pub fit_numeric: Option<FringeFit>,
    pub min_block_fidelity: Option<f64>,
}

impl AncillaSweep {
    /// Columns `phi_sum, P_a_analytic, P_a_numeric`.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["phi_sum", "P_a_analytic", "P_a_numeric"])?;
        for (k, &phi) in self.phis.iter().enumerate() {
            let num = self.numeric.as_ref().map(|v| v[k]);
            w.write_record([format_value(Some(phi)), format_value(Some(self.analytic[k])), format_value(num)])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn run_ancilla_sweep(cfg: &AncillaSweepConfig, jobs: usize) -> Result<AncillaSweep> {
    let params = InterferenceParams::from_betas(cfg.beta, cfg.beta_p, cfg.theta)?;
    let phis = periodic_grid(cfg.points);
    let analytic = phis.iter().map(|&f| ancilla_population(&params, f)).collect::<Result<Vec<_>>>()?;
    let fit_analytic = fit_fringe(&phis, &analytic)?;
    let (numeric, fit_numeric, min_block_fidelity) = if cfg.numeric {
        let base = cfg.sequence.params(RabiTransition::ZeroAncilla)?;
        let opts = PropagateOptions::with_tol(cfg.tol);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let runs = pool.install(|| {
            phis.par_iter()
                .map(|&f| numeric_readout(&params, f, &base, &opts))
                .collect::<Result<Vec<_>>>()
        })?;
        let pa: Vec<f64> = runs.iter().map(|r| r.p_a).collect();
        let fit = fit_fringe(&phis, &pa)?;
        let fmin = runs.iter().map(|r| r.block_fidelity).fold(f64::INFINITY, f64::min);
        (Some(pa), Some(fit), Some(fmin))
    } else {
        (None, None, None)
    };
    Ok(AncillaSweep {
        params,
        visibility: visibility(&params)?,
        phis,
        analytic,
        numeric,
        fit_analytic,
        fit_numeric,
        min_block_fidelity,
    })
}
