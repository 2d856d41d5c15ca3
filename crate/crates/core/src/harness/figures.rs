//! Built-in datasets: the reference trajectory and three parameter maps.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::AtomicBool;

use serde::{Deserialize, Serialize};

use super::sweep::{content_hash, run_sweep, write_dataset, Axis, SweepOptions, SweepResult, SweepSpec};
use super::Observable;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::propagator::Trajectory;
use crate::pulses::{mhz_to_angular, SequenceParams};
use crate::run::{simulate, Evaluation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    /// Populations and phases along the reference sequence.
    Fig2,
    /// `ε`, `ν` over Rabi area × σ.
    Fig3,
    /// `Arg(AB*)`, `Arg(AC*)` over `φ₀₁ × φ₁₂`.
    Fig4,
    /// `Arg(AB*)`, `Arg(AC*)` over `t_s/σ × φ₀₁` with `2φ₀₁ + φ₁₂ = 4π`.
    Fig5,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5];

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure {s:?}; expected fig2, fig3, fig4 or fig5")))
    }
}

/// Peak `Ω⁰/2π` in MHz of the reference sequence. Maps whose axes change
/// the pulse timing hold this amplitude fixed.
pub fn reference_amplitude_mhz() -> f64 {
    let seq = SequenceParams::default().build().expect("reference sequence is valid");
    seq.stirap_01().amplitude() / mhz_to_angular(1.0)
}

fn fixed_amplitude_base() -> SimConfig {
    let mut base = SimConfig::default();
    base.sequence.amplitude_mhz = Some(reference_amplitude_mhz());
    base
}

/// Sweep behind a map figure at its default resolution; `None` for the
/// trajectory figure.
pub fn figure_spec(which: Figure, evaluation: Evaluation) -> Option<SweepSpec> {
    let spec = |axes, outputs, base, phase_lock, notes: &[&str]| SweepSpec {
        name: which.as_str().to_string(),
        evaluation,
        axes,
        outputs,
        phase_lock,
        target: None,
        notes: notes.iter().map(|s| s.to_string()).collect(),
        base,
    };
    match which {
        Figure::Fig2 => None,
        Figure::Fig3 => Some(spec(
            vec![
                Axis::linspace("sequence.rabi_area_pi", 0.0, 1.0, 33),
                Axis::linspace("sequence.sigma_ns", 30.0, 100.0, 15),
            ],
            vec![Observable::Epsilon, Observable::Nu],
            fixed_amplitude_base(),
            None,
            &[
                "Rabi strength axis is the Rabi area in units of pi over [0, 1]; \
                 the Rabi pulse lasts sigma/5, so its amplitude is area/(sigma/5).",
                "STIRAP peak amplitude fixed at the reference value for every sigma.",
            ],
        )),
        Figure::Fig4 => Some(spec(
            vec![Axis::periodic("sequence.phi01", 64), Axis::periodic("sequence.phi12", 64)],
            vec![Observable::ArgAb, Observable::ArgAc],
            SimConfig::default(),
            None,
            &["alpha = cos(pi/8), beta = -i sin(pi/8) from a pi/4 Rabi pulse."],
        )),
        Figure::Fig5 => Some(spec(
            vec![
                Axis::linspace("sequence.ts_over_sigma", 0.25, 5.0, 96),
                Axis::periodic("sequence.phi01", 64),
            ],
            vec![Observable::ArgAb, Observable::ArgAc],
            fixed_amplitude_base(),
            Some(4.0 * PI),
            &[
                "phi12 is derived as 4 pi - 2 phi01.",
                "STIRAP peak amplitude fixed at the reference value, so the pulse area grows with t_s/sigma.",
            ],
        )),
    }
}

#[derive(Clone, Debug, Default)]
pub struct FigureOptions<'a> {
    pub evaluation: Evaluation,
    pub jobs: usize,
    /// Overrides the integrator tolerance of the baked-in configs.
    pub tol: Option<f64>,
    pub cancel: Option<&'a AtomicBool>,
}

#[derive(Clone, Debug)]
pub enum FigureData {
    Trajectory(Trajectory),
    Map(SweepResult),
}

#[derive(Clone, Debug)]
pub struct FigureOutput {
    pub figure: Figure,
    pub data: FigureData,
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

fn trajectory_manifest(cfg: &SimConfig, evaluation: Evaluation, tr: &Trajectory, csv: &str) -> Result<serde_json::Value> {
    let last = tr.final_state();
    Ok(serde_json::json!({
        "name": Figure::Fig2.as_str(),
        "kind": "trajectory",
        "crate_version": env!("CARGO_PKG_VERSION"),
        "evaluation": evaluation,
        "model": tr.model,
        "integrator": tr.integrator,
        "samples": tr.len(),
        "complete": true,
        "final_populations": &last.populations()[..last.dim()],
        "max_norm_drift": tr.max_norm_drift(),
        "steps": tr.stats,
        "content_sha256": content_hash(csv),
        "config": cfg,
    }))
}

/// Computes a figure dataset and writes `<fig>.csv` and
/// `<fig>.manifest.json` under `out`.
pub fn run_figure(which: Figure, opts: &FigureOptions<'_>, out: &Path) -> Result<FigureOutput> {
    match figure_spec(which, opts.evaluation) {
        None => {
            let mut cfg = SimConfig::default();
            if let Some(tol) = opts.tol {
                cfg.tol = tol;
            }
            let tr = simulate(&cfg, opts.evaluation)?;
            let csv = tr.to_csv_string()?;
            let manifest = trajectory_manifest(&cfg, opts.evaluation, &tr, &csv)?;
            let (csv_path, meta) = write_dataset(out, which.as_str(), &csv, &manifest)?;
            Ok(FigureOutput { figure: which, data: FigureData::Trajectory(tr), csv: csv_path, manifest: meta })
        }
        Some(mut spec) => {
            if let Some(tol) = opts.tol {
                spec.base.tol = tol;
            }
            let res = run_sweep(&spec, &SweepOptions { jobs: opts.jobs, cancel: opts.cancel })?;
            let (csv, manifest) = res.write(out)?;
            Ok(FigureOutput { figure: which, data: FigureData::Map(res), csv, manifest })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.as_str().parse::<Figure>().unwrap(), f);
        }
        assert!("fig9".parse::<Figure>().is_err());
    }

    #[test]
    fn reference_amplitude_reproduces_reference_sequence() {
        let base = fixed_amplitude_base();
        let a = base.build_sequence().unwrap();
        let b = SequenceParams::default().build().unwrap();
        assert!((a.stirap_halfarea() - b.stirap_halfarea()).abs() < 1e-9 * b.stirap_halfarea());
    }

    #[test]
    fn map_specs_are_valid() {
        for f in [Figure::Fig3, Figure::Fig4, Figure::Fig5] {
            let s = figure_spec(f, Evaluation::Analytic).unwrap();
            assert_eq!(s.grids().unwrap().len(), 2);
        }
    }
}
