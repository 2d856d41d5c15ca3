//! Grid sweeps over dotted config paths, run on a bounded rayon pool.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Observable;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::run::{final_state, Evaluation};
use crate::state::QutritState;

/// Written in place of values that do not exist at a grid point, such as a
/// relative phase against a vanishing amplitude.
pub const UNDEFINED: &str = "undefined";

/// Path of the phase derived under [`SweepSpec::phase_lock`].
const PHI12: &str = "sequence.phi12";

/// One sweep axis. Exactly one of `values`, `linspace` or `periodic` is
/// set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// `[start, stop, n]`, both ends included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linspace: Option<(f64, f64, usize)>,
    /// `n` points `2πk/n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<usize>,
}

impl Axis {
    pub fn list(path: &str, values: Vec<f64>) -> Self {
        Self { path: path.into(), values: Some(values), ..Self::default() }
    }

    pub fn linspace(path: &str, start: f64, stop: f64, n: usize) -> Self {
        Self { path: path.into(), linspace: Some((start, stop, n)), ..Self::default() }
    }

    pub fn periodic(path: &str, n: usize) -> Self {
        Self { path: path.into(), periodic: Some(n), ..Self::default() }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let bad = |why: &str| Error::Config(format!("axis {}: {why}", self.path));
        let g = match (&self.values, self.linspace, self.periodic) {
            (Some(v), None, None) => v.clone(),
            (None, Some((a, b, n)), None) => match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            },
            (None, None, Some(n)) => crate::ancilla::periodic_grid(n),
            _ => return Err(bad("set exactly one of values, linspace, periodic")),
        };
        if g.is_empty() {
            return Err(bad("empty grid"));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(bad("non-finite grid value"));
        }
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    #[serde(default)]
    pub evaluation: Evaluation,
    pub axes: Vec<Axis>,
    pub outputs: Vec<Observable>,
    /// Keeps `2φ₀₁ + φ₁₂` at this value by deriving `φ₁₂` from `φ₀₁`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_lock: Option<f64>,
    /// `[re, im, ...]` of the state `fidelity` is measured against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<f64>>,
    /// Free-form remarks copied into the manifest.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default)]
    pub base: SimConfig,
}

impl SweepSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn grids(&self) -> Result<Vec<Vec<f64>>> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::Config(format!("a sweep has 1 or 2 axes, got {}", self.axes.len())));
        }
        self.axes.iter().map(Axis::grid).collect()
    }

    pub fn target_state(&self) -> Result<Option<QutritState>> {
        let Some(raw) = &self.target else { return Ok(None) };
        let dim = self.base.model.dim();
        if raw.len() != 2 * dim {
            return Err(Error::Config(format!("target needs {} numbers, got {}", 2 * dim, raw.len())));
        }
        let amps: Vec<Complex64> = raw.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        QutritState::normalized_from_slice(&amps, crate::synthesis::TARGET_NORM_TOL).map(Some)
    }

    pub fn columns(&self) -> Vec<String> {
        let dim = self.base.model.dim();
        let mut cols = vec!["index".to_string()];
        cols.extend((0..self.axes.len()).map(|k| format!("i{k}")));
        cols.extend(self.axes.iter().map(|a| a.path.clone()));
        if self.phase_lock.is_some() {
            cols.push(PHI12.to_string());
        }
        cols.extend(self.outputs.iter().flat_map(|o| o.columns(dim)).map(String::from));
        cols
    }

    /// Config at grid coordinates `coords`.
    pub fn point_config(&self, grids: &[Vec<f64>], coords: &[usize]) -> Result<SimConfig> {
        let mut cfg = self.base.clone();
        for ((axis, grid), &k) in self.axes.iter().zip(grids).zip(coords) {
            cfg.set(&axis.path, grid[k])?;
        }
        if let Some(total) = self.phase_lock {
            cfg.sequence.phi12 = total - 2.0 * cfg.sequence.phi01;
        }
        Ok(cfg)
    }

    fn validate(&self, grids: &[Vec<f64>]) -> Result<()> {
        if self.outputs.is_empty() {
            return Err(Error::Config("no outputs requested".into()));
        }
        if self.phase_lock.is_some() && self.axes.iter().any(|a| a.path == PHI12) {
            return Err(Error::Config(format!("{PHI12} is derived under phase_lock")));
        }
        if self.outputs.contains(&Observable::Fidelity) && self.target.is_none() {
            return Err(Error::Config("fidelity needs a target".into()));
        }
        self.target_state()?;
        // Every path must resolve before any work starts.
        let first = vec![0; grids.len()];
        self.point_config(grids, &first)?.build_sequence()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SweepOptions<'a> {
    pub jobs: usize,
    /// Checked before each grid point; set it to stop early.
    pub cancel: Option<&'a AtomicBool>,
}

impl Default for SweepOptions<'_> {
    fn default() -> Self {
        Self { jobs: 1, cancel: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub coords: Vec<usize>,
    /// Axis values, then the derived `φ₁₂` under a phase lock.
    pub params: Vec<f64>,
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PointFailure {
    pub index: usize,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub grids: Vec<Vec<f64>>,
    pub columns: Vec<String>,
    /// Sorted by `index`.
    pub rows: Vec<SweepRow>,
    pub total: usize,
    pub failures: Vec<PointFailure>,
}

impl SweepResult {
    pub fn complete(&self) -> bool {
        self.rows.len() == self.total
    }

    pub fn missing(&self) -> Vec<usize> {
        let mut have = self.rows.iter().map(|r| r.index).peekable();
        (0..self.total)
            .filter(|i| {
                if have.peek() == Some(i) {
                    have.next();
                    false
                } else {
                    true
                }
            })
            .collect()
    }

    /// Value of `column` at each row, in row order.
    pub fn column(&self, column: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == column)?;
        let fixed = 1 + 2 * self.grids.len() + usize::from(self.spec.phase_lock.is_some());
        Some(
            self.rows
                .iter()
                .map(|r| {
                    if k < fixed {
                        if k == 0 {
                            Some(r.index as f64)
                        } else if k <= self.grids.len() {
                            Some(r.coords[k - 1] as f64)
                        } else {
                            Some(r.params[k - 1 - self.grids.len()])
                        }
                    } else {
                        r.values[k - fixed]
                    }
                })
                .collect(),
        )
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            let mut rec = vec![r.index.to_string()];
            rec.extend(r.coords.iter().map(usize::to_string));
            rec.extend(r.params.iter().map(|&x| format_value(Some(x))));
            rec.extend(r.values.iter().map(|&x| format_value(x)));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn manifest(&self, csv: &str) -> Result<serde_json::Value> {
        Ok(serde_json::json!({
            "name": self.spec.name,
            "kind": "sweep",
            "crate_version": env!("CARGO_PKG_VERSION"),
            "evaluation": self.spec.evaluation,
            "axes": self.spec.axes.iter().zip(&self.grids).map(|(a, g)| {
                serde_json::json!({ "path": a.path, "values": g })
            }).collect::<Vec<_>>(),
            "columns": self.columns,
            "undefined_marker": UNDEFINED,
            "points_total": self.total,
            "points_written": self.rows.len(),
            "complete": self.complete(),
            "missing": self.missing(),
            "failures": self.failures,
            "content_sha256": content_hash(csv),
            "notes": self.spec.notes,
            "config": self.spec,
        }))
    }

    /// Writes `<name>.csv` and `<name>.manifest.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv = self.to_csv_string()?;
        write_dataset(dir, &self.spec.name, &csv, &self.manifest(&csv)?)
    }
}

/// Shortest round-trip text; scientific outside `[1e-4, 1e6)`.
pub fn format_value(x: Option<f64>) -> String {
    match x {
        None => UNDEFINED.to_string(),
        Some(v) if v == 0.0 || (1e-4..1e6).contains(&v.abs()) => format!("{v}"),
        Some(v) => format!("{v:e}"),
    }
}

pub fn content_hash(payload: &str) -> String {
    hex::encode(Sha256::digest(payload.as_bytes()))
}

pub(crate) fn write_dataset(
    dir: &Path,
    stem: &str,
    csv: &str,
    manifest: &serde_json::Value,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let data = dir.join(format!("{stem}.csv"));
    let meta = dir.join(format!("{stem}.manifest.json"));
    fs::write(&data, csv)?;
    fs::write(&meta, serde_json::to_string_pretty(manifest)? + "\n")?;
    Ok((data, meta))
}

fn unravel(index: usize, shape: &[usize]) -> Vec<usize> {
    let mut rest = index;
    let mut out = vec![0; shape.len()];
    for (k, &n) in shape.iter().enumerate().rev() {
        out[k] = rest % n;
        rest /= n;
    }
    out
}

/// Runs every grid point (row-major, last axis fastest). Per-point errors
/// are collected rather than aborting the sweep; a cancelled sweep returns
/// the rows finished so far.
pub fn run_sweep(spec: &SweepSpec, opts: &SweepOptions<'_>) -> Result<SweepResult> {
    let grids = spec.grids()?;
    spec.validate(&grids)?;
    let target = spec.target_state()?;
    if let Some(t) = &target {
        if t.dim() != spec.base.model.dim() {
            return Err(Error::DimensionMismatch { expected: spec.base.model.dim(), got: t.dim() });
        }
    }
    let shape: Vec<usize> = grids.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let done = AtomicUsize::new(0);
    let every = (total / 20).max(1);

    let point = |index: usize| -> Option<std::result::Result<SweepRow, PointFailure>> {
        if opts.cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            return None;
        }
        let coords = unravel(index, &shape);
        let row = (|| {
            let cfg = spec.point_config(&grids, &coords)?;
            let psi = final_state(&cfg, spec.evaluation)?;
            let mut values = Vec::new();
            for o in &spec.outputs {
                values.extend(o.evaluate(&psi, target.as_ref())?);
            }
            let mut params: Vec<f64> = coords.iter().zip(&grids).map(|(&k, g)| g[k]).collect();
            if spec.phase_lock.is_some() {
                params.push(cfg.sequence.phi12);
            }
            Ok::<_, Error>(SweepRow { index, coords: coords.clone(), params, values })
        })();
        let n = done.fetch_add(1, Ordering::Relaxed) + 1;
        if n % every == 0 || n == total {
            log::info!("{}: {n}/{total} points", spec.name);
        }
        Some(row.map_err(|e| {
            log::warn!("{}: point {index} failed: {e}", spec.name);
            PointFailure { index, error: e.to_string() }
        }))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| (0..total).into_par_iter().map(point).collect());

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in outcomes.into_iter().flatten() {
        match r {
            Ok(row) => rows.push(row),
            Err(f) => failures.push(f),
        }
    }
    rows.sort_by_key(|r| r.index);
    Ok(SweepResult { spec: spec.clone(), grids, columns: spec.columns(), rows, total, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHI01: &str = "sequence.phi01";

    fn small() -> SweepSpec {
        SweepSpec {
            name: "t".into(),
            evaluation: Evaluation::Analytic,
            axes: vec![Axis::periodic(PHI01, 3), Axis::list(PHI12, vec![0.0, 1.0])],
            outputs: vec![Observable::Populations, Observable::ArgAb],
            phase_lock: None,
            target: None,
            notes: vec![],
            base: SimConfig::default(),
        }
    }

    #[test]
    fn unravel_is_row_major() {
        assert_eq!(unravel(0, &[3, 2]), vec![0, 0]);
        assert_eq!(unravel(1, &[3, 2]), vec![0, 1]);
        assert_eq!(unravel(5, &[3, 2]), vec![2, 1]);
    }

    #[test]
    fn axis_grids() {
        assert_eq!(Axis::linspace("x", 0.0, 1.0, 3).grid().unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Axis::linspace("x", 2.0, 9.0, 1).grid().unwrap(), vec![2.0]);
        assert!(Axis::list("x", vec![]).grid().is_err());
        assert!(Axis::list("x", vec![f64::NAN]).grid().is_err());
        let both = Axis { periodic: Some(4), ..Axis::list("x", vec![1.0]) };
        assert!(both.grid().is_err());
    }

    #[test]
    fn columns_and_rows() {
        let r = run_sweep(&small(), &SweepOptions::default()).unwrap();
        assert_eq!(
            r.columns,
            ["index", "i0", "i1", PHI01, PHI12, "pop0", "pop1", "pop2", "arg_ab"]
        );
        assert_eq!(r.rows.len(), 6);
        assert!(r.complete());
        assert_eq!(r.column(PHI12).unwrap()[3], Some(1.0));
        assert_eq!(r.column("i0").unwrap()[5], Some(2.0));
    }

    #[test]
    fn bad_specs_rejected() {
        let mut s = small();
        s.axes[0].path = "sequence.nope".into();
        assert!(matches!(run_sweep(&s, &SweepOptions::default()), Err(Error::InvalidParameterPath(_))));
        let mut s = small();
        s.axes.push(Axis::list("tol", vec![1e-9]));
        assert!(run_sweep(&s, &SweepOptions::default()).is_err());
        let mut s = small();
        s.phase_lock = Some(0.0);
        assert!(run_sweep(&s, &SweepOptions::default()).is_err());
        let mut s = small();
        s.outputs.push(Observable::Fidelity);
        assert!(run_sweep(&s, &SweepOptions::default()).is_err());
    }

    #[test]
    fn cancelled_sweep_is_partial() {
        let flag = AtomicBool::new(true);
        let r = run_sweep(&small(), &SweepOptions { jobs: 2, cancel: Some(&flag) }).unwrap();
        assert!(!r.complete());
        assert_eq!(r.missing(), (0..6).collect::<Vec<_>>());
        let m = r.manifest(&r.to_csv_string().unwrap()).unwrap();
        assert_eq!(m["complete"], false);
    }

    #[test]
    fn undefined_values_are_marked() {
        let mut s = small();
        s.base.sequence.rabi_area_pi = 0.0;
        let csv = run_sweep(&s, &SweepOptions::default()).unwrap().to_csv_string().unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(UNDEFINED));
        assert!(!csv.contains("NaN"));
    }

    #[test]
    fn phase_lock_derives_phi12() {
        let mut s = small();
        s.axes.truncate(1);
        s.phase_lock = Some(4.0 * std::f64::consts::PI);
        let r = run_sweep(&s, &SweepOptions::default()).unwrap();
        for row in &r.rows {
            assert!((2.0 * row.params[0] + row.params[1] - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn toml_spec() {
        let s = SweepSpec::from_toml_str(
            r#"
            name = "scan"
            evaluation = "analytic"
            outputs = ["populations", "nu"]
            [[axes]]
            path = "sequence.ts_over_sigma"
            linspace = [1.0, 3.0, 5]
            [base]
            model = "ideal"
            "#,
        )
        .unwrap();
        assert_eq!(s.grids().unwrap()[0].len(), 5);
        let back = SweepSpec::from_toml_str(&toml::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
