use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::state::{QutritState, MAX_DIM};

/// Integrator bookkeeping for one propagation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Sampled solution of the Schrödinger equation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub model: &'static str,
    pub integrator: &'static str,
    pub times: Vec<f64>,
    pub states: Vec<QutritState>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.dim())
    }

    pub fn final_state(&self) -> &QutritState {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one sample")
    }

    pub fn populations(&self) -> Vec<[f64; MAX_DIM]> {
        self.states.iter().map(|s| s.populations()).collect()
    }

    /// Phase of amplitude `k` at each sample, `None` where it is below the
    /// amplitude floor.
    pub fn phases(&self, k: usize) -> Vec<Option<f64>> {
        self.states
            .iter()
            .map(|s| {
                let z = s[k];
                (z.norm() > crate::state::AMPLITUDE_FLOOR).then(|| z.arg())
            })
            .collect()
    }

    /// Largest `| ‖ψ(t)‖² − 1 |` over the samples.
    pub fn max_norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Writes one row per sample: time in ns, real and imaginary parts of
    /// every amplitude, then every population.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let dim = self.dim();
        let names = ["A", "B", "C", "D"];
        let pops = ["pop0", "pop1", "pop2", "popa"];
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t_ns".to_string()];
        for n in &names[..dim] {
            header.push(format!("re{n}"));
            header.push(format!("im{n}"));
        }
        header.extend(pops[..dim].iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![format!("{:.9}", t * 1e9)];
            for z in s.amplitudes() {
                row.push(format!("{:.15e}", z.re));
                row.push(format!("{:.15e}", z.im));
            }
            for p in &s.populations()[..dim] {
                row.push(format!("{p:.15e}"));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
