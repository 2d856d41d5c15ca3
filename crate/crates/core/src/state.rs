//! Pure states of the three- or four-level system in the bare basis
//! `{|0⟩, |1⟩, |2⟩ (, |a⟩)}`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported Hilbert-space dimension (qutrit plus ancilla).
pub const MAX_DIM: usize = 4;

/// Amplitudes below this magnitude are treated as zero when a phase or a
/// ratio of magnitudes is requested.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex amplitudes `A, B, C (, D)`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QutritState {
    amps: [Complex64; MAX_DIM],
    dim: usize,
}

impl QutritState {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        Self { amps: [ZERO; MAX_DIM], dim }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut s = Self::zeros(dim);
        s.amps[k] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn from_slice(amps: &[Complex64]) -> Self {
        let mut s = Self::zeros(amps.len());
        s.amps[..amps.len()].copy_from_slice(amps);
        s
    }

    pub fn qutrit(a: Complex64, b: Complex64, c: Complex64) -> Self {
        Self::from_slice(&[a, b, c])
    }

    pub fn with_ancilla(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self::from_slice(&[a, b, c, d])
    }

    /// Builds a state and checks `|ψ|² = 1` within `tol`.
    pub fn normalized_from_slice(amps: &[Complex64], tol: f64) -> Result<Self> {
        let s = Self::from_slice(amps);
        s.ensure_normalized(tol)?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps[..self.dim]
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps[..self.dim]
    }

    pub fn a(&self) -> Complex64 {
        self.amps[0]
    }

    pub fn b(&self) -> Complex64 {
        self.amps[1]
    }

    pub fn c(&self) -> Complex64 {
        self.amps[2]
    }

    /// Ancilla amplitude; zero for a bare qutrit.
    pub fn d(&self) -> Complex64 {
        if self.dim > 3 {
            self.amps[3]
        } else {
            ZERO
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn ensure_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > tol || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(())
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            for z in self.amplitudes_mut() {
                *z /= n;
            }
        }
    }

    pub fn populations(&self) -> [f64; MAX_DIM] {
        let mut p = [0.0; MAX_DIM];
        for (k, z) in self.amplitudes().iter().enumerate() {
            p[k] = z.norm_sqr();
        }
        p
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.dim, other.dim);
        self.amplitudes()
            .iter()
            .zip(other.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum()
    }

    pub fn conj(&self) -> Self {
        let mut s = *self;
        for z in s.amplitudes_mut() {
            *z = z.conj();
        }
        s
    }

    /// Multiplies every amplitude by `e^{iθ}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        *self * Complex64::from_polar(1.0, theta)
    }

    /// Largest componentwise distance `max_k |ψ_k − φ_k|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amplitudes()
            .iter()
            .zip(other.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn axpy(&mut self, alpha: Complex64, x: &Self) {
        for k in 0..self.dim {
            self.amps[k] += alpha * x.amps[k];
        }
    }
}

/// `|⟨ψ|φ⟩|²`, insensitive to global phase.
pub fn fidelity(psi: &QutritState, phi: &QutritState) -> f64 {
    psi.inner(phi).norm_sqr()
}

impl Index<usize> for QutritState {
    type Output = Complex64;
    fn index(&self, k: usize) -> &Complex64 {
        &self.amplitudes()[k]
    }
}

impl IndexMut<usize> for QutritState {
    fn index_mut(&mut self, k: usize) -> &mut Complex64 {
        &mut self.amplitudes_mut()[k]
    }
}

impl Mul<Complex64> for QutritState {
    type Output = QutritState;
    fn mul(mut self, rhs: Complex64) -> QutritState {
        for z in self.amplitudes_mut() {
            *z *= rhs;
        }
        self
    }
}

impl Add for QutritState {
    type Output = QutritState;
    fn add(mut self, rhs: QutritState) -> QutritState {
        self.axpy(Complex64::new(1.0, 0.0), &rhs);
        self
    }
}

impl fmt::Debug for QutritState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amplitudes()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fidelity_of_identical_states_is_one() {
        let s = QutritState::qutrit(c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0));
        assert!((fidelity(&s, &s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_basis_states_have_zero_fidelity() {
        for i in 0..3 {
            for j in 0..3 {
                let f = fidelity(&QutritState::basis(3, i), &QutritState::basis(3, j));
                assert_eq!(f, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn fidelity_ignores_global_phase() {
        let s = QutritState::qutrit(c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.5), c(-0.5, 0.0));
        let t = s.with_global_phase(1.234);
        assert!((fidelity(&s, &t) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_check_rejects_unnormalized_input() {
        let s = QutritState::qutrit(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        assert!(matches!(
            s.ensure_normalized(1e-12),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn qutrit_has_no_ancilla_amplitude() {
        let s = QutritState::basis(3, 2);
        assert_eq!(s.d(), ZERO);
        assert_eq!(s.populations(), [0.0, 0.0, 1.0, 0.0]);
    }
}
