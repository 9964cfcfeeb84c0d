//! The measured system and the apparatus pointer.
//!
//! Units: ħ = 1, so energies and angular frequencies coincide and pointer
//! momentum eigenvalues `a_i` are dimensionless phases per unit position.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level gaps below this are reported as degeneracies.
pub const DEGENERACY_GAP: f64 = 1e-9;
/// Entrywise tolerance for `O = O†`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Energies `E_m` (the Hamiltonian is diagonal in this basis), a Hermitian
/// observable `O` and the initial level `n`.
#[derive(Clone, Debug)]
pub struct SystemModel {
    energies: Vec<f64>,
    observable: DMatrix<Complex64>,
    initial_level: usize,
    warnings: Vec<String>,
}

impl SystemModel {
    pub fn new(energies: Vec<f64>, observable: DMatrix<Complex64>, initial_level: usize) -> Result<Self> {
        let d = energies.len();
        if d == 0 {
            return Err(Error::validation("system.energies", "at least one level is required"));
        }
        if let Some(i) = energies.iter().position(|e| !e.is_finite()) {
            return Err(Error::validation(
                format!("system.energies[{i}]"),
                "energy must be finite",
            ));
        }
        if observable.nrows() != d || observable.ncols() != d {
            return Err(Error::validation(
                "system.observable",
                format!(
                    "expected a {d}x{d} matrix, got {}x{}",
                    observable.nrows(),
                    observable.ncols()
                ),
            ));
        }
        for i in 0..d {
            for j in i..d {
                let (a, b) = (observable[(i, j)], observable[(j, i)].conj());
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return Err(Error::validation(
                        format!("system.observable[{i}][{j}]"),
                        "entry must be finite",
                    ));
                }
                if (a - b).norm() > HERMITIAN_TOLERANCE {
                    return Err(Error::validation(
                        format!("system.observable[{i}][{j}]"),
                        format!(
                            "observable is not Hermitian (|O_ij - conj(O_ji)| = {:e})",
                            (a - b).norm()
                        ),
                    ));
                }
            }
        }
        if initial_level >= d {
            return Err(Error::validation(
                "system.initial_level",
                format!("level {initial_level} out of range for dimension {d}"),
            ));
        }
        // Symmetrize so that downstream code sees an exactly Hermitian matrix.
        let observable = (&observable + observable.adjoint()).scale(0.5);
        let mut warnings = Vec::new();
        for m in 0..d {
            for k in m + 1..d {
                if (energies[m] - energies[k]).abs() < DEGENERACY_GAP {
                    warnings.push(format!(
                        "levels {m} and {k} are degenerate (gap {:e}); protection fails for this pair",
                        (energies[m] - energies[k]).abs()
                    ));
                }
            }
        }
        Ok(SystemModel {
            energies,
            observable,
            initial_level,
            warnings,
        })
    }

    /// Builds a system from a real symmetric observable given row-major.
    pub fn from_real(energies: Vec<f64>, observable: &[f64], initial_level: usize) -> Result<Self> {
        let d = energies.len();
        if observable.len() != d * d {
            return Err(Error::validation(
                "system.observable",
                format!("expected {} entries, got {}", d * d, observable.len()),
            ));
        }
        let o = DMatrix::from_row_iterator(d, d, observable.iter().map(|&x| Complex64::new(x, 0.0)));
        Self::new(energies, o, initial_level)
    }

    /// Two-level system with `E = (-ω/2, ω/2)`, starting in the lower level.
    pub fn qubit(omega: f64, observable: [[f64; 2]; 2]) -> Result<Self> {
        Self::from_real(
            vec![-0.5 * omega, 0.5 * omega],
            &[observable[0][0], observable[0][1], observable[1][0], observable[1][1]],
            0,
        )
    }

    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn observable(&self) -> &DMatrix<Complex64> {
        &self.observable
    }

    pub fn initial_level(&self) -> usize {
        self.initial_level
    }

    /// Same system started from another level.
    pub fn with_initial_level(&self, n: usize) -> Result<Self> {
        Self::new(self.energies.clone(), self.observable.clone(), n)
    }

    /// Degeneracy warnings collected at construction.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_degenerate(&self) -> bool {
        !self.warnings.is_empty()
    }

    /// `⟨m|O|k⟩`.
    pub fn element(&self, m: usize, k: usize) -> Complex64 {
        self.observable[(m, k)]
    }

    /// `ω_mk = E_m - E_k`.
    pub fn transition_frequency(&self, m: usize, k: usize) -> f64 {
        self.energies[m] - self.energies[k]
    }

    /// Largest `|ω_mk|` over all pairs of levels.
    pub fn max_frequency(&self) -> f64 {
        let (lo, hi) = self
            .energies
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
                (lo.min(e), hi.max(e))
            });
        hi - lo
    }

    /// Spectral norm of `O` (largest absolute eigenvalue).
    pub fn observable_norm(&self) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(self.observable.clone());
        eig.eigenvalues.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `H_S + c O` as a dense matrix.
    pub fn hamiltonian(&self, coupling: f64) -> DMatrix<Complex64> {
        let mut h = self.observable.scale(coupling);
        for (i, e) in self.energies.iter().enumerate() {
            h[(i, i)] += Complex64::new(*e, 0.0);
        }
        h
    }

    /// Ratio of `T` to the longest protection time scale
    /// `max_{m≠n} |⟨m|O|n⟩| / |ω_mn|`. Values well above 1 indicate the
    /// protective regime. Infinite when no level couples to `n`.
    pub fn protection_ratio(&self, duration: f64) -> f64 {
        let n = self.initial_level;
        let scale = (0..self.dimension())
            .filter(|&m| m != n)
            .map(|m| self.element(m, n).norm() / self.transition_frequency(m, n).abs())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            f64::INFINITY
        } else {
            duration / scale
        }
    }
}

/// Apparatus self-Hamiltonian, diagonal in the pointer-momentum basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ApparatusModel {
    /// `ε_i = 0`.
    #[default]
    Static,
    /// `ε_i = a_i² / 2M`.
    Free { mass: f64 },
}

/// Gaussian pointer packet tabulated on a uniform momentum grid.
#[derive(Clone, Debug)]
pub struct PointerModel {
    x0: f64,
    sigma_x: f64,
    grid_span: f64,
    momenta: Vec<f64>,
    amplitudes: Vec<Complex64>,
    apparatus: ApparatusModel,
    apparatus_energies: Vec<f64>,
}

/// Minimum number of momentum grid points.
pub const MIN_GRID_SIZE: usize = 16;
/// Largest allowed edge density relative to the peak density.
pub const EDGE_DENSITY: f64 = 1e-8;

impl PointerModel {
    /// Packet centred on `x0` with position width `sigma_x`, on `grid_size`
    /// momenta spanning `[-grid_span/2, grid_span/2]`.
    pub fn new(x0: f64, sigma_x: f64, grid_size: usize, grid_span: f64, apparatus: ApparatusModel) -> Result<Self> {
        if !(sigma_x.is_finite() && sigma_x > 0.0) {
            return Err(Error::validation("pointer.sigma_x", "width must be positive"));
        }
        if !x0.is_finite() {
            return Err(Error::validation("pointer.x0", "centre must be finite"));
        }
        if grid_size < MIN_GRID_SIZE {
            return Err(Error::validation(
                "pointer.grid_size",
                format!("need at least {MIN_GRID_SIZE} points, got {grid_size}"),
            ));
        }
        let sigma_p = 0.5 / sigma_x;
        if !(grid_span >= 8.0 * sigma_p) {
            return Err(Error::validation(
                "pointer.grid_span",
                format!("span {grid_span} covers fewer than 8 momentum widths (σ_p = {sigma_p})"),
            ));
        }
        let half = 0.5 * grid_span;
        let edge_density = (-2.0 * half * half * sigma_x * sigma_x).exp();
        if edge_density >= EDGE_DENSITY {
            return Err(Error::validation(
                "pointer.grid_span",
                format!("edge density {edge_density:e} of peak is not below {EDGE_DENSITY:e}"),
            ));
        }
        let step = grid_span / (grid_size - 1) as f64;
        if x0.abs() * step >= 0.5 * PI {
            return Err(Error::validation(
                "pointer.grid_size",
                format!("momentum step {step} too coarse to resolve a packet at x0 = {x0}"),
            ));
        }
        if let ApparatusModel::Free { mass } = apparatus {
            if !(mass.is_finite() && mass > 0.0) {
                return Err(Error::validation(
                    "pointer.apparatus.free.mass",
                    "mass must be positive",
                ));
            }
        }
        let momenta: Vec<f64> = (0..grid_size).map(|i| -half + i as f64 * step).collect();
        let mut amplitudes: Vec<Complex64> = momenta
            .iter()
            .map(|&a| Complex64::from_polar((-a * a * sigma_x * sigma_x).exp(), -a * x0))
            .collect();
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        let apparatus_energies = momenta
            .iter()
            .map(|&a| match apparatus {
                ApparatusModel::Static => 0.0,
                ApparatusModel::Free { mass } => 0.5 * a * a / mass,
            })
            .collect();
        Ok(PointerModel {
            x0,
            sigma_x,
            grid_span,
            momenta,
            amplitudes,
            apparatus,
            apparatus_energies,
        })
    }

    /// A degenerate single-point "grid", used to switch the coupling off.
    pub fn single(momentum: f64) -> Self {
        PointerModel {
            x0: 0.0,
            sigma_x: 1.0,
            grid_span: 0.0,
            momenta: vec![momentum],
            amplitudes: vec![Complex64::new(1.0, 0.0)],
            apparatus: ApparatusModel::Static,
            apparatus_energies: vec![0.0],
        }
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn sigma_p(&self) -> f64 {
        0.5 / self.sigma_x
    }

    pub fn grid_span(&self) -> f64 {
        self.grid_span
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn apparatus(&self) -> ApparatusModel {
        self.apparatus
    }

    pub fn apparatus_energies(&self) -> &[f64] {
        &self.apparatus_energies
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    fn step(&self) -> f64 {
        if self.momenta.len() < 2 {
            0.0
        } else {
            self.momenta[1] - self.momenta[0]
        }
    }

    /// Discrete `⟨P²⟩` of the initial packet.
    pub fn momentum_second_moment(&self) -> f64 {
        self.momenta
            .iter()
            .zip(&self.amplitudes)
            .map(|(a, z)| a * a * z.norm_sqr())
            .sum()
    }

    /// Position expectation from the momentum-space phase gradient,
    /// `⟨X⟩ = -∫ |ψ|² ∂θ/∂a da / ∫ |ψ|² da`, using unwrapped neighbour phase
    /// differences. `psi` need not be normalized.
    pub fn phase_gradient_position(&self, psi: &[Complex64]) -> f64 {
        let step = self.step();
        if psi.len() < 2 || step == 0.0 {
            return self.x0;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for w in psi.windows(2) {
            let link = w[0].conj() * w[1];
            let weight = link.norm();
            if weight == 0.0 {
                continue;
            }
            num -= weight * link.arg() / step;
            den += weight;
        }
        if den == 0.0 {
            f64::NAN
        } else {
            num / den
        }
    }

    /// Mean and variance of the position density obtained by discrete
    /// Fourier reassembly of `psi` over one period of the conjugate grid,
    /// centred on `x0`.
    pub fn position_moments(&self, psi: &[Complex64]) -> (f64, f64) {
        let step = self.step();
        if psi.len() < 2 || step == 0.0 {
            return (self.x0, 0.0);
        }
        let period = 2.0 * PI / step;
        let samples = 4 * psi.len();
        let dx = period / samples as f64;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for j in 0..samples {
            let x = self.x0 - 0.5 * period + (j as f64 + 0.5) * dx;
            let amp: Complex64 = psi
                .iter()
                .zip(&self.momenta)
                .map(|(z, a)| z * Complex64::from_polar(1.0, a * x))
                .sum();
            let rho = amp.norm_sqr();
            m0 += rho;
            m1 += rho * x;
            m2 += rho * x * x;
        }
        let mean = m1 / m0;
        (mean, m2 / m0 - mean * mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn transition_frequency_examples() {
        let q = SystemModel::qubit(1.0, [[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(q.transition_frequency(1, 0), 1.0);
        assert_eq!(q.transition_frequency(0, 0), 0.0);
        let s = SystemModel::from_real(vec![0.0, 1.0, 2.5], &[0.0; 9], 0).unwrap();
        assert_eq!(s.transition_frequency(2, 1), 1.5);
        assert_eq!(s.transition_frequency(1, 2), -1.5);
    }

    #[test]
    fn rejects_non_hermitian() {
        let o = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        let err = SystemModel::new(vec![0.0, 1.0], o, 0).unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "system.observable[0][1]"));
        let o = DMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(SystemModel::new(vec![0.0, 1.0], o, 0).is_err());
    }

    #[test]
    fn rejects_bad_shape_and_level() {
        let o = DMatrix::from_element(2, 3, c(0.0, 0.0));
        assert!(SystemModel::new(vec![0.0, 1.0], o, 0).is_err());
        assert!(SystemModel::from_real(vec![0.0, 1.0], &[0.0; 4], 2).is_err());
        assert!(SystemModel::from_real(vec![], &[], 0).is_err());
    }

    #[test]
    fn degenerate_spectrum_warns_but_builds() {
        let s = SystemModel::from_real(vec![0.0, 0.0, 1.0], &[0.0; 9], 0).unwrap();
        assert!(s.is_degenerate());
        assert_eq!(s.warnings().len(), 1);
    }

    #[test]
    fn complex_hermitian_observable() {
        let o = DMatrix::from_row_slice(2, 2, &[c(0.2, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(-0.2, 0.0)]);
        let s = SystemModel::new(vec![0.0, 1.0], o, 1).unwrap();
        assert_eq!(s.element(0, 1), c(0.0, -1.0));
        assert_abs_diff_eq!(s.observable_norm(), (1.0f64 + 0.04).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn pointer_normalized_and_centred() {
        let p = PointerModel::new(0.0, 1.0, 256, 8.0, ApparatusModel::Static).unwrap();
        let total: f64 = p.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        // momentum density is a centred Gaussian with σ_p = 1/2
        assert_abs_diff_eq!(p.momentum_second_moment(), 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(p.phase_gradient_position(p.amplitudes()), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pointer_position_follows_x0() {
        let p = PointerModel::new(3.0, 1.0, 128, 10.0, ApparatusModel::Static).unwrap();
        assert_abs_diff_eq!(p.phase_gradient_position(p.amplitudes()), 3.0, epsilon = 1e-9);
        let (mean, var) = p.position_moments(p.amplitudes());
        assert_abs_diff_eq!(mean, 3.0, epsilon = 1e-9);
        // ψ(a) ∝ exp(-a²σ_x²) gives |φ(x)|² ∝ exp(-(x-x0)²/2σ_x²)
        assert_abs_diff_eq!(var, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn pointer_validation() {
        assert!(PointerModel::new(0.0, 1.0, 8, 8.0, ApparatusModel::Static).is_err());
        assert!(PointerModel::new(0.0, 1.0, 64, 3.0, ApparatusModel::Static).is_err());
        // edge density exp(-2·2.5²) ≈ 4e-6 of peak
        assert!(PointerModel::new(0.0, 1.0, 64, 5.0, ApparatusModel::Static).is_err());
        assert!(PointerModel::new(0.0, -1.0, 64, 8.0, ApparatusModel::Static).is_err());
        assert!(PointerModel::new(0.0, 1.0, 64, 8.0, ApparatusModel::Free { mass: 0.0 }).is_err());
    }

    #[test]
    fn free_apparatus_energies() {
        let p = PointerModel::new(0.0, 1.0, 64, 8.0, ApparatusModel::Free { mass: 2.0 }).unwrap();
        let (a, e) = (p.momenta()[0], p.apparatus_energies()[0]);
        assert_abs_diff_eq!(e, a * a / 4.0);
    }

    #[test]
    fn protection_ratio() {
        let q = SystemModel::qubit(2.0, [[0.0, 0.5], [0.5, 0.0]]).unwrap();
        assert_abs_diff_eq!(q.protection_ratio(10.0), 40.0);
        let diag = SystemModel::qubit(2.0, [[1.0, 0.0], [0.0, -1.0]]).unwrap();
        assert!(diag.protection_ratio(1.0).is_infinite());
    }
}
