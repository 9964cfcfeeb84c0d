//! Brute-force evolution of the system for fixed pointer momentum, and of the
//! full system–pointer state over a momentum grid.
//!
//! Amplitudes are reported in the interaction picture,
//! `C_m = e^{i(E_m + E_n)T/2} ⟨m|U(T/2, -T/2)|n⟩`, so they compare directly
//! with [`crate::perturbation::AmplitudeTable`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perturbation::{self, DysonRequest};
use crate::profiles::{CouplingProfile, ProfileKind};
use crate::system::{PointerModel, SystemModel};

/// Fewest time steps accepted by [`propagate`].
pub const MIN_STEPS: usize = 64;

/// Step control for [`propagate`].
#[derive(Clone, Copy, Debug)]
pub struct PropagateOptions {
    /// Initial step count; `None` picks one from the fastest Bohr frequency.
    pub steps: Option<usize>,
    /// Largest accepted `|C(N) - C(2N)|`.
    pub tolerance: f64,
    /// How many times the step count may double.
    pub max_doublings: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions {
            steps: None,
            tolerance: 1e-9,
            max_doublings: 8,
        }
    }
}

impl PropagateOptions {
    pub fn steps(mut self, steps: usize) -> Self {
        self.steps = Some(steps);
        self
    }

    pub fn tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// `max(256, ⌈40 T ω_max / 2π⌉)`: forty steps per fastest Bohr period.
pub fn default_steps(system: &SystemModel, duration: f64) -> usize {
    let per_period = (40.0 * duration * system.max_frequency() / (2.0 * PI)).ceil();
    (per_period as usize).max(256)
}

/// Final interaction-picture amplitudes of one propagation.
#[derive(Clone, Debug)]
pub struct Propagation {
    pub amplitudes: Vec<Complex64>,
    /// Steps used for the returned (finer) result.
    pub steps: usize,
    /// `|C(steps/2) - C(steps)|`.
    pub convergence: f64,
}

/// `exp(-i H dt)` for a Hermitian 2x2 `H`, row-major.
///
/// Writing `H = h0 + h·σ`, `exp(-iH dt) = e^{-ih0 dt}(cos θ - i sin θ h·σ/|h|)`
/// with `θ = |h| dt`.
fn unitary_step_2x2(h: [[Complex64; 2]; 2], dt: f64) -> [[Complex64; 2]; 2] {
    let h0 = 0.5 * (h[0][0].re + h[1][1].re);
    let hz = 0.5 * (h[0][0].re - h[1][1].re);
    let off = h[0][1];
    let norm = (hz * hz + off.norm_sqr()).sqrt();
    let theta = norm * dt;
    let global = Complex64::from_polar(1.0, -h0 * dt);
    let c = Complex64::new(theta.cos(), 0.0);
    // sin θ / |h|, finite as |h| → 0
    let s = if norm > 0.0 { theta.sin() / norm } else { dt };
    let mi = Complex64::new(0.0, -s);
    [
        [global * (c + mi * hz), global * mi * off],
        [global * mi * off.conj(), global * (c - mi * hz)],
    ]
}

/// `exp(-i H dt)` for Hermitian `H`.
fn unitary_step(h: &DMatrix<Complex64>, dt: f64) -> DMatrix<Complex64> {
    if h.nrows() == 1 {
        return DMatrix::from_element(1, 1, Complex64::from_polar(1.0, -h[(0, 0)].re * dt));
    }
    if h.nrows() == 2 {
        let u = unitary_step_2x2([[h[(0, 0)], h[(0, 1)]], [h[(1, 0)], h[(1, 1)]]], dt);
        return DMatrix::from_row_slice(2, 2, &[u[0][0], u[0][1], u[1][0], u[1][1]]);
    }
    let eig = SymmetricEigen::new(h.clone());
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        h.nrows(),
        eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * dt)),
    ));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// `H_S - E_n + c O`: energies are measured from the initial level.
fn relative_hamiltonian(system: &SystemModel, coupling: f64) -> DMatrix<Complex64> {
    let mut h = system.hamiltonian(coupling);
    let en = system.energies()[system.initial_level()];
    for i in 0..system.dimension() {
        h[(i, i)] -= Complex64::new(en, 0.0);
    }
    h
}

fn to_interaction_picture(system: &SystemModel, duration: f64, psi: &DVector<Complex64>) -> Vec<Complex64> {
    let n = system.initial_level();
    psi.iter()
        .enumerate()
        .map(|(m, z)| z * Complex64::from_polar(1.0, 0.5 * system.transition_frequency(m, n) * duration))
        .collect()
}

fn propagate_fixed(system: &SystemModel, profile: &CouplingProfile, a: f64, steps: usize) -> Vec<Complex64> {
    let d = system.dimension();
    let (lo, hi) = profile.support();
    let dt = (hi - lo) / steps as f64;
    let midpoint = |s: usize| a * profile.eval(lo + (s as f64 + 0.5) * dt);
    let mut psi = DVector::from_element(d, Complex64::new(0.0, 0.0));
    psi[system.initial_level()] = Complex64::new(1.0, 0.0);
    if d == 2 {
        let h0 = relative_hamiltonian(system, 0.0);
        let o = system.observable();
        let mut v = [psi[0], psi[1]];
        let mut cached: Option<(f64, [[Complex64; 2]; 2])> = None;
        for s in 0..steps {
            let c = midpoint(s);
            let u = match cached {
                Some((prev, u)) if prev == c => u,
                _ => {
                    let h = [
                        [h0[(0, 0)] + o[(0, 0)] * c, o[(0, 1)] * c],
                        [o[(1, 0)] * c, h0[(1, 1)] + o[(1, 1)] * c],
                    ];
                    let u = unitary_step_2x2(h, dt);
                    cached = Some((c, u));
                    u
                }
            };
            v = [u[0][0] * v[0] + u[0][1] * v[1], u[1][0] * v[0] + u[1][1] * v[1]];
        }
        psi[0] = v[0];
        psi[1] = v[1];
    } else {
        let mut cached: Option<(f64, DMatrix<Complex64>)> = None;
        for s in 0..steps {
            let c = midpoint(s);
            if !matches!(&cached, Some((prev, _)) if *prev == c) {
                cached = Some((c, unitary_step(&relative_hamiltonian(system, c), dt)));
            }
            psi = &cached.as_ref().unwrap().1 * psi;
        }
    }
    to_interaction_picture(system, profile.duration(), &psi)
}

fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Evolves `|n⟩` under `H_S + a g(t) O` with midpoint exponential steps,
/// doubling the step count until two successive results agree.
pub fn propagate(
    system: &SystemModel,
    profile: &CouplingProfile,
    a: f64,
    options: PropagateOptions,
) -> Result<Propagation> {
    let mut steps = options
        .steps
        .unwrap_or_else(|| default_steps(system, profile.duration()));
    if steps < MIN_STEPS {
        return Err(Error::validation(
            "oracle.steps",
            format!("need at least {MIN_STEPS} steps, got {steps}"),
        ));
    }
    if !a.is_finite() {
        return Err(Error::validation("oracle.a", "momentum must be finite"));
    }
    let mut coarse = propagate_fixed(system, profile, a, steps);
    let mut difference = f64::INFINITY;
    for _ in 0..=options.max_doublings {
        steps *= 2;
        let fine = propagate_fixed(system, profile, a, steps);
        difference = distance(&coarse, &fine);
        if difference <= options.tolerance {
            return Ok(Propagation {
                amplitudes: fine,
                steps,
                convergence: difference,
            });
        }
        coarse = fine;
    }
    let fine = propagate_fixed(system, profile, a, steps * 2);
    Err(Error::NotConverged {
        steps: steps * 2,
        difference,
        tolerance: options.tolerance,
        coarse,
        fine,
    })
}

/// Exact final state for constant coupling together with the dressed
/// energies `Ẽ_m`, the eigenvalues of `H_S + (aG/T) O` in ascending order.
#[derive(Clone, Debug)]
pub struct Diagonalization {
    pub amplitudes: Vec<Complex64>,
    pub dressed_energies: Vec<f64>,
}

pub fn constant_coupling_diagonalization(
    system: &SystemModel,
    profile: &CouplingProfile,
    a: f64,
) -> Result<Diagonalization> {
    if !matches!(profile.kind(), ProfileKind::Boxcar) {
        return Err(Error::UnsupportedProfile(profile.name()));
    }
    let t = profile.duration();
    let coupling = a * profile.area() / t;
    let eig = SymmetricEigen::new(relative_hamiltonian(system, coupling));
    let n = system.initial_level();
    let v = &eig.eigenvectors;
    let d = system.dimension();
    // ψ = V e^{-iΛT} V† e_n
    let mut psi = DVector::from_element(d, Complex64::new(0.0, 0.0));
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let w = v[(n, j)].conj() * Complex64::from_polar(1.0, -l * t);
        for m in 0..d {
            psi[m] += v[(m, j)] * w;
        }
    }
    let en = system.energies()[n];
    let mut dressed: Vec<f64> = eig.eigenvalues.iter().map(|l| l + en).collect();
    dressed.sort_by(f64::total_cmp);
    Ok(Diagonalization {
        amplitudes: to_interaction_picture(system, t, &psi),
        dressed_energies: dressed,
    })
}

/// Outcome of [`full_measurement_run`].
#[derive(Clone, Debug, Serialize)]
pub struct EvolutionResult {
    pub momenta: Vec<f64>,
    /// Interaction-picture system amplitudes per grid point.
    pub amplitudes: Vec<Vec<Complex64>>,
    /// `Σ_i |φ_i|² |C^(i)_n|²`.
    pub survival: f64,
    pub disturbance: f64,
    /// Phase-gradient `⟨X⟩ - x0` of the survival-channel pointer packet.
    pub pointer_shift: f64,
    /// Density-mean `⟨X⟩ - x0` of the same packet.
    pub density_shift: f64,
    /// `|pointer_shift - density_shift|`.
    pub distortion: f64,
    /// Position variance of the survival-channel packet.
    pub pointer_variance: f64,
    /// `Tr ρ_S²` of the reduced system state.
    pub purity: f64,
    /// Largest step count used at any grid point.
    pub steps: usize,
    /// Largest step-doubling difference at any grid point.
    pub convergence: f64,
}

/// Evolves every momentum component of the pointer packet and reads out the
/// pointer and the system.
pub fn full_measurement_run(
    system: &SystemModel,
    profile: &CouplingProfile,
    pointer: &PointerModel,
    options: PropagateOptions,
) -> Result<EvolutionResult> {
    let results = crate::par::map(pointer.momenta(), |&a| propagate(system, profile, a, options));
    let mut runs = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        runs.push(r.map_err(|e| Error::GridPoint {
            index,
            momentum: pointer.momenta()[index],
            source: Box::new(e),
        })?);
    }
    let n = system.initial_level();
    let d = system.dimension();
    let t = profile.duration();
    let weights: Vec<f64> = pointer.amplitudes().iter().map(|z| z.norm_sqr()).collect();

    let survival: f64 = runs
        .iter()
        .zip(&weights)
        .map(|(r, w)| w * r.amplitudes[n].norm_sqr())
        .sum();
    let channel: Vec<Complex64> = runs
        .iter()
        .zip(pointer.amplitudes())
        .zip(pointer.apparatus_energies())
        .map(|((r, phi), eps)| phi * Complex64::from_polar(1.0, -eps * t) * r.amplitudes[n])
        .collect();
    let x0 = pointer.x0();
    let gradient = pointer.phase_gradient_position(&channel) - x0;
    let (mean, variance) = pointer.position_moments(&channel);
    let density_shift = mean - x0;

    let mut rho = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    for (r, w) in runs.iter().zip(&weights) {
        for i in 0..d {
            for j in 0..d {
                rho[(i, j)] += r.amplitudes[i] * r.amplitudes[j].conj() * *w;
            }
        }
    }
    let purity = (&rho * &rho).trace().re;

    Ok(EvolutionResult {
        momenta: pointer.momenta().to_vec(),
        survival,
        disturbance: (1.0 - survival).clamp(0.0, 1.0),
        pointer_shift: gradient,
        density_shift,
        distortion: (gradient - density_shift).abs(),
        pointer_variance: variance,
        purity,
        steps: runs.iter().map(|r| r.steps).max().unwrap_or(0),
        convergence: runs.iter().map(|r| r.convergence).fold(0.0, f64::max),
        amplitudes: runs.into_iter().map(|r| r.amplitudes).collect(),
    })
}

/// Exact disturbance against the first-order prediction at momentum `a`.
#[derive(Clone, Debug, Serialize)]
pub struct DisturbanceComparison {
    pub exact: f64,
    /// `a² Σ_{m≠n} |O_mn|² |g̃(ω_mn)|²`.
    pub predicted: f64,
    /// `exact / predicted`, absent when the prediction vanishes.
    pub ratio: Option<f64>,
    /// `|a| max_{m≠n} |O_mn| |g̃(ω_mn)|`; first order is trustworthy when small.
    pub regime: f64,
    pub perturbative: bool,
    /// `Σ_{m≠n} |C_m|²` from the Dyson series truncated at fourth order.
    pub dyson_order4: f64,
}

/// Regime parameter above which the comparison is flagged non-perturbative.
pub const REGIME_LIMIT: f64 = 0.1;

pub fn disturbance_vs_prediction(
    system: &SystemModel,
    profile: &CouplingProfile,
    a: f64,
    options: PropagateOptions,
) -> Result<DisturbanceComparison> {
    let n = system.initial_level();
    let exact_run = propagate(system, profile, a, options)?;
    let exact = (1.0 - exact_run.amplitudes[n].norm_sqr()).clamp(0.0, 1.0);
    let mut predicted = 0.0;
    let mut regime: f64 = 0.0;
    for m in (0..system.dimension()).filter(|&m| m != n) {
        let p = perturbation::first_order_probability(system, profile, m)?;
        predicted += a * a * p;
        regime = regime.max(a.abs() * p.sqrt());
    }
    let ratio = (predicted > f64::MIN_POSITIVE).then(|| exact / predicted);
    let table = perturbation::dyson_table(&DysonRequest::new(system, profile, 4).momentum(a).tolerance(1e-12))?;
    let dyson_order4 = table
        .total()
        .iter()
        .enumerate()
        .filter(|(m, _)| *m != n)
        .map(|(_, c)| c.norm_sqr())
        .sum();
    Ok(DisturbanceComparison {
        exact,
        predicted,
        ratio,
        regime,
        perturbative: regime < REGIME_LIMIT,
        dyson_order4,
    })
}
