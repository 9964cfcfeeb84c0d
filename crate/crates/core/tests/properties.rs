use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use protmeas_core::oracle::{self, PropagateOptions};
use protmeas_core::perturbation::{self, DysonRequest};
use protmeas_core::{CouplingProfile, Error, PointerModel, SystemModel};

fn hermitian(d: usize, entries: &[(f64, f64)]) -> DMatrix<Complex64> {
    let mut o = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    let mut it = entries.iter();
    for i in 0..d {
        for j in i..d {
            let &(re, im) = it.next().unwrap();
            if i == j {
                o[(i, i)] = Complex64::new(re, 0.0);
            } else {
                o[(i, j)] = Complex64::new(re, im);
                o[(j, i)] = Complex64::new(re, -im);
            }
        }
    }
    o
}

prop_compose! {
    fn system(max_d: usize)(d in 2..=max_d)(
        gaps in prop::collection::vec(0.3..2.0f64, d - 1),
        entries in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * (d + 1) / 2),
        n in 0..d,
    ) -> SystemModel {
        let d = gaps.len() + 1;
        let mut energies = vec![0.0];
        for g in &gaps {
            energies.push(energies.last().unwrap() + g);
        }
        SystemModel::new(energies, hermitian(d, &entries), n).unwrap()
    }
}

fn profile(index: usize, t: f64) -> CouplingProfile {
    match index {
        0 => CouplingProfile::boxcar(t),
        1 => CouplingProfile::triangle(t),
        2 => CouplingProfile::raised_cosine(t),
        _ => CouplingProfile::trapezoid(t, 0.25),
    }
    .unwrap()
}

fn norm(c: &[Complex64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stored_observable_is_hermitian(s in system(5)) {
        let o = s.observable();
        for i in 0..s.dimension() {
            for j in 0..s.dimension() {
                prop_assert_eq!(o[(i, j)], o[(j, i)].conj());
            }
        }
    }

    #[test]
    fn analytic_and_numeric_transforms_agree(kind in 0usize..4, t in 0.5..20.0f64, x in 0.0..60.0f64) {
        let p = profile(kind, t);
        let w = x / t;
        let a = p.fourier_transform(w).unwrap();
        let b = p.numeric_fourier_transform(w).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{} {} {}", p.name(), a, b);
    }

    #[test]
    fn first_dyson_order_matches_first_order(s in system(4), kind in 0usize..4, t in 1.0..15.0f64) {
        let p = profile(kind, t);
        let table = perturbation::dyson_table(&DysonRequest::new(&s, &p, 1)).unwrap();
        for m in 0..s.dimension() {
            let direct = perturbation::first_order_amplitude(&s, &p, m).unwrap();
            prop_assert!((table.amplitude(1, m) - direct).norm() < 1e-8);
        }
    }

    #[test]
    fn propagation_is_unitary(s in system(4), kind in 0usize..4, a in -2.0..2.0f64) {
        let p = profile(kind, 8.0);
        let r = oracle::propagate(&s, &p, a, PropagateOptions::default().tolerance(1e-7)).unwrap();
        prop_assert!((norm(&r.amplitudes) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dyson_error_is_within_truncation_bound(s in system(3), a in -0.5..0.5f64) {
        let p = CouplingProfile::raised_cosine(6.0).unwrap();
        let table = perturbation::dyson_table(&DysonRequest::new(&s, &p, 4)).unwrap();
        let exact = oracle::propagate(&s, &p, a, PropagateOptions::default()).unwrap();
        let err: f64 = table
            .assemble(a)
            .iter()
            .zip(&exact.amplitudes)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        prop_assert!(err <= table.truncation_bound(a) + 1e-8, "{} > {}", err, table.truncation_bound(a));
    }

    #[test]
    fn pointer_recovers_its_centre(x0 in -1.5..1.5f64, sigma in 0.7..1.5f64) {
        let p = PointerModel::new(x0, sigma, 64, 10.0 / sigma, Default::default()).unwrap();
        prop_assert!((p.phase_gradient_position(p.amplitudes()) - x0).abs() < 1e-9);
        let (mean, var) = p.position_moments(p.amplitudes());
        prop_assert!((mean - x0).abs() < 1e-6);
        prop_assert!((var - sigma * sigma).abs() < 1e-6);
    }
}

#[test]
fn diagonal_observable_only_picks_up_a_phase() {
    let o = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::new(0.4, 0.0),
        Complex64::new(-1.1, 0.0),
        Complex64::new(0.7, 0.0),
    ]));
    let s = SystemModel::new(vec![0.0, 1.0, 2.5], o, 1).unwrap();
    let p = CouplingProfile::triangle(7.0).unwrap();
    let a = 0.9;
    let r = oracle::propagate(&s, &p, a, PropagateOptions::default()).unwrap();
    let expected = Complex64::from_polar(1.0, 1.1 * a * p.area());
    assert!((r.amplitudes[1] - expected).norm() < 1e-9, "{:?}", r.amplitudes);
    assert!(r.amplitudes[0].norm() < 1e-12 && r.amplitudes[2].norm() < 1e-12);
}

#[test]
fn step_doubling_converges_at_second_order() {
    let s = SystemModel::qubit(1.3, [[0.2, 0.7], [0.7, -0.4]]).unwrap();
    let p = CouplingProfile::raised_cosine(10.0).unwrap();
    let reference = oracle::propagate(&s, &p, 1.0, PropagateOptions::default().tolerance(1e-10)).unwrap();
    // Tolerance 1 accepts the first doubling, so `steps(n / 2)` returns the n-step result.
    let err = |n: usize| {
        let r = oracle::propagate(&s, &p, 1.0, PropagateOptions::default().steps(n / 2).tolerance(1.0)).unwrap();
        assert_eq!(r.steps, n);
        r.amplitudes
            .iter()
            .zip(&reference.amplitudes)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    };
    let ratio = err(128) / err(256);
    assert!(ratio > 3.5, "ratio {ratio}");
}

#[test]
fn constant_coupling_matches_stepping() {
    let s = SystemModel::from_real(vec![0.0, 0.6, 1.7], &[0.3, 0.5, 0.1, 0.5, -0.2, 0.4, 0.1, 0.4, 0.9], 0).unwrap();
    let p = CouplingProfile::boxcar(12.0).unwrap();
    let exact = oracle::constant_coupling_diagonalization(&s, &p, 1.4).unwrap();
    let stepped = oracle::propagate(&s, &p, 1.4, PropagateOptions::default().steps(64)).unwrap();
    for (x, y) in exact.amplitudes.iter().zip(&stepped.amplitudes) {
        assert!((x - y).norm() < 1e-11);
    }
}

#[test]
fn full_run_is_deterministic() {
    let s = SystemModel::qubit(1.0, [[0.6, 0.8], [0.8, -0.6]]).unwrap();
    let p = CouplingProfile::raised_cosine(20.0).unwrap();
    let ptr = PointerModel::new(0.0, 1.0, 32, 8.0, Default::default()).unwrap();
    let a = oracle::full_measurement_run(&s, &p, &ptr, PropagateOptions::default()).unwrap();
    let b = oracle::full_measurement_run(&s, &p, &ptr, PropagateOptions::default()).unwrap();
    assert_eq!(a.amplitudes, b.amplitudes);
    assert_eq!(a.pointer_shift.to_bits(), b.pointer_shift.to_bits());
    assert!((a.purity - 1.0).abs() < 1e-2 && a.purity <= 1.0 + 1e-12);
}

#[test]
fn grid_point_failures_name_the_momentum() {
    let s = SystemModel::qubit(1.0, [[0.6, 0.8], [0.8, -0.6]]).unwrap();
    let p = CouplingProfile::triangle(50.0).unwrap();
    let ptr = PointerModel::new(0.0, 1.0, 16, 8.0, Default::default()).unwrap();
    let opts = PropagateOptions {
        steps: Some(64),
        tolerance: 1e-15,
        max_doublings: 1,
    };
    match oracle::full_measurement_run(&s, &p, &ptr, opts) {
        Err(Error::GridPoint { momentum, source, .. }) => {
            assert!(momentum.is_finite());
            assert!(matches!(*source, Error::NotConverged { .. }));
        }
        other => panic!("expected a grid point failure, got {other:?}"),
    }
}

/// Monte Carlo estimate of the time-ordered simplex integral: sample `ℓ`
/// uniform times in the window, weight by the product of couplings, divide
/// by `ℓ!` for the ordering.
#[test]
fn nested_integral_matches_monte_carlo() {
    use rand::{Rng, SeedableRng};
    let p = CouplingProfile::trapezoid(3.0, 0.2).unwrap();
    let ell = 5;
    let exact = perturbation::nested_integral_identity(&p, ell).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let (lo, hi) = p.support();
    let samples = 200_000;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let w: f64 = (0..ell).map(|_| p.eval(rng.random_range(lo..hi))).product();
        sum += w;
        sum2 += w * w;
    }
    let volume = (hi - lo).powi(ell as i32) / 120.0;
    let mean = sum / samples as f64;
    let sigma = ((sum2 / samples as f64 - mean * mean) / samples as f64).sqrt();
    let estimate = mean * volume;
    assert!((estimate - exact).abs() < 5.0 * sigma * volume, "{estimate} vs {exact}");
    assert!((exact - p.area().powi(5) / 120.0).abs() < 1e-12);
}

#[test]
fn rabi_flop_at_resonance_free_limit() {
    // Degenerate levels with O = σx: probability sin²(aG).
    let s = SystemModel::from_real(vec![0.0, 0.0], &[0.0, 1.0, 1.0, 0.0], 0).unwrap();
    let p = CouplingProfile::boxcar(2.0).unwrap();
    let a = PI / 6.0;
    let r = oracle::propagate(&s, &p, a, PropagateOptions::default()).unwrap();
    assert!((r.amplitudes[1].norm_sqr() - (a).sin().powi(2)).abs() < 1e-12);
}
