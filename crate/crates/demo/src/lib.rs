//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a flat `Float64Array`; the layout is documented on
//! each function.

use protmeas_core::oracle::{self, PropagateOptions};
use protmeas_core::perturbation;
use protmeas_core::{CouplingProfile, PointerModel, SystemModel};
use wasm_bindgen::prelude::*;

fn js(e: protmeas_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn profile(kind: &str, duration: f64) -> Result<CouplingProfile, protmeas_core::Error> {
    match kind {
        "trapezoid" => CouplingProfile::trapezoid(duration, 0.2),
        "triangle" => CouplingProfile::triangle(duration),
        "raised-cosine" => CouplingProfile::raised_cosine(duration),
        _ => CouplingProfile::boxcar(duration),
    }
}

fn qubit(omega: f64, diagonal: f64, off_diagonal: f64) -> Result<SystemModel, protmeas_core::Error> {
    SystemModel::qubit(omega, [[diagonal, off_diagonal], [off_diagonal, -diagonal]])
}

/// `|g̃(x)|²` on `points` values of `x = ωT` in `[0, x_max]`, as
/// `[x0, y0, x1, y1, ...]`.
#[wasm_bindgen]
pub fn transform_curve(kind: &str, x_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let p = profile(kind, 1.0).map_err(js)?;
    let n = points.max(2);
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let x = x_max * i as f64 / (n - 1) as f64;
        let g = p.fourier_transform(x).map_err(js)?;
        out.push(x);
        out.push(g * g);
    }
    Ok(out)
}

/// Exact against first-order disturbance of a qubit for durations spaced
/// evenly in `[t_min, t_max]`, as `[T0, exact0, predicted0, ...]`.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn disturbance_scan(
    kind: &str,
    omega: f64,
    diagonal: f64,
    off_diagonal: f64,
    a: f64,
    t_min: f64,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let s = qubit(omega, diagonal, off_diagonal).map_err(js)?;
    let n = points.max(2);
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        let t = t_min + (t_max - t_min) * i as f64 / (n - 1) as f64;
        let p = profile(kind, t).map_err(js)?;
        let c =
            oracle::disturbance_vs_prediction(&s, &p, a, PropagateOptions::default().tolerance(1e-8)).map_err(js)?;
        out.extend([t, c.exact, c.predicted]);
    }
    Ok(out)
}

/// Full pointer measurement of a qubit. Returns
/// `[shift, expected, density_shift, disturbance, purity, a_0, |φ_0|²|C_n|², ...]`.
#[wasm_bindgen]
pub fn pointer_run(
    kind: &str,
    duration: f64,
    omega: f64,
    diagonal: f64,
    off_diagonal: f64,
    grid: usize,
) -> Result<Vec<f64>, JsError> {
    let s = qubit(omega, diagonal, off_diagonal).map_err(js)?;
    let p = profile(kind, duration).map_err(js)?;
    let ptr = PointerModel::new(0.0, 1.0, grid, 8.0, Default::default()).map_err(js)?;
    let run = oracle::full_measurement_run(&s, &p, &ptr, PropagateOptions::default().tolerance(1e-8)).map_err(js)?;
    let expected = p.area() * s.element(0, 0).re;
    let mut out = vec![
        run.pointer_shift,
        expected,
        run.density_shift,
        run.disturbance,
        run.purity,
    ];
    for ((a, phi), c) in run.momenta.iter().zip(ptr.amplitudes()).zip(&run.amplitudes) {
        out.push(*a);
        out.push(phi.norm_sqr() * c[0].norm_sqr());
    }
    Ok(out)
}

/// First-order transition probability of a qubit, for a quick readout.
#[wasm_bindgen]
pub fn first_order_probability(
    kind: &str,
    duration: f64,
    omega: f64,
    diagonal: f64,
    off_diagonal: f64,
    a: f64,
) -> Result<f64, JsError> {
    let s = qubit(omega, diagonal, off_diagonal).map_err(js)?;
    let p = profile(kind, duration).map_err(js)?;
    Ok(a * a * perturbation::first_order_probability(&s, &p, 1).map_err(js)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_starts_at_one() {
        let c = transform_curve("triangle", 50.0, 11).unwrap();
        assert_eq!(c.len(), 22);
        assert!((c[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pointer_shift_is_near_expected() {
        let r = pointer_run("raised-cosine", 60.0, 1.0, 0.6, 0.8, 16).unwrap();
        assert!((r[0] - r[1]).abs() < 1e-2);
        assert_eq!(r.len(), 5 + 2 * 16);
    }

    #[test]
    fn disturbance_matches_first_order_at_small_coupling() {
        let r = disturbance_scan("boxcar", 1.0, 0.6, 0.8, 0.01, 10.0, 20.0, 3).unwrap();
        for row in r.chunks(3) {
            assert!((row[1] - row[2]).abs() <= 0.05 * row[2] + 1e-12, "{row:?}");
        }
    }
}
