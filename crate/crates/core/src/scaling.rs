//! Envelope exponents, FWHM and the profile-comparison reports.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{self, PropagateOptions};
use crate::output::{fmt12, Table};
use crate::perturbation;
use crate::profiles::{CouplingProfile, ProfileKind};
use crate::system::{PointerModel, SystemModel};

/// Default lower end of the envelope fit window.
pub const DEFAULT_X_MIN: f64 = 20.0 * PI;
/// Default upper end of scans used for fitting.
pub const DEFAULT_X_MAX: f64 = 400.0 * PI;
/// Largest x accepted by [`probability_scan`].
pub const X_LIMIT: f64 = 1e4;
pub const MIN_POINTS: usize = 50;
pub const MIN_ANTINODES: usize = 8;
/// Fits starting below this sit on the central peak.
pub const PEAK_GUARD: f64 = 4.0 * PI;
/// Standard errors above this are flagged in [`table1_report`].
pub const STDERR_LIMIT: f64 = 0.01;

/// Sampled `|O_mn|² |g̃(x)|²` against `x = ω_mn T`.
#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub profile: String,
    pub weight: f64,
    /// Uniform grid merged with the antinodes, sorted by `x`.
    pub samples: Vec<(f64, f64)>,
    /// Antinode samples used for envelope fits.
    pub envelope: Vec<(f64, f64)>,
    /// Fit over antinodes with `x ≥ 20π`, when there are enough of them.
    pub fit: Option<EnvelopeFit>,
    pub fwhm: f64,
}

/// Power-law fit `y ∝ x^{-β}`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct EnvelopeFit {
    pub beta: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Envelope sample positions in `[lo, hi]`, or `None` for shapes without
/// closed-form antinodes.
pub fn antinodes(kind: &ProfileKind, lo: f64, hi: f64) -> Option<Vec<f64>> {
    let (period, offset) = match kind {
        ProfileKind::Boxcar | ProfileKind::RaisedCosine => (2.0 * PI, PI),
        ProfileKind::Triangle => (4.0 * PI, 2.0 * PI),
        _ => return None,
    };
    let first = ((lo - offset) / period).ceil().max(0.0) as usize;
    Some(
        (first..)
            .map(|k| offset + k as f64 * period)
            .take_while(|&x| x <= hi)
            .collect(),
    )
}

/// Samples `weight · |g̃(x)|²` on `points` evenly spaced `x` in `range` plus
/// every antinode inside it.
pub fn probability_scan(kind: &ProfileKind, weight: f64, range: (f64, f64), points: usize) -> Result<ScanResult> {
    let (lo, hi) = range;
    if !(lo >= 0.0 && hi <= X_LIMIT && lo < hi) {
        return Err(Error::validation(
            "scan.range",
            format!("range [{lo}, {hi}] must satisfy 0 <= lo < hi <= {X_LIMIT}"),
        ));
    }
    if points < MIN_POINTS {
        return Err(Error::validation(
            "scan.points",
            format!("need at least {MIN_POINTS} points, got {points}"),
        ));
    }
    kind.transform(0.0)?;
    let probability = |x: &f64| -> f64 {
        let g = kind.transform(*x).expect("analytic kind checked above");
        weight * g * g
    };
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let nodes = antinodes(kind, lo, hi).unwrap_or_default();
    let mut xs = grid.clone();
    xs.extend(&nodes);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let ys = crate::par::map(&xs, probability);
    let samples: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    let envelope: Vec<(f64, f64)> = nodes.iter().map(|x| (*x, probability(x))).collect();
    let mut scan = ScanResult {
        profile: kind.name().to_string(),
        weight,
        samples,
        envelope,
        fit: None,
        fwhm: fwhm(kind)?,
    };
    scan.fit = fit_envelope_exponent(&scan, DEFAULT_X_MIN).ok();
    Ok(scan)
}

/// Least-squares slope of `ln y` against `ln x` over antinodes with
/// `x ≥ x_min`, returned as `β = -slope` with its standard error.
pub fn fit_envelope_exponent(scan: &ScanResult, x_min: f64) -> Result<EnvelopeFit> {
    let pts: Vec<(f64, f64)> = scan
        .envelope
        .iter()
        .filter(|(x, y)| *x >= x_min && *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < MIN_ANTINODES {
        return Err(Error::InsufficientData {
            found: pts.len(),
            needed: MIN_ANTINODES,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(EnvelopeFit {
        beta: -slope,
        stderr,
        samples: pts.len(),
    })
}

/// Number of bisection steps taken by [`fwhm`] for a unit bracket.
pub const FWHM_ITERATIONS: usize = 40;

/// Full width at half maximum of `|g̃(x)|²`: twice the first `x > 0` where
/// it falls to 1/2, bracketed by unit steps and bisected to 1e-6.
pub fn fwhm(kind: &ProfileKind) -> Result<f64> {
    let f = |x: f64| -> Result<f64> {
        let g = kind.transform(x)?;
        Ok(g * g - 0.5)
    };
    f(0.0)?;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi)? > 0.0 {
        lo = hi;
        hi += 1.0;
        if hi > X_LIMIT {
            return Err(Error::Domain(format!("{} never falls to half maximum", kind.name())));
        }
    }
    for _ in 0..FWHM_ITERATIONS {
        if hi - lo <= 1e-6 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + hi)
}

/// Reference exponent, FWHM and tolerances for one built-in profile.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Reference {
    pub beta: f64,
    pub beta_tolerance: f64,
    pub fwhm: f64,
    pub fwhm_tolerance: f64,
}

pub fn reference(kind: &ProfileKind) -> Option<Reference> {
    let (beta, beta_tolerance, fwhm) = match kind {
        ProfileKind::Boxcar => (2.0, 0.05, 5.56),
        ProfileKind::Triangle => (4.0, 0.10, 8.00),
        ProfileKind::RaisedCosine => (6.0, 0.15, 9.06),
        _ => return None,
    };
    Some(Reference {
        beta,
        beta_tolerance,
        fwhm,
        fwhm_tolerance: 0.02,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Row {
    pub profile: String,
    pub fit: Option<EnvelopeFit>,
    pub fwhm: Option<f64>,
    pub reference: Option<Reference>,
    pub beta_pass: bool,
    pub fwhm_pass: bool,
    pub flags: Vec<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Report {
    pub x_min: f64,
    pub x_max: f64,
    pub rows: Vec<Table1Row>,
}

impl Table1Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.beta_pass && r.fwhm_pass)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "profile", "beta", "stderr", "beta_ref", "fwhm", "fwhm_ref", "status", "flags",
        ]);
        let opt = |x: Option<f64>| x.map(fmt12).unwrap_or_else(|| "-".into());
        for r in &self.rows {
            let status = if r.error.is_some() {
                "error"
            } else if r.beta_pass && r.fwhm_pass {
                "pass"
            } else {
                "fail"
            };
            let mut flags = r.flags.join("; ");
            if let Some(e) = &r.error {
                flags = if flags.is_empty() {
                    e.clone()
                } else {
                    format!("{flags}; {e}")
                };
            }
            t.push(vec![
                r.profile.clone(),
                opt(r.fit.map(|f| f.beta)),
                opt(r.fit.map(|f| f.stderr)),
                opt(r.reference.map(|f| f.beta)),
                opt(r.fwhm),
                opt(r.reference.map(|f| f.fwhm)),
                status.into(),
                flags,
            ]);
        }
        t
    }
}

/// Fits β and computes the FWHM for each profile, checking both against the
/// reference values. Failures are recorded per row.
pub fn table1_report(kinds: &[ProfileKind], x_min: f64, x_max: f64) -> Result<Table1Report> {
    if kinds.is_empty() {
        return Err(Error::validation("table1.profiles", "at least one profile is required"));
    }
    if !(x_min > 0.0 && x_min < x_max) {
        return Err(Error::validation(
            "table1.x_min",
            format!("need 0 < x_min < x_max, got x_min = {x_min}, x_max = {x_max}"),
        ));
    }
    let rows = crate::par::map(kinds, |kind| table1_row(kind, x_min, x_max));
    Ok(Table1Report { x_min, x_max, rows })
}

fn table1_row(kind: &ProfileKind, x_min: f64, x_max: f64) -> Table1Row {
    let mut row = Table1Row {
        profile: kind.name().to_string(),
        fit: None,
        fwhm: None,
        reference: reference(kind),
        beta_pass: false,
        fwhm_pass: false,
        flags: Vec::new(),
        error: None,
    };
    if x_min < PEAK_GUARD {
        row.flags
            .push(format!("x_min below {} samples the central peak", fmt12(PEAK_GUARD)));
    }
    let outcome = (|| -> Result<()> {
        let scan = probability_scan(kind, 1.0, (0.0, x_max), 2000)?;
        let fit = fit_envelope_exponent(&scan, x_min)?;
        row.fit = Some(fit);
        row.fwhm = Some(scan.fwhm);
        if fit.stderr > STDERR_LIMIT {
            row.flags
                .push(format!("stderr {} exceeds {}", fmt12(fit.stderr), fmt12(STDERR_LIMIT)));
        }
        let reference = row
            .reference
            .ok_or_else(|| Error::Domain(format!("no reference values for `{}`", kind.name())))?;
        row.beta_pass = (fit.beta - reference.beta).abs() <= reference.beta_tolerance;
        row.fwhm_pass = (scan.fwhm - reference.fwhm).abs() <= reference.fwhm_tolerance;
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row
}

/// Shift readouts of one profile in [`pointer_comparison`].
#[derive(Clone, Debug, Serialize)]
pub struct PointerRow {
    pub profile: String,
    pub area: f64,
    pub expected: f64,
    pub shift: f64,
    pub density_shift: f64,
    pub distortion: f64,
    pub disturbance: f64,
    pub purity: f64,
    pub within_band: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointerReport {
    pub duration: f64,
    /// `σ_p² |Σ second-order terms|` for a boxcar of the same duration.
    pub band: f64,
    /// Largest difference between the area-normalized shifts.
    pub spread: f64,
    pub agree: bool,
    pub rows: Vec<PointerRow>,
}

impl PointerReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "profile",
            "area",
            "expected",
            "shift",
            "density_shift",
            "distortion",
            "disturbance",
            "purity",
            "within_band",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.profile.clone(),
                fmt12(r.area),
                fmt12(r.expected),
                fmt12(r.shift),
                fmt12(r.density_shift),
                fmt12(r.distortion),
                fmt12(r.disturbance),
                fmt12(r.purity),
                r.within_band.to_string(),
            ]);
        }
        t
    }
}

/// Second-order correction band for pointer shifts at duration `T`: the
/// boxcar second-order return amplitude per unit `a²`, times `σ_p²`.
pub fn shift_band(system: &SystemModel, duration: f64, sigma_p: f64) -> Result<f64> {
    let boxcar = CouplingProfile::boxcar(duration)?;
    let b = perturbation::second_order_breakdown(system, &boxcar, 1.0)?;
    Ok(sigma_p * sigma_p * b.sum().norm())
}

/// Runs the full measurement for each profile and compares the shifts with
/// `G ⟨n|O|n⟩` and with each other.
pub fn pointer_comparison(
    system: &SystemModel,
    profiles: &[CouplingProfile],
    pointer: &PointerModel,
    options: PropagateOptions,
) -> Result<PointerReport> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::validation("pointer.profiles", "at least one profile is required"))?;
    let duration = first.duration();
    let band = shift_band(system, duration, pointer.sigma_p())?;
    let n = system.initial_level();
    let onn = system.element(n, n).re;
    let mut rows = Vec::with_capacity(profiles.len());
    for p in profiles {
        let run = oracle::full_measurement_run(system, p, pointer, options)?;
        let expected = p.area() * onn;
        rows.push(PointerRow {
            profile: p.name().to_string(),
            area: p.area(),
            expected,
            shift: run.pointer_shift,
            density_shift: run.density_shift,
            distortion: run.distortion,
            disturbance: run.disturbance,
            purity: run.purity,
            within_band: (run.pointer_shift - expected).abs() <= band * p.area() * p.area(),
        });
    }
    let normalized: Vec<f64> = rows.iter().map(|r| r.shift / r.area).collect();
    let spread = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - normalized.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PointerReport {
        duration,
        band,
        spread,
        agree: spread <= band,
        rows,
    })
}
