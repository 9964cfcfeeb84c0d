//! Time-dependent coupling windows g(t).
//!
//! A profile is supported on `[-T/2, T/2]`, is non-negative there and has
//! total area `G` (1 unless built with [`CouplingProfile::with_area`]). The
//! built-in shapes are even in t and have closed-form cosine transforms
//! `g̃(ωT)`; sampled shapes are transformed by adaptive quadrature.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// `sin(x)/x`, with a series near the origin.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

// Half-width of the window around |ωT| = 2π where the raised-cosine
// transform switches to its cancellation-free form.
const RAISED_COSINE_WINDOW: f64 = 1e-4;

/// A unit-area window on the unit support `s ∈ [-1/2, 1/2]`, stored as a
/// piecewise-linear table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledShape {
    points: Vec<f64>,
    values: Vec<f64>,
    // running trapezoid area at each point
    cumulative: Vec<f64>,
    even: bool,
}

impl SampledShape {
    fn new(times: &[f64], values: &[f64]) -> Result<(Self, f64)> {
        if times.len() != values.len() {
            return Err(Error::validation(
                "profile.values",
                format!("{} values for {} time points", values.len(), times.len()),
            ));
        }
        if times.len() < 2 {
            return Err(Error::validation("profile.times", "need at least two samples"));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::validation(
                format!("profile.times[{}]", i + 1),
                "time points must be strictly increasing",
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::validation(
                format!("profile.values[{i}]"),
                "coupling values must be finite and non-negative",
            ));
        }
        let t0 = times[0];
        let duration = times[times.len() - 1] - t0;
        let points: Vec<f64> = times.iter().map(|t| (t - t0) / duration - 0.5).collect();
        let mut cumulative = vec![0.0; points.len()];
        for i in 1..points.len() {
            cumulative[i] = cumulative[i - 1] + 0.5 * (values[i] + values[i - 1]) * (points[i] - points[i - 1]);
        }
        let area = cumulative[cumulative.len() - 1];
        if !(area > 0.0) {
            return Err(Error::validation("profile.values", "sampled coupling has zero area"));
        }
        let values: Vec<f64> = values.iter().map(|v| v / area).collect();
        cumulative.iter_mut().for_each(|c| *c /= area);
        let mut shape = SampledShape {
            points,
            values,
            cumulative,
            even: true,
        };
        let peak = shape.values.iter().copied().fold(0.0, f64::max);
        shape.even = shape
            .points
            .iter()
            .all(|&s| (shape.eval(s) - shape.eval(-s)).abs() <= 1e-9 * peak);
        Ok((shape, duration))
    }

    fn segment(&self, s: f64) -> usize {
        match self.points.binary_search_by(|p| p.total_cmp(&s)) {
            Ok(i) => i.min(self.points.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.points.len() - 2),
        }
    }

    fn eval(&self, s: f64) -> f64 {
        if s < self.points[0] || s > self.points[self.points.len() - 1] {
            return 0.0;
        }
        let i = self.segment(s);
        let (s0, s1) = (self.points[i], self.points[i + 1]);
        let r = (s - s0) / (s1 - s0);
        self.values[i] * (1.0 - r) + self.values[i + 1] * r
    }

    fn cumulative(&self, s: f64) -> f64 {
        if s <= self.points[0] {
            return 0.0;
        }
        if s >= self.points[self.points.len() - 1] {
            return 1.0;
        }
        let i = self.segment(s);
        let (s0, s1) = (self.points[i], self.points[i + 1]);
        let d = s - s0;
        let slope = (self.values[i + 1] - self.values[i]) / (s1 - s0);
        self.cumulative[i] + self.values[i] * d + 0.5 * slope * d * d
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Shape of the coupling window, independent of its duration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// Constant coupling 1/T.
    Boxcar,
    /// Linear ramps of width `ΔT = turn_on_fraction · T` at both ends.
    Trapezoid {
        turn_on_fraction: f64,
    },
    Triangle,
    /// `(1 + cos(2πt/T)) / T`.
    RaisedCosine,
    Sampled(SampledShape),
}

impl ProfileKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileKind::Boxcar => "boxcar",
            ProfileKind::Trapezoid { .. } => "trapezoid",
            ProfileKind::Triangle => "triangle",
            ProfileKind::RaisedCosine => "raised-cosine",
            ProfileKind::Sampled(_) => "sampled",
        }
    }

    /// Parses a built-in shape name. Trapezoids need their fraction and are
    /// built through [`CouplingProfile::trapezoid`].
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "boxcar" | "constant" => Ok(ProfileKind::Boxcar),
            "triangle" => Ok(ProfileKind::Triangle),
            "raised-cosine" | "raisedcosine" => Ok(ProfileKind::RaisedCosine),
            other => Err(Error::validation("profile.kind", format!("unknown profile `{other}`"))),
        }
    }

    /// Unit-area cosine transform as a function of the dimensionless `x = ωT`.
    pub fn transform(&self, x: f64) -> Result<f64> {
        let x = x.abs();
        Ok(match self {
            ProfileKind::Boxcar => sinc(0.5 * x),
            ProfileKind::Trapezoid { turn_on_fraction } => {
                sinc(0.5 * x * turn_on_fraction) * sinc(0.5 * x * (1.0 - turn_on_fraction))
            }
            ProfileKind::Triangle => {
                let s = sinc(0.25 * x);
                s * s
            }
            ProfileKind::RaisedCosine => raised_cosine_transform(x),
            ProfileKind::Sampled(_) => return Err(Error::NoAnalyticTransform("sampled")),
        })
    }

    /// Points where g is not smooth, on the unit support.
    fn unit_breakpoints(&self) -> Vec<f64> {
        match self {
            ProfileKind::Boxcar | ProfileKind::RaisedCosine => vec![-0.5, 0.5],
            ProfileKind::Trapezoid { turn_on_fraction: f } => vec![-0.5, -0.5 + f, 0.5 - f, 0.5],
            ProfileKind::Triangle => vec![-0.5, 0.0, 0.5],
            ProfileKind::Sampled(shape) => shape.points.clone(),
        }
    }

    fn unit_eval(&self, s: f64) -> f64 {
        if !(-0.5..=0.5).contains(&s) {
            return 0.0;
        }
        match self {
            ProfileKind::Boxcar => 1.0,
            ProfileKind::Trapezoid { turn_on_fraction: f } => {
                let u = s + 0.5;
                let h = 1.0 / (1.0 - f);
                if u < *f {
                    h * u / f
                } else if u > 1.0 - f {
                    h * (1.0 - u) / f
                } else {
                    h
                }
            }
            ProfileKind::Triangle => 2.0 * (1.0 - 2.0 * s.abs()),
            ProfileKind::RaisedCosine => 1.0 + (2.0 * PI * s).cos(),
            ProfileKind::Sampled(shape) => shape.eval(s),
        }
    }

    fn unit_cumulative(&self, s: f64) -> f64 {
        if s <= -0.5 {
            return 0.0;
        }
        if s >= 0.5 {
            return 1.0;
        }
        let u = s + 0.5;
        match self {
            ProfileKind::Boxcar => u,
            ProfileKind::Trapezoid { turn_on_fraction: f } => {
                let h = 1.0 / (1.0 - f);
                if u < *f {
                    0.5 * h * u * u / f
                } else if u > 1.0 - f {
                    1.0 - 0.5 * h * (1.0 - u) * (1.0 - u) / f
                } else {
                    h * (u - 0.5 * f)
                }
            }
            ProfileKind::Triangle => {
                if s <= 0.0 {
                    2.0 * u * u
                } else {
                    1.0 - 2.0 * (1.0 - u) * (1.0 - u)
                }
            }
            ProfileKind::RaisedCosine => u + (2.0 * PI * s).sin() / (2.0 * PI),
            ProfileKind::Sampled(shape) => shape.cumulative(s),
        }
    }

    fn unit_peak(&self) -> f64 {
        match self {
            ProfileKind::Boxcar => 1.0,
            ProfileKind::Trapezoid { turn_on_fraction } => 1.0 / (1.0 - turn_on_fraction),
            ProfileKind::Triangle | ProfileKind::RaisedCosine => 2.0,
            ProfileKind::Sampled(shape) => shape.values.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Whether the shape is symmetric about t = 0.
    pub fn is_even(&self) -> bool {
        match self {
            ProfileKind::Sampled(shape) => shape.is_even(),
            _ => true,
        }
    }
}

fn raised_cosine_transform(x: f64) -> f64 {
    let u = 0.5 * x;
    if (x / (2.0 * PI) - 1.0).abs() < RAISED_COSINE_WINDOW {
        // With δ = u - π the transform is sinc(δ) π² / ((π + δ)(2π + δ)),
        // which has no cancellation at δ = 0.
        let d = u - PI;
        sinc(d) * PI * PI / ((PI + d) * (2.0 * PI + d))
    } else {
        sinc(u) / (1.0 - (u / PI) * (u / PI))
    }
}

/// A coupling window of duration `T` and area `G`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingProfile {
    kind: ProfileKind,
    duration: f64,
    area: f64,
}

impl CouplingProfile {
    fn build(kind: ProfileKind, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::validation(
                "profile.T",
                format!("duration must be positive, got {duration}"),
            ));
        }
        Ok(CouplingProfile {
            kind,
            duration,
            area: 1.0,
        })
    }

    pub fn boxcar(duration: f64) -> Result<Self> {
        Self::build(ProfileKind::Boxcar, duration)
    }

    pub fn triangle(duration: f64) -> Result<Self> {
        Self::build(ProfileKind::Triangle, duration)
    }

    pub fn raised_cosine(duration: f64) -> Result<Self> {
        Self::build(ProfileKind::RaisedCosine, duration)
    }

    pub fn trapezoid(duration: f64, turn_on_fraction: f64) -> Result<Self> {
        if !(turn_on_fraction > 0.0 && turn_on_fraction <= 0.5) {
            return Err(Error::validation(
                "profile.turn_on_fraction",
                format!("must lie in (0, 1/2], got {turn_on_fraction}"),
            ));
        }
        Self::build(ProfileKind::Trapezoid { turn_on_fraction }, duration)
    }

    /// Builds a profile from a sampled curve. The time axis is recentred on
    /// the support midpoint and the values rescaled to unit trapezoid area.
    pub fn sampled(times: &[f64], values: &[f64]) -> Result<Self> {
        let (shape, duration) = SampledShape::new(times, values)?;
        Self::build(ProfileKind::Sampled(shape), duration)
    }

    /// Reads a two-column `time,value` CSV (header optional).
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Parse {
                path: shown.clone(),
                message: e.to_string(),
            })?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse {
                path: shown.clone(),
                message: e.to_string(),
            })?;
            if record.len() != 2 {
                return Err(Error::Parse {
                    path: shown.clone(),
                    message: format!("line {}: expected 2 columns, found {}", line + 1, record.len()),
                });
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(t), Ok(v)) => {
                    times.push(t);
                    values.push(v);
                }
                _ if line == 0 => continue, // header
                _ => {
                    return Err(Error::Parse {
                        path: shown.clone(),
                        message: format!("line {}: non-numeric field", line + 1),
                    })
                }
            }
        }
        Self::sampled(&times, &values)
    }

    /// Same shape stretched to a new duration.
    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        let mut p = Self::build(self.kind.clone(), duration)?;
        p.area = self.area;
        Ok(p)
    }

    /// Same shape with total area `G` instead of 1.
    pub fn with_area(&self, area: f64) -> Result<Self> {
        if !(area.is_finite() && area > 0.0) {
            return Err(Error::validation(
                "profile.area",
                format!("area must be positive, got {area}"),
            ));
        }
        Ok(CouplingProfile { area, ..self.clone() })
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Total area G.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn is_even(&self) -> bool {
        self.kind.is_even()
    }

    pub fn peak(&self) -> f64 {
        self.area * self.kind.unit_peak() / self.duration
    }

    /// Support endpoints `(-T/2, T/2)`.
    pub fn support(&self) -> (f64, f64) {
        (-0.5 * self.duration, 0.5 * self.duration)
    }

    /// Corner points of g (including the support ends).
    pub fn breakpoints(&self) -> Vec<f64> {
        self.kind
            .unit_breakpoints()
            .into_iter()
            .map(|s| s * self.duration)
            .collect()
    }

    /// g(t); zero outside the support.
    pub fn eval(&self, t: f64) -> f64 {
        self.area * self.kind.unit_eval(t / self.duration) / self.duration
    }

    /// G(t) = ∫_{-T/2}^{t} g.
    pub fn cumulative_area(&self, t: f64) -> f64 {
        self.area * self.kind.unit_cumulative(t / self.duration)
    }

    /// Closed-form `∫ cos(ωt) g(t) dt`.
    pub fn fourier_transform(&self, omega: f64) -> Result<f64> {
        Ok(self.area * self.kind.transform(omega * self.duration)?)
    }

    /// `∫ cos(ωt) g(t) dt` by adaptive quadrature to absolute tolerance 1e-10.
    pub fn numeric_fourier_transform(&self, omega: f64) -> Result<f64> {
        self.quadrature(|t| (omega * t).cos()).map(|q| q.value)
    }

    /// `∫ e^{iωt} g(t) dt`. Closed form for even built-in shapes; the sine
    /// part is integrated numerically for asymmetric sampled shapes.
    pub fn complex_transform(&self, omega: f64) -> Result<Complex64> {
        match &self.kind {
            ProfileKind::Sampled(shape) => {
                let re = self.numeric_fourier_transform(omega)?;
                let im = if shape.is_even() {
                    0.0
                } else {
                    self.quadrature(|t| (omega * t).sin())?.value
                };
                Ok(Complex64::new(re, im))
            }
            _ => Ok(Complex64::new(self.fourier_transform(omega)?, 0.0)),
        }
    }

    fn quadrature<F: Fn(f64) -> f64>(&self, weight: F) -> Result<quadrature::Quadrature> {
        let (a, b) = self.support();
        quadrature::integrate(
            |t| weight(t) * self.eval(t),
            a,
            b,
            &self.breakpoints(),
            quadrature::DEFAULT_TOLERANCE,
        )
    }
}
