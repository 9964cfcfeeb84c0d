//! Numerical integration.
//!
//! Two tools live here:
//!
//! - [`integrate`]: globally adaptive 15-point Gauss–Kronrod quadrature with
//!   caller-supplied breakpoints, used for oscillatory transforms and other
//!   one-shot definite integrals.
//! - [`PanelGrid`]: a fixed composite Gauss–Legendre grid that can return the
//!   *indefinite* integral of tabulated values at every node. Chaining it
//!   evaluates time-ordered nested integrals as a sequence of 1-D passes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul};

use num_traits::Zero;

use crate::error::{Error, Result};

/// Default absolute tolerance for adaptive quadrature.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Hard cap on the number of panels in adaptive quadrature.
pub const MAX_PANELS: usize = 1 << 16;

// 15-point Kronrod abscissae (positive half, descending) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// 7-point Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Outcome of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv = [(0.0, 0.0); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(centre - dx), f(centre + dx));
        fv[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    // QUADPACK error scaling.
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(round);
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// `breakpoints` (points of non-smoothness) seed the initial subdivision;
/// points outside `(a, b)` are ignored.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> Result<Quadrature> {
    integrate_capped(f, a, b, breakpoints, tol, MAX_PANELS)
}

pub fn integrate_capped<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
    max_panels: usize,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts = vec![lo];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(hi);

    let mut heap: BinaryHeap<Segment> = cuts.windows(2).map(|w| kronrod15(&f, w[0], w[1])).collect();
    loop {
        let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if error <= tol {
            return Ok(Quadrature {
                value: sign * value,
                error,
                panels: heap.len(),
            });
        }
        if heap.len() >= max_panels {
            return Err(Error::Accuracy {
                estimate: error,
                tolerance: tol,
                context: format!("adaptive quadrature hit the {max_panels}-panel cap"),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Accuracy {
                estimate: error,
                tolerance: tol,
                context: "panel width underflow".into(),
            });
        }
        heap.push(kronrod15(&f, worst.a, mid));
        heap.push(kronrod15(&f, mid, worst.b));
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Legendre polynomials P_0..=P_max at `z`.
fn legendre_all(max: usize, z: f64) -> Vec<f64> {
    let mut p = vec![0.0; max + 1];
    p[0] = 1.0;
    if max >= 1 {
        p[1] = z;
    }
    for k in 2..=max {
        p[k] = ((2 * k - 1) as f64 * z * p[k - 1] - (k - 1) as f64 * p[k - 2]) / k as f64;
    }
    p
}

/// Composite Gauss–Legendre grid supporting cumulative (indefinite)
/// integration of node-tabulated data.
///
/// Inside each panel the data are treated as the degree `p-1` interpolating
/// polynomial, whose running integral is exact at the nodes. Panel edges
/// carry the exact Gauss–Legendre panel integral forward.
#[derive(Clone, Debug)]
pub struct PanelGrid {
    order: usize,
    panels: Vec<(f64, f64)>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    // Reference integration matrix, row-major `order x order`:
    // S[i][j] = ∫_{-1}^{x_i} L_j(x) dx.
    integration: Vec<f64>,
}

impl PanelGrid {
    /// Builds a grid over `[a, b]`.
    ///
    /// Every breakpoint becomes a panel edge; each resulting segment is split
    /// evenly so that no panel exceeds `max_width` and the total node count is
    /// at least `min_nodes`.
    pub fn new(a: f64, b: f64, breakpoints: &[f64], max_width: f64, min_nodes: usize, order: usize) -> Self {
        assert!(b > a && order >= 2);
        let mut cuts = vec![a];
        let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        cuts.extend(inner);
        cuts.push(b);
        let min_panels = min_nodes.div_ceil(order).max(1);
        let total = b - a;
        let mut panels = Vec::new();
        for w in cuts.windows(2) {
            let len = w[1] - w[0];
            let by_width = if max_width.is_finite() && max_width > 0.0 {
                (len / max_width).ceil() as usize
            } else {
                1
            };
            let by_count = ((min_panels as f64) * len / total).ceil() as usize;
            let k = by_width.max(by_count).max(1);
            let h = len / k as f64;
            for j in 0..k {
                let lo = w[0] + j as f64 * h;
                let hi = if j + 1 == k { w[1] } else { lo + h };
                panels.push((lo, hi));
            }
        }

        let (x, wt) = gauss_legendre(order);
        let mut integration = vec![0.0; order * order];
        let poly_x: Vec<Vec<f64>> = x.iter().map(|&xi| legendre_all(order, xi)).collect();
        for i in 0..order {
            for j in 0..order {
                // L_j(x) = w_j Σ_k (2k+1)/2 P_k(x_j) P_k(x) and
                // ∫_{-1}^{x} P_k = (P_{k+1}(x) - P_{k-1}(x)) / (2k+1).
                let mut s = 0.5 * (x[i] + 1.0);
                for k in 1..order {
                    s += 0.5 * poly_x[j][k] * (poly_x[i][k + 1] - poly_x[i][k - 1]);
                }
                integration[i * order + j] = wt[j] * s;
            }
        }

        let mut nodes = Vec::with_capacity(panels.len() * order);
        let mut weights = Vec::with_capacity(panels.len() * order);
        for &(lo, hi) in &panels {
            let c = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo);
            for j in 0..order {
                nodes.push(c + h * x[j]);
                weights.push(h * wt[j]);
            }
        }
        PanelGrid {
            order,
            panels,
            nodes,
            weights,
            integration,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// Same breakpoints, every panel bisected.
    pub fn refined(&self) -> Self {
        let mut cuts: Vec<f64> = Vec::with_capacity(2 * self.panels.len() + 1);
        for &(lo, hi) in &self.panels {
            cuts.push(lo);
            cuts.push(0.5 * (lo + hi));
        }
        let a = self.panels[0].0;
        let b = self.panels[self.panels.len() - 1].1;
        PanelGrid::new(a, b, &cuts[1..], f64::INFINITY, 0, self.order)
    }

    /// Definite integral of node-tabulated `values` over the whole grid.
    pub fn integrate<T>(&self, values: &[T]) -> T
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        debug_assert_eq!(values.len(), self.nodes.len());
        values
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&v, &w)| acc + v * w)
    }

    /// Running integral `∫_a^{t_i} f` at every node `t_i`, plus the total.
    pub fn cumulative<T>(&self, values: &[T], out: &mut Vec<T>) -> T
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        debug_assert_eq!(values.len(), self.nodes.len());
        let p = self.order;
        out.clear();
        out.reserve(values.len());
        let mut base = T::zero();
        for (q, &(lo, hi)) in self.panels.iter().enumerate() {
            let h = 0.5 * (hi - lo);
            let f = &values[q * p..(q + 1) * p];
            for i in 0..p {
                let row = &self.integration[i * p..(i + 1) * p];
                let s = row.iter().zip(f).fold(T::zero(), |acc, (&r, &v)| acc + v * r);
                out.push(base + s * h);
            }
            let total = f
                .iter()
                .zip(&self.weights[q * p..(q + 1) * p])
                .fold(T::zero(), |acc, (&v, &w)| acc + v * w);
            base = base + total;
        }
        base
    }
}
