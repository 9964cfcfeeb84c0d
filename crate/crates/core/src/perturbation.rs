//! Dyson-series amplitudes in the interaction picture.
//!
//! With `H(t) = H_S + a g(t) O` on `[-T/2, T/2]` the interaction-picture
//! amplitude of level `m` is `C_m = Σ_ℓ a^ℓ A^(ℓ)_m`, where
//!
//! ```text
//! A^(ℓ)_m = (-i)^ℓ Σ_chains ∫_{t1 > t2 > … > tℓ} Π_j g(t_j) e^{iω_{k_{j-1} k_j} t_j} O_{k_{j-1} k_j}
//! ```
//!
//! with `k_0 = m` and `k_ℓ = n`. The chain sum is never enumerated: the
//! vector `F^(j)_k(t)` of partial nested integrals obeys
//! `F^(j)_k(t) = ∫_{-T/2}^t g(s) e^{iE_k s} Σ_k' O_kk' e^{-iE_k' s} F^(j-1)_k'(s) ds`
//! and each level is one cumulative quadrature pass.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::{CouplingProfile, ProfileKind};
use crate::quadrature::{self, PanelGrid};
use crate::system::SystemModel;

/// Highest perturbative order the engine evaluates.
pub const MAX_ORDER: usize = 6;
/// Smallest admissible number of time nodes.
pub const MIN_NODES: usize = 32;
/// Default number of time nodes.
pub const DEFAULT_NODES: usize = 64;
/// Gauss–Legendre points per panel.
const PANEL_ORDER: usize = 16;
/// Largest phase `ω_max · width` accumulated across one panel.
const PANEL_PHASE: f64 = 2.0;
/// Grid refinements tried before giving up.
const MAX_REFINEMENTS: usize = 6;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn minus_i_pow(l: usize) -> Complex64 {
    match l % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `∫ g(t) e^{iωt} dt`, analytic where available.
fn transform(profile: &CouplingProfile, omega: f64) -> Result<Complex64> {
    profile.complex_transform(omega)
}

/// Inputs for a Dyson evaluation.
#[derive(Clone, Debug)]
pub struct DysonRequest<'a> {
    pub system: &'a SystemModel,
    pub profile: &'a CouplingProfile,
    pub max_order: usize,
    /// Pointer momentum `a` used by [`AmplitudeTable::total`].
    pub momentum: f64,
    /// Minimum number of time nodes in the quadrature grid.
    pub nodes: usize,
    /// Absolute tolerance on every `A^(ℓ)_m` between successive grid refinements.
    pub tolerance: f64,
}

impl<'a> DysonRequest<'a> {
    pub fn new(system: &'a SystemModel, profile: &'a CouplingProfile, max_order: usize) -> Self {
        DysonRequest {
            system,
            profile,
            max_order,
            momentum: 1.0,
            nodes: DEFAULT_NODES,
            tolerance: 1e-10,
        }
    }

    pub fn momentum(mut self, a: f64) -> Self {
        self.momentum = a;
        self
    }

    pub fn nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_order > MAX_ORDER {
            return Err(Error::OrderCap {
                requested: self.max_order,
                cap: MAX_ORDER,
            });
        }
        if self.max_order == 0 {
            return Err(Error::validation("dyson.max_order", "order must be at least 1"));
        }
        if self.nodes < MIN_NODES {
            return Err(Error::validation(
                "dyson.nodes",
                format!("need at least {MIN_NODES} nodes, got {}", self.nodes),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::validation("dyson.tolerance", "tolerance must be positive"));
        }
        if !self.momentum.is_finite() {
            return Err(Error::validation("dyson.momentum", "momentum must be finite"));
        }
        Ok(())
    }

    fn grid(&self) -> PanelGrid {
        let (lo, hi) = self.profile.support();
        let w = self.system.max_frequency();
        let max_width = if w > 0.0 { PANEL_PHASE / w } else { f64::INFINITY };
        PanelGrid::new(lo, hi, &self.profile.breakpoints(), max_width, self.nodes, PANEL_ORDER)
    }
}

/// Order-resolved amplitudes `A^(ℓ)_m` for `ℓ = 0..=L`.
#[derive(Clone, Debug, Serialize)]
pub struct AmplitudeTable {
    pub profile: String,
    pub duration: f64,
    pub area: f64,
    pub max_order: usize,
    pub momentum: f64,
    pub initial_level: usize,
    /// `orders[ℓ][m]`.
    pub orders: Vec<Vec<Complex64>>,
    /// Largest change of any entry under the last grid refinement.
    pub error_estimate: f64,
    pub nodes: usize,
    observable_norm: f64,
}

/// One `(order, m)` entry, the serialized form of a table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AmplitudeRow {
    pub order: usize,
    pub m: usize,
    pub re: f64,
    pub im: f64,
}

impl AmplitudeTable {
    pub fn dimension(&self) -> usize {
        self.orders[0].len()
    }

    pub fn amplitude(&self, order: usize, m: usize) -> Complex64 {
        self.orders[order][m]
    }

    /// `C_m(a) = Σ_ℓ a^ℓ A^(ℓ)_m` for every `m`.
    pub fn assemble(&self, a: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dimension()];
        let mut power = 1.0;
        for row in &self.orders {
            for (c, v) in out.iter_mut().zip(row) {
                *c += v * power;
            }
            power *= a;
        }
        out
    }

    /// Assembled amplitudes at the request momentum.
    pub fn total(&self) -> Vec<Complex64> {
        self.assemble(self.momentum)
    }

    /// Bound on `|Σ_m |C_m|² - 1|` from dropping orders above `L`.
    ///
    /// The dropped tail of the time-ordered exponential has norm at most
    /// `Σ_{k>L} x^k/k! ≤ x^{L+1} e^x / (L+1)!` with `x = |a| G ‖O‖`.
    pub fn truncation_bound(&self, a: f64) -> f64 {
        let x = a.abs() * self.area.abs() * self.observable_norm;
        let l = self.max_order as i32 + 1;
        let factorial: f64 = (1..=l).map(f64::from).product();
        let tail = x.powi(l) / factorial * x.exp();
        2.0 * tail + tail * tail
    }

    pub fn rows(&self) -> Vec<AmplitudeRow> {
        let mut rows = Vec::new();
        for (order, row) in self.orders.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                rows.push(AmplitudeRow {
                    order,
                    m,
                    re: v.re,
                    im: v.im,
                });
            }
        }
        rows
    }
}

/// Amplitudes for one final level.
#[derive(Clone, Debug)]
pub struct DysonAmplitude {
    pub total: Complex64,
    pub orders: Vec<Complex64>,
    pub error_estimate: f64,
}

/// All chains, all final levels.
pub fn dyson_table(req: &DysonRequest) -> Result<AmplitudeTable> {
    dyson_table_filtered(req, |_, _| true)
}

/// Like [`dyson_table`] but only chains whose level after `j` interactions
/// (counted from the initial level) satisfies `allow(j, k)`. The filter also
/// applies to the final level of each order, so `allow(1, k) = k != n`
/// leaves `A^(1)_n = 0` and gives `A^(2)_m` restricted to `k_1 ≠ n`.
pub fn dyson_table_filtered<F>(req: &DysonRequest, allow: F) -> Result<AmplitudeTable>
where
    F: Fn(usize, usize) -> bool,
{
    req.validate()?;
    let mut grid = req.grid();
    let mut previous = recursion(req, &grid, &allow);
    let mut estimate = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        grid = grid.refined();
        let current = recursion(req, &grid, &allow);
        estimate = max_difference(&previous, &current);
        previous = current;
        if estimate <= req.tolerance {
            return Ok(AmplitudeTable {
                profile: req.profile.name().to_string(),
                duration: req.profile.duration(),
                area: req.profile.area(),
                max_order: req.max_order,
                momentum: req.momentum,
                initial_level: req.system.initial_level(),
                orders: previous,
                error_estimate: estimate,
                nodes: grid.len(),
                observable_norm: req.system.observable_norm(),
            });
        }
    }
    Err(Error::Accuracy {
        estimate,
        tolerance: req.tolerance,
        context: format!("Dyson quadrature on {} nodes", grid.len()),
    })
}

/// `Σ_ℓ a^ℓ A^(ℓ)_m` and the per-order values for a single final level.
pub fn dyson_amplitude(req: &DysonRequest, m: usize) -> Result<DysonAmplitude> {
    check_level(req.system, m, "m")?;
    let table = dyson_table(req)?;
    Ok(DysonAmplitude {
        total: table.total()[m],
        orders: table.orders.iter().map(|row| row[m]).collect(),
        error_estimate: table.error_estimate,
    })
}

/// Contribution of one explicit chain `[m, k_1, …, k_{ℓ-1}, n]` to `A^(ℓ)_m`.
pub fn chain_amplitude(system: &SystemModel, profile: &CouplingProfile, chain: &[usize]) -> Result<Complex64> {
    check_chain(system, chain)?;
    let l = chain.len() - 1;
    let req = DysonRequest::new(system, profile, l).tolerance(1e-12);
    let table = dyson_table_filtered(&req, |j, k| k == chain[l - j])?;
    Ok(table.orders[l][chain[0]])
}

fn check_level(system: &SystemModel, m: usize, field: &str) -> Result<()> {
    if m >= system.dimension() {
        return Err(Error::validation(
            field,
            format!("level {m} out of range for dimension {}", system.dimension()),
        ));
    }
    Ok(())
}

fn check_chain(system: &SystemModel, chain: &[usize]) -> Result<()> {
    if chain.len() < 2 {
        return Err(Error::validation("chain", "a chain needs at least two levels"));
    }
    if chain.len() - 1 > MAX_ORDER {
        return Err(Error::OrderCap {
            requested: chain.len() - 1,
            cap: MAX_ORDER,
        });
    }
    for (i, &k) in chain.iter().enumerate() {
        check_level(system, k, &format!("chain[{i}]"))?;
    }
    if *chain.last().unwrap() != system.initial_level() {
        return Err(Error::validation(
            "chain",
            format!("chain must end at the initial level {}", system.initial_level()),
        ));
    }
    Ok(())
}

fn max_difference(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn recursion<F>(req: &DysonRequest, grid: &PanelGrid, allow: &F) -> Vec<Vec<Complex64>>
where
    F: Fn(usize, usize) -> bool,
{
    let sys = req.system;
    let d = sys.dimension();
    let n = sys.initial_level();
    let nodes = grid.nodes();
    let len = nodes.len();
    let g: Vec<f64> = nodes.iter().map(|&t| req.profile.eval(t)).collect();
    // Energies relative to E_n keep the phases small.
    let phase: Vec<Vec<Complex64>> = (0..d)
        .map(|k| {
            let e = sys.transition_frequency(k, n);
            nodes.iter().map(|&t| Complex64::from_polar(1.0, e * t)).collect()
        })
        .collect();
    let o = sys.observable();

    let mut orders = Vec::with_capacity(req.max_order + 1);
    let mut e_n = vec![Complex64::new(0.0, 0.0); d];
    e_n[n] = Complex64::new(1.0, 0.0);
    orders.push(e_n);

    let mut f: Vec<Vec<Complex64>> = (0..d)
        .map(|k| vec![Complex64::new(if k == n { 1.0 } else { 0.0 }, 0.0); len])
        .collect();
    let mut h = vec![vec![Complex64::new(0.0, 0.0); len]; d];
    let mut integrand = vec![Complex64::new(0.0, 0.0); len];
    let mut running = Vec::with_capacity(len);
    for j in 1..=req.max_order {
        for k in 0..d {
            for i in 0..len {
                h[k][i] = phase[k][i].conj() * f[k][i];
            }
        }
        let mut next = vec![vec![Complex64::new(0.0, 0.0); len]; d];
        let mut row = vec![Complex64::new(0.0, 0.0); d];
        for k in 0..d {
            if !allow(j, k) {
                continue;
            }
            for i in 0..len {
                let mut s = Complex64::new(0.0, 0.0);
                for (kp, hk) in h.iter().enumerate() {
                    let okk = o[(k, kp)];
                    if okk.re != 0.0 || okk.im != 0.0 {
                        s += okk * hk[i];
                    }
                }
                integrand[i] = s * phase[k][i] * g[i];
            }
            let total = grid.cumulative(&integrand, &mut running);
            next[k].copy_from_slice(&running);
            row[k] = minus_i_pow(j) * total;
        }
        orders.push(row);
        f = next;
    }
    orders
}

/// `A^(1)_m = -i ⟨m|O|n⟩ g̃(ω_mn)`. For `m = n` this is `-i G ⟨n|O|n⟩`
/// whatever the shape of `g`.
pub fn first_order_amplitude(system: &SystemModel, profile: &CouplingProfile, m: usize) -> Result<Complex64> {
    check_level(system, m, "m")?;
    let n = system.initial_level();
    let o = system.element(m, n);
    if m == n {
        return Ok(-I * o * profile.area());
    }
    Ok(-I * o * transform(profile, system.transition_frequency(m, n))?)
}

/// `|⟨m|O|n⟩|² |g̃(ω_mn)|²`, the first-order transition probability per
/// unit `a²`.
pub fn first_order_probability(system: &SystemModel, profile: &CouplingProfile, m: usize) -> Result<f64> {
    check_level(system, m, "m")?;
    if m == system.initial_level() {
        return Err(Error::Domain(format!(
            "m = n = {m} is the survival amplitude, not a transition"
        )));
    }
    Ok(first_order_amplitude(system, profile, m)?.norm_sqr())
}

/// `exp(-i G a ⟨n|O|n⟩)`, the all-orders sum of the chains that stay in `n`.
pub fn pointer_shift_phase(system: &SystemModel, profile: &CouplingProfile, a: f64) -> Complex64 {
    let n = system.initial_level();
    let onn = system.element(n, n).re;
    Complex64::from_polar(1.0, -profile.area() * a * onn)
}

/// The `ℓ`-fold integral of `g` over the time-ordered simplex, computed by
/// the recursion `I_ℓ(t) = ∫_{-T/2}^t g(s) I_{ℓ-1}(s) ds`. Equals `G^ℓ/ℓ!`.
pub fn nested_integral_identity(profile: &CouplingProfile, ell: usize) -> Result<f64> {
    if !(1..=8).contains(&ell) {
        return Err(Error::validation("ell", format!("order must be in 1..=8, got {ell}")));
    }
    let (lo, hi) = profile.support();
    let grid = PanelGrid::new(lo, hi, &profile.breakpoints(), f64::INFINITY, 256, PANEL_ORDER);
    let g: Vec<f64> = grid.nodes().iter().map(|&t| profile.eval(t)).collect();
    let mut level = vec![1.0; grid.len()];
    let mut running = Vec::with_capacity(grid.len());
    let mut total = 0.0;
    for _ in 0..ell {
        let integrand: Vec<f64> = g.iter().zip(&level).map(|(g, v)| g * v).collect();
        total = grid.cumulative(&integrand, &mut running);
        std::mem::swap(&mut level, &mut running);
    }
    Ok(total)
}

/// Closed-form pieces of the second-order return amplitude for constant
/// coupling, scaled by `(aG)²`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SecondOrderBreakdown {
    /// `-i Σ_k |O_nk|² / (ω_nk T)`.
    pub energy_shift_term: Complex64,
    /// `Σ_k |O_nk|² e^{iω_nk T} / (ω_nk T)²`.
    pub mixing_term: Complex64,
    /// `-Σ_k |O_nk|² / (ω_nk T)²`.
    pub normalization_term: Complex64,
    /// `ΔE_n^(2) = (aG/T)² Σ_k |O_nk|² / ω_nk`.
    pub delta_e2: f64,
}

impl SecondOrderBreakdown {
    pub fn sum(&self) -> Complex64 {
        self.energy_shift_term + self.mixing_term + self.normalization_term
    }
}

/// Second-order `k ≠ n` terms of the return amplitude `C_n` for a boxcar
/// coupling at pointer momentum `a`.
pub fn second_order_breakdown(system: &SystemModel, profile: &CouplingProfile, a: f64) -> Result<SecondOrderBreakdown> {
    if !matches!(profile.kind(), ProfileKind::Boxcar) {
        return Err(Error::UnsupportedProfile(profile.name()));
    }
    let t = profile.duration();
    let scale = (a * profile.area()).powi(2);
    let n = system.initial_level();
    let zero = Complex64::new(0.0, 0.0);
    let mut b = SecondOrderBreakdown {
        energy_shift_term: zero,
        mixing_term: zero,
        normalization_term: zero,
        delta_e2: 0.0,
    };
    for k in (0..system.dimension()).filter(|&k| k != n) {
        let w2 = system.element(n, k).norm_sqr();
        if w2 == 0.0 {
            continue;
        }
        let w = system.transition_frequency(n, k);
        if w == 0.0 {
            return Err(Error::Domain(format!(
                "levels {n} and {k} are degenerate and coupled; second-order terms diverge"
            )));
        }
        let x = w * t;
        b.energy_shift_term += -I * (scale * w2 / x);
        b.mixing_term += Complex64::from_polar(scale * w2 / (x * x), x);
        b.normalization_term += Complex64::new(-scale * w2 / (x * x), 0.0);
        b.delta_e2 += scale * w2 / (w * t * t);
    }
    Ok(b)
}

/// Factorized estimate of a chain `[m, k_1, …, k_{ℓ-1}, n]` through distinct
/// virtual levels: `(-i)^ℓ Π O · g̃(ω̄)^ℓ / ℓ!`. When `omega_bar` is `None`
/// the median `|ω|` over the chain's transitions is used.
pub fn alpha_distinct_chain(
    system: &SystemModel,
    profile: &CouplingProfile,
    chain: &[usize],
    omega_bar: Option<f64>,
) -> Result<Complex64> {
    check_chain(system, chain)?;
    let l = chain.len() - 1;
    let (m, n) = (chain[0], chain[l]);
    let inner = &chain[1..l];
    for (i, &k) in inner.iter().enumerate() {
        if k == m || k == n || inner[..i].contains(&k) {
            return Err(Error::Domain(format!(
                "virtual level {k} repeats in chain {chain:?}; use dyson_amplitude for mixed chains"
            )));
        }
    }
    let omega = match omega_bar {
        Some(w) => w,
        None => {
            let mut ws: Vec<f64> = chain
                .windows(2)
                .map(|p| system.transition_frequency(p[0], p[1]).abs())
                .collect();
            ws.sort_by(f64::total_cmp);
            let h = ws.len() / 2;
            if ws.len() % 2 == 1 {
                ws[h]
            } else {
                0.5 * (ws[h - 1] + ws[h])
            }
        }
    };
    let product = chain
        .windows(2)
        .fold(Complex64::new(1.0, 0.0), |acc, p| acc * system.element(p[0], p[1]));
    let factorial: f64 = (1..=l).map(|k| k as f64).product();
    Ok(minus_i_pow(l) * product * transform(profile, omega)?.powi(l as i32) / factorial)
}

/// The chain `m ← n ← … ← n` of order `ℓ`:
/// `(-i)^ℓ O_mn O_nn^{ℓ-1} ∫ e^{iω_mn t} g(t) G(t)^{ℓ-1} / (ℓ-1)! dt`.
pub fn single_transition_term(
    system: &SystemModel,
    profile: &CouplingProfile,
    m: usize,
    ell: usize,
) -> Result<Complex64> {
    check_level(system, m, "m")?;
    if ell == 0 {
        return Err(Error::validation("ell", "order must be at least 1"));
    }
    let n = system.initial_level();
    let w = system.transition_frequency(m, n);
    let factorial: f64 = (1..ell).map(|k| k as f64).product();
    let p = (ell - 1) as i32;
    let (lo, hi) = profile.support();
    let bp = profile.breakpoints();
    let weight = |t: f64| profile.eval(t) * profile.cumulative_area(t).powi(p) / factorial;
    let tol = 1e-14;
    let re = quadrature::integrate(|t| (w * t).cos() * weight(t), lo, hi, &bp, tol)?.value;
    let im = quadrature::integrate(|t| (w * t).sin() * weight(t), lo, hi, &bp, tol)?.value;
    let prefactor = minus_i_pow(ell) * system.element(m, n) * system.element(n, n).powi(p);
    Ok(prefactor * Complex64::new(re, im))
}

/// Fornberg weights for the `derivative`-th derivative at 0 on `offsets`.
fn fornberg(derivative: usize, offsets: &[f64]) -> Vec<f64> {
    let n = offsets.len();
    let mut c = vec![vec![0.0; derivative + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    for i in 1..n {
        let mn = i.min(derivative);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[derivative]).collect()
}

/// `T^{-(ℓ-1)} d^{ℓ-1} g̃/dω^{ℓ-1}`, which equals the `(ℓ-1)`-th derivative
/// of `G·g̃` with respect to `x = ωT`.
///
/// Central stencils of `2ℓ+1` points at steps `0.5, 0.25, 0.125` in `x`,
/// combined by Richardson extrapolation.
pub fn gamma_factor(profile: &CouplingProfile, ell: usize, omega: f64) -> Result<f64> {
    if ell < 2 {
        return Err(Error::validation("ell", format!("order must be at least 2, got {ell}")));
    }
    if ell > MAX_ORDER {
        return Err(Error::OrderCap {
            requested: ell,
            cap: MAX_ORDER,
        });
    }
    let kind = profile.kind();
    kind.transform(0.0)?;
    let n = ell - 1;
    let half = n as i32 + 1;
    let offsets: Vec<f64> = (-half..=half).map(f64::from).collect();
    let weights = fornberg(n, &offsets);
    let x = omega * profile.duration();
    let area = profile.area();
    let derivative = |h: f64| -> Result<f64> {
        let mut s = 0.0;
        for (o, w) in offsets.iter().zip(&weights) {
            // transform() folds |x|, so negative arguments are handled.
            s += w * kind.transform(x + o * h)?;
        }
        Ok(area * s / h.powi(n as i32))
    };
    let order = 2 * ((ell + 3) / 2) as i32;
    let levels = 3;
    let mut table: Vec<f64> = Vec::with_capacity(levels);
    for k in 0..levels {
        let h = 0.5f64.powi(k as i32 + 1);
        if h.powi(n as i32) < f64::EPSILON {
            return Err(Error::Accuracy {
                estimate: f64::NAN,
                tolerance: f64::EPSILON,
                context: format!("finite-difference step {h} underflows for derivative order {n}"),
            });
        }
        table.push(derivative(h)?);
    }
    // Richardson: each column removes the next even power of h.
    let mut p = order;
    let mut last_change = f64::INFINITY;
    while table.len() > 1 {
        let factor = 2f64.powi(p);
        let next: Vec<f64> = table
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
        last_change = (next[next.len() - 1] - table[table.len() - 1]).abs();
        table = next;
        p += 2;
    }
    let tolerance = 1e-7;
    if last_change > tolerance {
        return Err(Error::Accuracy {
            estimate: last_change,
            tolerance,
            context: format!("gamma_{ell} at x = {x}"),
        });
    }
    Ok(table[0])
}

/// Leading large-`x` term of [`gamma_factor`] for a boxcar:
/// `G 2^{-(ℓ-1)} sin(u + (ℓ-1)π/2) / u` with `u = ωT/2`.
pub fn gamma_asymptote(profile: &CouplingProfile, ell: usize, omega: f64) -> Result<f64> {
    if !matches!(profile.kind(), ProfileKind::Boxcar) {
        return Err(Error::UnsupportedProfile(profile.name()));
    }
    if ell < 2 {
        return Err(Error::validation("ell", format!("order must be at least 2, got {ell}")));
    }
    let u = 0.5 * omega * profile.duration();
    if u == 0.0 {
        return Err(Error::Domain("asymptote undefined at ω = 0".into()));
    }
    let n = (ell - 1) as i32;
    Ok(profile.area() * 0.5f64.powi(n) * (u + f64::from(n) * FRAC_PI_2).sin() / u)
}
