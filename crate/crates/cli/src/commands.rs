use std::f64::consts::PI;
use std::path::Path;

use anyhow::Result;
use clap::{Args, Subcommand};
use serde::Serialize;
use serde_json::json;

use protmeas_core::config::{self, PointerConfig, ProfileConfig};
use protmeas_core::oracle::{self, PropagateOptions};
use protmeas_core::output::{fmt12, Table};
use protmeas_core::perturbation::{self, DysonRequest, DEFAULT_NODES};
use protmeas_core::scaling::{self, DEFAULT_X_MAX, DEFAULT_X_MIN};
use protmeas_core::{CouplingProfile, ProfileKind, SystemModel};

use crate::{usage, Context, Format, Report};

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analytic and quadrature Fourier transform of a coupling profile.
    Ft(FtArgs),
    /// Transition probability `|O_mn|² |g̃(x)|²` against `x = ωT`.
    Scan(ScanArgs),
    /// Envelope exponents and peak widths of the built-in profiles.
    Table1(Table1Args),
    /// Order-resolved Dyson amplitudes.
    Dyson(DysonArgs),
    /// Exact propagation over the pointer momentum grid.
    Oracle(OracleArgs),
    /// Pointer shifts of several profiles against the second-order band.
    Pointer(PointerArgs),
    /// Time-ordered integrals of `g` against `G^ℓ/ℓ!`.
    Identity(IdentityArgs),
}

impl Command {
    pub fn run(&self, ctx: &Context) -> Result<Report> {
        match self {
            Command::Ft(a) => ft(ctx, a),
            Command::Scan(a) => scan(ctx, a),
            Command::Table1(a) => table1(ctx, a),
            Command::Dyson(a) => dyson(ctx, a),
            Command::Oracle(a) => run_oracle(ctx, a),
            Command::Pointer(a) => pointer(ctx, a),
            Command::Identity(a) => identity(ctx, a),
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct ProfileArgs {
    /// Profile name (boxcar, trapezoid, triangle, raised-cosine) or a TOML/CSV file.
    #[arg(long)]
    profile: Option<String>,
    /// Interaction duration.
    #[arg(long = "T", value_name = "T")]
    duration: Option<f64>,
    #[arg(long)]
    turn_on_fraction: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FtArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Smallest `x = ωT`.
    #[arg(long, default_value_t = 0.0)]
    x_min: f64,
    #[arg(long, default_value_t = 20.0 * PI)]
    x_max: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Comma-separated profile names.
    #[arg(long, value_delimiter = ',')]
    profiles: Option<Vec<String>>,
    #[arg(long)]
    turn_on_fraction: Option<f64>,
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// System file; the weight becomes `|⟨m|O|n⟩|²`.
    #[arg(long)]
    system: Option<std::path::PathBuf>,
    /// Final level for the weight; defaults to the first level other than the initial one.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args, Debug)]
pub struct Table1Args {
    /// Lower edge of the envelope fit window in `x = ωT`.
    #[arg(long)]
    xmin: Option<f64>,
    #[arg(long)]
    xmax: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    profiles: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct DysonArgs {
    #[arg(long)]
    system: Option<std::path::PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long)]
    order: Option<usize>,
    /// Pointer momentum at which the series is summed.
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    system: Option<std::path::PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Pointer momentum grid size.
    #[arg(long)]
    grid: Option<usize>,
    /// Initial step count before doubling.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PointerArgs {
    #[arg(long)]
    system: Option<std::path::PathBuf>,
    #[arg(long = "T", value_name = "T")]
    duration: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    profiles: Option<Vec<String>>,
    #[arg(long)]
    turn_on_fraction: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args, Debug)]
pub struct IdentityArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Highest order checked.
    #[arg(long, default_value_t = 6)]
    order: usize,
}

const DEFAULT_PROFILES: [&str; 3] = ["boxcar", "triangle", "raised-cosine"];

fn kind(name: &str, turn_on_fraction: Option<f64>) -> Result<ProfileKind> {
    if name.trim().eq_ignore_ascii_case("trapezoid") {
        let f = turn_on_fraction.ok_or_else(|| usage("trapezoid needs --turn-on-fraction"))?;
        // Validates the fraction.
        let p = CouplingProfile::trapezoid(1.0, f)?;
        return Ok(p.kind().clone());
    }
    Ok(ProfileKind::from_name(name)?)
}

fn profile_list(flag: &Option<Vec<String>>, ctx: &Context) -> Vec<String> {
    flag.clone()
        .or_else(|| ctx.config.scan.as_ref().and_then(|s| s.profiles.clone()))
        .unwrap_or_else(|| DEFAULT_PROFILES.iter().map(|s| s.to_string()).collect())
}

fn looks_like_file(spec: &str) -> bool {
    let p = Path::new(spec);
    p.exists() || matches!(p.extension().and_then(|e| e.to_str()), Some("toml" | "csv"))
}

impl Context {
    fn profile(&self, args: &ProfileArgs) -> Result<CouplingProfile> {
        let from_config = self.config.profile.clone();
        match &args.profile {
            Some(spec) if looks_like_file(spec) => {
                let path = Path::new(spec);
                let p = if path.extension().and_then(|e| e.to_str()) == Some("csv") {
                    CouplingProfile::from_csv(path)?
                } else {
                    config::load_profile(path)?
                };
                Ok(match args.duration {
                    Some(t) => p.with_duration(t)?,
                    None => p,
                })
            }
            Some(name) => {
                let t = args
                    .duration
                    .or(from_config.and_then(|c| c.duration))
                    .ok_or_else(|| usage("a duration is required (--T or profile.T)"))?;
                let mut c = ProfileConfig::named(name, t);
                c.turn_on_fraction = args.turn_on_fraction;
                Ok(c.build(None)?)
            }
            None => {
                let mut c = from_config.ok_or_else(|| usage("no profile given (--profile or a [profile] table)"))?;
                if args.duration.is_some() {
                    c.duration = args.duration;
                }
                if args.turn_on_fraction.is_some() {
                    c.turn_on_fraction = args.turn_on_fraction;
                }
                Ok(c.build(self.config_dir.as_deref())?)
            }
        }
    }

    fn system(&self, path: &Option<std::path::PathBuf>) -> Result<SystemModel> {
        let s = match (path, &self.config.system) {
            (Some(p), _) => config::load_system(p)?,
            (None, Some(c)) => c.build()?,
            (None, None) => return Err(usage("no system given (--system or a [system] table)")),
        };
        for w in s.warnings() {
            eprintln!("warning: {w}");
        }
        Ok(s)
    }

    fn pointer_config(&self, grid: Option<usize>) -> PointerConfig {
        let mut c = self.config.pointer.clone().unwrap_or_default();
        if let Some(g) = grid {
            c.grid_size = g;
        }
        c
    }

    fn propagate_options(&self, steps: Option<usize>, tolerance: Option<f64>) -> Result<PropagateOptions> {
        let cfg = self.config.oracle.clone().unwrap_or_default();
        let mut opts = PropagateOptions {
            steps: steps.or(cfg.steps),
            ..Default::default()
        };
        if let Some(t) = tolerance.or(cfg.tolerance) {
            if !(t.is_finite() && t > 0.0) {
                return Err(usage(format!("tolerance must be positive, got {t}")));
            }
            opts.tolerance = t;
        }
        Ok(opts)
    }
}

fn report(name: &'static str, table: Table, json: serde_json::Value) -> Report {
    Report {
        name,
        table,
        json,
        notes: Vec::new(),
        always: Vec::new(),
        passed: true,
    }
}

fn ft(ctx: &Context, args: &FtArgs) -> Result<Report> {
    let p = ctx.profile(&args.profile)?;
    if args.points < 2 || args.x_min.is_nan() || args.x_max.is_nan() || args.x_min >= args.x_max {
        return Err(usage("need --points >= 2 and --x-min < --x-max"));
    }
    let t = p.duration();
    #[derive(Serialize)]
    struct Row {
        x: f64,
        omega: f64,
        analytic: Option<f64>,
        numeric: f64,
    }
    let mut rows = Vec::with_capacity(args.points);
    for i in 0..args.points {
        let x = args.x_min + (args.x_max - args.x_min) * i as f64 / (args.points - 1) as f64;
        let omega = x / t;
        rows.push(Row {
            x,
            omega,
            analytic: p.fourier_transform(omega).ok(),
            numeric: p.numeric_fourier_transform(omega)?,
        });
    }
    let mut table = Table::new(["x", "omega", "analytic", "numeric"]);
    for r in &rows {
        table.push(vec![
            fmt12(r.x),
            fmt12(r.omega),
            r.analytic.map(fmt12).unwrap_or_default(),
            fmt12(r.numeric),
        ]);
    }
    let json = json!({
        "profile": p.name(),
        "duration": t,
        "area": p.area(),
        "rows": rows,
    });
    Ok(report("ft", table, json))
}

fn scan(ctx: &Context, args: &ScanArgs) -> Result<Report> {
    let cfg = ctx.config.scan.clone().unwrap_or_default();
    let names = profile_list(&args.profiles, ctx);
    let lo = args.x_min.or(cfg.x_min).unwrap_or(0.0);
    let hi = args.x_max.or(cfg.x_max).unwrap_or(DEFAULT_X_MAX);
    let points = args.points.or(cfg.points).unwrap_or(2000);
    let weight = if args.system.is_some() || ctx.config.system.is_some() {
        let s = ctx.system(&args.system)?;
        let n = s.initial_level();
        let m = args.m.unwrap_or(if n == 0 { 1 } else { 0 });
        if m >= s.dimension() || m == n {
            return Err(usage(format!(
                "--m must be a level other than {n} below {}",
                s.dimension()
            )));
        }
        s.element(m, n).norm_sqr()
    } else {
        cfg.weight.unwrap_or(1.0)
    };
    let mut table = Table::new(["profile", "x", "probability", "antinode"]);
    let mut scans = Vec::new();
    for name in &names {
        let s = scaling::probability_scan(&kind(name, args.turn_on_fraction)?, weight, (lo, hi), points)?;
        let antinodes: Vec<f64> = s.envelope.iter().map(|e| e.0).collect();
        for &(x, y) in &s.samples {
            table.push(vec![
                s.profile.clone(),
                fmt12(x),
                fmt12(y),
                antinodes.contains(&x).to_string(),
            ]);
        }
        scans.push(s);
    }
    let mut r = report("scan", table, json!({ "scans": scans }));
    for s in &scans {
        let fit = match s.fit {
            Some(f) => format!("beta {} ± {}", fmt12(f.beta), fmt12(f.stderr)),
            None => "beta unavailable".into(),
        };
        r.notes.push(format!("# {}: {fit}, fwhm {}", s.profile, fmt12(s.fwhm)));
    }
    Ok(r)
}

fn table1(ctx: &Context, args: &Table1Args) -> Result<Report> {
    let cfg = ctx.config.scan.clone().unwrap_or_default();
    let kinds = profile_list(&args.profiles, ctx)
        .iter()
        .map(|n| kind(n, None))
        .collect::<Result<Vec<_>>>()?;
    let x_min = args.xmin.or(cfg.x_min).unwrap_or(DEFAULT_X_MIN);
    let x_max = args.xmax.or(cfg.x_max).unwrap_or(DEFAULT_X_MAX);
    let rep = scaling::table1_report(&kinds, x_min, x_max)?;
    let mut r = report("table1", rep.table(), serde_json::to_value(&rep)?);
    r.always = vec![Format::Json, Format::Text];
    r.passed = rep.all_pass();
    r.notes.push(format!(
        "# fit window x in [{}, {}]: {}",
        fmt12(x_min),
        fmt12(x_max),
        if r.passed { "all rows pass" } else { "some rows fail" }
    ));
    Ok(r)
}

fn dyson(ctx: &Context, args: &DysonArgs) -> Result<Report> {
    let cfg = ctx.config.dyson.clone().unwrap_or_default();
    let s = ctx.system(&args.system)?;
    let p = ctx.profile(&args.profile)?;
    let order = args.order.or(cfg.max_order).unwrap_or(4);
    let a = args.a.or(cfg.a).unwrap_or(1.0);
    let nodes = args.nodes.or(cfg.nodes).unwrap_or(DEFAULT_NODES);
    let t = perturbation::dyson_table(&DysonRequest::new(&s, &p, order).momentum(a).nodes(nodes))?;
    let rows = t.rows();
    let mut table = Table::new(["order", "m", "re", "im"]);
    for r in &rows {
        table.push(vec![r.order.to_string(), r.m.to_string(), fmt12(r.re), fmt12(r.im)]);
    }
    let total: Vec<[f64; 2]> = t.total().iter().map(|z| [z.re, z.im]).collect();
    let bound = t.truncation_bound(a);
    let json = json!({
        "profile": t.profile,
        "duration": t.duration,
        "area": t.area,
        "max_order": t.max_order,
        "momentum": t.momentum,
        "initial_level": t.initial_level,
        "nodes": t.nodes,
        "error_estimate": t.error_estimate,
        "truncation_bound": bound,
        "total": total,
        "rows": rows,
    });
    let mut r = report("dyson", table, json);
    r.notes.push(format!(
        "# a = {}, quadrature error {}, truncation bound {}",
        fmt12(a),
        fmt12(t.error_estimate),
        fmt12(bound)
    ));
    Ok(r)
}

fn run_oracle(ctx: &Context, args: &OracleArgs) -> Result<Report> {
    let s = ctx.system(&args.system)?;
    let p = ctx.profile(&args.profile)?;
    let ptr = ctx.pointer_config(args.grid).build()?;
    let opts = ctx.propagate_options(args.steps, args.tolerance)?;
    let run = oracle::full_measurement_run(&s, &p, &ptr, opts)?;
    let d = s.dimension();
    let n = s.initial_level();
    let mut header = vec!["a".to_string()];
    header.extend((0..d).map(|m| format!("re_{m}")));
    header.extend((0..d).map(|m| format!("im_{m}")));
    header.push("survival".into());
    let mut table = Table::new(header);
    for (a, c) in run.momenta.iter().zip(&run.amplitudes) {
        let mut row = vec![fmt12(*a)];
        row.extend(c.iter().map(|z| fmt12(z.re)));
        row.extend(c.iter().map(|z| fmt12(z.im)));
        row.push(fmt12(c[n].norm_sqr()));
        table.push(row);
    }
    let json = json!({
        "profile": p.name(),
        "duration": p.duration(),
        "pointer_shift": run.pointer_shift,
        "density_shift": run.density_shift,
        "distortion": run.distortion,
        "pointer_variance": run.pointer_variance,
        "disturbance": run.disturbance,
        "purity": run.purity,
        "convergence": run.convergence,
        "steps": run.steps,
    });
    let mut r = report("oracle", table, json);
    r.always = vec![Format::Csv, Format::Json];
    r.notes.push(format!(
        "# pointer_shift {}, disturbance {}, purity {}, convergence {}",
        fmt12(run.pointer_shift),
        fmt12(run.disturbance),
        fmt12(run.purity),
        fmt12(run.convergence)
    ));
    Ok(r)
}

fn pointer(ctx: &Context, args: &PointerArgs) -> Result<Report> {
    let s = ctx.system(&args.system)?;
    let from_config = ctx.config.profile.clone();
    let t = args
        .duration
        .or(from_config.as_ref().and_then(|c| c.duration))
        .ok_or_else(|| usage("a duration is required (--T or profile.T)"))?;
    let area = from_config.as_ref().and_then(|c| c.area);
    let profiles = profile_list(&args.profiles, ctx)
        .iter()
        .map(|name| {
            let mut c = ProfileConfig::named(name, t);
            c.turn_on_fraction = args.turn_on_fraction;
            c.area = area;
            Ok(c.build(None)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let ptr = ctx.pointer_config(args.grid).build()?;
    let opts = ctx.propagate_options(args.steps, args.tolerance)?;
    let rep = scaling::pointer_comparison(&s, &profiles, &ptr, opts)?;
    let mut r = report("pointer", rep.table(), serde_json::to_value(&rep)?);
    r.passed = rep.agree;
    r.notes.push(format!(
        "# T = {}: correction band {}, spread {} ({})",
        fmt12(rep.duration),
        fmt12(rep.band),
        fmt12(rep.spread),
        if rep.agree { "agree" } else { "disagree" }
    ));
    Ok(r)
}

fn identity(ctx: &Context, args: &IdentityArgs) -> Result<Report> {
    let profiles = if args.profile.profile.is_some() || ctx.config.profile.is_some() {
        vec![ctx.profile(&args.profile)?]
    } else {
        let t = args.profile.duration.unwrap_or(1.0);
        vec![
            CouplingProfile::boxcar(t)?,
            CouplingProfile::trapezoid(t, args.profile.turn_on_fraction.unwrap_or(0.2))?,
            CouplingProfile::triangle(t)?,
            CouplingProfile::raised_cosine(t)?,
        ]
    };
    #[derive(Serialize)]
    struct Row {
        profile: &'static str,
        order: usize,
        value: f64,
        expected: f64,
        error: f64,
    }
    let mut rows = Vec::new();
    let mut table = Table::new(["profile", "order", "value", "expected", "error"]);
    for p in &profiles {
        let mut factorial = 1.0;
        for ell in 1..=args.order {
            factorial *= ell as f64;
            let value = perturbation::nested_integral_identity(p, ell)?;
            let expected = p.area().powi(ell as i32) / factorial;
            let row = Row {
                profile: p.name(),
                order: ell,
                value,
                expected,
                error: (value - expected).abs(),
            };
            table.push(vec![
                row.profile.into(),
                ell.to_string(),
                fmt12(value),
                fmt12(expected),
                fmt12(row.error),
            ]);
            rows.push(row);
        }
    }
    let worst = rows.iter().map(|r| r.error / r.expected).fold(0.0, f64::max);
    let mut r = report("identity", table, json!({ "rows": rows, "max_relative_error": worst }));
    r.passed = worst <= 1e-9;
    r.notes.push(format!("# largest relative error {}", fmt12(worst)));
    Ok(r)
}
