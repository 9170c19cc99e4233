//! Delta sweeps and grid-refinement studies, power-law fits, reports, single
//! solver and spectrum jobs, and the self-check suite used by the command line tool.
//!
//! Reports are long-format tables: one row per measured value. Everything that
//! depends on the machine or the clock lives in [`Metadata`], so two runs of the
//! same plan give identical JSON once that block is dropped.

mod jobs;
pub mod verify;

pub use jobs::*;

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::geometry::BundleSpec;
use crate::lattice::{self, LatticeSpec, OneForm, SpinorField};
use crate::spectral;
use crate::sw::{self, ClassifierInput, Configuration, SolverParams, SwContext};
use crate::{exec, Complex64 as C, Error, Result};

pub const SCHEMA: u32 = 1;

pub const DEFAULT_DELTAS: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    GapSweep,
    ResidualScaling,
    DecouplingScaling,
    ClassifierTable,
    AnticommutatorConvergence,
    ReducibleStability,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::GapSweep,
        Experiment::ResidualScaling,
        Experiment::DecouplingScaling,
        Experiment::ClassifierTable,
        Experiment::AnticommutatorConvergence,
        Experiment::ReducibleStability,
    ];

    /// Machine-readable tag naming the claim a row measures.
    pub fn provenance(self) -> &'static str {
        match self {
            Experiment::GapSweep => "adiabatic.gap: dist(0, spec L) at the flat reducible ~ 1/delta",
            Experiment::ResidualScaling => "adiabatic.residual: gradient norm at the reference configuration",
            Experiment::DecouplingScaling => "adiabatic.decoupling: |T_A phi| and |alpha||beta| ~ delta^(-3/2)",
            Experiment::ClassifierTable => "adiabatic.classification: solutions by torsion class",
            Experiment::AnticommutatorConvergence => "lattice.anticommutator: {Z_A, T} identity under refinement",
            Experiment::ReducibleStability => "adiabatic.stability: stable classes carry only reducibles",
        }
    }
}

fn default_deltas() -> Vec<f64> {
    DEFAULT_DELTAS.to_vec()
}

fn default_grids() -> Vec<LatticeSpec> {
    vec![LatticeSpec::cube(16, 0, 1.0)]
}

fn default_starts() -> usize {
    20
}

fn default_amplitude() -> f64 {
    0.5
}

/// A sweep over `deltas x grids` for each listed experiment.
///
/// Only the grid sizes of `grids` are used; `ell` comes from the bundle and
/// `delta` from the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub bundle: BundleSpec,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_grids")]
    pub grids: Vec<LatticeSpec>,
    #[serde(default)]
    pub experiments: Vec<Experiment>,
    #[serde(default)]
    pub seed: u64,
    /// Random starts per cell for `reducible_stability`.
    #[serde(default = "default_starts")]
    pub starts: usize,
    /// Amplitude of random starts.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Inclusive delta range of the fits; by default everything above the smallest delta.
    #[serde(default)]
    pub fit_range: Option<[f64; 2]>,
    #[serde(default)]
    pub solver: SolverParams,
}

impl SweepPlan {
    pub fn new(bundle: BundleSpec, experiments: Vec<Experiment>) -> Self {
        SweepPlan {
            bundle,
            deltas: default_deltas(),
            grids: default_grids(),
            experiments,
            seed: 0,
            starts: default_starts(),
            amplitude: default_amplitude(),
            fit_range: None,
            solver: SolverParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bundle.validate()?;
        if self.deltas.is_empty() {
            return Err(Error::Invalid("sweep needs at least one delta".into()));
        }
        if self.deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) || self.deltas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(format!("deltas must be positive and strictly ascending, got {:?}", self.deltas)));
        }
        let needs_grid = self.experiments.iter().any(|e| *e != Experiment::ClassifierTable);
        if needs_grid && self.grids.is_empty() {
            return Err(Error::Invalid("sweep needs at least one grid".into()));
        }
        if let Some(g) = self.grids.iter().find(|g| g.n_fiber < 4 || g.n_x < 4 || g.n_y < 4) {
            return Err(Error::Invalid(format!("grid sizes must be >= 4, got {g:?}")));
        }
        if self.starts == 0 || !(self.amplitude > 0.0) {
            return Err(Error::Invalid("need starts >= 1 and amplitude > 0".into()));
        }
        if let Some([lo, hi]) = self.fit_range {
            if !(lo < hi) {
                return Err(Error::Invalid(format!("empty fit range [{lo}, {hi}]")));
            }
        }
        self.solver.validate()
    }

    pub fn fit_range(&self) -> [f64; 2] {
        self.fit_range.unwrap_or_else(|| {
            let lo = if self.deltas.len() > 1 { self.deltas[1] } else { self.deltas[0] };
            [lo, *self.deltas.last().unwrap()]
        })
    }
}

/// One measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: Experiment,
    pub grid: Option<String>,
    pub delta: Option<f64>,
    /// Torsion class, random-start number or gauge-field number, by experiment.
    pub index: Option<i64>,
    pub quantity: String,
    pub value: Option<f64>,
    pub label: Option<String>,
    pub provenance: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub experiment: Experiment,
    pub grid: Option<String>,
    pub quantity: String,
    pub exponent: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    pub delta_min: f64,
    pub delta_max: f64,
    pub points: usize,
    pub provenance: String,
    pub error: Option<String>,
}

/// A pass/fail property evaluated on the rows of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub experiment: Experiment,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub experiment: Experiment,
    pub grid: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub threads: usize,
    pub parallel: bool,
    pub os: String,
    pub arch: String,
    pub timings: Vec<CellTiming>,
}

impl Metadata {
    fn start() -> Self {
        Metadata {
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_seconds: 0.0,
            threads: exec::threads(),
            parallel: cfg!(feature = "parallel"),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            timings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: u32,
    pub plan: SweepPlan,
    pub rows: Vec<Row>,
    pub fits: Vec<FitRow>,
    pub checks: Vec<CheckRow>,
    pub metadata: Metadata,
}

impl SweepReport {
    /// The report without its metadata block; identical across runs of one plan.
    pub fn results_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("metadata");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
    pub range: [f64; 2],
    pub points: usize,
}

/// Least-squares fit of `log y = exponent log x + intercept` over the points
/// with `x` in `range` (inclusive).
pub fn fit_power_law(points: &[(f64, f64)], range: Option<[f64; 2]>) -> Result<PowerFit> {
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::Invalid(format!("power-law fit needs positive finite data, got {p:?}")));
    }
    let inside = |x: f64| match range {
        Some([lo, hi]) => x >= lo * (1.0 - 1e-12) && x <= hi * (1.0 + 1e-12),
        None => true,
    };
    let logs: Vec<(f64, f64)> = points.iter().filter(|(x, _)| inside(*x)).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 3 {
        return Err(Error::Invalid(format!("power-law fit needs >= 3 points in range, got {}", logs.len())));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("power-law fit needs at least two distinct x".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss_res: f64 = logs.iter().map(|p| (p.1 - intercept - exponent * p.0).powi(2)).sum();
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if ss_tot <= 1e-300 { 1.0 } else { 1.0 - ss_res / ss_tot };
    let xs = points.iter().map(|p| p.0).filter(|x| inside(*x));
    let lo = xs.clone().fold(f64::INFINITY, f64::min);
    let hi = xs.fold(f64::NEG_INFINITY, f64::max);
    Ok(PowerFit { exponent, intercept, r2, range: [lo, hi], points: logs.len() })
}

pub fn grid_label(g: &LatticeSpec) -> String {
    format!("{}x{}x{}", g.n_fiber, g.n_x, g.n_y)
}

fn sizes(g: &LatticeSpec) -> [usize; 3] {
    [g.n_fiber, g.n_x, g.n_y]
}

/// Deterministic per-cell seed.
pub fn cell_seed(seed: u64, parts: &[u64]) -> u64 {
    // splitmix64 over the parts
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(p).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// `amp` times independent uniform noise in both slots.
pub fn random_start(ctx: &SwContext, seed: u64, amp: f64) -> Configuration {
    Configuration {
        phi: SpinorField::random(&ctx.lat, seed).scale(C::new(amp, 0.0)),
        a: OneForm::zeros(&ctx.lat).axpy(amp, &OneForm::random(&ctx.lat, cell_seed(seed, &[1]))),
        delta: ctx.delta,
    }
}

/// `|T_A phi|_delta` and `| |alpha| |beta| |_delta` at a configuration.
pub fn decoupling_norms(ctx: &SwContext, c: &Configuration) -> Result<(f64, f64)> {
    let g = ctx.gauge(&c.a);
    let t = lattice::apply_t(&ctx.lat, &g, &c.phi)?;
    let dv = ctx.dv();
    let ab = exec::sum(ctx.lat.sites(), |s| {
        let p = &c.phi.data[s];
        p.alpha.norm_sqr() * p.beta.norm_sqr()
    });
    Ok((t.norm(dv), (ab * dv).sqrt()))
}

struct Sink {
    rows: Vec<Row>,
    fits: Vec<FitRow>,
    checks: Vec<CheckRow>,
    timings: Vec<CellTiming>,
}

impl Sink {
    fn row<E: std::fmt::Display>(
        &mut self,
        e: Experiment,
        grid: Option<&str>,
        delta: Option<f64>,
        index: Option<i64>,
        quantity: &str,
        value: std::result::Result<f64, E>,
    ) {
        let (value, error) = match value {
            Ok(v) => (Some(v), None),
            Err(err) => (None, Some(err.to_string())),
        };
        self.rows.push(Row {
            experiment: e,
            grid: grid.map(str::to_string),
            delta,
            index,
            quantity: quantity.into(),
            value,
            label: None,
            provenance: e.provenance().into(),
            error,
        });
    }

    fn label(&mut self, label: String) {
        if let Some(r) = self.rows.last_mut() {
            r.label = Some(label);
        }
    }

    fn fit(&mut self, e: Experiment, grid: Option<&str>, quantity: &str, points: &[(f64, f64)], range: [f64; 2]) -> Option<PowerFit> {
        let res = fit_power_law(points, Some(range));
        let mut row = FitRow {
            experiment: e,
            grid: grid.map(str::to_string),
            quantity: quantity.into(),
            exponent: None,
            intercept: None,
            r2: None,
            delta_min: range[0],
            delta_max: range[1],
            points: 0,
            provenance: e.provenance().into(),
            error: None,
        };
        let out = match res {
            Ok(f) => {
                row.exponent = Some(f.exponent);
                row.intercept = Some(f.intercept);
                row.r2 = Some(f.r2);
                row.delta_min = f.range[0];
                row.delta_max = f.range[1];
                row.points = f.points;
                Some(f)
            }
            Err(err) => {
                row.error = Some(err.to_string());
                None
            }
        };
        self.fits.push(row);
        out
    }

    fn fit_error(&mut self, e: Experiment, grid: Option<&str>, quantity: &str, range: [f64; 2], why: String) {
        self.fits.push(FitRow {
            experiment: e,
            grid: grid.map(str::to_string),
            quantity: quantity.into(),
            exponent: None,
            intercept: None,
            r2: None,
            delta_min: range[0],
            delta_max: range[1],
            points: 0,
            provenance: e.provenance().into(),
            error: Some(why),
        });
    }

    fn check(&mut self, e: Experiment, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckRow { experiment: e, name: name.into(), passed, detail });
    }
}

/// Runs every experiment of the plan. Failures inside a cell end up in the
/// row's `error` field; only an invalid plan is an error.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    plan.validate()?;
    let t0 = Instant::now();
    let mut meta = Metadata::start();
    let mut sink = Sink { rows: Vec::new(), fits: Vec::new(), checks: Vec::new(), timings: Vec::new() };
    for &e in &plan.experiments {
        match e {
            Experiment::GapSweep => gap_experiment(plan, &mut sink),
            Experiment::ResidualScaling => residual_experiment(plan, &mut sink),
            Experiment::DecouplingScaling => decoupling_experiment(plan, &mut sink),
            Experiment::ClassifierTable => classifier_experiment(plan, &mut sink),
            Experiment::AnticommutatorConvergence => anticommutator_experiment(plan, &mut sink),
            Experiment::ReducibleStability => stability_experiment(plan, &mut sink),
        }
    }
    meta.wall_seconds = t0.elapsed().as_secs_f64();
    meta.timings = sink.timings;
    Ok(SweepReport { schema: SCHEMA, plan: plan.clone(), rows: sink.rows, fits: sink.fits, checks: sink.checks, metadata: meta })
}

fn gap_experiment(plan: &SweepPlan, sink: &mut Sink) {
    let e = Experiment::GapSweep;
    let range = plan.fit_range();
    let mut per_grid: Vec<(String, Vec<Option<f64>>, Option<PowerFit>)> = Vec::new();
    for grid in &plan.grids {
        let label = grid_label(grid);
        let t = Instant::now();
        let zs: Vec<Option<f64>> = match spectral::gap_sweep(&plan.bundle, &plan.deltas, sizes(grid)) {
            Ok(rows) => rows
                .into_iter()
                .map(|r| {
                    let v = r.z.ok_or_else(|| r.error.clone().unwrap_or_else(|| "no eigenvalue".into()));
                    sink.row(e, Some(&label), Some(r.delta), None, "z", v);
                    r.z
                })
                .collect(),
            Err(err) => {
                for &d in &plan.deltas {
                    sink.row(e, Some(&label), Some(d), None, "z", Err::<f64, _>(&err));
                }
                vec![None; plan.deltas.len()]
            }
        };
        sink.timings.push(CellTiming { experiment: e, grid: Some(label.clone()), seconds: t.elapsed().as_secs_f64() });
        let pts: Vec<(f64, f64)> = plan.deltas.iter().zip(&zs).filter_map(|(d, z)| z.map(|z| (*d, z))).collect();
        let fit = sink.fit(e, Some(&label), "z", &pts, range);
        match (&fit, plan.bundle.ell) {
            (Some(f), 0) => sink.check(
                e,
                &format!("z independent of delta on {label}"),
                f.exponent.abs() < 0.05,
                format!("exponent {:.4}", f.exponent),
            ),
            (Some(f), _) => sink.check(
                e,
                &format!("z ~ 1/delta on {label}"),
                (-1.15..=-0.85).contains(&f.exponent) && f.r2 >= 0.98,
                format!("exponent {:.4}, R^2 {:.6}", f.exponent, f.r2),
            ),
            (None, _) => sink.check(e, &format!("z fit on {label}"), false, "fit failed".into()),
        }
        per_grid.push((label, zs, fit));
    }
    for w in per_grid.windows(2) {
        let (la, za, fa) = &w[0];
        let (lb, zb, fb) = &w[1];
        let mut worst = 0.0f64;
        for (i, &d) in plan.deltas.iter().enumerate() {
            let v = match (za[i], zb[i]) {
                (Some(a), Some(b)) => Ok((b - a).abs() / b.abs()),
                _ => Err("missing z on one of the grids"),
            };
            if let Ok(x) = v {
                worst = worst.max(x);
            }
            sink.row(e, Some(lb), Some(d), None, "z_relative_change", v);
        }
        sink.check(e, &format!("z changes < 5% from {la} to {lb}"), worst < 0.05, format!("largest change {worst:.3e}"));
        if let (Some(a), Some(b)) = (fa, fb) {
            let rel = (b.exponent - a.exponent).abs() / a.exponent.abs().max(1e-300);
            sink.check(
                e,
                &format!("exponent stable from {la} to {lb}"),
                rel <= 0.05 || (a.exponent.abs() < 0.05 && b.exponent.abs() < 0.05),
                format!("{:.4} -> {:.4}", a.exponent, b.exponent),
            );
        }
    }
}

fn residual_experiment(plan: &SweepPlan, sink: &mut Sink) {
    let e = Experiment::ResidualScaling;
    let range = plan.fit_range();
    for grid in &plan.grids {
        let label = grid_label(grid);
        let t = Instant::now();
        let mut pts = Vec::new();
        let mut zeros = 0;
        for &d in &plan.deltas {
            let r = spectral::gap_configuration(&plan.bundle, sizes(grid), d).and_then(|(ctx, c)| sw::sw_residual(&ctx, &c));
            match &r {
                Ok(v) if *v > 0.0 => pts.push((d, *v)),
                Ok(_) => zeros += 1,
                Err(_) => {}
            }
            sink.row(e, Some(&label), Some(d), None, "residual", r);
        }
        sink.timings.push(CellTiming { experiment: e, grid: Some(label.clone()), seconds: t.elapsed().as_secs_f64() });
        if zeros > 0 && pts.len() < 3 {
            sink.fit_error(
                e,
                Some(&label),
                "residual",
                range,
                format!("residual is exactly zero at {zeros} deltas: the reference configuration is a critical point"),
            );
        } else {
            sink.fit(e, Some(&label), "residual", &pts, range);
        }
    }
}

/// Reference connection for the solver experiments: the flat connection of
/// class `l_n_class` when `ell != 0`, the generic flat product connection otherwise.
fn solver_context(bundle: &BundleSpec, grid: &LatticeSpec, delta: f64) -> Result<SwContext> {
    spectral::gap_configuration(bundle, sizes(grid), delta).map(|(ctx, _)| ctx)
}

fn solver_params(plan: &SweepPlan) -> SolverParams {
    // The decoupling norms are compared against 1e-8; the residual has to sit well below.
    SolverParams { tol: plan.solver.tol.min(1e-10), ..plan.solver }
}

fn decoupling_experiment(plan: &SweepPlan, sink: &mut Sink) {
    let e = Experiment::DecouplingScaling;
    let range = plan.fit_range();
    let params = solver_params(plan);
    for (gi, grid) in plan.grids.iter().enumerate() {
        let label = grid_label(grid);
        let t = Instant::now();
        let mut t_pts = Vec::new();
        let mut ab_pts = Vec::new();
        for (di, &d) in plan.deltas.iter().enumerate() {
            let run = || -> Result<(f64, f64, sw::SolveOutcome)> {
                let ctx = solver_context(&plan.bundle, grid, d)?;
                let start = random_start(&ctx, cell_seed(plan.seed, &[2, gi as u64, di as u64]), plan.amplitude);
                let out = sw::find_critical_point(&ctx, &start, &params)?;
                let (tn, ab) = decoupling_norms(&ctx, &out.config)?;
                Ok((tn, ab, out))
            };
            match run() {
                Ok((tn, ab, out)) => {
                    sink.row(e, Some(&label), Some(d), None, "t_a_phi", Ok::<f64, String>(tn));
                    sink.row(e, Some(&label), Some(d), None, "alpha_beta", Ok::<f64, String>(ab));
                    sink.row(e, Some(&label), Some(d), None, "residual", Ok::<f64, String>(out.residual));
                    sink.row(e, Some(&label), Some(d), None, "iterations", Ok::<f64, String>(out.iterations as f64));
                    sink.label(if out.reducible { "reducible" } else { "irreducible" }.into());
                    t_pts.push((d, tn));
                    ab_pts.push((d, ab));
                }
                Err(err) => {
                    for q in ["t_a_phi", "alpha_beta"] {
                        sink.row(e, Some(&label), Some(d), None, q, Err::<f64, _>(&err));
                    }
                }
            }
        }
        sink.timings.push(CellTiming { experiment: e, grid: Some(label.clone()), seconds: t.elapsed().as_secs_f64() });
        for (q, pts) in [("t_a_phi", &t_pts), ("alpha_beta", &ab_pts)] {
            let complete = pts.len() == plan.deltas.len();
            let tiny = complete && pts.iter().all(|p| p.1 < 1e-8);
            if tiny {
                let worst = pts.iter().map(|p| p.1).fold(0.0, f64::max);
                sink.fit_error(e, Some(&label), q, range, format!("below 1e-8 at every delta (max {worst:.2e}): solutions are reducible"));
                sink.check(e, &format!("{q} on {label}"), true, format!("exactly reducible, max {worst:.2e}"));
                continue;
            }
            let positive: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.1 > 0.0).collect();
            let fit = sink.fit(e, Some(&label), q, &positive, range);
            let (ok, detail) = match fit {
                Some(f) if complete => (f.exponent <= -1.3, format!("exponent {:.3}, R^2 {:.4}", f.exponent, f.r2)),
                Some(f) => (false, format!("exponent {:.3} but some cells failed", f.exponent)),
                None => (false, "fit failed".into()),
            };
            sink.check(e, &format!("{q} on {label}"), ok, detail);
        }
    }
}

fn classifier_experiment(plan: &SweepPlan, sink: &mut Sink) {
    let e = Experiment::ClassifierTable;
    let b = &plan.bundle;
    let ks: Vec<i64> = if b.ell != 0 { (0..b.ell.abs()).collect() } else { (-b.genus..=b.genus).collect() };
    for k in ks {
        let input = if b.is_pullback {
            ClassifierInput::new(b.genus, b.ell, b.ell != 0 || k == 0, k)
        } else {
            ClassifierInput { k, ..ClassifierInput::not_pullback(b.genus, b.ell) }
        };
        match sw::classify_adiabatic(&input) {
            Ok(c) => {
                let count = match &c {
                    sw::Classification::ReducibleTori { count, .. } | sw::Classification::ReducibleOnly { count, .. } => *count as f64,
                    _ => 0.0,
                };
                sink.row(e, None, None, Some(k), "reducible_tori", Ok::<f64, String>(count));
                sink.label(serde_json::to_string(&c).unwrap_or_default());
            }
            Err(err) => sink.row(e, None, None, Some(k), "reducible_tori", Err(err)),
        }
    }
}

/// Smoothly perturbed reference connection on `grid`; the same continuum field on every grid.
pub fn anticommutator_gauge(grid: &LatticeSpec, ell: i64, seed: u64) -> Result<(lattice::Lattice, lattice::GaugeField)> {
    let spec = LatticeSpec { ell, delta: 1.0, l_degree: 0, ..*grid };
    let lat = lattice::build_lattice(&spec)?;
    let w = OneForm::smooth_random(&lat, seed, 1, 0.2);
    let g = lattice::reference_gauge(&lat).perturbed(&lat, &w);
    Ok((lat, g))
}

fn anticommutator_experiment(plan: &SweepPlan, sink: &mut Sink) {
    let e = Experiment::AnticommutatorConvergence;
    let mut grids: Vec<&LatticeSpec> = plan.grids.iter().collect();
    grids.sort_by_key(|g| g.n_fiber * g.n_x * g.n_y);
    for field in 0..2u64 {
        let seed = cell_seed(plan.seed, &[5, field]);
        let mut prev: Option<f64> = None;
        let mut monotone = true;
        for grid in &grids {
            let label = grid_label(grid);
            let t = Instant::now();
            let r = anticommutator_gauge(grid, plan.bundle.ell, seed)
                .and_then(|(lat, g)| lattice::anticommutator_residual(&lat, &g, 3, cell_seed(seed, &[1])));
            sink.timings.push(CellTiming { experiment: e, grid: Some(label.clone()), seconds: t.elapsed().as_secs_f64() });
            match (&r, prev) {
                (Ok(v), Some(p)) => {
                    monotone &= *v < p;
                    let v = *v;
                    sink.row(e, Some(&label), None, Some(field as i64), "residual", r);
                    sink.row(e, Some(&label), None, Some(field as i64), "ratio_to_coarser", Ok::<f64, String>(v / p));
                    prev = Some(v);
                }
                (Ok(v), None) => {
                    prev = Some(*v);
                    sink.row(e, Some(&label), None, Some(field as i64), "residual", r);
                }
                (Err(_), _) => {
                    monotone = false;
                    sink.row(e, Some(&label), None, Some(field as i64), "residual", r);
                }
            }
        }
        sink.check(e, &format!("monotone refinement, gauge field {field}"), monotone, format!("{} grids", grids.len()));
    }
}

fn stability_experiment(plan: &SweepPlan, sink: &mut Sink) {
    let e = Experiment::ReducibleStability;
    let params = plan.solver;
    for (gi, grid) in plan.grids.iter().enumerate() {
        let label = grid_label(grid);
        for (di, &d) in plan.deltas.iter().enumerate() {
            let t = Instant::now();
            let ctx = match solver_context(&plan.bundle, grid, d) {
                Ok(c) => c,
                Err(err) => {
                    sink.row(e, Some(&label), Some(d), None, "psi_norm", Err(err));
                    continue;
                }
            };
            let scale = ctx.lat.volume(d).sqrt();
            let starts: Vec<usize> = (0..plan.starts).collect();
            let outcomes = exec::map_jobs(starts, |i| {
                let start = random_start(&ctx, cell_seed(plan.seed, &[6, gi as u64, di as u64, i as u64]), plan.amplitude);
                sw::find_critical_point(&ctx, &start, &params)
            });
            let mut reducible = 0;
            for (i, out) in outcomes.into_iter().enumerate() {
                match out {
                    Ok(o) => {
                        let v = o.config.phi.norm(ctx.dv()) / scale;
                        sink.row(e, Some(&label), Some(d), Some(i as i64), "psi_norm", Ok::<f64, String>(v));
                        sink.label(if o.reducible { "reducible" } else { "irreducible" }.into());
                        reducible += o.reducible as usize;
                    }
                    Err(err) => sink.row(e, Some(&label), Some(d), Some(i as i64), "psi_norm", Err(err)),
                }
            }
            sink.timings.push(CellTiming { experiment: e, grid: Some(label.clone()), seconds: t.elapsed().as_secs_f64() });
            sink.check(
                e,
                &format!("all starts reducible on {label} at delta {d}"),
                reducible == plan.starts,
                format!("{reducible}/{} reducible", plan.starts),
            );
        }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?)
}

/// Writes serializable records as CSV with LF line endings.
pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `sweep_report.json` plus `rows.csv`, `fits.csv` and `checks.csv` in `dir`.
pub fn write_report(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let json = dir.join("sweep_report.json");
    std::fs::write(&json, serde_json::to_string_pretty(report)? + "\n")?;
    let rows = dir.join("rows.csv");
    write_csv(&rows, &report.rows)?;
    let fits = dir.join("fits.csv");
    write_csv(&fits, &report.fits)?;
    let checks = dir.join("checks.csv");
    write_csv(&checks, &report.checks)?;
    Ok(vec![json, rows, fits, checks])
}

pub fn load_plan(path: &Path) -> Result<SweepPlan> {
    let plan: SweepPlan = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    plan.validate()?;
    Ok(plan)
}
