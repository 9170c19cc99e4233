//! The acceptance suite behind `adiabatic verify`.
//!
//! Each check reports pass/fail together with the measured numbers and its
//! wall time; a check also fails when it exceeds its time budget. `quick`
//! shrinks grids, delta ladders and start counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

use super::{anticommutator_gauge, cell_seed, decoupling_norms, fit_power_law, random_start};
use crate::geometry::{anisotropic_deform, boothby_wang_invariants, ricci_matrix, trace3, BundleSpec, MacInvariants};
use crate::lattice::{self, GaugeField, Lattice, LatticeSpec, OneForm, SpinorField};
use crate::spectral;
use crate::spinor::{self, CoframeVector, Mat2, Spinor};
use crate::sw::{self, ClassifierInput, Classification, Configuration, LinearizationOptions, SolverParams, SwContext};
use crate::{Complex64 as C, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {} ({:.2}s / {:.0}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.budget_seconds,
            self.detail
        )
    }
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn timed(id: u32, name: &str, budget: f64, f: impl FnOnce() -> Result<Verdict>) -> CheckOutcome {
    let t = Instant::now();
    let v = f().unwrap_or_else(|e| verdict(false, format!("error: {e}")));
    let seconds = t.elapsed().as_secs_f64();
    let over = seconds > budget;
    CheckOutcome {
        id,
        name: name.into(),
        passed: v.passed && !over,
        detail: if over { format!("{} [over time budget]", v.detail) } else { v.detail },
        seconds,
        budget_seconds: budget,
    }
}

/// Runs the ten checks in order.
pub fn run(quick: bool, seed: u64) -> Vec<CheckOutcome> {
    vec![
        timed(1, "exact algebra", 1.0, || exact_algebra(seed)),
        timed(2, "operator identities", 30.0, || operator_identities(quick, seed)),
        timed(3, "anticommutator convergence", 120.0, || anticommutator(seed)),
        timed(4, "chern quantization and pairing", 60.0, || chern(seed)),
        timed(5, "dbar kernel dimensions", 120.0, kernel_dims),
        timed(6, "gap exponent", 600.0, || gap_exponent(quick)),
        timed(7, "decoupling", 900.0, || decoupling(quick, seed)),
        timed(8, "reducible stability", 1200.0, || stability(quick, seed)),
        timed(9, "classifier golden table", 1.0, classifier),
        timed(10, "taubes step", 1.0, taubes),
    ]
}

fn random_spinor(rng: &mut ChaCha8Rng) -> Spinor {
    let mut c = || C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    Spinor::new(c(), c())
}

fn conj_by(g: &Mat2, m: &Mat2) -> Mat2 {
    spinor::matmul(&spinor::matmul(g, m), &spinor::adjoint(g))
}

fn exact_algebra(seed: u64) -> Result<Verdict> {
    let mut worst = 0.0f64;
    let id: Mat2 = [[C::new(1.0, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(1.0, 0.0)]];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = (spinor::clifford(&CoframeVector::basis(i)), spinor::clifford(&CoframeVector::basis(j)));
            let s = spinor::matmul(&a, &b);
            let t = spinor::matmul(&b, &a);
            let want = if i == j { -2.0 } else { 0.0 };
            let mut sum = [[C::new(0.0, 0.0); 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    sum[r][c] = s[r][c] + t[r][c] - id[r][c] * want;
                }
            }
            worst = worst.max(spinor::max_abs_diff(&sum, &[[C::new(0.0, 0.0); 2]; 2]));
        }
    }
    let clifford = worst;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tau = 0.0f64;
    for _ in 0..200 {
        let phi = random_spinor(&mut rng);
        let t = spinor::tau(&phi);
        tau = tau.max((t[0][0] + t[1][1]).norm());
        tau = tau.max(spinor::max_abs_diff(&t, &spinor::adjoint(&t)));
        tau = tau.max(spinor::max_abs_diff(&t, &spinor::tau_via_frame(&phi)));
        let mut q = [0.0; 4].map(|_| rng.gen_range(-1.0..1.0));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.iter_mut().for_each(|x| *x /= n);
        let g = spinor::quaternion(q);
        tau = tau.max(spinor::max_abs_diff(&spinor::tau(&spinor::apply(&g, &phi)), &conj_by(&g, &t)));
        let u = phi.scale(C::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)));
        tau = tau.max(spinor::max_abs_diff(&spinor::tau(&u), &t));
    }
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
    let mut geo = 0.0f64;
    for ell in -3..=3 {
        for &delta in &[0.5, 1.0, 2.0, 8.0] {
            for &sigma in &[-1.0, 0.0, 0.7] {
                let b = BundleSpec::new(ell, 1, delta, 0)?;
                let inv = boothby_wang_invariants(&b, sigma)?;
                let l = ell as f64;
                geo = geo.max(inv.identity_defect());
                geo = geo.max(rel(inv.lambda, -l / delta)).max(rel(inv.varphi, l / delta)).max(inv.b.abs());
                geo = geo.max(rel(inv.kappa, sigma - 3.0 * l * l / (delta * delta)));
                geo = geo.max(rel(inv.scal, 2.0 * (sigma - l * l / (delta * delta))));
                geo = geo.max(rel(trace3(&ricci_matrix(&inv)), inv.scal));
                let base = boothby_wang_invariants(&b.with_delta(1.0), sigma)?;
                let deformed = anisotropic_deform(&base, delta)?;
                geo = geo.max(max_inv_diff(&deformed, &inv));
                let twice = anisotropic_deform(&anisotropic_deform(&base, 2.0)?, delta / 2.0)?;
                geo = geo.max(max_inv_diff(&twice, &inv));
            }
        }
    }
    let ok = clifford <= 1e-12 && tau <= 1e-12 && geo <= 1e-12;
    Ok(verdict(ok, format!("clifford {clifford:.1e}, tau {tau:.1e}, geometry {geo:.1e}")))
}

fn max_inv_diff(a: &MacInvariants, b: &MacInvariants) -> f64 {
    let rel = |x: f64, y: f64| (x - y).abs() / (1.0 + x.abs().max(y.abs()));
    [
        rel(a.lambda, b.lambda),
        rel(a.varphi, b.varphi),
        rel(a.b, b.b),
        rel(a.sigma, b.sigma),
        rel(a.kappa, b.kappa),
        rel(a.scal, b.scal),
        rel(a.delta, b.delta),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn smooth_gauge(lat: &Lattice, seed: u64) -> GaugeField {
    lattice::reference_gauge(lat).perturbed(lat, &OneForm::smooth_random(lat, seed, 2, 0.3))
}

fn rel_diff(a: &SpinorField, b: &SpinorField, dv: f64) -> f64 {
    a.axpy(C::new(-1.0, 0.0), b).norm(dv) / b.norm(dv).max(1e-300)
}

fn operator_identities(quick: bool, seed: u64) -> Result<Verdict> {
    let sizes: &[usize] = if quick { &[8] } else { &[8, 16] };
    let delta = 3.0;
    let (mut split, mut fixed, mut adj, mut lin, mut cov) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &n in sizes {
        let spec = LatticeSpec { l_degree: 1, ..LatticeSpec::cube(n, 1, delta) };
        let lat = lattice::build_lattice(&spec)?;
        let g = smooth_gauge(&lat, seed);
        let dv = lat.dv(delta);
        let phi = SpinorField::random(&lat, cell_seed(seed, &[n as u64, 1]));
        let psi = SpinorField::random(&lat, cell_seed(seed, &[n as u64, 2]));
        let d = lattice::apply_dirac(&lat, delta, &g, &phi)?;
        let z = lattice::apply_z(&lat, &g, &phi)?;
        let t = lattice::apply_t(&lat, &g, &phi)?;
        let composed = z.scale(C::new(delta, 0.0)).axpy(C::new(1.0, 0.0), &t).axpy(C::new(0.5 * lat.lambda_delta(delta), 0.0), &phi);
        split = split.max(rel_diff(&d, &composed, dv));
        type Apply = fn(&Lattice, &GaugeField, &SpinorField) -> Result<SpinorField>;
        for op in [lattice::apply_z as Apply, lattice::apply_t] {
            let a = op(&lat, &g, &phi)?.inner(&psi, dv);
            let b = phi.inner(&op(&lat, &g, &psi)?, dv);
            adj = adj.max((a - b).norm() / (phi.norm(dv) * psi.norm(dv)));
        }
        let a = d.inner(&psi, dv);
        let b = phi.inner(&lattice::apply_dirac(&lat, delta, &g, &psi)?, dv);
        adj = adj.max((a - b).norm() / (phi.norm(dv) * psi.norm(dv)));

        let flat_lat = lattice::build_lattice(&LatticeSpec::cube(n, 1, delta))?;
        let flat = lattice::flat_connection(&flat_lat, 0, &[0.0, 0.0])?;
        let phi0 = SpinorField::constant(&flat_lat, Spinor::new(C::new(0.0, 0.0), C::new(1.3, 0.0)));
        let d0 = lattice::apply_dirac(&flat_lat, delta, &flat, &phi0)?;
        fixed = fixed.max(rel_diff(&d0, &phi0.scale(C::new(0.5 * flat_lat.lambda_delta(delta), 0.0)), flat_lat.dv(delta)));

        let ctx = SwContext::new(flat_lat.clone(), lattice::flat_connection(&flat_lat, 0, &[0.25, 0.5])?, delta)?;
        let c = Configuration { phi: phi0.clone(), a: OneForm::zeros(&ctx.lat), delta };
        let op = sw::linearization(&ctx, &c, LinearizationOptions::default())?;
        let x = spectral::random_vector(op.dim(), cell_seed(seed, &[n as u64, 3]));
        let y = spectral::random_vector(op.dim(), cell_seed(seed, &[n as u64, 4]));
        lin = lin.max(op.symmetry_defect(&x, &y));

        let theta = OneForm::smooth_random(&lat, cell_seed(seed, &[n as u64, 5]), 2, 1.0);
        let gamma: Vec<C> = theta.data.iter().map(|v| C::from_polar(1.0, v[0] + 2.0 * v[1])).collect();
        let lhs = lattice::apply_dirac(&lat, delta, &g.transform(&lat, &gamma), &phi.gauge(&gamma))?;
        let rhs = d.gauge(&gamma);
        cov = cov.max(rel_diff(&lhs, &rhs, dv));
    }
    let ok = split <= 1e-13 && fixed <= 1e-13 && adj <= 1e-11 && lin <= 1e-11 && cov <= 1e-12;
    Ok(verdict(
        ok,
        format!("split {split:.1e}, D phi0 {fixed:.1e}, adjoint {adj:.1e}, linearization {lin:.1e}, covariance {cov:.1e}"),
    ))
}

fn anticommutator(seed: u64) -> Result<Verdict> {
    let mut r = Vec::new();
    for n in [8usize, 16, 32] {
        let (lat, g) = anticommutator_gauge(&LatticeSpec::cube(n, 1, 1.0), 1, seed)?;
        r.push(lattice::anticommutator_residual(&lat, &g, 3, cell_seed(seed, &[1]))?);
    }
    let ratios = [r[1] / r[0], r[2] / r[1]];
    let ok = ratios.iter().all(|&q| q <= 0.6);
    Ok(verdict(ok, format!("residuals {:.3e} {:.3e} {:.3e}, ratios {:.3} {:.3}", r[0], r[1], r[2], ratios[0], ratios[1])))
}

fn chern(seed: u64) -> Result<Verdict> {
    let mut flux_ok = true;
    for d in -3..=3i64 {
        let lat = lattice::build_lattice(&LatticeSpec { l_degree: d, ..LatticeSpec::cube(8, 1, 1.0) })?;
        let g = lattice::reference_gauge(&lat);
        let theta = OneForm::smooth_random(&lat, cell_seed(seed, &[d as u64]), 2, 1.0);
        let gamma: Vec<C> = theta.data.iter().map(|v| C::from_polar(1.0, v[1])).collect();
        let moved = g.transform(&lat, &gamma).perturbed(&lat, &OneForm::smooth_random(&lat, seed, 1, 0.05));
        for field in [&g, &moved] {
            flux_ok &= lattice::chern_pairing(&lat, field)?.0 == d;
        }
    }
    // Pairing identity at solutions: int eta ^ c1(A) = (1/4 pi) int (|alpha|^2 - |beta|^2).
    let n = 8;
    let delta = 4.0;
    let (ctx, _) = spectral::gap_configuration(&BundleSpec::new(1, 1, delta, 0)?, [n; 3], delta)?;
    let h = ctx.lat.h_min();
    let mut worst = 0.0f64;
    for k in 0..3 {
        let start = random_start(&ctx, cell_seed(seed, &[40, k]), 0.2);
        let out = sw::find_critical_point(&ctx, &start, &SolverParams::default())?;
        let (_, lhs) = lattice::chern_pairing(&ctx.lat, &ctx.gauge(&out.config.a))?;
        let rhs = out.config.phi.data.iter().map(|p| p.alpha.norm_sqr() - p.beta.norm_sqr()).sum::<f64>() * ctx.lat.dv1()
            / (4.0 * PI);
        worst = worst.max((lhs - rhs).abs());
    }
    let ok = flux_ok && worst <= h;
    Ok(verdict(ok, format!("integer flux exact: {flux_ok}; pairing defect {worst:.2e} (h = {h:.3})")))
}

fn kernel_dims() -> Result<Verdict> {
    let mut got = Vec::new();
    for d in -2..=2i64 {
        got.push(spectral::dbar_kernel_dimension(12, d, if d == 0 { Some([0.5, 0.5]) } else { None })?);
    }
    let trivial = spectral::dbar_kernel_dimension(12, 0, None)?;
    let ok = got == [0, 0, 0, 1, 2] && trivial == 1;
    Ok(verdict(ok, format!("dims {got:?}, trivial flat {trivial}")))
}

fn gap_exponent(quick: bool) -> Result<Verdict> {
    let b = BundleSpec::new(1, 1, 1.0, 0)?;
    let (sizes, deltas): (&[usize], &[f64]) = if quick { (&[6, 8], &[4.0, 8.0, 16.0]) } else { (&[8, 16], &[4.0, 8.0, 16.0, 32.0]) };
    let mut exps = Vec::new();
    let mut detail = Vec::new();
    let mut ok = true;
    for &n in sizes {
        let rows = spectral::gap_sweep(&b, deltas, [n; 3])?;
        let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.z.map(|z| (r.delta, z))).collect();
        if pts.len() != deltas.len() {
            return Ok(verdict(false, format!("gap missing on {n}^3: {:?}", rows.iter().map(|r| &r.error).collect::<Vec<_>>())));
        }
        let f = fit_power_law(&pts, None)?;
        ok &= (-1.15..=-0.85).contains(&f.exponent) && f.r2 >= 0.98;
        detail.push(format!("{n}^3: exponent {:.4} R^2 {:.5}", f.exponent, f.r2));
        exps.push(f.exponent);
    }
    let drift = (exps[1] - exps[0]).abs() / exps[0].abs();
    ok &= drift <= 0.05;
    Ok(verdict(ok, format!("{}; refinement drift {drift:.2e}", detail.join("; "))))
}

fn solve_params() -> SolverParams {
    SolverParams { tol: 1e-10, ..SolverParams::default() }
}

fn decoupling(quick: bool, seed: u64) -> Result<Verdict> {
    let (n, deltas): (usize, &[f64]) = if quick { (6, &[4.0, 8.0, 16.0]) } else { (8, &[4.0, 8.0, 16.0, 32.0]) };
    let mut tn = Vec::new();
    let mut ab = Vec::new();
    for (i, &delta) in deltas.iter().enumerate() {
        let b = BundleSpec::new(2, 1, delta, 1)?;
        let (ctx, _) = spectral::gap_configuration(&b, [n; 3], delta)?;
        let start = random_start(&ctx, cell_seed(seed, &[70, i as u64]), 0.1);
        let out = sw::find_critical_point(&ctx, &start, &solve_params())?;
        let (t, a) = decoupling_norms(&ctx, &out.config)?;
        tn.push((delta, t));
        ab.push((delta, a));
    }
    let judge = |pts: &[(f64, f64)]| -> (bool, String) {
        let max = pts.iter().map(|p| p.1).fold(0.0, f64::max);
        if max < 1e-8 {
            return (true, format!("reducible, max {max:.1e}"));
        }
        match fit_power_law(pts, None) {
            Ok(f) => (f.exponent <= -1.3, format!("exponent {:.3}", f.exponent)),
            Err(e) => (false, e.to_string()),
        }
    };
    let (ok_t, dt) = judge(&tn);
    let (ok_a, da) = judge(&ab);
    Ok(verdict(ok_t && ok_a, format!("|T_A phi|: {dt}; |alpha||beta|: {da}")))
}

fn stability(quick: bool, seed: u64) -> Result<Verdict> {
    let (n, starts) = if quick { (6, 4) } else { (8, 20) };
    let delta = 16.0;
    let b = BundleSpec::new(3, 1, delta, 1)?;
    let (ctx, _) = spectral::gap_configuration(&b, [n; 3], delta)?;
    let scale = ctx.lat.volume(delta).sqrt();
    let outs = crate::exec::map_jobs((0..starts as u64).collect(), |i| {
        let start = random_start(&ctx, cell_seed(seed, &[80, i]), 0.5);
        sw::find_critical_point(&ctx, &start, &SolverParams::default())
    });
    let mut reducible = 0;
    let mut worst = 0.0f64;
    let mut failures = 0;
    for o in outs {
        match o {
            Ok(o) => {
                let v = o.config.phi.norm(ctx.dv()) / scale;
                worst = worst.max(v);
                reducible += (v < 1e-6) as usize;
            }
            Err(_) => failures += 1,
        }
    }
    Ok(verdict(
        reducible == starts,
        format!("{reducible}/{starts} reducible, {failures} solver failures, max |psi|/sqrt(vol) {worst:.1e}"),
    ))
}

fn classifier() -> Result<Verdict> {
    let a = sw::classify_adiabatic(&ClassifierInput::new(2, 5, true, 2))?;
    let b = sw::classify_adiabatic(&ClassifierInput::new(1, 3, true, 1))?;
    let c = sw::classify_adiabatic(&ClassifierInput::new(2, 4, true, 3))?;
    let d = sw::classify_adiabatic(&ClassifierInput::not_pullback(2, 5))?;
    let ok = matches!(a, Classification::ReducibleOnly { .. })
        && sw::stable_range(2, 5) == vec![2, 3]
        && matches!(b, Classification::ReducibleOnly { .. })
        && matches!(c, Classification::ReduciblePlusUniqueIrreducible { beta_norm_sq, .. } if beta_norm_sq == 2.0)
        && d == Classification::Empty;
    Ok(verdict(ok, format!("(2,5,2) {a:?}; (1,3,1) {b:?}; (2,4,3) {c:?}; not pullback {d:?}")))
}

fn taubes() -> Result<Verdict> {
    use sw::{taubes_radius, taubes_solve, ScalarQuadratic, TaubesProblem};
    let zero = taubes_radius(&TaubesProblem { mu: 1.0, kappa: 1.0, eps0: 0.0 })?;
    let bad = taubes_radius(&TaubesProblem { mu: 1.0, kappa: 0.25, eps0: 0.5 })?;
    let one = taubes_radius(&TaubesProblem { mu: 1.0, kappa: 1.0, eps0: 0.125 })?;
    let want = (1.0 - 0.5f64.sqrt()) / 4.0;
    let toy_p = TaubesProblem { mu: 1.0, kappa: 0.1, eps0: 0.01 };
    let toy = taubes_solve(&ScalarQuadratic { mu: 1.0, c: 0.01, kappa: 0.1 }, &toy_p, 1, 1e-14, 100)?;
    let lin = taubes_solve(&ScalarQuadratic { mu: 2.0, c: 0.3, kappa: 0.0 }, &TaubesProblem { mu: 2.0, kappa: 0.0, eps0: 0.3 }, 1, 1e-14, 10)?;
    let ok = zero.admissible
        && zero.r == 0.0
        && !bad.admissible
        && one.admissible
        && (one.r - want).abs() <= 1e-12
        && toy.y[0].abs() <= toy.radius
        && lin.iterations == 1;
    Ok(verdict(
        ok,
        format!("r(q=1, eps0=1/8) = {:.6}, toy root {:.6} within {:.6}, linear steps {}", one.r, toy.y[0], toy.radius, lin.iterations),
    ))
}
