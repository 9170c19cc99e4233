//! The Chern-Simons-Dirac functional on the lattice, its gradient and Hessian,
//! the constrained linearization, the critical-point solver, the adiabatic
//! classifier and the quantitative fixed-point step.
//!
//! A configuration is `(psi, A_0 + i w)` with `w` a real 1-form on forward links.
//! The Chern-Simons part pairs `w` with curvature through a cup product:
//! the dual curvature on the link `(s, mu)` is read off the plaquette transverse
//! to `mu` at `s + mu`. With this pairing the functional is exactly invariant
//! under small gauge transformations on the lattice.

pub mod classify;
pub mod solver;
pub mod taubes;

pub use classify::*;
pub use solver::*;
pub use taubes::*;

use crate::exec;
use crate::lattice::{self, GaugeField, Lattice, OneForm, Poisson, SpinorField};
use crate::spectral::OperatorHandle;
use crate::spinor::Spinor;
use crate::{Complex64 as C, Error, Result};

const I: C = C::new(0.0, 1.0);

/// `(psi, w)` at deformation `delta`; `w` is measured from the reference connection.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub phi: SpinorField,
    pub a: OneForm,
    pub delta: f64,
}

impl Configuration {
    pub fn reducible(lat: &Lattice, delta: f64) -> Self {
        Configuration { phi: SpinorField::zeros(lat), a: OneForm::zeros(lat), delta }
    }
}

/// A tangent vector `(psi_dot, w_dot)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub phi: SpinorField,
    pub a: OneForm,
}

/// Everything fixed across evaluations at one `(lattice, A_0, delta)`.
pub struct SwContext {
    pub lat: Lattice,
    pub reference: GaugeField,
    pub delta: f64,
    f0: Vec<[f64; 3]>,
    poisson: Poisson,
}

impl SwContext {
    pub fn new(lat: Lattice, reference: GaugeField, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Invalid(format!("delta must be positive, got {delta}")));
        }
        if reference.n != lat.n {
            return Err(Error::LatticeMismatch(format!("gauge {:?} vs lattice {:?}", reference.n, lat.n)));
        }
        let curv = lattice::curvature(&lat, &reference)?;
        let f0 = exec::build(lat.sites(), |s| {
            [
                curv.f_xy[lat.fwd(s, 0)],
                -curv.f_ty[lat.fwd(s, 1)],
                curv.f_tx[lat.fwd(s, 2)],
            ]
        });
        let poisson = Poisson::new(&lat, delta);
        Ok(SwContext { lat, reference, delta, f0, poisson })
    }

    /// Form weights of the `g_delta` metric.
    pub fn form_weights(&self) -> [f64; 3] {
        [self.delta * self.delta, 1.0, 1.0]
    }

    pub fn dv(&self) -> f64 {
        self.lat.dv(self.delta)
    }

    pub fn poisson(&self) -> &Poisson {
        &self.poisson
    }

    pub fn gauge(&self, a: &OneForm) -> GaugeField {
        self.reference.perturbed(&self.lat, a)
    }

    fn check(&self, c: &Configuration) -> Result<()> {
        if c.phi.n != self.lat.n || c.a.n != self.lat.n {
            return Err(Error::LatticeMismatch("configuration does not live on the context lattice".into()));
        }
        if (c.delta - self.delta).abs() > 1e-14 * self.delta {
            return Err(Error::Invalid(format!("configuration delta {} vs context {}", c.delta, self.delta)));
        }
        Ok(())
    }

    pub fn tangent_inner(&self, u: &Tangent, v: &Tangent) -> f64 {
        u.phi.inner(&v.phi, self.dv()).re + u.a.inner(&v.a, &self.lat, self.delta)
    }

    pub fn tangent_norm(&self, u: &Tangent) -> f64 {
        self.tangent_inner(u, u).sqrt()
    }

    /// Real layout `[alpha.re, alpha.im, beta.re, beta.im]` per site, then `w` per site.
    pub fn pack(&self, t: &Tangent) -> Vec<f64> {
        let mut out = Vec::with_capacity(7 * self.lat.sites());
        for p in &t.phi.data {
            out.extend_from_slice(&[p.alpha.re, p.alpha.im, p.beta.re, p.beta.im]);
        }
        for w in &t.a.data {
            out.extend_from_slice(w);
        }
        out
    }

    pub fn unpack(&self, x: &[f64]) -> Tangent {
        let n = self.lat.sites();
        let phi = (0..n)
            .map(|s| {
                let v = &x[4 * s..4 * s + 4];
                Spinor::new(C::new(v[0], v[1]), C::new(v[2], v[3]))
            })
            .collect();
        let a = (0..n).map(|s| [x[4 * n + 3 * s], x[4 * n + 3 * s + 1], x[4 * n + 3 * s + 2]]).collect();
        Tangent { phi: SpinorField { n: self.lat.n, data: phi }, a: OneForm { n: self.lat.n, data: a } }
    }

    /// Metric weights matching [`SwContext::pack`].
    pub fn weights(&self) -> Vec<f64> {
        let n = self.lat.sites();
        let dv = self.dv();
        let wt = self.form_weights();
        let mut out = vec![dv; 4 * n];
        for _ in 0..n {
            out.extend(wt.iter().map(|w| dv * w));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Lattice curl and the cup product

/// Forward lattice curl, component `mu` dual to the plaquette transverse to `mu`.
pub fn curl(lat: &Lattice, w: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let h = lat.h;
    exec::build(lat.sites(), |s| {
        let d = |m: usize, dir: usize| (w[lat.fwd(s, dir)][m] - w[s][m]) / h[dir];
        [d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)]
    })
}

/// Transpose of [`curl`] under the plain sum pairing.
pub fn curl_transpose(lat: &Lattice, v: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let h = lat.h;
    exec::build(lat.sites(), |r| {
        let d = |m: usize, dir: usize| (v[lat.bwd(r, dir)][m] - v[r][m]) / h[dir];
        [d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)]
    })
}

/// Cup-product operator `(M w)_mu(s) = (curl w)_mu(s + mu)`.
pub fn cup(lat: &Lattice, w: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let c = curl(lat, w);
    exec::build(lat.sites(), |s| [0, 1, 2].map(|m| c[lat.fwd(s, m)][m]))
}

pub fn cup_transpose(lat: &Lattice, u: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let v: Vec<[f64; 3]> = exec::build(lat.sites(), |s| [0, 1, 2].map(|m| u[lat.bwd(s, m)][m]));
    curl_transpose(lat, &v)
}

/// `(M + M^T) / 2`.
pub fn cup_sym(lat: &Lattice, w: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let a = cup(lat, w);
    let b = cup_transpose(lat, w);
    exec::build(lat.sites(), |s| [0, 1, 2].map(|m| 0.5 * (a[s][m] + b[s][m])))
}

// ---------------------------------------------------------------------------
// Link products and currents

/// `[U_t (conj p.a q.a' - conj p.b q.b'), U_x conj p.a q.b(s+x), U_y conj p.a q.b(s+y)]`.
fn link_products(lat: &Lattice, g: &GaugeField, p: &[Spinor], q: &[Spinor]) -> Vec<[C; 3]> {
    exec::build(lat.sites(), |s| {
        let (ft, fx, fy) = (lat.fwd(s, 0), lat.fwd(s, 1), lat.fwd(s, 2));
        let u = g.links[s];
        let pa = p[s].alpha.conj();
        [
            u[0] * (pa * q[ft].alpha - p[s].beta.conj() * q[ft].beta),
            u[1] * pa * q[fx].beta,
            u[2] * pa * q[fy].beta,
        ]
    })
}

/// Derivative of the Dirac energy with respect to `w` on each link.
fn currents(ctx: &SwContext, prod: &[[C; 3]]) -> Vec<[f64; 3]> {
    let dv = ctx.dv();
    let d = ctx.delta;
    exec::build(prod.len(), |s| {
        let x = prod[s];
        [-0.5 * dv * d * x[0].re, -dv * x[1].im, -dv * x[2].re]
    })
}

/// The exact lattice currents `J(psi)`.
pub fn spinor_currents(ctx: &SwContext, c: &Configuration) -> Result<Vec<[f64; 3]>> {
    ctx.check(c)?;
    let g = ctx.gauge(&c.a);
    Ok(currents(ctx, &link_products(&ctx.lat, &g, &c.phi.data, &c.phi.data)))
}

// ---------------------------------------------------------------------------
// Functional and gradient

/// Chern-Simons-Dirac value `1/2 <psi, D psi>_delta - sum w.(f0 + M w / 2) dv_1`.
pub fn sw_functional(ctx: &SwContext, c: &Configuration) -> Result<f64> {
    ctx.check(c)?;
    let lat = &ctx.lat;
    let g = ctx.gauge(&c.a);
    let dpsi = lattice::apply_dirac(lat, ctx.delta, &g, &c.phi)?;
    let dirac = 0.5 * ctx.dv() * exec::sum(lat.sites(), |s| c.phi.data[s].inner(&dpsi.data[s]).re);
    let m = cup(lat, &c.a.data);
    let w = &c.a.data;
    let cs = exec::sum(lat.sites(), |s| (0..3).map(|k| w[s][k] * (ctx.f0[s][k] + 0.5 * m[s][k])).sum::<f64>());
    Ok(dirac - lat.dv1() * cs)
}

/// `g_delta` gradient. With `constrained` the form slot is Coulomb projected.
pub fn sw_gradient(ctx: &SwContext, c: &Configuration, constrained: bool) -> Result<Tangent> {
    ctx.check(c)?;
    let lat = &ctx.lat;
    let g = ctx.gauge(&c.a);
    let phi = lattice::apply_dirac(lat, ctx.delta, &g, &c.phi)?;
    let j = currents(ctx, &link_products(lat, &g, &c.phi.data, &c.phi.data));
    let ms = cup_sym(lat, &c.a.data);
    let dv1 = lat.dv1();
    let scale = ctx.form_weights().map(|w| 1.0 / (ctx.dv() * w));
    let data = exec::build(lat.sites(), |s| [0, 1, 2].map(|m| (j[s][m] - dv1 * (ctx.f0[s][m] + ms[s][m])) * scale[m]));
    let mut a = OneForm { n: lat.n, data };
    if constrained {
        a = lattice::coulomb_project_with(lat, &ctx.poisson, &a, ctx.delta)?;
    }
    Ok(Tangent { phi, a })
}

/// `g_delta` norm of the unconstrained gradient: both Dirac-block equations and
/// the three curvature equations at once.
pub fn sw_residual(ctx: &SwContext, c: &Configuration) -> Result<f64> {
    Ok(ctx.tangent_norm(&sw_gradient(ctx, c, false)?))
}

// ---------------------------------------------------------------------------
// Gauge action

/// `psi -> e^{i theta} psi`, `w -> w - d theta`.
pub fn gauge_transform(ctx: &SwContext, c: &Configuration, theta: &[f64]) -> Configuration {
    let gamma: Vec<C> = theta.iter().map(|&t| C::from_polar(1.0, t)).collect();
    Configuration {
        phi: c.phi.gauge(&gamma),
        a: c.a.axpy(-1.0, &lattice::grad(&ctx.lat, theta)),
        delta: c.delta,
    }
}

/// The gauge-equivalent configuration with `d*_delta w = 0`.
pub fn coulomb_gauge(ctx: &SwContext, c: &Configuration) -> Configuration {
    let div = lattice::codifferential(&ctx.lat, &c.a, ctx.delta);
    let theta = ctx.poisson.solve(&div);
    gauge_transform(ctx, c, &theta)
}

// ---------------------------------------------------------------------------
// Hessian

/// `(d/dw D)[w_dot] psi`, without the factor structure of `D` beyond the links.
fn dirac_link_variation(ctx: &SwContext, g: &GaugeField, wd: &[[f64; 3]], psi: &[Spinor]) -> Vec<Spinor> {
    let lat = &ctx.lat;
    let d = ctx.delta;
    exec::build(lat.sites(), |s| {
        let (ft, bt) = (lat.fwd(s, 0), lat.bwd(s, 0));
        let (fx, bx) = (lat.fwd(s, 1), lat.bwd(s, 1));
        let (fy, by) = (lat.fwd(s, 2), lat.bwd(s, 2));
        let l = &g.links;
        let zf = wd[s][0] * l[s][0];
        let zb = wd[bt][0] * l[bt][0].conj();
        let za = -0.5 * d * (zf * psi[ft].alpha + zb * psi[bt].alpha);
        let zb_ = 0.5 * d * (zf * psi[ft].beta + zb * psi[bt].beta);
        let tb = I * wd[s][1] * l[s][1] * psi[fx].beta - wd[s][2] * l[s][2] * psi[fy].beta;
        let ta = -I * wd[bx][1] * l[bx][1].conj() * psi[bx].alpha - wd[by][2] * l[by][2].conj() * psi[by].alpha;
        Spinor::new(za + tb, zb_ + ta)
    })
}

/// Which curl pairing the form block of the Hessian uses.
#[derive(Debug, Clone, Copy, PartialEq)]
enum FormBlock {
    /// `(M + M^T)/2`: the true second derivative.
    Symmetric,
    /// `M`: the first-order operator from links to dual links.
    Cup,
    CupTranspose,
}

/// Frozen data for repeated Hessian applications at one configuration.
pub struct HessianAt<'a> {
    ctx: &'a SwContext,
    g: GaugeField,
    psi: Vec<Spinor>,
    prod: Vec<[C; 3]>,
}

impl<'a> HessianAt<'a> {
    pub fn new(ctx: &'a SwContext, c: &Configuration) -> Result<Self> {
        ctx.check(c)?;
        let g = ctx.gauge(&c.a);
        let prod = link_products(&ctx.lat, &g, &c.phi.data, &c.phi.data);
        Ok(HessianAt { ctx, g, psi: c.phi.data.clone(), prod })
    }

    /// Derivative of [`sw_gradient`] (unconstrained) in the direction `t`.
    pub fn apply(&self, t: &Tangent) -> Tangent {
        self.apply_with(t, FormBlock::Symmetric)
    }

    fn apply_with(&self, t: &Tangent, block: FormBlock) -> Tangent {
        let ctx = self.ctx;
        let lat = &ctx.lat;
        let dpsi = lattice::apply_dirac(lat, ctx.delta, &self.g, &t.phi).expect("shapes fixed at construction");
        let var = dirac_link_variation(ctx, &self.g, &t.a.data, &self.psi);
        let phi = SpinorField { n: lat.n, data: exec::build(lat.sites(), |s| dpsi.data[s] + var[s]) };

        let p1 = link_products(lat, &self.g, &t.phi.data, &self.psi);
        let p2 = link_products(lat, &self.g, &self.psi, &t.phi.data);
        let both: Vec<[C; 3]> = exec::build(lat.sites(), |s| [0, 1, 2].map(|m| p1[s][m] + p2[s][m]));
        let jlin = currents(ctx, &both);
        let ms = match block {
            FormBlock::Symmetric => cup_sym(lat, &t.a.data),
            FormBlock::Cup => cup(lat, &t.a.data),
            FormBlock::CupTranspose => cup_transpose(lat, &t.a.data),
        };
        let (dv, dv1, d, h) = (ctx.dv(), lat.dv1(), ctx.delta, lat.h);
        let scale = ctx.form_weights().map(|w| 1.0 / (dv * w));
        let wd = &t.a.data;
        let data = exec::build(lat.sites(), |s| {
            let x = self.prod[s];
            let dj = [
                0.5 * dv * d * h[0] * wd[s][0] * x[0].im,
                -dv * h[1] * wd[s][1] * x[1].re,
                dv * h[2] * wd[s][2] * x[2].im,
            ];
            [0, 1, 2].map(|m| (jlin[s][m] + dj[m] - dv1 * ms[s][m]) * scale[m])
        });
        Tangent { phi, a: OneForm { n: lat.n, data } }
    }
}

// ---------------------------------------------------------------------------
// Constrained linearization

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationOptions {
    /// When `psi` vanishes, project out the constant direction `(0, i)` instead
    /// of the (degenerate) orbit direction. Off by default: unless `(0, i)` spans
    /// an invariant subspace this creates a spurious kernel.
    pub orbit_fallback: bool,
    /// Also remove constant 1-forms from the form slot.
    pub remove_harmonic: bool,
}

impl Default for LinearizationOptions {
    fn default() -> Self {
        LinearizationOptions { orbit_fallback: false, remove_harmonic: false }
    }
}

/// The slice projection: spinor orthogonal to the orbit direction, form Coulomb.
pub struct SliceProjection<'a> {
    ctx: &'a SwContext,
    orbit: Option<SpinorField>,
    remove_harmonic: bool,
}

impl<'a> SliceProjection<'a> {
    pub fn new(ctx: &'a SwContext, c: &Configuration, opts: LinearizationOptions) -> Self {
        let dv = ctx.dv();
        let scale = ctx.lat.volume(ctx.delta).sqrt();
        let dir = if c.phi.norm(dv) > 1e-14 * scale {
            Some(c.phi.scale(I))
        } else if opts.orbit_fallback {
            Some(SpinorField::constant(&ctx.lat, Spinor::new(C::new(0.0, 0.0), I)))
        } else {
            None
        };
        let orbit = dir.map(|o| {
            let n = o.norm(dv);
            o.scale(C::new(1.0 / n, 0.0))
        });
        SliceProjection { ctx, orbit, remove_harmonic: opts.remove_harmonic }
    }

    pub fn apply(&self, t: &Tangent) -> Tangent {
        let ctx = self.ctx;
        let mut phi = t.phi.clone();
        if let Some(o) = &self.orbit {
            let c = phi.inner(o, ctx.dv()).re;
            phi = phi.axpy(C::new(-c, 0.0), o);
        }
        let div = lattice::codifferential(&ctx.lat, &t.a, ctx.delta);
        let mut a = t.a.axpy(-1.0, &lattice::grad(&ctx.lat, &ctx.poisson.solve(&div)));
        if self.remove_harmonic {
            a = lattice::remove_harmonic(&a);
        }
        Tangent { phi, a }
    }
}

/// `Pi H Pi + sigma (1 - Pi)` as a self-adjoint handle on the packed real space,
/// where `Pi` is the [`SliceProjection`] at `c`. `sigma` lifts the complement
/// above the spectrum of interest.
pub fn linearization<'a>(ctx: &'a SwContext, c: &Configuration, opts: LinearizationOptions) -> Result<OperatorHandle<'a>> {
    let hess = HessianAt::new(ctx, c)?;
    let proj = SliceProjection::new(ctx, c, opts);
    let weights = ctx.weights();
    let probe = OperatorHandle::new("linearization-core", weights.clone(), {
        let hess = &hess;
        let proj = &proj;
        move |x: &[f64]| {
            let pt = proj.apply(&ctx.unpack(x));
            ctx.pack(&proj.apply(&hess.apply(&pt)))
        }
    });
    let sigma = 2.0 * probe.norm_estimate(20, 0x51a) + 1.0;
    drop(probe);
    Ok(OperatorHandle::new("linearization", weights, move |x: &[f64]| {
        let pt = proj.apply(&ctx.unpack(x));
        let mut out = ctx.pack(&proj.apply(&hess.apply(&pt)));
        let px = ctx.pack(&pt);
        for i in 0..out.len() {
            out[i] += sigma * (x[i] - px[i]);
        }
        out
    }))
}

/// `L_1^* L_1` on the slice, plus a large multiple of the complement, where
/// `L_1` is the linearization with the form block built from the cup product
/// `M` instead of its symmetric part.
///
/// The symmetric part `(M + M^T)/2` vanishes on the momentum surface
/// `theta_t + theta_x + theta_y = pi`, a lattice artifact of every gauge
/// invariant cup product; `M` itself is normal with singular values bounded
/// below away from `k = 0`. At a reducible configuration the two blocks
/// decouple and the square roots of the eigenvalues of this handle are the
/// distances from 0 to the spectrum of `L_1`.
pub fn gap_operator<'a>(ctx: &'a SwContext, c: &Configuration, opts: LinearizationOptions) -> Result<OperatorHandle<'a>> {
    let hess = HessianAt::new(ctx, c)?;
    let proj = SliceProjection::new(ctx, c, opts);
    let weights = ctx.weights();
    let normal = move |x: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let pt = proj.apply(&ctx.unpack(x));
        let l = proj.apply(&hess.apply_with(&pt, FormBlock::Cup));
        let ll = proj.apply(&hess.apply_with(&l, FormBlock::CupTranspose));
        (ctx.pack(&ll), ctx.pack(&pt))
    };
    let probe = OperatorHandle::new("gap-core", weights.clone(), |x: &[f64]| normal(x).0);
    let sigma = 2.0 * probe.norm_estimate(20, 0x51a) + 1.0;
    drop(probe);
    Ok(OperatorHandle::new("gap", weights, move |x: &[f64]| {
        let (mut out, px) = normal(x);
        for i in 0..out.len() {
            out[i] += sigma * (x[i] - px[i]);
        }
        out
    })
    .positive())
}
