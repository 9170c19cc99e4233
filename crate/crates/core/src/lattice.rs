//! Discretization of the circle bundle `N_ell` over the flat square torus of
//! area `pi` as a periodic grid, with compact U(1) link variables.
//!
//! Sites are indexed `t + n_t (x + n_x y)` (fiber direction fastest). Fields
//! are stored as plain periodic arrays; the bundle twist lives in the links of
//! the reference connection: the `y` links that wrap around carry the phase
//! `exp(-2 pi i d x / a)` for base degree `d`, which is the transition function
//! of the twisted boundary condition.
//!
//! Stencils:
//! - fiber derivative: centered, `(U psi(s+t) - U^* psi(s-t)) / 2h_t`, anti-Hermitian;
//! - `B = nabla_x + i nabla_y` with forward differences, and its exact matrix adjoint;
//! - `Z = diag(i nabla_t, -i nabla_t)`, `T = [[0, B], [B^*, 0]]`,
//!   `D_delta = delta Z + T + lambda_delta / 2`.

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::exec;
use crate::geometry::{boothby_wang_invariants, BundleSpec};
use crate::spinor::Spinor;
use crate::{Error, Result};

/// Length of the fiber in the reference metric.
pub const FIBER_LENGTH: f64 = 2.0 * PI;

/// Side length of the square base torus (area `pi`).
pub fn base_side() -> f64 {
    PI.sqrt()
}

const I: C = C::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub n_fiber: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub ell: i64,
    pub delta: f64,
    /// Degree of `L` through the base carried by the reference connection.
    pub l_degree: i64,
}

impl LatticeSpec {
    pub fn cube(n: usize, ell: i64, delta: f64) -> Self {
        LatticeSpec { n_fiber: n, n_x: n, n_y: n, ell, delta, l_degree: 0 }
    }
}

/// Index maps and spacings for a validated [`LatticeSpec`].
#[derive(Debug, Clone)]
pub struct Lattice {
    pub spec: LatticeSpec,
    /// Grid sizes `[n_t, n_x, n_y]`.
    pub n: [usize; 3],
    /// Spacings `[h_t, h_x, h_y]`.
    pub h: [f64; 3],
    fwd: Vec<[u32; 3]>,
    bwd: Vec<[u32; 3]>,
}

pub fn build_lattice(spec: &LatticeSpec) -> Result<Lattice> {
    let n = [spec.n_fiber, spec.n_x, spec.n_y];
    if n.iter().any(|&k| k < 4) {
        return Err(Error::Invalid(format!("grid sizes must be >= 4, got {n:?}")));
    }
    build_unchecked(spec)
}

/// A single-slice lattice (`n_fiber = 1`) for operators that only act along the base.
pub fn build_base_lattice(n_x: usize, n_y: usize, l_degree: i64) -> Result<Lattice> {
    if n_x < 4 || n_y < 4 {
        return Err(Error::Invalid(format!("base grid must be at least 4x4, got {n_x}x{n_y}")));
    }
    build_unchecked(&LatticeSpec { n_fiber: 1, n_x, n_y, ell: 0, delta: 1.0, l_degree })
}

fn build_unchecked(spec: &LatticeSpec) -> Result<Lattice> {
    let n = [spec.n_fiber, spec.n_x, spec.n_y];
    if !(spec.delta > 0.0) || !spec.delta.is_finite() {
        return Err(Error::Invalid(format!("delta must be positive, got {}", spec.delta)));
    }
    // The reference plaquette angle is -2 pi d / (n_x n_y); it has to stay
    // strictly inside the principal branch for the flux to be recoverable.
    let quanta = (spec.n_x * spec.n_y) as i64;
    if 2 * spec.l_degree.abs() >= quanta {
        return Err(Error::Invalid(format!(
            "flux {} is not representable with {} base plaquettes",
            spec.l_degree, quanta
        )));
    }
    let a = base_side();
    let h = [FIBER_LENGTH / n[0] as f64, a / n[1] as f64, a / n[2] as f64];
    let sites = n[0] * n[1] * n[2];
    let mut fwd = vec![[0u32; 3]; sites];
    let mut bwd = vec![[0u32; 3]; sites];
    for y in 0..n[2] {
        for x in 0..n[1] {
            for t in 0..n[0] {
                let s = t + n[0] * (x + n[1] * y);
                let id = |t: usize, x: usize, y: usize| (t + n[0] * (x + n[1] * y)) as u32;
                fwd[s] = [
                    id((t + 1) % n[0], x, y),
                    id(t, (x + 1) % n[1], y),
                    id(t, x, (y + 1) % n[2]),
                ];
                bwd[s] = [
                    id((t + n[0] - 1) % n[0], x, y),
                    id(t, (x + n[1] - 1) % n[1], y),
                    id(t, x, (y + n[2] - 1) % n[2]),
                ];
            }
        }
    }
    let lat = Lattice { spec: *spec, n, h, fwd, bwd };
    let defect = lat.cocycle_defect(&reference_gauge(&lat));
    if defect > 1e-9 {
        return Err(Error::Invalid(format!("twist cocycle fails by {defect:e}")));
    }
    Ok(lat)
}

impl Lattice {
    pub fn sites(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    #[inline]
    pub fn fwd(&self, s: usize, mu: usize) -> usize {
        self.fwd[s][mu] as usize
    }

    #[inline]
    pub fn bwd(&self, s: usize, mu: usize) -> usize {
        self.bwd[s][mu] as usize
    }

    pub fn coords(&self, s: usize) -> [usize; 3] {
        let t = s % self.n[0];
        let r = s / self.n[0];
        [t, r % self.n[1], r / self.n[1]]
    }

    pub fn index(&self, t: usize, x: usize, y: usize) -> usize {
        t + self.n[0] * (x + self.n[1] * y)
    }

    /// Reference-metric volume per site.
    pub fn dv1(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    /// `g_delta` volume per site: the fiber is shortened by `1/delta`.
    pub fn dv(&self, delta: f64) -> f64 {
        self.dv1() / delta
    }

    pub fn volume(&self, delta: f64) -> f64 {
        self.dv(delta) * self.sites() as f64
    }

    /// Finest spacing.
    pub fn h_min(&self) -> f64 {
        self.h.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `lambda_delta` of the Boothby-Wang structure, taken from the geometry kernel.
    pub fn lambda_delta(&self, delta: f64) -> f64 {
        let b = BundleSpec::new(self.spec.ell, 1, delta, 0).expect("validated delta");
        boothby_wang_invariants(&b, 0.0).expect("validated spec").lambda
    }

    /// Reference `lambda` (undeformed metric).
    pub fn lambda_ref(&self) -> f64 {
        self.lambda_delta(1.0)
    }

    /// Largest deviation from 1 of the product of plaquettes around the
    /// boundary of every elementary cube. Exact cocycle data gives 0.
    pub fn cocycle_defect(&self, g: &GaugeField) -> f64 {
        exec::max(self.sites(), |s| {
            // The six faces of the cube at s, each oriented outward, multiply to 1.
            let p = |s: usize, mu: usize, nu: usize| plaquette(self, g, s, mu, nu);
            let prod = p(self.fwd(s, 0), 1, 2)
                * p(s, 1, 2).conj()
                * p(self.fwd(s, 1), 2, 0)
                * p(s, 2, 0).conj()
                * p(self.fwd(s, 2), 0, 1)
                * p(s, 0, 1).conj();
            (prod - C::new(1.0, 0.0)).norm()
        })
    }
}

/// How the stored base connection was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaseConnection {
    /// Constant-curvature reference connection of base degree `l_degree`.
    Reference { l_degree: i64 },
    /// Flat connection with fiber holonomy `exp(2 pi i k / ell)` and base holonomies.
    Flat { k: i64, hol: Vec<f64> },
    /// Anything else (perturbed or gauge transformed).
    Custom,
}

/// Compact U(1) link variables, one per forward edge `[t, x, y]` of each site.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeField {
    pub n: [usize; 3],
    pub links: Vec<[C; 3]>,
    pub base: BaseConnection,
}

impl GaugeField {
    pub fn max_modulus_defect(&self) -> f64 {
        exec::max(self.links.len(), |s| {
            self.links[s].iter().map(|u| (u.norm() - 1.0).abs()).fold(0.0, f64::max)
        })
    }

    /// `U_mu(s) exp(i h_mu w_mu(s))`: the connection `A + i w`.
    pub fn perturbed(&self, lat: &Lattice, w: &OneForm) -> GaugeField {
        let links = exec::build(lat.sites(), |s| {
            let mut l = self.links[s];
            for mu in 0..3 {
                l[mu] *= C::from_polar(1.0, lat.h[mu] * w.data[s][mu]);
            }
            l
        });
        GaugeField { n: self.n, links, base: BaseConnection::Custom }
    }

    /// Gauge action `U_mu(s) -> g(s) U_mu(s) conj(g(s+mu))`, matching `psi -> g psi`.
    pub fn transform(&self, lat: &Lattice, gamma: &[C]) -> GaugeField {
        let links = exec::build(lat.sites(), |s| {
            let mut l = self.links[s];
            for mu in 0..3 {
                l[mu] = gamma[s] * l[mu] * gamma[lat.fwd(s, mu)].conj();
            }
            l
        });
        GaugeField { n: self.n, links, base: BaseConnection::Custom }
    }

    /// Product of the links along the fiber through base point `(x, y)`.
    pub fn fiber_wilson_loop(&self, lat: &Lattice, x: usize, y: usize) -> C {
        (0..lat.n[0]).fold(C::new(1.0, 0.0), |acc, t| acc * self.links[lat.index(t, x, y)][0])
    }

    /// Product of the links around the base cycle in direction `mu` (1 or 2) through site 0.
    pub fn base_wilson_loop(&self, lat: &Lattice, mu: usize) -> C {
        let mut s = 0;
        let mut acc = C::new(1.0, 0.0);
        for _ in 0..lat.n[mu] {
            acc *= self.links[s][mu];
            s = lat.fwd(s, mu);
        }
        acc
    }
}

fn check_gauge(lat: &Lattice, g: &GaugeField) -> Result<()> {
    if g.n != lat.n || g.links.len() != lat.sites() {
        return Err(Error::LatticeMismatch(format!("gauge {:?} vs lattice {:?}", g.n, lat.n)));
    }
    Ok(())
}

fn check_spinor(lat: &Lattice, f: &SpinorField) -> Result<()> {
    if f.n != lat.n || f.data.len() != lat.sites() {
        return Err(Error::LatticeMismatch(format!("spinor {:?} vs lattice {:?}", f.n, lat.n)));
    }
    Ok(())
}

/// Reference connection `A_0`: flat along the fiber (pullback of the flat base
/// Levi-Civita data), constant base curvature of degree `spec.l_degree`.
pub fn reference_gauge(lat: &Lattice) -> GaugeField {
    let [_, nx, ny] = lat.n;
    let c = -2.0 * PI * lat.spec.l_degree as f64 / (nx * ny) as f64;
    let links = exec::build(lat.sites(), |s| {
        let [_, x, y] = lat.coords(s);
        let ux = C::from_polar(1.0, -c * y as f64);
        let uy = if y == ny - 1 {
            C::from_polar(1.0, c * (ny * x) as f64)
        } else {
            C::new(1.0, 0.0)
        };
        [C::new(1.0, 0.0), ux, uy]
    });
    GaugeField { n: lat.n, links, base: BaseConnection::Reference { l_degree: lat.spec.l_degree } }
}

/// Flat connection with fiber holonomy `exp(2 pi i k / ell)` and base
/// holonomies `exp(2 pi i hol_j)` (genus one: two base parameters).
pub fn flat_connection(lat: &Lattice, k: i64, hol: &[f64]) -> Result<GaugeField> {
    let ell = lat.spec.ell;
    if ell == 0 {
        return Err(Error::Invalid("flat_connection needs ell != 0".into()));
    }
    if k < 0 || k >= ell.abs() {
        return Err(Error::Invalid(format!("k = {k} outside 0..{}", ell.abs())));
    }
    if hol.len() != 2 || hol.iter().any(|h| !(0.0..1.0).contains(h)) {
        return Err(Error::Invalid(format!("need two base holonomies in [0,1), got {hol:?}")));
    }
    if lat.spec.l_degree != 0 {
        return Err(Error::Invalid("flat connections need l_degree = 0".into()));
    }
    let mut g = flat_gauge(lat, k as f64 / ell as f64, [hol[0], hol[1]]);
    g.base = BaseConnection::Flat { k, hol: hol.to_vec() };
    Ok(g)
}

/// Flat links with arbitrary holonomy fractions `[fiber, x, y]`.
pub fn flat_gauge(lat: &Lattice, fiber: f64, hol: [f64; 2]) -> GaugeField {
    let u = [
        C::from_polar(1.0, 2.0 * PI * fiber / lat.n[0] as f64),
        C::from_polar(1.0, 2.0 * PI * hol[0] / lat.n[1] as f64),
        C::from_polar(1.0, 2.0 * PI * hol[1] / lat.n[2] as f64),
    ];
    GaugeField { n: lat.n, links: vec![u; lat.sites()], base: BaseConnection::Custom }
}

/// Oriented plaquette `U_mu(s) U_nu(s+mu) U_mu(s+nu)^* U_nu(s)^*`.
#[inline]
pub fn plaquette(lat: &Lattice, g: &GaugeField, s: usize, mu: usize, nu: usize) -> C {
    g.links[s][mu]
        * g.links[lat.fwd(s, mu)][nu]
        * g.links[lat.fwd(s, nu)][mu].conj()
        * g.links[s][nu].conj()
}

/// One spinor per site.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub n: [usize; 3],
    pub data: Vec<Spinor>,
}

impl SpinorField {
    pub fn zeros(lat: &Lattice) -> Self {
        SpinorField { n: lat.n, data: vec![Spinor::ZERO; lat.sites()] }
    }

    pub fn constant(lat: &Lattice, v: Spinor) -> Self {
        SpinorField { n: lat.n, data: vec![v; lat.sites()] }
    }

    /// Independent standard complex Gaussians-ish (uniform) at each site.
    pub fn random(lat: &Lattice, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = || C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let data = (0..lat.sites()).map(|_| Spinor::new(c(), c())).collect();
        SpinorField { n: lat.n, data }
    }

    /// Random trigonometric polynomial with modes `|k_mu| <= kmax`, identical as
    /// a continuum function for every grid; used to sample smooth fields.
    pub fn smooth_random(lat: &Lattice, seed: u64, kmax: i64) -> Self {
        let modes = smooth_modes(seed, kmax, 2);
        let len = [FIBER_LENGTH, base_side(), base_side()];
        let data = exec::build(lat.sites(), |s| {
            let c = lat.coords(s);
            let p = [0, 1, 2].map(|m| 2.0 * PI * (c[m] as f64 * lat.h[m]) / len[m]);
            let mut v = [C::new(0.0, 0.0); 2];
            for (k, coef) in &modes {
                let ph = C::from_polar(1.0, k[0] as f64 * p[0] + k[1] as f64 * p[1] + k[2] as f64 * p[2]);
                v[0] += coef[0] * ph;
                v[1] += coef[1] * ph;
            }
            Spinor::new(v[0], v[1])
        });
        SpinorField { n: lat.n, data }
    }

    /// `<self, other>_delta`, linear in `self`.
    pub fn inner(&self, other: &SpinorField, dv: f64) -> C {
        let re = exec::sum(self.data.len(), |s| self.data[s].inner(&other.data[s]).re);
        let im = exec::sum(self.data.len(), |s| self.data[s].inner(&other.data[s]).im);
        C::new(re, im) * dv
    }

    pub fn norm(&self, dv: f64) -> f64 {
        (exec::sum(self.data.len(), |s| self.data[s].norm_sqr()) * dv).sqrt()
    }

    pub fn axpy(&self, a: C, x: &SpinorField) -> SpinorField {
        let data = exec::build(self.data.len(), |s| self.data[s] + x.data[s].scale(a));
        SpinorField { n: self.n, data }
    }

    pub fn scale(&self, a: C) -> SpinorField {
        let data = exec::build(self.data.len(), |s| self.data[s].scale(a));
        SpinorField { n: self.n, data }
    }

    pub fn max_diff(&self, other: &SpinorField) -> f64 {
        exec::max(self.data.len(), |s| {
            let d = self.data[s] - other.data[s];
            d.alpha.norm().max(d.beta.norm())
        })
    }

    pub fn gauge(&self, gamma: &[C]) -> SpinorField {
        let data = exec::build(self.data.len(), |s| self.data[s].scale(gamma[s]));
        SpinorField { n: self.n, data }
    }
}

fn smooth_modes(seed: u64, kmax: i64, comps: usize) -> Vec<([i64; 3], Vec<C>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for kt in -kmax..=kmax {
        for kx in -kmax..=kmax {
            for ky in -kmax..=kmax {
                let damp = 1.0 / (1.0 + (kt * kt + kx * kx + ky * ky) as f64);
                let coef = (0..comps)
                    .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * damp)
                    .collect();
                out.push(([kt, kx, ky], coef));
            }
        }
    }
    out
}

/// Real coefficients `w_mu` of the imaginary 1-form `a = i (w_t eta + w_x eta^1 + w_y eta^2)`,
/// stored on the forward links.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub n: [usize; 3],
    pub data: Vec<[f64; 3]>,
}

impl OneForm {
    pub fn zeros(lat: &Lattice) -> Self {
        OneForm { n: lat.n, data: vec![[0.0; 3]; lat.sites()] }
    }

    pub fn random(lat: &Lattice, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..lat.sites())
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        OneForm { n: lat.n, data }
    }

    /// Smooth trigonometric 1-form of amplitude about `amp`.
    pub fn smooth_random(lat: &Lattice, seed: u64, kmax: i64, amp: f64) -> Self {
        let modes = smooth_modes(seed, kmax, 3);
        let len = [FIBER_LENGTH, base_side(), base_side()];
        let data = exec::build(lat.sites(), |s| {
            let c = lat.coords(s);
            let p = [0, 1, 2].map(|m| 2.0 * PI * (c[m] as f64 * lat.h[m]) / len[m]);
            let mut v = [0.0; 3];
            for (k, coef) in &modes {
                let arg = k[0] as f64 * p[0] + k[1] as f64 * p[1] + k[2] as f64 * p[2];
                for m in 0..3 {
                    v[m] += amp * (coef[m].re * arg.cos() + coef[m].im * arg.sin());
                }
            }
            v
        });
        OneForm { n: lat.n, data }
    }

    /// `g_delta` inner product: the fiber covector has length `delta`.
    pub fn inner(&self, other: &OneForm, lat: &Lattice, delta: f64) -> f64 {
        let wt = [delta * delta, 1.0, 1.0];
        lat.dv(delta)
            * exec::sum(self.data.len(), |s| {
                (0..3).map(|m| wt[m] * self.data[s][m] * other.data[s][m]).sum::<f64>()
            })
    }

    pub fn norm(&self, lat: &Lattice, delta: f64) -> f64 {
        self.inner(self, lat, delta).sqrt()
    }

    pub fn axpy(&self, a: f64, x: &OneForm) -> OneForm {
        let data = exec::build(self.data.len(), |s| {
            [0, 1, 2].map(|m| self.data[s][m] + a * x.data[s][m])
        });
        OneForm { n: self.n, data }
    }

    pub fn max_abs(&self) -> f64 {
        exec::max(self.data.len(), |s| self.data[s].iter().map(|v| v.abs()).fold(0.0, f64::max))
    }
}

/// Forward differential of a real function.
pub fn grad(lat: &Lattice, f: &[f64]) -> OneForm {
    let data = exec::build(lat.sites(), |s| {
        [0, 1, 2].map(|m| (f[lat.fwd(s, m)] - f[s]) / lat.h[m])
    });
    OneForm { n: lat.n, data }
}

/// `d*_delta`, the `g_delta` adjoint of [`grad`].
pub fn codifferential(lat: &Lattice, a: &OneForm, delta: f64) -> Vec<f64> {
    let wt = [delta * delta, 1.0, 1.0];
    exec::build(lat.sites(), |s| {
        -(0..3)
            .map(|m| wt[m] * (a.data[s][m] - a.data[lat.bwd(s, m)][m]) / lat.h[m])
            .sum::<f64>()
    })
}

// ---------------------------------------------------------------------------
// Dirac blocks

#[inline]
fn z_at(lat: &Lattice, g: &GaugeField, phi: &[Spinor], s: usize) -> Spinor {
    let f = lat.fwd(s, 0);
    let b = lat.bwd(s, 0);
    let uf = g.links[s][0];
    let ub = g.links[b][0].conj();
    let c = I / (2.0 * lat.h[0]);
    let da = uf * phi[f].alpha - ub * phi[b].alpha;
    let db = uf * phi[f].beta - ub * phi[b].beta;
    Spinor::new(c * da, -c * db)
}

#[inline]
fn t_at(lat: &Lattice, g: &GaugeField, phi: &[Spinor], s: usize) -> Spinor {
    let (hx, hy) = (lat.h[1], lat.h[2]);
    let (fx, fy) = (lat.fwd(s, 1), lat.fwd(s, 2));
    let (bx, by) = (lat.bwd(s, 1), lat.bwd(s, 2));
    let l = &g.links;
    let bb = (l[s][1] * phi[fx].beta - phi[s].beta) / hx
        + I * (l[s][2] * phi[fy].beta - phi[s].beta) / hy;
    let ba = (l[bx][1].conj() * phi[bx].alpha - phi[s].alpha) / hx
        - I * (l[by][2].conj() * phi[by].alpha - phi[s].alpha) / hy;
    Spinor::new(bb, ba)
}

/// `Z = diag(i nabla_t, -i nabla_t)`: the fiber block of the limiting connection.
pub fn apply_z(lat: &Lattice, g: &GaugeField, phi: &SpinorField) -> Result<SpinorField> {
    check_gauge(lat, g)?;
    check_spinor(lat, phi)?;
    let data = exec::build(lat.sites(), |s| z_at(lat, g, &phi.data, s));
    Ok(SpinorField { n: lat.n, data })
}

/// `T = [[0, B], [B^*, 0]]`: the transverse block.
pub fn apply_t(lat: &Lattice, g: &GaugeField, phi: &SpinorField) -> Result<SpinorField> {
    check_gauge(lat, g)?;
    check_spinor(lat, phi)?;
    let data = exec::build(lat.sites(), |s| t_at(lat, g, &phi.data, s));
    Ok(SpinorField { n: lat.n, data })
}

/// `D_delta = delta Z + T + lambda_delta / 2`.
pub fn apply_dirac(lat: &Lattice, delta: f64, g: &GaugeField, phi: &SpinorField) -> Result<SpinorField> {
    check_gauge(lat, g)?;
    check_spinor(lat, phi)?;
    let half = 0.5 * lat.lambda_delta(delta);
    let data = exec::build(lat.sites(), |s| {
        let z = z_at(lat, g, &phi.data, s);
        let t = t_at(lat, g, &phi.data, s);
        z * delta + t + phi.data[s] * half
    });
    Ok(SpinorField { n: lat.n, data })
}

/// `B = nabla_x + i nabla_y` on scalar fields over the base slice (`n_t` ignored).
pub fn apply_dbar(lat: &Lattice, g: &GaugeField, f: &[C]) -> Vec<C> {
    let phi: Vec<Spinor> = f.iter().map(|&v| Spinor::new(C::new(0.0, 0.0), v)).collect();
    exec::build(f.len(), |s| t_at(lat, g, &phi, s).alpha)
}

/// `B^*` on scalar fields.
pub fn apply_dbar_adj(lat: &Lattice, g: &GaugeField, f: &[C]) -> Vec<C> {
    let phi: Vec<Spinor> = f.iter().map(|&v| Spinor::new(v, C::new(0.0, 0.0))).collect();
    exec::build(f.len(), |s| t_at(lat, g, &phi, s).beta)
}

/// Covariant Laplacian `-Delta_A` on the base directions of scalar fields.
pub fn apply_base_laplacian(lat: &Lattice, g: &GaugeField, f: &[C]) -> Vec<C> {
    exec::build(f.len(), |s| {
        let mut acc = C::new(0.0, 0.0);
        for mu in 1..3 {
            let h2 = lat.h[mu] * lat.h[mu];
            let fw = g.links[s][mu] * f[lat.fwd(s, mu)];
            let b = lat.bwd(s, mu);
            let bw = g.links[b][mu].conj() * f[b];
            acc += (2.0 * f[s] - fw - bw) / h2;
        }
        acc
    })
}

// ---------------------------------------------------------------------------
// Curvature

/// Plaquette angles divided by plaquette area, i.e. `F = i f`, at each site.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub f_xy: Vec<f64>,
    pub f_tx: Vec<f64>,
    pub f_ty: Vec<f64>,
}

pub fn curvature(lat: &Lattice, g: &GaugeField) -> Result<CurvatureField> {
    check_gauge(lat, g)?;
    let planes = [(1, 2), (0, 1), (0, 2)];
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(3);
    for &(mu, nu) in &planes {
        let area = lat.h[mu] * lat.h[nu];
        let vals = exec::build(lat.sites(), |s| {
            let p = plaquette(lat, g, s, mu, nu);
            if (p + C::new(1.0, 0.0)).norm() < 1e-6 {
                f64::NAN
            } else {
                p.arg() / area
            }
        });
        if let Some(s) = vals.iter().position(|v| v.is_nan()) {
            return Err(Error::IllConditioned(format!(
                "plaquette ({mu},{nu}) at site {s} is within 1e-6 of the branch cut"
            )));
        }
        out.push(vals);
    }
    let f_ty = out.pop().unwrap();
    let f_tx = out.pop().unwrap();
    let f_xy = out.pop().unwrap();
    Ok(CurvatureField { f_xy, f_tx, f_ty })
}

/// Integer base flux `(i/2 pi) sum F(zeta_1, zeta_2) area` on the `t = 0` slice,
/// and the pairing `int eta ^ c_1(F)` over the whole lattice.
pub fn chern_pairing(lat: &Lattice, g: &GaugeField) -> Result<(i64, f64)> {
    let curv = curvature(lat, g)?;
    let area = lat.h[1] * lat.h[2];
    let mut slice = 0.0;
    for y in 0..lat.n[2] {
        for x in 0..lat.n[1] {
            slice += curv.f_xy[lat.index(0, x, y)] * area;
        }
    }
    let flux = -slice / (2.0 * PI);
    let deg = flux.round();
    if (flux - deg).abs() > 1e-8 {
        return Err(Error::IllConditioned(format!("base flux {flux} is not integral")));
    }
    let pairing = -exec::sum(lat.sites(), |s| curv.f_xy[s]) * lat.dv1() / (2.0 * PI);
    Ok((deg as i64, pairing))
}

/// `{Z_A, T} + lambda T + i C` on `phi`, where `Z_A = Z - lambda/2` is the
/// fiber block of the reference (undeformed) connection and `C` the curvature block
/// `[[0, i F^{0,1}], [conj, 0]]` built from fiber-transverse plaquettes.
pub fn anticommutator_defect(lat: &Lattice, g: &GaugeField, phi: &SpinorField) -> Result<SpinorField> {
    let lambda = lat.lambda_ref();
    let za = |f: &SpinorField| -> Result<SpinorField> {
        let z = apply_z(lat, g, f)?;
        Ok(z.axpy(C::new(-0.5 * lambda, 0.0), f))
    };
    let zt = za(&apply_t(lat, g, phi)?)?;
    let tz = apply_t(lat, g, &za(phi)?)?;
    let t = apply_t(lat, g, phi)?;
    let curv = curvature(lat, g)?;
    let data = exec::build(lat.sites(), |s| {
        // Average the two fiber-adjacent plaquettes to center the block in t.
        let b = lat.bwd(s, 0);
        let ftx = 0.5 * (curv.f_tx[s] + curv.f_tx[b]);
        let fty = 0.5 * (curv.f_ty[s] + curv.f_ty[b]);
        let m01 = C::new(-ftx, -fty);
        let m10 = m01.conj();
        let anti = zt.data[s] + tz.data[s] + t.data[s] * lambda;
        let cblock = Spinor::new(m01 * phi.data[s].beta, m10 * phi.data[s].alpha);
        anti - cblock
    });
    Ok(SpinorField { n: lat.n, data })
}

/// Largest `||R phi|| / ||phi||` of [`anticommutator_defect`] over `samples`
/// smooth random fields.
pub fn anticommutator_residual(lat: &Lattice, g: &GaugeField, samples: usize, seed: u64) -> Result<f64> {
    let dv = lat.dv1();
    let mut worst = 0.0f64;
    for k in 0..samples {
        let phi = SpinorField::smooth_random(lat, seed.wrapping_add(k as u64), 2);
        let r = anticommutator_defect(lat, g, &phi)?;
        worst = worst.max(r.norm(dv) / phi.norm(dv));
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Coulomb projection

/// Periodic Poisson solver for `Delta_delta = d*_delta d` on scalar functions,
/// diagonalized by the 3D FFT.
pub struct Poisson {
    n: [usize; 3],
    eig: Vec<f64>,
}

impl Poisson {
    pub fn new(lat: &Lattice, delta: f64) -> Self {
        let wt = [delta * delta, 1.0, 1.0];
        let n = lat.n;
        let eig = (0..lat.sites())
            .map(|s| {
                let c = lat.coords(s);
                (0..3)
                    .map(|m| {
                        let th = 2.0 * PI * c[m] as f64 / n[m] as f64;
                        wt[m] * (2.0 - 2.0 * th.cos()) / (lat.h[m] * lat.h[m])
                    })
                    .sum()
            })
            .collect();
        Poisson { n, eig }
    }

    /// Solves `Delta u = rhs` on the mean-zero subspace.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut buf: Vec<C> = rhs.iter().map(|&v| C::new(v, 0.0)).collect();
        fft3(&mut buf, self.n, false);
        for (v, &e) in buf.iter_mut().zip(&self.eig) {
            *v = if e > 1e-14 { *v / e } else { C::new(0.0, 0.0) };
        }
        fft3(&mut buf, self.n, true);
        let scale = 1.0 / buf.len() as f64;
        buf.iter().map(|v| v.re * scale).collect()
    }
}

/// In-place unnormalized 3D FFT on a `t`-fastest array.
pub fn fft3(data: &mut [C], n: [usize; 3], inverse: bool) {
    let mut planner = FftPlanner::new();
    let strides = [1, n[0], n[0] * n[1]];
    for axis in 0..3 {
        let len = n[axis];
        let fft = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
        let stride = strides[axis];
        let mut line = vec![C::new(0.0, 0.0); len];
        let total = data.len();
        for start in 0..total {
            // `start` enumerates line origins: index with zero coordinate on `axis`.
            if (start / stride) % len != 0 {
                continue;
            }
            for k in 0..len {
                line[k] = data[start + k * stride];
            }
            fft.process(&mut line);
            for k in 0..len {
                data[start + k * stride] = line[k];
            }
        }
    }
}

/// `g_delta`-orthogonal projection onto `ker d*_delta`.
pub fn coulomb_project(lat: &Lattice, a: &OneForm, delta: f64) -> Result<OneForm> {
    let poisson = Poisson::new(lat, delta);
    coulomb_project_with(lat, &poisson, a, delta)
}

pub fn coulomb_project_with(lat: &Lattice, poisson: &Poisson, a: &OneForm, delta: f64) -> Result<OneForm> {
    let div = codifferential(lat, a, delta);
    let f = poisson.solve(&div);
    let out = a.axpy(-1.0, &grad(lat, &f));
    let check = codifferential(lat, &out, delta);
    let scale = 1.0 + exec::max(div.len(), |s| div[s].abs());
    let bad = exec::max(check.len(), |s| check[s].abs());
    if !(bad <= 1e-10 * scale) {
        return Err(Error::NoConvergence { iterations: 1, residual: bad });
    }
    Ok(out)
}

/// Removes the constant (harmonic) part of each component.
pub fn remove_harmonic(a: &OneForm) -> OneForm {
    let n = a.data.len() as f64;
    let mut mean = [0.0; 3];
    for m in 0..3 {
        mean[m] = exec::sum(a.data.len(), |s| a.data[s][m]) / n;
    }
    let data = exec::build(a.data.len(), |s| [0, 1, 2].map(|m| a.data[s][m] - mean[m]));
    OneForm { n: a.n, data }
}

// ---------------------------------------------------------------------------
// Snapshots

const MAGIC: &str = "ADIABATIC-SW-SNAPSHOT 1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SnapshotHeader {
    lattice: LatticeSpec,
    kind: String,
    values: usize,
}

/// A field stored in a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Spinor(SpinorField),
    OneForm(OneForm),
    Gauge(GaugeField),
}

impl Snapshot {
    fn kind(&self) -> &'static str {
        match self {
            Snapshot::Spinor(_) => "spinor",
            Snapshot::OneForm(_) => "one_form",
            Snapshot::Gauge(_) => "gauge",
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Snapshot::Spinor(f) => f
                .data
                .iter()
                .flat_map(|s| [s.alpha.re, s.alpha.im, s.beta.re, s.beta.im])
                .collect(),
            Snapshot::OneForm(a) => a.data.iter().flat_map(|v| *v).collect(),
            Snapshot::Gauge(g) => g.links.iter().flat_map(|l| l.iter().flat_map(|u| [u.re, u.im])).collect(),
        }
    }
}

/// Writes a header line with the [`LatticeSpec`] followed by little-endian
/// `f64` values in site order; reading it back is bit-exact.
pub fn write_snapshot<W: Write>(mut w: W, spec: &LatticeSpec, snap: &Snapshot) -> Result<()> {
    let values = snap.values();
    let header = SnapshotHeader { lattice: *spec, kind: snap.kind().into(), values: values.len() };
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(r: R) -> Result<(LatticeSpec, Snapshot)> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(Error::Invalid("not a snapshot file".into()));
    }
    line.clear();
    r.read_line(&mut line)?;
    let header: SnapshotHeader = serde_json::from_str(line.trim_end())?;
    let mut bytes = vec![0u8; header.values * 8];
    r.read_exact(&mut bytes)?;
    let vals: Vec<f64> = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    let spec = header.lattice;
    let n = [spec.n_fiber, spec.n_x, spec.n_y];
    let sites = n[0] * n[1] * n[2];
    let per = match header.kind.as_str() {
        "spinor" => 4,
        "one_form" => 3,
        "gauge" => 6,
        k => return Err(Error::Invalid(format!("unknown snapshot kind {k}"))),
    };
    if vals.len() != per * sites {
        return Err(Error::Invalid(format!("snapshot holds {} values, expected {}", vals.len(), per * sites)));
    }
    let snap = match per {
        4 => Snapshot::Spinor(SpinorField {
            n,
            data: vals.chunks_exact(4).map(|c| Spinor::new(C::new(c[0], c[1]), C::new(c[2], c[3]))).collect(),
        }),
        3 => Snapshot::OneForm(OneForm { n, data: vals.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect() }),
        _ => Snapshot::Gauge(GaugeField {
            n,
            links: vals
                .chunks_exact(6)
                .map(|c| [C::new(c[0], c[1]), C::new(c[2], c[3]), C::new(c[4], c[5])])
                .collect(),
            base: BaseConnection::Custom,
        }),
    };
    Ok((spec, snap))
}

pub fn save_snapshot(path: &Path, spec: &LatticeSpec, snap: &Snapshot) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_snapshot(&mut w, spec, snap)?;
    w.flush()?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<(LatticeSpec, Snapshot)> {
    read_snapshot(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(n: usize, ell: i64, d: i64) -> Lattice {
        build_lattice(&LatticeSpec { l_degree: d, ..LatticeSpec::cube(n, ell, 1.0) }).unwrap()
    }

    #[test]
    fn untwisted_tables_are_periodic() {
        let l = lat(4, 0, 0);
        let g = reference_gauge(&l);
        assert!(g.links.iter().all(|u| u.iter().all(|v| *v == C::new(1.0, 0.0))));
        assert_eq!(l.fwd(l.index(3, 0, 0), 0), l.index(0, 0, 0));
        assert_eq!(l.bwd(l.index(0, 0, 0), 2), l.index(0, 0, 3));
    }

    #[test]
    fn rejects_small_grid_and_bad_flux() {
        assert!(build_lattice(&LatticeSpec::cube(3, 1, 1.0)).is_err());
        let spec = LatticeSpec { l_degree: 8, ..LatticeSpec::cube(4, 1, 1.0) };
        assert!(build_lattice(&spec).is_err());
    }

    #[test]
    fn reference_flux_is_degree() {
        for d in -3..=3 {
            let l = lat(8, 1, d);
            let (deg, _) = chern_pairing(&l, &reference_gauge(&l)).unwrap();
            assert_eq!(deg, d);
        }
    }

    #[test]
    fn flat_connection_range() {
        let l = lat(4, 3, 0);
        assert!(flat_connection(&l, 3, &[0.0, 0.0]).is_err());
        assert!(flat_connection(&l, -1, &[0.0, 0.0]).is_err());
        let g = flat_connection(&l, 0, &[0.0, 0.0]).unwrap();
        assert!(g.links.iter().all(|u| u.iter().all(|v| (*v - C::new(1.0, 0.0)).norm() < 1e-15)));
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let l = lat(4, 1, 0);
        let phi = SpinorField::random(&l, 3);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &l.spec, &Snapshot::Spinor(phi.clone())).unwrap();
        let (spec, snap) = read_snapshot(&buf[..]).unwrap();
        assert_eq!(spec, l.spec);
        assert_eq!(snap, Snapshot::Spinor(phi));
    }

    #[test]
    fn fft_round_trip() {
        let n = [4, 6, 5];
        let orig: Vec<C> = (0..120).map(|i| C::new(i as f64, -(i as f64) * 0.5)).collect();
        let mut v = orig.clone();
        fft3(&mut v, n, false);
        fft3(&mut v, n, true);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a / 120.0 - b).norm() < 1e-10);
        }
    }
}
