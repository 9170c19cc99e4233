//! Matrix-free symmetric eigensolver for lattice operators.
//!
//! Operators act on real coordinate vectors and are self-adjoint for a
//! diagonal metric `<x, y>_M = sum w_i x_i y_i`. Complex fields are stored as
//! interleaved `(re, im)` pairs, so each complex eigenvalue appears twice.
//!
//! Smallest-magnitude eigenvalues come from thick-restart Lanczos on `Op^2`;
//! signs are recovered by a Rayleigh-Ritz step for `Op` on the converged
//! `Op^2` subspace.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::geometry::BundleSpec;
use crate::lattice::{self, GaugeField, Lattice};
use crate::spinor::Spinor;
use crate::sw::{gap_operator, Configuration, LinearizationOptions, SwContext};
use crate::{Complex64 as C, Error, Result};

/// Opaque linear map on `R^dim`, self-adjoint for the diagonal metric `weights`.
pub struct OperatorHandle<'a> {
    pub name: String,
    pub weights: Vec<f64>,
    /// Known positive semidefinite; smallest magnitude is then smallest algebraic.
    pub positive: bool,
    apply: Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a>,
}

impl<'a> OperatorHandle<'a> {
    pub fn new(name: impl Into<String>, weights: Vec<f64>, apply: impl Fn(&[f64]) -> Vec<f64> + Sync + 'a) -> Self {
        OperatorHandle { name: name.into(), weights, positive: false, apply: Box::new(apply) }
    }

    pub fn positive(mut self) -> Self {
        self.positive = true;
        self
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.apply)(x)
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        exec::sum(x.len(), |i| self.weights[i] * x[i] * y[i])
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).sqrt()
    }

    /// `|<Op x, y> - <x, Op y>|` relative to `|x| |y|`.
    pub fn symmetry_defect(&self, x: &[f64], y: &[f64]) -> f64 {
        let a = self.inner(&self.apply(x), y);
        let b = self.inner(x, &self.apply(y));
        (a - b).abs() / (self.norm(x) * self.norm(y))
    }

    /// Power-iteration estimate of the operator norm.
    pub fn norm_estimate(&self, iters: usize, seed: u64) -> f64 {
        let mut x = random_vector(self.dim(), seed);
        let n = self.norm(&x);
        x.iter_mut().for_each(|v| *v /= n);
        let mut est = 0.0;
        for _ in 0..iters {
            let y = self.apply(&x);
            est = self.norm(&y);
            if est == 0.0 {
                return 0.0;
            }
            x = y.into_iter().map(|v| v / est).collect();
        }
        est
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    SmallestMagnitude,
    SmallestAlgebraic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRequest {
    pub k: usize,
    pub target: Target,
    pub tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl SpectrumRequest {
    pub fn smallest_magnitude(k: usize, tol: f64) -> Self {
        SpectrumRequest { k, target: Target::SmallestMagnitude, tol, max_iterations: 20_000, seed: 0x5eed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || !(self.tol > 0.0) {
            return Err(Error::Invalid(format!("need k >= 1 and tol > 0, got {self:?}")));
        }
        Ok(())
    }
}

/// Converged Ritz pairs sorted by the requested criterion.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `|Op v - lambda v| / |v|`, recomputed by direct application.
    pub residuals: Vec<f64>,
    /// Operator applications used.
    pub iterations: usize,
}

/// JSON shape of a spectrum report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub delta: f64,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl Spectrum {
    pub fn report(&self, delta: f64) -> SpectrumReport {
        SpectrumReport {
            delta,
            eigenvalues: self.eigenvalues.clone(),
            residuals: self.residuals.clone(),
            iterations: self.iterations,
        }
    }
}

/// Seeded start vector from a counter-based generator.
pub fn random_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

struct Krylov<'o, 'a> {
    op: &'o OperatorHandle<'a>,
    squared: bool,
    applications: usize,
    /// Accepted eigenvectors, shifted by `sigma` out of the wanted range.
    locked: Vec<Vec<f64>>,
    sigma: f64,
}

impl Krylov<'_, '_> {
    /// `Op x + sigma sum_l <x, l> l`.
    fn apply_deflated(&mut self, x: &[f64]) -> Vec<f64> {
        let mut y = self.op.apply(x);
        self.applications += 1;
        for l in &self.locked {
            let c = self.sigma * self.op.inner(x, l);
            y.iter_mut().zip(l).for_each(|(a, b)| *a += c * b);
        }
        y
    }

    fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        let y = self.apply_deflated(x);
        if self.squared {
            self.apply_deflated(&y)
        } else {
            y
        }
    }

    /// Appends a normalized random vector orthogonal to `basis` and the locked vectors.
    fn push_random(&self, basis: &mut Vec<Vec<f64>>, seed: u64) -> bool {
        let mut r = random_vector(self.op.dim(), seed);
        self.orthogonalize(&mut r, &self.locked);
        self.orthogonalize(&mut r, basis);
        let nr = self.op.norm(&r);
        if nr < 1e-13 {
            return false;
        }
        basis.push(r.into_iter().map(|x| x / nr).collect());
        true
    }

    /// Two passes of classical Gram-Schmidt in the `M` metric.
    fn orthogonalize(&self, w: &mut [f64], basis: &[Vec<f64>]) {
        for _ in 0..2 {
            let coeffs: Vec<f64> = basis.iter().map(|v| self.op.inner(v, w)).collect();
            for (v, c) in basis.iter().zip(coeffs) {
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
            }
        }
    }
}

fn combine(vs: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let dim = vs[0].len();
    exec::build(dim, |i| vs.iter().zip(coeffs).map(|(v, c)| v[i] * c).sum())
}

/// `k` eigenpairs of a self-adjoint operator closest to the target.
///
/// A converged run is followed by probe runs deflated against the accepted
/// vectors, which recover eigenvalues a single Krylov space cannot see
/// (exact multiplicities).
pub fn low_spectrum(op: &OperatorHandle, req: &SpectrumRequest) -> Result<Spectrum> {
    req.validate()?;
    let dim = op.dim();
    if req.k > dim {
        return Err(Error::Invalid(format!("k = {} exceeds dimension {dim}", req.k)));
    }
    let squared = req.target == Target::SmallestMagnitude && !op.positive;
    let key = |v: f64| if squared { v.abs() } else { v };
    let mut kr = Krylov { op, squared, applications: 0, locked: Vec::new(), sigma: 0.0 };
    let mut found = thick_restart(&mut kr, req, req.seed)?;
    for probe in 1.. {
        if found.eigenvalues.len() >= dim {
            break;
        }
        let kth = found.eigenvalues.iter().map(|&v| key(v)).fold(f64::NEG_INFINITY, f64::max);
        let k = req.k.min(dim - found.vectors.len());
        let sub = SpectrumRequest { k, ..*req };
        if kr.sigma == 0.0 {
            kr.sigma = 2.0 * op.norm_estimate(30, req.seed ^ 0x9e37) + 2.0 * kth.abs() + 1.0;
            kr.applications += 30;
        }
        kr.locked = found.vectors.clone();
        let extra = thick_restart(&mut kr, &sub, req.seed.wrapping_add(probe))?;
        let mut fresh = false;
        for (i, &v) in extra.eigenvalues.iter().enumerate() {
            if key(v) < kth - req.tol {
                found.eigenvalues.push(v);
                found.vectors.push(extra.vectors[i].clone());
                found.residuals.push(extra.residuals[i]);
                fresh = true;
            }
        }
        if !fresh {
            break;
        }
        let mut idx: Vec<usize> = (0..found.eigenvalues.len()).collect();
        idx.sort_by(|&a, &b| key(found.eigenvalues[a]).partial_cmp(&key(found.eigenvalues[b])).unwrap());
        idx.truncate(req.k);
        found = Extracted {
            eigenvalues: idx.iter().map(|&i| found.eigenvalues[i]).collect(),
            vectors: idx.iter().map(|&i| found.vectors[i].clone()).collect(),
            residuals: idx.iter().map(|&i| found.residuals[i]).collect(),
        };
    }
    // Re-verify against the undeflated operator.
    let residuals = found
        .vectors
        .iter()
        .zip(&found.eigenvalues)
        .map(|(v, &lam)| residual(op, &op.apply(v), v, lam))
        .collect();
    kr.applications += found.vectors.len();
    Ok(Spectrum {
        eigenvalues: found.eigenvalues,
        vectors: found.vectors,
        residuals,
        iterations: kr.applications,
    })
}

/// Thick-restart Lanczos for the deflated operator.
fn thick_restart(kr: &mut Krylov, req: &SpectrumRequest, seed: u64) -> Result<Extracted> {
    let op = kr.op;
    let dim = op.dim();
    let m = (2 * req.k + 40).max(60).min(dim);
    let keep = (req.k + 8).min(m.saturating_sub(2)).max(req.k.min(m));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if !kr.push_random(&mut basis, seed) {
        return Err(Error::Invalid("no room for a start vector".into()));
    }
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut best = f64::INFINITY;
    let mut refill = 0u64;
    loop {
        while images.len() < basis.len() {
            let j = images.len();
            let w = kr.apply(&basis[j]);
            images.push(w.clone());
            if basis.len() < m {
                let mut w = w;
                kr.orthogonalize(&mut w, &basis);
                let nw = op.norm(&w);
                if nw > 1e-13 * op.norm(&images[j]).max(1e-300) {
                    basis.push(w.into_iter().map(|x| x / nw).collect());
                } else {
                    // Invariant subspace; continue from a fresh direction.
                    refill += 1;
                    kr.push_random(&mut basis, seed ^ (refill << 32));
                }
            }
        }
        let p = basis.len();
        let h = DMatrix::from_fn(p, p, |i, j| {
            0.5 * (op.inner(&basis[i], &images[j]) + op.inner(&basis[j], &images[i]))
        });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let kept = keep.min(p);
        let ritz: Vec<Vec<f64>> = order[..kept]
            .iter()
            .map(|&c| combine(&basis, eig.eigenvectors.column(c).as_slice()))
            .collect();
        let ritz_img: Vec<Vec<f64>> = order[..kept]
            .iter()
            .map(|&c| combine(&images, eig.eigenvectors.column(c).as_slice()))
            .collect();
        let mut result = extract(kr, &ritz, req);
        let worst = result.residuals.iter().take(req.k).cloned().fold(0.0, f64::max);
        best = best.min(worst);
        if worst <= req.tol || (p == dim && worst <= req.tol * 1e3) {
            result.eigenvalues.truncate(req.k);
            result.vectors.truncate(req.k);
            result.residuals.truncate(req.k);
            return Ok(result);
        }
        if kr.applications >= req.max_iterations || p == dim {
            return Err(Error::NoConvergence { iterations: kr.applications, residual: best });
        }
        // Thick restart: kept Ritz vectors plus the next Krylov direction.
        let mut next = kr.apply(basis.last().unwrap());
        kr.orthogonalize(&mut next, &basis);
        kr.orthogonalize(&mut next, &ritz);
        let nn = op.norm(&next);
        let mut new_basis = ritz;
        if nn > 1e-13 {
            new_basis.push(next.into_iter().map(|x| x / nn).collect());
        }
        basis = new_basis;
        images = ritz_img;
    }
}

struct Extracted {
    eigenvalues: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
}

/// Rayleigh-Ritz for the deflated `Op` itself (not its square) on span(ritz).
fn extract(kr: &mut Krylov, ritz: &[Vec<f64>], req: &SpectrumRequest) -> Extracted {
    let op = kr.op;
    let q = ritz.len();
    let images: Vec<Vec<f64>> = ritz.iter().map(|v| kr.apply_deflated(v)).collect();
    let g = DMatrix::from_fn(q, q, |i, j| 0.5 * (op.inner(&ritz[i], &images[j]) + op.inner(&ritz[j], &images[i])));
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..q).collect();
    let key = |c: usize| if kr.squared { eig.eigenvalues[c].abs() } else { eig.eigenvalues[c] };
    order.sort_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap());
    let mut out = Extracted { eigenvalues: vec![], vectors: vec![], residuals: vec![] };
    for &c in order.iter().take(req.k.min(q)) {
        let y = eig.eigenvectors.column(c);
        let v = combine(ritz, y.as_slice());
        let av = combine(&images, y.as_slice());
        let lam = eig.eigenvalues[c];
        out.residuals.push(residual(op, &av, &v, lam));
        out.eigenvalues.push(lam);
        out.vectors.push(v);
    }
    while out.eigenvalues.len() < req.k {
        out.eigenvalues.push(f64::NAN);
        out.vectors.push(vec![0.0; op.dim()]);
        out.residuals.push(f64::INFINITY);
    }
    out
}

fn residual(op: &OperatorHandle, av: &[f64], v: &[f64], lam: f64) -> f64 {
    let r: Vec<f64> = av.iter().zip(v).map(|(a, b)| a - lam * b).collect();
    op.norm(&r) / op.norm(v)
}

/// Default kernel threshold `10 h^2` for second-order operators whose
/// continuum kernel shows up as `O(h^2)` eigenvalues.
pub fn default_gap_tol(h: f64) -> f64 {
    10.0 * h * h
}

/// Number of eigenvalues with `|lambda| < gap_tol`. Requires a visible gap:
/// no eigenvalue in `[gap_tol, 10 gap_tol]` and at least one above it.
pub fn kernel_dimension(op: &OperatorHandle, gap_tol: f64) -> Result<usize> {
    let dim = op.dim();
    let mut k = 4.min(dim);
    loop {
        let tol = (gap_tol * 1e-3).max(1e-12);
        let spec = low_spectrum(op, &SpectrumRequest { k, tol, ..SpectrumRequest::smallest_magnitude(k, tol) })?;
        let mags: Vec<f64> = spec.eigenvalues.iter().map(|v| v.abs()).collect();
        if mags.iter().any(|&v| v >= gap_tol && v <= 10.0 * gap_tol) {
            return Err(Error::NoGap(format!("eigenvalues {mags:?} crowd gap_tol = {gap_tol:e}")));
        }
        if mags.iter().any(|&v| v > 10.0 * gap_tol) {
            return Ok(mags.iter().filter(|&&v| v < gap_tol).count());
        }
        if k == dim {
            return Err(Error::NoGap(format!("no eigenvalue above {:e}", 10.0 * gap_tol)));
        }
        k = (2 * k).min(dim);
    }
}

/// Interleaves complex values as `(re, im)` pairs.
pub fn complex_to_real(z: &[C]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn real_to_complex(x: &[f64]) -> Vec<C> {
    x.chunks_exact(2).map(|p| C::new(p[0], p[1])).collect()
}

/// `B^* B + (h^2/4) Delta_A^2` on sections over the base slice.
///
/// The forward stencil of `B` has a doubler of opposite chirality at the
/// quarter frequency; the second term lifts it by `O(1)` while moving genuine
/// zero modes by `O(h^2)`.
pub fn dbar_counting_operator<'a>(lat: &'a Lattice, g: &'a GaugeField) -> OperatorHandle<'a> {
    let h = lat.h[1].max(lat.h[2]);
    let w = 0.25 * h * h;
    let dv = lat.h[1] * lat.h[2];
    OperatorHandle::new("dbar_counting", vec![dv; 2 * lat.sites()], move |x: &[f64]| {
        let f = real_to_complex(x);
        let bf = lattice::apply_dbar(lat, g, &f);
        let bbf = lattice::apply_dbar_adj(lat, g, &bf);
        let lf = lattice::apply_base_laplacian(lat, g, &f);
        let llf = lattice::apply_base_laplacian(lat, g, &lf);
        let out: Vec<C> = bbf.iter().zip(&llf).map(|(a, b)| a + b * w).collect();
        complex_to_real(&out)
    })
    .positive()
}

/// Complex dimension of the kernel of `dbar` twisted by a degree-`degree`
/// connection on an `n x n` base (optionally with flat base holonomies).
pub fn dbar_kernel_dimension(n: usize, degree: i64, hol: Option<[f64; 2]>) -> Result<usize> {
    let lat = lattice::build_base_lattice(n, n, degree)?;
    let g = match hol {
        Some(h) if degree == 0 => lattice::flat_gauge(&lat, 0.0, h),
        Some(_) => return Err(Error::Invalid("base holonomies only apply to degree 0".into())),
        None => lattice::reference_gauge(&lat),
    };
    let op = dbar_counting_operator(&lat, &g);
    let real = kernel_dimension(&op, default_gap_tol(lat.h[1].max(lat.h[2])))?;
    Ok(real / 2)
}

/// `D_delta` on spinor fields, packed as `[alpha.re, alpha.im, beta.re, beta.im]` per site.
pub fn dirac_operator<'a>(lat: &'a Lattice, g: &'a GaugeField, delta: f64) -> OperatorHandle<'a> {
    OperatorHandle::new("dirac", vec![lat.dv(delta); 4 * lat.sites()], move |x: &[f64]| {
        let data = x
            .chunks_exact(4)
            .map(|v| Spinor::new(C::new(v[0], v[1]), C::new(v[2], v[3])))
            .collect();
        let phi = lattice::SpinorField { n: lat.n, data };
        let out = lattice::apply_dirac(lat, delta, g, &phi).expect("handle built for this lattice");
        out.data.iter().flat_map(|s| [s.alpha.re, s.alpha.im, s.beta.re, s.beta.im]).collect()
    })
}

/// One row of a gap sweep; failures are recorded, not propagated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapRow {
    pub delta: f64,
    pub z: Option<f64>,
    /// Converged low singular values, ascending. Only the smallest is requested:
    /// the bottom of the spectrum is degenerate and asking for more slows Lanczos.
    pub singular_values: Vec<f64>,
    pub iterations: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

/// Lattice, reference connection and base configuration used by [`gap_sweep`].
///
/// For `ell != 0` the reference is the flat connection with fiber class
/// `bundle.l_n_class` and trivial base holonomy, and `phi_0 = 0`. For `ell = 0`
/// (product control) the base holonomy `(1/2, 1/2)` keeps the transverse
/// spectrum away from zero.
pub fn gap_configuration(bundle: &BundleSpec, sizes: [usize; 3], delta: f64) -> Result<(SwContext, Configuration)> {
    let spec = lattice::LatticeSpec {
        n_fiber: sizes[0],
        n_x: sizes[1],
        n_y: sizes[2],
        ell: bundle.ell,
        delta,
        l_degree: 0,
    };
    let lat = lattice::build_lattice(&spec)?;
    let g = if bundle.ell != 0 {
        lattice::flat_connection(&lat, bundle.l_n_class, &[0.0, 0.0])?
    } else {
        lattice::flat_gauge(&lat, 0.0, [0.5, 0.5])
    };
    let ctx = SwContext::new(lat, g, delta)?;
    let c = Configuration::reducible(&ctx.lat, delta);
    Ok((ctx, c))
}

/// Distance from 0 to the spectrum of the constrained linearization at
/// `(phi_0, A_0)` for each `delta`, computed as the smallest singular value
/// of the first-order operator (see [`crate::sw::gap_operator`]).
pub fn gap_sweep(bundle: &BundleSpec, deltas: &[f64], sizes: [usize; 3]) -> Result<Vec<GapRow>> {
    bundle.validate()?;
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(format!("deltas must be positive and increasing, got {deltas:?}")));
    }
    let opts = LinearizationOptions { orbit_fallback: false, remove_harmonic: true };
    let rows = deltas
        .iter()
        .map(|&delta| {
            let start = std::time::Instant::now();
            let run = || -> Result<Spectrum> {
                let (ctx, c) = gap_configuration(bundle, sizes, delta)?;
                let op = gap_operator(&ctx, &c, opts)?;
                low_spectrum(&op, &SpectrumRequest::smallest_magnitude(1, 1e-8))
            };
            let mut row = GapRow { delta, z: None, singular_values: vec![], iterations: 0, seconds: 0.0, error: None };
            match run() {
                Ok(spec) => {
                    row.singular_values = spec.eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
                    row.z = row.singular_values.first().copied();
                    row.iterations = spec.iterations;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row.seconds = start.elapsed().as_secs_f64();
            row
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(n: usize) -> OperatorHandle<'static> {
        OperatorHandle::new("diag", vec![1.0; n], move |x: &[f64]| {
            x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v).collect()
        })
    }

    #[test]
    fn diagonal_smallest() {
        let op = diag(200);
        let s = low_spectrum(&op, &SpectrumRequest::smallest_magnitude(5, 1e-9)).unwrap();
        for (i, v) in s.eigenvalues.iter().enumerate() {
            assert!((v - (i as f64 + 1.0)).abs() < 1e-8, "{:?}", s.eigenvalues);
        }
        assert!(s.residuals.iter().all(|&r| r <= 1e-9));
    }

    #[test]
    fn signs_are_recovered() {
        let vals: Vec<f64> = (0..120).map(|i| if i % 2 == 0 { -(i as f64) - 0.5 } else { i as f64 + 0.25 }).collect();
        let v2 = vals.clone();
        let op = OperatorHandle::new("signed", vec![1.0; 120], move |x: &[f64]| {
            x.iter().zip(&v2).map(|(a, b)| a * b).collect()
        });
        let s = low_spectrum(&op, &SpectrumRequest::smallest_magnitude(3, 1e-9)).unwrap();
        assert!((s.eigenvalues[0] + 0.5).abs() < 1e-8);
        assert!((s.eigenvalues[1] - 1.25).abs() < 1e-8);
        assert!((s.eigenvalues[2] + 2.5).abs() < 1e-8);
    }

    #[test]
    fn projected_kernel_of_dim_two() {
        // diag(0, 0, 1, 2, ...) built by zeroing two coordinates.
        let op = OperatorHandle::new("proj", vec![1.0; 60], |x: &[f64]| {
            x.iter().enumerate().map(|(i, v)| if i < 2 { 0.0 } else { (i as f64) * v }).collect()
        });
        assert_eq!(kernel_dimension(&op, 1e-3).unwrap(), 2);
    }

    #[test]
    fn rejects_bad_request() {
        let op = diag(10);
        assert!(low_spectrum(&op, &SpectrumRequest { k: 0, ..SpectrumRequest::smallest_magnitude(1, 1e-8) }).is_err());
        assert!(low_spectrum(&op, &SpectrumRequest::smallest_magnitude(11, 1e-8)).is_err());
    }
}
