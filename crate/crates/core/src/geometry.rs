//! Closed-form invariants of Killing m.a.c. structures with constant `lambda`,
//! the Boothby-Wang structure on a degree-`ell` circle bundle, and the
//! anisotropic (D-homothety) deformation along the fiber.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Pointwise invariants of a Killing m.a.c. structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacInvariants {
    /// `d eta = 2 lambda * eta`.
    pub lambda: f64,
    /// Infinitesimal rotation of the transverse frame along the fiber.
    pub varphi: f64,
    /// `b = lambda + varphi`.
    pub b: f64,
    /// Transverse curvature of the induced connection on `ker eta`.
    pub sigma: f64,
    /// Horizontal sectional curvature.
    pub kappa: f64,
    /// Scalar curvature.
    pub scal: f64,
    /// Deformation parameter; 1 means the reference metric.
    pub delta: f64,
}

impl MacInvariants {
    /// Builds the invariants from the type data `(lambda, b, sigma)`,
    /// recomputing `varphi`, `kappa` and `scal`.
    pub fn from_type(lambda: f64, b: f64, sigma: f64, delta: f64) -> Self {
        let varphi = b - lambda;
        let kappa = sigma - lambda * lambda + 2.0 * lambda * varphi;
        let scal = 2.0 * kappa + 4.0 * lambda * lambda;
        MacInvariants { lambda, varphi, b, sigma, kappa, scal, delta }
    }

    /// Largest absolute violation of the three defining identities.
    pub fn identity_defect(&self) -> f64 {
        let d1 = self.b - (self.lambda + self.varphi);
        let d2 = self.scal - (2.0 * self.kappa + 4.0 * self.lambda * self.lambda);
        let d3 = self.kappa
            - (self.sigma - self.lambda * self.lambda + 2.0 * self.lambda * self.varphi);
        d1.abs().max(d2.abs()).max(d3.abs())
    }
}

/// Topological and metric data of a problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub ell: i64,
    pub genus: i64,
    pub base_area: f64,
    pub delta: f64,
    /// Torsion class of `c1(L)` mod `|ell|` when `ell != 0`, else the base degree.
    pub l_n_class: i64,
    pub is_pullback: bool,
}

impl BundleSpec {
    pub fn new(ell: i64, genus: i64, delta: f64, l_n_class: i64) -> Result<Self> {
        let spec = BundleSpec {
            ell,
            genus,
            base_area: PI,
            delta,
            l_n_class: if ell != 0 { l_n_class.rem_euclid(ell.abs()) } else { l_n_class },
            is_pullback: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if self.genus < 0 {
            return Err(Error::Invalid(format!("genus must be >= 0, got {}", self.genus)));
        }
        if (self.base_area - PI).abs() > 1e-12 * PI {
            return Err(Error::Invalid(format!("base area must be pi, got {}", self.base_area)));
        }
        Ok(())
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

/// Invariants of the Boothby-Wang structure at deformation `spec.delta`.
pub fn boothby_wang_invariants(spec: &BundleSpec, sigma_base: f64) -> Result<MacInvariants> {
    spec.validate()?;
    let l = spec.ell as f64;
    let d = spec.delta;
    let lambda = -l / d;
    let varphi = l / d;
    Ok(MacInvariants {
        lambda,
        varphi,
        b: 0.0,
        sigma: sigma_base,
        kappa: sigma_base - 3.0 * l * l / (d * d),
        scal: 2.0 * (sigma_base - l * l / (d * d)),
        delta: d,
    })
}

/// Rescales the fiber by `1/delta`: `lambda -> lambda/delta`, `b -> delta b`,
/// `sigma` fixed. Deformations compose multiplicatively in `delta`.
pub fn anisotropic_deform(inv: &MacInvariants, delta: f64) -> Result<MacInvariants> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Invalid(format!("delta must be positive, got {delta}")));
    }
    let lambda = inv.lambda / delta;
    let b = delta * inv.b;
    let mut out = MacInvariants::from_type(lambda, b, inv.sigma, inv.delta * delta);
    // Keep the printed form of varphi_delta bit-for-bit.
    out.varphi = delta * inv.varphi + (delta - 1.0 / delta) * inv.lambda;
    out.kappa = out.sigma - lambda * lambda + 2.0 * lambda * out.varphi;
    out.scal = 2.0 * out.kappa + 4.0 * lambda * lambda;
    Ok(out)
}

/// Ricci tensor in the adapted frame `(zeta, zeta_1, zeta_2)`.
pub fn ricci_matrix(inv: &MacInvariants) -> [[f64; 3]; 3] {
    let l2 = inv.lambda * inv.lambda;
    let k = inv.kappa;
    [[2.0 * l2, 0.0, 0.0], [0.0, k + l2, -k], [0.0, -k, k + l2]]
}

pub fn trace3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] + m[1][1] + m[2][2]
}
