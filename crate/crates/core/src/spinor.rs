//! Pointwise spinor algebra on `C^2`: the Clifford representation of `Cl_3`,
//! Clifford multiplication by complexified 1-forms, and the quadratic map `tau`.
//!
//! Hermitian product convention: `<u, v> = u_0 conj(v_0) + u_1 conj(v_1)`,
//! complex linear in the first slot. With it `tau(phi) psi = <psi, phi> phi - |phi|^2 psi / 2`
//! and the frame-sum form of `tau` agree exactly.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

pub type Mat2 = [[C; 2]; 2];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// A spinor `(alpha, beta)` in `K^{-1/2} (x) L  (+)  K^{1/2} (x) L`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Spinor {
    pub alpha: C,
    pub beta: C,
}

impl Spinor {
    pub const ZERO: Spinor = Spinor { alpha: ZERO, beta: ZERO };

    pub fn new(alpha: C, beta: C) -> Self {
        Spinor { alpha, beta }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    /// `<self, other>`, linear in `self`.
    pub fn inner(&self, other: &Spinor) -> C {
        self.alpha * other.alpha.conj() + self.beta * other.beta.conj()
    }

    pub fn scale(&self, t: C) -> Spinor {
        Spinor { alpha: self.alpha * t, beta: self.beta * t }
    }
}

impl Add for Spinor {
    type Output = Spinor;
    fn add(self, o: Spinor) -> Spinor {
        Spinor { alpha: self.alpha + o.alpha, beta: self.beta + o.beta }
    }
}

impl Sub for Spinor {
    type Output = Spinor;
    fn sub(self, o: Spinor) -> Spinor {
        Spinor { alpha: self.alpha - o.alpha, beta: self.beta - o.beta }
    }
}

impl Mul<f64> for Spinor {
    type Output = Spinor;
    fn mul(self, t: f64) -> Spinor {
        Spinor { alpha: self.alpha * t, beta: self.beta * t }
    }
}

/// Coefficients of a complexified 1-form in the coframe `(eta^0, eta^1, eta^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoframeVector {
    pub c0: C,
    pub c1: C,
    pub c2: C,
}

impl CoframeVector {
    pub fn new(c0: C, c1: C, c2: C) -> Self {
        CoframeVector { c0, c1, c2 }
    }

    pub fn basis(i: usize) -> Self {
        let mut v = CoframeVector::default();
        match i {
            0 => v.c0 = ONE,
            1 => v.c1 = ONE,
            _ => v.c2 = ONE,
        }
        v
    }

    pub fn is_imaginary(&self, tol: f64) -> bool {
        self.c0.re.abs() <= tol && self.c1.re.abs() <= tol && self.c2.re.abs() <= tol
    }
}

/// `c(e_0) = diag(i, -i)`, `c(e_1) = [[0,1],[-1,0]]`, `c(e_2) = [[0,i],[i,0]]`.
pub fn gamma(i: usize) -> Mat2 {
    match i {
        0 => [[I, ZERO], [ZERO, -I]],
        1 => [[ZERO, ONE], [-ONE, ZERO]],
        _ => [[ZERO, I], [I, ZERO]],
    }
}

pub fn clifford(v: &CoframeVector) -> Mat2 {
    let coeffs = [v.c0, v.c1, v.c2];
    let mut m = [[ZERO; 2]; 2];
    for (k, c) in coeffs.iter().enumerate() {
        let g = gamma(k);
        for r in 0..2 {
            for s in 0..2 {
                m[r][s] += c * g[r][s];
            }
        }
    }
    m
}

/// `tau(phi) = phi phi^* - |phi|^2/2`.
pub fn tau(phi: &Spinor) -> Mat2 {
    let (a, b) = (phi.alpha, phi.beta);
    let h = 0.5 * (a.norm_sqr() - b.norm_sqr());
    [[C::new(h, 0.0), a * b.conj()], [a.conj() * b, C::new(-h, 0.0)]]
}

/// `tau(phi) = 1/2 sum_i <phi, c(e_i) phi> c(e_i)`.
pub fn tau_via_frame(phi: &Spinor) -> Mat2 {
    let mut m = [[ZERO; 2]; 2];
    for i in 0..3 {
        let g = gamma(i);
        let w = phi.inner(&apply(&g, phi)) * 0.5;
        for r in 0..2 {
            for s in 0..2 {
                m[r][s] += w * g[r][s];
            }
        }
    }
    m
}

/// Derivative of `tau` at `phi` in the direction `dphi`.
pub fn tau_dot(phi: &Spinor, dphi: &Spinor) -> Mat2 {
    let h = dphi.inner(phi).re;
    let (a, b) = (phi.alpha, phi.beta);
    let (da, db) = (dphi.alpha, dphi.beta);
    [
        [C::new(2.0 * (da * a.conj()).re - h, 0.0), da * b.conj() + a * db.conj()],
        [a.conj() * db + da.conj() * b, C::new(2.0 * (db * b.conj()).re - h, 0.0)],
    ]
}

pub fn apply(m: &Mat2, v: &Spinor) -> Spinor {
    Spinor {
        alpha: m[0][0] * v.alpha + m[0][1] * v.beta,
        beta: m[1][0] * v.alpha + m[1][1] * v.beta,
    }
}

pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut m = [[ZERO; 2]; 2];
    for r in 0..2 {
        for s in 0..2 {
            m[r][s] = a[r][0] * b[0][s] + a[r][1] * b[1][s];
        }
    }
    m
}

pub fn adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut d = 0.0f64;
    for r in 0..2 {
        for s in 0..2 {
            d = d.max((a[r][s] - b[r][s]).norm());
        }
    }
    d
}

/// Image of the quaternion `q0 + q1 i + q2 j + q3 k` under left multiplication.
pub fn quaternion(q: [f64; 4]) -> Mat2 {
    let v = CoframeVector::new(C::new(q[1], 0.0), C::new(q[2], 0.0), C::new(q[3], 0.0));
    let mut m = clifford(&v);
    m[0][0] += q[0];
    m[1][1] += q[0];
    m
}
