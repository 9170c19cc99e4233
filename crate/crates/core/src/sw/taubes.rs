//! Quantitative fixed-point step: `F(y) = L y + N(y)` with `|L^{-1}| <= 1/mu`,
//! `|N(x) - N(y)| <= kappa (|x| + |y|) |x - y|` and `|N(0)| <= eps0`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaubesProblem {
    pub mu: f64,
    pub kappa: f64,
    pub eps0: f64,
}

impl TaubesProblem {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mu.is_finite()
            && self.mu > 0.0
            && self.kappa.is_finite()
            && self.kappa >= 0.0
            && self.eps0.is_finite()
            && self.eps0 >= 0.0;
        if !ok {
            return Err(Error::Invalid(format!("need mu > 0, kappa >= 0, eps0 >= 0; got {self:?}")));
        }
        Ok(())
    }

    pub fn q(&self) -> f64 {
        self.kappa / self.mu
    }

    /// Smallest positive root of `q r^2 - r + eps0 / mu`, the radius the
    /// contraction argument actually certifies.
    pub fn root_radius(&self) -> f64 {
        let e = self.eps0 / self.mu;
        let disc = 1.0 - 4.0 * self.q() * e;
        // Stable form of (1 - sqrt(disc)) / (2q); equals e at q = 0.
        2.0 * e / (1.0 + disc.max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaubesRadius {
    pub admissible: bool,
    pub r: f64,
}

/// Admissibility `eps0 < 1/(4q) < 1/2` and `r = (1 - sqrt(1 - 4 q eps0)) / (4q)`,
/// both as printed; `q = 0` gives `r = eps0`.
pub fn taubes_radius(p: &TaubesProblem) -> Result<TaubesRadius> {
    p.validate()?;
    let q = p.q();
    if q == 0.0 {
        return Ok(TaubesRadius { admissible: true, r: p.eps0 });
    }
    let bound = 1.0 / (4.0 * q);
    let admissible = p.eps0 < bound && bound < 0.5;
    let disc = 1.0 - 4.0 * q * p.eps0;
    let r = if disc >= 0.0 { (1.0 - disc.sqrt()) / (4.0 * q) } else { f64::NAN };
    Ok(TaubesRadius { admissible, r })
}

/// Split of a nonlinear map into its linear part and remainder.
pub trait TaubesMap {
    /// Applies `L^{-1}`.
    fn solve_linear(&self, v: &[f64]) -> Vec<f64>;
    /// `N(y) = F(y) - L y`.
    fn nonlinear(&self, y: &[f64]) -> Vec<f64>;
    /// `F(y)`.
    fn full(&self, y: &[f64]) -> Vec<f64>;
    fn norm(&self, v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaubesSolution {
    pub y: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Largest observed `|T y_{n+1} - T y_n| / |y_{n+1} - y_n|`.
    pub contraction: f64,
    pub radius: f64,
}

/// Iterates `y <- -L^{-1} N(y)` from 0 until `|F(y)| <= tol`.
pub fn taubes_solve<F: TaubesMap>(f: &F, p: &TaubesProblem, dim: usize, tol: f64, max_iter: usize) -> Result<TaubesSolution> {
    p.validate()?;
    let q = p.q();
    let e = 4.0 * q * p.eps0 / p.mu;
    if e >= 1.0 {
        return Err(Error::Invalid(format!("no contraction ball: 4 q eps0 / mu = {e} >= 1")));
    }
    let radius = p.root_radius();
    // On the ball of radius r the map has Lipschitz constant at most 2 q r.
    let bound = 2.0 * q * radius;
    let step = |y: &[f64]| -> Vec<f64> { f.solve_linear(&f.nonlinear(y)).into_iter().map(|v| -v).collect() };
    let mut y = vec![0.0; dim];
    let mut prev_step: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut contraction = 0.0f64;
    for it in 0..=max_iter {
        let residual = f.norm(&f.full(&y));
        if residual <= tol {
            if f.norm(&y) > radius * (1.0 + 1e-9) + tol {
                return Err(Error::ContractionViolated { observed: f.norm(&y), bound: radius });
            }
            return Ok(TaubesSolution { y, iterations: it, residual, contraction, radius });
        }
        let next = step(&y);
        if let Some((py, pnext)) = &prev_step {
            let dy: f64 = f.norm(&y.iter().zip(py).map(|(a, b)| a - b).collect::<Vec<_>>());
            let dt: f64 = f.norm(&next.iter().zip(pnext).map(|(a, b)| a - b).collect::<Vec<_>>());
            if dy > 0.0 {
                let ratio = dt / dy;
                contraction = contraction.max(ratio);
                if ratio > bound * (1.0 + 1e-6) + 1e-12 {
                    return Err(Error::ContractionViolated { observed: ratio, bound });
                }
            }
        }
        prev_step = Some((y, next.clone()));
        y = next;
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: f.norm(&f.full(&y)) })
}

/// Scalar map `F(y) = mu y - c + kappa y^2`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarQuadratic {
    pub mu: f64,
    pub c: f64,
    pub kappa: f64,
}

impl TaubesMap for ScalarQuadratic {
    fn solve_linear(&self, v: &[f64]) -> Vec<f64> {
        vec![v[0] / self.mu]
    }
    fn nonlinear(&self, y: &[f64]) -> Vec<f64> {
        vec![-self.c + self.kappa * y[0] * y[0]]
    }
    fn full(&self, y: &[f64]) -> Vec<f64> {
        vec![self.mu * y[0] - self.c + self.kappa * y[0] * y[0]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_examples() {
        let r = taubes_radius(&TaubesProblem { mu: 1.0, kappa: 1.0, eps0: 0.0 }).unwrap();
        assert!(r.admissible && r.r == 0.0);
        let r = taubes_radius(&TaubesProblem { mu: 1.0, kappa: 0.25, eps0: 0.5 }).unwrap();
        assert!(!r.admissible);
        let r = taubes_radius(&TaubesProblem { mu: 1.0, kappa: 0.0, eps0: 0.3 }).unwrap();
        assert!(r.admissible && r.r == 0.3);
    }

    #[test]
    fn linear_case_one_step() {
        let f = ScalarQuadratic { mu: 2.0, c: 0.5, kappa: 0.0 };
        let p = TaubesProblem { mu: 2.0, kappa: 0.0, eps0: 0.5 };
        let s = taubes_solve(&f, &p, 1, 1e-14, 10).unwrap();
        assert_eq!(s.iterations, 1);
        assert_eq!(s.y[0], 0.25);
    }

    #[test]
    fn wrong_constants_are_caught() {
        // True kappa is 2, certified as 0.01.
        let f = ScalarQuadratic { mu: 1.0, c: 0.4, kappa: 2.0 };
        let p = TaubesProblem { mu: 1.0, kappa: 0.01, eps0: 0.4 };
        assert!(matches!(taubes_solve(&f, &p, 1, 1e-12, 100), Err(Error::ContractionViolated { .. })));
    }
}
