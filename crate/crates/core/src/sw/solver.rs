//! Critical-point search.
//!
//! The merit function is `1/2 |grad f|^2_delta`, which is gauge invariant and
//! vanishes exactly at critical points. Far from a zero the solver takes
//! Armijo steps along a truncated CGLS solution of `H dx = -grad`: its first
//! iterate is the merit descent direction `-H grad`, later ones bend it toward
//! the Newton step. Once the residual drops below `newton_threshold` the CGLS
//! solve runs to tolerance and full steps are tried first.
//! Every accepted iterate is moved back to Coulomb gauge.

use serde::{Deserialize, Serialize};
use std::io::Write;

use super::{coulomb_gauge, sw_functional, sw_gradient, Configuration, HessianAt, SwContext, Tangent};
use crate::lattice::{OneForm, SpinorField};
use crate::{Complex64 as C, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub tol: f64,
    pub max_iter: usize,
    /// Residual below which Newton steps replace descent steps.
    pub newton_threshold: f64,
    pub armijo: f64,
    pub min_step: f64,
    /// CGLS iterations per flow step.
    pub flow_cg_iter: usize,
    pub cg_max_iter: usize,
    pub cg_rel_tol: f64,
    /// `|psi|_delta < reducible_threshold * sqrt(vol_delta)` counts as reducible.
    pub reducible_threshold: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-9,
            max_iter: 200,
            newton_threshold: 1e-3,
            armijo: 1e-4,
            min_step: 1e-10,
            flow_cg_iter: 20,
            cg_max_iter: 400,
            cg_rel_tol: 1e-10,
            reducible_threshold: 1e-6,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.armijo > 0.0 && self.armijo < 0.5) {
            return Err(Error::Invalid(format!("bad solver parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub functional: f64,
    pub residual: f64,
    pub psi_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub config: Configuration,
    pub residual: f64,
    pub reducible: bool,
    pub iterations: usize,
    pub history: Vec<HistoryRow>,
    /// Whether the merit function decreased on every accepted step.
    pub merit_monotone: bool,
}

/// Writes `iteration,functional,residual,psi_norm` rows.
pub fn write_history<W: Write>(w: W, history: &[HistoryRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in history {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn is_reducible(ctx: &SwContext, c: &Configuration, threshold: f64) -> bool {
    c.phi.norm(ctx.dv()) < threshold * ctx.lat.volume(ctx.delta).sqrt()
}

fn step(c: &Configuration, d: &Tangent, t: f64) -> Configuration {
    Configuration { phi: c.phi.axpy(C::new(t, 0.0), &d.phi), a: c.a.axpy(t, &d.a), delta: c.delta }
}

fn combine(a: &Tangent, s: f64, b: &Tangent) -> Tangent {
    Tangent { phi: a.phi.axpy(C::new(s, 0.0), &b.phi), a: a.a.axpy(s, &b.a) }
}

fn scaled(t: &Tangent, s: f64) -> Tangent {
    Tangent { phi: t.phi.scale(C::new(s, 0.0)), a: OneForm { n: t.a.n, data: t.a.data.iter().map(|v| v.map(|x| x * s)).collect() } }
}

fn zero_like(t: &Tangent) -> Tangent {
    Tangent {
        phi: SpinorField { n: t.phi.n, data: vec![Default::default(); t.phi.data.len()] },
        a: OneForm { n: t.a.n, data: vec![[0.0; 3]; t.a.data.len()] },
    }
}

/// Least-squares solve of `H x = b` (CGLS; `H` self-adjoint), starting from 0.
fn cgls(ctx: &SwContext, h: &HessianAt, b: &Tangent, max_iter: usize, rel_tol: f64) -> Tangent {
    let mut x = zero_like(b);
    let mut r = b.clone();
    let mut s = h.apply(&r);
    let mut p = s.clone();
    let mut gamma = ctx.tangent_inner(&s, &s);
    let stop = rel_tol * rel_tol * gamma;
    for _ in 0..max_iter {
        if gamma <= stop || gamma == 0.0 {
            break;
        }
        let q = h.apply(&p);
        let qq = ctx.tangent_inner(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        x = combine(&x, alpha, &p);
        r = combine(&r, -alpha, &q);
        s = h.apply(&r);
        let g2 = ctx.tangent_inner(&s, &s);
        p = combine(&s, g2 / gamma, &p);
        gamma = g2;
    }
    x
}

struct Eval {
    config: Configuration,
    grad: Tangent,
    residual: f64,
}

fn evaluate(ctx: &SwContext, c: Configuration) -> Result<Eval> {
    let grad = sw_gradient(ctx, &c, false)?;
    let residual = ctx.tangent_norm(&grad);
    Ok(Eval { config: c, grad, residual })
}

/// Searches for a zero of the gradient from `start`. The result is in Coulomb
/// gauge relative to the reference connection.
pub fn find_critical_point(ctx: &SwContext, start: &Configuration, params: &SolverParams) -> Result<SolveOutcome> {
    params.validate()?;
    let mut cur = evaluate(ctx, coulomb_gauge(ctx, start))?;
    let mut history = Vec::new();
    let mut monotone = true;
    let record = |cur: &Eval, it: usize, history: &mut Vec<HistoryRow>| -> Result<()> {
        history.push(HistoryRow {
            iteration: it,
            functional: sw_functional(ctx, &cur.config)?,
            residual: cur.residual,
            psi_norm: cur.config.phi.norm(ctx.dv()),
        });
        Ok(())
    };
    record(&cur, 0, &mut history)?;
    for it in 1..=params.max_iter {
        if cur.residual <= params.tol {
            break;
        }
        let hess = HessianAt::new(ctx, &cur.config)?;
        let merit = 0.5 * cur.residual * cur.residual;
        let newton = cur.residual < params.newton_threshold;
        let iters = if newton { params.cg_max_iter } else { params.flow_cg_iter };
        let dir = cgls(ctx, &hess, &scaled(&cur.grad, -1.0), iters, params.cg_rel_tol);
        // d/dt of the merit along dir.
        let slope = ctx.tangent_inner(&cur.grad, &hess.apply(&dir));
        if !(slope < 0.0) {
            break;
        }
        let mut t = 1.0;
        let next = loop {
            let trial = evaluate(ctx, step(&cur.config, &dir, t))?;
            let m = 0.5 * trial.residual * trial.residual;
            if m <= merit + params.armijo * t * slope {
                break Some(trial);
            }
            t *= 0.5;
            if t < params.min_step {
                break None;
            }
        };
        let Some(next) = next else {
            return Err(Error::SolverFailed { residual: cur.residual, history: history.iter().map(|h| h.residual).collect() });
        };
        if next.residual > cur.residual {
            monotone = false;
        }
        cur = evaluate(ctx, coulomb_gauge(ctx, &next.config))?;
        record(&cur, it, &mut history)?;
    }
    if cur.residual > params.tol {
        return Err(Error::SolverFailed { residual: cur.residual, history: history.iter().map(|h| h.residual).collect() });
    }
    let reducible = is_reducible(ctx, &cur.config, params.reducible_threshold);
    Ok(SolveOutcome {
        residual: cur.residual,
        reducible,
        iterations: history.len() - 1,
        history,
        merit_monotone: monotone,
        config: cur.config,
    })
}
