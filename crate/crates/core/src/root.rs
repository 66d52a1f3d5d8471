//! Bracketed scalar solvers.
//!
//! The root solver targets continuous, strictly decreasing objectives with a
//! known sign change. It uses Illinois-weighted false position and falls back
//! to bisection whenever two consecutive steps fail to halve the bracket, so
//! it converges for merely continuous functions and never leaves the bracket.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Used by callers to check `|objective(root)|` relative to a scale.
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, residual_tol: 1e-10, max_iter: 200 }
    }
}

/// A located root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub root: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    /// Objective value at `root`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl RootResult {
    /// A root known without iteration.
    pub fn exact(root: f64) -> Self {
        Self { root, bracket_lo: root, bracket_hi: root, residual: 0.0, iterations: 0, converged: true }
    }
}

/// Finds the root of a strictly decreasing `f` on `[lo, hi]`.
///
/// `f_lo` and `f_hi` are the (already evaluated) objective values at the
/// ends; the caller guarantees `f_lo >= 0 >= f_hi`.
pub fn solve_decreasing<F>(mut f: F, lo: f64, hi: f64, f_lo: f64, f_hi: f64, cfg: &SolverConfig) -> Result<RootResult>
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(lo <= hi);
    if f_lo == 0.0 {
        return Ok(done(lo, lo, lo, 0.0, 0));
    }
    if f_hi == 0.0 {
        return Ok(done(hi, hi, hi, 0.0, 0));
    }
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::InvalidParameter(format!("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")));
    }

    let (mut a, mut b, mut fa, mut fb) = (lo, hi, f_lo, f_hi);
    // +1 when `a` was replaced on the previous step, -1 for `b`.
    let mut last_side = 0i8;
    // Bracket widths one and two steps ago.
    let mut history = [f64::INFINITY, f64::INFINITY];
    // Best interior point evaluated so far.
    let mut best: Option<(f64, f64)> = None;

    for it in 1..=cfg.max_iter {
        let w = b - a;
        let tol = cfg.abs_tol + cfg.rel_tol * a.abs().max(b.abs());
        if w <= tol {
            let (r, fr) = best.unwrap_or_else(|| {
                let m = a + 0.5 * w;
                (m, f(m))
            });
            return Ok(done(r, a, b, fr, it - 1));
        }

        // Bisect when the last two steps together failed to halve the bracket.
        let mut c = if w > 0.5 * history[0] { a + 0.5 * w } else { (a * fb - b * fa) / (fb - fa) };
        if !(c > a && c < b) {
            c = a + 0.5 * w;
        }
        if !(c > a && c < b) {
            // No representable point strictly inside the bracket.
            let (r, fr) = best.unwrap_or_else(|| (a, f(a)));
            return Ok(done(r, a, b, fr, it - 1));
        }

        let fc = f(c);
        if fc.is_nan() {
            return Err(Error::InvalidParameter(format!("objective is NaN at {c}")));
        }
        if best.is_none_or(|(_, fb_)| fc.abs() < fb_.abs()) {
            best = Some((c, fc));
        }
        if fc == 0.0 {
            return Ok(done(c, c, c, 0.0, it));
        }
        history = [history[1], w];
        if fc > 0.0 {
            a = c;
            fa = fc;
            if last_side == 1 {
                fb *= 0.5;
            }
            last_side = 1;
        } else {
            b = c;
            fb = fc;
            if last_side == -1 {
                fa *= 0.5;
            }
            last_side = -1;
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iter })
}

fn done(root: f64, lo: f64, hi: f64, residual: f64, iterations: usize) -> RootResult {
    RootResult { root, bracket_lo: lo.min(root), bracket_hi: hi.max(root), residual, iterations, converged: true }
}

/// Golden-section minimisation of a unimodal `f` on `[a, b]`.
///
/// Returns `(argmin, min)`. Infinite values are allowed and compare as
/// larger than every finite value.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
