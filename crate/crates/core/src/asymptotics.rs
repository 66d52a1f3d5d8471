//! Limit-theorem constants: asymptotic variance, the iterated-logarithm
//! constant, and large-deviation rates.

use std::cell::RefCell;

use serde::Serialize;

use crate::deviation::{Deviation, Generator, Weight};
use crate::distribution::{DistributionSpec, LawKind};
use crate::error::{Error, Result};
use crate::population::{
    bajraktarevic_expected_value, expect, expect_deviation, expect_with_breaks, population_mean, probe_integrand,
    ProbeVerdict,
};
use crate::quad::QuadratureConfig;
use crate::root::golden_section;

/// Exponents above this are treated as overflow.
const EXP_CLAMP: f64 = 700.0;
/// The rate search gives up on a bracket beyond this `c`.
const C_LIMIT: f64 = 1.152_921_504_606_847e18; // 2^60

/// The constants of the central limit theorem and the law of the iterated
/// logarithm for deviation means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticConstants {
    pub t0: f64,
    /// `E D(xi, t0)^2`.
    pub m2: f64,
    /// `E[-d/dt D(xi, t0)]`.
    pub d1: f64,
    /// `m2 / d1^2`.
    pub sigma2: f64,
    /// `sqrt(sigma2)`.
    pub lil_c: f64,
}

/// The large-deviation rate `inf_{c>0} E exp(c D(xi, x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LDResult {
    pub x: f64,
    pub inf_phi: f64,
    pub c_star: f64,
    /// `-ln inf_phi`.
    pub gamma: f64,
    /// Bracket the golden-section search ran on.
    pub c_lo: f64,
    pub c_hi: f64,
}

/// `d/dt D(x, t)`: analytic when the deviation carries it, otherwise a
/// central difference with step `1e-6 (1 + |t|)`, one-sided at the edge of
/// the domain.
pub fn d2_deviation(d: &Deviation, x: f64, t: f64) -> Result<f64> {
    if let Some(v) = d.d2(x, t) {
        return Ok(v);
    }
    let h = 1e-6 * (1.0 + t.abs());
    let dom = d.domain();
    let (up, down) = (dom.contains(t + h), dom.contains(t - h));
    match (down, up) {
        (true, true) => Ok((d.eval(x, t + h) - d.eval(x, t - h)) / (2.0 * h)),
        (false, true) if dom.contains(t) => Ok((d.eval(x, t + h) - d.eval(x, t)) / h),
        (true, false) if dom.contains(t) => Ok((d.eval(x, t) - d.eval(x, t - h)) / h),
        _ => Err(Error::BoundaryStep { t }),
    }
}

/// `t0`, `E D(xi, t0)^2` and `E[-d/dt D(xi, t0)]` together with the derived
/// variance and iterated-logarithm constant.
pub fn asymptotic_constants(
    d: &Deviation,
    dist: &DistributionSpec,
    cfg: &QuadratureConfig,
) -> Result<AsymptoticConstants> {
    let pm = population_mean(d, dist, d.domain(), cfg)?;
    if !pm.interior_point {
        return Err(Error::NotInteriorPoint { t0: pm.t0 });
    }
    let t0 = pm.t0;
    let mut breaks = vec![t0];
    breaks.extend_from_slice(d.kinks());
    let m2 = expect_with_breaks(|x| d.eval(x, t0).powi(2), dist, &breaks, cfg)?;
    if !(m2 > 0.0) {
        return Err(Error::DegenerateDistribution { m2 });
    }
    let failure = RefCell::new(None);
    let d1 = expect_with_breaks(
        |x| match d2_deviation(d, x, t0) {
            Ok(v) => -v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        dist,
        &breaks,
        cfg,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if !(d1 > 0.0) {
        return Err(Error::NonpositiveSlope { d1 });
    }
    let sigma2 = m2 / (d1 * d1);
    Ok(AsymptoticConstants { t0, m2, d1, sigma2, lil_c: sigma2.sqrt() })
}

/// The asymptotic variance of Bajraktarevic means, assembled from
/// `E p`, `E pf`, `Var p`, `Var pf`, `Cov(p, pf)` and `f'` at the
/// Bajraktarevic expected value.
pub fn bajraktarevic_sigma2(f: &Generator, p: &Weight, dist: &DistributionSpec, cfg: &QuadratureConfig) -> Result<f64> {
    let b = bajraktarevic_expected_value(f, p, dist, cfg)?;
    let deriv = f
        .derivative
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter(format!("generator {} has no derivative", f.name)))?;
    let fp = deriv(b);
    if !(fp != 0.0 && fp.is_finite()) {
        return Err(Error::ZeroDerivative(b));
    }
    for (what, h) in [
        ("E p(xi)^2", Box::new(|x: f64| p.apply(x).powi(2)) as Box<dyn Fn(f64) -> f64>),
        ("E (p(xi) f(xi))^2", Box::new(|x: f64| (p.apply(x) * f.apply(x)).powi(2))),
    ] {
        let (verdict, _) = probe_integrand(h, dist, &[], cfg)?;
        if verdict == ProbeVerdict::Diverging {
            return Err(Error::Divergent(format!("{what} is infinite under {}", dist.name())));
        }
    }
    let pf = |x: f64| p.apply(x) * f.apply(x);
    let ep = expect(|x| p.apply(x), dist, cfg)?;
    let epf = expect(pf, dist, cfg)?;
    let var_p = expect(|x| (p.apply(x) - ep).powi(2), dist, cfg)?;
    let var_pf = expect(|x| (pf(x) - epf).powi(2), dist, cfg)?;
    let cov = expect(|x| (p.apply(x) - ep) * (pf(x) - epf), dist, cfg)?;
    let bracket = ep * ep * var_pf + epf * epf * var_p - 2.0 * ep * epf * cov;
    Ok(bracket / (ep.powi(4) * fp * fp))
}

/// `ln E exp(c h(xi))` and its derivative in `c`; `+inf` on overflow.
struct LogMgf<'a, H: Fn(f64) -> f64> {
    h: H,
    dist: &'a DistributionSpec,
    breaks: Vec<f64>,
    cfg: &'a QuadratureConfig,
}

impl<H: Fn(f64) -> f64> LogMgf<'_, H> {
    fn eval(&self, c: f64) -> Result<(f64, f64)> {
        match self.dist.kind() {
            LawKind::Discrete(atoms) => {
                let m = atoms.iter().map(|&(v, _)| c * (self.h)(v)).fold(f64::NEG_INFINITY, f64::max);
                let (mut s0, mut s1) = (0.0, 0.0);
                for &(v, p) in atoms {
                    let hv = (self.h)(v);
                    let w = p * (c * hv - m).exp();
                    s0 += w;
                    s1 += w * hv;
                }
                Ok((m + s0.ln(), s1 / s0))
            }
            _ => {
                let e = |scale: bool| {
                    expect_with_breaks(
                        |x| {
                            let hv = (self.h)(x);
                            let a = c * hv;
                            if a > EXP_CLAMP {
                                f64::INFINITY
                            } else if scale {
                                hv * a.exp()
                            } else {
                                a.exp()
                            }
                        },
                        self.dist,
                        &self.breaks,
                        self.cfg,
                    )
                };
                match e(false) {
                    Ok(phi) if phi.is_finite() => {
                        let dphi = e(true)?;
                        Ok((phi.ln(), dphi / phi))
                    }
                    // An unresolvable integral is taken as the infinite side of the bracket.
                    Ok(_) | Err(Error::Divergent(_) | Error::QuadratureBudgetExceeded { .. }) => {
                        Ok((f64::INFINITY, f64::INFINITY))
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }
}

/// Minimises the convex `c -> ln E exp(c h(xi))` over `c > 0` given a
/// negative slope at zero. Returns `(c*, min, c_lo, c_hi)`.
fn minimise_log_mgf<H: Fn(f64) -> f64>(lm: &LogMgf<'_, H>) -> Result<(f64, f64, f64, f64)> {
    let (v0, _) = lm.eval(1e-6)?;
    if !v0.is_finite() {
        return Err(Error::Divergent("the moment generating function is infinite near c = 0".into()));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    loop {
        let (v, slope) = lm.eval(hi)?;
        if !v.is_finite() || slope >= 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > C_LIMIT {
            return Err(Error::FlatObjective);
        }
    }
    let failure = RefCell::new(None);
    let (c, v) = golden_section(
        |c| match lm.eval(c) {
            Ok((v, _)) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-10 * hi.max(1.0),
        400,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((c, v, lo, hi))
}

/// `phi(c, x) = E exp(c D(xi, x))`.
pub fn mgf_phi(d: &Deviation, dist: &DistributionSpec, c: f64, x: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
    }
    if !d.domain().contains(x) {
        return Err(Error::DomainViolation { value: x, domain: d.domain().to_string() });
    }
    let mut breaks = vec![x];
    breaks.extend_from_slice(d.kinks());
    if !dist.is_discrete() {
        let (verdict, _) = probe_integrand(
            |y| {
                let a = c * d.eval(y, x);
                if a > EXP_CLAMP {
                    f64::INFINITY
                } else {
                    a.exp()
                }
            },
            dist,
            &breaks,
            cfg,
        )?;
        if verdict == ProbeVerdict::Diverging {
            return Err(Error::Divergent(format!("E exp({c} D(xi, {x})) is infinite")));
        }
    }
    let lm = LogMgf { h: |y| d.eval(y, x), dist, breaks, cfg };
    let (v, _) = lm.eval(c)?;
    if v.is_finite() {
        Ok(v.exp())
    } else {
        Err(Error::Divergent(format!("E exp({c} D(xi, {x})) overflows")))
    }
}

/// `inf_{c>0} phi(c, x)` and the rate `gamma = -ln inf phi`.
pub fn ld_rate(d: &Deviation, dist: &DistributionSpec, x: f64, cfg: &QuadratureConfig) -> Result<LDResult> {
    let slope = expect_deviation(d, dist, x, cfg)?;
    if slope >= 0.0 {
        return Err(Error::NotBeyondMean { x, slope });
    }
    if let Some(atoms) = dist.atoms() {
        let sup = atoms.iter().map(|&(v, _)| d.eval(v, x)).fold(f64::NEG_INFINITY, f64::max);
        if sup <= 0.0 {
            return Err(Error::FlatObjective);
        }
    }
    let mut breaks = vec![x];
    breaks.extend_from_slice(d.kinks());
    let lm = LogMgf { h: |y| d.eval(y, x), dist, breaks, cfg };
    let (c_star, v, c_lo, c_hi) = minimise_log_mgf(&lm)?;
    Ok(LDResult { x, inf_phi: v.exp(), c_star, gamma: -v, c_lo, c_hi })
}

/// Cramer's rate `sup_{c>0} {c y - ln E exp(c xi)}` for `E xi < y < esssup xi`.
pub fn cramer_gamma(dist: &DistributionSpec, y: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let mean = expect(|x| x, dist, cfg)?;
    let sup = match dist.atoms() {
        Some(a) => a[a.len() - 1].0,
        None => dist.esssup().unwrap_or(f64::INFINITY),
    };
    if !(y > mean && y < sup) {
        return Err(Error::OutOfRange { y, lo: mean, hi: sup });
    }
    // c y - ln E e^{c xi} is concave; minimise its negative on its own
    // cumulant route (no centring at y).
    let cum = LogMgf { h: |x| x, dist, breaks: Vec::new(), cfg };
    let neg = |c: f64| -> Result<(f64, f64)> {
        let (k, dk) = cum.eval(c)?;
        Ok((k - c * y, dk - y))
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    loop {
        let (v, slope) = neg(hi)?;
        if !v.is_finite() || slope >= 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > C_LIMIT {
            return Err(Error::FlatObjective);
        }
    }
    let failure = RefCell::new(None);
    let (_, v) = golden_section(
        |c| match neg(c) {
            Ok((v, _)) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-10 * hi.max(1.0),
        400,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(-v)
}
