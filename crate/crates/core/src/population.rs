//! Expectations, integrability probes and the deviation mean of a law.

use std::cell::RefCell;

use serde::Serialize;

use crate::deviation::{Deviation, Generator, Weight};
use crate::distribution::{DistributionSpec, LawKind};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::quad::{gauss_legendre_31, integrate, neumaier_sum, QuadratureConfig};
use crate::root::{golden_section, solve_decreasing, SolverConfig};

/// Outcome of an integrability probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeVerdict {
    Finite,
    Diverging,
    Inconclusive,
}

/// Truncated integrals of `|D(x, t)|` against the law over growing windows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityProbe {
    pub t: f64,
    pub verdict: ProbeVerdict,
    pub truncated_values: Vec<f64>,
}

/// The deviation mean of a law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationMeanResult {
    pub t0: f64,
    /// `|E D(xi, t0)|`.
    pub residual: f64,
    /// Whether probes just left and right of `t0` stay integrable.
    pub interior_point: bool,
    /// Why `interior_point` is false.
    pub boundary: Option<String>,
    pub probe: IntegrabilityProbe,
    pub iterations: usize,
}

/// Relative change below which a truncated sequence counts as settled.
const CAUCHY_TOL: f64 = 1e-8;

fn quadrature_only(dist: &DistributionSpec) -> Result<()> {
    match dist.kind() {
        LawKind::SamplerOnly { .. } => Err(Error::SamplerOnlyUnsupported(dist.name().to_string())),
        _ => Ok(()),
    }
}

/// `E f(xi)`: a weighted sum for discrete laws, adaptive quadrature of
/// `f * pdf` for densities.
pub fn expect<F>(f: F, dist: &DistributionSpec, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    expect_with_breaks(f, dist, &[], cfg)
}

/// [`expect`] with extra breakpoints where `f` has kinks.
pub fn expect_with_breaks<F>(f: F, dist: &DistributionSpec, extra: &[f64], cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    match dist.kind() {
        LawKind::Discrete(atoms) => {
            let s = neumaier_sum(atoms.iter().map(|&(v, p)| p * f(v)));
            if s.is_finite() {
                Ok(s)
            } else {
                Err(Error::Divergent(format!("non-finite sum under {}", dist.name())))
            }
        }
        LawKind::Density { pdf, support } => {
            let mut breaks = dist.breakpoints().to_vec();
            breaks.extend_from_slice(extra);
            integrate(
                |x| {
                    let w = pdf(x);
                    if w == 0.0 {
                        0.0
                    } else {
                        f(x) * w
                    }
                },
                support.lo,
                support.hi,
                &breaks,
                cfg,
            )
            .map(|q| q.value)
        }
        LawKind::SamplerOnly { .. } => Err(Error::SamplerOnlyUnsupported(dist.name().to_string())),
    }
}

fn deviation_breaks(d: &Deviation, t: f64) -> Vec<f64> {
    let mut b = vec![t];
    b.extend_from_slice(d.kinks());
    b
}

/// Whether the law lives inside `domain`.
fn check_law_in(domain: &Interval, dist: &DistributionSpec) -> Result<()> {
    let bad = |v: f64| Err(Error::DomainViolation { value: v, domain: domain.to_string() });
    match dist.kind() {
        LawKind::Discrete(atoms) => match atoms.iter().find(|a| !domain.contains(a.0)) {
            Some(a) => bad(a.0),
            None => Ok(()),
        },
        // Continuous laws put no mass on a support endpoint.
        _ => {
            let s = dist.support();
            let lo_ok = s.lo >= domain.lo;
            let hi_ok = s.hi <= domain.hi;
            if !lo_ok {
                bad(s.lo)
            } else if !hi_ok {
                bad(s.hi)
            } else {
                Ok(())
            }
        }
    }
}

fn check_point(domain: &Interval, t: f64) -> Result<()> {
    if domain.contains(t) {
        Ok(())
    } else {
        Err(Error::DomainViolation { value: t, domain: domain.to_string() })
    }
}

/// `g(t) = E D(xi, t)`, refused when the probe at `t` diverges.
pub fn expect_deviation(d: &Deviation, dist: &DistributionSpec, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_point(d.domain(), t)?;
    check_law_in(d.domain(), dist)?;
    let probe = integrability_probe(d, dist, t, cfg)?;
    if probe.verdict == ProbeVerdict::Diverging {
        return Err(Error::Divergent(format!("E|D(xi, {t})| is infinite")));
    }
    g_value(d, dist, t, cfg)
}

fn g_value(d: &Deviation, dist: &DistributionSpec, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    expect_with_breaks(|x| d.eval(x, t), dist, &deviation_breaks(d, t), cfg)
}

/// Probes integrability of a nonnegative `h` against the law.
///
/// Densities are integrated over windows whose tails carry mass
/// `1e-2, 1e-4, ...` down to `cfg.tail_cut`. The verdict is finite when the
/// last three partial integrals agree to a relative `1e-8`, diverging when
/// the last one more than doubles the previous one or overflows.
pub fn probe_integrand<H>(
    h: H,
    dist: &DistributionSpec,
    extra: &[f64],
    cfg: &QuadratureConfig,
) -> Result<(ProbeVerdict, Vec<f64>)>
where
    H: Fn(f64) -> f64,
{
    let (pdf, support) = match dist.kind() {
        LawKind::Discrete(atoms) => {
            let s = neumaier_sum(atoms.iter().map(|&(v, p)| p * h(v)));
            let verdict = if s.is_finite() { ProbeVerdict::Finite } else { ProbeVerdict::Diverging };
            return Ok((verdict, vec![s]));
        }
        LawKind::Density { pdf, support } => (pdf, *support),
        LawKind::SamplerOnly { .. } => return Err(Error::SamplerOnlyUnsupported(dist.name().to_string())),
    };
    let mut breaks = dist.breakpoints().to_vec();
    breaks.extend_from_slice(extra);
    let integrand = |x: f64| {
        let w = pdf(x);
        if w == 0.0 {
            0.0
        } else {
            h(x) * w
        }
    };

    let mut levels = Vec::new();
    let mut m = 1e-2;
    while m >= cfg.tail_cut * (1.0 - 1e-9) {
        levels.push(m);
        m *= 1e-2;
    }
    if support.is_bounded() {
        levels.truncate(1);
    }
    let median = dist.median();
    let mut values = Vec::with_capacity(levels.len());
    for (k, &m) in levels.iter().enumerate() {
        let fallback = 4f64.powi(k as i32 + 1) * (1.0 + median.abs());
        let lo =
            if support.lo.is_finite() { support.lo } else { dist.lower_quantile(0.5 * m).unwrap_or(median - fallback) };
        let hi =
            if support.hi.is_finite() { support.hi } else { dist.upper_quantile(0.5 * m).unwrap_or(median + fallback) };
        let v = match integrate(integrand, lo, hi, &breaks, cfg) {
            Ok(q) => q.value,
            Err(Error::QuadratureBudgetExceeded { estimate, .. }) => estimate,
            Err(Error::Divergent(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        values.push(v);
        if !v.is_finite() {
            return Ok((ProbeVerdict::Diverging, values));
        }
    }
    Ok((classify(&values), values))
}

fn classify(values: &[f64]) -> ProbeVerdict {
    let n = values.len();
    let last = values[n - 1];
    if !last.is_finite() {
        return ProbeVerdict::Diverging;
    }
    if n < 3 {
        return ProbeVerdict::Finite;
    }
    let scale = last.abs();
    let settled = values[n - 3..].windows(2).all(|w| (w[1] - w[0]).abs() <= CAUCHY_TOL * scale);
    if settled {
        ProbeVerdict::Finite
    } else if last > 2.0 * values[n - 2] {
        ProbeVerdict::Diverging
    } else {
        ProbeVerdict::Inconclusive
    }
}

/// Probes whether `E|D(xi, t)|` is finite.
pub fn integrability_probe(
    d: &Deviation,
    dist: &DistributionSpec,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegrabilityProbe> {
    check_point(d.domain(), t)?;
    let (verdict, truncated_values) = probe_integrand(|x| d.eval(x, t).abs(), dist, &deviation_breaks(d, t), cfg)?;
    Ok(IntegrabilityProbe { t, verdict, truncated_values })
}

enum State {
    Value(f64),
    Diverging,
}

struct MeanSearch<'a> {
    d: &'a Deviation,
    dist: &'a DistributionSpec,
    search: Interval,
    cfg: &'a QuadratureConfig,
    last_failure: Option<String>,
}

impl MeanSearch<'_> {
    fn state(&mut self, t: f64) -> Result<State> {
        if !self.dist.is_discrete() {
            let p = integrability_probe(self.d, self.dist, t, self.cfg)?;
            if p.verdict == ProbeVerdict::Diverging {
                self.last_failure = Some(format!("E|D(xi, t)| diverges at t = {t}"));
                return Ok(State::Diverging);
            }
        }
        match g_value(self.d, self.dist, t, self.cfg) {
            Ok(v) if v.is_finite() => Ok(State::Value(v)),
            Ok(_) => Ok(State::Diverging),
            Err(e @ (Error::Divergent(_) | Error::QuadratureBudgetExceeded { .. })) => {
                self.last_failure = Some(format!("at t = {t}: {e}"));
                Ok(State::Diverging)
            }
            Err(e) => Err(e),
        }
    }

    /// Next trial point from `a` in direction `dir`, staying in the search
    /// interval and creeping towards an excluded end.
    fn advance(&self, a: f64, h: f64, dir: f64) -> Option<f64> {
        let cand = a + dir * h;
        if cand.is_finite() && self.search.contains(cand) {
            return Some(cand);
        }
        let bound = if dir > 0.0 { self.search.hi } else { self.search.lo };
        if !bound.is_finite() {
            return None;
        }
        if self.search.contains(bound) && a != bound {
            return Some(bound);
        }
        let mid = a + 0.5 * (bound - a);
        if self.search.contains(mid) && (mid - a).abs() > 1e-12 * (1.0 + a.abs()) {
            Some(mid)
        } else {
            None
        }
    }

    /// Last integrable point between an integrable `good` and a diverging `bad`.
    fn edge(&mut self, mut good: f64, mut g_good: f64, mut bad: f64) -> Result<(f64, f64)> {
        for _ in 0..200 {
            if (bad - good).abs() <= 1e-10 * (1.0 + good.abs()) {
                break;
            }
            let mid = 0.5 * (good + bad);
            match self.state(mid)? {
                State::Value(v) => {
                    good = mid;
                    g_good = v;
                }
                State::Diverging => bad = mid,
            }
        }
        Ok((good, g_good))
    }
}

fn initial_step(dist: &DistributionSpec, a: f64) -> f64 {
    if let Some(atoms) = dist.atoms() {
        let spread = atoms[atoms.len() - 1].0 - atoms[0].0;
        if spread > 0.0 {
            return 0.5 * spread;
        }
    }
    if let (Some(lo), Some(hi)) = (dist.lower_quantile(0.25), dist.upper_quantile(0.25)) {
        if hi > lo && (hi - lo).is_finite() {
            return hi - lo;
        }
    }
    0.5 * (1.0 + a.abs())
}

/// The deviation mean `t0` of the law: the root of `g(t) = E D(xi, t)`
/// on `search`.
///
/// The search starts at the median, expands geometrically until `g` changes
/// sign, and stops at the edge of the integrability region. A law for which
/// `g` keeps one sign up to that edge yields [`Error::NoRootInDomain`].
pub fn population_mean(
    d: &Deviation,
    dist: &DistributionSpec,
    search: &Interval,
    cfg: &QuadratureConfig,
) -> Result<PopulationMeanResult> {
    cfg.validate()?;
    quadrature_only(dist)?;
    if search.intersect(d.domain()) != Some(*search) {
        return Err(Error::InvalidParameter(format!(
            "search interval {search} is not inside the domain {}",
            d.domain()
        )));
    }
    check_law_in(d.domain(), dist)?;
    let mut ms = MeanSearch { d, dist, search: *search, cfg, last_failure: None };

    let median = dist.median();
    let s0 = if search.contains(median) {
        median
    } else {
        let (lo, hi) = search.finite_window();
        median.clamp(lo, hi).clamp(lo + 1e-9 * (hi - lo), hi - 1e-9 * (hi - lo))
    };
    let h0 = initial_step(dist, s0);

    // A first integrable point.
    let mut start = None;
    match ms.state(s0)? {
        State::Value(v) => start = Some((s0, v)),
        State::Diverging => {
            'outer: for k in 0..64 {
                let h = h0 * 2f64.powi(k);
                for dir in [1.0, -1.0] {
                    let c = s0 + dir * h;
                    if c.is_finite() && search.contains(c) {
                        if let State::Value(v) = ms.state(c)? {
                            start = Some((c, v));
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    let Some((mut a, mut ga)) = start else {
        return Err(Error::Divergent(
            ms.last_failure.unwrap_or_else(|| "no integrable point found in the search interval".into()),
        ));
    };

    if ga != 0.0 {
        // g is decreasing: move right while positive, left while negative.
        let dir = if ga > 0.0 { 1.0 } else { -1.0 };
        let mut h = h0;
        let mut bracket = None;
        for _ in 0..400 {
            let Some(b) = ms.advance(a, h, dir) else { break };
            match ms.state(b)? {
                State::Value(gb) => {
                    if gb == 0.0 {
                        a = b;
                        ga = 0.0;
                        break;
                    }
                    if (gb > 0.0) != (ga > 0.0) {
                        bracket = Some((b, gb));
                        break;
                    }
                    a = b;
                    ga = gb;
                }
                State::Diverging => {
                    let (e, ge) = ms.edge(a, ga, b)?;
                    if ge != 0.0 && (ge > 0.0) == (ga > 0.0) {
                        return Err(Error::NoRootInDomain(format!(
                            "g keeps the sign of {ga:e} up to the edge of integrability near t = {e}"
                        )));
                    }
                    if ge == 0.0 {
                        a = e;
                        ga = 0.0;
                    } else {
                        bracket = Some((e, ge));
                    }
                    break;
                }
            }
            h *= 2.0;
        }
        if ga != 0.0 {
            let Some((b, gb)) = bracket else {
                return Err(Error::NoRootInDomain(format!(
                    "g keeps the sign of {ga:e} up to the end of the search interval {search}"
                )));
            };
            let (lo, hi, glo, ghi) = if dir > 0.0 { (a, b, ga, gb) } else { (b, a, gb, ga) };
            let failure = RefCell::new(None);
            let solved = solve_decreasing(
                |t| match g_value(d, dist, t, cfg) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                },
                lo,
                hi,
                glo,
                ghi,
                &SolverConfig::default(),
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            let r = solved?;
            return finish(&mut ms, r.root, r.iterations);
        }
    }
    finish(&mut ms, a, 0)
}

fn finish(ms: &mut MeanSearch<'_>, t0: f64, iterations: usize) -> Result<PopulationMeanResult> {
    let residual = g_value(ms.d, ms.dist, t0, ms.cfg)?.abs();
    let probe = integrability_probe(ms.d, ms.dist, t0, ms.cfg)?;
    let eps = 1e-6 * (1.0 + t0.abs());
    let mut boundary = None;
    for (side, t) in [("left", t0 - eps), ("right", t0 + eps)] {
        if !ms.d.domain().contains(t) {
            boundary = Some(format!("{side} neighbour {t} leaves the domain {}", ms.d.domain()));
            break;
        }
        if let State::Diverging = ms.state(t)? {
            boundary = Some(format!("E|D(xi, t)| diverges at the {side} neighbour {t}"));
            break;
        }
    }
    Ok(PopulationMeanResult { t0, residual, interior_point: boundary.is_none(), boundary, probe, iterations })
}

fn require_integrable<H: Fn(f64) -> f64>(
    h: H,
    dist: &DistributionSpec,
    what: &str,
    cfg: &QuadratureConfig,
) -> Result<()> {
    let (verdict, _) = probe_integrand(h, dist, &[], cfg)?;
    if verdict == ProbeVerdict::Diverging {
        return Err(Error::Divergent(format!("{what} is infinite under {}", dist.name())));
    }
    Ok(())
}

/// `f^-1(E f(xi))`.
pub fn quasi_arithmetic_expected_value(f: &Generator, dist: &DistributionSpec, cfg: &QuadratureConfig) -> Result<f64> {
    bajraktarevic_expected_value(f, &Weight::one(), dist, cfg)
}

/// `f^-1(E[p(xi) f(xi)] / E p(xi))`.
pub fn bajraktarevic_expected_value(
    f: &Generator,
    p: &Weight,
    dist: &DistributionSpec,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    quadrature_only(dist)?;
    check_law_in(&f.domain, dist)?;
    require_integrable(|x| p.apply(x).abs(), dist, "E p(xi)", cfg)?;
    require_integrable(|x| (p.apply(x) * f.apply(x)).abs(), dist, "E p(xi)|f(xi)|", cfg)?;
    let ep = expect(|x| p.apply(x), dist, cfg)?;
    let epf = expect(|x| p.apply(x) * f.apply(x), dist, cfg)?;
    let ratio = epf / ep;
    if !f.image.contains(ratio) {
        return Err(Error::InverseDomain { value: ratio, image: f.image.to_string() });
    }
    Ok(f.invert(ratio))
}

/// Where the argmin oracle takes its expectation.
#[derive(Debug, Clone, Copy)]
pub enum OracleSource<'a> {
    Sample(&'a [f64]),
    Dist(&'a DistributionSpec),
}

/// `int_a^t -D(x, s) ds`, split at `s = x` where `D(x, .)` may kink.
fn anchored_rho(d: &Deviation, x: f64, a: f64, t: f64) -> f64 {
    let piece = |lo: f64, hi: f64| {
        let coarse = gauss_legendre_31(|s| -d.eval(x, s), lo, hi);
        let m = 0.5 * (lo + hi);
        let fine = gauss_legendre_31(|s| -d.eval(x, s), lo, m) + gauss_legendre_31(|s| -d.eval(x, s), m, hi);
        if (fine - coarse).abs() > 1e-12 * (1.0 + fine.abs()) {
            fine
        } else {
            coarse
        }
    };
    let (lo, hi) = (a.min(t), a.max(t));
    let sign = if t >= a { 1.0 } else { -1.0 };
    if lo == hi {
        return 0.0;
    }
    let v = if x > lo && x < hi { piece(lo, x) + piece(x, hi) } else { piece(lo, hi) };
    sign * v
}

/// Minimises `t -> E[rho(xi, t)]` (or `sum_i rho(x_i, t)`) over `t_grid`,
/// refining the winning cell by golden section.
///
/// `rho(x, t) = int_a^t -D(x, s) ds` for a fixed anchor `a`; changing the
/// anchor shifts the objective by a constant, so the minimiser is the
/// deviation mean. The anchor keeps the objective finite for laws whose
/// `E rho(xi, t)` with anchor `x` would diverge.
pub fn argmin_oracle(d: &Deviation, source: OracleSource<'_>, t_grid: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    if t_grid.len() < 3 {
        return Err(Error::BadGrid(format!("need at least 3 grid points, got {}", t_grid.len())));
    }
    if !t_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::BadGrid("grid must be strictly increasing".into()));
    }
    if let Some(&t) = t_grid.iter().find(|&&t| !d.domain().contains(t)) {
        return Err(Error::GridOutsideDomain { value: t, domain: d.domain().to_string() });
    }
    let tight = QuadratureConfig { abs_tol: cfg.abs_tol.min(1e-13), rel_tol: cfg.rel_tol.min(1e-12), ..*cfg };
    let sorted: Vec<f64> = match source {
        OracleSource::Sample(xs) => {
            if xs.is_empty() {
                return Err(Error::EmptySample);
            }
            let mut v = xs.to_vec();
            v.sort_by(f64::total_cmp);
            v
        }
        OracleSource::Dist(dist) => {
            quadrature_only(dist)?;
            Vec::new()
        }
    };
    let objective = |a: f64, t: f64| -> Result<f64> {
        match source {
            OracleSource::Sample(_) => Ok(neumaier_sum(sorted.iter().map(|&x| anchored_rho(d, x, a, t)))),
            OracleSource::Dist(dist) => {
                let mut breaks = vec![a, t];
                breaks.extend_from_slice(d.kinks());
                match expect_with_breaks(|x| anchored_rho(d, x, a, t), dist, &breaks, &tight) {
                    Err(Error::QuadratureBudgetExceeded { estimate, .. }) => Ok(estimate),
                    other => other,
                }
            }
        }
    };

    let anchor = t_grid[0];
    let mut best = (0, f64::INFINITY);
    for (i, &t) in t_grid.iter().enumerate() {
        let v = objective(anchor, t)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    if i == 0 || i == t_grid.len() - 1 {
        return Err(Error::GridTooCoarse { index: i });
    }
    // Re-anchor at the winner so the refined objective stays small.
    let anchor = t_grid[i];
    let failure = RefCell::new(None);
    let (x, _) = golden_section(
        |t| match objective(anchor, t) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::INFINITY
            }
        },
        t_grid[i - 1],
        t_grid[i + 1],
        1e-10 * (1.0 + anchor.abs()),
        200,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(x)
}
