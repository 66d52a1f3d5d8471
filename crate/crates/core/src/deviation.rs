//! Deviations, generators and weights.
//!
//! A deviation on an interval `I` is a function `D: I x I -> R` with
//! `D(t, t) = 0` and `t -> D(x, t)` continuous and strictly decreasing for
//! every fixed `x`. The finite-sample deviation mean is the unique zero of
//! `t -> sum_i D(x_i, t)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Shared two-argument callable.
pub type BiFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Shared one-argument callable.
pub type UniFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A deviation together with its domain and, optionally, its analytic
/// partial derivative in the second argument.
///
/// Callables must be re-entrant; a `Deviation` is shared freely across
/// threads.
#[derive(Clone)]
pub struct Deviation {
    name: String,
    domain: Interval,
    eval: BiFn,
    d2: Option<BiFn>,
    kinks: Vec<f64>,
}

impl fmt::Debug for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Deviation")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("has_d2", &self.d2.is_some())
            .field("kinks", &self.kinks)
            .finish()
    }
}

impl Deviation {
    pub fn new<F>(name: impl Into<String>, domain: Interval, eval: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), domain, eval: Arc::new(eval), d2: None, kinks: Vec::new() }
    }

    /// Attaches the analytic `d/dt D(x, t)`.
    pub fn with_d2<F>(mut self, d2: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.d2 = Some(Arc::new(d2));
        self
    }

    /// Points `x` where `x -> D(x, t)` is not smooth. Quadrature splits there.
    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    #[inline]
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        (self.eval)(x, t)
    }

    /// Analytic `d/dt D(x, t)` when available.
    #[inline]
    pub fn d2(&self, x: f64, t: f64) -> Option<f64> {
        self.d2.as_ref().map(|d| d(x, t))
    }

    pub fn has_d2(&self) -> bool {
        self.d2.is_some()
    }

    /// `D*(x, t) = d(t) D(x, t)` for a positive `d`.
    ///
    /// `D*` generates the same means as `D`. When both `D` and `d` carry
    /// derivatives, so does `D*`.
    pub fn rescaled(&self, scale: UniFn, scale_prime: Option<UniFn>) -> Deviation {
        let inner = self.eval.clone();
        let s = scale.clone();
        let mut out = Deviation::new(format!("{}*d", self.name), self.domain, move |x, t| s(t) * inner(x, t))
            .with_kinks(self.kinks.clone());
        if let (Some(d2), Some(sp)) = (self.d2.clone(), scale_prime) {
            let inner = self.eval.clone();
            out = out.with_d2(move |x, t| sp(t) * inner(x, t) + scale(t) * d2(x, t));
        }
        out
    }

    /// `D(x, t) = x - t` on the real line.
    pub fn linear() -> Self {
        Self::linear_on(Interval::real_line())
    }

    /// `D(x, t) = x - t` restricted to `domain`.
    pub fn linear_on(domain: Interval) -> Self {
        Deviation::new("linear", domain, |x, t| x - t).with_d2(|_, _| -1.0)
    }

    /// `D(x, t) = sign(x - t) |x - t|^p` on the real line, `p > 0`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("power deviation needs p > 0, got {p}")));
        }
        let dev = Deviation::new(format!("power(p={p})"), Interval::real_line(), move |x, t| {
            let u = x - t;
            if p == 2.0 {
                u * u.abs()
            } else {
                u.signum() * u.abs().powf(p)
            }
        });
        Ok(if p == 1.0 {
            dev.with_d2(|_, _| -1.0)
        } else if p > 1.0 {
            dev.with_d2(move |x, t| -p * (x - t).abs().powf(p - 1.0))
        } else {
            dev
        })
    }

    /// `D(x, t) = x (x - t) + x^2 - t^2` on `(0, inf)`; its means are not
    /// Bajraktarevic means.
    pub fn quadratic_example() -> Self {
        Deviation::new("quadratic-example", Interval::positive(), |x, t| x * (x - t) + x * x - t * t)
            .with_d2(|x, t| -x - 2.0 * t)
    }

    /// The piecewise exponential deviation on `[-2, inf)` whose integrability
    /// interval under a lognormal law is a proper subinterval.
    pub fn ex1v() -> Self {
        Deviation::new("ex1v", Interval::closed_open(-2.0, f64::INFINITY), |x, t| {
            if x < 0.0 {
                (x * t).exp() - (x * x).exp()
            } else if x == 0.0 {
                -t
            } else {
                (-x * t).exp() - (-x * x).exp()
            }
        })
        .with_d2(|x, t| {
            if x < 0.0 {
                x * (x * t).exp()
            } else if x == 0.0 {
                -1.0
            } else {
                -x * (-x * t).exp()
            }
        })
        .with_kinks(vec![0.0])
    }

    /// `D(x, t) = p(x) (f(x) - f(t))`, sign-flipped when `f` is decreasing so
    /// that the result is always a deviation.
    pub fn bajraktarevic(f: &Generator, p: &Weight) -> Self {
        let sign = if f.increasing { 1.0 } else { -1.0 };
        let (ff, pp) = (f.f.clone(), p.p.clone());
        let mut dev = Deviation::new(format!("bajraktarevic(f={}, p={})", f.name, p.name), f.domain, move |x, t| {
            sign * pp(x) * (ff(x) - ff(t))
        });
        if let Some(fp) = f.derivative.clone() {
            let pp = p.p.clone();
            dev = dev.with_d2(move |x, t| -sign * pp(x) * fp(t));
        }
        dev
    }

    /// The deviation `f(x) - f(t)` generating the quasi-arithmetic mean.
    pub fn quasi_arithmetic(f: &Generator) -> Self {
        let mut d = Self::bajraktarevic(f, &Weight::one());
        d.name = format!("quasi-arithmetic(f={})", f.name);
        d
    }
}

/// Builds the deviation `p(x) (f(x) - f(t))` of a Bajraktarevic mean.
pub fn make_bajraktarevic_deviation(f: &Generator, p: &Weight) -> Deviation {
    Deviation::bajraktarevic(f, p)
}

/// A continuous strictly monotone generator with an explicit inverse.
#[derive(Clone)]
pub struct Generator {
    pub name: String,
    pub domain: Interval,
    /// `f(domain)`.
    pub image: Interval,
    pub f: UniFn,
    pub inverse: UniFn,
    pub derivative: Option<UniFn>,
    pub increasing: bool,
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Generator")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("image", &self.image)
            .field("increasing", &self.increasing)
            .finish()
    }
}

impl Generator {
    /// A user-supplied generator. The inverse is mandatory: means never invert
    /// generators numerically.
    pub fn new<F, G>(
        name: impl Into<String>,
        domain: Interval,
        image: Interval,
        increasing: bool,
        f: F,
        inverse: G,
    ) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            domain,
            image,
            f: Arc::new(f),
            inverse: Arc::new(inverse),
            derivative: None,
            increasing,
        }
    }

    pub fn with_derivative<F>(mut self, d: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn identity() -> Self {
        Self::new("identity", Interval::real_line(), Interval::real_line(), true, |x| x, |y| y).with_derivative(|_| 1.0)
    }

    pub fn ln() -> Self {
        Self::new("ln", Interval::positive(), Interval::real_line(), true, f64::ln, f64::exp)
            .with_derivative(|x| 1.0 / x)
    }

    pub fn exp() -> Self {
        Self::new("exp", Interval::real_line(), Interval::positive(), true, f64::exp, f64::ln).with_derivative(f64::exp)
    }

    /// `x^r` on `(0, inf)`, `r != 0`.
    pub fn power(r: f64) -> Result<Self> {
        if r == 0.0 || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("power generator needs r != 0, got {r}")));
        }
        Ok(Self::new(
            format!("power(r={r})"),
            Interval::positive(),
            Interval::positive(),
            r > 0.0,
            move |x| x.powf(r),
            move |y| y.powf(1.0 / r),
        )
        .with_derivative(move |x| r * x.powf(r - 1.0)))
    }

    /// `a x + b` on the real line, `a != 0`.
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("affine generator needs a != 0, got {a}")));
        }
        Ok(Self::new(
            format!("affine(a={a},b={b})"),
            Interval::real_line(),
            Interval::real_line(),
            a > 0.0,
            move |x| a * x + b,
            move |y| (y - b) / a,
        )
        .with_derivative(move |_| a))
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    #[inline]
    pub fn invert(&self, y: f64) -> f64 {
        (self.inverse)(y)
    }
}

/// A positive weight function.
#[derive(Clone)]
pub struct Weight {
    pub name: String,
    pub p: UniFn,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight").field("name", &self.name).finish()
    }
}

impl Weight {
    pub fn new<F>(name: impl Into<String>, p: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), p: Arc::new(p) }
    }

    pub fn one() -> Self {
        Self::new("one", |_| 1.0)
    }

    /// `p(x) = x`; positive on `(0, inf)` only.
    pub fn identity() -> Self {
        Self::new("identity", |x| x)
    }

    /// `p(x) = x^r`; positive on `(0, inf)`.
    pub fn power(r: f64) -> Self {
        Self::new(format!("power(r={r})"), move |x| x.powf(r))
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (self.p)(x)
    }
}

/// Outcome of a grid check of the deviation axioms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    /// `max |D(t, t)|` over the t-grid.
    pub diagonal_max_abs: f64,
    /// Pairs `t_i < t_j` (counted per `x`) with `D(x, t_i) <= D(x, t_j)`.
    pub monotone_violations: usize,
    pub x_grid_len: usize,
    pub t_grid_len: usize,
    pub diagonal_tol: f64,
    pub pass: bool,
}

/// Absolute tolerance for `|D(t, t)|` in [`check_deviation_axioms`].
pub const DIAGONAL_TOL: f64 = 1e-12;

/// Checks `D(t, t) = 0` and strict decrease in `t` on finite grids.
///
/// Exact ties count as violations. Grids are necessarily incomplete
/// evidence; a pass is not a proof.
pub fn check_deviation_axioms(d: &Deviation, x_grid: &[f64], t_grid: &[f64]) -> Result<AxiomReport> {
    if t_grid.len() < 3 {
        return Err(Error::BadGrid(format!("t-grid needs at least 3 points, got {}", t_grid.len())));
    }
    if x_grid.is_empty() {
        return Err(Error::BadGrid("empty x-grid".into()));
    }
    if !t_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::BadGrid("t-grid must be strictly increasing".into()));
    }
    for &v in x_grid.iter().chain(t_grid) {
        if !d.domain().contains(v) {
            return Err(Error::GridOutsideDomain { value: v, domain: d.domain().to_string() });
        }
    }

    let diagonal_max_abs =
        t_grid
            .iter()
            .map(|&t| d.eval(t, t).abs())
            .fold(0.0_f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) });

    let mut monotone_violations = 0usize;
    let mut row = vec![0.0; t_grid.len()];
    for &x in x_grid {
        for (r, &t) in row.iter_mut().zip(t_grid) {
            *r = d.eval(x, t);
        }
        for i in 0..row.len() {
            for j in (i + 1)..row.len() {
                // `!(a > b)` also counts NaN as a violation.
                if !(row[i] > row[j]) {
                    monotone_violations += 1;
                }
            }
        }
    }

    Ok(AxiomReport {
        diagonal_max_abs,
        monotone_violations,
        x_grid_len: x_grid.len(),
        t_grid_len: t_grid.len(),
        diagonal_tol: DIAGONAL_TOL,
        pass: diagonal_max_abs <= DIAGONAL_TOL && monotone_violations == 0,
    })
}

/// [`check_deviation_axioms`] on 64 x 64 Chebyshev grids of the domain.
pub fn check_deviation_axioms_default(d: &Deviation) -> Result<AxiomReport> {
    let grid = d.domain().chebyshev_grid(64);
    check_deviation_axioms(d, &grid, &grid)
}
