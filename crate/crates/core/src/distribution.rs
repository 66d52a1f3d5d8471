//! Univariate laws: discrete pmfs, densities on an interval, and pure samplers.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::deviation::UniFn;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::quad::{integrate, QuadratureConfig};

/// The random stream every sampler draws from.
pub type StreamRng = ChaCha8Rng;

pub type Sampler = Arc<dyn Fn(&mut StreamRng) -> f64 + Send + Sync>;

/// How the law is represented.
#[derive(Clone)]
pub enum LawKind {
    /// `(value, probability)` pairs sorted by value.
    Discrete(Vec<(f64, f64)>),
    Density {
        pdf: UniFn,
        support: Interval,
    },
    SamplerOnly {
        support: Interval,
    },
}

/// A univariate law with a sampler and, for discrete and density laws,
/// everything needed for expectations.
#[derive(Clone)]
pub struct DistributionSpec {
    name: String,
    kind: LawKind,
    sampler: Sampler,
    /// `m -> x` with `P(xi <= x) = m`.
    lower_quantile: Option<UniFn>,
    /// `m -> x` with `P(xi > x) = m`.
    upper_quantile: Option<UniFn>,
    cdf: Option<UniFn>,
    breakpoints: Vec<f64>,
    esssup: Option<f64>,
    moments: BTreeMap<u32, f64>,
}

impl fmt::Debug for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistributionSpec")
            .field("name", &self.name)
            .field("support", &self.support())
            .finish_non_exhaustive()
    }
}

/// A uniform draw in the open unit interval.
fn open_unit(rng: &mut StreamRng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

impl DistributionSpec {
    /// A discrete law. Probabilities must be positive and sum to one within
    /// `1e-12`; equal values are merged.
    pub fn discrete(name: impl Into<String>, atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyInput);
        }
        for &(v, p) in atoms {
            check_finite("atom value", v)?;
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidParameter(format!("atom probability must be positive, got {p}")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}, not 1")));
        }
        let mut sorted = atoms.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (v, p) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        let values: Vec<f64> = merged.iter().map(|a| a.0).collect();
        let mut cum = Vec::with_capacity(merged.len());
        let mut acc = 0.0;
        for a in &merged {
            acc += a.1;
            cum.push(acc);
        }
        let cum_total = acc;
        let (vs, cs) = (values.clone(), cum.clone());
        let sampler: Sampler = Arc::new(move |rng| {
            let u = rng.random::<f64>() * cum_total;
            let i = cs.partition_point(|&c| c <= u).min(vs.len() - 1);
            vs[i]
        });
        let mut moments = BTreeMap::new();
        for k in 1..=4u32 {
            moments.insert(k, merged.iter().map(|(v, p)| p * v.powi(k as i32)).sum());
        }
        let esssup = values.last().copied();
        Ok(Self {
            name: name.into(),
            kind: LawKind::Discrete(merged),
            sampler,
            lower_quantile: None,
            upper_quantile: None,
            cdf: None,
            breakpoints: Vec::new(),
            esssup,
            moments,
        })
    }

    /// A law with density `pdf` on `support`. The density must integrate to
    /// one within `1e-8`; this is checked here.
    pub fn density<P, S>(name: impl Into<String>, support: Interval, pdf: P, sampler: S) -> Result<Self>
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(&mut StreamRng) -> f64 + Send + Sync + 'static,
    {
        let pdf: UniFn = Arc::new(pdf);
        let mass = integrate(|x| pdf(x), support.lo, support.hi, &[], &QuadratureConfig::default())?;
        if (mass.value - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!("density integrates to {}, not 1", mass.value)));
        }
        let esssup = support.hi;
        Ok(Self {
            name: name.into(),
            kind: LawKind::Density { pdf, support },
            sampler: Arc::new(sampler),
            lower_quantile: None,
            upper_quantile: None,
            cdf: None,
            breakpoints: Vec::new(),
            esssup: Some(esssup),
            moments: BTreeMap::new(),
        })
    }

    /// A law known only through its sampler. Expectations are refused.
    pub fn sampler_only<S>(name: impl Into<String>, support: Interval, sampler: S) -> Self
    where
        S: Fn(&mut StreamRng) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            kind: LawKind::SamplerOnly { support },
            sampler: Arc::new(sampler),
            lower_quantile: None,
            upper_quantile: None,
            cdf: None,
            breakpoints: Vec::new(),
            esssup: None,
            moments: BTreeMap::new(),
        }
    }

    /// Attaches tail quantiles: `lower(m)` has `P(xi <= x) = m` and
    /// `upper(m)` has `P(xi > x) = m`.
    pub fn with_quantiles<L, U>(mut self, lower: L, upper: U) -> Self
    where
        L: Fn(f64) -> f64 + Send + Sync + 'static,
        U: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.lower_quantile = Some(Arc::new(lower));
        self.upper_quantile = Some(Arc::new(upper));
        self
    }

    pub fn with_cdf<F>(mut self, cdf: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.cdf = Some(Arc::new(cdf));
        self
    }

    /// Points where the density is not smooth.
    pub fn with_breakpoints(mut self, b: Vec<f64>) -> Self {
        self.breakpoints = b;
        self
    }

    /// Declared essential supremum (densities are never probed numerically).
    pub fn with_esssup(mut self, s: f64) -> Self {
        self.esssup = Some(s);
        self
    }

    pub fn with_moment(mut self, order: u32, value: f64) -> Self {
        self.moments.insert(order, value);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, LawKind::Discrete(_))
    }

    pub fn atoms(&self) -> Option<&[(f64, f64)]> {
        match &self.kind {
            LawKind::Discrete(a) => Some(a),
            _ => None,
        }
    }

    /// Smallest interval carrying the law.
    pub fn support(&self) -> Interval {
        match &self.kind {
            LawKind::Discrete(a) => {
                let (lo, hi) = (a[0].0, a[a.len() - 1].0);
                if lo < hi {
                    Interval::closed(lo, hi)
                } else {
                    // A point mass: report a tiny closed neighbourhood.
                    let eps = f64::EPSILON * (1.0 + lo.abs());
                    Interval::closed(lo - eps, lo + eps)
                }
            }
            LawKind::Density { support, .. } | LawKind::SamplerOnly { support } => *support,
        }
    }

    pub fn pdf(&self, x: f64) -> Option<f64> {
        match &self.kind {
            LawKind::Density { pdf, support } => Some(if support.contains(x) { pdf(x) } else { 0.0 }),
            _ => None,
        }
    }

    pub fn cdf(&self, x: f64) -> Option<f64> {
        match &self.kind {
            LawKind::Discrete(a) => Some(a.iter().filter(|(v, _)| *v <= x).map(|(_, p)| p).sum::<f64>().min(1.0)),
            _ => self.cdf.as_ref().map(|c| c(x)),
        }
    }

    pub fn lower_quantile(&self, m: f64) -> Option<f64> {
        self.lower_quantile.as_ref().map(|q| q(m))
    }

    pub fn upper_quantile(&self, m: f64) -> Option<f64> {
        self.upper_quantile.as_ref().map(|q| q(m))
    }

    /// The median, or the weighted median atom of a discrete law.
    pub fn median(&self) -> f64 {
        if let LawKind::Discrete(a) = &self.kind {
            let mut acc = 0.0;
            for &(v, p) in a {
                acc += p;
                if acc >= 0.5 {
                    return v;
                }
            }
            return a[a.len() - 1].0;
        }
        if let Some(q) = &self.lower_quantile {
            return q(0.5);
        }
        let s = self.support();
        let (lo, hi) = s.finite_window();
        0.5 * (lo + hi)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn esssup(&self) -> Option<f64> {
        self.esssup
    }

    pub fn analytic_moment(&self, order: u32) -> Option<f64> {
        self.moments.get(&order).copied()
    }

    pub fn analytic_moments(&self) -> &BTreeMap<u32, f64> {
        &self.moments
    }

    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        (self.sampler)(rng)
    }

    // Presets.

    /// Exponential law with the given rate.
    pub fn exponential(rate: f64) -> Result<Self> {
        check_positive("rate", rate)?;
        let mut d = Self::density(
            format!("exponential(rate={rate})"),
            Interval::closed_open(0.0, f64::INFINITY),
            move |x| rate * (-rate * x).exp(),
            move |rng| -open_unit(rng).ln() / rate,
        )?
        .with_quantiles(move |m| -(-m).ln_1p() / rate, move |m| -m.ln() / rate)
        .with_cdf(move |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() });
        let mut fact = 1.0;
        for k in 1..=4u32 {
            fact *= k as f64;
            d = d.with_moment(k, fact / rate.powi(k as i32));
        }
        Ok(d)
    }

    /// Density `3 x^-4` on `(1, inf)`.
    pub fn inverse_quartic() -> Self {
        Self::density(
            "inverse-quartic",
            Interval::open(1.0, f64::INFINITY),
            |x: f64| 3.0 * x.powi(-4),
            |rng| open_unit(rng).powf(-1.0 / 3.0),
        )
        .expect("valid preset")
        .with_quantiles(|m: f64| (1.0 - m).powf(-1.0 / 3.0), |m: f64| m.powf(-1.0 / 3.0))
        .with_cdf(|x: f64| if x <= 1.0 { 0.0 } else { 1.0 - x.powi(-3) })
        .with_moment(1, 1.5)
        .with_moment(2, 3.0)
    }

    /// `exp(N(mu, sigma^2))`.
    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        check_finite("mu", mu)?;
        check_positive("sigma", sigma)?;
        Self::shifted_lognormal_impl(format!("lognormal(mu={mu},sigma={sigma})"), mu, sigma, 0.0)
    }

    /// `exp(eta) - 2` with `eta` standard normal.
    pub fn shifted_lognormal() -> Self {
        Self::shifted_lognormal_impl("shifted-lognormal".into(), 0.0, 1.0, -2.0).expect("valid preset")
    }

    fn shifted_lognormal_impl(name: String, mu: f64, sigma: f64, shift: f64) -> Result<Self> {
        let norm = std_normal();
        let c = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let mut d = Self::density(
            name,
            Interval::open(shift, f64::INFINITY),
            move |x| {
                let y = x - shift;
                if y <= 0.0 {
                    return 0.0;
                }
                let z = (y.ln() - mu) / sigma;
                c / y * (-0.5 * z * z).exp()
            },
            move |rng| {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp() + shift
            },
        )?
        .with_quantiles(
            move |m| (mu + sigma * norm.inverse_cdf(m)).exp() + shift,
            move |m| (mu - sigma * norm.inverse_cdf(m)).exp() + shift,
        )
        .with_cdf(move |x| {
            let y = x - shift;
            if y <= 0.0 {
                0.0
            } else {
                norm.cdf((y.ln() - mu) / sigma)
            }
        });
        if shift == 0.0 {
            for k in 1..=4u32 {
                let k = k as f64;
                d = d.with_moment(k as u32, (k * mu + 0.5 * k * k * sigma * sigma).exp());
            }
        }
        Ok(d)
    }

    /// Uniform on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        check_finite("a", a)?;
        check_finite("b", b)?;
        if !(a < b) {
            return Err(Error::InvalidInterval { lo: a, hi: b });
        }
        let w = b - a;
        let mut d = Self::density(
            format!("uniform(a={a},b={b})"),
            Interval::closed(a, b),
            move |_| 1.0 / w,
            move |rng| a + w * rng.random::<f64>(),
        )?
        .with_quantiles(move |m| a + m * w, move |m| b - m * w)
        .with_cdf(move |x| ((x - a) / w).clamp(0.0, 1.0));
        for k in 1..=4i32 {
            let kf = k as f64;
            d = d.with_moment(k as u32, (b.powi(k + 1) - a.powi(k + 1)) / ((kf + 1.0) * w));
        }
        Ok(d)
    }

    /// Bernoulli law on `{0, 1}` with `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("bernoulli p must lie in (0, 1), got {p}")));
        }
        Ok(Self::discrete("", &[(0.0, 1.0 - p), (1.0, p)])?.with_name(format!("bernoulli(p={p})")))
    }

    /// Unit mass at `v`.
    pub fn pointmass(v: f64) -> Result<Self> {
        Ok(Self::discrete("", &[(v, 1.0)])?.with_name(format!("pointmass(v={v})")))
    }

    /// Normal law `N(mu, sigma^2)`.
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        check_finite("mu", mu)?;
        check_positive("sigma", sigma)?;
        let norm = Normal::new(mu, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let std = std_normal();
        let c = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        Ok(Self::density(
            format!("normal(mu={mu},sigma={sigma})"),
            Interval::real_line(),
            move |x| {
                let z = (x - mu) / sigma;
                c * (-0.5 * z * z).exp()
            },
            move |rng| mu + sigma * rng.sample::<f64, _>(StandardNormal),
        )?
        .with_quantiles(move |m| mu + sigma * std.inverse_cdf(m), move |m| mu - sigma * std.inverse_cdf(m))
        .with_cdf(move |x| norm.cdf(x))
        .with_moment(1, mu)
        .with_moment(2, mu * mu + sigma * sigma))
    }

    /// `N(mu, sigma^2)` conditioned on `[a, b]`.
    pub fn truncated_normal(mu: f64, sigma: f64, a: f64, b: f64) -> Result<Self> {
        check_finite("mu", mu)?;
        check_positive("sigma", sigma)?;
        if !(a < b) || a.is_nan() || b.is_nan() {
            return Err(Error::InvalidInterval { lo: a, hi: b });
        }
        let std = std_normal();
        let (alpha, beta) = ((a - mu) / sigma, (b - mu) / sigma);
        let (pa, pb) = (std.cdf(alpha), std.cdf(beta));
        let z = pb - pa;
        if !(z > 1e-12) {
            return Err(Error::InvalidParameter("truncation window carries no mass".into()));
        }
        let c = 1.0 / (sigma * z * (2.0 * std::f64::consts::PI).sqrt());
        let inv = move |m: f64| (mu + sigma * std.inverse_cdf(m)).clamp(a, b);
        let support = Interval::new(a, b, false, false)?;
        Ok(Self::density(
            format!("truncated-normal(mu={mu},sigma={sigma},a={a},b={b})"),
            support,
            move |x| {
                let u = (x - mu) / sigma;
                c * (-0.5 * u * u).exp()
            },
            move |rng| inv(pa + z * open_unit(rng)),
        )?
        .with_quantiles(move |m| inv(pa + m * z), move |m| inv(pb - m * z))
        .with_cdf(move |x| ((std.cdf((x - mu) / sigma) - pa) / z).clamp(0.0, 1.0)))
    }
}
