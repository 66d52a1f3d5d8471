//! Finite-sample means.

use crate::deviation::{Deviation, Generator, Weight};
use crate::error::{Error, Result};
use crate::root::{solve_decreasing, RootResult, SolverConfig};

fn check_domain(d: &Deviation, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|&&x| !d.domain().contains(x)) {
        Some(&x) => Err(Error::DomainViolation { value: x, domain: d.domain().to_string() }),
        None => Ok(()),
    }
}

/// The deviation mean of `xs`: the unique `t` with `sum_i D(x_i, t) = 0`.
pub fn deviation_mean(d: &Deviation, xs: &[f64]) -> Result<RootResult> {
    deviation_mean_with(d, xs, &SolverConfig::default())
}

/// [`deviation_mean`] with explicit solver tolerances.
///
/// The root is searched in `[min xs, max xs]` only. The sample is sorted
/// before summation so the objective, and hence the result, does not depend
/// on the order of `xs`.
pub fn deviation_mean_with(d: &Deviation, xs: &[f64], cfg: &SolverConfig) -> Result<RootResult> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    check_domain(d, xs)?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        return Ok(RootResult::exact(lo));
    }
    let objective = |t: f64| sorted.iter().map(|&x| d.eval(x, t)).sum::<f64>();
    solve_decreasing(objective, lo, hi, objective(lo), objective(hi), cfg)
}

fn check_generator_domain(f: &Generator, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|&&x| !f.domain.contains(x)) {
        Some(&x) => Err(Error::DomainViolation { value: x, domain: f.domain.to_string() }),
        None => Ok(()),
    }
}

/// `f^-1(mean of f(x_i))`.
pub fn quasi_arithmetic_mean(f: &Generator, xs: &[f64]) -> Result<f64> {
    bajraktarevic_mean(f, &Weight::one(), xs)
}

/// `f^-1(sum p(x_i) f(x_i) / sum p(x_i))`.
pub fn bajraktarevic_mean(f: &Generator, p: &Weight, xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    check_generator_domain(f, xs)?;
    let (lo, hi) = min_max(xs);
    if lo == hi {
        return Ok(lo);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &x in xs {
        let w = p.apply(x);
        if !(w > 0.0) {
            return Err(Error::NonpositiveWeight { x, weight: w });
        }
        num += w * f.apply(x);
        den += w;
    }
    // Rounding may push the inverse a hair outside the hull.
    Ok(f.invert(num / den).clamp(lo, hi))
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn check_positive(xs: &[f64]) -> Result<()> {
    match xs.iter().find(|&&x| !(x > 0.0)) {
        Some(&x) => Err(Error::NonpositiveInput(x)),
        None => Ok(()),
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// Logarithms of the normalised elementary symmetric means
/// `e_j(xs) / C(n, j)` for `j = 0..=k`.
///
/// Adding one value at a time, the normalised means obey
/// `E_j <- ((m - j) / m) E_j + (j / m) x E_{j-1}`, a convex combination of
/// positive terms, so there is no cancellation. Running it on logarithms
/// keeps `E_j`, which scales like `x^j`, clear of overflow and underflow.
fn log_normalized_elementary_symmetric(xs: &[f64], k: usize) -> Vec<f64> {
    let mut e = vec![f64::NEG_INFINITY; k + 1];
    e[0] = 0.0;
    for (idx, &x) in xs.iter().enumerate() {
        let m = (idx + 1) as f64;
        let lx = x.ln();
        for j in (1..=k.min(idx + 1)).rev() {
            let jf = j as f64;
            let keep = if m > jf { ((m - jf) / m).ln() + e[j] } else { f64::NEG_INFINITY };
            e[j] = log_add_exp(keep, (jf / m).ln() + lx + e[j - 1]);
        }
    }
    e
}

/// `(e_k(xs) / C(n, k))^(1/k)`; the arithmetic mean for `k = 1` and the
/// geometric mean for `k = n`.
pub fn elementary_symmetric_mean(k: usize, xs: &[f64]) -> Result<f64> {
    let n = xs.len();
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    check_positive(xs)?;
    let e = log_normalized_elementary_symmetric(xs, k);
    let (lo, hi) = min_max(xs);
    // Rounding may push the result a hair outside the hull.
    Ok((e[k] / k as f64).exp().clamp(lo, hi))
}

/// The Beta-type mean `(n prod x_i / sum x_i)^(1/(n-1))`.
///
/// It is a mean but not a deviation mean: it is not invariant under
/// repeating the sample.
pub fn beta_type_mean(xs: &[f64]) -> Result<f64> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { len: n, min: 2 });
    }
    check_positive(xs)?;
    let log_prod: f64 = xs.iter().map(|x| x.ln()).sum();
    let sum: f64 = xs.iter().sum();
    Ok((((n as f64).ln() + log_prod - sum.ln()) / (n - 1) as f64).exp())
}

/// Real roots, in increasing order, of
/// `-(sum l_i) t^2 - (sum l_i x_i) t + 2 sum l_i x_i^2 = 0`.
///
/// For the quadratic-example deviation this polynomial equals
/// `sum_i l_i D(x_i, t)`, so the roots delimit the set
/// `{t : sum_i l_i D(x_i, t) <= 0}`. Returns `None` when the discriminant
/// is negative.
pub fn sublevel_set_roots(lambdas: &[f64], xs: &[f64]) -> Result<Option<(f64, f64)>> {
    if lambdas.len() != xs.len() {
        return Err(Error::LengthMismatch { left: lambdas.len(), right: xs.len() });
    }
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    check_positive(xs)?;
    let a: f64 = lambdas.iter().sum();
    let b: f64 = lambdas.iter().zip(xs).map(|(l, x)| l * x).sum();
    let c: f64 = lambdas.iter().zip(xs).map(|(l, x)| l * x * x).sum();
    if a == 0.0 {
        return Err(Error::ZeroLeadingCoefficient);
    }
    // Equivalent monic-sign form: a t^2 + b t - 2c = 0.
    let disc = b * b + 8.0 * a * c;
    if disc < 0.0 {
        return Ok(None);
    }
    let sq = disc.sqrt();
    // Cancellation-free pair of roots.
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, -2.0 * c / q) };
    Ok(Some((r1.min(r2), r1.max(r2))))
}

/// `sum_i l_i D(x_i, t)` for the quadratic-example deviation.
pub fn weighted_quadratic_example_sum(lambdas: &[f64], xs: &[f64], t: f64) -> f64 {
    lambdas.iter().zip(xs).map(|(l, x)| l * (x * (x - t) + x * x - t * t)).sum()
}
