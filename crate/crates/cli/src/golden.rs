//! The reference-value suite run by `devmean verify-paper`.

use devmean::{
    asymptotic_constants, expect, expect_deviation, integrability_probe, population_mean, sublevel_set_roots,
    Deviation, DistributionSpec, ProbeVerdict, QuadratureConfig,
};

/// One reference value and what the library computed for it.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenCheck {
    pub id: String,
    pub expected: f64,
    pub computed: f64,
    pub tolerance: f64,
    /// Whether `tolerance` is relative to `|expected|`.
    pub relative: bool,
    pub source: String,
    pub pass: bool,
}

impl GoldenCheck {
    fn new(id: &str, expected: f64, computed: f64, tolerance: f64, relative: bool, source: &str) -> Self {
        let bound = if relative { tolerance * expected.abs() } else { tolerance };
        Self {
            id: id.to_string(),
            expected,
            computed,
            tolerance,
            relative,
            source: source.to_string(),
            pass: (expected - computed).abs() <= bound,
        }
    }

    fn abs(id: &str, expected: f64, computed: f64, tolerance: f64, source: &str) -> Self {
        Self::new(id, expected, computed, tolerance, false, source)
    }

    /// A yes/no outcome recorded as 1 or 0.
    fn flag(id: &str, holds: bool, source: &str) -> Self {
        Self::new(id, 1.0, if holds { 1.0 } else { 0.0 }, 0.0, false, source)
    }
}

fn or_nan<E>(r: Result<f64, E>) -> f64 {
    r.unwrap_or(f64::NAN)
}

/// Runs every check. Failures are reported in the returned rows, never as
/// errors.
pub fn verify_paper() -> Vec<GoldenCheck> {
    let cfg = QuadratureConfig::default();
    let sq = Deviation::power(2.0).expect("p = 2 is valid");
    let exp1 = DistributionSpec::exponential(1.0).expect("rate 1 is valid");
    let mut out = Vec::new();

    out.push(GoldenCheck::abs(
        "exp-quadratic-root",
        1.300075,
        or_nan(population_mean(&sq, &exp1, sq.domain(), &cfg).map(|r| r.t0)),
        5e-6,
        "reference root of 4e^{-t} = (1 - t)^2 + 1",
    ));
    out.push(GoldenCheck::abs(
        "inverse-quartic-root",
        2.0,
        or_nan(population_mean(&sq, &DistributionSpec::inverse_quartic(), sq.domain(), &cfg).map(|r| r.t0)),
        1e-8,
        "reference mean of the density 3x^-4 on (1, inf)",
    ));
    out.push(GoldenCheck::abs(
        "inverse-quartic-second-moment",
        3.0,
        or_nan(expect(|x| x * x, &DistributionSpec::inverse_quartic(), &cfg)),
        1e-8,
        "reference E xi^2 = 3 int_1^inf x^-2 dx",
    ));
    for t in [-1.0, 0.0, 0.5, 1.0, 2.0] {
        let closed = if t <= 0.0 { (t - 1.0_f64).powi(2) + 1.0 } else { 4.0 * (-t).exp() - (1.0 - t).powi(2) - 1.0 };
        out.push(GoldenCheck::abs(
            &format!("exp-quadratic-expectation-t={t}"),
            closed,
            or_nan(expect_deviation(&sq, &exp1, t, &cfg)),
            1e-8,
            "reference piecewise formula for E sign(xi - t)|xi - t|^2",
        ));
    }

    let roots = sublevel_set_roots(&[51.0, -50.0], &[50.0, 101.0]).ok().flatten();
    let s = 3_189_600_f64.sqrt();
    let (lo, hi) = roots.unwrap_or((f64::NAN, f64::NAN));
    out.push(GoldenCheck::new(
        "claim-counterexample-tminus",
        (2500.0 - s) / 2.0,
        lo,
        1e-12,
        true,
        "reference t- = (2500 - sqrt 3189600)/2",
    ));
    out.push(GoldenCheck::new(
        "claim-counterexample-tplus",
        (2500.0 + s) / 2.0,
        hi,
        1e-12,
        true,
        "reference t+ = (2500 + sqrt 3189600)/2",
    ));
    out.push(GoldenCheck::abs(
        "claim-counterexample-tminus-display",
        357.03,
        lo,
        0.01,
        "reference approximation 357.03",
    ));
    out.push(GoldenCheck::abs(
        "claim-counterexample-tplus-display",
        2142.97,
        hi,
        0.01,
        "reference approximation 2142.97",
    ));

    let shifted = DistributionSpec::shifted_lognormal();
    out.push(GoldenCheck::abs(
        "shifted-lognormal-left-integral",
        6.55323,
        or_nan(expect(|x| if x <= 0.0 { (x * x).exp() } else { 0.0 }, &shifted, &cfg)),
        5e-4,
        "reference E[e^{xi^2}; xi <= 0] for xi = e^eta - 2",
    ));
    out.push(GoldenCheck::abs(
        "shifted-lognormal-right-integral",
        0.09372,
        or_nan(expect(|x| if x > 0.0 { (-x * x).exp() } else { 0.0 }, &shifted, &cfg)),
        5e-4,
        "reference E[e^{-xi^2}; xi > 0] for xi = e^eta - 2",
    ));
    let ex1v = Deviation::ex1v();
    let no_root =
        matches!(population_mean(&ex1v, &shifted, ex1v.domain(), &cfg), Err(devmean::Error::NoRootInDomain(_)));
    out.push(GoldenCheck::flag(
        "shifted-lognormal-no-root",
        no_root,
        "reference: no root in the integrability interval",
    ));

    let ln = DistributionSpec::lognormal(0.0, 1.0).expect("valid lognormal");
    let verdict = |t: f64| integrability_probe(&ex1v, &ln, t, &cfg).map(|p| p.verdict).ok();
    out.push(GoldenCheck::flag(
        "lognormal-probe-finite-t=1",
        verdict(1.0) == Some(ProbeVerdict::Finite),
        "reference: integrable for t >= 0",
    ));
    out.push(GoldenCheck::flag(
        "lognormal-probe-diverging-t=-1",
        verdict(-1.0) == Some(ProbeVerdict::Diverging),
        "reference: E e^{-xi t} = inf for t in [-2, 0)",
    ));

    let quad = asymptotic_constants(&Deviation::quadratic_example(), &exp1, &cfg).ok();
    let t0 = -0.5 + 4.25_f64.sqrt();
    out.push(GoldenCheck::abs(
        "quadratic-example-t0",
        t0,
        quad.map_or(f64::NAN, |k| k.t0),
        1e-10,
        "reference closed form -E xi/2 + sqrt((E xi)^2/4 + 2 E xi^2)",
    ));
    let (m1, m2, m3, m4) = (1.0, 2.0, 6.0, 24.0);
    let expansion = (m1 * m1 * m1 + 3.0 * m2 * m1 - 4.0 * m3) * t0 + 4.0 * m4 - 2.0 * m2 * m2 - 2.0 * m2 * m1 * m1;
    out.push(GoldenCheck::abs(
        "quadratic-example-m2",
        expansion,
        quad.map_or(f64::NAN, |k| k.m2),
        1e-8,
        "reference moment expansion of E D(xi, t0)^2 with moments 1, 2, 6, 24",
    ));
    out
}
