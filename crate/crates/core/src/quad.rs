//! Numerical integration.
//!
//! Globally adaptive 15-point Gauss-Kronrod quadrature over a union of
//! segments. Semi-infinite segments are mapped onto `[0, 1)` with
//! `x = a + s / (1 - s)`; the Kronrod nodes never touch the mapped endpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Tolerances and budget for every expectation in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Smallest tail mass covered by integrability probes.
    pub tail_cut: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_subdivisions: 2000, tail_cut: 1e-14 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.tail_cut > 0.0 && self.tail_cut < 1.0) {
            return Err(Error::InvalidParameter("quadrature tolerances must be positive".into()));
        }
        if self.max_subdivisions < 8 {
            return Err(Error::InvalidParameter("max_subdivisions must be at least 8".into()));
        }
        Ok(())
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_64, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

/// One G7-K15 panel on `[a, b]`: `(kronrod, error estimate)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let (f1, f2) = (f(center - x), f(center + x));
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = ((res_k - res_g) * half).abs();
    let (res_abs, res_asc) = (res_abs * half.abs(), res_asc * half.abs());
    let mut scaled = err;
    if res_asc != 0.0 && err != 0.0 {
        scaled = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    (res_k * half, scaled)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    seg: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// An integrand on a mapped segment with its parameter range.
type Segment<'a> = (Box<dyn Fn(f64) -> f64 + 'a>, f64, f64);

/// Integrates `f` over `(lo, hi)`; either end may be infinite.
///
/// `breakpoints` inside the range split the initial partition (use them for
/// kinks and jumps). A non-finite integrand value is reported as
/// [`Error::Divergent`].
pub fn integrate<F>(f: F, lo: f64, hi: f64, breakpoints: &[f64], cfg: &QuadratureConfig) -> Result<QuadEstimate>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Ok(QuadEstimate { value: 0.0, error: 0.0, subdivisions: 0 });
    }
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|&b| b.is_finite() && b > lo && b < hi).collect();
    if lo.is_infinite() && hi.is_infinite() && pts.is_empty() {
        pts.push(0.0);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut edges = Vec::with_capacity(pts.len() + 2);
    edges.push(lo);
    edges.extend(pts);
    edges.push(hi);

    // Each segment integrates over its own parameter range.
    let segments: Vec<Segment<'_>> = edges
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let fr = &f;
            let seg: (Box<dyn Fn(f64) -> f64 + '_>, f64, f64) = match (a.is_finite(), b.is_finite()) {
                (true, true) => (Box::new(fr), a, b),
                (true, false) => (
                    Box::new(move |s: f64| {
                        let u = 1.0 - s;
                        fr(a + s / u) / (u * u)
                    }),
                    0.0,
                    1.0,
                ),
                (false, true) => (
                    Box::new(move |s: f64| {
                        let u = 1.0 - s;
                        fr(b - s / u) / (u * u)
                    }),
                    0.0,
                    1.0,
                ),
                (false, false) => unreachable!("doubly infinite segments are split at a finite point"),
            };
            seg
        })
        .collect();

    let mut heap = BinaryHeap::new();
    let mut settled: Vec<Panel> = Vec::new();
    for (i, (g, a, b)) in segments.iter().enumerate() {
        let (value, error) = gk15(g, *a, *b);
        heap.push(Panel { seg: i, a: *a, b: *b, value, error });
    }

    let mut subdivisions = heap.len();
    loop {
        let all = || heap.iter().chain(settled.iter());
        let value = neumaier_sum(all().map(|p| p.value));
        let error: f64 = all().map(|p| p.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Divergent(format!("non-finite integrand on ({lo}, {hi})")));
        }
        let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= tol {
            return Ok(QuadEstimate { value, error, subdivisions });
        }
        if subdivisions >= cfg.max_subdivisions || heap.is_empty() {
            return Err(Error::QuadratureBudgetExceeded { estimate: value, error_bound: error });
        }
        let worst = heap.pop().expect("nonempty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-14 * (1.0 + worst.a.abs()) {
            settled.push(worst);
            continue;
        }
        let g = &segments[worst.seg].0;
        let (v1, e1) = gk15(g, worst.a, mid);
        let (v2, e2) = gk15(g, mid, worst.b);
        heap.push(Panel { seg: worst.seg, a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { seg: worst.seg, a: mid, b: worst.b, value: v2, error: e2 });
        subdivisions += 1;
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_n'(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl31() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(31))
}

/// Fixed 31-point Gauss-Legendre integral of `f` over `[a, b]`
/// (`a > b` gives the negated integral).
pub fn gauss_legendre_31<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl31();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * nodes.iter().zip(weights).map(|(&x, &w)| w * f(mid + half * x)).sum::<f64>()
}
