//! Seeded simulation of the four limit theorems.
//!
//! Replication `r` draws from the ChaCha8 stream `r` of the configured seed,
//! so reports are identical for any thread count or execution order.

use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::asymptotics::{asymptotic_constants, ld_rate};
use crate::deviation::Deviation;
use crate::distribution::{DistributionSpec, StreamRng};
use crate::error::{Error, Result};
use crate::means::deviation_mean;
use crate::population::population_mean;
use crate::quad::{neumaier_sum, QuadratureConfig};

/// Where the iterated-logarithm trajectory is inspected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Checkpoints {
    /// Powers of two from 4 up to `max_n`, plus `max_n` itself.
    Dyadic,
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub max_n: usize,
    pub checkpoints: Checkpoints,
    /// Iterated-logarithm values before this `n` are excluded from the
    /// running extremes.
    pub burn_in: usize,
    pub quad: QuadratureConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_list: vec![100, 1000, 10_000],
            replications: 100,
            seed: 1,
            max_n: 1 << 20,
            checkpoints: Checkpoints::Dyadic,
            burn_in: 1000,
            quad: QuadratureConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list[0] == 0 {
            return Err(Error::InvalidParameter("n_list must be nonempty with positive sizes".into()));
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("n_list must be strictly increasing".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        self.quad.validate()
    }

    fn largest_n(&self) -> usize {
        *self.n_list.last().expect("validated n_list")
    }
}

/// The random stream for replication `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` independent draws.
pub fn sample(dist: &DistributionSpec, n: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n).map(|_| dist.draw(rng)).collect()
}

fn per_replication<T, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut StreamRng) -> Result<T> + Sync,
{
    (0..cfg.replications as u64).into_par_iter().map(|r| f(&mut stream_rng(cfg.seed, r))).collect()
}

fn prefix_mean(d: &Deviation, xs: &[f64]) -> Result<(f64, bool)> {
    let m = deviation_mean(d, xs)?.root;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((m, lo <= m && m <= hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SllnReport {
    pub t0: f64,
    pub n_list: Vec<usize>,
    /// Mean of `|M_n - t0|` over replications, per `n`.
    pub mean_abs_error: Vec<f64>,
    /// `M_n` per replication (rows) and `n` (columns).
    pub estimates: Vec<Vec<f64>>,
    /// Whether every `M_n` stayed within its sample's range.
    pub envelope_ok: bool,
}

/// Deviation means along nested prefixes of one growing sample per
/// replication.
pub fn run_slln(d: &Deviation, dist: &DistributionSpec, cfg: &ExperimentConfig) -> Result<SllnReport> {
    cfg.validate()?;
    let t0 = population_mean(d, dist, d.domain(), &cfg.quad)?.t0;
    let n_max = cfg.largest_n();
    let rows = per_replication(cfg, |rng| {
        let xs = sample(dist, n_max, rng);
        cfg.n_list.iter().map(|&n| prefix_mean(d, &xs[..n])).collect::<Result<Vec<_>>>()
    })?;
    let envelope_ok = rows.iter().flatten().all(|&(_, ok)| ok);
    let estimates: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|p| p.0).collect()).collect();
    let mean_abs_error = (0..cfg.n_list.len())
        .map(|j| neumaier_sum(estimates.iter().map(|r| (r[j] - t0).abs())) / estimates.len() as f64)
        .collect();
    Ok(SllnReport { t0, n_list: cfg.n_list.clone(), mean_abs_error, estimates, envelope_ok })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub n: usize,
    pub t0: f64,
    pub sigma2: f64,
    /// `sqrt(n) (M_n - t0) / sigma` per replication.
    pub z: Vec<f64>,
    pub ks_stat: f64,
    pub z_mean: f64,
    pub z_var: f64,
}

/// Standardised deviation means at `n = max(n_list)` and their
/// Kolmogorov-Smirnov distance from the standard normal law.
pub fn run_clt(d: &Deviation, dist: &DistributionSpec, cfg: &ExperimentConfig) -> Result<CltReport> {
    cfg.validate()?;
    let k = asymptotic_constants(d, dist, &cfg.quad)?;
    let n = cfg.largest_n();
    let scale = (n as f64).sqrt() / k.sigma2.sqrt();
    let z = per_replication(cfg, |rng| {
        let xs = sample(dist, n, rng);
        Ok((deviation_mean(d, &xs)?.root - k.t0) * scale)
    })?;
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let ks_stat = ks_statistic(&z, |v| std.cdf(v))?;
    let m = neumaier_sum(z.iter().copied()) / z.len() as f64;
    let var = if z.len() > 1 { neumaier_sum(z.iter().map(|v| (v - m).powi(2))) / (z.len() - 1) as f64 } else { 0.0 };
    Ok(CltReport { n, t0: k.t0, sigma2: k.sigma2, z, ks_stat, z_mean: m, z_var: var })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LilReport {
    pub t0: f64,
    pub lil_c: f64,
    pub checkpoints: Vec<usize>,
    /// `(M_n - t0) / sqrt(2 ln ln n / n)` at each checkpoint.
    pub scaled: Vec<f64>,
    pub burn_in: usize,
    /// Extremes of `scaled` over checkpoints with `n >= burn_in`.
    pub running_max: f64,
    pub running_min: f64,
}

/// Scaled deviation means along one long trajectory (stream 0 of the seed).
pub fn run_lil(d: &Deviation, dist: &DistributionSpec, cfg: &ExperimentConfig) -> Result<LilReport> {
    cfg.quad.validate()?;
    // A degenerate law has a constant trajectory and constant zero.
    let (t0, lil_c) = match asymptotic_constants(d, dist, &cfg.quad) {
        Ok(k) => (k.t0, k.lil_c),
        Err(Error::DegenerateDistribution { .. }) => (population_mean(d, dist, d.domain(), &cfg.quad)?.t0, 0.0),
        Err(e) => return Err(e),
    };
    let mut checkpoints: Vec<usize> = match &cfg.checkpoints {
        Checkpoints::Dyadic => {
            let mut v: Vec<usize> = (2..usize::BITS).map(|e| 1usize << e).take_while(|&n| n <= cfg.max_n).collect();
            if v.last() != Some(&cfg.max_n) {
                v.push(cfg.max_n);
            }
            v
        }
        Checkpoints::Explicit(v) => v.clone(),
    };
    checkpoints.retain(|&n| n >= 3 && n <= cfg.max_n);
    if checkpoints.is_empty() || !checkpoints.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter("checkpoints must be increasing and within 3..=max_n".into()));
    }
    let mut rng = stream_rng(cfg.seed, 0);
    let xs = sample(dist, cfg.max_n, &mut rng);
    let scaled = checkpoints
        .par_iter()
        .map(|&n| {
            let nf = n as f64;
            let a_n = (2.0 * nf.ln().ln() / nf).sqrt();
            Ok((deviation_mean(d, &xs[..n])?.root - t0) / a_n)
        })
        .collect::<Result<Vec<f64>>>()?;
    let tail = checkpoints.iter().zip(&scaled).filter(|(&n, _)| n >= cfg.burn_in).map(|(_, &v)| v);
    let (running_max, running_min) =
        tail.fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), v| (hi.max(v), lo.min(v)));
    Ok(LilReport { t0, lil_c, checkpoints, scaled, burn_in: cfg.burn_in, running_max, running_min })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdReport {
    pub x: f64,
    /// `ln inf_c phi(c, x)`, the limit of `(1/n) ln P(M_n >= x)`.
    pub theory: f64,
    pub n: Vec<usize>,
    pub probability: Vec<f64>,
    /// `(1/n) ln P(M_n >= x)`.
    pub rate: Vec<f64>,
    /// Running supremum of `rate`.
    pub running_sup: Vec<f64>,
    pub sup_m: f64,
    /// Whether the probabilities are exact (lattice convolution).
    pub exact: bool,
    /// Set when exact mode was requested by the law's shape but could not run.
    pub exact_mode_unavailable: bool,
    /// 95% Wilson bounds for empirical probabilities.
    pub wilson_lo: Option<Vec<f64>>,
    pub wilson_hi: Option<Vec<f64>>,
}

/// Largest atom count handled by the exact convolution.
pub const EXACT_MAX_ATOMS: usize = 12;
const LATTICE_CELLS_LIMIT: f64 = 5e7;

/// Best rational approximation `p/q` with `q <= max_den`.
fn rationalize(v: f64, max_den: i64) -> Option<(i64, i64)> {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut x = v;
    for _ in 0..64 {
        let a = x.floor();
        if a.abs() > 1e12 {
            return None;
        }
        let a = a as i64;
        let (h2, k2) = (a.checked_mul(h1)?.checked_add(h0)?, a.checked_mul(k1)?.checked_add(k0)?);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - v).abs() <= 1e-12 * v.abs().max(1e-300) {
            return Some((h1, k1));
        }
        let frac = x - a as f64;
        if frac == 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    ((h1 as f64 / k1 as f64 - v).abs() <= 1e-12 * v.abs().max(1e-300)).then_some((h1, k1))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Integer steps `k_j` with `D(v_j, x) = k_j * delta` for a common `delta`,
/// when the atom values are commensurate.
pub fn lattice_steps(values: &[f64]) -> Option<Vec<i64>> {
    let rats: Vec<(i64, i64)> =
        values.iter().map(|&v| if v == 0.0 { Some((0, 1)) } else { rationalize(v, 10_000) }).collect::<Option<_>>()?;
    let lcm = rats.iter().try_fold(1i64, |l, &(_, q)| l.checked_mul(q / gcd(l, q)))?;
    let nums: Vec<i64> = rats.iter().map(|&(p, q)| p.checked_mul(lcm / q)).collect::<Option<_>>()?;
    let g = nums.iter().fold(0, |g, &n| gcd(g, n));
    if g == 0 {
        return None;
    }
    Some(nums.iter().map(|n| n / g).collect())
}

/// `P(sum_{i<=m} k_{J_i} >= 0)` for `m = 1..=max_n`, where `J_i` are i.i.d.
/// atom indices with the given probabilities.
fn lattice_tail_probabilities(steps: &[i64], probs: &[f64], max_n: usize) -> Vec<f64> {
    let kmin = *steps.iter().min().expect("atoms");
    let kmax = *steps.iter().max().expect("atoms");
    let width = (kmax - kmin) as usize;
    // weights[s] is proportional to P(S_m = s + m kmin).
    let mut weights = vec![1.0];
    let mut log_scale = 0.0;
    let mut out = Vec::with_capacity(max_n);
    for m in 1..=max_n {
        let mut next = vec![0.0; weights.len() + width];
        for (s, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (&k, &p) in steps.iter().zip(probs) {
                next[s + (k - kmin) as usize] += w * p;
            }
        }
        let top = next.iter().copied().fold(0.0, f64::max);
        for w in next.iter_mut() {
            *w /= top;
        }
        log_scale += top.ln();
        weights = next;
        // S_m >= 0  <=>  index >= -m kmin.
        let first = (-(m as i64) * kmin).max(0) as usize;
        let tail = if first < weights.len() { neumaier_sum(weights[first..].iter().copied()) } else { 0.0 };
        out.push(if tail > 0.0 { (tail.ln() + log_scale).exp() } else { 0.0 });
    }
    out
}

fn wilson(successes: usize, n: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// `(1/n) ln P(M_n >= x)` against the large-deviation limit.
///
/// Discrete laws with at most [`EXACT_MAX_ATOMS`] atoms whose deviation
/// values at `x` lie on a common lattice are convolved exactly for every
/// `n <= max_n`; other laws fall back to empirical frequencies over
/// `replications` samples at each size in `n_list`.
pub fn run_ld(d: &Deviation, dist: &DistributionSpec, x: f64, cfg: &ExperimentConfig) -> Result<LdReport> {
    cfg.quad.validate()?;
    let rate = ld_rate(d, dist, x, &cfg.quad)?;
    let theory = rate.inf_phi.ln();

    let lattice = dist.atoms().filter(|a| a.len() <= EXACT_MAX_ATOMS).and_then(|atoms| {
        let dv: Vec<f64> = atoms.iter().map(|&(v, _)| d.eval(v, x)).collect();
        let steps = lattice_steps(&dv)?;
        let span = (steps.iter().max()? - steps.iter().min()?) as f64;
        (span * cfg.max_n as f64 <= LATTICE_CELLS_LIMIT).then(|| (steps, atoms.iter().map(|a| a.1).collect::<Vec<_>>()))
    });

    let (n, probability, exact, wilson_bounds) = if let Some((steps, probs)) = lattice {
        let p = lattice_tail_probabilities(&steps, &probs, cfg.max_n);
        ((1..=cfg.max_n).collect::<Vec<_>>(), p, true, None)
    } else {
        cfg.validate()?;
        let n_max = cfg.largest_n();
        // M_n >= x exactly when sum_i D(xi_i, x) >= 0.
        let hits = per_replication(cfg, |rng| {
            let xs = sample(dist, n_max, rng);
            let mut out = Vec::with_capacity(cfg.n_list.len());
            let mut acc = Vec::with_capacity(n_max);
            for &v in &xs {
                acc.push(d.eval(v, x));
            }
            for &m in &cfg.n_list {
                out.push(neumaier_sum(acc[..m].iter().copied()) >= 0.0);
            }
            Ok(out)
        })?;
        let counts: Vec<usize> = (0..cfg.n_list.len()).map(|j| hits.iter().filter(|h| h[j]).count()).collect();
        let p = counts.iter().map(|&c| c as f64 / cfg.replications as f64).collect();
        let (lo, hi): (Vec<f64>, Vec<f64>) = counts.iter().map(|&c| wilson(c, cfg.replications)).unzip();
        (cfg.n_list.clone(), p, false, Some((lo, hi)))
    };

    let rates: Vec<f64> = n.iter().zip(&probability).map(|(&m, &p)| p.ln() / m as f64).collect();
    let mut running_sup = Vec::with_capacity(rates.len());
    let mut sup = f64::NEG_INFINITY;
    for &r in &rates {
        sup = sup.max(r);
        running_sup.push(sup);
    }
    let (wilson_lo, wilson_hi) = match wilson_bounds {
        Some((lo, hi)) => (Some(lo), Some(hi)),
        None => (None, None),
    };
    Ok(LdReport {
        x,
        theory,
        n,
        probability,
        rate: rates,
        running_sup,
        sup_m: sup,
        exact,
        exact_mode_unavailable: !exact,
        wilson_lo,
        wilson_hi,
    })
}

/// One-sample Kolmogorov-Smirnov distance between the empirical law of
/// `values` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let f = cdf(x);
        acc.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    }))
}
