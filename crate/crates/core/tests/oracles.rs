//! Independent oracles for the population mean, the asymptotic constants
//! and the large-deviation machinery.

use std::sync::Arc;

use devmean::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn presets_with_roots() -> Vec<(Deviation, DistributionSpec)> {
    vec![
        (Deviation::linear(), DistributionSpec::exponential(1.0).unwrap()),
        (Deviation::power(2.0).unwrap(), DistributionSpec::exponential(1.0).unwrap()),
        (Deviation::power(2.0).unwrap(), DistributionSpec::inverse_quartic()),
        (Deviation::quadratic_example(), DistributionSpec::exponential(1.0).unwrap()),
        (Deviation::quasi_arithmetic(&Generator::ln()), DistributionSpec::lognormal(0.0, 1.0).unwrap()),
        (Deviation::power(1.5).unwrap(), DistributionSpec::uniform(0.0, 2.0).unwrap()),
        (Deviation::linear(), DistributionSpec::normal(0.5, 2.0).unwrap()),
        (Deviation::ex1v(), DistributionSpec::lognormal(0.0, 1.0).unwrap()),
        (
            Deviation::power(2.0).unwrap(),
            DistributionSpec::discrete("three-point", &[(0.0, 0.2), (1.0, 0.5), (4.0, 0.3)]).unwrap(),
        ),
    ]
}

#[test]
fn argmin_oracle_agrees_with_population_mean() {
    for (d, dist) in presets_with_roots() {
        let t0 = population_mean(&d, &dist, d.domain(), &cfg()).unwrap().t0;
        let (lo, hi) = (t0 - 1.0, t0 + 1.0);
        let mut lo = if d.domain().contains(lo) { lo } else { 0.5 * (t0 + d.domain().lo) };
        while integrability_probe(&d, &dist, lo, &cfg()).unwrap().verdict == ProbeVerdict::Diverging {
            lo = 0.5 * (lo + t0);
        }
        let grid = linspace(lo, hi, 41);
        let m = argmin_oracle(&d, OracleSource::Dist(&dist), &grid, &cfg()).unwrap();
        assert!((m - t0).abs() < 1e-4, "{} / {}: oracle {m} vs {t0}", d.name(), dist.name());
    }
}

#[test]
fn argmin_oracle_agrees_with_sample_means() {
    let samples: [&[f64]; 3] = [&[1.0, 2.0, 3.0], &[0.3, 0.3, 5.0, 7.5], &[1.0, 1.5, 2.0, 10.0, 11.0]];
    for d in [Deviation::linear(), Deviation::power(2.0).unwrap(), Deviation::quadratic_example()] {
        for xs in samples {
            let root = deviation_mean(&d, xs).unwrap().root;
            let grid = linspace(0.1, 12.0, 120);
            let m = argmin_oracle(&d, OracleSource::Sample(xs), &grid, &cfg()).unwrap();
            assert!((m - root).abs() < 1e-4, "{}: {m} vs {root}", d.name());
        }
    }
    let m =
        argmin_oracle(&Deviation::linear(), OracleSource::Sample(&[4.0, 4.0]), &linspace(0.0, 8.0, 9), &cfg()).unwrap();
    assert!((m - 4.0).abs() < 1e-6);
}

#[test]
fn argmin_oracle_rejects_a_grid_without_the_minimum() {
    let e = argmin_oracle(&Deviation::linear(), OracleSource::Sample(&[1.0, 2.0, 3.0]), &linspace(3.0, 5.0, 9), &cfg());
    assert_eq!(e.unwrap_err().kind(), "GridTooCoarse");
}

#[test]
fn discrete_law_matches_sample_mean() {
    let xs = [0.4, 1.1, 2.5, 2.6, 7.0];
    let atoms: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 0.2)).collect();
    let dist = DistributionSpec::discrete("sample", &atoms).unwrap();
    for d in
        [Deviation::power(2.0).unwrap(), Deviation::quadratic_example(), Deviation::quasi_arithmetic(&Generator::ln())]
    {
        let pop = population_mean(&d, &dist, d.domain(), &cfg()).unwrap().t0;
        let fin = deviation_mean(&d, &xs).unwrap().root;
        assert!((pop - fin).abs() < 1e-9, "{}: {pop} vs {fin}", d.name());
    }
}

#[test]
fn expectation_is_decreasing_in_t() {
    for (d, dist) in presets_with_roots() {
        let t0 = population_mean(&d, &dist, d.domain(), &cfg()).unwrap().t0;
        let grid: Vec<f64> = linspace(t0 - 0.5, t0 + 0.5, 11).into_iter().filter(|t| d.domain().contains(*t)).collect();
        let g: Vec<f64> = grid.iter().map(|&t| expect_deviation(&d, &dist, t, &cfg()).unwrap()).collect();
        assert!(g.windows(2).all(|w| w[1] < w[0]), "{}: {g:?}", d.name());
    }
}

#[test]
fn point_mass_means_and_boundary_flag() {
    let d = Deviation::linear();
    let r = population_mean(&d, &DistributionSpec::pointmass(0.7).unwrap(), d.domain(), &cfg()).unwrap();
    assert_eq!(r.t0, 0.7);
    let unit = Deviation::linear_on(Interval::closed(0.0, 1.0));
    let r = population_mean(&unit, &DistributionSpec::pointmass(0.0).unwrap(), unit.domain(), &cfg()).unwrap();
    assert_eq!(r.t0, 0.0);
    assert!(!r.interior_point);
    assert!(r.boundary.is_some());
}

fn bajraktarevic_cases() -> Vec<(Generator, Weight, DistributionSpec)> {
    vec![
        (Generator::identity(), Weight::one(), DistributionSpec::exponential(1.0).unwrap()),
        (Generator::identity(), Weight::identity(), DistributionSpec::exponential(1.0).unwrap()),
        (Generator::ln(), Weight::one(), DistributionSpec::lognormal(0.0, 1.0).unwrap()),
        (Generator::ln(), Weight::power(0.5), DistributionSpec::uniform(1.0, 3.0).unwrap()),
        (Generator::power(2.0).unwrap(), Weight::identity(), DistributionSpec::uniform(0.5, 2.0).unwrap()),
        (Generator::power(-1.0).unwrap(), Weight::one(), DistributionSpec::uniform(1.0, 3.0).unwrap()),
        (Generator::exp(), Weight::power(2.0), DistributionSpec::uniform(0.0, 1.0).unwrap()),
        (
            Generator::affine(-2.0, 1.0).unwrap(),
            Weight::identity(),
            DistributionSpec::discrete("pair", &[(1.0, 0.25), (3.0, 0.75)]).unwrap(),
        ),
    ]
}

#[test]
fn bajraktarevic_reduction_of_population_mean() {
    for (f, p, dist) in bajraktarevic_cases() {
        let d = make_bajraktarevic_deviation(&f, &p);
        let t0 = population_mean(&d, &dist, d.domain(), &cfg()).unwrap().t0;
        let b = bajraktarevic_expected_value(&f, &p, &dist, &cfg()).unwrap();
        assert!((t0 - b).abs() < 1e-8, "{}: {t0} vs {b}", d.name());
    }
}

#[test]
fn bajraktarevic_variance_matches_generic_formula() {
    for (f, p, dist) in bajraktarevic_cases() {
        let d = make_bajraktarevic_deviation(&f, &p);
        let generic = asymptotic_constants(&d, &dist, &cfg()).unwrap().sigma2;
        let closed = bajraktarevic_sigma2(&f, &p, &dist, &cfg()).unwrap();
        assert!((generic - closed).abs() < 1e-6, "{}: {generic} vs {closed}", d.name());
    }
}

#[test]
fn bajraktarevic_variance_reference_values() {
    let e = DistributionSpec::exponential(1.0).unwrap();
    let v = bajraktarevic_sigma2(&Generator::identity(), &Weight::one(), &e, &cfg()).unwrap();
    assert!((v - 1.0).abs() < 1e-8);
    let l = DistributionSpec::lognormal(0.0, 1.0).unwrap();
    let v = bajraktarevic_sigma2(&Generator::ln(), &Weight::one(), &l, &cfg()).unwrap();
    assert!((v - 1.0).abs() < 1e-8);
    // E xi^2 / E xi for the unit exponential.
    let b = bajraktarevic_expected_value(&Generator::identity(), &Weight::identity(), &e, &cfg()).unwrap();
    assert!((b - 2.0).abs() < 1e-9);
}

fn scaled(d: &Deviation) -> Deviation {
    d.rescaled(Arc::new(|t: f64| 1.0 + t * t), Some(Arc::new(|t: f64| 2.0 * t)))
}

#[test]
fn generator_scaling_leaves_constants_unchanged() {
    let cases = [
        (Deviation::linear(), DistributionSpec::exponential(1.0).unwrap()),
        (Deviation::power(2.0).unwrap(), DistributionSpec::exponential(1.0).unwrap()),
        (Deviation::quadratic_example(), DistributionSpec::exponential(1.0).unwrap()),
        (Deviation::quasi_arithmetic(&Generator::ln()), DistributionSpec::lognormal(0.0, 1.0).unwrap()),
    ];
    for (d, dist) in cases {
        let a = asymptotic_constants(&d, &dist, &cfg()).unwrap();
        let b = asymptotic_constants(&scaled(&d), &dist, &cfg()).unwrap();
        assert!((a.t0 - b.t0).abs() < 1e-9, "{}", d.name());
        assert!((a.sigma2 - b.sigma2).abs() < 1e-8, "{}: {} vs {}", d.name(), a.sigma2, b.sigma2);
        assert!((a.lil_c - b.lil_c).abs() < 1e-8, "{}", d.name());
    }
}

#[test]
fn linear_constants_under_bernoulli() {
    let k = asymptotic_constants(&Deviation::linear(), &DistributionSpec::bernoulli(0.5).unwrap(), &cfg()).unwrap();
    assert!((k.t0 - 0.5).abs() < 1e-12);
    assert!((k.sigma2 - 0.25).abs() < 1e-12);
    assert!((k.lil_c - 0.5).abs() < 1e-12);
}

#[test]
fn log_mgf_is_midpoint_convex() {
    let quad = Deviation::quadratic_example();
    let u = DistributionSpec::uniform(0.0, 2.0).unwrap();
    let t0 = asymptotic_constants(&quad, &u, &cfg()).unwrap().t0;
    let cases = [
        (Deviation::linear(), DistributionSpec::bernoulli(0.5).unwrap(), 0.75),
        (quad, u, t0 + 0.5),
        (Deviation::linear(), DistributionSpec::normal(0.0, 1.0).unwrap(), 1.0),
        (Deviation::power(2.0).unwrap(), DistributionSpec::uniform(0.0, 1.0).unwrap(), 0.7),
    ];
    let cs = [1e-3, 0.01, 0.05, 0.1, 0.3, 0.7, 1.5, 3.0];
    for (d, dist, x) in cases {
        let l = |c: f64| mgf_phi(&d, &dist, c, x, &cfg()).unwrap().ln();
        for (i, &a) in cs.iter().enumerate() {
            for &b in &cs[i + 1..] {
                let mid = l(0.5 * (a + b));
                assert!(mid <= 0.5 * (l(a) + l(b)) + 1e-9, "{} at ({a}, {b})", d.name());
            }
        }
        assert!((mgf_phi(&d, &dist, 1e-8, x, &cfg()).unwrap() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn truncated_normal_mgf_matches_closed_form() {
    let (mu, sigma, a, b) = (0.3, 1.2, -1.0, 2.5);
    let dist = DistributionSpec::truncated_normal(mu, sigma, a, b).unwrap();
    let n = Normal::new(0.0, 1.0).unwrap();
    let (al, be) = ((a - mu) / sigma, (b - mu) / sigma);
    let z = n.cdf(be) - n.cdf(al);
    let mgf =
        |c: f64| (mu * c + 0.5 * sigma * sigma * c * c).exp() * (n.cdf(be - sigma * c) - n.cdf(al - sigma * c)) / z;
    let mean =
        mu + sigma * ((-al * al / 2.0).exp() - (-be * be / 2.0).exp()) / ((2.0 * std::f64::consts::PI).sqrt() * z);
    let phi = mgf_phi(&Deviation::linear(), &dist, 1.0, mean, &cfg()).unwrap();
    assert!((phi - mgf(1.0) * (-mean).exp()).abs() < 1e-9, "{phi}");
    let phi = mgf_phi(&Deviation::linear(), &dist, 0.4, 1.0, &cfg()).unwrap();
    assert!((phi - mgf(0.4) * (-0.4_f64).exp()).abs() < 1e-9);
}

#[test]
fn two_atom_mgf_by_hand() {
    let phi = mgf_phi(&Deviation::linear(), &DistributionSpec::bernoulli(0.5).unwrap(), 1.0, 0.75, &cfg()).unwrap();
    let hand = (-0.75_f64).exp() * (1.0 + 1.0_f64.exp()) / 2.0;
    assert!((phi - hand).abs() < 1e-14);
    assert!((phi - 0.878196).abs() < 1e-6);
}

const KL: f64 = 0.130812;

fn binary_kl() -> f64 {
    0.75 * 1.5_f64.ln() + 0.25 * 0.5_f64.ln()
}

#[test]
fn bernoulli_rate_matches_binary_kl() {
    let r = ld_rate(&Deviation::linear(), &DistributionSpec::bernoulli(0.5).unwrap(), 0.75, &cfg()).unwrap();
    assert!((r.gamma - binary_kl()).abs() < 1e-9, "{r:?}");
    assert!((r.gamma - KL).abs() < 1e-6);
    assert!((r.inf_phi - (-KL).exp()).abs() < 1e-6);
    assert!((r.inf_phi - 0.87738).abs() < 1e-5);
    assert!((r.c_star - 3.0_f64.ln()).abs() < 1e-6);
    let g = cramer_gamma(&DistributionSpec::bernoulli(0.5).unwrap(), 0.75, &cfg()).unwrap();
    assert!((g - binary_kl()).abs() < 1e-9);
}

#[test]
fn quadratic_example_rate_against_grid_scan() {
    let d = Deviation::quadratic_example();
    // D grows like 2 x^2, so phi is infinite for every c > 0 under an
    // exponential law.
    let exp = DistributionSpec::exponential(1.0).unwrap();
    let t0 = asymptotic_constants(&d, &exp, &cfg()).unwrap().t0;
    assert_eq!(ld_rate(&d, &exp, t0 + 0.5, &cfg()).unwrap_err().kind(), "Divergent");

    let e = DistributionSpec::uniform(0.0, 2.0).unwrap();
    let t0 = asymptotic_constants(&d, &e, &cfg()).unwrap().t0;
    let x = t0 + 0.5;
    let r = ld_rate(&d, &e, x, &cfg()).unwrap();
    assert!(r.inf_phi > 0.0 && r.inf_phi < 1.0, "{r:?}");
    // Dense scan over (0, 3 c*].
    let best = (1..=4000)
        .map(|i| i as f64 * 7.5e-4 * r.c_star)
        .filter_map(|c| mgf_phi(&d, &e, c, x, &cfg()).ok())
        .fold(f64::INFINITY, f64::min);
    assert!(r.inf_phi <= best + 1e-9, "{} vs scan {best}", r.inf_phi);
    assert!(best - r.inf_phi < 1e-6, "{} vs scan {best}", r.inf_phi);
}

#[test]
fn rate_vanishes_at_the_mean() {
    let r = ld_rate(&Deviation::linear(), &DistributionSpec::exponential(1.0).unwrap(), 1.0 + 1e-6, &cfg()).unwrap();
    assert!(r.gamma >= 0.0 && r.gamma < 1e-6, "{r:?}");
    let g = cramer_gamma(&DistributionSpec::bernoulli(0.5).unwrap(), 0.5 + 1e-4, &cfg()).unwrap();
    assert!((0.0..1e-7).contains(&g), "{g}");
}

#[test]
fn cramer_rate_of_standard_normal() {
    let n = DistributionSpec::normal(0.0, 1.0).unwrap();
    for y in [0.5, 1.0, 2.0] {
        let g = cramer_gamma(&n, y, &cfg()).unwrap();
        assert!((g - y * y / 2.0).abs() < 1e-8, "y = {y}: {g}");
        let r = ld_rate(&Deviation::linear(), &n, y, &cfg()).unwrap();
        assert!((r.gamma - g).abs() < 1e-8);
    }
}

#[test]
fn rate_preconditions() {
    let b = DistributionSpec::bernoulli(0.5).unwrap();
    assert_eq!(ld_rate(&Deviation::linear(), &b, 0.4, &cfg()).unwrap_err().kind(), "NotBeyondMean");
    assert_eq!(ld_rate(&Deviation::linear(), &b, 1.0, &cfg()).unwrap_err().kind(), "FlatObjective");
    assert_eq!(cramer_gamma(&b, 0.3, &cfg()).unwrap_err().kind(), "OutOfRange");
}

/// `P(sum_i D(xi_i, x) >= 0)` by enumerating every tuple of atoms.
fn brute_force_tail(atoms: &[(f64, f64)], d: &Deviation, x: f64, n: usize) -> f64 {
    let k = atoms.len();
    let mut total = 0.0;
    for code in 0..k.pow(n as u32) {
        let (mut c, mut s, mut p) = (code, 0.0, 1.0);
        for _ in 0..n {
            let (v, q) = atoms[c % k];
            s += d.eval(v, x);
            p *= q;
            c /= k;
        }
        if s >= 0.0 {
            total += p;
        }
    }
    total
}

#[test]
fn exact_tail_probabilities_match_enumeration() {
    let cases = [
        (DistributionSpec::discrete("three-point", &[(0.0, 0.2), (1.0, 0.5), (2.0, 0.3)]).unwrap(), 1.25),
        (DistributionSpec::bernoulli(0.3).unwrap(), 0.5),
        (DistributionSpec::bernoulli(0.3).unwrap(), 0.75),
    ];
    let d = Deviation::linear();
    for (dist, x) in cases {
        let cfg = ExperimentConfig { max_n: 3, ..ExperimentConfig::default() };
        let rep = run_ld(&d, &dist, x, &cfg).unwrap();
        assert!(rep.exact);
        for n in 1..=3 {
            let bf = brute_force_tail(dist.atoms().unwrap(), &d, x, n);
            assert!(
                (rep.probability[n - 1] - bf).abs() < 1e-12,
                "{} n = {n}: {} vs {bf}",
                dist.name(),
                rep.probability[n - 1]
            );
        }
        let single: f64 = dist.atoms().unwrap().iter().filter(|a| a.0 >= x).map(|a| a.1).sum();
        assert!((rep.rate[0] - single.ln()).abs() < 1e-12);
    }
}

#[test]
fn exact_bernoulli_rate_approaches_kl() {
    let cfg = ExperimentConfig { max_n: 500, ..ExperimentConfig::default() };
    let rep = run_ld(&Deviation::linear(), &DistributionSpec::bernoulli(0.5).unwrap(), 0.75, &cfg).unwrap();
    assert!(rep.exact);
    assert_eq!(rep.n.len(), 500);
    assert!(rep.probability.iter().all(|p| (0.0..=1.0).contains(p)));
    assert!((rep.sup_m + KL).abs() < 0.02, "{}", rep.sup_m);
    assert!((rep.theory + KL).abs() < 1e-6);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let cfg = ExperimentConfig { n_list: vec![50, 400], replications: 64, seed: 99, ..ExperimentConfig::default() };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let e = DistributionSpec::exponential(1.0).unwrap();
            let clt = run_clt(&Deviation::power(2.0).unwrap(), &e, &cfg).unwrap();
            let slln = run_slln(&Deviation::quadratic_example(), &e, &cfg).unwrap();
            (clt, slln)
        })
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a, b);
}
