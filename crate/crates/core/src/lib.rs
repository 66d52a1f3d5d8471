//! Deviation means of finite samples and of random variables.
//!
//! A deviation is a function `D(x, t)` with `D(t, t) = 0` that is strictly
//! decreasing in `t`. The deviation mean of a sample is the root of
//! `sum_i D(x_i, t)`; for a random variable it is the root of `E D(xi, t)`.
//! The crate computes both, the constants of their limit theorems, and
//! seeded Monte Carlo experiments that check those theorems numerically.
//!
//! ```
//! use devmean::{deviation_mean, Deviation};
//!
//! let d = Deviation::power(2.0).unwrap();
//! let r = deviation_mean(&d, &[1.0, 3.0]).unwrap();
//! assert!((r.root - 2.0).abs() < 1e-12);
//! ```

// Negated float comparisons are deliberate: they send NaN down the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod deviation;
pub mod distribution;
pub mod error;
pub mod interval;
pub mod means;
pub mod montecarlo;
pub mod population;
pub mod quad;
pub mod root;

pub use asymptotics::{
    asymptotic_constants, bajraktarevic_sigma2, cramer_gamma, d2_deviation, ld_rate, mgf_phi, AsymptoticConstants,
    LDResult,
};
pub use deviation::{
    check_deviation_axioms, check_deviation_axioms_default, make_bajraktarevic_deviation, AxiomReport, Deviation,
    Generator, Weight,
};
pub use distribution::{DistributionSpec, LawKind, StreamRng};
pub use error::{Error, Result};
pub use interval::Interval;
pub use means::{
    bajraktarevic_mean, beta_type_mean, deviation_mean, deviation_mean_with, elementary_symmetric_mean,
    quasi_arithmetic_mean, sublevel_set_roots,
};
pub use montecarlo::{
    ks_statistic, run_clt, run_ld, run_lil, run_slln, sample, stream_rng, Checkpoints, CltReport, ExperimentConfig,
    LdReport, LilReport, SllnReport,
};
pub use population::{
    argmin_oracle, bajraktarevic_expected_value, expect, expect_deviation, integrability_probe, population_mean,
    quasi_arithmetic_expected_value, IntegrabilityProbe, OracleSource, PopulationMeanResult, ProbeVerdict,
};
pub use quad::QuadratureConfig;
pub use root::{RootResult, SolverConfig};

/// The guide's code samples, compiled and run as doc-tests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/deviations.md")]
    mod deviations {}
    #[doc = include_str!("../../../book/src/sample-means.md")]
    mod sample_means {}
    #[doc = include_str!("../../../book/src/population-means.md")]
    mod population_means {}
    #[doc = include_str!("../../../book/src/limit-theorems.md")]
    mod limit_theorems {}
    #[doc = include_str!("../../../book/src/large-deviations.md")]
    mod large_deviations {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
