//! Named deviations and distributions.
//!
//! A registry string is `name` or `name:key=value,key=value`. Numbers use a
//! dot as the decimal separator. List values (the atoms of `discrete`) are
//! separated by `;`.

use std::collections::BTreeMap;

use devmean::{Deviation, DistributionSpec, Generator, Weight};

use crate::CliError;

struct Entry<'a> {
    name: &'a str,
    params: BTreeMap<&'a str, &'a str>,
}

fn split(spec: &str) -> Result<Entry<'_>, CliError> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (spec.trim(), None),
    };
    if name.is_empty() {
        return Err(CliError::Usage(format!("empty registry name in `{spec}`")));
    }
    let mut params = BTreeMap::new();
    for item in rest.into_iter().flat_map(|r| r.split(',')).filter(|s| !s.trim().is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected key=value in `{spec}`, found `{item}`")))?;
        if params.insert(k.trim(), v.trim()).is_some() {
            return Err(CliError::Usage(format!("key `{}` repeated in `{spec}`", k.trim())));
        }
    }
    Ok(Entry { name, params })
}

impl<'a> Entry<'a> {
    fn allow(&self, keys: &[&str]) -> Result<(), CliError> {
        match self.params.keys().find(|k| !keys.contains(k)) {
            Some(k) => Err(CliError::Usage(format!(
                "`{}` does not take `{k}` (accepted: {})",
                self.name,
                if keys.is_empty() { "none".to_string() } else { keys.join(", ") }
            ))),
            None => Ok(()),
        }
    }

    fn num(&self, key: &str, default: Option<f64>) -> Result<f64, CliError> {
        match self.params.get(key) {
            Some(v) => {
                parse_f64(v).map_err(|_| CliError::Usage(format!("`{}`: `{key}={v}` is not a number", self.name)))
            }
            None => default.ok_or_else(|| CliError::Usage(format!("`{}` requires `{key}=`", self.name))),
        }
    }

    fn text(&self, key: &str) -> Option<&'a str> {
        self.params.get(key).copied()
    }
}

/// Parses a C-locale float, accepting `inf` and `-inf`.
pub fn parse_f64(s: &str) -> Result<f64, std::num::ParseFloatError> {
    s.trim().parse::<f64>()
}

fn lib(e: devmean::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn generator(e: &Entry<'_>, key: &str, exponent: &str) -> Result<Generator, CliError> {
    match e.text(key).unwrap_or("identity") {
        "identity" => Ok(Generator::identity()),
        "ln" => Ok(Generator::ln()),
        "exp" => Ok(Generator::exp()),
        "power" => Generator::power(e.num(exponent, None)?).map_err(lib),
        "affine" => Generator::affine(e.num("a", None)?, e.num("b", Some(0.0))?).map_err(lib),
        other => Err(CliError::Usage(format!("unknown generator `{other}` (known: identity, ln, exp, power, affine)"))),
    }
}

fn weight(e: &Entry<'_>) -> Result<Weight, CliError> {
    match e.text("p").unwrap_or("one") {
        "one" => Ok(Weight::one()),
        "identity" => Ok(Weight::identity()),
        "power" => Ok(Weight::power(e.num("s", None)?)),
        other => Err(CliError::Usage(format!("unknown weight `{other}` (known: one, identity, power)"))),
    }
}

/// Deviation names accepted by [`deviation`].
pub const DEVIATIONS: &[&str] = &["linear", "power", "quadratic-example", "ex1v", "quasi-arithmetic", "bajraktarevic"];

/// Resolves a deviation registry string.
///
/// `quasi-arithmetic` takes `f` (identity, ln, exp, power with `r=`,
/// affine with `a=`, `b=`); `bajraktarevic` takes the same plus a weight `p`
/// (one, identity, power with `s=`).
pub fn deviation(spec: &str) -> Result<Deviation, CliError> {
    let e = split(spec)?;
    match e.name {
        "linear" => {
            e.allow(&[])?;
            Ok(Deviation::linear())
        }
        "power" => {
            e.allow(&["p"])?;
            Deviation::power(e.num("p", None)?).map_err(lib)
        }
        "quadratic-example" => {
            e.allow(&[])?;
            Ok(Deviation::quadratic_example())
        }
        "ex1v" => {
            e.allow(&[])?;
            Ok(Deviation::ex1v())
        }
        "quasi-arithmetic" => {
            e.allow(&["f", "r", "a", "b"])?;
            Ok(Deviation::quasi_arithmetic(&generator(&e, "f", "r")?))
        }
        "bajraktarevic" => {
            e.allow(&["f", "r", "a", "b", "p", "s"])?;
            Ok(Deviation::bajraktarevic(&generator(&e, "f", "r")?, &weight(&e)?))
        }
        other => Err(CliError::Usage(format!("unknown deviation `{other}` (known: {})", DEVIATIONS.join(", ")))),
    }
}

/// Distribution names accepted by [`distribution`].
pub const DISTRIBUTIONS: &[&str] = &[
    "exponential",
    "inverse-quartic",
    "lognormal",
    "shifted-lognormal",
    "uniform",
    "bernoulli",
    "discrete",
    "pointmass",
    "normal",
    "truncated-normal",
];

fn list(e: &Entry<'_>, key: &str) -> Result<Vec<f64>, CliError> {
    let raw = e.text(key).ok_or_else(|| CliError::Usage(format!("`{}` requires `{key}=`", e.name)))?;
    raw.split(';')
        .map(|v| parse_f64(v).map_err(|_| CliError::Usage(format!("`{}`: `{v}` in `{key}` is not a number", e.name))))
        .collect()
}

/// Resolves a distribution registry string.
pub fn distribution(spec: &str) -> Result<DistributionSpec, CliError> {
    let e = split(spec)?;
    match e.name {
        "exponential" => {
            e.allow(&["rate"])?;
            DistributionSpec::exponential(e.num("rate", Some(1.0))?).map_err(lib)
        }
        "inverse-quartic" => {
            e.allow(&[])?;
            Ok(DistributionSpec::inverse_quartic())
        }
        "lognormal" => {
            e.allow(&["mu", "sigma"])?;
            DistributionSpec::lognormal(e.num("mu", Some(0.0))?, e.num("sigma", Some(1.0))?).map_err(lib)
        }
        "shifted-lognormal" => {
            e.allow(&[])?;
            Ok(DistributionSpec::shifted_lognormal())
        }
        "uniform" => {
            e.allow(&["a", "b"])?;
            DistributionSpec::uniform(e.num("a", Some(0.0))?, e.num("b", Some(1.0))?).map_err(lib)
        }
        "bernoulli" => {
            e.allow(&["p"])?;
            DistributionSpec::bernoulli(e.num("p", Some(0.5))?).map_err(lib)
        }
        "discrete" => {
            e.allow(&["values", "probs"])?;
            let values = list(&e, "values")?;
            let probs = list(&e, "probs")?;
            if values.len() != probs.len() {
                return Err(CliError::Usage(format!(
                    "`discrete` has {} values but {} probabilities",
                    values.len(),
                    probs.len()
                )));
            }
            let atoms: Vec<(f64, f64)> = values.into_iter().zip(probs).collect();
            DistributionSpec::discrete("discrete", &atoms).map_err(lib)
        }
        "pointmass" => {
            e.allow(&["v"])?;
            DistributionSpec::pointmass(e.num("v", None)?).map_err(lib)
        }
        "normal" => {
            e.allow(&["mu", "sigma"])?;
            DistributionSpec::normal(e.num("mu", Some(0.0))?, e.num("sigma", Some(1.0))?).map_err(lib)
        }
        "truncated-normal" => {
            e.allow(&["mu", "sigma", "a", "b"])?;
            DistributionSpec::truncated_normal(
                e.num("mu", Some(0.0))?,
                e.num("sigma", Some(1.0))?,
                e.num("a", None)?,
                e.num("b", None)?,
            )
            .map_err(lib)
        }
        other => Err(CliError::Usage(format!("unknown distribution `{other}` (known: {})", DISTRIBUTIONS.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_parameters() {
        let d = deviation("power:p=2").unwrap();
        assert_eq!(d.eval(3.0, 1.0), 4.0);
        let d = deviation("bajraktarevic:f=identity,p=identity").unwrap();
        assert_eq!(d.eval(3.0, 1.0), 6.0);
        let q = distribution("discrete:values=1;3,probs=0.5;0.5").unwrap();
        assert_eq!(q.atoms().unwrap(), &[(1.0, 0.5), (3.0, 0.5)]);
        assert!(distribution("exponential").is_ok());
        assert!(distribution("uniform:a=-1,b=2").is_ok());
    }

    #[test]
    fn rejects_bad_strings() {
        for bad in ["power", "power:q=2", "power:p=two", "nope", "power:p=1,p=2", ":p=1"] {
            assert!(matches!(deviation(bad), Err(CliError::Usage(_))), "{bad}");
        }
        for bad in ["discrete:values=1;2,probs=1", "bernoulli:p=1.5", "exponential:rate=-1", "normal:mu"] {
            assert!(matches!(distribution(bad), Err(CliError::Usage(_))), "{bad}");
        }
    }
}
