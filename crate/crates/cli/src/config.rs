//! Scenario files: one JSON document describing a string, its boundary
//! conditions, the flow to follow and run parameters.
//!
//! Every number may be written as a JSON number or as a string holding an
//! integer, a decimal or a fraction `p/q`. Both are read exactly, so `0.3`
//! means 3/10 on the rational backend.

use std::fmt;
use std::path::Path;

use isostring::scalar::{convert, parse_rational};
use isostring::{Boundary, BoundaryConditions, DiscreteString, FlowSpec, Rational, Scalar};
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

/// An exactly parsed number.
#[derive(Clone, Debug, PartialEq)]
pub struct Num(pub Rational);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct NumVisitor;

        impl Visitor<'_> for NumVisitor {
            type Value = Num;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string such as \"2/3\" or \"0.25\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(Rational::from_i64(v)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(Rational::from_integer(v.into())))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                // shortest round-trip decimal, so 0.3 reads as 3/10
                self.visit_str(&v.to_string())
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                parse_rational(v)
                    .map(Num)
                    .ok_or_else(|| E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }

        deserializer.deserialize_any(NumVisitor)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub string: StringConfig,
    pub bc: BcConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringConfig {
    pub positions: Vec<Num>,
    pub masses: Vec<Num>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    pub left: BoundaryConfig,
    pub right: BoundaryConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Robin { parameter: Num },
    Neumann,
    Dirichlet,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleConfig {
    pub epsilon: Num,
    pub mu: Num,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowConfig {
    Limit {
        #[serde(default = "yes")]
        rescaled: bool,
    },
    SinglePole {
        epsilon: Num,
        #[serde(default = "yes")]
        rescaled: bool,
    },
    MultiPole {
        mu0: Num,
        poles: Vec<PoleConfig>,
        #[serde(default = "yes")]
        rescaled: bool,
    },
    TranslationInvariant,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self::Limit { rescaled: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Rational,
    Float,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub t_end: f64,
    /// Initial integrator step.
    pub dt: f64,
    /// Keep every `stride`-th accepted step in the trajectory.
    pub stride: usize,
    pub tolerance: f64,
    pub min_dt: f64,
    pub max_steps: usize,
    pub backend: Backend,
    /// Times for `invert` when none are given on the command line.
    pub times: Vec<Num>,
    /// Number of sample points on [0, 1] for `fields`.
    pub grid: usize,
    /// Spectral parameters probed by `verify`.
    pub z_samples: Vec<Num>,
    /// Relative drift of eigenvalues and invariants tolerated by `verify`.
    pub drift_alarm: f64,
    /// Coordinate agreement required between integration and inversion.
    pub agreement: f64,
    /// Residual bound for float checks in `verify`.
    pub residual_tolerance: f64,
    /// `liouville` samples the line on [-zeta_range, zeta_range].
    pub zeta_range: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_end: 0.1,
            dt: 1e-3,
            stride: 1,
            tolerance: 1e-10,
            min_dt: 1e-13,
            max_steps: 10_000_000,
            backend: Backend::Rational,
            times: Vec::new(),
            grid: 101,
            z_samples: vec![
                Num(Rational::from_i64(1)),
                Num(Rational::ratio(5, 2)),
                Num(Rational::from_i64(7)),
            ],
            drift_alarm: 1e-7,
            agreement: 1e-6,
            residual_tolerance: 1e-10,
            zeta_range: 6.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: at `{field}`: {message}")]
    Syntax {
        path: String,
        field: String,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

impl ScenarioConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Syntax {
            path: origin.to_string(),
            field: e.path().to_string(),
            message: e.into_inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Validated library inputs on backend `T`.
    pub fn scenario<T: Scalar>(&self) -> Result<Scenario<T>, ConfigError> {
        let exact = self.exact()?;
        let string = exact
            .string
            .convert()
            .map_err(|e| invalid("string", e, " after conversion to the float backend"))?;
        Ok(Scenario {
            string,
            bc: exact.bc.convert(),
            spec: exact.spec.convert(),
        })
    }

    fn exact(&self) -> Result<Scenario<Rational>, ConfigError> {
        let values = |v: &[Num]| v.iter().map(|n| n.0.clone()).collect::<Vec<_>>();
        let string =
            DiscreteString::new(values(&self.string.positions), values(&self.string.masses))
                .map_err(|e| invalid("string", e, ""))?;
        let boundary = |b: &BoundaryConfig, side: &str| match b {
            BoundaryConfig::Robin { parameter } => Boundary::robin(parameter.0.clone())
                .map_err(|e| invalid(&format!("bc.{side}.parameter"), e, "")),
            BoundaryConfig::Neumann => Ok(Boundary::neumann()),
            BoundaryConfig::Dirichlet => Ok(Boundary::Dirichlet),
        };
        let bc = BoundaryConditions::new(
            boundary(&self.bc.left, "left")?,
            boundary(&self.bc.right, "right")?,
        )
        .map_err(|e| invalid("bc", e, ""))?;
        let spec = match &self.flow {
            FlowConfig::Limit { rescaled } => FlowSpec::Limit {
                rescaled: *rescaled,
            },
            FlowConfig::SinglePole { epsilon, rescaled } => FlowSpec::SinglePole {
                epsilon: epsilon.0.clone(),
                rescaled: *rescaled,
            },
            FlowConfig::MultiPole {
                mu0,
                poles,
                rescaled,
            } => FlowSpec::MultiPole {
                mu0: mu0.0.clone(),
                poles: poles
                    .iter()
                    .map(|p| (p.epsilon.0.clone(), p.mu.0.clone()))
                    .collect(),
                rescaled: *rescaled,
            },
            FlowConfig::TranslationInvariant => {
                if !bc.is_neumann_neumann() {
                    return Err(ConfigError::Invalid(
                        "flow: translation_invariant needs Neumann ends on both sides".into(),
                    ));
                }
                FlowSpec::TranslationInvariant
            }
        };
        spec.validate().map_err(|e| invalid("flow", e, ""))?;
        if bc.is_neumann_neumann() && !matches!(spec, FlowSpec::TranslationInvariant) {
            return Err(ConfigError::Invalid(
                "flow: Neumann-Neumann strings only support the translation_invariant flow".into(),
            ));
        }
        self.check_run()?;
        Ok(Scenario { string, bc, spec })
    }

    fn check_run(&self) -> Result<(), ConfigError> {
        let r = &self.run;
        let positive = [
            ("t_end", r.t_end),
            ("dt", r.dt),
            ("tolerance", r.tolerance),
            ("min_dt", r.min_dt),
            ("drift_alarm", r.drift_alarm),
            ("agreement", r.agreement),
            ("residual_tolerance", r.residual_tolerance),
            ("zeta_range", r.zeta_range),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "run.{name}: must be a positive finite number, got {v}"
                )));
            }
        }
        if r.stride == 0 || r.max_steps == 0 {
            return Err(ConfigError::Invalid(
                "run: stride and max_steps must be at least 1".into(),
            ));
        }
        if r.grid < 2 {
            return Err(ConfigError::Invalid(
                "run.grid: need at least 2 points".into(),
            ));
        }
        if r.z_samples.iter().any(|z| z.0 <= Rational::from_i64(0)) {
            return Err(ConfigError::Invalid(
                "run.z_samples: must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn integrator_options(&self) -> isostring::IntegratorOptions {
        isostring::IntegratorOptions {
            dt: self.run.dt,
            tolerance: self.run.tolerance,
            stride: self.run.stride,
            min_dt: self.run.min_dt,
            max_steps: self.run.max_steps,
        }
    }

    pub fn z_samples<T: Scalar>(&self) -> Vec<T> {
        self.run.z_samples.iter().map(|z| convert(&z.0)).collect()
    }
}

fn invalid(field: &str, e: isostring::Error, suffix: &str) -> ConfigError {
    ConfigError::Invalid(format!("{field}: {e}{suffix}"))
}

/// Library inputs of one scenario.
#[derive(Clone, Debug)]
pub struct Scenario<T> {
    pub string: DiscreteString<T>,
    pub bc: BoundaryConditions<T>,
    pub spec: FlowSpec<T>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        ScenarioConfig::from_json(text, "test.json")
    }

    const GOLD: &str = r#"{
        "string": {"positions": ["1/3", "2/3"], "masses": [1, 1]},
        "bc": {"left": {"kind": "dirichlet"}, "right": {"kind": "dirichlet"}}
    }"#;

    #[test]
    fn numbers_are_read_exactly() {
        let c = parse(
            r#"{"string": {"positions": [0.3, "0.7"], "masses": ["5/2", 1e-3]},
                "bc": {"left": {"kind": "robin", "parameter": 1}, "right": {"kind": "neumann"}}}"#,
        )
        .unwrap();
        let s = c.scenario::<Rational>().unwrap();
        assert_eq!(
            s.string.positions(),
            [Rational::ratio(3, 10), Rational::ratio(7, 10)]
        );
        assert_eq!(
            s.string.masses(),
            [Rational::ratio(5, 2), Rational::ratio(1, 1000)]
        );
        assert_eq!(s.bc.left, Boundary::Robin(Rational::from_i64(1)));
    }

    #[test]
    fn defaults() {
        let c = parse(GOLD).unwrap();
        assert!(matches!(c.flow, FlowConfig::Limit { rescaled: true }));
        assert_eq!(c.run.backend, Backend::Rational);
        let f = c.scenario::<f64>().unwrap();
        assert_eq!(f.string.positions(), [1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse(
            r#"{"string": {"positions": [0.5], "masses": [1]},
                "bc": {"left": {"kind": "robin", "parameter": "x"}, "right": {"kind": "neumann"}}}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(e.contains("bc.left"), "{e}");

        let e = parse(r#"{"string": {"positions": [0.5], "masses": [1], "extra": 1}, "bc": {}}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("string"), "{e}");
        assert!(e.contains("extra"), "{e}");
    }

    #[test]
    fn validation_failures() {
        let unsorted = r#"{"string": {"positions": [0.5, 0.4], "masses": [1, 1]},
            "bc": {"left": {"kind": "dirichlet"}, "right": {"kind": "dirichlet"}}}"#;
        let e = parse(unsorted).unwrap().scenario::<Rational>().unwrap_err();
        assert!(e.to_string().contains("position 1"), "{e}");

        let nn = r#"{"string": {"positions": [0.5], "masses": [1]},
            "bc": {"left": {"kind": "neumann"}, "right": {"kind": "neumann"}}}"#;
        assert!(parse(nn).unwrap().scenario::<Rational>().is_err());
        let nn_ti = nn.replace(
            "}}}",
            "}}, \"flow\": {\"kind\": \"translation_invariant\"}}",
        );
        assert!(parse(&nn_ti).unwrap().scenario::<Rational>().is_ok());

        let bad_eps = GOLD.replace(
            "}}\n    }",
            "}}, \"flow\": {\"kind\": \"single_pole\", \"epsilon\": 0}}",
        );
        assert!(parse(&bad_eps).unwrap().scenario::<Rational>().is_err());
    }
}
