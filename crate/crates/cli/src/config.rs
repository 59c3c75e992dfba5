//! Experiment configuration and its resolution against the registry.

use std::path::PathBuf;

use lasserre_core::estimators::recentre;
use lasserre_core::{DomainSpec, MeasureSpec, Polynomial, DEFAULT_PRECISION};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::registry::{self, RegistryEntry};

/// Largest supported order.
pub const R_MAX_LIMIT: usize = 24;

/// A registry name or an inline JSON polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionRef {
    Name(String),
    Literal(Polynomial),
}

/// A registry name or an inline JSON domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainRef {
    Name(String),
    Literal(DomainSpec),
}

/// Measure by name (`lebesgue`, `chebyshev`, `box_jacobi`, `ball_jacobi`) plus
/// the Jacobi exponent where one is needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            name: "lebesgue".into(),
            lambda: None,
        }
    }
}

impl MeasureConfig {
    pub fn new(name: &str, lambda: Option<f64>) -> Self {
        Self {
            name: name.into(),
            lambda,
        }
    }

    pub fn to_spec(&self) -> Result<MeasureSpec> {
        let need = |what: &str| {
            self.lambda
                .ok_or_else(|| CliError::Config(format!("measure `{what}` needs a lambda")))
        };
        let spec = match self.name.replace('-', "_").as_str() {
            "lebesgue" => MeasureSpec::Lebesgue,
            "chebyshev" => MeasureSpec::chebyshev(),
            "box_jacobi" => MeasureSpec::BoxJacobi { lambda: need("box_jacobi")? },
            "ball_jacobi" => MeasureSpec::BallJacobi { lambda: need("ball_jacobi")? },
            other => return Err(CliError::Config(format!("unknown measure `{other}`"))),
        };
        if spec.lambda() <= -1.0 {
            return Err(CliError::Config(format!("lambda must exceed -1, got {}", spec.lambda())));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Eigen,
    Needle,
    Both,
}

impl Engine {
    pub fn eigen(self) -> bool {
        matches!(self, Engine::Eigen | Engine::Both)
    }

    pub fn needle(self) -> bool {
        matches!(self, Engine::Needle | Engine::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Quadratic,
    LinearOnBall,
    Lipschitz,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn default_precision() -> u32 {
    DEFAULT_PRECISION
}

fn is_false(b: &bool) -> bool {
    !b
}

/// One `(function, domain, measure)` cell and how to run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub function: FunctionRef,
    pub domain: DomainRef,
    #[serde(default)]
    pub measure: MeasureConfig,
    pub r_max: usize,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
    /// Known minimum; required when the registry cannot supply one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    /// Move the minimizer to the origin and shrink the domain into the unit ball first.
    #[serde(default, skip_serializing_if = "is_false")]
    pub recentre: bool,
    #[serde(default)]
    pub seed: u64,
    /// Leave timing columns out of the CSV so repeated runs are byte-identical.
    #[serde(default, skip_serializing_if = "is_false")]
    pub omit_timing: bool,
}

impl ExperimentConfig {
    /// A Lebesgue, eigen-engine, CSV config for registry names.
    pub fn named(function: &str, domain: &str, r_max: usize) -> Self {
        Self {
            function: FunctionRef::Name(function.into()),
            domain: DomainRef::Name(domain.into()),
            measure: MeasureConfig::default(),
            r_max,
            engine: Engine::Eigen,
            estimator: None,
            output: None,
            format: Format::Csv,
            precision_bits: DEFAULT_PRECISION,
            f_min: None,
            recentre: false,
            seed: 0,
            omit_timing: false,
        }
    }

    pub fn with_measure(mut self, m: MeasureConfig) -> Self {
        self.measure = m;
        self
    }

    /// Short label `function/domain/measure` for reports.
    pub fn label(&self) -> String {
        let f = match &self.function {
            FunctionRef::Name(n) => n.clone(),
            FunctionRef::Literal(_) => "custom".into(),
        };
        let d = match &self.domain {
            DomainRef::Name(n) => n.clone(),
            DomainRef::Literal(d) => d.kind_name().into(),
        };
        format!("{f}/{d}/{}", self.measure.name)
    }

    /// Validates the config and resolves names into concrete objects.
    pub fn resolve(&self) -> Result<Experiment> {
        if !(1..=R_MAX_LIMIT).contains(&self.r_max) {
            return Err(CliError::Config(format!("r_max must be in 1..={R_MAX_LIMIT}, got {}", self.r_max)));
        }
        if self.precision_bits < 53 {
            return Err(CliError::Config("precision must be at least 53 bits".into()));
        }
        let domain = match &self.domain {
            DomainRef::Name(n) => registry::domain(n).ok_or_else(|| {
                CliError::Config(format!("unknown domain `{n}` (known: {})", registry::DOMAINS.join(", ")))
            })?,
            DomainRef::Literal(d) => d.clone(),
        };
        let n = domain.n_vars();
        let (f, entry) = match &self.function {
            FunctionRef::Name(name) => {
                let e = registry::function(name, n).ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown function `{name}` in {n} variables (known: {})",
                        registry::FUNCTIONS.join(", ")
                    ))
                })?;
                (e.f.clone(), Some(e))
            }
            FunctionRef::Literal(p) => (p.clone(), None),
        };
        if f.n_vars() != n {
            return Err(CliError::Config(format!(
                "function has {} variables but the domain has {n}",
                f.n_vars()
            )));
        }
        let measure = self.measure.to_spec()?;
        measure.check_compatible(&domain)?;
        let f_min = self.f_min.or_else(|| entry.as_ref().and_then(|e| e.f_min_on(&domain)));
        let anchor = entry.as_ref().and_then(|e| e.minimizer_in(&domain)).map(|a| a.to_vec());
        let mut exp = Experiment {
            f,
            domain,
            measure,
            f_min,
            anchor,
            entry,
            offset: 0.0,
        };
        if self.recentre {
            let a = exp
                .anchor
                .clone()
                .ok_or_else(|| CliError::Config("recentring needs a known minimizer in the domain".into()))?;
            let rc = recentre(&exp.f, &exp.domain, &a)?;
            exp.f = rc.f;
            exp.domain = rc.domain;
            exp.offset = rc.offset;
            exp.anchor = Some(vec![0.0; n]);
        }
        Ok(exp)
    }
}

/// A resolved experiment cell.
///
/// After recentring, `f` and `domain` are the transformed problem and
/// `offset = f(a)`; reported bounds add `offset` back, so they stay in the
/// original units.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub f: Polynomial,
    pub domain: DomainSpec,
    pub measure: MeasureSpec,
    pub f_min: Option<f64>,
    /// A global minimizer in the working coordinates, when known.
    pub anchor: Option<Vec<f64>>,
    pub entry: Option<RegistryEntry>,
    pub offset: f64,
}
