//! Run configuration: one JSON document per run, unknown keys rejected.

use std::path::{Path, PathBuf};

use inflap::criteria::CriteriaConfig;
use inflap::domain::Shape;
use inflap::radial::Prefactor;
use inflap::rhs::RhsSpec;
use inflap::scheme::SchemeParams;
use inflap::solver::SolveOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Solve,
    Perron,
    Probe,
    Radial,
    Family,
    Criteria,
    Verify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Boundary {
    Constant(f64),
    /// Expression in `x0, x1, …`; `t` is not allowed.
    Expression(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub domain: Shape,
    pub rhs: String,
    pub boundary: Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadialConfig {
    /// Lower end of the profile range; defaults to the boundary minimum.
    pub ell: Option<f64>,
    pub a: f64,
    pub prefactor: Prefactor,
    pub nodes: usize,
}

impl Default for RadialConfig {
    fn default() -> Self {
        RadialConfig { ell: None, a: 1.0, prefactor: Prefactor::InvSqrt2, nodes: inflap::radial::PROFILE_NODES }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyConfig {
    pub gamma: f64,
    pub k: u32,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig { gamma: 7.0, k: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Random initial guesses for the repeat solves.
    pub restarts: usize,
    /// Harnack probe radii, tried at the domain centre where admissible.
    pub harnack_radii: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { restarts: 2, harnack_radii: vec![0.1, 0.2, 0.3] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub field: String,
    pub profile: String,
    pub report: String,
}

impl Default for Output {
    fn default() -> Self {
        Output { field: "field.csv".into(), profile: "profile.csv".into(), report: "report.json".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    /// Must agree with the command-line action when present.
    #[serde(default)]
    pub action: Option<Action>,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: SchemeParams,
    #[serde(default)]
    pub solve: SolveOptions,
    #[serde(default)]
    pub criteria: CriteriaConfig,
    #[serde(default)]
    pub radial: RadialConfig,
    #[serde(default)]
    pub family: FamilyConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: Output,
}

fn default_h() -> f64 {
    1.0 / 32.0
}

/// Parses and validates `text`. Relative mask paths are resolved against `base`.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<RunConfig, CliError> {
    let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    if let (Shape::Mask { path }, Some(base)) = (&mut cfg.problem.domain, base) {
        let p = PathBuf::from(&*path);
        if p.is_relative() {
            *path = base.join(p).to_string_lossy().into_owned();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(CliError::Config("h must be positive".into()));
        }
        if let Shape::Mask { path } = &self.problem.domain {
            if !Path::new(path).is_file() {
                return Err(CliError::Config(format!("mask file `{path}` does not exist")));
            }
        }
        RhsSpec::parse(&self.problem.rhs).map_err(|e| CliError::Config(format!("problem.rhs: {e}")))?;
        if let Boundary::Expression(text) = &self.problem.boundary {
            let b = RhsSpec::parse(text).map_err(|e| CliError::Config(format!("problem.boundary: {e}")))?;
            if b.depends_on_t() {
                return Err(CliError::Config("problem.boundary: expression may not depend on t".into()));
            }
        }
        if self.solve.scheme != SchemeParams::default() && self.solve.scheme != self.scheme {
            return Err(CliError::Config("solve.scheme conflicts with scheme; set only one".into()));
        }
        self.scheme.validate()?;
        self.solve.validate()?;
        self.criteria.validate()?;
        if !(self.radial.a.is_finite()) || self.radial.nodes < 8 {
            return Err(CliError::Config("radial: need finite a and at least 8 nodes".into()));
        }
        if !(self.family.gamma > 3.0) || self.family.k == 0 {
            return Err(CliError::Config("family: need gamma > 3 and k ≥ 1".into()));
        }
        if self.verify.harnack_radii.iter().any(|r| !(*r > 0.0)) {
            return Err(CliError::Config("verify.harnack_radii must be positive".into()));
        }
        Ok(())
    }

    /// Solve options with the top-level scheme applied.
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions { scheme: self.scheme.clone(), ..self.solve.clone() }
    }
}
