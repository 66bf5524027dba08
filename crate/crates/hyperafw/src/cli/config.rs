//! Run configuration files.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::adaptivity::{AdaptiveConfig, Refinement, Setup, Stopping};
use crate::cases::{l_shape_hencky_mises, CaseName, LShapeSolution, NotchedPlate};
use crate::constitutive::ConstitutiveLaw;
use crate::Error;

/// Initial mesh size when the configuration does not set one.
pub fn default_initial_h(case: CaseName) -> f64 {
    match case {
        CaseName::LShape => 0.5,
        CaseName::NotchedPlate => 2.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One Newton solve on the initial mesh.
    SingleSolve,
    UniformStudy,
    AdaptiveStudy,
    /// Adaptive refinement twice, once with residual and once with adaptive
    /// Newton stopping.
    CompareStopping,
}

/// The benchmark law of the selected case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawPreset {
    Linear,
    HenckyMises,
    Damage,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum LawSpec {
    Preset(LawPreset),
    Explicit(ConstitutiveLaw),
}

impl Default for LawSpec {
    fn default() -> Self {
        LawSpec::Preset(LawPreset::Linear)
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub case: CaseName,
    #[serde(default)]
    pub law: LawSpec,
    pub initial_h: Option<f64>,
    #[serde(default)]
    pub adaptive: AdaptiveConfig,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub deterministic: bool,
    pub threads: Option<usize>,
    #[serde(default = "default_true")]
    pub vtk: bool,
    #[serde(default)]
    pub l_shape: LShapeSolution,
    #[serde(default)]
    pub plate: NotchedPlate,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn law(&self) -> Result<ConstitutiveLaw, Error> {
        let law = match (&self.law, self.case) {
            (LawSpec::Explicit(law), _) => *law,
            (LawSpec::Preset(LawPreset::Linear), CaseName::LShape) => self.l_shape.law(),
            (LawSpec::Preset(LawPreset::HenckyMises), CaseName::LShape) => l_shape_hencky_mises(),
            (LawSpec::Preset(LawPreset::Damage), CaseName::LShape) => {
                return Err(Error::Config("the l_shape case has no damage preset; give the law parameters explicitly".into()))
            }
            (LawSpec::Preset(LawPreset::Linear), CaseName::NotchedPlate) => self.plate.linear(),
            (LawSpec::Preset(LawPreset::HenckyMises), CaseName::NotchedPlate) => self.plate.hencky_mises(),
            (LawSpec::Preset(LawPreset::Damage), CaseName::NotchedPlate) => self.plate.damage(),
        };
        law.validate()?;
        Ok(law)
    }

    pub fn setup(&self) -> Result<Setup, Error> {
        Ok(Setup {
            case: self.case,
            law: self.law()?,
            initial_h: self.initial_h.unwrap_or_else(|| default_initial_h(self.case)),
            l_shape: self.l_shape,
            plate: self.plate,
        })
    }

    /// The adaptive configurations of the runs making up the study.
    pub fn runs(&self) -> Vec<(&'static str, AdaptiveConfig)> {
        let base = self.adaptive.clone();
        match self.mode {
            Mode::SingleSolve => vec![("single", AdaptiveConfig { max_loops: 0, ..base })],
            Mode::UniformStudy => vec![(
                "uniform",
                AdaptiveConfig {
                    refinement: Refinement::Uniform,
                    ..base
                },
            )],
            Mode::AdaptiveStudy => vec![(
                "adaptive",
                AdaptiveConfig {
                    refinement: Refinement::Adaptive,
                    ..base
                },
            )],
            Mode::CompareStopping => vec![
                (
                    "residual",
                    AdaptiveConfig {
                        refinement: Refinement::Adaptive,
                        stopping: Stopping::Residual,
                        ..base.clone()
                    },
                ),
                (
                    "adaptive",
                    AdaptiveConfig {
                        refinement: Refinement::Adaptive,
                        stopping: Stopping::Adaptive,
                        ..base
                    },
                ),
            ],
        }
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<(), Error> {
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        let setup = self.setup()?;
        for (_, config) in self.runs() {
            config.validate()?;
        }
        setup.initial_mesh()?;
        Ok(())
    }
}

////////////////////////////////////////////////////////////////////////////////
