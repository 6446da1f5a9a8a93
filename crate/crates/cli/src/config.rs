//! Run configuration. The `[problem]` table reuses the core TOML schema;
//! the remaining tables tune the Galerkin basis, the driving current, the
//! imaging sweep and the self-check defaults. Command line flags override
//! file values, which override the built-in defaults.

use crate::error::AppError;
use corrobem::geometry::{GammaConfig, Point, ProblemSpec, SpecConfig};
use corrobem::imaging::IndicatorMethod;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<SpecConfig>,
    #[serde(default)]
    pub basis: BasisSection,
    #[serde(default)]
    pub current: CurrentSection,
    #[serde(default)]
    pub imaging: ImagingSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSection {
    /// Highest Fourier order; the basis has order+1 functions.
    pub order: usize,
}

impl Default for BasisSection {
    fn default() -> Self {
        BasisSection { order: 19 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurrentSection {
    /// Fourier mode of the injected current, g(θ) = cos(k·mode·θ).
    pub mode: usize,
}

impl Default for CurrentSection {
    fn default() -> Self {
        CurrentSection { mode: 1 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImagingSection {
    pub method: Option<MethodName>,
    pub grid: [usize; 2],
    pub sv_threshold: f64,
    pub alpha: f64,
    /// Explicit level cut; omitted means the per-example default, or no
    /// cut at all when none is tabulated.
    pub level: Option<f64>,
}

impl Default for ImagingSection {
    fn default() -> Self {
        ImagingSection {
            method: None,
            grid: [100, 100],
            sv_threshold: 1e-5,
            alpha: 1e-5,
            level: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Fmreg,
    Lsmreg,
}

impl MethodName {
    pub fn to_method(self) -> IndicatorMethod {
        match self {
            MethodName::Fmreg => IndicatorMethod::FmReg,
            MethodName::Lsmreg => IndicatorMethod::LsmReg,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Monotonicity sweep uses modes 1..=currents.
    pub currents: usize,
    /// Coefficient pair for the monotonicity sandwich.
    pub gamma_pair: [f64; 2],
    /// Representation probe; defaults to a point per built-in example.
    pub probe: Option<[f64; 2]>,
    /// Dichotomy probes per region class.
    pub probes_per_class: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { currents: 5, gamma_pair: [0.5, 2.0], probe: None, probes_per_class: 6 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
    }
}

/// Problem spec with the example id retained for default lookups.
#[derive(Debug)]
pub struct ResolvedProblem {
    pub spec: ProblemSpec,
    pub example: Option<u8>,
    pub cfg: RunConfig,
}

pub struct ProblemOverrides {
    pub example: Option<u8>,
    pub gamma: Option<f64>,
    pub nf: Option<usize>,
}

pub fn resolve_problem(
    config: Option<&Path>,
    over: &ProblemOverrides,
) -> Result<ResolvedProblem, AppError> {
    let mut cfg = match config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut problem = match (cfg.problem.take(), over.example) {
        (Some(p), Some(id)) => {
            if p.gamma_n.is_some() || p.gamma_d.is_some() || p.gamma_c.is_some() {
                return Err(AppError::Config(
                    "--example conflicts with the custom arcs in the config file".into(),
                ));
            }
            SpecConfig { example: Some(id), ..p }
        }
        (Some(p), None) => p,
        (None, Some(id)) => SpecConfig { example: Some(id), ..SpecConfig::default() },
        (None, None) => {
            return Err(AppError::Config(
                "no problem given: pass --example or a config file with a [problem] table".into(),
            ))
        }
    };
    if let Some(nf) = over.nf {
        problem.nf = Some(nf);
    }
    if let Some(g) = over.gamma {
        problem.gamma = Some(GammaConfig::Constant(g));
    }
    let example = problem.example;
    let spec = problem.into_spec()?;
    Ok(ResolvedProblem { spec, example, cfg })
}

/// Level cuts reproducing the reference reconstructions, keyed by example,
/// method and the constant coefficient value. Anything off the table gets
/// no cut: the mask then covers every point with a usable indicator.
pub fn default_level(example: Option<u8>, method: IndicatorMethod, spec: &ProblemSpec) -> Option<f64> {
    let (lo, hi) = spec.gamma_coeff.bounds();
    if lo != hi {
        return None;
    }
    let near = |v: f64| (lo - v).abs() < 1e-9;
    let half = near(0.5);
    let two = near(2.0);
    if !half && !two {
        return None;
    }
    match (example?, method) {
        (1, IndicatorMethod::FmReg) => Some(1.5),
        (1, IndicatorMethod::LsmReg) => Some(-0.5),
        (2, IndicatorMethod::FmReg) => Some(if half { 0.25 } else { -1.0 }),
        (2, IndicatorMethod::LsmReg) => Some(if half { -1.0 } else { -1.5 }),
        (3, IndicatorMethod::FmReg) => Some(if half { 2.5 } else { 1.5 }),
        (3, IndicatorMethod::LsmReg) => None,
        _ => None,
    }
}

/// Representation probes known to sit well inside the intact region.
pub fn default_probe(example: Option<u8>) -> Option<Point> {
    match example? {
        1 => Some(Point::new(std::f64::consts::PI, -0.5 * std::f64::consts::PI)),
        2 => Some(Point::new(0.6, 0.6)),
        3 => Some(Point::new(0.0, 0.5)),
        _ => None,
    }
}
