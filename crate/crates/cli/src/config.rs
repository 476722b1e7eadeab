//! Run configuration read from a TOML file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use lasso_core::graph::{LassoGeometry, PotentialSpec};

use crate::io::read_column;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub seed: Option<u64>,
    pub synthesize: Option<SynthesizeConfig>,
    pub simulate: Option<SimulateConfig>,
    pub spectrum: Option<SpectrumConfig>,
    pub gap: Option<GapConfig>,
    pub demo: Option<DemoConfig>,
    pub verify: Option<VerifyConfig>,
    /// Directory of the config file; relative paths are resolved against it.
    #[serde(skip)]
    pub base: PathBuf,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Pendant edge length.
    pub l: f64,
    /// Half the loop length.
    pub a: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Constant { value: f64 },
    /// One CSV column of uniform samples per edge, from the interior vertex.
    Tables { q1: PathBuf, q2: PathBuf, q3: PathBuf },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Grid nodes per unit length.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Courant number of verification runs.
    #[serde(default = "default_cfl")]
    pub verify_cfl: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: default_resolution(),
            verify_cfl: default_cfl(),
        }
    }
}

fn default_resolution() -> usize {
    200
}

fn default_cfl() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    /// Neumann control at the boundary vertex and a jump on the ring.
    P1,
    /// Flux control at the interior vertex and jumps on both ring edges.
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Shape,
    Velocity,
    Exact,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeConfig {
    pub problem: Problem,
    pub mode: Mode,
    /// Pulse half-width for the interior problem; defaults to `min(a, l)/2`.
    pub epsilon: Option<f64>,
    pub target: PathBuf,
    #[serde(default = "yes")]
    pub verify: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub problem: Problem,
    pub controls: PathBuf,
    /// Defaults to the duration of the controls.
    pub t_end: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    ClosedForm,
    Shooting,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "closed_form")]
    pub method: SpectrumMethod,
    /// Upper frequency for the closed form.
    pub omega_max: Option<f64>,
    /// Number of eigenpairs for shooting.
    pub modes: Option<usize>,
}

fn closed_form() -> SpectrumMethod {
    SpectrumMethod::ClosedForm
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    pub omega_max: f64,
    /// Prefix lengths over which the minimal gap is reported.
    pub counts: Vec<usize>,
    /// Indices `n` whose root pairs near `2πn/max(2a, l)` are located.
    #[serde(default)]
    pub clusters: Vec<u64>,
    #[serde(default = "default_convergents")]
    pub convergents: usize,
}

fn default_convergents() -> usize {
    12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoWhich {
    BoundaryOnly,
    InteriorOnly,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    pub which: DemoWhich,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Defaults to `2(a + l)`.
    pub t: Option<f64>,
}

fn default_trials() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub problem: Problem,
    pub controls: PathBuf,
    pub target: PathBuf,
    pub t_end: Option<f64>,
}

fn finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        bail!("{name} must be finite, got {v}");
    }
    Ok(())
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    if let Some(v) = v {
        finite(name, v)?;
        if v <= 0.0 {
            bail!("{name} must be positive, got {v}");
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: Self = toml::from_str(&text).with_context(|| format!("cannot parse config {}", path.display()))?;
        config.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.validate()?;
        Ok(config)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn validate(&self) -> Result<()> {
        positive("geometry.l", Some(self.geometry.l))?;
        positive("geometry.a", Some(self.geometry.a))?;
        if self.grid.resolution == 0 {
            bail!("grid.resolution must be positive");
        }
        positive("grid.verify_cfl", Some(self.grid.verify_cfl))?;
        if let PotentialConfig::Constant { value } = self.potential {
            finite("potential.value", value)?;
        }
        if let Some(s) = &self.synthesize {
            positive("synthesize.epsilon", s.epsilon)?;
        }
        if let Some(s) = &self.simulate {
            positive("simulate.t_end", s.t_end)?;
            positive("simulate.cfl", Some(s.cfl))?;
        }
        if let Some(s) = &self.spectrum {
            positive("spectrum.omega_max", s.omega_max)?;
        }
        if let Some(g) = &self.gap {
            positive("gap.omega_max", Some(g.omega_max))?;
        }
        if let Some(d) = &self.demo {
            positive("demo.t", d.t)?;
        }
        if let Some(v) = &self.verify {
            positive("verify.t_end", v.t_end)?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<LassoGeometry> {
        Ok(LassoGeometry::new(self.geometry.l, self.geometry.a)?)
    }

    pub fn potential(&self, geom: &LassoGeometry) -> Result<PotentialSpec> {
        Ok(match &self.potential {
            PotentialConfig::Zero => PotentialSpec::constant(geom, 0.0),
            PotentialConfig::Constant { value } => PotentialSpec::constant(geom, *value),
            PotentialConfig::Tables { q1, q2, q3 } => {
                let table = |p: &PathBuf, len: f64| -> Result<lasso_core::graph::SampledFn> {
                    let v = read_column(&self.resolve(p))?;
                    if v.len() < 2 {
                        bail!("potential table {} needs at least two samples", p.display());
                    }
                    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                        bail!("potential table {} has non-finite value {x}", p.display());
                    }
                    Ok(lasso_core::graph::SampledFn::new(len / (v.len() - 1) as f64, v))
                };
                PotentialSpec::from_tables(table(q1, geom.l())?, table(q2, geom.a())?, table(q3, geom.a())?)?
            }
        })
    }

    pub fn is_unperturbed(&self) -> bool {
        match self.potential {
            PotentialConfig::Zero => true,
            PotentialConfig::Constant { value } => value == 0.0,
            PotentialConfig::Tables { .. } => false,
        }
    }

    pub fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T> {
        s.as_ref().with_context(|| format!("config has no [{name}] section"))
    }
}
