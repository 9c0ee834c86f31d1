//! Run configuration: a flat TOML file describing the profile, geometry,
//! grids, tolerances, and output location.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use hydronozzle::field::{SolverChoice, SolverTolerances};
use hydronozzle::geometry::{DownstreamKind, NozzleGeometry};
use hydronozzle::profiles::{IncomingProfile, VorticitySource};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: ProfileConfig,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    /// `constant`, `quartic_bump`, or `csv`.
    pub kind: String,
    /// Bump amplitude for `quartic_bump`.
    #[serde(default)]
    pub amplitude: Option<f64>,
    /// Two-column `x2,v1` table for `csv`.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// `strip`, `tanh`, `bump`, `slanted`, or `csv`.
    pub kind: String,
    /// Downstream lower-wall offset (`tanh`, `bump`).
    #[serde(default)]
    pub offset: Option<f64>,
    /// Downstream width (`tanh`, `bump`).
    #[serde(default)]
    pub width: Option<f64>,
    /// Transition steepness (`tanh`, `slanted`).
    #[serde(default)]
    pub rate: Option<f64>,
    /// Half-width of the compactly supported perturbation (`bump`).
    #[serde(default)]
    pub support: Option<f64>,
    /// Lower/upper wall bump amplitudes (`bump`).
    #[serde(default)]
    pub amp0: Option<f64>,
    #[serde(default)]
    pub amp1: Option<f64>,
    /// Downstream asymptote intercept and slope (`slanted`).
    #[serde(default)]
    pub intercept: Option<f64>,
    #[serde(default)]
    pub slope: Option<f64>,
    /// Wall tables for `csv`.
    #[serde(default)]
    pub s0_path: Option<PathBuf>,
    #[serde(default)]
    pub s1_path: Option<PathBuf>,
    /// Downstream kind for `csv` walls: `flat` (offset/width) or `slanted`.
    #[serde(default)]
    pub downstream: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_ny")]
    pub ny1: usize,
    #[serde(default = "default_ny")]
    pub ny2: usize,
    /// Truncation abscissa X; the domain is `[-X, X]`.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
}

fn default_ny() -> usize {
    200
}

fn default_cutoff() -> f64 {
    20.0
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            ny1: default_ny(),
            ny2: default_ny(),
            cutoff: default_cutoff(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_solver_tol")]
    pub picard: f64,
    #[serde(default = "default_solver_tol")]
    pub beta: f64,
    #[serde(default = "default_solver_tol")]
    pub shooting: f64,
    #[serde(default = "default_farfield_tol")]
    pub farfield: f64,
    /// Ceiling on the finite-difference residual norms in `verify`
    /// (grid-dependent; the default suits the default grid).
    #[serde(default = "default_residual_ceiling")]
    pub residual_ceiling: f64,
    /// Wall residual allowed at the truncation boundaries when checking the
    /// structural assumptions.
    #[serde(default = "default_asymptote_tol")]
    pub asymptote: f64,
}

fn default_asymptote_tol() -> f64 {
    1e-8
}

fn default_solver_tol() -> f64 {
    1e-12
}

fn default_farfield_tol() -> f64 {
    1e-6
}

fn default_residual_ceiling() -> f64 {
    1e-3
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            picard: default_solver_tol(),
            beta: default_solver_tol(),
            shooting: default_solver_tol(),
            farfield: default_farfield_tol(),
            residual_ceiling: default_residual_ceiling(),
            asymptote: default_asymptote_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: MethodChoice,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: MethodChoice::Lagrange,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
#[clap(rename_all = "lowercase")]
pub enum MethodChoice {
    Lagrange,
    Picard,
    Shooting,
    All,
}

impl MethodChoice {
    pub fn primary(self) -> SolverChoice {
        match self {
            MethodChoice::Picard => SolverChoice::Picard,
            MethodChoice::Shooting => SolverChoice::Shooting,
            _ => SolverChoice::Lagrange,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| ConfigError(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grid.ny1 < 50 || self.grid.ny2 < 50 {
            return Err(ConfigError(format!(
                "grid too coarse: ny1 = {}, ny2 = {} (both must be >= 50)",
                self.grid.ny1, self.grid.ny2
            )));
        }
        if self.grid.cutoff <= 0.0 {
            return Err(ConfigError("cutoff must be positive".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("picard", t.picard),
            ("beta", t.beta),
            ("shooting", t.shooting),
            ("farfield", t.farfield),
            ("residual_ceiling", t.residual_ceiling),
            ("asymptote", t.asymptote),
        ] {
            if v <= 0.0 {
                return Err(ConfigError(format!("tolerance `{name}` must be positive")));
            }
        }
        Ok(())
    }

    pub fn solver_tolerances(&self) -> SolverTolerances {
        SolverTolerances {
            picard: self.tolerances.picard,
            beta: self.tolerances.beta,
            shooting: self.tolerances.shooting,
            picard_max_iter: 20_000,
        }
    }

    pub fn build_profile(&self) -> Result<IncomingProfile, ConfigError> {
        let p = &self.profile;
        match p.kind.as_str() {
            "constant" => IncomingProfile::constant(),
            "quartic_bump" => {
                let a = p.amplitude.ok_or_else(|| {
                    ConfigError("profile.amplitude is required for quartic_bump".into())
                })?;
                IncomingProfile::quartic_bump(a)
            }
            "csv" => {
                let path = p
                    .path
                    .as_ref()
                    .ok_or_else(|| ConfigError("profile.path is required for csv".into()))?;
                let (x, v) = read_two_column_csv(path)?;
                IncomingProfile::from_samples(x, v)
            }
            other => {
                return Err(ConfigError(format!(
                    "unknown profile kind `{other}` (expected constant, quartic_bump, or csv)"
                )))
            }
        }
        .map_err(|e| ConfigError(format!("profile construction failed: {e}")))
    }

    pub fn build_geometry(&self) -> Result<NozzleGeometry, ConfigError> {
        let g = &self.geometry;
        let x = self.grid.cutoff;
        match g.kind.as_str() {
            "strip" => NozzleGeometry::strip(x),
            "tanh" => NozzleGeometry::tanh_transition(
                g.offset.unwrap_or(0.0),
                g.width.unwrap_or(1.0),
                g.rate.unwrap_or(1.0),
                x,
            ),
            "bump" => NozzleGeometry::compact_bump(
                g.offset.unwrap_or(0.0),
                g.width.unwrap_or(1.0),
                g.support.unwrap_or(5.0),
                g.amp0.unwrap_or(0.0),
                g.amp1.unwrap_or(0.0),
                x,
            ),
            "slanted" => NozzleGeometry::slanted(
                g.intercept.unwrap_or(0.0),
                g.slope.unwrap_or(1.0),
                g.rate.unwrap_or(1.0),
                x,
            ),
            "csv" => {
                let s0_path = g
                    .s0_path
                    .as_ref()
                    .ok_or_else(|| ConfigError("geometry.s0_path is required for csv".into()))?;
                let s1_path = g
                    .s1_path
                    .as_ref()
                    .ok_or_else(|| ConfigError("geometry.s1_path is required for csv".into()))?;
                let (x0, s0) = read_two_column_csv(s0_path)?;
                let (x1, s1) = read_two_column_csv(s1_path)?;
                let downstream = match g.downstream.as_deref() {
                    Some("slanted") => DownstreamKind::Slanted {
                        intercept: g.intercept.unwrap_or(0.0),
                        slope: g.slope.unwrap_or(0.0),
                    },
                    _ => DownstreamKind::Flat {
                        offset: g.offset.unwrap_or_else(|| *s0.last().unwrap()),
                        width: g
                            .width
                            .unwrap_or_else(|| s1.last().unwrap() - s0.last().unwrap()),
                    },
                };
                NozzleGeometry::from_samples(x0, s0, x1, s1, downstream, x)
            }
            other => {
                return Err(ConfigError(format!(
                    "unknown geometry kind `{other}` (expected strip, tanh, bump, slanted, or csv)"
                )))
            }
        }
        .map_err(|e| ConfigError(format!("geometry construction failed: {e}")))
    }

    pub fn build_source(
        &self,
        profile: &IncomingProfile,
    ) -> Result<Arc<VorticitySource>, ConfigError> {
        VorticitySource::from_profile(profile)
            .map(Arc::new)
            .map_err(|e| ConfigError(format!("vorticity source construction failed: {e}")))
    }

    pub fn is_strip(&self) -> bool {
        self.geometry.kind == "strip"
    }
}

/// Two-column numeric CSV; a non-numeric first row is treated as a header.
fn read_two_column_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let (a, b) = match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(ConfigError(format!(
                    "{}:{}: expected two comma-separated columns",
                    path.display(),
                    lineno + 1
                )))
            }
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if lineno == 0 => continue, // header row
            _ => {
                return Err(ConfigError(format!(
                    "{}:{}: cannot parse `{line}` as numbers",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok((xs, ys))
}
