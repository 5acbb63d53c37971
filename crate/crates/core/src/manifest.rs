//! TOML experiment manifests: one experiment per file, validated before anything runs.
//!
//! ```toml
//! experiment = "simulate"
//! d = 1
//! seed = 42
//! resolution = [64]
//!
//! [hurst]
//! family = "constant"
//! h = [0.5]
//!
//! [interval]
//! lo = [1.0]
//! hi = [2.0]
//!
//! [sampler]
//! sampler = "cholesky"
//!
//! [params]
//! replicates = 4
//! ```

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Interval};
use crate::hurst::{HurstFunctional, HurstSpec};
use crate::localtime::{KRule, LevelMode, TestFunction};
use crate::simulate::SamplerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ValidateHurst,
    Covariance,
    Simulate,
    Lnd,
    Increments,
    Localtime,
    Levelset,
    DimensionMap,
    VerifyLemmas,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::ValidateHurst,
        ExperimentKind::Covariance,
        ExperimentKind::Simulate,
        ExperimentKind::Lnd,
        ExperimentKind::Increments,
        ExperimentKind::Localtime,
        ExperimentKind::Levelset,
        ExperimentKind::DimensionMap,
        ExperimentKind::VerifyLemmas,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::ValidateHurst => "validate-hurst",
            ExperimentKind::Covariance => "covariance",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Lnd => "lnd",
            ExperimentKind::Increments => "increments",
            ExperimentKind::Localtime => "localtime",
            ExperimentKind::Levelset => "levelset",
            ExperimentKind::DimensionMap => "dimension-map",
            ExperimentKind::VerifyLemmas => "verify-lemmas",
        }
    }

    pub fn summary(&self) -> &'static str {
        match self {
            ExperimentKind::ValidateHurst => "bound and rho_K-Lipschitz checks of a Hurst functional on a grid",
            ExperimentKind::Covariance => "covariance matrix of B or a Liouville piece on grid points",
            ExperimentKind::Simulate => "sample paths written as binary field files",
            ExperimentKind::Lnd => "conditional-variance certificates on random ordered configurations",
            ExperimentKind::Increments => "increment-variance ratios on random close pairs",
            ExperimentKind::Localtime => "existence verdict, occupation residuals, ball and moment scaling fits",
            ExperimentKind::Levelset => "level-set box-counting dimension at t* and the threshold sweep",
            ExperimentKind::DimensionMap => "windowed box-counting dimension against the theoretical map",
            ExperimentKind::VerifyLemmas => "calculus inequality sweeps and Hoelder splits on random draws",
        }
    }

    fn needs_model(&self) -> bool {
        !matches!(self, ExperimentKind::VerifyLemmas)
    }

    fn needs_grid(&self) -> bool {
        !matches!(self, ExperimentKind::VerifyLemmas | ExperimentKind::Increments | ExperimentKind::Lnd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<HurstSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<IntervalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Vec<usize>>,
    #[serde(default = "one")]
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    /// Output directory, relative to the working directory; `--out` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub params: toml::Table,
}

fn one() -> usize {
    1
}

/// Experiment-specific parameters, parsed from `[params]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    ValidateHurst(ValidateHurstParams),
    Covariance(CovarianceParams),
    Simulate(SimulateParams),
    Lnd(LndParams),
    Increments(IncrementsParams),
    Localtime(LocaltimeParams),
    Levelset(LevelsetParams),
    DimensionMap(DimensionMapParams),
    VerifyLemmas(VerifyLemmasParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateHurstParams {
    #[serde(default)]
    pub delta_a: Option<f64>,
    #[serde(default = "tol_validate")]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessName {
    B,
    X0,
    XEps,
    Y,
    ZEps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceParams {
    #[serde(default = "process_b")]
    pub process: ProcessName,
    /// Strip axis for `process = "y"`.
    #[serde(default)]
    pub axis: usize,
    /// Liouville cut-off; defaults to a quarter of the smallest lower bound.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "tol_covariance")]
    pub tol: f64,
    /// Force quadrature even when a closed form exists.
    #[serde(default)]
    pub quadrature: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    #[serde(default = "one")]
    pub replicates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LndModeName {
    Directional,
    Sectorial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LndParams {
    #[serde(default = "sectorial")]
    pub mode: LndModeName,
    #[serde(default)]
    pub axis: usize,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "configurations")]
    pub configurations: usize,
    #[serde(default = "lnd_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "tol_covariance")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementsParams {
    #[serde(default = "pairs")]
    pub n_pairs: usize,
    /// Pair-distance cap; defaults to a tenth of the interval diameter.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Number of successive halvings of delta to report.
    #[serde(default = "one")]
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentParams {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
    pub sides: Vec<f64>,
    #[serde(default = "two")]
    pub order: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocaltimeParams {
    #[serde(default = "paths_localtime")]
    pub n_paths: usize,
    /// Ball centre; defaults to the interval centre.
    #[serde(default)]
    pub t: Option<Vec<f64>>,
    pub radii: Vec<f64>,
    #[serde(default = "random_level")]
    pub level: LevelMode,
    #[serde(default)]
    pub k_rule: KRule,
    #[serde(default = "bump")]
    pub test_function: TestFunction,
    #[serde(default)]
    pub moment: Option<MomentParams>,
    /// Grid points per axis used for the existence verdict.
    #[serde(default = "existence_resolution")]
    pub existence_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsetParams {
    /// Level x; defaults to the origin of ℝ^d.
    #[serde(default)]
    pub level: Option<Vec<f64>>,
    #[serde(default = "paths_levelset")]
    pub n_paths: usize,
    #[serde(default)]
    pub box_sizes: Option<Vec<usize>>,
    #[serde(default = "c_thr")]
    pub c_thr: f64,
    #[serde(default = "halvings")]
    pub threshold_halvings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionMapParams {
    pub window: f64,
    #[serde(default = "paths_levelset")]
    pub n_paths: usize,
    #[serde(default)]
    pub box_sizes: Option<Vec<usize>>,
    #[serde(default = "c_thr")]
    pub c_thr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyLemmasParams {
    /// Random (H̄, d) draws for the Hoelder split.
    #[serde(default = "draws")]
    pub draws: usize,
    /// Δ for the τ-term split.
    #[serde(default = "half")]
    pub delta: f64,
    /// Maximum N for the random draws.
    #[serde(default = "max_dims")]
    pub max_dims: usize,
}

fn tol_validate() -> f64 {
    1e-9
}
fn tol_covariance() -> f64 {
    1e-10
}
fn process_b() -> ProcessName {
    ProcessName::B
}
fn sectorial() -> LndModeName {
    LndModeName::Sectorial
}
fn configurations() -> usize {
    200
}
fn lnd_sizes() -> Vec<usize> {
    vec![3, 5, 10, 20]
}
fn pairs() -> usize {
    500
}
fn two() -> u32 {
    2
}
fn paths_localtime() -> usize {
    200
}
fn random_level() -> LevelMode {
    LevelMode::RandomLevel
}
fn bump() -> TestFunction {
    TestFunction::GaussianBump { center: vec![0.0], width: 0.5 }
}
fn existence_resolution() -> usize {
    9
}
fn paths_levelset() -> usize {
    30
}
fn c_thr() -> f64 {
    1.0
}
fn halvings() -> usize {
    6
}
fn draws() -> usize {
    1000
}
fn half() -> f64 {
    0.5
}
fn max_dims() -> usize {
    4
}

impl Default for VerifyLemmasParams {
    fn default() -> Self {
        VerifyLemmasParams { draws: draws(), delta: half(), max_dims: max_dims() }
    }
}

fn manifest_err(msg: impl Into<String>) -> Error {
    Error::Manifest(msg.into())
}

fn parse_params<T: DeserializeOwned>(kind: ExperimentKind, table: &toml::Table) -> Result<T> {
    toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e| manifest_err(format!("[params] for {}: {e}", kind.name())))
}

/// A manifest whose fields have been checked against each other.
#[derive(Debug, Clone)]
pub struct ValidatedManifest {
    pub manifest: Manifest,
    pub hurst: Option<HurstFunctional>,
    pub interval: Option<Interval>,
    pub grid: Option<Grid>,
    pub sampler: SamplerConfig,
    pub params: Params,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| manifest_err(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| manifest_err(e.to_string()))
    }

    pub fn validate(&self) -> Result<ValidatedManifest> {
        let kind = self.experiment;
        if self.d == 0 {
            return Err(manifest_err("d must be at least 1"));
        }
        let hurst = match (&self.hurst, kind.needs_model()) {
            (Some(spec), _) => Some(spec.build()?),
            (None, true) => return Err(manifest_err(format!("{} needs a [hurst] table", kind.name()))),
            (None, false) => None,
        };
        let interval = match (&self.interval, kind.needs_model()) {
            (Some(iv), _) => Some(Interval::new(iv.lo.clone(), iv.hi.clone())?),
            (None, true) => return Err(manifest_err(format!("{} needs an [interval] table", kind.name()))),
            (None, false) => None,
        };
        if let (Some(h), Some(iv)) = (&hurst, &interval) {
            if h.n_dims() != iv.n_dims() {
                return Err(manifest_err(format!("hurst is {}-dimensional, interval is {}-dimensional", h.n_dims(), iv.n_dims())));
            }
        }
        let grid = match (&self.resolution, &interval, kind.needs_grid()) {
            (Some(r), Some(iv), _) => {
                if r.len() != iv.n_dims() {
                    return Err(manifest_err(format!("resolution has {} entries, interval has {} axes", r.len(), iv.n_dims())));
                }
                Some(Grid::new(iv.clone(), r.clone())?)
            }
            (None, _, true) => return Err(manifest_err(format!("{} needs a resolution", kind.name()))),
            _ => None,
        };
        let t = &self.params;
        let params = match kind {
            ExperimentKind::ValidateHurst => Params::ValidateHurst(parse_params(kind, t)?),
            ExperimentKind::Covariance => Params::Covariance(parse_params(kind, t)?),
            ExperimentKind::Simulate => {
                let p: SimulateParams = parse_params(kind, t)?;
                if p.replicates == 0 {
                    return Err(manifest_err("replicates must be at least 1"));
                }
                Params::Simulate(p)
            }
            ExperimentKind::Lnd => {
                let p: LndParams = parse_params(kind, t)?;
                if p.sizes.iter().any(|&n| !(2..=50).contains(&n)) {
                    return Err(manifest_err("lnd sizes must lie in 2..=50"));
                }
                Params::Lnd(p)
            }
            ExperimentKind::Increments => Params::Increments(parse_params(kind, t)?),
            ExperimentKind::Localtime => Params::Localtime(parse_params(kind, t)?),
            ExperimentKind::Levelset => Params::Levelset(parse_params(kind, t)?),
            ExperimentKind::DimensionMap => Params::DimensionMap(parse_params(kind, t)?),
            ExperimentKind::VerifyLemmas => Params::VerifyLemmas(parse_params(kind, t)?),
        };
        Ok(ValidatedManifest {
            manifest: self.clone(),
            hurst,
            interval,
            grid,
            sampler: self.sampler.unwrap_or(SamplerConfig::Cholesky),
            params,
        })
    }
}
