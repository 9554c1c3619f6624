//! Per-subcommand settings. Each struct is both a clap argument group and
//! the schema of the JSON config file, so the two merge key by key.

use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, ValueEnum};
use cloudlap::spectral::EpsRule;
use cloudlap::{DensityModel, KernelKind, ManifoldKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Serde through `Display` / `FromStr`, so config files use the flag syntax.
mod as_str {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverArg {
    Lanczos,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FunctionArg {
    Linear,
    Quadratic,
    Ridge,
    Angle,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SampleConfig {
    #[arg(long, default_value = "circle")]
    #[serde(with = "as_str")]
    pub manifold: ManifoldKind,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub density: DensityModel,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct GraphConfig {
    #[arg(long, default_value = "circle")]
    #[serde(with = "as_str")]
    pub manifold: ManifoldKind,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub density: DensityModel,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub kernel: KernelKind,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.3)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct EigsConfig {
    #[arg(long, default_value = "sphere2")]
    #[serde(with = "as_str")]
    pub manifold: ManifoldKind,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub density: DensityModel,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub kernel: KernelKind,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.35)]
    pub eps: f64,
    /// Number of eigenpairs.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "lanczos")]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct RegularityConfig {
    #[arg(long, default_value = "sphere2")]
    #[serde(with = "as_str")]
    pub manifold: ManifoldKind,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub density: DensityModel,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub kernel: KernelKind,
    /// Comma-separated sample sizes.
    #[arg(long = "n", value_delimiter = ',', default_value = "1000,2000,4000")]
    pub n_list: Vec<usize>,
    /// `fixed:<eps>` or `regime:<c>`.
    #[arg(long, default_value = "regime:1.5")]
    #[serde(with = "as_str")]
    pub eps_rule: EpsRule,
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    /// Eigenvectors with eigenvalue below this enter the statistics.
    #[arg(long, default_value_t = 0.16)]
    pub cap: f64,
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Accepted distance of the fitted slopes from zero.
    #[arg(long, default_value_t = 0.2)]
    pub slope_band: f64,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ConvergeConfig {
    #[arg(long, default_value = "circle")]
    #[serde(with = "as_str")]
    pub manifold: ManifoldKind,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub density: DensityModel,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub kernel: KernelKind,
    #[arg(long = "n", value_delimiter = ',', default_value = "1000,2000,4000,8000")]
    pub n_list: Vec<usize>,
    #[arg(long, default_value = "regime:1.5")]
    #[serde(with = "as_str")]
    pub eps_rule: EpsRule,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Eigen index whose slopes decide the exit status.
    #[arg(long, default_value_t = 1)]
    pub check_index: usize,
    #[arg(long, default_value_t = 0.7)]
    pub slope_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub slope_max: f64,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct NonlocalConfig {
    #[arg(long, default_value = "sphere2")]
    #[serde(with = "as_str")]
    pub manifold: ManifoldKind,
    #[arg(long, default_value = "tilted")]
    #[serde(with = "as_str")]
    pub density: DensityModel,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub kernel: KernelKind,
    #[arg(long, value_enum, default_value = "quadratic")]
    pub function: FunctionArg,
    /// Angles of the evaluation point.
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.3")]
    pub x: Vec<f64>,
    #[arg(long = "eps", value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
    pub eps_list: Vec<f64>,
    /// Minimum accepted residual slope.
    #[arg(long, default_value_t = 2.7)]
    pub slope_min: f64,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct CoupleConfig {
    #[arg(long, default_value = "circle")]
    #[serde(with = "as_str")]
    pub manifold: ManifoldKind,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub density: DensityModel,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub kernel: KernelKind,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[arg(long, default_value_t = 0.1)]
    pub d0: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Angles of the base point x0.
    #[arg(long, value_delimiter = ',', default_value = "0,0")]
    pub x0: Vec<f64>,
    /// Step cap per trial; defaults to 50 times the expected-time bound.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Extra eps values for the E[tau] scaling fit (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub tau_eps: Vec<f64>,
    /// Accepted distance of the E[tau] slope from -2.
    #[arg(long, default_value_t = 0.3)]
    pub tau_slope_band: f64,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    #[arg(long, default_value = "circle")]
    #[serde(with = "as_str")]
    pub manifold: ManifoldKind,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub density: DensityModel,
    #[arg(long, default_value = "uniform")]
    #[serde(with = "as_str")]
    pub kernel: KernelKind,
    #[arg(long = "n", value_delimiter = ',', default_value = "1000,10000,100000")]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    /// Relative annulus width.
    #[arg(long, default_value_t = 0.2)]
    pub t: f64,
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Target decay slope of the degree statistic.
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub slope_target: f64,
    #[arg(long, default_value_t = 0.15)]
    pub slope_band: f64,
    #[arg(long)]
    pub skip_double_convolution: bool,
}

/// Loads a config file as a JSON object.
pub fn load_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Usage("config file must hold a JSON object".into())),
        Err(e) => Err(CliError::Usage(format!("bad config {}: {e}", path.display()))),
    }
}

/// Fills every setting not given on the command line from the file.
/// Unknown keys are rejected.
pub fn merge<T: Serialize + DeserializeOwned>(
    flags: T,
    matches: &ArgMatches,
    file: &Map<String, Value>,
) -> Result<T, CliError> {
    let mut value = serde_json::to_value(&flags).map_err(|e| CliError::Usage(e.to_string()))?;
    let obj = value.as_object_mut().expect("settings serialize to an object");
    for (key, v) in file {
        if !obj.contains_key(key) {
            return Err(CliError::Usage(format!("unknown config key '{key}'")));
        }
        if matches.value_source(key) != Some(ValueSource::CommandLine) {
            obj.insert(key.clone(), v.clone());
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("bad config value: {e}")))
}
