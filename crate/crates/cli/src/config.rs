//! The run configuration shared by every subcommand.
//!
//! A `RunConfig` is loaded from an optional JSON file, then overridden by
//! command-line flags, then resolved (derived defaults filled in) before any
//! computation starts. The resolved config is what manifests echo.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sensoralloc::sensitivity::SensitivityModel;
use sensoralloc::tuning::{Bounds, SimulationConfig};
use sensoralloc::uncertainty::global_minimum;
use sensoralloc::{GridSpec, SpeedPrior, UncertaintyWeights};

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SENSORALLOC_OUT";
pub const DEFAULT_OUT_DIR: &str = "sensoralloc-out";

/// Contour levels used when none are configured, as multiples of `u_min`.
pub const DEFAULT_LEVEL_FACTORS: [f64; 6] = [1.1, 1.25, 1.5, 2.0, 3.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OptimalMode {
    Local,
    Integral,
    Blend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimalParams {
    pub mode: OptimalMode,
    /// Expected stimulus speed for the integral and blended sets.
    pub v_e: f64,
    /// Blend exponent: 0 is the local set, 1 the integral set.
    pub gamma: f64,
    /// Log-spaced T samples across the grid's T range.
    pub t_samples: usize,
}

impl Default for OptimalParams {
    fn default() -> Self {
        OptimalParams {
            mode: OptimalMode::Local,
            v_e: 1.0,
            gamma: 0.5,
            t_samples: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationParams {
    pub n_sensors: usize,
    pub epochs: usize,
    pub gain: f64,
    pub bounds: Bounds,
    pub density_bins: usize,
    pub checkpoint_interval: usize,
    /// Stimulus environment shaping the drift; `None` uses the bare
    /// measurement uncertainty.
    pub environment: Option<SpeedPrior>,
}

impl Default for SimulationParams {
    fn default() -> Self {
        let d = SimulationConfig::default();
        SimulationParams {
            n_sensors: d.n_sensors,
            epochs: d.epochs,
            gain: d.gain,
            bounds: d.bounds,
            density_bins: d.density_bins,
            checkpoint_interval: d.checkpoint_interval,
            environment: d.prior,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionParams {
    /// Frequency of the cosine target of `expand`.
    pub omega0: f64,
    /// Width of the Gaussian base sampler.
    pub base_width: f64,
    pub n_points: usize,
    pub half_range: f64,
    /// Sup error of `expand` is measured on `[-eval_half_width, eval_half_width]`.
    pub eval_half_width: f64,
    /// Width of the Gaussian sampler emulated by `emulate`.
    pub target_width: f64,
    pub n_harmonics: usize,
    pub emulation_half_range: f64,
    pub series_half_width: f64,
    pub emulation_eval_half_width: f64,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        ExpansionParams {
            omega0: 1.0,
            base_width: 1.0,
            n_points: 512,
            half_range: 8.0,
            eval_half_width: 3.0,
            target_width: 0.5,
            n_harmonics: 10,
            emulation_half_range: 12.0,
            series_half_width: 6.0,
            emulation_eval_half_width: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyParams {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub n_sigmas: usize,
    pub n_joints: usize,
    /// Joints are `joint_size x joint_size` tables.
    pub joint_size: usize,
}

impl Default for EntropyParams {
    fn default() -> Self {
        EntropyParams {
            sigma_min: 0.1,
            sigma_max: 10.0,
            n_sigmas: 20,
            n_joints: 1000,
            joint_size: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputParams {
    /// Resolved from `--out`, the config file, `SENSORALLOC_OUT`, then
    /// `sensoralloc-out`, in that order.
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputParams {
    fn default() -> Self {
        OutputParams {
            dir: None,
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub weights: UncertaintyWeights,
    pub grid: GridSpec,
    /// Prior for `sensitivity` and `maxset`.
    pub prior: SpeedPrior,
    /// Priors compared by `adapt` (change map is `100 * a / b`).
    pub prior_a: SpeedPrior,
    pub prior_b: SpeedPrior,
    pub model: SensitivityModel,
    /// Absolute contour levels; `None` resolves to multiples of `u_min`.
    pub levels: Option<Vec<f64>>,
    pub optimal: OptimalParams,
    pub simulation: SimulationParams,
    pub expansion: ExpansionParams,
    pub entropy: EntropyParams,
    pub output: OutputParams,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            weights: UncertaintyWeights::default(),
            grid: GridSpec::default(),
            prior: SpeedPrior::Delta { v0: 1.0 },
            prior_a: SpeedPrior::Delta { v0: 2.0 },
            prior_b: SpeedPrior::Delta { v0: 0.5 },
            model: SensitivityModel::default(),
            levels: None,
            optimal: OptimalParams::default(),
            simulation: SimulationParams::default(),
            expansion: ExpansionParams::default(),
            entropy: EntropyParams::default(),
            output: OutputParams::default(),
            seed: 1,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(field, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config("config", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Fills derived defaults: contour levels and the output directory.
    pub fn resolve(&mut self, env_out: Option<PathBuf>) {
        if self.levels.is_none() {
            let u_min = global_minimum(&self.weights).u;
            self.levels = Some(DEFAULT_LEVEL_FACTORS.iter().map(|k| k * u_min).collect());
        }
        if self.output.dir.is_none() {
            self.output.dir = Some(env_out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)));
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.weights.validate()?;
        self.grid.validate()?;
        for (name, p) in [
            ("prior", &self.prior),
            ("prior_a", &self.prior_a),
            ("prior_b", &self.prior_b),
        ] {
            p.validate().map_err(|e| CliError::config(name, e.to_string()))?;
        }
        self.model.validate()?;
        if let Some(levels) = &self.levels {
            for &l in levels {
                positive("levels", l)?;
            }
        }
        positive("optimal.v_e", self.optimal.v_e)?;
        if !(0.0..=1.0).contains(&self.optimal.gamma) {
            return Err(CliError::config(
                "optimal.gamma",
                format!("must lie in [0, 1], got {}", self.optimal.gamma),
            ));
        }
        if self.optimal.t_samples < 2 {
            return Err(CliError::config("optimal.t_samples", "need at least 2 samples"));
        }
        self.simulation_config().validate()?;
        let x = &self.expansion;
        for (name, v) in [
            ("expansion.omega0", x.omega0),
            ("expansion.base_width", x.base_width),
            ("expansion.half_range", x.half_range),
            ("expansion.eval_half_width", x.eval_half_width),
            ("expansion.target_width", x.target_width),
            ("expansion.emulation_half_range", x.emulation_half_range),
            ("expansion.series_half_width", x.series_half_width),
            ("expansion.emulation_eval_half_width", x.emulation_eval_half_width),
        ] {
            positive(name, v)?;
        }
        if x.n_points == 0 {
            return Err(CliError::config("expansion.n_points", "need at least one node"));
        }
        let h = &self.entropy;
        positive("entropy.sigma_min", h.sigma_min)?;
        if !(h.sigma_max >= h.sigma_min && h.sigma_max.is_finite()) {
            return Err(CliError::config("entropy.sigma_max", "must be finite and >= sigma_min"));
        }
        if h.n_sigmas < 2 {
            return Err(CliError::config("entropy.n_sigmas", "need at least 2 samples"));
        }
        if h.joint_size < 2 {
            return Err(CliError::config("entropy.joint_size", "need at least 2 cells per axis"));
        }
        if self.output.formats.is_empty() {
            return Err(CliError::config("output.formats", "select at least one format"));
        }
        Ok(())
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        let p = &self.simulation;
        SimulationConfig {
            n_sensors: p.n_sensors,
            weights: self.weights,
            bounds: p.bounds,
            gain: p.gain,
            epochs: p.epochs,
            seed: self.seed,
            prior: p.environment.clone(),
            model: self.model,
            density_bins: p.density_bins,
            checkpoint_interval: p.checkpoint_interval,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

/// Parses a prior from `delta:V`, `lognormal:MU,SIGMA`,
/// `hist:V=W,V=W,...`, or a JSON object.
pub fn parse_prior(text: &str) -> Result<SpeedPrior, String> {
    let text = text.trim();
    if text.starts_with('{') {
        return serde_json::from_str(text).map_err(|e| e.to_string());
    }
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| format!("expected KIND:PARAMS, got `{text}`"))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    let prior = match kind.trim().to_ascii_lowercase().as_str() {
        "delta" => SpeedPrior::Delta { v0: num(rest)? },
        "lognormal" => {
            let (mu, sigma) = rest
                .split_once(',')
                .ok_or_else(|| "lognormal takes MU,SIGMA".to_string())?;
            SpeedPrior::LogNormal {
                mu: num(mu)?,
                sigma_log: num(sigma)?,
            }
        }
        "hist" | "histogram" => {
            let bins = rest
                .split(',')
                .map(|pair| {
                    let (v, w) = pair
                        .split_once('=')
                        .ok_or_else(|| format!("histogram bin `{pair}` is not V=W"))?;
                    Ok((num(v)?, num(w)?))
                })
                .collect::<Result<Vec<_>, String>>()?;
            SpeedPrior::Histogram { bins }
        }
        other => return Err(format!("unknown prior kind `{other}` (delta, lognormal, hist)")),
    };
    prior.validate().map_err(|e| e.to_string())?;
    Ok(prior)
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}
