//! Preference, regime and sensitivity predictions derived from uncertainty.
//!
//! The stimulus environment enters through a log-speed affinity
//! `M(S/T) in (0, 1]`: a Gaussian of bandwidth `beta` in log-speed around
//! each prior speed, mixed by the prior. Sensors tuned to rare speeds pay a
//! penalty `gain * u_min * (1 - M)` on top of their measurement
//! uncertainty, and sensitivity is the reciprocal of this environmental
//! uncertainty, normalized to unit total (a fixed pool of resources).

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::optimal::{Curve, CurveKind, CurveMeta, SpeedPrior};
use crate::uncertainty::{global_minimum, spatiotemporal_uncertainty, uncertainty_gradient, UncertaintyWeights};

/// `u_min / u` over the field; the maximum is exactly 1.
pub fn preference_field(u_field: &ScalarField) -> Result<ScalarField> {
    if let Some(k) = u_field.values.iter().position(|&u| u <= 0.0) {
        let n_s = u_field.grid.n_s;
        let (i, j) = (k / n_s, k % n_s);
        let (t, s) = u_field.point(i, j);
        return Err(Error::ZeroDenominator { i, j, t, s });
    }
    let u_min = u_field.min();
    let values = u_field.values.iter().map(|&u| u_min / u).collect();
    ScalarField::new(u_field.grid, values, "preference")
}

/// Shape of an equivalence contour through a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeLabel {
    /// Contour slope positive: T and S must change together.
    Coupling,
    /// Contour slope negative: T and S trade off.
    Tradeoff,
    StationaryT,
    StationaryS,
    Minimum,
}

/// Labels a point by the slope `dS/dT = -gT/gS` of the level set through it.
pub fn regime_classify(t: f64, s: f64, w: &UncertaintyWeights) -> Result<RegimeLabel> {
    let (gt, gs) = uncertainty_gradient(t, s, w)?;
    Ok(match (gt == 0.0, gs == 0.0) {
        (true, true) => RegimeLabel::Minimum,
        (true, false) => RegimeLabel::StationaryT,
        (false, true) => RegimeLabel::StationaryS,
        (false, false) => {
            if -gt / gs > 0.0 {
                RegimeLabel::Coupling
            } else {
                RegimeLabel::Tradeoff
            }
        }
    })
}

/// Regime label at every grid sample, encoded as in [`RegimeLabel::code`].
pub fn regime_field(grid: &GridSpec, w: &UncertaintyWeights) -> Result<ScalarField> {
    ScalarField::from_fn(*grid, "regime", |t, s| regime_classify(t, s, w).map(|r| r.code()))
}

impl RegimeLabel {
    /// Numeric code used in CSV output: tradeoff -1, coupling +1, others 0.
    pub fn code(self) -> f64 {
        match self {
            RegimeLabel::Tradeoff => -1.0,
            RegimeLabel::Coupling => 1.0,
            _ => 0.0,
        }
    }
}

/// Parameters of the environmental weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityModel {
    /// Bandwidth of the Gaussian affinity in natural-log speed units.
    pub beta: f64,
    /// Penalty for untuned speeds, in units of the minimum uncertainty.
    pub penalty_gain: f64,
}

impl Default for SensitivityModel {
    fn default() -> Self {
        SensitivityModel {
            beta: 0.5,
            penalty_gain: 1.0,
        }
    }
}

impl SensitivityModel {
    pub fn validate(&self) -> Result<()> {
        require_positive("beta", self.beta)?;
        if !(self.penalty_gain >= 0.0 && self.penalty_gain.is_finite()) {
            return Err(Error::invalid(
                "penalty_gain",
                format!("must be non-negative, got {}", self.penalty_gain),
            ));
        }
        Ok(())
    }
}

/// Prior-weighted affinity of speed `ratio = S/T`, in (0, 1].
pub fn speed_affinity(prior: &SpeedPrior, ratio: f64, beta: f64) -> f64 {
    let x = ratio.ln();
    let gauss = |center: f64, var: f64| (-(x - center).powi(2) / (2.0 * var)).exp();
    let b2 = beta * beta;
    match prior {
        SpeedPrior::Delta { v0 } => gauss(v0.ln(), b2),
        SpeedPrior::Histogram { .. } => prior
            .normalized_bins()
            .unwrap_or_default()
            .iter()
            .map(|&(v, w)| w * gauss(v.ln(), b2))
            .sum(),
        // Gaussian kernel convolved with a Gaussian log-speed density
        SpeedPrior::LogNormal { mu, sigma_log } => {
            let var = b2 + sigma_log * sigma_log;
            (b2 / var).sqrt() * gauss(*mu, var)
        }
    }
}

/// Measurement uncertainty plus the environmental penalty for sensors tuned
/// away from the prevalent speeds.
pub fn environment_uncertainty(
    t: f64,
    s: f64,
    w: &UncertaintyWeights,
    prior: &SpeedPrior,
    model: &SensitivityModel,
) -> Result<f64> {
    let u = spatiotemporal_uncertainty(t, s, w)?;
    let u_min = global_minimum(w).u;
    Ok(u + model.penalty_gain * u_min * (1.0 - speed_affinity(prior, s / t, model.beta)))
}

/// Sensitivity map for one stimulus environment, normalized to unit sum.
pub fn sensitivity_map(
    prior: &SpeedPrior,
    grid: &GridSpec,
    w: &UncertaintyWeights,
    model: &SensitivityModel,
) -> Result<ScalarField> {
    prior.validate()?;
    w.validate()?;
    model.validate()?;
    let raw = ScalarField::from_fn(*grid, "sensitivity", |t, s| {
        environment_uncertainty(t, s, w, prior, model).map(|u| 1.0 / u)
    })?;
    let total = raw.sum();
    let values = raw.values.iter().map(|v| v / total).collect();
    ScalarField::new(*grid, values, "sensitivity")
}

/// Everything needed to predict sensitivity change between two environments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationConfig {
    pub prior_a: SpeedPrior,
    pub prior_b: SpeedPrior,
    #[serde(default)]
    pub model: SensitivityModel,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub weights: UncertaintyWeights,
}

/// `100 * a / b` for the sensitivity maps of environments a and b.
pub fn adaptation_change_map(config: &AdaptationConfig) -> Result<ScalarField> {
    let a = sensitivity_map(&config.prior_a, &config.grid, &config.weights, &config.model)?;
    let b = if config.prior_a == config.prior_b {
        a.clone()
    } else {
        sensitivity_map(&config.prior_b, &config.grid, &config.weights, &config.model)?
    };
    change_ratio(&a, &b)
}

/// Cell-wise `100 * a / b`.
pub fn change_ratio(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    a.check_same_grid(b)?;
    let n_s = a.grid.n_s;
    let mut values = Vec::with_capacity(a.values.len());
    for (k, (&va, &vb)) in a.values.iter().zip(&b.values).enumerate() {
        if vb == 0.0 {
            let (i, j) = (k / n_s, k % n_s);
            let (t, s) = a.point(i, j);
            return Err(Error::ZeroDenominator { i, j, t, s });
        }
        values.push(100.0 * (va / vb));
    }
    ScalarField::new(a.grid, values, "percent")
}

/// For every T column, the S of maximal sensitivity (ties go to smaller S).
pub fn max_sensitivity_set(
    prior: &SpeedPrior,
    grid: &GridSpec,
    w: &UncertaintyWeights,
    model: &SensitivityModel,
) -> Result<Curve> {
    let map = sensitivity_map(prior, grid, w, model)?;
    let points = (0..grid.n_t)
        .map(|i| {
            let mut best = 0;
            for j in 1..grid.n_s {
                if map.get(i, j) > map.get(i, best) {
                    best = j;
                }
            }
            map.point(i, best)
        })
        .collect();
    Ok(Curve {
        kind: CurveKind::MaxSensitivity,
        points,
        meta: CurveMeta {
            weights: Some(*w),
            ..Default::default()
        },
    })
}
