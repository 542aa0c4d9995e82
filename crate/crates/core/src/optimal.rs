//! Optimal sets for speed measurement.
//!
//! A sensor tuned to speed `v` is optimal when the uncertainty gradient
//! `g = (dU/dT, dU/dS)` is orthogonal to the speed direction `(1, v)`:
//! `dU/dS * v + dU/dT = 0`. With `v = S/T` at every point this traces the
//! *local* optimal set; with every sensor seeing the expected speed `v_e`
//! it traces the *integral* optimal set. A blend exponent `gamma` in [0, 1]
//! interpolates between the two in log-speed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::uncertainty::{uncertainty_gradient, UncertaintyWeights};

/// Distribution of stimulus speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpeedPrior {
    Delta {
        v0: f64,
    },
    /// Speed whose logarithm is normal with mean `mu` and deviation `sigma_log`.
    LogNormal {
        mu: f64,
        sigma_log: f64,
    },
    /// Weighted speed bins `(center, weight)`; weights need not be normalized.
    Histogram {
        bins: Vec<(f64, f64)>,
    },
}

/// Number of log-spaced nodes used to integrate continuous priors.
pub const PRIOR_QUADRATURE_NODES: usize = 4096;

impl SpeedPrior {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpeedPrior::Delta { v0 } => {
                require_positive("prior.v0", *v0)?;
            }
            SpeedPrior::LogNormal { mu, sigma_log } => {
                if !mu.is_finite() {
                    return Err(Error::invalid("prior.mu", "must be finite"));
                }
                require_positive("prior.sigma_log", *sigma_log)?;
            }
            SpeedPrior::Histogram { bins } => {
                if bins.is_empty() {
                    return Err(Error::invalid("prior.bins", "histogram has no bins"));
                }
                for &(v, w) in bins {
                    require_positive("prior.bins.center", v)?;
                    if !(w >= 0.0 && w.is_finite()) {
                        return Err(Error::invalid(
                            "prior.bins.weight",
                            format!("weights must be non-negative, got {w}"),
                        ));
                    }
                }
                if bins.iter().map(|b| b.1).sum::<f64>() <= 0.0 {
                    return Err(Error::invalid("prior.bins.weight", "all weights are zero"));
                }
            }
        }
        Ok(())
    }

    /// Histogram bins with weights normalized to unit sum.
    pub fn normalized_bins(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            SpeedPrior::Histogram { bins } => {
                let total: f64 = bins.iter().map(|b| b.1).sum();
                Some(bins.iter().map(|&(v, w)| (v, w / total)).collect())
            }
            _ => None,
        }
    }
}

/// Mean speed `v_e = integral p(v) v dv`.
///
/// Log-normal priors are integrated with the trapezoid rule over
/// `mu +- 8 sigma_log` in log-speed.
pub fn expected_speed(prior: &SpeedPrior) -> Result<f64> {
    prior.validate()?;
    let v = match prior {
        SpeedPrior::Delta { v0 } => *v0,
        SpeedPrior::Histogram { .. } => prior
            .normalized_bins()
            .unwrap_or_default()
            .iter()
            .map(|(v, w)| v * w)
            .sum(),
        SpeedPrior::LogNormal { mu, sigma_log } => {
            let n = PRIOR_QUADRATURE_NODES;
            let lo = mu - 8.0 * sigma_log;
            let h = 16.0 * sigma_log / (n - 1) as f64;
            let norm = 1.0 / (sigma_log * (2.0 * std::f64::consts::PI).sqrt());
            let integrand = |y: f64| {
                let z = (y - mu) / sigma_log;
                norm * (-0.5 * z * z).exp() * y.exp()
            };
            let mut acc = 0.5 * (integrand(lo) + integrand(lo + h * (n - 1) as f64));
            for k in 1..n - 1 {
                acc += integrand(lo + h * k as f64);
            }
            acc * h
        }
    };
    Ok(v)
}

/// Normalized scalar product of the uncertainty gradient with the speed
/// direction: `(gS*v + gT) / (|gS*v| + |gT| + 1e-30)`.
///
/// Zero on the optimal set for speed `v`; the sign tells the side.
pub fn orthogonality_residual(t: f64, s: f64, v: f64, w: &UncertaintyWeights) -> Result<f64> {
    require_positive("v", v)?;
    let (gt, gs) = uncertainty_gradient(t, s, w)?;
    Ok((gs * v + gt) / ((gs * v).abs() + gt.abs() + 1e-30))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    LocalOptimal,
    IntegralOptimal,
    BlendOptimal,
    EquivalenceContour,
    MaxSensitivity,
}

/// Descriptive metadata carried alongside a curve's points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<UncertaintyWeights>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Requested samples for which the defining equation had no solution.
    pub omitted: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_max: Option<f64>,
    pub closed: bool,
    /// Set when the curve is empty or degenerate for a known reason.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

/// Ordered list of (T, S) points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub kind: CurveKind,
    pub points: Vec<(f64, f64)>,
    pub meta: CurveMeta,
}

impl Curve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n` log-spaced samples on `[lo, hi]`.
pub fn log_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k + 1 == n {
                    hi
                } else {
                    lo * (hi / lo).powf(k as f64 / (n - 1) as f64)
                }
            })
            .collect(),
    }
}

fn check_samples(t_samples: &[f64]) -> Result<()> {
    for &t in t_samples {
        require_positive("t_samples", t)?;
    }
    if t_samples.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::invalid("t_samples", "must be strictly increasing"));
    }
    Ok(())
}

fn temporal_term(t: f64, w: &UncertaintyWeights) -> f64 {
    // same rounding convention as the gradient
    let (gt, _) = uncertainty_gradient(t, 1.0, w).expect("t validated");
    gt
}

/// S on the local optimal set at interval T: the positive root of
/// `l1*S^2 + b*S - l2 = 0` with `b = l3*T - l4/T`.
pub fn local_optimal_s(t: f64, w: &UncertaintyWeights) -> f64 {
    let b = t * temporal_term(t, w);
    let disc = (b * b + 4.0 * w.s_loc * w.s_freq).sqrt();
    if b >= 0.0 {
        2.0 * w.s_freq / (b + disc)
    } else {
        (disc - b) / (2.0 * w.s_loc)
    }
}

fn max_abs_residual(points: &[(f64, f64)], speed: impl Fn(f64, f64) -> f64, w: &UncertaintyWeights) -> f64 {
    points
        .iter()
        .map(|&(t, s)| {
            orthogonality_residual(t, s, speed(t, s), w)
                .map(f64::abs)
                .unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
}

pub fn local_optimal_set(w: &UncertaintyWeights, t_samples: &[f64]) -> Result<Curve> {
    w.validate()?;
    check_samples(t_samples)?;
    let points: Vec<(f64, f64)> = t_samples.par_iter().map(|&t| (t, local_optimal_s(t, w))).collect();
    let residual_max = max_abs_residual(&points, |t, s| s / t, w);
    Ok(Curve {
        kind: CurveKind::LocalOptimal,
        points,
        meta: CurveMeta {
            weights: Some(*w),
            residual_max: Some(residual_max),
            ..Default::default()
        },
    })
}

/// Asymptotes of the integral optimal set: `(T_min, S_inf)`.
///
/// The set exists only for `T > T_min = sqrt(l4 / (v_e l1 + l3))` and
/// levels off at `S_inf = sqrt(v_e l2 / (v_e l1 + l3))` as T grows.
pub fn asymptotes(w: &UncertaintyWeights, v_e: f64) -> Result<(f64, f64)> {
    require_positive("v_e", v_e)?;
    let denom = v_e * w.s_loc + w.t_loc;
    Ok(((w.t_freq / denom).sqrt(), (v_e * w.s_freq / denom).sqrt()))
}

/// S on the integral optimal set at interval T, or `None` for `T <= T_min`.
pub fn integral_optimal_s(t: f64, v_e: f64, w: &UncertaintyWeights) -> Option<f64> {
    let denom = v_e * w.s_loc + temporal_term(t, w);
    (denom > 0.0).then(|| (v_e * w.s_freq / denom).sqrt())
}

pub fn integral_optimal_set(w: &UncertaintyWeights, v_e: f64, t_samples: &[f64]) -> Result<Curve> {
    w.validate()?;
    require_positive("v_e", v_e)?;
    check_samples(t_samples)?;
    let solved: Vec<Option<(f64, f64)>> = t_samples
        .par_iter()
        .map(|&t| integral_optimal_s(t, v_e, w).map(|s| (t, s)))
        .collect();
    let omitted = solved.iter().filter(|p| p.is_none()).count();
    let points: Vec<(f64, f64)> = solved.into_iter().flatten().collect();
    let residual_max = max_abs_residual(&points, |_, _| v_e, w);
    Ok(Curve {
        kind: CurveKind::IntegralOptimal,
        points,
        meta: CurveMeta {
            weights: Some(*w),
            v_e: Some(v_e),
            residual_max: Some(residual_max),
            omitted,
            ..Default::default()
        },
    })
}

/// `v_e*l2/S^2 + l4/T^2`, constant (= `v_e*l1 + l3`) along the integral set.
pub fn integral_invariant(t: f64, s: f64, v_e: f64, w: &UncertaintyWeights) -> f64 {
    v_e * w.s_freq / (s * s) + w.t_freq / (t * t)
}

/// Speed seen by a sensor under partial integration:
/// `(S/T)^(1-gamma) * v_e^gamma`.
pub fn blended_speed(t: f64, s: f64, v_e: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        s / t
    } else if gamma == 1.0 {
        v_e
    } else {
        ((1.0 - gamma) * (s / t).ln() + gamma * v_e.ln()).exp()
    }
}

/// Root of an increasing function on `(0, inf)`, found by bisection in
/// log-space. The bracket `[lo, hi]` is widened by factors of 10 until the
/// sign changes.
pub fn bisect_increasing<F>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut widen = 0;
    while f(lo) > 0.0 {
        lo /= 10.0;
        widen += 1;
        if widen > 300 || lo == 0.0 {
            return Err(Error::NoRoot("function positive down to 0".into()));
        }
    }
    widen = 0;
    while f(hi) < 0.0 {
        hi *= 10.0;
        widen += 1;
        if widen > 300 || !hi.is_finite() {
            return Err(Error::NoRoot("function negative up to infinity".into()));
        }
    }
    for _ in 0..400 {
        if hi / lo - 1.0 <= rel_tol {
            break;
        }
        let mid = (lo * hi).sqrt();
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// S on the partially integrated optimal set, solved by bisection. The
/// defining equation is increasing in S for every gamma in [0, 1].
pub fn blend_optimal_s(t: f64, v_e: f64, gamma: f64, w: &UncertaintyWeights) -> Option<f64> {
    let gt = temporal_term(t, w);
    let f = |s: f64| (w.s_loc - w.s_freq / (s * s)) * blended_speed(t, s, v_e, gamma) + gt;
    let s0 = (w.s_freq / w.s_loc).sqrt();
    bisect_increasing(f, s0 * 1e-3, s0 * 1e3, 4.0 * f64::EPSILON).ok()
}

pub fn blend_optimal_set(w: &UncertaintyWeights, v_e: f64, gamma: f64, t_samples: &[f64]) -> Result<Curve> {
    w.validate()?;
    require_positive("v_e", v_e)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("must lie in [0, 1], got {gamma}")));
    }
    check_samples(t_samples)?;
    let solved: Vec<Option<(f64, f64)>> = t_samples
        .par_iter()
        .map(|&t| blend_optimal_s(t, v_e, gamma, w).map(|s| (t, s)))
        .collect();
    let omitted = solved.iter().filter(|p| p.is_none()).count();
    let points: Vec<(f64, f64)> = solved.into_iter().flatten().collect();
    let residual_max = max_abs_residual(&points, |t, s| blended_speed(t, s, v_e, gamma), w);
    Ok(Curve {
        kind: CurveKind::BlendOptimal,
        points,
        meta: CurveMeta {
            weights: Some(*w),
            v_e: Some(v_e),
            gamma: Some(gamma),
            residual_max: Some(residual_max),
            omitted,
            ..Default::default()
        },
    })
}
