//! Uncertainty functionals over sensor intervals.
//!
//! A sensor measuring over an interval `dx` localizes a signal to within
//! `dx` and its frequency content to within `C / dx`. The weighted sum of
//! the two is convex in `dx` with a single equilibrium. In space-time the
//! spatial and temporal terms add, giving a separable, convex surface over
//! (T, S) with a unique minimum.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Information cell on the (location, frequency) plane with fixed area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Logon {
    delta_x: f64,
    capacity: f64,
}

impl Logon {
    pub fn new(delta_x: f64, capacity: f64) -> Result<Self> {
        require_positive("delta_x", delta_x)?;
        require_positive("capacity", capacity)?;
        Ok(Logon { delta_x, capacity })
    }

    pub fn delta_x(&self) -> f64 {
        self.delta_x
    }

    /// Frequency width, always `capacity / delta_x`.
    pub fn delta_f(&self) -> f64 {
        self.capacity / self.delta_x
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }
}

/// Weights of the one-dimensional functional `loc * dx + freq / dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights1d {
    pub loc: f64,
    pub freq: f64,
}

impl Weights1d {
    pub fn new(loc: f64, freq: f64) -> Result<Self> {
        let w = Weights1d { loc, freq };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_loc", self.loc), ("lambda_freq", self.freq)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("weights must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// The four weights of the spatiotemporal functional
/// `s_loc*S + s_freq/S + t_loc*T + t_freq/T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyWeights {
    pub s_loc: f64,
    pub s_freq: f64,
    pub t_loc: f64,
    pub t_freq: f64,
}

impl Default for UncertaintyWeights {
    fn default() -> Self {
        UncertaintyWeights::uniform(1.0)
    }
}

impl UncertaintyWeights {
    /// Weights in the conventional order (spatial loc, spatial freq,
    /// temporal loc, temporal freq).
    pub fn new(s_loc: f64, s_freq: f64, t_loc: f64, t_freq: f64) -> Result<Self> {
        let w = UncertaintyWeights {
            s_loc,
            s_freq,
            t_loc,
            t_freq,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn uniform(value: f64) -> Self {
        UncertaintyWeights {
            s_loc: value,
            s_freq: value,
            t_loc: value,
            t_freq: value,
        }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        match values {
            [a, b, c, d] => UncertaintyWeights::new(*a, *b, *c, *d),
            _ => Err(Error::invalid(
                "lambda",
                format!("expected 4 weights, got {}", values.len()),
            )),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.s_loc, self.s_freq, self.t_loc, self.t_freq]
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in self.as_array().into_iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    "lambda",
                    format!("all weights must be positive, lambda_{} = {v}", k + 1),
                ));
            }
        }
        Ok(())
    }

    pub fn spatial(&self) -> Weights1d {
        Weights1d {
            loc: self.s_loc,
            freq: self.s_freq,
        }
    }

    pub fn temporal(&self) -> Weights1d {
        Weights1d {
            loc: self.t_loc,
            freq: self.t_freq,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        UncertaintyWeights {
            s_loc: self.s_loc * k,
            s_freq: self.s_freq * k,
            t_loc: self.t_loc * k,
            t_freq: self.t_freq * k,
        }
    }
}

/// `loc * dx + freq / dx`.
pub fn joint_uncertainty_1d(delta_x: f64, weights: Weights1d) -> Result<f64> {
    require_positive("delta_x", delta_x)?;
    Ok(weights.loc * delta_x + weights.freq / delta_x)
}

/// Returns `(dx*, U(dx*)) = (sqrt(freq/loc), 2 sqrt(loc*freq))`.
pub fn equilibrium_1d(weights: Weights1d) -> (f64, f64) {
    (
        (weights.freq / weights.loc).sqrt(),
        2.0 * (weights.loc * weights.freq).sqrt(),
    )
}

pub fn spatiotemporal_uncertainty(t: f64, s: f64, w: &UncertaintyWeights) -> Result<f64> {
    require_positive("t", t)?;
    require_positive("s", s)?;
    Ok(w.s_loc * s + w.s_freq / s + w.t_loc * t + w.t_freq / t)
}

/// `a - b`, or exactly zero when the difference is at the rounding level of
/// the operands.
fn rounded_difference(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d.abs() <= 8.0 * f64::EPSILON * a.abs().max(b.abs()) {
        0.0
    } else {
        d
    }
}

/// Analytic partials `(dU/dT, dU/dS) = (l3 - l4/T^2, l1 - l2/S^2)`.
///
/// A component whose two terms agree to within a few ulps is returned as
/// exactly zero, so the closed-form minimum is a true stationary point.
pub fn uncertainty_gradient(t: f64, s: f64, w: &UncertaintyWeights) -> Result<(f64, f64)> {
    require_positive("t", t)?;
    require_positive("s", s)?;
    Ok((
        rounded_difference(w.t_loc, w.t_freq / (t * t)),
        rounded_difference(w.s_loc, w.s_freq / (s * s)),
    ))
}

/// Location and value of the unique minimum of the spatiotemporal functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalMinimum {
    pub t: f64,
    pub s: f64,
    pub u: f64,
}

pub fn global_minimum(w: &UncertaintyWeights) -> GlobalMinimum {
    let (t, ut) = equilibrium_1d(w.temporal());
    let (s, us) = equilibrium_1d(w.spatial());
    GlobalMinimum { t, s, u: us + ut }
}

pub fn evaluate_field(grid: &GridSpec, w: &UncertaintyWeights) -> Result<ScalarField> {
    w.validate()?;
    ScalarField::from_fn(*grid, "uncertainty", |t, s| spatiotemporal_uncertainty(t, s, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w4(a: f64, b: f64, c: f64, d: f64) -> UncertaintyWeights {
        UncertaintyWeights::new(a, b, c, d).unwrap()
    }

    /// Dense log-grid search over [lo, hi] for the minimum of a 1D function.
    fn grid_argmin_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
        let mut best = (lo, f64::INFINITY);
        for k in 0..n {
            let x = lo * (hi / lo).powf(k as f64 / (n - 1) as f64);
            let v = f(x);
            if v < best.1 {
                best = (x, v);
            }
        }
        best
    }

    #[test]
    fn joint_1d_examples() {
        let unit = Weights1d::new(1.0, 1.0).unwrap();
        assert_eq!(joint_uncertainty_1d(1.0, unit).unwrap(), 2.0);
        assert_eq!(joint_uncertainty_1d(2.0, unit).unwrap(), 2.5);
        let w = Weights1d::new(4.0, 1.0).unwrap();
        let v = joint_uncertainty_1d(0.5, w).unwrap();
        assert_eq!(v, 4.0);
        let (_, oracle) = grid_argmin_1d(|x| 4.0 * x + 1.0 / x, 0.01, 100.0, 100_000);
        assert!((v - oracle).abs() < 1e-6);
    }

    #[test]
    fn joint_1d_rejects_non_positive() {
        let unit = Weights1d::new(1.0, 1.0).unwrap();
        assert!(matches!(joint_uncertainty_1d(0.0, unit), Err(Error::Domain { .. })));
        assert!(joint_uncertainty_1d(-1.0, unit).is_err());
    }

    #[test]
    fn equilibrium_examples_match_grid_search() {
        assert_eq!(equilibrium_1d(Weights1d::new(1.0, 1.0).unwrap()), (1.0, 2.0));
        for (loc, freq, x_star, u_star) in [(4.0, 1.0, 0.5, 4.0), (1.0, 9.0, 3.0, 6.0)] {
            let (x, u) = equilibrium_1d(Weights1d::new(loc, freq).unwrap());
            assert!((x - x_star).abs() < 1e-15 && (u - u_star).abs() < 1e-15);
            let (gx, gu) = grid_argmin_1d(|d| loc * d + freq / d, 0.01, 100.0, 100_000);
            assert!((gx / x - 1.0).abs() < 1e-4, "grid argmin {gx} vs {x}");
            assert!((gu - u).abs() < 1e-6);
        }
    }

    #[test]
    fn spatiotemporal_examples() {
        let unit = UncertaintyWeights::uniform(1.0);
        assert_eq!(spatiotemporal_uncertainty(1.0, 1.0, &unit).unwrap(), 4.0);
        assert_eq!(spatiotemporal_uncertainty(2.0, 0.5, &unit).unwrap(), 5.0);
        assert_eq!(
            spatiotemporal_uncertainty(3.0, 2.0, &w4(1.0, 4.0, 1.0, 9.0)).unwrap(),
            10.0
        );
        assert!(spatiotemporal_uncertainty(0.0, 1.0, &unit).is_err());
        assert!(spatiotemporal_uncertainty(1.0, -2.0, &unit).is_err());
    }

    #[test]
    fn gradient_examples() {
        let unit = UncertaintyWeights::uniform(1.0);
        assert_eq!(uncertainty_gradient(1.0, 1.0, &unit).unwrap(), (0.0, 0.0));
        assert_eq!(uncertainty_gradient(2.0, 2.0, &unit).unwrap(), (0.75, 0.75));
        let w = w4(1.0, 1.0, 2.0, 2.0);
        let (gt, gs) = uncertainty_gradient(0.5, 1.0, &w).unwrap();
        let h = 1e-6;
        let fd = (spatiotemporal_uncertainty(0.5 + h, 1.0, &w).unwrap()
            - spatiotemporal_uncertainty(0.5 - h, 1.0, &w).unwrap())
            / (2.0 * h);
        assert!((fd - -6.0).abs() < 1e-6);
        assert_eq!((gt, gs), (-6.0, 0.0));
    }

    #[test]
    fn global_minimum_examples() {
        let m = global_minimum(&UncertaintyWeights::uniform(1.0));
        assert_eq!((m.t, m.s, m.u), (1.0, 1.0, 4.0));
        for (w, want) in [
            (w4(1.0, 4.0, 1.0, 9.0), (3.0, 2.0, 10.0)),
            // U(1, 1) = 2 + 2 + 0.5 + 0.5
            (w4(2.0, 2.0, 0.5, 0.5), (1.0, 1.0, 5.0)),
        ] {
            let m = global_minimum(&w);
            assert!((m.t - want.0).abs() < 1e-14);
            assert!((m.s - want.1).abs() < 1e-14);
            assert!((m.u - want.2).abs() < 1e-14);
            assert_eq!(uncertainty_gradient(m.t, m.s, &w).unwrap(), (0.0, 0.0));
            // separable oracle: search each axis independently on a fine grid
            let (gt, _) = grid_argmin_1d(|t| w.t_loc * t + w.t_freq / t, 0.01, 100.0, 100_000);
            let (gs, _) = grid_argmin_1d(|s| w.s_loc * s + w.s_freq / s, 0.01, 100.0, 100_000);
            assert!((gt / m.t - 1.0).abs() < 1e-4 && (gs / m.s - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn field_examples() {
        let unit = UncertaintyWeights::uniform(1.0);
        let f = evaluate_field(&GridSpec::square(1.0, 2.0, 2), &unit).unwrap();
        assert_eq!(f.values, vec![4.0, 4.5, 4.5, 5.0]);

        let g = GridSpec::square(0.1, 10.0, 64);
        let f = evaluate_field(&g, &unit).unwrap();
        assert!(f.min() >= 4.0);
        let (i, j) = f.argmin();
        // the argmin sample must be one of the two samples bracketing 1 on each axis
        let (dt, ds) = g.log_steps();
        assert!(f.grid.t(i).ln().abs() <= dt && f.grid.s(j).ln().abs() <= ds);
    }

    #[test]
    fn logon_reports_reciprocal_frequency_width() {
        let l = Logon::new(0.25, 2.0).unwrap();
        assert_eq!(l.delta_f(), 8.0);
        assert_eq!(l.delta_x() * l.delta_f(), l.capacity());
        assert!(Logon::new(0.0, 1.0).is_err());
        assert!(Logon::new(1.0, -1.0).is_err());
    }

    #[test]
    fn weights_reject_non_positive() {
        assert!(UncertaintyWeights::new(1.0, 1.0, -1.0, 1.0).is_err());
        assert!(UncertaintyWeights::from_slice(&[1.0, 2.0]).is_err());
    }
}
