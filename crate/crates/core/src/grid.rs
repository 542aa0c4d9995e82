use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-spaced sampling of the (T, S) plane.
///
/// Sample `i` on an axis is `min * (max/min)^(i/(n-1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub n_t: usize,
    pub n_s: usize,
}

impl Default for GridSpec {
    /// 128 x 128 over [0.01, 100]^2.
    fn default() -> Self {
        GridSpec::square(0.01, 100.0, 128)
    }
}

fn log_sample(min: f64, max: f64, n: usize, i: usize) -> f64 {
    if i == 0 {
        min
    } else if i + 1 == n {
        max
    } else {
        min * (max / min).powf(i as f64 / (n - 1) as f64)
    }
}

impl GridSpec {
    pub fn new(t_min: f64, t_max: f64, s_min: f64, s_max: f64, n_t: usize, n_s: usize) -> Result<Self> {
        let g = GridSpec {
            t_min,
            t_max,
            s_min,
            s_max,
            n_t,
            n_s,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn square(min: f64, max: f64, n: usize) -> Self {
        GridSpec {
            t_min: min,
            t_max: max,
            s_min: min,
            s_max: max,
            n_t: n,
            n_s: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_axis = |lo: f64, hi: f64| lo > 0.0 && hi.is_finite() && lo < hi;
        if !ok_axis(self.t_min, self.t_max) {
            return Err(Error::invalid(
                "grid.t",
                format!("need 0 < t_min < t_max, got [{}, {}]", self.t_min, self.t_max),
            ));
        }
        if !ok_axis(self.s_min, self.s_max) {
            return Err(Error::invalid(
                "grid.s",
                format!("need 0 < s_min < s_max, got [{}, {}]", self.s_min, self.s_max),
            ));
        }
        if self.n_t < 2 || self.n_s < 2 {
            return Err(Error::invalid(
                "grid.n",
                format!("need at least 2 samples per axis, got {}x{}", self.n_t, self.n_s),
            ));
        }
        Ok(())
    }

    pub fn t(&self, i: usize) -> f64 {
        log_sample(self.t_min, self.t_max, self.n_t, i)
    }

    pub fn s(&self, j: usize) -> f64 {
        log_sample(self.s_min, self.s_max, self.n_s, j)
    }

    pub fn t_axis(&self) -> Vec<f64> {
        (0..self.n_t).map(|i| self.t(i)).collect()
    }

    pub fn s_axis(&self) -> Vec<f64> {
        (0..self.n_s).map(|j| self.s(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.n_t * self.n_s
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Log-space step between neighbouring samples, (along T, along S).
    pub fn log_steps(&self) -> (f64, f64) {
        (
            (self.t_max / self.t_min).ln() / (self.n_t - 1) as f64,
            (self.s_max / self.s_min).ln() / (self.n_s - 1) as f64,
        )
    }

    /// Histogram bin of a point: the axis ranges are split into `n` equal
    /// log-width bins, each right-open except the last, which includes the
    /// top edge. Returns `None` outside the ranges.
    pub fn bin_of(&self, t: f64, s: f64) -> Option<(usize, usize)> {
        let bin = |x: f64, lo: f64, hi: f64, n: usize| -> Option<usize> {
            if !(x >= lo && x <= hi) {
                return None;
            }
            if x == hi {
                return Some(n - 1);
            }
            let k = ((x / lo).ln() / (hi / lo).ln() * n as f64).floor() as usize;
            Some(k.min(n - 1))
        };
        Some((
            bin(t, self.t_min, self.t_max, self.n_t)?,
            bin(s, self.s_min, self.s_max, self.n_s)?,
        ))
    }
}

/// Values of a scalar quantity sampled on a [`GridSpec`], stored row-major
/// with T as the slow index: `values[i * n_s + j]` is the value at `(t_i, s_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub label: String,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.n_t,
                grid.n_s
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "field.values",
                format!("non-finite value at cell ({}, {})", k / grid.n_s, k % grid.n_s),
            ));
        }
        Ok(ScalarField {
            grid,
            values,
            label: label.into(),
        })
    }

    /// Builds a field by evaluating `f(t, s)` at every sample. Rows are
    /// computed in parallel; each cell depends only on its own coordinates.
    pub fn from_fn<F>(grid: GridSpec, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<f64> + Sync,
    {
        use rayon::prelude::*;
        grid.validate()?;
        let s_axis = grid.s_axis();
        let rows: Result<Vec<Vec<f64>>> = (0..grid.n_t)
            .into_par_iter()
            .map(|i| {
                let t = grid.t(i);
                s_axis.iter().map(|&s| f(t, s)).collect()
            })
            .collect();
        let values = rows?.concat();
        ScalarField::new(grid, values, label)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_s + j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// First cell (lowest flat index) attaining the minimum.
    pub fn argmin(&self) -> (usize, usize) {
        let k = first_extreme(&self.values, |a, b| a < b);
        (k / self.grid.n_s, k % self.grid.n_s)
    }

    /// First cell (lowest flat index) attaining the maximum.
    pub fn argmax(&self) -> (usize, usize) {
        let k = first_extreme(&self.values, |a, b| a > b);
        (k / self.grid.n_s, k % self.grid.n_s)
    }

    /// Coordinates `(t, s)` of cell `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.grid.t(i), self.grid.s(j))
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "'{}' and '{}' are sampled on different grids",
                self.label, other.label
            )));
        }
        Ok(())
    }
}

fn first_extreme(values: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if better(v, values[best]) {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_is_log_spaced_and_hits_endpoints() {
        let g = GridSpec::square(0.01, 100.0, 5);
        let axis = g.t_axis();
        assert_eq!(axis[0], 0.01);
        assert_eq!(axis[4], 100.0);
        for (k, want) in [0.1, 1.0, 10.0].iter().enumerate() {
            assert!((axis[k + 1] - want).abs() < 1e-12 * want);
        }
        assert!(axis.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(0.0, 1.0, 1.0, 2.0, 4, 4).is_err());
        assert!(GridSpec::new(2.0, 1.0, 1.0, 2.0, 4, 4).is_err());
        assert!(GridSpec::new(1.0, 2.0, 1.0, 2.0, 1, 4).is_err());
    }

    #[test]
    fn bins_are_right_open_with_inclusive_top() {
        let g = GridSpec::square(1.0, 100.0, 2);
        assert_eq!(g.bin_of(1.0, 1.0), Some((0, 0)));
        assert_eq!(g.bin_of(10.0, 9.999), Some((1, 0)));
        assert_eq!(g.bin_of(100.0, 100.0), Some((1, 1)));
        assert_eq!(g.bin_of(100.0001, 5.0), None);
        assert_eq!(g.bin_of(0.5, 5.0), None);
    }

    #[test]
    fn field_rejects_wrong_shape_and_nan() {
        let g = GridSpec::square(1.0, 2.0, 2);
        assert!(ScalarField::new(g, vec![1.0; 3], "x").is_err());
        assert!(ScalarField::new(g, vec![1.0, 2.0, f64::NAN, 3.0], "x").is_err());
    }
}
