//! Emulating sampling functions with weighted, shifted replicas of a base kernel.
//!
//! If the base kernel `psi` has spectrum `a(w) + i b(w)` without zeros, then
//! for any `w0 > 0`
//!
//! ```text
//! cos(w0 u) = (a cos x - b sin x) / (w0 (a^2 + b^2)) integrated against psi(u + x/w0) dx
//! ```
//!
//! with `a, b` taken at `w0`. Discretizing `x` by the midpoint rule on
//! `[-H, H]` gives `cos(w0 u) ~ sum_j c_j psi(u + d_j)` with `d_j = x_j / w0`.
//! A target expressed as a cosine/sine series is then emulated term by term.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::simpson;
use crate::error::{require_positive, Error, Result};

/// `|psi_hat|^2` below this is treated as a hole in the spectrum.
pub const SPECTRUM_HOLE: f64 = 1e-12;

/// Node counts of the convergence sweep (half range 8).
pub const NODE_SWEEP: [usize; 6] = [64, 128, 256, 512, 1024, 2048];
/// Half ranges of the range sweep, at [`RANGE_SWEEP_DENSITY`] nodes per unit.
pub const RANGE_SWEEP: [f64; 6] = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0];
pub const RANGE_SWEEP_DENSITY: f64 = 32.0;

/// Sampling function on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKernel {
    /// `exp(-s^2 / (2 width^2))`, peak value 1.
    Gaussian { width: f64 },
    /// Samples `values[k]` at `start + k * step`, linearly interpolated,
    /// zero outside the tabulated range.
    Tabulated { start: f64, step: f64, values: Vec<f64> },
}

impl SamplerKernel {
    pub fn gaussian(width: f64) -> Result<Self> {
        require_positive("width", width)?;
        Ok(SamplerKernel::Gaussian { width })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerKernel::Gaussian { width } => {
                require_positive("width", *width)?;
            }
            SamplerKernel::Tabulated { start, step, values } => {
                require_positive("step", *step)?;
                if !start.is_finite() || values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("kernel", "tabulation needs >= 2 finite samples"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            SamplerKernel::Gaussian { width } => (-0.5 * (s / width).powi(2)).exp(),
            SamplerKernel::Tabulated { start, step, values } => {
                let pos = (s - start) / step;
                if pos < 0.0 || pos > (values.len() - 1) as f64 {
                    return 0.0;
                }
                let k = (pos.floor() as usize).min(values.len() - 2);
                let frac = pos - k as f64;
                values[k] + frac * (values[k + 1] - values[k])
            }
        }
    }

    /// Uniform quadrature nodes covering the kernel's support: the
    /// tabulation itself, or a Gaussian sampled at width/64 out to 14 widths.
    fn nodes(&self) -> (f64, f64, Vec<f64>) {
        match self {
            SamplerKernel::Gaussian { width } => {
                let h = width / 64.0;
                let n = 64 * 14;
                let values = (-n..=n).map(|k| self.eval(k as f64 * h)).collect();
                (-(n as f64) * h, h, values)
            }
            SamplerKernel::Tabulated { start, step, values } => (*start, *step, values.clone()),
        }
    }
}

/// Real and imaginary parts of `integral psi(s) exp(-i w s) ds`, by the
/// trapezoid rule on the kernel's nodes.
pub fn kernel_spectrum(kernel: &SamplerKernel, omega: f64) -> Result<(f64, f64)> {
    kernel.validate()?;
    let (start, h, values) = kernel.nodes();
    let last = values.len() - 1;
    let (mut a, mut b) = (0.0, 0.0);
    for (k, v) in values.iter().enumerate() {
        let w = if k == 0 || k == last { 0.5 } else { 1.0 };
        let s = start + h * k as f64;
        let (sin, cos) = (omega * s).sin_cos();
        a += w * v * cos;
        b -= w * v * sin;
    }
    let (a, b) = (a * h, b * h);
    let magnitude_sq = a * a + b * b;
    if magnitude_sq < SPECTRUM_HOLE {
        return Err(Error::SpectrumHole { omega, magnitude_sq });
    }
    Ok((a, b))
}

/// What an [`Expansion`] approximates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// `cos(omega0 * u + phase)`.
    Cosine {
        omega0: f64,
        phase: f64,
    },
    Kernel {
        kernel: SamplerKernel,
    },
}

impl Target {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Target::Cosine { omega0, phase } => (omega0 * u + phase).cos(),
            Target::Kernel { kernel } => kernel.eval(u),
        }
    }
}

/// `sum_j coefficients[j] * base(u + shifts[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub coefficients: Vec<f64>,
    pub shifts: Vec<f64>,
    pub base: SamplerKernel,
    pub target: Target,
}

impl Expansion {
    pub fn eval(&self, u: f64) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.shifts)
            .map(|(c, d)| c * self.base.eval(u + d))
            .sum()
    }

    /// Largest `|target - reconstruction|` over `n` evenly spaced points of `[lo, hi]`.
    pub fn sup_error(&self, lo: f64, hi: f64, n: usize) -> f64 {
        (0..n)
            .map(|k| {
                let u = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                (self.target.eval(u) - self.eval(u)).abs()
            })
            .fold(0.0, f64::max)
    }

    fn append(&mut self, other: Expansion, scale: f64) {
        self.coefficients.extend(other.coefficients.iter().map(|c| c * scale));
        self.shifts.extend(other.shifts);
    }
}

fn phased_cosine(
    omega0: f64,
    phase: f64,
    kernel: &SamplerKernel,
    n_points: usize,
    half_range: f64,
) -> Result<Expansion> {
    require_positive("omega0", omega0)?;
    require_positive("half_range", half_range)?;
    if n_points < 2 {
        return Err(Error::invalid(
            "n_points",
            format!("need at least 2 nodes, got {n_points}"),
        ));
    }
    let (a, b) = kernel_spectrum(kernel, omega0)?;
    let norm = a * a + b * b;
    let delta = 2.0 * half_range / n_points as f64;
    let (coefficients, shifts) = (0..n_points)
        .map(|j| {
            let x = -half_range + (j as f64 + 0.5) * delta;
            let c = delta / omega0 * (a * x.cos() - b * x.sin()) / norm;
            (c, (x + phase) / omega0)
        })
        .unzip();
    Ok(Expansion {
        coefficients,
        shifts,
        base: kernel.clone(),
        target: Target::Cosine { omega0, phase },
    })
}

/// Replica expansion of `cos(omega0 * u)` over `kernel`, with `n_points`
/// midpoint nodes on `x in [-half_range, half_range]` (shifts `x / omega0`).
pub fn cosine_expansion(omega0: f64, kernel: &SamplerKernel, n_points: usize, half_range: f64) -> Result<Expansion> {
    phased_cosine(omega0, 0.0, kernel, n_points, half_range)
}

/// Geometry of a sampler emulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmulationWindow {
    /// The target is expanded in a Fourier series of period `2 * series_half_width`.
    pub series_half_width: f64,
    /// Sup error is measured on `[-eval_half_width, eval_half_width]`.
    pub eval_half_width: f64,
}

impl Default for EmulationWindow {
    fn default() -> Self {
        EmulationWindow {
            series_half_width: 6.0,
            eval_half_width: 2.0,
        }
    }
}

/// Emulates `target` with replicas of `base`.
///
/// The target is expanded on the series window into a constant plus
/// `n_harmonics` cosine/sine pairs at `w_k = k pi / W`; each harmonic is then
/// replaced by its replica expansion. `half_range` is the largest shift (in
/// sample units) used for every harmonic, so harmonic `k` integrates over
/// `x in [-half_range * w_k, half_range * w_k]`. When target and base are the
/// same kernel the expansion is the single unshifted replica.
pub fn emulate_sampler(
    target: &SamplerKernel,
    base: &SamplerKernel,
    n_harmonics: usize,
    n_points: usize,
    half_range: f64,
    window: EmulationWindow,
) -> Result<(Expansion, f64)> {
    target.validate()?;
    base.validate()?;
    require_positive("half_range", half_range)?;
    require_positive("series_half_width", window.series_half_width)?;
    require_positive("eval_half_width", window.eval_half_width)?;
    let eval_n = 2001;
    let e = window.eval_half_width;
    let mut expansion = Expansion {
        coefficients: Vec::new(),
        shifts: Vec::new(),
        base: base.clone(),
        target: Target::Kernel { kernel: target.clone() },
    };
    if target == base {
        expansion.coefficients.push(1.0);
        expansion.shifts.push(0.0);
        let err = expansion.sup_error(-e, e, eval_n);
        return Ok((expansion, err));
    }
    if n_points < 2 {
        return Err(Error::invalid(
            "n_points",
            format!("need at least 2 nodes, got {n_points}"),
        ));
    }

    let w = window.series_half_width;
    let quad = |f: &dyn Fn(f64) -> f64| simpson(f, -w, w, 8192);
    let scale = quad(&|u| target.eval(u).abs()).max(f64::MIN_POSITIVE);

    // constant term: 1 = (1 / psi_hat(0)) * integral psi(u + s) ds
    let a0 = quad(&|u| target.eval(u)) / (2.0 * w);
    if a0 != 0.0 {
        let (psi0, _) = kernel_spectrum(base, 0.0)?;
        let h = 2.0 * half_range / n_points as f64;
        for j in 0..n_points {
            expansion.coefficients.push(a0 * h / psi0);
            expansion.shifts.push(-half_range + (j as f64 + 0.5) * h);
        }
    }

    for k in 1..=n_harmonics {
        let omega = k as f64 * PI / w;
        let ak = quad(&|u| target.eval(u) * (omega * u).cos()) / w;
        let bk = quad(&|u| target.eval(u) * (omega * u).sin()) / w;
        if ak.abs() > 1e-14 * scale {
            expansion.append(phased_cosine(omega, 0.0, base, n_points, half_range * omega)?, ak);
        }
        // sin(w u) = cos(w u - pi/2)
        if bk.abs() > 1e-14 * scale {
            expansion.append(phased_cosine(omega, -PI / 2.0, base, n_points, half_range * omega)?, bk);
        }
    }
    let err = expansion.sup_error(-e, e, eval_n);
    Ok((expansion, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_gaussian_spectrum(width: f64, omega: f64) -> f64 {
        (2.0 * PI).sqrt() * width * (-0.5 * (width * omega).powi(2)).exp()
    }

    #[test]
    fn gaussian_spectrum_examples() {
        let g = SamplerKernel::gaussian(1.0).unwrap();
        let (a, b) = kernel_spectrum(&g, 0.0).unwrap();
        assert!((a - 2.506628).abs() < 1e-6 && b == 0.0);
        let (a, b) = kernel_spectrum(&g, 1.0).unwrap();
        assert!((a - 1.520347).abs() < 1e-6 && b.abs() < 1e-15);
    }

    #[test]
    fn gaussian_spectrum_matches_closed_form() {
        for width in [0.5, 1.0] {
            let g = SamplerKernel::gaussian(width).unwrap();
            for k in 0..=40 {
                let omega = 0.1 * k as f64;
                let (a, b) = kernel_spectrum(&g, omega).unwrap();
                let want = closed_gaussian_spectrum(width, omega);
                assert!((a / want - 1.0).abs() < 1e-8, "width {width} omega {omega}");
                assert!(b.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn even_tabulated_kernel_has_real_spectrum() {
        let values: Vec<f64> = (-20..=20).map(|k| 1.0 / (1.0 + (k as f64 * 0.1).powi(2))).collect();
        let tri = SamplerKernel::Tabulated {
            start: -2.0,
            step: 0.1,
            values,
        };
        for omega in [0.0, 0.7, 2.0] {
            let (_, b) = kernel_spectrum(&tri, omega).unwrap();
            assert!(b.abs() < 1e-14);
        }
    }

    #[test]
    fn spectrum_hole_is_reported() {
        let g = SamplerKernel::gaussian(1.0).unwrap();
        match kernel_spectrum(&g, 8.0) {
            Err(Error::SpectrumHole { omega, .. }) => assert_eq!(omega, 8.0),
            other => panic!("{other:?}"),
        }
        assert!(cosine_expansion(8.0, &g, 512, 8.0).is_err());
    }

    #[test]
    fn tabulated_kernel_interpolates_linearly() {
        let k = SamplerKernel::Tabulated {
            start: 0.0,
            step: 1.0,
            values: vec![0.0, 2.0, 0.0],
        };
        assert_eq!(k.eval(0.5), 1.0);
        assert_eq!(k.eval(1.0), 2.0);
        assert_eq!(k.eval(-0.1), 0.0);
        assert_eq!(k.eval(2.5), 0.0);
    }

    #[test]
    fn identity_emulation_is_exact() {
        let g = SamplerKernel::gaussian(1.0).unwrap();
        let (e, err) = emulate_sampler(&g, &g, 1, 512, 8.0, EmulationWindow::default()).unwrap();
        assert_eq!(e.coefficients, vec![1.0]);
        assert!(err < 1e-6);
    }

    #[test]
    fn cosine_reconstruction_fixture() {
        let g = SamplerKernel::gaussian(1.0).unwrap();
        let e = cosine_expansion(1.0, &g, 512, 8.0).unwrap();
        assert_eq!(e.coefficients.len(), 512);
        let err = e.sup_error(-3.0, 3.0, 2001);
        // frozen: 1.5105e-7 on [-3, 3]
        assert!(err < 2e-7, "{err:e}");
        assert!(err > 1e-7, "{err:e}");
    }

    #[test]
    fn residual_does_not_grow_with_more_nodes_or_range() {
        let g = SamplerKernel::gaussian(1.0).unwrap();
        let by_n: Vec<f64> = NODE_SWEEP
            .iter()
            .map(|&n| cosine_expansion(1.0, &g, n, 8.0).unwrap().sup_error(-3.0, 3.0, 2001))
            .collect();
        assert!(by_n.windows(2).all(|w| w[1] <= w[0]), "{by_n:?}");
        // fixed node spacing 1/16
        let by_range: Vec<f64> = RANGE_SWEEP
            .iter()
            .map(|&h| {
                cosine_expansion(1.0, &g, (h * RANGE_SWEEP_DENSITY) as usize, h)
                    .unwrap()
                    .sup_error(-3.0, 3.0, 2001)
            })
            .collect();
        assert!(by_range.windows(2).all(|w| w[1] <= w[0]), "{by_range:?}");
    }

    #[test]
    fn narrow_sampler_from_wide_replicas() {
        let wide = SamplerKernel::gaussian(1.0).unwrap();
        let narrow = SamplerKernel::gaussian(0.5).unwrap();
        let errors: Vec<f64> = (0..=10)
            .map(|k| {
                emulate_sampler(&narrow, &wide, k, 512, 12.0, EmulationWindow::default())
                    .unwrap()
                    .1
            })
            .collect();
        assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
        // frozen: 5.838e-3 with 10 harmonics
        assert!(errors[10] < 6e-3, "{:e}", errors[10]);
        // the 11th harmonic (w = 5.76) falls in the spectrum hole of the wide kernel
        match emulate_sampler(&narrow, &wide, 11, 512, 12.0, EmulationWindow::default()) {
            Err(Error::SpectrumHole { omega, .. }) => assert!((omega - 11.0 * PI / 6.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn odd_targets_use_the_sine_branch() {
        let base = SamplerKernel::gaussian(1.0).unwrap();
        // asymmetric tabulated bump
        let values: Vec<f64> = (0..=60)
            .map(|k| {
                let s = -3.0 + 0.1 * k as f64;
                (-(s - 0.4f64).powi(2)).exp()
            })
            .collect();
        let target = SamplerKernel::Tabulated {
            start: -3.0,
            step: 0.1,
            values,
        };
        let (_, err0) = emulate_sampler(&target, &base, 2, 512, 12.0, EmulationWindow::default()).unwrap();
        let (_, err) = emulate_sampler(&target, &base, 8, 512, 12.0, EmulationWindow::default()).unwrap();
        assert!(err < err0 && err < 0.02, "{err0:e} -> {err:e}");
    }
}
