//! Entropy bounds behind the sum-of-variances worst case. Entropies are in nats.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::simpson;
use crate::error::{require_positive, Error, Result};

const SUM_TOL: f64 = 1e-12;

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::invalid(name, "empty distribution"));
    }
    if let Some(v) = p.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid(name, format!("negative or non-finite entry {v}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::invalid(name, format!("entries sum to {total}, not 1")));
    }
    Ok(())
}

/// `-sum p ln p`, with `0 ln 0 = 0`.
pub fn discrete_entropy(p: &[f64]) -> Result<f64> {
    check_distribution(p, "p")?;
    Ok(entropy_unchecked(p))
}

fn entropy_unchecked(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Joint distribution over an `n x m` grid of (x, f) cells, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteJoint {
    n: usize,
    m: usize,
    p: Vec<f64>,
}

impl DiscreteJoint {
    pub fn new(n: usize, m: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != n * m || n == 0 || m == 0 {
            return Err(Error::invalid(
                "joint",
                format!("{} entries for a {n}x{m} table", p.len()),
            ));
        }
        check_distribution(&p, "joint")?;
        Ok(DiscreteJoint { n, m, p })
    }

    /// Outer product of two marginals.
    pub fn product(px: &[f64], pf: &[f64]) -> Result<Self> {
        check_distribution(px, "p_x")?;
        check_distribution(pf, "p_f")?;
        let p = px.iter().flat_map(|a| pf.iter().map(move |b| a * b)).collect();
        DiscreteJoint::new(px.len(), pf.len(), p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.m + j]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.m).map(|j| self.get(i, j)).sum()).collect()
    }

    pub fn marginal_f(&self) -> Vec<f64> {
        (0..self.m).map(|j| (0..self.n).map(|i| self.get(i, j)).sum()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub h_joint: f64,
    pub h_x: f64,
    pub h_f: f64,
    /// `h_x + h_f - h_joint`, non-negative up to rounding.
    pub slack: f64,
    /// Joint equals the product of its marginals within 1e-10 per cell.
    pub independent: bool,
}

/// Compares the joint entropy with the sum of the marginal entropies.
pub fn independence_bound(joint: &DiscreteJoint) -> IndependenceReport {
    let px = joint.marginal_x();
    let pf = joint.marginal_f();
    let h_joint = entropy_unchecked(&joint.p);
    let h_x = entropy_unchecked(&px);
    let h_f = entropy_unchecked(&pf);
    let independent = (0..joint.n).all(|i| (0..joint.m).all(|j| (joint.get(i, j) - px[i] * pf[j]).abs() <= 1e-10));
    IndependenceReport {
        h_joint,
        h_x,
        h_f,
        slack: h_x + h_f - h_joint,
        independent,
    }
}

fn simplex_draw(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

fn joint_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Joint drawn uniformly from the probability simplex (normalized unit
/// exponentials). Draw `index` under `seed` is reproducible on its own.
pub fn random_joint(n: usize, m: usize, seed: u64, index: u64) -> Result<DiscreteJoint> {
    let p = simplex_draw(&mut joint_rng(seed, index), n * m);
    DiscreteJoint::new(n, m, p)
}

/// Product of two independently drawn simplex marginals.
pub fn random_product_joint(n: usize, m: usize, seed: u64, index: u64) -> Result<DiscreteJoint> {
    let mut rng = joint_rng(seed, index);
    let px = simplex_draw(&mut rng, n);
    let pf = simplex_draw(&mut rng, m);
    DiscreteJoint::product(&px, &pf)
}

/// Aggregate of [`independence_bound`] over seeded random joints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceSweep {
    pub count: usize,
    pub min_slack: f64,
    /// Dependent joints whose slack is below `ZERO_SLACK`.
    pub dependent_at_zero: usize,
    /// Largest `|slack|` over the matching product joints.
    pub product_max_slack: f64,
}

/// Slack magnitude treated as an exact zero.
pub const ZERO_SLACK: f64 = 1e-12;

/// Checks `count` random `n x m` joints and as many random product joints.
pub fn independence_sweep(count: usize, n: usize, m: usize, seed: u64) -> Result<IndependenceSweep> {
    let mut out = IndependenceSweep {
        count,
        min_slack: f64::INFINITY,
        dependent_at_zero: 0,
        product_max_slack: 0.0,
    };
    for k in 0..count as u64 {
        let r = independence_bound(&random_joint(n, m, seed, 2 * k)?);
        out.min_slack = out.min_slack.min(r.slack);
        if r.slack.abs() < ZERO_SLACK && !r.independent {
            out.dependent_at_zero += 1;
        }
        let q = independence_bound(&random_product_joint(n, m, seed, 2 * k + 1)?);
        out.product_max_slack = out.product_max_slack.max(q.slack.abs());
    }
    Ok(out)
}

/// Worst-case uncertainty `sigma_x^2 + sigma_f^2` of the minimax argument.
pub fn worst_case_uncertainty(sigma_x: f64, sigma_f: f64) -> Result<f64> {
    for (name, v) in [("sigma_x", sigma_x), ("sigma_f", sigma_f)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("must be non-negative, got {v}")));
        }
    }
    Ok(sigma_x * sigma_x + sigma_f * sigma_f)
}

/// Differential entropies of three densities sharing variance `sigma^2`,
/// each by closed form and by quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxEntropyReport {
    pub sigma: f64,
    pub gaussian: f64,
    pub uniform: f64,
    pub laplace: f64,
    pub gaussian_quadrature: f64,
    pub uniform_quadrature: f64,
    pub laplace_quadrature: f64,
}

impl MaxEntropyReport {
    pub fn gaussian_is_largest(&self) -> bool {
        self.gaussian > self.uniform && self.gaussian > self.laplace
    }

    pub fn max_quadrature_error(&self) -> f64 {
        [
            self.gaussian - self.gaussian_quadrature,
            self.uniform - self.uniform_quadrature,
            self.laplace - self.laplace_quadrature,
        ]
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
    }
}

const QUAD_INTERVALS: usize = 20_000;

fn neg_p_ln_p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

pub fn max_entropy_check(sigma: f64) -> Result<MaxEntropyReport> {
    require_positive("sigma", sigma)?;
    let var = sigma * sigma;
    let two_pi = std::f64::consts::TAU;

    let gaussian = 0.5 * (two_pi * std::f64::consts::E * var).ln();
    let uniform = 0.5 * (12.0 * var).ln();
    // Laplace with scale b = sigma / sqrt 2: 1 + ln(2b)
    let b = sigma / 2f64.sqrt();
    let laplace = 1.0 + (2.0 * b).ln();

    let norm = 1.0 / (sigma * two_pi.sqrt());
    let gaussian_quadrature = simpson(
        |x| neg_p_ln_p(norm * (-0.5 * x * x / var).exp()),
        -14.0 * sigma,
        14.0 * sigma,
        QUAD_INTERVALS,
    );
    let half_width = 3f64.sqrt() * sigma;
    let height = 1.0 / (2.0 * half_width);
    let uniform_quadrature = simpson(|_| neg_p_ln_p(height), -half_width, half_width, QUAD_INTERVALS);
    // symmetric: integrate one side of the cusp and double
    let laplace_quadrature = 2.0
        * simpson(
            |x| neg_p_ln_p((-x / b).exp() / (2.0 * b)),
            0.0,
            50.0 * b,
            QUAD_INTERVALS,
        );

    Ok(MaxEntropyReport {
        sigma,
        gaussian,
        uniform,
        laplace,
        gaussian_quadrature,
        uniform_quadrature,
        laplace_quadrature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert!((discrete_entropy(&[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(discrete_entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert!((discrete_entropy(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(discrete_entropy(&[0.5, 0.6]).is_err());
        assert!(discrete_entropy(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn independence_examples() {
        let coins = DiscreteJoint::product(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        let r = independence_bound(&coins);
        assert!(r.independent && r.slack.abs() < 1e-15);

        let corr = DiscreteJoint::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let r = independence_bound(&corr);
        let ln2 = 2f64.ln();
        assert!(!r.independent);
        assert!((r.h_joint - ln2).abs() < 1e-15);
        assert!((r.h_x + r.h_f - 2.0 * ln2).abs() < 1e-15);
        assert!((r.slack - ln2).abs() < 1e-15);

        assert!(DiscreteJoint::new(2, 2, vec![0.5, 0.5, 0.5, -0.5]).is_err());
        assert!(DiscreteJoint::new(2, 3, vec![0.25; 4]).is_err());
    }

    #[test]
    fn random_joints_are_reproducible_distributions() {
        let a = random_joint(3, 4, 7, 11).unwrap();
        assert_eq!(a, random_joint(3, 4, 7, 11).unwrap());
        assert_ne!(a, random_joint(3, 4, 7, 12).unwrap());
        assert!((a.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(independence_bound(&random_product_joint(3, 4, 7, 1).unwrap()).independent);
    }

    #[test]
    fn sweep_slack_is_positive_off_products() {
        let s = independence_sweep(200, 4, 4, 3).unwrap();
        assert!(s.min_slack > ZERO_SLACK, "{s:?}");
        assert_eq!(s.dependent_at_zero, 0);
        assert!(s.product_max_slack < ZERO_SLACK);
    }

    #[test]
    fn worst_case_examples() {
        assert_eq!(worst_case_uncertainty(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(worst_case_uncertainty(2.0, 3.0).unwrap(), 13.0);
        assert_eq!(worst_case_uncertainty(1.0, 1.0).unwrap(), 2.0);
        assert!(worst_case_uncertainty(-1.0, 1.0).is_err());
    }

    #[test]
    fn max_entropy_unit_sigma() {
        let r = max_entropy_check(1.0).unwrap();
        assert!((r.gaussian - 1.418939).abs() < 1e-6);
        assert!((r.uniform - 1.242453).abs() < 1e-6);
        assert!(r.gaussian_is_largest());
        assert!(r.max_quadrature_error() < 1e-6, "{r:?}");
    }

    #[test]
    fn entropies_shift_by_log_sigma() {
        let a = max_entropy_check(1.0).unwrap();
        let b = max_entropy_check(7.5).unwrap();
        let shift = 7.5f64.ln();
        assert!((b.gaussian - a.gaussian - shift).abs() < 1e-12);
        assert!((b.uniform - a.uniform - shift).abs() < 1e-12);
        assert!((b.laplace - a.laplace - shift).abs() < 1e-12);
        assert!(max_entropy_check(0.0).is_err());
    }
}
