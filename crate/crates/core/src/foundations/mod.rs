//! Numerical groundwork for the additive uncertainty model and for
//! emulating one sampling function with shifted replicas of another.

pub mod entropy;
pub mod expansion;

pub use entropy::{
    discrete_entropy, independence_bound, independence_sweep, max_entropy_check, random_joint, random_product_joint,
    worst_case_uncertainty, DiscreteJoint, IndependenceReport, IndependenceSweep, MaxEntropyReport, ZERO_SLACK,
};
pub use expansion::{
    cosine_expansion, emulate_sampler, kernel_spectrum, EmulationWindow, Expansion, SamplerKernel, Target, NODE_SWEEP,
    RANGE_SWEEP, RANGE_SWEEP_DENSITY, SPECTRUM_HOLE,
};

/// Composite Simpson rule with `n` (rounded up to even) intervals.
pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * k as f64);
    }
    acc * h / 3.0
}
