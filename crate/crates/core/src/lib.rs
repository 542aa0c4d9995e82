//! Normative allocation of motion sensors under Gabor's uncertainty relation.
//!
//! The crate is organised around the spatiotemporal uncertainty functional
//! `U(T, S) = l1*S + l2/S + l3*T + l4/T` over sensor intervals (T, S):
//!
//! - [`uncertainty`]: the 1D and spatiotemporal functionals, gradients and minima.
//! - [`grid`]: log-spaced sampling of the (T, S) plane and scalar fields.
//! - [`optimal`]: speed priors and the local / integral / blended optimal sets.
//! - [`contour`]: marching-squares level-set extraction.
//! - [`sensitivity`]: preference, regime labels, sensitivity and adaptation maps.
//! - [`tuning`]: stochastic self-organisation of an uncoupled sensor population.
//! - [`foundations`]: entropy bounds and replica expansions of sampling kernels.
//! - [`io`]: CSV / JSON / SVG serialization shared by the command-line tool.

pub mod contour;
pub mod error;
pub mod foundations;
pub mod grid;
pub mod io;
pub mod optimal;
pub mod sensitivity;
pub mod tuning;
pub mod uncertainty;

pub use error::{Error, Result};
pub use grid::{GridSpec, ScalarField};
pub use optimal::{Curve, CurveKind, SpeedPrior};
pub use uncertainty::{Logon, UncertaintyWeights, Weights1d};
