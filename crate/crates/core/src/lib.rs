//! Power-series dynamics on the probability simplex of a finite group
//! algebra.
//!
//! The crate computes the dynamical invariants of a distribution `x` on a
//! finite group (return time, period, support subgroup), the accumulation
//! set of its convolution powers, and the limiting behaviour of iterated
//! probability power series `p^[n](x)` together with their Cesàro averages.
//! Every closed form has a brute-force float oracle next to it.

pub mod algebra;
pub mod error;
pub mod group;
pub mod modm;
pub mod oracle;
pub mod predictor;
pub mod profile;
pub mod rational;
pub mod records;
pub mod series;
pub mod verify;

pub use algebra::{AlgebraElement, ApproxElement, SimplexPoint};
pub use error::{Error, Result};
pub use group::{generated_subgroup, ElementSet, FiniteGroup, GroupRef};
