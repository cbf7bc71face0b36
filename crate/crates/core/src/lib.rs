//! Numerics for the fast escaping set of transcendental entire functions.
//!
//! The crate is organised bottom-up:
//!
//! - [`extmag`]: level-index magnitudes for values such as `M^n(R)`;
//! - [`entire`]: the built-in function families and log-polar evaluation;
//! - [`maxmod`]: `log M(e^t)`, its iterates and inverse, and `R_f`;
//! - [`fastesc`]: orbits, `A_R` membership and the escape-rate function `R_A`;
//! - [`field`]: grid fields, fundamental holes, loops and the Julia proxy;
//! - [`blaschke`]: finite Blaschke products and the contraction bound;
//! - [`verify`]: the named check suites and their JSON report.
//!
//! Grid and sampling work runs through [`par`], which uses rayon when the
//! `parallel` feature is on and a plain loop otherwise. Results are identical
//! either way.


#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod blaschke;
pub mod entire;
pub mod error;
pub mod extmag;
pub mod fastesc;
pub mod field;
pub mod maxmod;
pub mod par;
pub mod verify;

pub use entire::{ComplexPoint, FunctionSpec, LogPolar};
pub use error::{Error, Result};
pub use extmag::{ExtReal, WideReal};
pub use maxmod::MaxModProfile;
