//! Random walks in random environments: environment laws, exact quenched and
//! annealed analytics, transfer-matrix Lyapunov exponents, continued-fraction
//! Laplace analysis, Monte Carlo engines and the estimators that tie them together.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annealed;
pub mod ctime;
pub mod envgen;
pub mod error;
pub mod quenched;
pub mod randmat;
pub mod rng;
pub mod series;
pub mod simulate;
pub mod stats;

pub use envgen::{Atom, Environment, EnvironmentLaw, JumpAtom, Model};
pub use error::{Error, Result};
