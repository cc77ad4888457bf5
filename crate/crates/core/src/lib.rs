//! Reduction of a kinetic (Vlasov–Poisson) energy-Casimir variational problem
//! to a problem on spatial densities, with radial solvers for the reduced
//! steady states and a lift back to phase space.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convex;
pub mod error;
pub(crate) mod interp;
pub mod io;
pub mod lift;
pub mod minimize;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod radial;
pub mod roots;
pub mod steady;

pub use error::{Error, Result};
pub use model::Model;
