//! Quadrature, root finding, ODE integration and a few special functions.

pub mod ode;
pub mod quad;
pub mod roots;
pub mod special;

pub use quad::{integrate, integrate_to_infinity, Integral};
pub use roots::{brent, expand_bracket};
pub use special::{em1px, euler_gamma, ln_gamma};
