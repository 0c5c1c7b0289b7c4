//! Special functions and quadrature shared by the analytical modules.

mod quadrature;
mod special;

pub use quadrature::{integrate, QuadratureScheme, QuadratureSpec};
pub use special::{normal_pdf, q_function, q_inverse, truncated_ln_partial_moment, LN10_OVER_10};
