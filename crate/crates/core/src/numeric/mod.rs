//! Exact real arithmetic: rationals, quadratic surds, tagged approximations.

pub mod highprec;
mod parse;
mod scalar;

pub use parse::{parse_scalar, parse_scalar_with_epsilon};
pub use scalar::{default_epsilon, render_decimal, Cmp, ExactKey, Scalar};
