//! Exact symbolic dynamics of linear mod 1 interval maps f(x) = bx + a (mod 1)
//! and sparse orbit representations of the associated operator algebra.
//!
//! The crate is organised around five layers:
//! - [`numeric`]: exact scalars (rationals, quadratic surds, tagged approximations);
//! - [`dynamics`]: the map, its monotonicity partition, branches, itineraries, kneading data;
//! - [`symbolic`]: words, cylinders, admissible-word enumeration, Markov analysis;
//! - [`orbit`]: truncated generalized orbits and orbit equivalence;
//! - [`operators`]: sparse partial isometries and the relation verification suite.

pub mod dynamics;
pub mod error;
pub mod numeric;
pub mod operators;
pub mod orbit;
pub mod symbolic;

pub use error::{Error, Result};
pub use numeric::{parse_scalar, Cmp, Scalar};
