//! Sparse complex polynomials, rational map germs and truncated Taylor jets.

mod diff;
mod jet;
mod poly;
mod rational;

pub use diff::{real_jacobian, DEFAULT_STEP};
pub use jet::{jet_derivative, Jet, MapJet};
pub use poly::{poly_eval, poly_mul, Exponent, Poly, MAX_VARS};
pub use rational::{expand, rational_compose, RationalGerm, RationalMap};
