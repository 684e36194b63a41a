//! Numerical spherical analysis on the free two-step nilpotent Lie group `F(n)`
//! with the orthogonal group acting by automorphisms.
//!
//! The crate covers the group law in exponential coordinates, Heisenberg
//! spherical functions, the multi-index calculus used to describe the
//! spectrum, spectrum functions with their difference operators, and the
//! spherical transform engine (forward, inverse, Plancherel, integrability).

pub mod combinatorics;
pub mod error;
pub mod freegroup;
pub mod haar;
pub mod heisenberg;
pub mod poly;
pub mod quad;
pub mod spectrum;
pub mod special;
pub mod transform;

pub use error::{Error, Result};
pub use num_complex::Complex64;
