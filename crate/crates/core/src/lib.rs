//! Exact arithmetic toolkit for the two-variable family
//! `F(L, x) = x1^a + x2^b + L / (x1^c x2^d)` over finite fields.
//!
//! The crate is organised bottom-up: exact integer/rational linear algebra,
//! finite fields, cyclotomic integers, exponential sums and L-polynomials,
//! the combinatorics of the family (basis, weights, Hodge polygon), a
//! certificate-producing cohomology reduction engine, the Picard-Fuchs
//! operator with its formal solutions, and a truncated p-adic Frobenius
//! matrix.

pub mod cli;
pub mod cyclotomic;
pub mod dwork;
pub mod error;
pub mod exact;
pub mod finite_field;
pub mod gkz;
pub mod lfunction;
pub mod newton_hodge;
pub mod padic;
pub mod poly;
pub mod reduction;

pub use error::{Error, Result};
