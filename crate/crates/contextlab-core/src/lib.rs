//! Core algorithms for analysing quantum measurement (in)compatibility and
//! contextuality: small dense complex linear algebra, noisy-qubit joint
//! measurability, exact rational polytope vertex enumeration and linear
//! programming, noncontextual-assignment polytopes, Specker / n-cycle
//! inequality machinery, and the GPT data-fitting pipeline.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature enables the standard library. All quantum-side numerics use IEEE
//! doubles; the polytope / linear-programming layers use exact big-rational
//! arithmetic.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod gpt;
pub mod jm;
pub mod ks;
pub mod linalg;
pub mod polytope;
pub mod quantum;
pub mod specker;

pub use error::{Error, Result};
