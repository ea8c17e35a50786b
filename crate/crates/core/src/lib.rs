//! Numerical laboratory for symplectic linear algebra and dynamics.
//!
//! The crate is `no_std` + `alloc`. All transcendental functions go through
//! `libm` so results are bit-identical with and without the `std` feature.
//!
//! Coordinates on a `2d`-dimensional symplectic space are ordered
//! `(q_1, .., q_d, p_1, .., p_d)` and the standard form is
//! `ω(u, v) = uᵀ J v` with `J = [[0, I], [-I, 0]]`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cocycle;
pub mod dynamics;
pub mod entropy;
mod error;
pub mod linalg;
pub mod math;
pub mod snake;
pub mod spectrum;
pub mod symplectic;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
pub use symplectic::{Extended, StandardForm, Subspace, SubspaceKind, SymplecticMatrix};
