//! Stabilizer-free weak Galerkin finite elements for the quad-curl problem
//!
//! ```text
//! (curl)^4 u + grad p = f,  div u = 0   in Ω
//! u × n = 0,  (curl u) × n = 0,  p = 0  on ∂Ω
//! ```
//!
//! on two- and three-dimensional polytopal meshes, including non-convex
//! cells. The discrete weak curl-curl and weak gradient are computed on each
//! cell in a polynomial space of raised degree, which removes the need for a
//! stabilizer.
//!
//! The crate is organised bottom-up:
//! [`polymesh`] (meshes, families, validation), [`polyquad`] (quadrature on
//! polytopes), [`basis`] (local polynomial bases), [`weakops`] (weak
//! operators and interpolation), [`wgsystem`] (global saddle system and
//! solver), [`analysis`] (manufactured solutions, errors, rates) and
//! [`study`] (configured convergence studies used by the CLI).

pub mod analysis;
pub mod basis;
mod error;
pub mod geometry;
mod par;
pub mod polymesh;
pub mod polyquad;
pub mod study;
pub mod weakops;
pub mod wgsystem;

pub use error::{Error, Result};
