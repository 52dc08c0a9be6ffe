//! Dimension theory for non-linear Lalley-Gatzouras carpets of class 𝓛.
//!
//! The crate computes the Hausdorff dimension of a carpet
//! `f_ij(x, y) = (ã_ij(y)·x + u_ij(y), b_i(y))`, builds its ergodic measure
//! of full dimension through relativized thermodynamic formalism on the row
//! shift, and certifies uniqueness of that measure by checking that the
//! pressure curve `t ↦ P(Φ_t)` is strictly concave.
//!
//! Modules, bottom-up:
//!
//! - [`carpet`]: the model, hypothesis validation, constructors, perturbation.
//! - [`coding`]: words, tail coordinates, composition products.
//! - [`transfer`]: collocated transfer operators, pressure, Gibbs states.
//! - [`fulldim`]: the `Φ_t` family, the dimension solve and the certificate.
//! - [`variational`]: the level-n finite-dimensional variational problem.
//! - [`geometry`]: region covers, box counting, distortion checks.
//! - [`cli`]: the `carpetdim` command-line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carpet;
pub mod cli;
pub mod coding;
pub mod error;
pub mod fulldim;
pub mod geometry;
pub mod poly;
pub mod roots;
pub mod transfer;
pub mod variational;

pub use carpet::{CarpetSpec, CellSpec, RowSpec};
pub use error::{CarpetError, Result};
