//! Numerical toolkit for the torsion-type problem `Δv + nKv = −1` on domains in
//! the three simply-connected space forms, and for the rigidity of its
//! overdetermined version `|∇v| = c` on the boundary.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod radial;
pub mod rigidity;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Curvature, SpaceForm};
