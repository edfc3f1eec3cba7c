//! Conformal-symplectic invariants of Jacobi curves.
//!
//! A Jacobi curve is a smooth regular curve of Lagrangian subspaces of
//! `R^{2n}`, handled through its chart coordinates `S(t)` (symmetric
//! matrices). The crate computes the Ricci (Schwarzian) curvature, the
//! geometric arc element and absolute curvatures, symplectic Frenet frames and
//! reduced Cartan matrices, reconstructs curves from invariants, and works
//! with flat curves and cycles.

// `!(x <= tol)` is used on purpose so that NaN fails every check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod curvature;
pub mod cycles;
pub mod error;
pub mod frames;
pub mod geom;
pub mod interp;
pub mod linalg;
pub mod matcurve;
pub mod numfmt;
pub mod pipeline;
pub mod reconstruct;
pub mod symspace;
pub mod tol;

pub use error::{JacobiError, Result};
pub use linalg::Mat;
pub use matcurve::{sample_curve, CurveJet, SampleGrid, SymmetricMatrixCurve};
pub use tol::Tolerances;
