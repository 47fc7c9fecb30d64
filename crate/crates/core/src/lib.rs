//! Branch-and-bound for integer quadratic programs with dual bounds from a
//! barrier coordinate ascent on the SDP relaxation.
//!
//! The problem is
//!
//! ```text
//! minimize    x^T Q x + l^T x + c
//! subject to  a_j^T x <= b_j            j = 1..p
//!             x_i in {l_i, ..., u_i}    i = 1..n
//! ```
//!
//! with `Q` symmetric but not necessarily positive semidefinite. Each
//! variable domain is lifted to the convex hull of `{(v, v^2)}`, whose facets
//! become sparse constraint matrices of rank one or two. The dual of the
//! resulting SDP is maximized one coordinate (or one coordinate plus the
//! homogenizing coordinate) at a time, with exact closed-form line searches
//! and `O(n^2)` Woodbury updates of the inverse slack matrix.
//!
//! Module map:
//!
//! * [`linalg`] dense symmetric kernels (eigen, Cholesky, Woodbury)
//! * [`model`] instances, facet descriptors and the relaxation
//! * [`dual`] the coordinate ascent solver (CD and CD2D)
//! * [`primal`] primal matrix recovery from a dual solution
//! * [`bnb`] best-first branch-and-bound driver
//! * [`instances`] random instance families
//! * [`oracle`] brute-force and dense reference evaluators for testing
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod bnb;
pub mod dual;
pub mod error;
pub mod instances;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod primal;

pub use bnb::{BnbConfig, BnbResult, BnbStatus, BranchRule, Clock, NoClock};
pub use dual::{solve_dual, DualResult, DualStatus, SolveMode, SolverConfig};
pub use error::{Error, Result};
pub use linalg::{SpectralDecomposition, SymMatrix};
pub use model::{build_relaxation, BetaPolicy, IntDomain, IqpInstance, LinearConstraint, SdpRelaxation};
pub use primal::{recover_primal, PrimalEstimate};
