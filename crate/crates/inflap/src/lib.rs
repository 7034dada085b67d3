//! Numerical laboratory for the inhomogeneous infinity-Laplace Dirichlet problem
//! `Δ∞u = f(x, u)` in `Ω`, `u = b` on `∂Ω`.
//!
//! The crate is organised bottom-up:
//!
//! * [`domain`], [`field`], [`rhs`]: grid geometry, nodal fields, boundary data and
//!   right-hand-side expressions.
//! * [`scheme`]: the monotone wide-stencil discretisation of `⟨D²u Du, Du⟩`.
//! * [`solver`]: Gauss–Seidel Dirichlet solves, the upward Perron iteration and the
//!   blow-up probe.
//! * [`quad`] and [`radial`]: singular quadrature, radial profiles, cones, the
//!   power-law sub-solution and the exact unbounded family.
//! * [`criteria`]: closed-form existence and non-existence thresholds.
//! * [`verify`]: post-hoc inequality checks on computed fields.

// `!(x > 0.0)` style guards are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod criteria;
pub mod domain;
pub mod error;
pub mod field;
pub mod fmt;
pub mod quad;
pub mod radial;
pub mod rhs;
pub mod scheme;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};

/// `σ = 3^{4/3}/4`, the constant of the cone `σ|x|^{4/3}` whose infinity Laplacian is 1.
pub const SIGMA: f64 = 1.081_687_177_730_556_1;

/// `σ³ = 81/64`.
pub const SIGMA_CUBED: f64 = 81.0 / 64.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_matches_closed_form() {
        let s = 3f64.powf(4.0 / 3.0) / 4.0;
        assert!((SIGMA - s).abs() < 1e-15);
        assert!((SIGMA.powi(3) - SIGMA_CUBED).abs() < 1e-14);
    }
}
