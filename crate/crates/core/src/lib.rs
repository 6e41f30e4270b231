//! Numerical toolkit for minimal-surface geometry in the cusp ends of
//! finite-volume hyperbolic 3-manifolds.
//!
//! The crate provides:
//!
//! - [`cusp`]: deformed conformal metrics `(1/psi(z)^2) dX^2` on a cusp
//!   chart, their curvatures, horotorus quantities and rescaling maps;
//! - [`mobius`]: the SL2(C) algebra of three-punctured-sphere groups,
//!   parabolic classification, invariant boundary circles and orbit sampling;
//! - [`mesh`]: lattice-periodic triangulated surfaces, conformal area and its
//!   exact gradient, slab profiles, incidence angles and discrete
//!   Gauss-Bonnet;
//! - [`solve`]: a backtracking descent solver plus the maximum-principle and
//!   transversality experiments built on it;
//! - [`surgery`]: the Dehn-filling metric on a truncated cusp, its solid-torus
//!   pullback, the surgery mean-curvature formula and profile rescalings;
//! - [`tet`]: ideal tetrahedra, Lobachevsky volumes, the one-tetrahedron
//!   non-orientable face pairing, the 24-piece barycentric tessellation and
//!   Euler-characteristic bookkeeping.

pub mod cusp;
pub mod error;
pub mod geom;
pub mod mesh;
pub mod mobius;
pub mod quad;
pub mod solve;
pub mod surgery;
pub mod tet;

pub use error::{Error, Result};
