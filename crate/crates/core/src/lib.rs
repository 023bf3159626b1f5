//! Numerical laboratory for coupled complex k-Hessian systems on flat
//! Kähler tori.
//!
//! The crate is organized bottom-up:
//!
//! * [`symcone`] — elementary symmetric polynomials σ_k, the Γ_k cones and
//!   the pointwise inequalities between them (generic over the scalar, so
//!   the same code runs in `f64` and in exact rationals);
//! * [`linalg`] — dense kernels for the small Hermitian matrices that live
//!   at every grid point;
//! * [`grid`] / [`field`] — spectral calculus on the discretized torus:
//!   complex Hessians, eigenframe states, wedge-product integrals;
//! * [`energy`] — the k-Hessian Mabuchi functional, its variations and the
//!   entropy-type quantities;
//! * [`geom`] — the Mabuchi-type path geometry: connection, ε-geodesics and
//!   the sectional curvature form;
//! * [`solver`] — Newton/GMRES solvers for the coupled system and the
//!   auxiliary Monge–Ampère equation, plus the a-priori estimate harness;
//! * [`sample`] — seeded random admissible data for sweeps;
//! * [`verify`] — the self-check suites behind the CLI;
//! * [`io`] — serializable containers for fields, runs and reports.
//!
//! Scalar genericity: numeric kernels take any [`scalar::Real`]
//! (`f32`/`f64`); the combinatorial σ layer additionally accepts exact
//! rationals through [`scalar::Ring`]. The aliases below fix the default
//! precision used by the binaries.

pub mod energy;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod scalar;
pub mod symcone;

pub use scalar::{exact, Real, Ring};

/// Default scalar for the binaries and the acceptance suites.
pub type Scalar = f64;

/// Eigenvalue vectors in the default precision.
pub type Spectrum = symcone::EigenSpectrum<Scalar>;

/// Background torus in the default precision.
pub type Background = field::TorusBackground<Scalar>;

/// Hessian state in the default precision.
pub type State = field::HessianState<Scalar>;
