//! Numerical workbench for isomonodromic flows on punctured curves.
//!
//! The crate is organized around one stack of machinery:
//!
//! * [`elliptic`] — complex elliptic special functions (odd theta series,
//!   Eisenstein E1/E2, Weierstrass ℘, the kernel φ) with series tolerances;
//! * [`integrate`] — adaptive Runge–Kutta integration along piecewise-linear
//!   paths in a complex parameter plane, Hamiltonian flows, and numeric
//!   monodromy of linear systems `(κ∂ + L)Ψ = 0`;
//! * [`pvi`] — Painlevé VI in rational and elliptic coordinates, the
//!   coordinate map between them, and cross-form residual verification;
//! * [`schlesinger`] — genus-zero Schlesinger flows: Lax matrix,
//!   Hamiltonians, tau increments, Whitham and zero-curvature residuals,
//!   monodromy-invariance checks;
//! * [`torus`] — the genus-one system: Cartan data, the elliptic Lax matrix,
//!   its Hamiltonians, discrete symmetry actions, and the one-pole sl2 flow;
//! * [`calogero`] — autonomous limits: the rank-one equation at frozen
//!   modulus, the elliptic N-body system, and the scaling-limit fit.

pub mod calogero;
pub mod elliptic;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod pvi;
pub mod schlesinger;
pub mod torus;

pub use error::{CoreError, Result};
pub use num_complex::Complex64;
