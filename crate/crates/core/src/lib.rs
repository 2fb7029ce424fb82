//! Numerical laboratory for the mean-field Kuramoto-Daido model
//!
//! The model is the McKean-Vlasov equation on the circle
//!
//! ```text
//! ∂_t q = ½ ∂_θ² q − K ∂_θ ( q ∂_θ(W ∗ q) ),     W(θ) = cos θ + m cos 2θ,
//! ```
//!
//! with interaction strength `K > 0` and second-mode weight `m ≥ 0`. The crate
//! covers the static theory and its dynamical cross-checks:
//!
//! - [`special`] — two-argument generalized Bessel integrals, classical
//!   modified Bessel functions, and Turánians, by spectrally convergent
//!   periodic quadrature.
//! - [`stationary`] — the self-consistency equations for the order parameters
//!   `(r₁, r₂)`, the exponential-family density `q_{r₁,r₂}`, and the covariance
//!   matrix of Fourier modes with its closed forms.
//! - [`free_energy`] — the reduced free energy `F_{K,m}` on `[−1,1]²`, its
//!   derivatives, and global minimization.
//! - [`phase_transition`] — the critical curve `K_c(m)`, continuity
//!   classification, the crossover weight `m*`, and uniform-state linear
//!   thresholds.
//! - [`spectral`] — the orthogonal decomposition of `L²_{1/q}`, the C-matrix
//!   gap certificate, the omnibus inequality ledger, and a direct
//!   discretization of the linearized operator `L_q` in `H⁻¹_{1/q}`.
//! - [`dynamics`] — pseudo-spectral PDE integration, linearized evolution,
//!   free-energy dissipation monitoring, and the N-particle SDE.

// `!(x > 0.0)` is deliberate in argument guards: unlike `x <= 0.0` it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fourier;
pub mod free_energy;
pub mod phase_transition;
pub mod special;
pub mod spectral;
pub mod stationary;
pub mod tol;

pub use error::{KdError, Result};
